"""Exception hierarchy.

Every error raised by this package derives from :class:`EstimandError`, split
into configuration/contract violations (``code`` starting with ``config-``)
and numeric failures (``code`` starting with ``numeric-``).  The CLI maps the
former to exit status 1 and the latter to exit status 2.
"""


class EstimandError(Exception):
    """Base class for all package errors."""

    code = "error"


class ConfigError(EstimandError):
    """A config file or argument violates its contract."""

    code = "config-invalid"


class ArityError(EstimandError):
    """Covariate input dimension does not match the model's arity."""

    code = "config-arity"


class ScaleMismatchError(EstimandError):
    """Two effect estimates on different scales were combined."""

    code = "config-scale-mismatch"


class NumericDomainError(EstimandError):
    """A quantity left the domain of a link or integrand."""

    code = "numeric-domain"


class DegenerateTableError(EstimandError):
    """A contingency table cell is empty and no continuity correction is enabled."""

    code = "numeric-degenerate-table"


class DegenerateArmError(EstimandError):
    """A trial arm is empty or carries (near-)zero total weight."""

    code = "numeric-degenerate-arm"


class SingularDesignError(EstimandError):
    """The regression design matrix is rank deficient."""

    code = "numeric-singular-design"


class SeparationError(EstimandError):
    """Outcome separation: fitted coefficients diverged."""

    code = "numeric-separation"


class InfeasibleTargetError(EstimandError):
    """Moment-matching target lies outside the achievable set."""

    code = "numeric-infeasible-target"
