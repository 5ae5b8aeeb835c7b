"""Link functions and the effect scales they induce.

The identity, log and logit links map outcome means onto an additive linear
predictor scale; contrasting transformed means on that scale yields a mean
difference, a log risk (rate) ratio or a log odds ratio respectively.

Numerical note: ``Logit.apply(Logit.inverse(eta))`` is limited by the float64
representation of probabilities near one.  The representable precision of
``1 - p`` caps the achievable round trip error at roughly
``eps * cosh(eta / 2) ** 2``, i.e. full precision holds for ``|eta|`` up to
about 14 and degrades smoothly beyond.  The identity and log links round-trip
at machine precision on the whole working range.
"""

from __future__ import annotations

import enum

import numpy as np
from scipy.special import expit, logit as _logit

from .errors import NumericDomainError


class Scale(enum.Enum):
    """Additive effect scale imposed by a link function."""

    MEAN_DIFFERENCE = "mean_difference"
    LOG_RISK_RATIO = "log_risk_ratio"
    LOG_ODDS_RATIO = "log_odds_ratio"


class Link(enum.Enum):
    IDENTITY = "identity"
    LOG = "log"
    LOGIT = "logit"

    @property
    def scale(self) -> Scale:
        return _SCALES[self]

    def apply(self, mean):
        """Map an outcome mean onto the linear predictor scale."""
        mean = np.asarray(mean, dtype=float)
        if not self.in_domain(mean).all():
            raise NumericDomainError(
                f"mean outside the domain of the {self.value} link: {mean!r}"
            )
        if self is Link.IDENTITY:
            out = mean
        elif self is Link.LOG:
            out = np.log(mean)
        else:
            out = _logit(mean)
        return out if out.ndim else float(out)

    def inverse(self, eta):
        """Map a linear predictor back to an outcome mean."""
        eta = np.asarray(eta, dtype=float)
        if self is Link.IDENTITY:
            out = eta
        elif self is Link.LOG:
            out = np.exp(eta)
        else:
            out = expit(eta)
        return out if out.ndim else float(out)

    def in_domain(self, mean) -> np.ndarray:
        """Elementwise check that ``mean`` is a valid argument of ``apply``."""
        mean = np.asarray(mean, dtype=float)
        if self is Link.IDENTITY:
            return np.isfinite(mean)
        if self is Link.LOG:
            return np.isfinite(mean) & (mean > 0.0)
        return np.isfinite(mean) & (mean > 0.0) & (mean < 1.0)


_SCALES = {
    Link.IDENTITY: Scale.MEAN_DIFFERENCE,
    Link.LOG: Scale.LOG_RISK_RATIO,
    Link.LOGIT: Scale.LOG_ODDS_RATIO,
}
