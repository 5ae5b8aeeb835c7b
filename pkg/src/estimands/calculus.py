"""Treatment-effect summary measures on the linear predictor scale.

Four estimands are computed for an outcome model and a covariate law:

* ``ctex(x)`` — conditional effect at a covariate value: the contrast of
  link-transformed conditional means, which reduces exactly to the model's
  treatment-contrast polynomial;
* ``ctem`` — the conditional effect evaluated at the covariate mean;
* ``pacte`` — the covariate-law average of ``ctex``;
* ``mte`` — the marginal effect: conditional means are averaged on the
  natural outcome scale first, and the averages are contrasted on the link
  scale after.

For the identity link the order of averaging and contrasting is irrelevant,
so ``mte == pacte``.  For log and logit links the two orders genuinely
differ, which is what the equality matrix and the dependence probe make
machine-checkable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .distributions import (
    DEFAULT_SETTINGS,
    CovariateDistribution,
    QuadratureSettings,
    expectation,
    is_exact,
)
from .errors import ConfigError, NumericDomainError
from .links import Link, Scale
from .models import (
    HomogeneousCoefficients,
    LinearHeterogeneousCoefficients,
    OutcomeModel,
    QuadraticCoefficients,
)

ESTIMAND_ORDER = ("MTE", "CTEM", "PACTE")


def ctex(model: OutcomeModel, x) -> float:
    """Conditional treatment effect at covariate value ``x``.

    Evaluated from the coefficients directly, so it is exact and immune to
    the saturation of link inverses at extreme linear predictors.
    """
    return model.treatment_contrast(x)


@dataclass(frozen=True)
class CtexCurve:
    """The map x -> conditional treatment effect, with a shape description."""

    evaluator: Callable
    description: str


def ctex_curve(model: OutcomeModel) -> CtexCurve:
    shapes = {
        HomogeneousCoefficients: "constant in x (treatment effect homogeneity)",
        LinearHeterogeneousCoefficients: "linear in x",
        QuadraticCoefficients: "quadratic in x",
    }
    return CtexCurve(
        evaluator=lambda x: ctex(model, x),
        description=shapes[type(model.coefficients)],
    )


def ctem(model: OutcomeModel, dist: CovariateDistribution) -> float:
    """Conditional treatment effect at the covariate means."""
    return float(ctex(model, dist.mean()))


def pacte(
    model: OutcomeModel,
    dist: CovariateDistribution,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """Average of the conditional effect over the covariate law."""
    return expectation(dist, lambda x: ctex(model, x), settings)


def mte(
    model: OutcomeModel,
    dist: CovariateDistribution,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """Marginal treatment effect: average on the natural scale, contrast on the link scale."""
    means = []
    for t in (1, 0):
        m = expectation(dist, lambda x, t=t: model.conditional_mean(t, x), settings)
        if not model.link.in_domain(m):
            raise NumericDomainError(
                f"marginal mean {m!r} for arm t={t} is outside the domain of the "
                f"{model.link.value} link"
            )
        means.append(m)
    return float(model.link.apply(means[0]) - model.link.apply(means[1]))


def closed_form_mte(model: OutcomeModel, dist: CovariateDistribution) -> Optional[float]:
    """The marginal effect in closed form, where one exists.

    Identity link: available for all three coefficient sets via the law's
    mean and variance.  Log link: available only under homogeneity, where the
    covariate factor cancels between the arms.  Logit link: never.
    """
    coef = model.coefficients
    if model.link is Link.IDENTITY:
        if isinstance(coef, HomogeneousCoefficients):
            return coef.treatment
        if isinstance(coef, LinearHeterogeneousCoefficients):
            return coef.treatment + coef.interaction * float(dist.mean())
        m = float(dist.mean())
        v = float(dist.variance())
        return coef.treatment + coef.linear_interaction * m + coef.quadratic_interaction * (m * m + v)
    if model.link is Link.LOG and isinstance(coef, HomogeneousCoefficients):
        return coef.treatment
    return None


@dataclass(frozen=True)
class EstimandReport:
    """The three one-number summaries plus which of them are closed-form."""

    mte: float
    ctem: float
    pacte: float
    scale: Scale
    mte_closed_form: bool
    ctem_closed_form: bool = True
    pacte_closed_form: bool = True

    def __post_init__(self):
        for name in ("mte", "ctem", "pacte"):
            if not np.isfinite(getattr(self, name)):
                raise NumericDomainError(f"{name} is not finite")

    @staticmethod
    def csv_header() -> str:
        return "scale,mte,ctem,pacte,mte_closed_form,ctem_closed_form,pacte_closed_form"

    def csv_row(self) -> str:
        flags = [self.mte_closed_form, self.ctem_closed_form, self.pacte_closed_form]
        return ",".join(
            [self.scale.value, repr(self.mte), repr(self.ctem), repr(self.pacte)]
            + [str(f).lower() for f in flags]
        )


def estimand_report(
    model: OutcomeModel,
    dist: CovariateDistribution,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> EstimandReport:
    return EstimandReport(
        mte=mte(model, dist, settings),
        ctem=ctem(model, dist),
        pacte=pacte(model, dist, settings),
        scale=model.scale,
        mte_closed_form=closed_form_mte(model, dist) is not None,
    )


@dataclass(frozen=True)
class EqualityMatrix:
    """Pairwise equality verdicts over (MTE, CTEM, PACTE).

    Entries are closed under transitivity (values are clustered, not merely
    thresholded pairwise), so the relation is a genuine equivalence: the
    diagonal is true and the matrix is symmetric and transitive by
    construction.
    """

    entries: tuple
    tolerance: float
    labels: tuple = ESTIMAND_ORDER

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=bool)
        if e.shape != (3, 3):
            raise ConfigError("equality matrix must be 3x3")
        if not (e == e.T).all() or not e.diagonal().all():
            raise ConfigError("equality matrix must be symmetric with a true diagonal")
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    if e[i, j] and e[j, k] and not e[i, k]:
                        raise ConfigError("equality matrix must be transitive")
        object.__setattr__(self, "entries", tuple(tuple(bool(v) for v in row) for row in e))

    def __getitem__(self, pair) -> bool:
        i = self.labels.index(pair[0]) if isinstance(pair[0], str) else pair[0]
        j = self.labels.index(pair[1]) if isinstance(pair[1], str) else pair[1]
        return self.entries[i][j]

    def render(self) -> str:
        """Text grid in the style of the equality-matrix figures: '#' equal, '.' not."""
        width = max(len(l) for l in self.labels)
        header = " " * (width + 1) + " ".join(f"{l:>{width}}" for l in self.labels)
        lines = [header]
        for i, row_label in enumerate(self.labels):
            cells = " ".join(
                f"{'#' if self.entries[i][j] else '.':>{width}}" for j in range(3)
            )
            lines.append(f"{row_label:>{width}} {cells}")
        return "\n".join(lines) + "\n"


def quadrature_error_estimate(
    model: OutcomeModel,
    dist: CovariateDistribution,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """Node-doubling error estimate for the marginal effect.

    Zero for exact laws (atom sums) and for the identity link, where the
    integrand is polynomial and Gauss-Hermite is exact.
    """
    if model.link is Link.IDENTITY or is_exact(dist, settings):
        return 0.0
    return abs(mte(model, dist, settings) - mte(model, dist, settings.with_nodes(2 * settings.nodes)))


def equality_matrix(
    model: OutcomeModel,
    dist: CovariateDistribution,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    tol: Optional[float] = None,
) -> EqualityMatrix:
    """Which of MTE, CTEM, PACTE coincide for this model and law.

    With ``tol=None`` the tolerance is 1e-8 when all three values are exact
    or closed-form-verifiable, and ``max(1e-8, 3 * node-doubling estimate)``
    when the marginal effect genuinely relies on quadrature.
    """
    if tol is None:
        tol = max(1e-8, 3.0 * quadrature_error_estimate(model, dist, settings))
    elif not tol > 0:
        raise ConfigError("tolerance must be positive")
    values = [mte(model, dist, settings), ctem(model, dist), pacte(model, dist, settings)]

    # Cluster by transitive chaining so the relation is an equivalence.
    group = list(range(3))
    for i in range(3):
        for j in range(i + 1, 3):
            if abs(values[i] - values[j]) <= tol:
                gi, gj = group[i], group[j]
                group = [gi if g == gj else g for g in group]
    entries = tuple(
        tuple(group[i] == group[j] for j in range(3)) for i in range(3)
    )
    return EqualityMatrix(entries=entries, tolerance=float(tol))


class Verdict(enum.Enum):
    INVARIANT = "invariant"
    DEPENDENT = "dependent"


@dataclass(frozen=True)
class DependenceProbe:
    """Evidence from one covariate-law perturbation (not a proof of invariance)."""

    mte_base: float
    mte_perturbed: float
    mte_shift: float
    verdict: Verdict
    shared_moments: str = ""


def dependence_probe(
    model: OutcomeModel,
    base_dist: CovariateDistribution,
    perturbed_dist: CovariateDistribution,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    tol: float = 1e-8,
    shared_moments: str = "",
) -> DependenceProbe:
    """Recompute the marginal effect under two laws and compare.

    ``shared_moments`` documents what the caller kept fixed between the laws
    (for instance "mean" or "mean+variance"); it is carried into the result
    for reporting only.
    """
    base = mte(model, base_dist, settings)
    perturbed = mte(model, perturbed_dist, settings)
    shift = perturbed - base
    verdict = Verdict.INVARIANT if abs(shift) <= tol else Verdict.DEPENDENT
    return DependenceProbe(base, perturbed, shift, verdict, shared_moments)
