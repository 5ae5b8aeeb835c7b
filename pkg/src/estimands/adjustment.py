"""Population adjustment for anchored indirect treatment comparisons.

An index trial (active treatment A versus control C, subject-level data
available) is projected into the population of a competitor trial (B versus
C, published aggregates only), and the A-versus-B effect is formed on the
additive scale as the difference of the two trial-level contrasts.

Three adjustment routes are implemented, each of which targets a different
summary measure:

* ``maic_weights`` / ``maic_estimate`` — weights index subjects so their
  covariate moments match the competitor population, then contrasts weighted
  arm means; a marginal (MTE) estimate;
* ``stc_plugin`` — outcome regression with covariates centred at the target
  means, whose treatment coefficient is the conditional effect at those
  means (CTEM);
* ``stc_gcomp`` — outcome regression standardized over the full target
  covariate law: both potential-outcome means are averaged on the natural
  scale and contrasted on the link scale; a marginal (MTE) estimate.

Every estimate carries its estimand label and scale so that
``compatibility_check`` can refuse to pool mismatched summary measures, the
failure mode that biases naive indirect comparisons.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import (
    DEFAULT_SETTINGS,
    CovariateDistribution,
    QuadratureSettings,
    expectation,
)
from .errors import (
    ConfigError,
    DegenerateArmError,
    InfeasibleTargetError,
    NumericDomainError,
    ScaleMismatchError,
)
from .glm import GlmFormula, fit_glm
from .links import Link, Scale
from .rng import TAG_BOOTSTRAP, substream
from .trial import TrialIPD, aggregate

_SCALE_LINK = {
    Scale.MEAN_DIFFERENCE: Link.IDENTITY,
    Scale.LOG_RISK_RATIO: Link.LOG,
    Scale.LOG_ODDS_RATIO: Link.LOGIT,
}


class LabelKind(enum.Enum):
    MTE = "MTE"
    CTEM = "CTEM"
    PACTE = "PACTE"
    CONDITIONAL_ON_SET = "conditional_on_set"


@dataclass(frozen=True)
class EstimandLabel:
    """What an estimate is an estimate of; conditional labels carry their set."""

    kind: LabelKind
    conditioning_set: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "conditioning_set", tuple(self.conditioning_set))
        if (self.kind is LabelKind.CONDITIONAL_ON_SET) != bool(self.conditioning_set):
            raise ConfigError("conditioning_set is required exactly for conditional-on-set labels")

    def __str__(self) -> str:
        if self.kind is LabelKind.CONDITIONAL_ON_SET:
            return "conditional({})".format(",".join(self.conditioning_set))
        return self.kind.value


MTE_LABEL = EstimandLabel(LabelKind.MTE)
CTEM_LABEL = EstimandLabel(LabelKind.CTEM)
PACTE_LABEL = EstimandLabel(LabelKind.PACTE)


def conditional_label(*names: str) -> EstimandLabel:
    return EstimandLabel(LabelKind.CONDITIONAL_ON_SET, tuple(names))


class Method(enum.Enum):
    MAIC = "maic"
    STC_PLUGIN = "stc_plugin"
    STC_GCOMP = "stc_gcomp"
    CRUDE = "crude"
    REGRESSION = "multivariable_regression"


# Who estimates what.  The last three methods are represented for
# compatibility bookkeeping only and have no estimator here.
METHOD_SUMMARY_MEASURES = {
    "matching_adjusted_indirect_comparison": (LabelKind.MTE,),
    "simulated_treatment_comparison_plugin": (LabelKind.CTEM,),
    "simulated_treatment_comparison_gcomputation": (LabelKind.MTE,),
    "multilevel_network_meta_regression": (LabelKind.PACTE, LabelKind.MTE),
    "network_meta_interpolation": (LabelKind.CTEM,),
    "cross_network_meta_regression": (LabelKind.CTEM,),
}

_METHOD_LABEL_KIND = {
    Method.MAIC: LabelKind.MTE,
    Method.STC_PLUGIN: LabelKind.CTEM,
    Method.STC_GCOMP: LabelKind.MTE,
    Method.CRUDE: LabelKind.MTE,
    Method.REGRESSION: LabelKind.CONDITIONAL_ON_SET,
}


@dataclass(frozen=True)
class AdjustmentResult:
    estimate: float
    se: float
    scale: Scale
    estimand_label: EstimandLabel
    method: Method
    population: str = "target"

    def __post_init__(self):
        if self.estimand_label.kind is not _METHOD_LABEL_KIND[self.method]:
            raise ConfigError(
                f"method {self.method.value} estimates "
                f"{_METHOD_LABEL_KIND[self.method].value}, not {self.estimand_label}"
            )
        if not self.se >= 0 or not np.isfinite(self.se):
            raise NumericDomainError("standard error must be finite and non-negative")


@dataclass(frozen=True)
class MaicWeights:
    """Moment-matching weights: coefficients, normalized weights, effective sample size."""

    alpha: np.ndarray
    weights: np.ndarray
    ess: float

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def maic_weights(
    index_covariates,
    target_moments,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> MaicWeights:
    """Weights proportional to ``exp(alpha' (x_i - target))`` matching target moments.

    ``alpha`` solves the convex log-sum-exp moment-matching problem by damped
    Newton iteration; at convergence the weighted covariate means equal the
    target moments to within ``tol``.  Targets outside the convex hull of the
    observed covariates have no solution and raise, naming the worst-matched
    moment.
    """
    x = np.atleast_2d(np.asarray(index_covariates, dtype=float).T).T
    theta = np.atleast_1d(np.asarray(target_moments, dtype=float))
    n, k = x.shape
    if theta.shape != (k,):
        raise ConfigError(f"target moments have length {theta.shape[0]}, expected {k}")

    lo, hi = x.min(axis=0), x.max(axis=0)
    constant = lo == hi
    outside = ((theta <= lo) | (theta >= hi)) & ~(constant & (theta == lo))
    if outside.any():
        j = int(np.flatnonzero(outside)[0])
        raise InfeasibleTargetError(
            f"target moment {j + 1} ({theta[j]!r}) lies outside the observed "
            f"range [{lo[j]!r}, {hi[j]!r}]"
        )

    z = x - theta
    alpha = np.zeros(k)

    def objective_and_weights(a):
        s = z @ a
        m = s.max()
        e = np.exp(s - m)
        total = e.sum()
        return float(np.log(total) + m), e / total

    obj, p = objective_and_weights(alpha)
    for _ in range(max_iter):
        grad = z.T @ p
        if np.linalg.norm(grad) < tol:
            break
        centered = z - p @ z
        hess = (centered * p[:, None]).T @ centered
        try:
            step = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = None
        if step is None or not np.isfinite(step).all():
            j = int(np.argmax(np.abs(grad)))
            raise InfeasibleTargetError(
                f"moment matching stalled; moment {j + 1} unmatched by {grad[j]!r}"
            )
        scale = 1.0
        for _ in range(60):
            new_obj, new_p = objective_and_weights(alpha + scale * step)
            if new_obj <= obj + 1e-12 * (1.0 + abs(obj)):
                break
            scale *= 0.5
        alpha, obj, p = alpha + scale * step, new_obj, new_p
    else:
        grad = z.T @ p
        j = int(np.argmax(np.abs(grad)))
        raise InfeasibleTargetError(
            f"no weights match the target moments within {max_iter} iterations; "
            f"moment {j + 1} unmatched by {grad[j]!r} (target likely on or "
            "outside the convex hull)"
        )

    ess = float(1.0 / np.sum(p**2))
    return MaicWeights(alpha=alpha, weights=p, ess=ess)


def _weighted_arm_mean(y, w):
    total = w.sum()
    if total < 1e-6:
        raise DegenerateArmError(f"arm total weight {total!r} is too small to estimate a mean")
    mean = float(np.dot(w, y) / total)
    variance = float(np.dot(w**2, np.square(y - mean)) / total**2)
    return mean, variance


def _contrast_on_scale(mu1, var1, mu0, var0, scale: Scale):
    """Delta-method contrast of two arm means on the requested scale."""
    link = _SCALE_LINK[scale]
    for mu, arm in ((mu1, "treated"), (mu0, "control")):
        if not link.in_domain(mu):
            raise NumericDomainError(
                f"{arm} arm mean {mu!r} is outside the domain of the {scale.value} scale"
            )
    if scale is Scale.MEAN_DIFFERENCE:
        d1 = d0 = 1.0
    elif scale is Scale.LOG_RISK_RATIO:
        d1, d0 = 1.0 / mu1, 1.0 / mu0
    else:
        d1, d0 = 1.0 / (mu1 * (1.0 - mu1)), 1.0 / (mu0 * (1.0 - mu0))
    value = float(link.apply(mu1) - link.apply(mu0))
    se = math.sqrt(d1 * d1 * var1 + d0 * d0 * var0)
    return value, se


def maic_estimate(
    ipd: TrialIPD,
    weights: MaicWeights,
    scale: Scale,
    population: str = "target",
) -> AdjustmentResult:
    """Weighted per-arm means contrasted on the requested scale (estimates the MTE).

    The standard error is a robust (sandwich) weighted variance that treats
    the weights as fixed.
    """
    if weights.n != ipd.n:
        raise ConfigError(f"{weights.n} weights for {ipd.n} subjects")
    treated = ipd.t == 1.0
    mu1, var1 = _weighted_arm_mean(ipd.y[treated], weights.weights[treated])
    mu0, var0 = _weighted_arm_mean(ipd.y[~treated], weights.weights[~treated])
    value, se = _contrast_on_scale(mu1, var1, mu0, var0, scale)
    return AdjustmentResult(value, se, scale, MTE_LABEL, Method.MAIC, population)


def crude_estimate(ipd: TrialIPD, scale: Optional[Scale] = None, population: str = "index") -> AdjustmentResult:
    """Unadjusted marginal estimate from the trial's own aggregate data."""
    summary = aggregate(ipd, scale)
    return AdjustmentResult(
        summary.marginal.value,
        summary.marginal.se,
        summary.marginal.scale,
        MTE_LABEL,
        Method.CRUDE,
        population,
    )


def stc_plugin(
    ipd: TrialIPD,
    target_means,
    link: Link,
    formula: GlmFormula = GlmFormula.INTERACTION,
    population: str = "target",
) -> AdjustmentResult:
    """Outcome regression evaluated at the target covariate means (estimates the CTEM).

    Covariates are centred at the target means before fitting, so the
    treatment coefficient *is* the conditional effect at those means and its
    standard error comes straight from the information matrix.
    """
    if formula not in (GlmFormula.INTERACTION, GlmFormula.QUADRATIC_INTERACTION):
        raise ConfigError("plug-in standardization needs interaction terms in the regression")
    target = np.atleast_1d(np.asarray(target_means, dtype=float))
    if target.shape[0] != ipd.x.shape[1]:
        raise ConfigError(
            f"{target.shape[0]} target means for {ipd.x.shape[1]} covariates"
        )
    fit = fit_glm(ipd.x - target, ipd.t, ipd.y, formula, link)
    return AdjustmentResult(
        fit.coefficient("t"),
        fit.standard_error("t"),
        link.scale,
        CTEM_LABEL,
        Method.STC_PLUGIN,
        population,
    )


def _standardized_contrast(fit, target_dist, link, settings):
    means = []
    for t in (1, 0):
        m = expectation(target_dist, lambda x, t=t: fit.predict_mean(x, t), settings)
        if not link.in_domain(m):
            raise NumericDomainError(
                f"standardized mean {m!r} for arm t={t} is outside the "
                f"domain of the {link.value} link"
            )
        means.append(m)
    return float(link.apply(means[0]) - link.apply(means[1]))


def stc_gcomp(
    ipd: TrialIPD,
    target_dist: CovariateDistribution,
    link: Link,
    formula: GlmFormula = GlmFormula.INTERACTION,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    n_boot: int = 1000,
    seed: int = 0,
    n_sim: Optional[int] = None,
    population: str = "target",
) -> AdjustmentResult:
    """Regression standardized over the target covariate law (estimates the MTE).

    Potential-outcome means are integrated on the natural outcome scale over
    ``target_dist`` (quadrature or exact sums where the law allows, seeded
    Monte Carlo with ``n_sim`` draws otherwise) and contrasted on the link
    scale.  The standard error is a seeded nonparametric bootstrap over the
    index-trial subjects with warm-started refits.
    """
    if n_sim is not None:
        settings = QuadratureSettings(settings.nodes, settings.max_tensor_dim, n_sim, settings.seed)
    base_fit = fit_glm(ipd.x, ipd.t, ipd.y, formula, link)
    value = _standardized_contrast(base_fit, target_dist, link, settings)

    draws = []
    for b in range(n_boot):
        # Multinomial resampling weights via index counts (with-replacement draw).
        idx = substream(seed, TAG_BOOTSTRAP, b).integers(0, ipd.n, ipd.n)
        w = np.bincount(idx, minlength=ipd.n).astype(float)
        try:
            refit = fit_glm(
                ipd.x, ipd.t, ipd.y, formula, link,
                sample_weight=w, start=base_fit.coefficients,
            )
            draws.append(_standardized_contrast(refit, target_dist, link, settings))
        except (NumericDomainError, DegenerateArmError) as exc:
            last_error = exc
    if len(draws) < max(2, n_boot // 2):
        raise NumericDomainError(
            f"bootstrap standard error failed: only {len(draws)}/{n_boot} "
            f"replicates succeeded (last error: {last_error})"
        )
    se = float(np.std(draws, ddof=1))
    return AdjustmentResult(value, se, link.scale, MTE_LABEL, Method.STC_GCOMP, population)


@dataclass(frozen=True)
class ITCResult:
    """Anchored A-versus-B contrast through the common comparator."""

    delta_ab: float
    se: float
    scale: Scale
    population_tag: str
    components: tuple

    @property
    def ac(self) -> AdjustmentResult:
        return self.components[0]

    @property
    def bc(self) -> AdjustmentResult:
        return self.components[1]


def anchored_itc(ac: AdjustmentResult, bc: AdjustmentResult) -> ITCResult:
    """A-versus-B = (A-versus-C) − (B-versus-C); variances add."""
    if ac.scale is not bc.scale:
        raise ScaleMismatchError(
            f"cannot anchor {ac.scale.value} against {bc.scale.value}"
        )
    tag = ac.population if ac.population == bc.population else f"{ac.population}/{bc.population}"
    return ITCResult(
        delta_ab=ac.estimate - bc.estimate,
        se=math.sqrt(ac.se**2 + bc.se**2),
        scale=ac.scale,
        population_tag=tag,
        components=(ac, bc),
    )


@dataclass(frozen=True)
class CompatibilityReport:
    compatible: bool
    diagnosis: str


def compatibility_check(ac: AdjustmentResult, bc: AdjustmentResult) -> CompatibilityReport:
    """Do two estimates target the same summary measure on the same scale?

    Labels must agree, conditional labels must condition on identical
    covariate sets, and scales must match.  The diagnosis names the first
    mismatch; the check is symmetric in its arguments.
    """
    a, b = ac.estimand_label, bc.estimand_label
    kinds = {a.kind, b.kind}
    if a.kind is not b.kind:
        if LabelKind.MTE in kinds:
            return CompatibilityReport(False, "marginal vs conditional summary measures")
        names = " vs ".join(sorted(k.value for k in kinds))
        return CompatibilityReport(False, f"different conditional estimands ({names})")
    if a.kind is LabelKind.CONDITIONAL_ON_SET and set(a.conditioning_set) != set(b.conditioning_set):
        first, second = sorted([a.conditioning_set, b.conditioning_set])
        return CompatibilityReport(
            False,
            "conditioning sets differ ({{{}}} vs {{{}}})".format(
                ",".join(first), ",".join(second)
            ),
        )
    if ac.scale is not bc.scale:
        first, second = sorted([ac.scale.value, bc.scale.value])
        return CompatibilityReport(False, f"scales differ ({first} vs {second})")
    return CompatibilityReport(True, "compatible summary measures")


def results_csv(results) -> str:
    """CSV rows for adjustment and anchored-comparison results."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind", "method", "estimand_label", "scale", "estimate", "se", "population"])
    for r in results:
        if isinstance(r, ITCResult):
            writer.writerow(
                [
                    "anchored_itc",
                    f"{r.ac.method.value}-minus-{r.bc.method.value}",
                    f"{r.ac.estimand_label}-minus-{r.bc.estimand_label}",
                    r.scale.value,
                    repr(r.delta_ab),
                    repr(r.se),
                    r.population_tag,
                ]
            )
        else:
            writer.writerow(
                [
                    "adjustment",
                    r.method.value,
                    str(r.estimand_label),
                    r.scale.value,
                    repr(r.estimate),
                    repr(r.se),
                    r.population,
                ]
            )
    return buf.getvalue()
