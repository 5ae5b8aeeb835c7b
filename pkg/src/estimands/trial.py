"""Trial simulation and publication-style aggregation.

``simulate_trial`` draws subject-level data from an outcome model under
simple Bernoulli randomization.  Covariates, treatment and outcomes come
from separate counter-based streams keyed by the trial seed, so row ``i``
is a pure function of ``(seed, i)`` and results do not depend on execution
order or on how many rows are drawn.

``aggregate`` condenses subject-level rows into what a publication would
report: covariate moments, per-arm outcome summaries (a 2x2 event table,
arm means and SDs, or event counts and exposures, by outcome family), a
crude marginal effect estimate, and optionally the treatment coefficient of
a covariate-adjusted regression together with its conditioning set.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import CovariateDistribution, IndependentProduct, dim_of
from .errors import ConfigError, DegenerateArmError, DegenerateTableError
from .glm import GlmFormula, fit_glm
from .links import Link, Scale
from .models import Family, OutcomeModel
from .rng import TAG_COVARIATE, TAG_OUTCOME, TAG_TREATMENT, substream


@dataclass(frozen=True)
class TrialConfig:
    model: OutcomeModel
    dist: CovariateDistribution
    n: int
    allocation: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("a trial needs at least two subjects")
        if not 0.0 < self.allocation < 1.0:
            raise ConfigError("allocation must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class TrialIPD:
    """Subject-level rows: covariates (n, k), treatment and outcome (n,)."""

    x: np.ndarray
    t: np.ndarray
    y: np.ndarray
    covariate_names: tuple
    config: Optional[TrialConfig] = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float).T).T
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if not (x.shape[0] == t.shape[0] == y.shape[0]):
            raise ConfigError("x, t and y must have matching lengths")
        if x.shape[1] != len(self.covariate_names):
            raise ConfigError("covariate_names must match the covariate columns")
        if not np.isin(t, (0.0, 1.0)).all():
            raise ConfigError("treatment must be binary")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*self.covariate_names, "t", "y"])
        for i in range(self.n):
            writer.writerow(
                [repr(float(v)) for v in self.x[i]]
                + [repr(float(self.t[i])), repr(float(self.y[i]))]
            )
        return buf.getvalue()


def ipd_from_csv(text: str) -> TrialIPD:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][-2:] != ["t", "y"]:
        raise ConfigError("IPD CSV must have columns x1..xk,t,y")
    names = tuple(rows[0][:-2])
    data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    if data.size == 0:
        raise ConfigError("IPD CSV has no data rows")
    return TrialIPD(x=data[:, :-2], t=data[:, -2], y=data[:, -1], covariate_names=names)


def _sample_outcome(model: OutcomeModel, mean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if model.family is Family.GAUSSIAN:
        return mean + model.noise_sd * rng.standard_normal(mean.shape[0])
    if model.family is Family.POISSON:
        return rng.poisson(mean).astype(float)
    return (rng.random(mean.shape[0]) < mean).astype(float)


def simulate_trial(config: TrialConfig) -> TrialIPD:
    """Draw a randomized trial; deterministic given the config seed."""
    k = dim_of(config.dist)
    if isinstance(config.dist, IndependentProduct):
        x = np.column_stack(
            [
                comp.sample(substream(config.seed, TAG_COVARIATE, j), config.n)
                for j, comp in enumerate(config.dist.components)
            ]
        )
    else:
        x = config.dist.sample(substream(config.seed, TAG_COVARIATE, 0), config.n)[:, None]
    t = (substream(config.seed, TAG_TREATMENT).random(config.n) < config.allocation).astype(float)
    mean = np.asarray(config.model.conditional_mean(t, x), dtype=float)
    y = _sample_outcome(config.model, mean, substream(config.seed, TAG_OUTCOME))
    names = tuple(f"x{j + 1}" for j in range(k))
    return TrialIPD(x=x, t=t, y=y, covariate_names=names, config=config)


@dataclass(frozen=True)
class EffectEstimate:
    value: float
    se: float
    scale: Scale


@dataclass(frozen=True)
class ConditionalEstimate:
    value: float
    se: float
    scale: Scale
    conditioning_set: tuple


@dataclass(frozen=True)
class AggregateSummary:
    """Published-style trial summary; the raw material of indirect comparisons."""

    n: int
    n_treated: int
    n_control: int
    covariate_names: tuple
    covariate_means: np.ndarray
    covariate_sds: np.ndarray
    outcome_family: Family
    arm_summary: dict
    marginal: EffectEstimate
    conditional: Optional[ConditionalEstimate] = None

    def to_kv_csv(self) -> str:
        pairs = [
            ("n", self.n),
            ("n_treated", self.n_treated),
            ("n_control", self.n_control),
            ("outcome_family", self.outcome_family.value),
        ]
        for name, m, s in zip(self.covariate_names, self.covariate_means, self.covariate_sds):
            pairs.append((f"mean_{name}", repr(float(m))))
            pairs.append((f"sd_{name}", repr(float(s))))
        for key in sorted(self.arm_summary):
            pairs.append((key, repr(float(self.arm_summary[key]))))
        pairs += [
            ("marginal_value", repr(self.marginal.value)),
            ("marginal_se", repr(self.marginal.se)),
            ("marginal_scale", self.marginal.scale.value),
        ]
        if self.conditional is not None:
            pairs += [
                ("conditional_value", repr(self.conditional.value)),
                ("conditional_se", repr(self.conditional.se)),
                ("conditional_scale", self.conditional.scale.value),
                ("conditional_set", ";".join(self.conditional.conditioning_set)),
            ]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        writer.writerows(pairs)
        return buf.getvalue()


def summary_from_kv_csv(text: str) -> dict:
    """Parse the key-value summary CSV into a plain dict of strings."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["key", "value"]:
        raise ConfigError("summary CSV must have a key,value header")
    return {key: value for key, value in rows[1:]}


_FAMILY_SCALES = {
    Family.GAUSSIAN: (Scale.MEAN_DIFFERENCE,),
    Family.POISSON: (Scale.LOG_RISK_RATIO,),
    Family.BERNOULLI: (Scale.LOG_ODDS_RATIO, Scale.LOG_RISK_RATIO, Scale.MEAN_DIFFERENCE),
}

_CANONICAL_LINKS = {
    Family.GAUSSIAN: Link.IDENTITY,
    Family.POISSON: Link.LOG,
    Family.BERNOULLI: Link.LOGIT,
}


def _infer_family(ipd: TrialIPD) -> Family:
    if ipd.config is not None:
        return ipd.config.model.family
    y = ipd.y
    if np.isin(y, (0.0, 1.0)).all():
        return Family.BERNOULLI
    if (y >= 0).all() and np.array_equal(y, np.round(y)):
        return Family.POISSON
    return Family.GAUSSIAN


def _binary_marginal(a, b, c, d, scale: Scale, continuity) -> EffectEstimate:
    cells = np.array([a, b, c, d], dtype=float)
    if (cells == 0).any():
        if continuity is None:
            raise DegenerateTableError(
                f"2x2 table has an empty cell (a={a}, b={b}, c={c}, d={d}); "
                "enable a continuity correction to proceed"
            )
        cells = cells + float(continuity)
    a, b, c, d = cells
    n1, n0 = a + b, c + d
    if scale is Scale.LOG_ODDS_RATIO:
        value = math.log(a * d / (b * c))
        se = math.sqrt(1 / a + 1 / b + 1 / c + 1 / d)
    elif scale is Scale.LOG_RISK_RATIO:
        value = math.log((a / n1) / (c / n0))
        se = math.sqrt(1 / a - 1 / n1 + 1 / c - 1 / n0)
    else:
        p1, p0 = a / n1, c / n0
        value = p1 - p0
        se = math.sqrt(p1 * (1 - p1) / n1 + p0 * (1 - p0) / n0)
    return EffectEstimate(value, se, scale)


def aggregate(
    ipd: TrialIPD,
    scale: Optional[Scale] = None,
    conditional_on: Optional[tuple] = None,
    continuity: Optional[float] = None,
) -> AggregateSummary:
    """Publication-style summary with a crude marginal effect estimate.

    ``scale`` defaults to the canonical scale of the outcome family.  With
    ``conditional_on`` set to a tuple of covariate names, the treatment
    coefficient of a main-effects regression on those covariates is reported
    as a conditional estimate labelled with its conditioning set.
    """
    family = _infer_family(ipd)
    if scale is None:
        scale = _CANONICAL_LINKS[family].scale
    if scale not in _FAMILY_SCALES[family]:
        raise ConfigError(f"scale {scale.value} is not available for {family.value} outcomes")

    treated = ipd.t == 1.0
    n1, n0 = int(treated.sum()), int((~treated).sum())
    if n1 == 0 or n0 == 0:
        raise DegenerateArmError("both trial arms must be non-empty")
    y1, y0 = ipd.y[treated], ipd.y[~treated]

    if family is Family.BERNOULLI:
        a, b = float(y1.sum()), float(n1 - y1.sum())
        c, d = float(y0.sum()), float(n0 - y0.sum())
        arm_summary = {
            "events_treated": a,
            "nonevents_treated": b,
            "events_control": c,
            "nonevents_control": d,
        }
        marginal = _binary_marginal(a, b, c, d, scale, continuity)
    elif family is Family.POISSON:
        tau = ipd.config.model.person_time if ipd.config is not None else 1.0
        e1, e0 = float(y1.sum()), float(y0.sum())
        exp1, exp0 = n1 * tau, n0 * tau
        arm_summary = {
            "events_treated": e1,
            "exposure_treated": exp1,
            "events_control": e0,
            "exposure_control": exp0,
        }
        if e1 == 0 or e0 == 0:
            if continuity is None:
                raise DegenerateTableError("an arm has zero events; enable a continuity correction")
            e1, e0 = e1 + float(continuity), e0 + float(continuity)
        marginal = EffectEstimate(
            math.log(e1 / exp1) - math.log(e0 / exp0),
            math.sqrt(1 / e1 + 1 / e0),
            scale,
        )
    else:
        s1 = float(y1.std(ddof=1)) if n1 > 1 else 0.0
        s0 = float(y0.std(ddof=1)) if n0 > 1 else 0.0
        arm_summary = {
            "mean_treated": float(y1.mean()),
            "sd_treated": s1,
            "mean_control": float(y0.mean()),
            "sd_control": s0,
        }
        pooled = math.sqrt(
            ((n1 - 1) * s1**2 + (n0 - 1) * s0**2) / max(n1 + n0 - 2, 1)
        )
        marginal = EffectEstimate(
            float(y1.mean() - y0.mean()),
            pooled * math.sqrt(1 / n1 + 1 / n0),
            scale,
        )

    conditional = None
    if conditional_on is not None:
        conditional = conditional_coefficient(ipd, conditional_on)

    return AggregateSummary(
        n=ipd.n,
        n_treated=n1,
        n_control=n0,
        covariate_names=ipd.covariate_names,
        covariate_means=ipd.x.mean(axis=0),
        covariate_sds=ipd.x.std(axis=0, ddof=1),
        outcome_family=family,
        arm_summary=arm_summary,
        marginal=marginal,
        conditional=conditional,
    )


def conditional_coefficient(ipd: TrialIPD, conditioning_set: tuple) -> ConditionalEstimate:
    """Treatment coefficient of a main-effects regression on the named covariates."""
    conditioning_set = tuple(conditioning_set)
    unknown = set(conditioning_set) - set(ipd.covariate_names)
    if unknown:
        raise ConfigError(f"unknown covariates in conditioning set: {sorted(unknown)}")
    if not conditioning_set:
        raise ConfigError("conditioning set must not be empty")
    family = _infer_family(ipd)
    link = _CANONICAL_LINKS[family]
    cols = [ipd.covariate_names.index(name) for name in conditioning_set]
    fit = fit_glm(ipd.x[:, cols], ipd.t, ipd.y, GlmFormula.MAIN_EFFECTS, link)
    return ConditionalEstimate(
        value=fit.coefficient("t"),
        se=fit.standard_error("t"),
        scale=link.scale,
        conditioning_set=conditioning_set,
    )
