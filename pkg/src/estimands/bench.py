"""Simulation bench for summary-measure compatibility in anchored comparisons.

Each replicate simulates an index (A vs C) and a competitor (B vs C) trial
from a shared coefficient truth, estimates the index contrast in the
competitor population with a chosen adjustment method, derives the
competitor contrast the way a publication would report it (crude marginal
from the event table, or a covariate-adjusted treatment coefficient), and
anchors the two.  Scoring uses the estimand matching the adjustment method's
label, evaluated in the competitor population, so any bias measures the
incompatibility of the pooled summary measures rather than the adjustment
itself.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .adjustment import (
    CTEM_LABEL,
    MTE_LABEL,
    AdjustmentResult,
    LabelKind,
    Method,
    anchored_itc,
    compatibility_check,
    conditional_label,
    crude_estimate,
    maic_estimate,
    maic_weights,
    stc_gcomp,
    stc_plugin,
)
from .calculus import ctem, equality_matrix, mte, pacte
from .distributions import (
    DEFAULT_SETTINGS,
    Bernoulli,
    CovariateDistribution,
    Discrete,
    IndependentProduct,
    Normal,
    QuadratureSettings,
)
from .errors import ConfigError, EstimandError, NumericDomainError
from .glm import GlmFormula
from .models import OutcomeModel, QuadraticCoefficients
from .rng import TAG_TRIAL_AC, TAG_TRIAL_BC, derive_seed
from .trial import TrialConfig, conditional_coefficient, simulate_trial


class BcReporting(enum.Enum):
    MARGINAL_CRUDE = "marginal_crude"
    CONDITIONAL_COEFFICIENT = "conditional_coefficient"


@dataclass(frozen=True)
class MethodPairing:
    """One way of pooling: an index-side method with a competitor-side report."""

    ac_method: Method
    bc_reporting: BcReporting
    conditioning_set: tuple = ("x1",)

    def __post_init__(self):
        if self.ac_method is Method.REGRESSION:
            raise ConfigError("multivariable regression is a reporting style, not an adjustment method")
        object.__setattr__(self, "conditioning_set", tuple(self.conditioning_set))

    @property
    def name(self) -> str:
        return f"{self.ac_method.value}+{self.bc_reporting.value}"


@dataclass(frozen=True)
class ScenarioConfig:
    model: OutcomeModel
    dist_ac: CovariateDistribution
    dist_bc: CovariateDistribution
    n_ac: int
    n_bc: int
    pairings: tuple
    replications: int
    seed: int
    model_bc: Optional[OutcomeModel] = None
    allocation: float = 0.5
    maic_match_variance: bool = False
    gcomp_bootstrap: int = 200

    def __post_init__(self):
        if self.replications < 2:
            raise ConfigError("a scenario needs at least two replications")
        object.__setattr__(self, "pairings", tuple(self.pairings))

    @property
    def bc_model(self) -> OutcomeModel:
        return self.model_bc if self.model_bc is not None else self.model


@dataclass(frozen=True)
class TrueEstimands:
    mte_bc: float
    ctem_bc: float
    pacte_bc: float


def true_estimands(config: ScenarioConfig, settings: QuadratureSettings = DEFAULT_SETTINGS) -> TrueEstimands:
    """Oracle values of the three estimands in the competitor population."""
    return TrueEstimands(
        mte_bc=mte(config.model, config.dist_bc, settings),
        ctem_bc=ctem(config.model, config.dist_bc),
        pacte_bc=pacte(config.model, config.dist_bc, settings),
    )


@dataclass(frozen=True)
class PairingOutcome:
    pairing: MethodPairing
    estimand_truth_kind: LabelKind
    truth: float
    mean_est: float
    bias: float
    empirical_se: float
    mc_se: float
    coverage_95: float
    compatible: bool
    failures: int
    replications: int


@dataclass(frozen=True)
class BenchReport:
    rows: tuple
    truth: TrueEstimands
    replications: int
    digest: str


def _formula_for(model: OutcomeModel) -> GlmFormula:
    if isinstance(model.coefficients, QuadraticCoefficients):
        return GlmFormula.QUADRATIC_INTERACTION
    return GlmFormula.INTERACTION


def _maic_columns(ipd, dist_bc, match_variance: bool):
    """Covariate columns and target moments for weighting; optionally second moments."""
    target_mean = np.atleast_1d(np.asarray(dist_bc.mean(), dtype=float))
    if not match_variance:
        return ipd.x, target_mean
    target_second = np.atleast_1d(np.asarray(dist_bc.second_moment(), dtype=float))
    return np.column_stack([ipd.x, np.square(ipd.x)]), np.concatenate([target_mean, target_second])


def _estimate_ac(config: ScenarioConfig, pairing: MethodPairing, ipd, settings) -> AdjustmentResult:
    scale = config.model.link.scale
    if pairing.ac_method is Method.MAIC:
        cols, target = _maic_columns(ipd, config.dist_bc, config.maic_match_variance)
        w = maic_weights(cols, target)
        return maic_estimate(ipd, w, scale, population="BC")
    if pairing.ac_method is Method.STC_PLUGIN:
        return stc_plugin(
            ipd,
            np.atleast_1d(np.asarray(config.dist_bc.mean(), dtype=float)),
            config.model.link,
            formula=_formula_for(config.model),
            population="BC",
        )
    if pairing.ac_method is Method.STC_GCOMP:
        return stc_gcomp(
            ipd,
            config.dist_bc,
            config.model.link,
            formula=_formula_for(config.model),
            settings=settings,
            n_boot=config.gcomp_bootstrap,
            seed=derive_seed(config.seed, TAG_TRIAL_AC, 0xB007),
            population="BC",
        )
    return crude_estimate(ipd, scale, population="AC")


def _estimate_bc(config: ScenarioConfig, pairing: MethodPairing, ipd) -> AdjustmentResult:
    if pairing.bc_reporting is BcReporting.MARGINAL_CRUDE:
        return crude_estimate(ipd, config.model.link.scale, population="BC")
    est = conditional_coefficient(ipd, pairing.conditioning_set)
    return AdjustmentResult(
        est.value,
        est.se,
        est.scale,
        conditional_label(*est.conditioning_set),
        Method.REGRESSION,
        population="BC",
    )


_TRUTH_BY_KIND = {
    LabelKind.MTE: mte,
    LabelKind.CTEM: lambda model, dist, settings: ctem(model, dist),
    LabelKind.PACTE: pacte,
}


def pairing_compatibility(config: ScenarioConfig, pairing: MethodPairing):
    """Compatibility verdict implied by a pairing's labels, without estimating."""
    scale = config.model.link.scale
    ac_label = CTEM_LABEL if pairing.ac_method is Method.STC_PLUGIN else MTE_LABEL
    ac = AdjustmentResult(0.0, 1.0, scale, ac_label, pairing.ac_method, "BC")
    if pairing.bc_reporting is BcReporting.MARGINAL_CRUDE:
        bc = AdjustmentResult(0.0, 1.0, scale, MTE_LABEL, Method.CRUDE, "BC")
    else:
        bc = AdjustmentResult(
            0.0, 1.0, scale,
            conditional_label(*pairing.conditioning_set), Method.REGRESSION, "BC",
        )
    return compatibility_check(ac, bc)


def run_scenario(config: ScenarioConfig, settings: QuadratureSettings = DEFAULT_SETTINGS) -> BenchReport:
    """Replicate the two-trial pipeline and score each pooling strategy.

    Replicate-level estimation failures are counted per pairing and tolerated
    up to 5% of replications.  Deterministic given the config seed: every
    replicate derives its own trial seeds.
    """
    truth = true_estimands(config, settings)
    deltas = {p: [] for p in config.pairings}
    covered = {p: [] for p in config.pairings}
    failures = {p: 0 for p in config.pairings}
    truth_ab = {}
    for pairing in config.pairings:
        kind = LabelKind.MTE if pairing.ac_method is not Method.STC_PLUGIN else LabelKind.CTEM
        fn = _TRUTH_BY_KIND[kind]
        truth_ab[pairing] = float(
            fn(config.model, config.dist_bc, settings) - fn(config.bc_model, config.dist_bc, settings)
        )

    for r in range(config.replications):
        ac_ipd = simulate_trial(
            TrialConfig(config.model, config.dist_ac, config.n_ac, config.allocation,
                        derive_seed(config.seed, TAG_TRIAL_AC, r))
        )
        bc_ipd = simulate_trial(
            TrialConfig(config.bc_model, config.dist_bc, config.n_bc, config.allocation,
                        derive_seed(config.seed, TAG_TRIAL_BC, r))
        )
        for pairing in config.pairings:
            try:
                ac = _estimate_ac(config, pairing, ac_ipd, settings)
                bc = _estimate_bc(config, pairing, bc_ipd)
                itc = anchored_itc(ac, bc)
            except EstimandError:
                failures[pairing] += 1
                continue
            deltas[pairing].append(itc.delta_ab)
            covered[pairing].append(
                abs(itc.delta_ab - truth_ab[pairing]) <= 1.959963984540054 * itc.se
            )

    rows = []
    for pairing in config.pairings:
        if failures[pairing] > 0.05 * config.replications:
            raise NumericDomainError(
                f"{failures[pairing]} of {config.replications} replicates failed "
                f"for pairing {pairing.name}"
            )
        est = np.asarray(deltas[pairing])
        kind = LabelKind.MTE if pairing.ac_method is not Method.STC_PLUGIN else LabelKind.CTEM
        empirical_se = float(est.std(ddof=1))
        rows.append(
            PairingOutcome(
                pairing=pairing,
                estimand_truth_kind=kind,
                truth=truth_ab[pairing],
                mean_est=float(est.mean()),
                bias=float(est.mean() - truth_ab[pairing]),
                empirical_se=empirical_se,
                mc_se=empirical_se / float(np.sqrt(est.shape[0])),
                coverage_95=float(np.mean(covered[pairing])),
                compatible=pairing_compatibility(config, pairing).compatible,
                failures=failures[pairing],
                replications=config.replications,
            )
        )
    return BenchReport(
        rows=tuple(rows),
        truth=truth,
        replications=config.replications,
        digest=config_digest(config),
    )


def _dist_dict(dist) -> dict:
    if isinstance(dist, Normal):
        return {"law": "normal", "loc": dist.loc, "scale": dist.scale}
    if isinstance(dist, Bernoulli):
        return {"law": "bernoulli", "p": dist.p}
    if isinstance(dist, Discrete):
        return {"law": "discrete", "values": list(dist.values), "probs": list(dist.probs)}
    if isinstance(dist, IndependentProduct):
        return {"law": "product", "components": [_dist_dict(c) for c in dist.components]}
    raise ConfigError(f"cannot serialize law {dist!r}")


def _model_dict(model: OutcomeModel) -> dict:
    from dataclasses import asdict

    return {
        "link": model.link.value,
        "family": model.family.value,
        "kind": type(model.coefficients).__name__,
        "coefficients": asdict(model.coefficients),
        "noise_sd": model.noise_sd,
        "person_time": model.person_time,
    }


def config_digest(config: ScenarioConfig) -> str:
    """Stable hash of the scenario; names the bench output directory."""
    payload = {
        "model": _model_dict(config.model),
        "model_bc": _model_dict(config.bc_model),
        "dist_ac": _dist_dict(config.dist_ac),
        "dist_bc": _dist_dict(config.dist_bc),
        "n_ac": config.n_ac,
        "n_bc": config.n_bc,
        "allocation": config.allocation,
        "replications": config.replications,
        "seed": config.seed,
        "maic_match_variance": config.maic_match_variance,
        "gcomp_bootstrap": config.gcomp_bootstrap,
        "pairings": [
            [p.ac_method.value, p.bc_reporting.value, list(p.conditioning_set)]
            for p in config.pairings
        ],
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


_RESULT_COLUMNS = (
    "section,name,estimand_truth,truth,mean_est,bias,empirical_se,mc_se,"
    "coverage_95,failures,replications"
)


def report_csv(report: BenchReport) -> str:
    lines = [_RESULT_COLUMNS]
    for row in report.rows:
        lines.append(
            ",".join(
                [
                    "result",
                    row.pairing.name,
                    row.estimand_truth_kind.value,
                    repr(row.truth),
                    repr(row.mean_est),
                    repr(row.bias),
                    repr(row.empirical_se),
                    repr(row.mc_se),
                    repr(row.coverage_95),
                    str(row.failures),
                    str(row.replications),
                ]
            )
        )
    for name, value in (
        ("mte_bc", report.truth.mte_bc),
        ("ctem_bc", report.truth.ctem_bc),
        ("pacte_bc", report.truth.pacte_bc),
    ):
        lines.append(f"truth,{name},,{value!r},,,,,,,")
    return "\n".join(lines) + "\n"


def emit_report(
    report: BenchReport,
    out_dir,
    config: Optional[ScenarioConfig] = None,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> list:
    """Write results CSV, the competitor-population equality matrix, and a bias plot."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []

        csv_path = out / "results.csv"
        csv_path.write_text(report_csv(report))
        written.append(csv_path)

        if config is not None:
            matrix = equality_matrix(config.model, config.dist_bc, settings)
            matrix_path = out / "equality_matrix.txt"
            matrix_path.write_text(matrix.render())
            written.append(matrix_path)

        if report.rows:
            written.append(_bias_plot(report, out / "bias.png"))
        return written
    except OSError as exc:
        raise ConfigError(f"cannot write bench outputs under {out}: {exc}") from exc


def _bias_plot(report: BenchReport, path: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = [row.pairing.name for row in report.rows]
    biases = [row.bias for row in report.rows]
    errors = [row.mc_se for row in report.rows]
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(names), 4.0))
    ax.bar(range(len(names)), biases, yerr=errors, capsize=4, color="#4477aa")
    ax.axhline(0.0, color="black", lw=0.8)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("bias")
    ax.set_title("anchored comparison bias by pooling strategy")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
