"""Command-line driver.

Subcommands: ``estimands`` (summary measures + equality matrix for a model
and covariate law), ``verify-figures`` (recompute the nine canonical
equality matrices and check them), ``simulate`` (draw a trial and aggregate
it), ``adjust`` (population-adjusted anchored comparison from IPD plus a
competitor summary), and ``bench`` (the incompatibility simulation study).

Exit status: 0 success, 1 config/validation error, 2 numeric failure or
failed verification.  Errors are printed to stderr as
``error[<code>]: <message>``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adjustment import (
    AdjustmentResult,
    Method,
    anchored_itc,
    compatibility_check,
    conditional_label,
    crude_estimate,
    maic_estimate,
    maic_weights,
    results_csv,
    stc_gcomp,
    stc_plugin,
    MTE_LABEL,
)
from .bench import emit_report, run_scenario
from .calculus import equality_matrix, estimand_report
from .config import (
    AdjustSpec,
    adjust_inputs,
    estimand_inputs,
    load_toml,
    scenario_inputs,
    trial_inputs,
)
from .distributions import Bernoulli, Normal, QuadratureSettings
from .errors import ConfigError, EstimandError
from .figures import verify_figures
from .links import Link, Scale
from .trial import aggregate, ipd_from_csv, simulate_trial, summary_from_kv_csv

_LINK_FOR_SCALE = {link.scale: link for link in Link}


class _Parser(argparse.ArgumentParser):
    """argparse with our exit-code convention: usage problems are config errors."""

    def error(self, message):
        print(f"error[config-args]: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="estimands", description=__doc__)
    parser.add_argument("--version", action="version", version=f"estimands {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="scenario TOML")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--quadrature-nodes", type=int, default=64, help="Gauss-Hermite node count"
        )

    p = sub.add_parser("estimands", help="compute MTE/CTEM/PACTE and the equality matrix")
    common(p)
    p.set_defaults(func=_cmd_estimands)

    p = sub.add_parser("verify-figures", help="check the nine canonical equality matrices")
    common(p, config_required=False)
    p.set_defaults(func=_cmd_verify_figures)

    p = sub.add_parser("simulate", help="simulate a trial and write IPD plus aggregates")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("adjust", help="anchored indirect comparison from IPD and a competitor summary")
    common(p)
    p.set_defaults(func=_cmd_adjust)

    p = sub.add_parser("bench", help="run the summary-measure incompatibility bench")
    common(p)
    p.add_argument("--replications", type=int, default=None, help="override config replications")
    p.set_defaults(func=_cmd_bench)
    return parser


def _settings(args) -> QuadratureSettings:
    if args.quadrature_nodes < 1:
        raise ConfigError("--quadrature-nodes must be positive")
    return QuadratureSettings(nodes=args.quadrature_nodes)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_estimands(args) -> int:
    model, dist = estimand_inputs(load_toml(args.config))
    settings = _settings(args)
    report = estimand_report(model, dist, settings)
    matrix = equality_matrix(model, dist, settings)
    out = _outdir(args)
    (out / "estimands.csv").write_text(report.csv_header() + "\n" + report.csv_row() + "\n")
    (out / "equality_matrix.txt").write_text(matrix.render())
    print(f"wrote {out / 'estimands.csv'} and {out / 'equality_matrix.txt'}")
    return 0


def _cmd_verify_figures(args) -> int:
    checks = verify_figures(_settings(args))
    out = _outdir(args)
    failures = 0
    lines = []
    for check in checks:
        status = "ok" if check.ok else "MISMATCH"
        failures += 0 if check.ok else 1
        print(f"{check.name}: {status}")
        lines.append(f"== {check.name} ({status})")
        lines.append(check.matrix.render())
    (out / "figure_matrices.txt").write_text("\n".join(lines))
    if failures:
        print(f"error[numeric-figure-mismatch]: {failures} matrices disagree", file=sys.stderr)
        return 2
    return 0


def _cmd_simulate(args) -> int:
    config, agg_options = trial_inputs(load_toml(args.config), seed_override=args.seed)
    ipd = simulate_trial(config)
    summary = aggregate(ipd, **agg_options)
    out = _outdir(args)
    (out / "ipd.csv").write_text(ipd.to_csv())
    (out / "summary.csv").write_text(summary.to_kv_csv())
    print(f"wrote {out / 'ipd.csv'} ({ipd.n} rows) and {out / 'summary.csv'}")
    return 0


def _competitor_result(summary: dict, spec: AdjustSpec) -> AdjustmentResult:
    if spec.bc_use_conditional:
        if "conditional_value" not in summary:
            raise ConfigError("competitor summary carries no conditional estimate")
        names = tuple(summary["conditional_set"].split(";"))
        return AdjustmentResult(
            float(summary["conditional_value"]),
            float(summary["conditional_se"]),
            Scale(summary["conditional_scale"]),
            conditional_label(*names),
            Method.REGRESSION,
            population="BC",
        )
    return AdjustmentResult(
        float(summary["marginal_value"]),
        float(summary["marginal_se"]),
        Scale(summary["marginal_scale"]),
        MTE_LABEL,
        Method.CRUDE,
        population="BC",
    )


def _competitor_moments(summary: dict):
    names = sorted(
        key[len("mean_"):] for key in summary if key.startswith("mean_")
    )
    if not names:
        raise ConfigError("competitor summary carries no covariate means")
    means = np.array([float(summary[f"mean_{n}"]) for n in names])
    sds = np.array([float(summary[f"sd_{n}"]) for n in names])
    return names, means, sds


def _cmd_adjust(args) -> int:
    doc = load_toml(args.config)
    spec = adjust_inputs(doc, seed_override=args.seed)
    base = Path(args.config).parent
    ipd = ipd_from_csv((base / spec.ipd_path).read_text())
    summary = summary_from_kv_csv((base / spec.competitor_path).read_text())
    settings = _settings(args)

    bc = _competitor_result(summary, spec)
    _, means, sds = _competitor_moments(summary)
    scale = bc.scale
    link = _LINK_FOR_SCALE[scale]

    if spec.method is Method.CRUDE:
        ac = crude_estimate(ipd, scale, population="AC")
    elif spec.method is Method.MAIC:
        cols, target = ipd.x, means
        if spec.match_variance:
            cols = np.column_stack([ipd.x, np.square(ipd.x)])
            target = np.concatenate([means, sds**2 + means**2])
        ac = maic_estimate(ipd, maic_weights(cols, target), scale, population="BC")
    elif spec.method is Method.STC_PLUGIN:
        ac = stc_plugin(ipd, means, link, formula=spec.formula, population="BC")
    else:
        if spec.target_law == "bernoulli":
            if means.shape[0] != 1:
                raise ConfigError("bernoulli target law requires a single covariate")
            target_dist = Bernoulli(p=float(means[0]))
        else:
            if means.shape[0] != 1:
                raise ConfigError("normal target law requires a single covariate")
            target_dist = Normal(loc=float(means[0]), scale=float(sds[0]))
        ac = stc_gcomp(
            ipd, target_dist, link,
            formula=spec.formula, settings=settings,
            n_boot=spec.n_boot, seed=spec.seed, population="BC",
        )

    itc = anchored_itc(ac, bc)
    verdict = compatibility_check(ac, bc)
    out = _outdir(args)
    (out / "adjustment.csv").write_text(results_csv([ac, bc, itc]))
    (out / "compatibility.txt").write_text(
        f"compatible: {str(verdict.compatible).lower()}\ndiagnosis: {verdict.diagnosis}\n"
    )
    print(
        f"A vs B ({itc.scale.value}, population {itc.population_tag}): "
        f"{itc.delta_ab:+.4f} (se {itc.se:.4f}); {verdict.diagnosis}"
    )
    return 0


def _cmd_bench(args) -> int:
    config = scenario_inputs(
        load_toml(args.config),
        seed_override=args.seed,
        replications_override=args.replications,
    )
    settings = _settings(args)
    report = run_scenario(config, settings)
    run_dir = _outdir(args) / f"run-{report.digest}"
    written = emit_report(report, run_dir, config=config, settings=settings)
    for row in report.rows:
        print(
            f"{row.pairing.name}: bias {row.bias:+.4f} (mc se {row.mc_se:.4f}), "
            f"coverage {row.coverage_95:.3f}, "
            f"{'compatible' if row.compatible else 'INCOMPATIBLE'}"
        )
    print(f"wrote {len(written)} files under {run_dir}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except EstimandError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
