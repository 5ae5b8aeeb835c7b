"""TOML scenario configs.

One file format feeds every CLI subcommand; sections are picked per command:
``[model]`` and ``[dist]`` for estimand computation, plus ``[trial]`` /
``[aggregate]`` for simulation, ``[adjust]`` for population adjustment, and
``[dist_ac]`` / ``[dist_bc]`` / ``[bench]`` for the incompatibility bench.

Syntax errors surface with the parser's line/column context; semantic errors
name the offending section and key.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .bench import BcReporting, MethodPairing, ScenarioConfig
from .distributions import Bernoulli, Discrete, IndependentProduct, Normal
from .errors import ConfigError
from .glm import GlmFormula
from .links import Link, Scale
from .models import (
    Family,
    HomogeneousCoefficients,
    LinearHeterogeneousCoefficients,
    OutcomeModel,
    QuadraticCoefficients,
)
from .adjustment import Method
from .trial import TrialConfig

_FAMILY_FOR_LINK = {
    Link.IDENTITY: Family.GAUSSIAN,
    Link.LOG: Family.POISSON,
    Link.LOGIT: Family.BERNOULLI,
}

_COEFFICIENT_KINDS = {
    "homogeneous": (HomogeneousCoefficients, ("intercept", "covariate", "treatment")),
    "linear_heterogeneous": (
        LinearHeterogeneousCoefficients,
        ("intercept", "covariate", "treatment", "interaction"),
    ),
    "quadratic": (
        QuadraticCoefficients,
        (
            "intercept",
            "linear",
            "quadratic",
            "treatment",
            "linear_interaction",
            "quadratic_interaction",
        ),
    ),
}


def load_toml(path) -> dict:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        # The message already carries "(at line N, column M)".
        raise ConfigError(f"{path}: {exc}") from exc


def _section(doc: dict, name: str) -> dict:
    if name not in doc:
        raise ConfigError(f"missing required section [{name}]")
    if not isinstance(doc[name], dict):
        raise ConfigError(f"[{name}] must be a table")
    return doc[name]


def _enum_value(section: str, table: dict, key: str, enum_cls, default=None):
    if key not in table:
        if default is not None:
            return default
        raise ConfigError(f"[{section}] is missing required key '{key}'")
    raw = table[key]
    try:
        return enum_cls(raw)
    except ValueError:
        options = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"[{section}].{key}: {raw!r} is not one of {options}") from None


def _number(section: str, table: dict, key: str, default=None):
    if key not in table:
        if default is not None:
            return default
        raise ConfigError(f"[{section}] is missing required key '{key}'")
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{section}].{key} must be a number, got {value!r}")
    return value


def coefficients_from_table(table: dict, section: str = "model"):
    kind = table.get("kind")
    if kind not in _COEFFICIENT_KINDS:
        options = ", ".join(_COEFFICIENT_KINDS)
        raise ConfigError(f"[{section}].kind must be one of {options}, got {kind!r}")
    cls, fields = _COEFFICIENT_KINDS[kind]
    return cls(**{f: float(_number(section, table, f)) for f in fields})


def model_from_table(table: dict, section: str = "model") -> OutcomeModel:
    link = _enum_value(section, table, "link", Link)
    family = _enum_value(section, table, "family", Family, default=_FAMILY_FOR_LINK[link])
    return OutcomeModel(
        link=link,
        family=family,
        coefficients=coefficients_from_table(table, section),
        noise_sd=float(_number(section, table, "noise_sd", 1.0)),
        person_time=float(_number(section, table, "person_time", 1.0)),
    )


def dist_from_table(table: dict, section: str = "dist"):
    law = table.get("law")
    if law == "normal":
        return Normal(
            loc=float(_number(section, table, "loc")),
            scale=float(_number(section, table, "scale")),
        )
    if law == "bernoulli":
        return Bernoulli(p=float(_number(section, table, "p")))
    if law == "discrete":
        for key in ("values", "probs"):
            if key not in table or not isinstance(table[key], list):
                raise ConfigError(f"[{section}].{key} must be a list")
        return Discrete(values=tuple(table["values"]), probs=tuple(table["probs"]))
    if law == "product":
        comps = table.get("components")
        if not isinstance(comps, list) or not comps:
            raise ConfigError(f"[{section}].components must be a non-empty list of tables")
        return IndependentProduct(
            components=tuple(
                dist_from_table(c, f"{section}.components[{i}]") for i, c in enumerate(comps)
            )
        )
    raise ConfigError(
        f"[{section}].law must be one of normal, bernoulli, discrete, product; got {law!r}"
    )


def estimand_inputs(doc: dict):
    """(model, dist) for the ``estimands`` subcommand."""
    return model_from_table(_section(doc, "model")), dist_from_table(_section(doc, "dist"))


def trial_inputs(doc: dict, seed_override: Optional[int] = None):
    """(TrialConfig, aggregate options) for the ``simulate`` subcommand."""
    model, dist = estimand_inputs(doc)
    trial = _section(doc, "trial")
    seed = int(_number("trial", trial, "seed", 0))
    config = TrialConfig(
        model=model,
        dist=dist,
        n=int(_number("trial", trial, "n")),
        allocation=float(_number("trial", trial, "allocation", 0.5)),
        seed=seed if seed_override is None else seed_override,
    )
    agg = doc.get("aggregate", {})
    scale = _enum_value("aggregate", agg, "scale", Scale, default=model.link.scale)
    conditional = agg.get("conditional_on")
    if conditional is not None and not isinstance(conditional, list):
        raise ConfigError("[aggregate].conditional_on must be a list of covariate names")
    continuity = agg.get("continuity")
    return config, {
        "scale": scale,
        "conditional_on": tuple(conditional) if conditional else None,
        "continuity": float(continuity) if continuity is not None else None,
    }


@dataclass(frozen=True)
class AdjustSpec:
    method: Method
    ipd_path: str
    competitor_path: str
    formula: GlmFormula
    match_variance: bool
    target_law: str
    n_boot: int
    seed: int
    bc_use_conditional: bool


def adjust_inputs(doc: dict, seed_override: Optional[int] = None) -> AdjustSpec:
    table = _section(doc, "adjust")
    method = _enum_value("adjust", table, "method", Method)
    if method is Method.REGRESSION:
        raise ConfigError("[adjust].method: multivariable_regression is not an adjustment method")
    for key in ("ipd", "competitor"):
        if not isinstance(table.get(key), str):
            raise ConfigError(f"[adjust].{key} must be a file path string")
    target_law = table.get("target_law", "normal")
    if target_law not in ("normal", "bernoulli"):
        raise ConfigError("[adjust].target_law must be 'normal' or 'bernoulli'")
    seed = int(_number("adjust", table, "seed", 0))
    return AdjustSpec(
        method=method,
        ipd_path=table["ipd"],
        competitor_path=table["competitor"],
        formula=_enum_value("adjust", table, "formula", GlmFormula, default=GlmFormula.INTERACTION),
        match_variance=bool(table.get("match_variance", False)),
        target_law=target_law,
        n_boot=int(_number("adjust", table, "n_boot", 1000)),
        seed=seed if seed_override is None else seed_override,
        bc_use_conditional=bool(table.get("bc_use_conditional", False)),
    )


def scenario_inputs(
    doc: dict,
    seed_override: Optional[int] = None,
    replications_override: Optional[int] = None,
) -> ScenarioConfig:
    model = model_from_table(_section(doc, "model"))
    model_bc = None
    if "model_bc" in doc:
        model_bc = model_from_table(_section(doc, "model_bc"), "model_bc")
    dist_ac = dist_from_table(_section(doc, "dist_ac"), "dist_ac")
    dist_bc = dist_from_table(_section(doc, "dist_bc"), "dist_bc")
    bench = _section(doc, "bench")
    raw_pairings = bench.get("pairings")
    if not isinstance(raw_pairings, list) or not raw_pairings:
        raise ConfigError("[bench] needs at least one [[bench.pairings]] entry")
    pairings = []
    for i, entry in enumerate(raw_pairings):
        section = f"bench.pairings[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"[{section}] must be a table")
        conditioning = entry.get("conditioning_set", ["x1"])
        if not isinstance(conditioning, list):
            raise ConfigError(f"[{section}].conditioning_set must be a list")
        pairings.append(
            MethodPairing(
                ac_method=_enum_value(section, entry, "ac_method", Method),
                bc_reporting=_enum_value(section, entry, "bc_reporting", BcReporting),
                conditioning_set=tuple(conditioning),
            )
        )
    seed = int(_number("bench", bench, "seed", 0))
    replications = int(_number("bench", bench, "replications"))
    return ScenarioConfig(
        model=model,
        dist_ac=dist_ac,
        dist_bc=dist_bc,
        n_ac=int(_number("bench", bench, "n_ac")),
        n_bc=int(_number("bench", bench, "n_bc")),
        pairings=tuple(pairings),
        replications=replications if replications_override is None else replications_override,
        seed=seed if seed_override is None else seed_override,
        model_bc=model_bc,
        allocation=float(_number("bench", bench, "allocation", 0.5)),
        maic_match_variance=bool(bench.get("maic_match_variance", False)),
        gcomp_bootstrap=int(_number("bench", bench, "gcomp_bootstrap", 200)),
    )
