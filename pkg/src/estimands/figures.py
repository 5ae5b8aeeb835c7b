"""Canonical equality-matrix checks.

For each outcome-model class (homogeneous, linear-heterogeneous, quadratic)
and each link (identity, log, logit), the equality pattern among MTE, CTEM
and PACTE is a structural fact:

* homogeneous: all three coincide for identity and log links; under the
  logit link the marginal effect detaches from both conditional summaries;
* linear-heterogeneous: all three coincide only for the identity link;
  otherwise CTEM and PACTE still agree (the conditional effect is linear in
  the covariate) but the marginal effect does not;
* quadratic: CTEM and PACTE part ways (squared mean versus mean of squares);
  the identity link keeps MTE equal to PACTE, the other links keep nothing.

``verify_figures`` recomputes the nine matrices from shipped canonical
parameterizations and compares them against these expected patterns.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .calculus import ESTIMAND_ORDER, EqualityMatrix, equality_matrix
from .distributions import DEFAULT_SETTINGS, QuadratureSettings
from .links import Link
from .models import Family, OutcomeModel

_KINDS = ("homogeneous", "linear_heterogeneous", "quadratic")
_LINKS = (Link.IDENTITY, Link.LOG, Link.LOGIT)

_ALL = frozenset({("MTE", "CTEM"), ("MTE", "PACTE"), ("CTEM", "PACTE")})
_CTEM_PACTE = frozenset({("CTEM", "PACTE")})
_MTE_PACTE = frozenset({("MTE", "PACTE")})
_NONE = frozenset()

EXPECTED_EQUALITIES = {
    ("homogeneous", Link.IDENTITY): _ALL,
    ("homogeneous", Link.LOG): _ALL,
    ("homogeneous", Link.LOGIT): _CTEM_PACTE,
    ("linear_heterogeneous", Link.IDENTITY): _ALL,
    ("linear_heterogeneous", Link.LOG): _CTEM_PACTE,
    ("linear_heterogeneous", Link.LOGIT): _CTEM_PACTE,
    ("quadratic", Link.IDENTITY): _MTE_PACTE,
    ("quadratic", Link.LOG): _NONE,
    ("quadratic", Link.LOGIT): _NONE,
}

_FAMILY_FOR_LINK = {
    Link.IDENTITY: Family.GAUSSIAN,
    Link.LOG: Family.POISSON,
    Link.LOGIT: Family.BERNOULLI,
}


def expected_matrix(kind: str, link: Link) -> EqualityMatrix:
    pairs = EXPECTED_EQUALITIES[(kind, link)]
    entries = []
    for a in ESTIMAND_ORDER:
        row = []
        for b in ESTIMAND_ORDER:
            row.append(a == b or (a, b) in pairs or (b, a) in pairs)
        entries.append(tuple(row))
    return EqualityMatrix(entries=tuple(entries), tolerance=0.0)


def canonical_inputs(kind: str):
    """(coefficients table, covariate law) from the shipped figure config."""
    from .config import coefficients_from_table, dist_from_table

    text = resources.files("estimands.configs").joinpath(f"figure_{kind}.toml").read_text()
    doc = tomllib.loads(text)
    return coefficients_from_table(doc["coefficients"]), dist_from_table(doc["dist"])


@dataclass(frozen=True)
class FigureCheck:
    kind: str
    link: Link
    matrix: EqualityMatrix
    expected: EqualityMatrix
    ok: bool

    @property
    def name(self) -> str:
        return f"{self.kind}-{self.link.value}"


def verify_figures(settings: QuadratureSettings = DEFAULT_SETTINGS) -> list:
    """Recompute all nine canonical equality matrices and compare to expectation."""
    checks = []
    for kind in _KINDS:
        coefficients, dist = canonical_inputs(kind)
        for link in _LINKS:
            model = OutcomeModel(link=link, family=_FAMILY_FOR_LINK[link], coefficients=coefficients)
            matrix = equality_matrix(model, dist, settings)
            expected = expected_matrix(kind, link)
            checks.append(
                FigureCheck(
                    kind=kind,
                    link=link,
                    matrix=matrix,
                    expected=expected,
                    ok=matrix.entries == expected.entries,
                )
            )
    return checks
