"""Covariate laws with exact moments and a deterministic expectation engine.

Supported laws: normal, Bernoulli, finite discrete, and independent products
of those.  Every law exposes exact ``mean`` / ``variance`` / ``second_moment``
and can be sampled from a NumPy generator.

``expectation(dist, f, settings)`` integrates a vectorised function against a
law:

* normal components use Gauss-Hermite quadrature.  For ``X ~ N(m, s^2)`` and
  physicists' nodes/weights ``(u_i, w_i)``,

      E[f(X)] = (1 / sqrt(pi)) * sum_i w_i * f(m + sqrt(2) * s * u_i),

  which is exact for polynomials of degree below ``2 * nodes``;
* Bernoulli / discrete components are exact weighted sums over their atoms;
* independent products take the tensor grid of the component rules up to
  ``max_tensor_dim`` dimensions and fall back to seeded Monte Carlo beyond,
  so results are deterministic given settings.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .errors import ConfigError, NumericDomainError

_PROB_TOL = 1e-12


@dataclass(frozen=True)
class QuadratureSettings:
    """Controls the expectation engine.

    ``nodes`` is the Gauss-Hermite node count per normal component,
    ``max_tensor_dim`` the largest product dimension integrated on a tensor
    grid, and ``mc_draws`` / ``seed`` govern the Monte Carlo fallback for
    higher-dimensional products.
    """

    nodes: int = 64
    max_tensor_dim: int = 4
    mc_draws: int = 200_000
    seed: int = 0

    def __post_init__(self):
        if self.nodes < 1 or self.max_tensor_dim < 1 or self.mc_draws < 1:
            raise ConfigError("quadrature settings must be positive")

    def with_nodes(self, nodes: int) -> "QuadratureSettings":
        return QuadratureSettings(nodes, self.max_tensor_dim, self.mc_draws, self.seed)


DEFAULT_SETTINGS = QuadratureSettings()


@dataclass(frozen=True)
class Normal:
    loc: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigError("normal scale must be positive")

    def mean(self) -> float:
        return self.loc

    def variance(self) -> float:
        return self.scale * self.scale

    def second_moment(self) -> float:
        return self.variance() + self.loc * self.loc

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(self.loc, self.scale, size)


@dataclass(frozen=True)
class Bernoulli:
    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ConfigError("Bernoulli p must lie strictly inside (0, 1)")

    def mean(self) -> float:
        return self.p

    def variance(self) -> float:
        return self.p * (1.0 - self.p)

    def second_moment(self) -> float:
        # x^2 == x on {0, 1}
        return self.p

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return (rng.random(size) < self.p).astype(float)


@dataclass(frozen=True)
class Discrete:
    """Finite support with strictly positive probabilities summing to one."""

    values: tuple
    probs: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)
        if len(values) != len(probs) or not values:
            raise ConfigError("values and probs must be equal-length and non-empty")
        if any(p <= 0 for p in probs):
            raise ConfigError("all probabilities must be strictly positive")
        if abs(sum(probs) - 1.0) > _PROB_TOL:
            raise ConfigError(f"probabilities sum to {sum(probs)!r}, not 1")

    def mean(self) -> float:
        return float(np.dot(self.probs, self.values))

    def variance(self) -> float:
        return self.second_moment() - self.mean() ** 2

    def second_moment(self) -> float:
        return float(np.dot(self.probs, np.square(self.values)))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        edges = np.cumsum(self.probs)
        idx = np.searchsorted(edges, rng.random(size), side="right")
        return np.asarray(self.values, dtype=float)[np.minimum(idx, len(self.values) - 1)]


@dataclass(frozen=True)
class IndependentProduct:
    """Independent joint law of scalar components; moments are vectors."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ConfigError("product law needs at least one component")
        if any(isinstance(c, IndependentProduct) for c in comps):
            raise ConfigError("product components must be scalar laws")

    @property
    def dim(self) -> int:
        return len(self.components)

    def mean(self) -> np.ndarray:
        return np.array([c.mean() for c in self.components])

    def variance(self) -> np.ndarray:
        return np.array([c.variance() for c in self.components])

    def second_moment(self) -> np.ndarray:
        return np.array([c.second_moment() for c in self.components])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.column_stack([c.sample(rng, size) for c in self.components])


CovariateDistribution = Union[Normal, Bernoulli, Discrete, IndependentProduct]


def dim_of(dist: CovariateDistribution) -> int:
    return dist.dim if isinstance(dist, IndependentProduct) else 1


@lru_cache(maxsize=32)
def _hermite_rule(nodes: int):
    u, w = hermgauss(nodes)
    return u, w / np.sqrt(np.pi)


def _scalar_rule(dist, settings: QuadratureSettings):
    """Exact atoms for discrete laws, Gauss-Hermite points for normals."""
    if isinstance(dist, Normal):
        u, w = _hermite_rule(settings.nodes)
        return dist.loc + np.sqrt(2.0) * dist.scale * u, w
    if isinstance(dist, Bernoulli):
        return np.array([0.0, 1.0]), np.array([1.0 - dist.p, dist.p])
    if isinstance(dist, Discrete):
        return np.asarray(dist.values, dtype=float), np.asarray(dist.probs, dtype=float)
    raise ConfigError(f"unsupported scalar law: {dist!r}")


def is_exact(dist: CovariateDistribution, settings: QuadratureSettings = DEFAULT_SETTINGS) -> bool:
    """True when ``expectation`` uses exact atom sums only (no quadrature, no MC)."""
    if isinstance(dist, IndependentProduct):
        return dist.dim <= settings.max_tensor_dim and all(
            is_exact(c, settings) for c in dist.components
        )
    return isinstance(dist, (Bernoulli, Discrete))


def nodes_and_weights(dist: CovariateDistribution, settings: QuadratureSettings = DEFAULT_SETTINGS):
    """Integration nodes (m,) or (m, k) and weights (m,) for a law.

    Returns ``None`` for product laws above ``max_tensor_dim`` (Monte Carlo
    territory).
    """
    if not isinstance(dist, IndependentProduct):
        return _scalar_rule(dist, settings)
    if dist.dim > settings.max_tensor_dim:
        return None
    rules = [_scalar_rule(c, settings) for c in dist.components]
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    nodes = np.column_stack([g.ravel() for g in grids])
    weights = np.ones(nodes.shape[0])
    for axis, (_, w) in enumerate(rules):
        shape = [1] * dist.dim
        shape[axis] = len(w)
        weights = weights * np.broadcast_to(w.reshape(shape), [len(r[0]) for r in rules]).ravel()
    return nodes, weights


def expectation(dist: CovariateDistribution, f, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """E[f(X)] under ``dist``; deterministic given ``settings``.

    ``f`` must be vectorised: it receives all nodes (or draws) at once, shaped
    (m,) for scalar laws and (m, k) for products.
    """
    rule = nodes_and_weights(dist, settings)
    if rule is not None:
        nodes, weights = rule
        values = np.asarray(f(nodes), dtype=float)
        bad = ~np.isfinite(values)
        if bad.any():
            where = nodes[bad][0] if nodes.ndim else nodes[bad][0]
            raise NumericDomainError(f"integrand is not finite at node {where!r}")
        return float(np.dot(weights, values))
    rng = np.random.Generator(np.random.Philox(key=settings.seed))
    draws = dist.sample(rng, settings.mc_draws)
    values = np.asarray(f(draws), dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        raise NumericDomainError(f"integrand is not finite at draw {draws[bad][0]!r}")
    return float(values.mean())
