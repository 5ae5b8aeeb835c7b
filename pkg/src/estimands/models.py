"""Parametric outcome-generating mechanisms.

Three coefficient sets describe how the conditional outcome mean, on the
linear predictor scale, depends on a scalar baseline covariate ``x`` and a
binary treatment ``t``:

* homogeneous — the treatment contrast is constant in ``x`` (``x`` is purely
  prognostic);
* linear heterogeneous — a covariate-treatment product term makes the
  contrast linear in ``x`` (``x`` is an effect modifier);
* quadratic heterogeneous — first- and second-order product terms make the
  contrast quadratic in ``x``.

An :class:`OutcomeModel` pairs a coefficient set with a link and a canonical
outcome family: Gaussian with identity, Poisson with log, Bernoulli with
logit.  Log-link models additionally carry a fixed person-time whose log
enters the linear predictor as an offset.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ArityError, ConfigError
from .links import Link, Scale


class Family(enum.Enum):
    GAUSSIAN = "gaussian"
    POISSON = "poisson"
    BERNOULLI = "bernoulli"


_CANONICAL_LINK = {
    Family.GAUSSIAN: Link.IDENTITY,
    Family.POISSON: Link.LOG,
    Family.BERNOULLI: Link.LOGIT,
}


@dataclass(frozen=True)
class HomogeneousCoefficients:
    """Intercept, covariate main effect and a constant treatment effect."""

    intercept: float
    covariate: float
    treatment: float

    def linear_predictor(self, t, x):
        return self.intercept + self.covariate * x + self.treatment * t

    def treatment_contrast(self, x):
        if np.ndim(x):
            return np.full(np.shape(x), float(self.treatment))
        return self.treatment


@dataclass(frozen=True)
class LinearHeterogeneousCoefficients:
    """Adds a covariate-treatment product, so the contrast is linear in x."""

    intercept: float
    covariate: float
    treatment: float
    interaction: float

    def linear_predictor(self, t, x):
        return self.intercept + self.covariate * x + (self.treatment + self.interaction * x) * t

    def treatment_contrast(self, x):
        return self.treatment + self.interaction * x


@dataclass(frozen=True)
class QuadraticCoefficients:
    """Second-order covariate terms in both arms; contrast quadratic in x."""

    intercept: float
    linear: float
    quadratic: float
    treatment: float
    linear_interaction: float
    quadratic_interaction: float

    def linear_predictor(self, t, x):
        x2 = np.square(x) if np.ndim(x) else x * x
        base = self.intercept + self.linear * x + self.quadratic * x2
        return base + (self.treatment + self.linear_interaction * x + self.quadratic_interaction * x2) * t

    def treatment_contrast(self, x):
        x2 = np.square(x) if np.ndim(x) else x * x
        return self.treatment + self.linear_interaction * x + self.quadratic_interaction * x2


Coefficients = Union[
    HomogeneousCoefficients,
    LinearHeterogeneousCoefficients,
    QuadraticCoefficients,
]


@dataclass(frozen=True)
class OutcomeModel:
    """A generative mechanism: link, outcome family, coefficients, person-time.

    The family must use its canonical link (Gaussian-identity, Poisson-log,
    Bernoulli-logit); ``noise_sd`` applies to the Gaussian family only and
    ``person_time`` enters log-link linear predictors as a ``log`` offset.
    """

    link: Link
    family: Family
    coefficients: Coefficients
    noise_sd: float = 1.0
    person_time: float = 1.0

    def __post_init__(self):
        if _CANONICAL_LINK[self.family] is not self.link:
            raise ConfigError(
                f"family {self.family.value} requires the "
                f"{_CANONICAL_LINK[self.family].value} link, got {self.link.value}"
            )
        if self.family is Family.GAUSSIAN and self.noise_sd < 0:
            raise ConfigError("noise_sd must be non-negative")
        if not self.person_time > 0:
            raise ConfigError("person_time must be positive")

    @property
    def scale(self) -> Scale:
        return self.link.scale

    @property
    def arity(self) -> int:
        return 1

    def linear_predictor(self, t, x):
        """Linear predictor for treatment ``t`` at covariate value(s) ``x``.

        ``x`` may be a scalar or an array of scalar covariate values
        (elementwise evaluation); a trailing axis of covariates is accepted
        only with length equal to the model arity.
        """
        x = _check_arity(x, self.arity)
        eta = self.coefficients.linear_predictor(t, x)
        if self.link is Link.LOG and self.person_time != 1.0:
            eta = eta + math.log(self.person_time)
        return eta

    def conditional_mean(self, t, x):
        """Outcome mean given treatment and covariate value(s)."""
        return self.link.inverse(self.linear_predictor(t, x))

    def treatment_contrast(self, x):
        """Linear-predictor-scale contrast of the two arms at ``x`` (exact)."""
        return self.coefficients.treatment_contrast(_check_arity(x, self.arity))


def _check_arity(x, arity: int):
    """Collapse a trailing covariate axis, rejecting wrong widths.

    Scalars and 1-d arrays are batches of single-covariate observations;
    a 2-d array must have ``arity`` columns.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1:
        return x if x.ndim else float(x)
    if x.shape[-1] != arity:
        raise ArityError(
            f"model takes {arity} covariate(s), got {x.shape[-1]} (shape {x.shape})"
        )
    return x[..., 0] if arity == 1 else x
