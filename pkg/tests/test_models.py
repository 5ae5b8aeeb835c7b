import math

import numpy as np
import pytest

from estimands import (
    ArityError,
    ConfigError,
    Family,
    HomogeneousCoefficients,
    LinearHeterogeneousCoefficients,
    Link,
    OutcomeModel,
    QuadraticCoefficients,
)


def hom_model(link=Link.IDENTITY, family=Family.GAUSSIAN, **kw):
    return OutcomeModel(link, family, HomogeneousCoefficients(1.0, 2.0, 0.5), **kw)


def test_linear_predictor_homogeneous():
    model = hom_model()
    assert model.linear_predictor(1, 0.0) == 1.5


def test_linear_predictor_linear_heterogeneous():
    model = OutcomeModel(
        Link.IDENTITY, Family.GAUSSIAN, LinearHeterogeneousCoefficients(0.0, 1.0, 1.0, 0.5)
    )
    assert model.linear_predictor(1, 2.0) == 4.0


def test_linear_predictor_quadratic():
    model = OutcomeModel(
        Link.IDENTITY, Family.GAUSSIAN, QuadraticCoefficients(0.0, 0.0, 1.0, 1.0, 0.0, 1.0)
    )
    assert model.linear_predictor(1, 2.0) == 9.0


def test_conditional_mean_logit_zero_coefficients():
    model = OutcomeModel(
        Link.LOGIT, Family.BERNOULLI, HomogeneousCoefficients(0.0, 0.0, 0.0)
    )
    assert model.conditional_mean(0, -3.7) == 0.5
    assert model.conditional_mean(1, 12.0) == 0.5


def test_conditional_mean_log():
    model = OutcomeModel(
        Link.LOG, Family.POISSON, HomogeneousCoefficients(0.0, 1.0, 0.0)
    )
    assert model.conditional_mean(0, math.log(2.0)) == pytest.approx(2.0, abs=1e-12)


def test_conditional_mean_identity():
    assert hom_model().conditional_mean(1, 0.0) == 1.5


def test_log_link_person_time_offset():
    model = OutcomeModel(
        Link.LOG, Family.POISSON, HomogeneousCoefficients(0.0, 0.0, 0.0), person_time=2.0
    )
    assert model.linear_predictor(0, 0.0) == pytest.approx(math.log(2.0))
    assert model.conditional_mean(0, 0.0) == pytest.approx(2.0)


def test_identity_ignores_person_time():
    model = hom_model(person_time=3.0)
    assert model.linear_predictor(1, 0.0) == 1.5


@pytest.mark.parametrize(
    "link,family",
    [
        (Link.IDENTITY, Family.POISSON),
        (Link.IDENTITY, Family.BERNOULLI),
        (Link.LOG, Family.GAUSSIAN),
        (Link.LOG, Family.BERNOULLI),
        (Link.LOGIT, Family.GAUSSIAN),
        (Link.LOGIT, Family.POISSON),
    ],
)
def test_family_link_pairing_rejected(link, family):
    with pytest.raises(ConfigError):
        OutcomeModel(link, family, HomogeneousCoefficients(0.0, 0.0, 0.0))


def test_invalid_person_time_and_noise():
    with pytest.raises(ConfigError):
        hom_model(person_time=0.0)
    with pytest.raises(ConfigError):
        hom_model(noise_sd=-1.0)


def test_arity_error_on_multicolumn_input():
    with pytest.raises(ArityError):
        hom_model().linear_predictor(1, np.ones((5, 2)))


def test_vectorized_evaluation_matches_scalar():
    model = OutcomeModel(
        Link.LOGIT, Family.BERNOULLI, QuadraticCoefficients(0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    )
    xs = np.linspace(-2, 2, 7)
    batch = model.conditional_mean(1, xs)
    singles = [model.conditional_mean(1, float(x)) for x in xs]
    assert np.allclose(batch, singles, atol=0.0)
    column = model.conditional_mean(1, xs[:, None])
    assert np.allclose(column, singles, atol=0.0)


def test_conditional_mean_finite_for_finite_inputs():
    model = OutcomeModel(
        Link.LOGIT, Family.BERNOULLI, HomogeneousCoefficients(0.5, 2.0, 1.0)
    )
    xs = np.linspace(-100, 100, 41)
    for t in (0, 1):
        assert np.isfinite(model.conditional_mean(t, xs)).all()


def test_treatment_contrast_polynomials():
    hom = hom_model()
    assert hom.treatment_contrast(123.4) == 0.5
    lin = OutcomeModel(
        Link.IDENTITY, Family.GAUSSIAN, LinearHeterogeneousCoefficients(0.0, 1.0, 1.0, 0.5)
    )
    assert lin.treatment_contrast(2.0) == 2.0
    quad = OutcomeModel(
        Link.IDENTITY, Family.GAUSSIAN, QuadraticCoefficients(0.0, 0.0, 1.0, 1.0, 0.0, 1.0)
    )
    assert quad.treatment_contrast(2.0) == 5.0
