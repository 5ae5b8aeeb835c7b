import numpy as np
import pytest

from estimands import Link, NumericDomainError, Scale


def test_round_trip_identity_and_log():
    rng = np.random.default_rng(101)
    eta = rng.uniform(-30, 30, 10_000)
    for link in (Link.IDENTITY, Link.LOG):
        back = link.apply(link.inverse(eta))
        assert np.abs(back - eta).max() < 1e-10


def test_round_trip_logit_well_conditioned_range():
    rng = np.random.default_rng(202)
    eta = rng.uniform(-14, 14, 10_000)
    back = Link.LOGIT.apply(Link.LOGIT.inverse(eta))
    assert np.abs(back - eta).max() < 1e-10

    tight = rng.uniform(-10, 10, 10_000)
    back = Link.LOGIT.apply(Link.LOGIT.inverse(tight))
    assert np.abs(back - tight).max() < 1e-12


def test_round_trip_logit_conditioning_bound_on_full_range():
    # Beyond |eta| ~ 14 the float64 representation of probabilities near one
    # limits what any logit implementation can recover; the error must still
    # stay within the conditioning bound ~ eps * cosh(eta / 2)^2.
    rng = np.random.default_rng(303)
    eta = rng.uniform(-30, 30, 10_000)
    back = Link.LOGIT.apply(Link.LOGIT.inverse(eta))
    eps = np.finfo(float).eps
    bound = np.maximum(1e-10, 4.0 * eps * np.cosh(eta / 2.0) ** 2)
    assert (np.abs(back - eta) <= bound).all()


def test_inverse_strictly_monotone_increasing():
    eta = np.linspace(-30, 30, 1001)
    for link in Link:
        values = link.inverse(eta)
        assert (np.diff(values) > 0).all()


def test_inverse_ranges():
    eta = np.linspace(-30, 30, 201)
    p = Link.LOGIT.inverse(eta)
    assert ((p > 0) & (p < 1)).all()
    assert (Link.LOG.inverse(eta) > 0).all()


def test_scales():
    assert Link.IDENTITY.scale is Scale.MEAN_DIFFERENCE
    assert Link.LOG.scale is Scale.LOG_RISK_RATIO
    assert Link.LOGIT.scale is Scale.LOG_ODDS_RATIO


@pytest.mark.parametrize(
    "link,bad",
    [
        (Link.LOG, -1.0),
        (Link.LOG, 0.0),
        (Link.LOGIT, 0.0),
        (Link.LOGIT, 1.0),
        (Link.LOGIT, 1.5),
        (Link.IDENTITY, np.inf),
    ],
)
def test_apply_rejects_out_of_domain_means(link, bad):
    with pytest.raises(NumericDomainError):
        link.apply(bad)


def test_scalar_in_scalar_out():
    assert isinstance(Link.LOGIT.inverse(0.0), float)
    assert Link.LOGIT.inverse(0.0) == 0.5
