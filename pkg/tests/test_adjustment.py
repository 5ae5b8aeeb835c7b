import math

import numpy as np
import pytest

from estimands import (
    AdjustmentResult,
    Bernoulli,
    ConfigError,
    CTEM_LABEL,
    Discrete,
    Family,
    GlmFormula,
    HomogeneousCoefficients,
    InfeasibleTargetError,
    LabelKind,
    LinearHeterogeneousCoefficients,
    Link,
    Method,
    METHOD_SUMMARY_MEASURES,
    MTE_LABEL,
    Normal,
    OutcomeModel,
    Scale,
    ScaleMismatchError,
    TrialConfig,
    anchored_itc,
    compatibility_check,
    conditional_label,
    crude_estimate,
    ctem,
    ctex,
    maic_estimate,
    maic_weights,
    mte,
    simulate_trial,
    stc_gcomp,
    stc_plugin,
)
from estimands.adjustment import results_csv

LOGIT_HOM = OutcomeModel(Link.LOGIT, Family.BERNOULLI, HomogeneousCoefficients(0.0, 2.0, 1.0))
LOGIT_LIN = OutcomeModel(
    Link.LOGIT, Family.BERNOULLI, LinearHeterogeneousCoefficients(0.0, 1.0, 0.8, 0.6)
)
IDENT_LIN = OutcomeModel(
    Link.IDENTITY, Family.GAUSSIAN, LinearHeterogeneousCoefficients(0.5, 1.0, 1.0, 0.5)
)


class TestMaicWeights:
    def test_already_balanced_target_gives_uniform_weights(self):
        rng = np.random.default_rng(1)
        x = rng.normal(0.3, 1.0, size=(500, 1))
        w = maic_weights(x, [x.mean()])
        assert np.abs(w.alpha).max() < 1e-6
        assert np.abs(w.weights - 1.0 / 500).max() < 1e-8
        assert w.ess == pytest.approx(500.0, rel=1e-6)

    def test_two_subject_analytic_case(self):
        w = maic_weights(np.array([[0.0], [1.0]]), [0.75])
        assert np.allclose(w.weights, [0.25, 0.75], atol=1e-10)
        assert w.alpha[0] == pytest.approx(math.log(3.0), abs=1e-8)

    def test_random_feasible_targets_match_moments(self):
        rng = np.random.default_rng(2)
        x = np.column_stack([rng.normal(0, 1, 400), rng.random(400)])
        for _ in range(100):
            q = rng.uniform(0.2, 0.8)
            target = np.quantile(x, q, axis=0)
            w = maic_weights(x, target)
            matched = w.weights @ x
            assert np.abs(matched - target).max() < 1e-8
            assert 0.0 < w.ess <= 400.0

    def test_infeasible_target_names_moment(self):
        rng = np.random.default_rng(3)
        x = rng.normal(0, 1, size=(100, 2))
        with pytest.raises(InfeasibleTargetError) as err:
            maic_weights(x, [0.0, 50.0])
        assert "moment 2" in str(err.value)

    def test_weight_shape_validation(self):
        with pytest.raises(ConfigError):
            maic_weights(np.zeros((10, 2)), [0.0])


class TestMaicEstimate:
    def test_uniform_weights_reduce_to_crude(self):
        ipd = simulate_trial(TrialConfig(LOGIT_HOM, Bernoulli(0.5), 2000, seed=21))
        w = maic_weights(ipd.x, [ipd.x.mean()])
        adj = maic_estimate(ipd, w, Scale.LOG_ODDS_RATIO)
        crude = crude_estimate(ipd, Scale.LOG_ODDS_RATIO)
        assert adj.estimate == pytest.approx(crude.estimate, abs=1e-12)
        assert adj.estimand_label == MTE_LABEL
        assert adj.method is Method.MAIC

    def test_weight_shift_tracks_target_population_mte(self):
        ipd = simulate_trial(TrialConfig(LOGIT_LIN, Bernoulli(0.5), 400_000, seed=22))
        w = maic_weights(ipd.x, [0.8])
        adj = maic_estimate(ipd, w, Scale.LOG_ODDS_RATIO)
        oracle = mte(LOGIT_LIN, Bernoulli(0.8))
        assert abs(adj.estimate - oracle) < 3 * adj.se

    def test_misaligned_weights_rejected(self):
        ipd = simulate_trial(TrialConfig(LOGIT_HOM, Bernoulli(0.5), 100, seed=1))
        w = maic_weights(np.zeros((50, 1)) + np.linspace(0, 1, 50)[:, None], [0.5])
        with pytest.raises(ConfigError):
            maic_estimate(ipd, w, Scale.LOG_ODDS_RATIO)


class TestStcPlugin:
    def test_noiseless_identity_exact(self):
        model = OutcomeModel(
            Link.IDENTITY,
            Family.GAUSSIAN,
            LinearHeterogeneousCoefficients(0.5, 1.0, 1.0, 0.5),
            noise_sd=0.0,
        )
        ipd = simulate_trial(TrialConfig(model, Normal(0.0, 1.0), 500, seed=23))
        target_mean = 0.8
        adj = stc_plugin(ipd, [target_mean], Link.IDENTITY)
        assert adj.estimate == pytest.approx(1.0 + 0.5 * target_mean, abs=1e-10)
        assert adj.estimand_label == CTEM_LABEL

    def test_index_population_target_matches_crude_identity(self):
        ipd = simulate_trial(TrialConfig(IDENT_LIN, Normal(0.3, 1.0), 200_000, seed=24))
        adj = stc_plugin(ipd, [ipd.x.mean()], Link.IDENTITY)
        crude = crude_estimate(ipd, Scale.MEAN_DIFFERENCE)
        se = math.hypot(adj.se, crude.se)
        assert abs(adj.estimate - crude.estimate) < 3 * se

    def test_requires_interaction_formula(self):
        ipd = simulate_trial(TrialConfig(IDENT_LIN, Normal(0.0, 1.0), 100, seed=1))
        with pytest.raises(ConfigError):
            stc_plugin(ipd, [0.0], Link.IDENTITY, formula=GlmFormula.MAIN_EFFECTS)


class TestStcGcomp:
    def test_identity_linear_coincides_with_plugin(self):
        ipd = simulate_trial(TrialConfig(IDENT_LIN, Normal(0.3, 1.0), 20_000, seed=25))
        target = Normal(0.1, 0.9)
        plug = stc_plugin(ipd, [target.mean()], Link.IDENTITY)
        gcomp = stc_gcomp(ipd, target, Link.IDENTITY, n_boot=16, seed=9)
        assert abs(gcomp.estimate - plug.estimate) < 1e-8
        assert gcomp.estimand_label == MTE_LABEL

    def test_logit_homogeneous_two_point_oracle(self):
        ipd = simulate_trial(TrialConfig(LOGIT_HOM, Bernoulli(0.5), 150_000, seed=26))
        gcomp = stc_gcomp(ipd, Bernoulli(0.5), Link.LOGIT, n_boot=64, seed=10)
        assert abs(gcomp.estimate - 0.8698220366296502) < 3 * gcomp.se

    def test_point_mass_target_recovers_ctex(self):
        model = OutcomeModel(
            Link.IDENTITY,
            Family.GAUSSIAN,
            LinearHeterogeneousCoefficients(0.5, 1.0, 1.0, 0.5),
            noise_sd=0.0,
        )
        ipd = simulate_trial(TrialConfig(model, Normal(0.0, 1.0), 400, seed=27))
        x0 = 1.3
        gcomp = stc_gcomp(
            ipd, Discrete((x0,), (1.0,)), Link.IDENTITY, n_boot=8, seed=11
        )
        assert gcomp.estimate == pytest.approx(ctex(model, x0), abs=1e-10)

    def test_bootstrap_seeded_and_deterministic(self):
        ipd = simulate_trial(TrialConfig(LOGIT_HOM, Bernoulli(0.5), 5000, seed=28))
        a = stc_gcomp(ipd, Bernoulli(0.6), Link.LOGIT, n_boot=32, seed=5)
        b = stc_gcomp(ipd, Bernoulli(0.6), Link.LOGIT, n_boot=32, seed=5)
        assert (a.estimate, a.se) == (b.estimate, b.se)


def test_identity_link_agreement_between_all_methods():
    ipd = simulate_trial(TrialConfig(IDENT_LIN, Normal(0.3, 1.0), 300_000, seed=29))
    target = Normal(0.5, 1.0)
    w = maic_weights(ipd.x, [target.mean()])
    maic = maic_estimate(ipd, w, Scale.MEAN_DIFFERENCE)
    plug = stc_plugin(ipd, [target.mean()], Link.IDENTITY)
    gcomp = stc_gcomp(ipd, target, Link.IDENTITY, n_boot=32, seed=12)
    for a, b in ((maic, plug), (maic, gcomp), (plug, gcomp)):
        assert abs(a.estimate - b.estimate) < 3 * math.hypot(a.se, b.se)


def test_logit_marginal_conditional_divergence_realized():
    model = OutcomeModel(Link.LOGIT, Family.BERNOULLI, HomogeneousCoefficients(0.0, 2.0, 1.0))
    ipd = simulate_trial(TrialConfig(model, Normal(0.0, 1.0), 1_000_000, seed=30))
    target_mean = float(ipd.x.mean())
    w = maic_weights(ipd.x, [target_mean])
    marginal = maic_estimate(ipd, w, Scale.LOG_ODDS_RATIO)
    conditional = stc_plugin(ipd, [target_mean], Link.LOGIT)
    gap = abs(marginal.estimate - conditional.estimate)
    assert gap > 3 * math.hypot(marginal.se, conditional.se)


class TestAnchoredItc:
    def test_arithmetic(self):
        ac = AdjustmentResult(0.5, 0.3, Scale.LOG_ODDS_RATIO, MTE_LABEL, Method.MAIC, "BC")
        bc = AdjustmentResult(0.2, 0.4, Scale.LOG_ODDS_RATIO, MTE_LABEL, Method.CRUDE, "BC")
        itc = anchored_itc(ac, bc)
        assert itc.delta_ab == pytest.approx(0.3)
        assert itc.se == pytest.approx(0.5)
        assert itc.population_tag == "BC"
        assert itc.components == (ac, bc)

    def test_null_contrast(self):
        ac = AdjustmentResult(0.37, 0.1, Scale.MEAN_DIFFERENCE, MTE_LABEL, Method.CRUDE, "BC")
        assert anchored_itc(ac, ac).delta_ab == 0.0

    def test_antisymmetry(self):
        ac = AdjustmentResult(0.5, 0.3, Scale.LOG_RISK_RATIO, MTE_LABEL, Method.MAIC, "BC")
        bc = AdjustmentResult(0.2, 0.4, Scale.LOG_RISK_RATIO, MTE_LABEL, Method.CRUDE, "BC")
        fwd, rev = anchored_itc(ac, bc), anchored_itc(bc, ac)
        assert fwd.delta_ab == -rev.delta_ab
        assert fwd.se == rev.se

    def test_scale_mismatch_is_fatal(self):
        ac = AdjustmentResult(0.5, 0.3, Scale.LOG_ODDS_RATIO, MTE_LABEL, Method.MAIC, "BC")
        bc = AdjustmentResult(0.2, 0.4, Scale.LOG_RISK_RATIO, MTE_LABEL, Method.CRUDE, "BC")
        with pytest.raises(ScaleMismatchError):
            anchored_itc(ac, bc)


class TestCompatibility:
    def test_matching_marginal_labels(self):
        ac = AdjustmentResult(0.5, 0.3, Scale.LOG_ODDS_RATIO, MTE_LABEL, Method.MAIC, "BC")
        bc = AdjustmentResult(0.2, 0.4, Scale.LOG_ODDS_RATIO, MTE_LABEL, Method.CRUDE, "BC")
        report = compatibility_check(ac, bc)
        assert report.compatible

    def test_marginal_vs_conditional(self):
        ac = AdjustmentResult(0.5, 0.3, Scale.LOG_ODDS_RATIO, MTE_LABEL, Method.MAIC, "BC")
        bc = AdjustmentResult(
            0.2, 0.4, Scale.LOG_ODDS_RATIO, conditional_label("age", "sex"), Method.REGRESSION, "BC"
        )
        report = compatibility_check(ac, bc)
        assert not report.compatible
        assert "marginal vs conditional" in report.diagnosis

    def test_conditioning_sets_differ(self):
        a = AdjustmentResult(
            0.1, 0.1, Scale.LOG_ODDS_RATIO, conditional_label("age"), Method.REGRESSION, "BC"
        )
        b = AdjustmentResult(
            0.1, 0.1, Scale.LOG_ODDS_RATIO, conditional_label("age", "sex"), Method.REGRESSION, "BC"
        )
        report = compatibility_check(a, b)
        assert not report.compatible
        assert "conditioning sets differ" in report.diagnosis

    def test_symmetry(self):
        a = AdjustmentResult(0.5, 0.3, Scale.LOG_ODDS_RATIO, MTE_LABEL, Method.MAIC, "BC")
        b = AdjustmentResult(
            0.2, 0.4, Scale.LOG_ODDS_RATIO, conditional_label("x1"), Method.REGRESSION, "BC"
        )
        fwd, rev = compatibility_check(a, b), compatibility_check(b, a)
        assert fwd == rev

    def test_scale_difference_diagnosed(self):
        a = AdjustmentResult(0.5, 0.3, Scale.LOG_ODDS_RATIO, MTE_LABEL, Method.MAIC, "BC")
        b = AdjustmentResult(0.2, 0.4, Scale.LOG_RISK_RATIO, MTE_LABEL, Method.CRUDE, "BC")
        report = compatibility_check(a, b)
        assert not report.compatible
        assert "scales differ" in report.diagnosis


def test_label_discipline_enforced():
    with pytest.raises(ConfigError):
        AdjustmentResult(0.1, 0.1, Scale.LOG_ODDS_RATIO, CTEM_LABEL, Method.MAIC, "BC")
    with pytest.raises(ConfigError):
        AdjustmentResult(0.1, 0.1, Scale.LOG_ODDS_RATIO, MTE_LABEL, Method.STC_PLUGIN, "BC")
    with pytest.raises(ConfigError):
        conditional_label()


def test_method_taxonomy_covers_all_documented_approaches():
    assert METHOD_SUMMARY_MEASURES["matching_adjusted_indirect_comparison"] == (LabelKind.MTE,)
    assert METHOD_SUMMARY_MEASURES["simulated_treatment_comparison_plugin"] == (LabelKind.CTEM,)
    assert METHOD_SUMMARY_MEASURES["simulated_treatment_comparison_gcomputation"] == (LabelKind.MTE,)
    assert set(METHOD_SUMMARY_MEASURES["multilevel_network_meta_regression"]) == {
        LabelKind.PACTE,
        LabelKind.MTE,
    }
    assert METHOD_SUMMARY_MEASURES["network_meta_interpolation"] == (LabelKind.CTEM,)
    assert METHOD_SUMMARY_MEASURES["cross_network_meta_regression"] == (LabelKind.CTEM,)


def test_results_csv_columns():
    ac = AdjustmentResult(0.5, 0.3, Scale.LOG_ODDS_RATIO, MTE_LABEL, Method.MAIC, "BC")
    bc = AdjustmentResult(0.2, 0.4, Scale.LOG_ODDS_RATIO, MTE_LABEL, Method.CRUDE, "BC")
    text = results_csv([ac, bc, anchored_itc(ac, bc)])
    lines = text.strip().splitlines()
    assert lines[0] == "kind,method,estimand_label,scale,estimate,se,population"
    assert len(lines) == 4
    assert lines[3].startswith("anchored_itc,maic-minus-crude,MTE-minus-MTE,log_odds_ratio,")
