"""Marginal and conditional treatment-effect summary measures.

A calculus for MTE, CTEX, CTEM and PACTE under parametric outcome-generating
mechanisms; machine checks of their equality and covariate-law dependence
structure; a trial simulator with a GLM fitter; population-adjustment
estimators for anchored indirect comparisons (MAIC and both simulated
treatment comparison flavours); and a simulation bench quantifying the bias
from pooling incompatible summary measures.
"""

__version__ = "0.1.0"

from .adjustment import (
    CTEM_LABEL,
    MTE_LABEL,
    PACTE_LABEL,
    AdjustmentResult,
    CompatibilityReport,
    EstimandLabel,
    ITCResult,
    LabelKind,
    MaicWeights,
    Method,
    METHOD_SUMMARY_MEASURES,
    anchored_itc,
    compatibility_check,
    conditional_label,
    crude_estimate,
    maic_estimate,
    maic_weights,
    stc_gcomp,
    stc_plugin,
)
from .bench import (
    BcReporting,
    BenchReport,
    MethodPairing,
    ScenarioConfig,
    emit_report,
    run_scenario,
    true_estimands,
)
from .calculus import (
    CtexCurve,
    DependenceProbe,
    EqualityMatrix,
    EstimandReport,
    Verdict,
    closed_form_mte,
    ctem,
    ctex,
    ctex_curve,
    dependence_probe,
    equality_matrix,
    estimand_report,
    mte,
    pacte,
)
from .distributions import (
    DEFAULT_SETTINGS,
    Bernoulli,
    CovariateDistribution,
    Discrete,
    IndependentProduct,
    Normal,
    QuadratureSettings,
    expectation,
)
from .errors import (
    ArityError,
    ConfigError,
    DegenerateArmError,
    DegenerateTableError,
    EstimandError,
    InfeasibleTargetError,
    NumericDomainError,
    ScaleMismatchError,
    SeparationError,
    SingularDesignError,
)
from .figures import verify_figures
from .glm import GlmFit, GlmFormula, design_matrix, fit_glm
from .links import Link, Scale
from .models import (
    Family,
    HomogeneousCoefficients,
    LinearHeterogeneousCoefficients,
    OutcomeModel,
    QuadraticCoefficients,
)
from .trial import (
    AggregateSummary,
    TrialConfig,
    TrialIPD,
    aggregate,
    conditional_coefficient,
    ipd_from_csv,
    simulate_trial,
)
