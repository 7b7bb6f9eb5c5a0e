"""Statistical estimation of fidelity for random circuit sampling experiments."""
from .errors import (
    ConvergenceError,
    DegenerateBinningError,
    DegenerateDenominatorError,
    DimensionError,
    DomainError,
    EmptyInputError,
    FlatLikelihoodError,
    MissingInputError,
    NoAcceptanceError,
    XebStatsError,
)
from .estimators import (
    Estimate,
    Method,
    MleConfig,
    estimator_general_moment,
    estimator_log,
    estimator_phi_ro_tilde,
    estimator_readout_moment,
    estimator_T,
    estimator_U,
    estimator_V,
    estimator_W,
    mle_asymmetric,
    mle_basic,
    mle_general,
    mle_readout,
)
from .gof import ChiSquareResult, HistogramSpec, chi_square, freq_scatter, histogram, min_chisq_phi
from .noise import (
    Basic,
    GeneralP,
    NoiseModel,
    ReadoutAsymmetric,
    ReadoutConstants,
    ReadoutSymmetric,
    Sample,
    asymmetric_signal_vector,
    draw_sample,
    draw_sample_with_rejection,
    readout_constants,
    readout_noise_vector,
    sample_model,
    sampling_probs,
)
from .prediction import (
    REFERENCE_TABLE,
    CircuitErrorProfile,
    fidelity_formula77,
    fidelity_simple,
    total_gate_fidelity,
)
from .probmodel import (
    MomentSummary,
    ProbabilityVector,
    SeedSpec,
    gen_porter_thomas,
    mixture_beta_density,
    mixture_exp_density,
    moments,
    theoretical_moment,
)
from .uncertainty import (
    ConfidenceInterval,
    VarianceReport,
    ci_conditional_combined,
    ci_conditional_single,
    ci_unconditional,
    fisher_info,
    mle_asymptotic_var,
    var_U_conditional,
    var_unconditional,
    var_V_conditional,
)

__version__ = "0.1.0"
