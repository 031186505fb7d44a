"""FitzHugh-Nagumo activator-inhibitor systems with rapidly oscillating
periodic coefficients: direct simulation, the two-scale homogenized limit,
pulse construction from a guiding reaction-diffusion system, and quantitative
verification of the first-order homogenization error."""

from .errors import (
    BlowUp,
    DegenerateFit,
    GridMismatch,
    NoPulse,
    NotDecaying,
    NotSettled,
    ParseError,
    SpeedZero,
    TailTooShort,
    UnsupportedOperator,
    ValidationError,
)
from .fields import (
    CellGrid,
    Field1D,
    MacroGrid,
    NormReport,
    TwoScaleField,
    cell_average,
    cell_derivative,
    h1_dual_norm,
    implicit_diffusion_solve,
    l2_norm,
    linf_norm,
    norm_report,
    spectral_derivative,
)
from .guiding import (
    GuidingPulse,
    GuidingState,
    extract_pulse,
    seed_bump,
    step_guiding,
    tail_decay_rate,
    wave_speed,
)
from .microcell import (
    CellMode,
    CoefficientSet,
    CubicNonlinearity,
    EigenDecomposition,
    GuidingParams,
    apply_cell_operator,
    decompose,
    eigen_residuals,
    guiding_params,
    project,
    sample_coefficients,
)
from .presets import PRESETS, Preset, get_preset, guiding_parameters
from .pulse import (
    DecayReport,
    ModeProfile,
    ResidualReport,
    TwoScalePulse,
    assemble,
    comoving_residual,
    convolve_mode,
    decay_report,
)
from .simulate import (
    EpsState,
    SolverConfig,
    TwoScaleState,
    freeze_cell_coefficients,
    freeze_eps_coefficients,
    run,
    step_eps,
    step_twoscale,
)
from .verify import (
    DualNormReport,
    ErrorSample,
    ErrorSeries,
    GrowthBound,
    RateFit,
    StabilityReport,
    check_dual_norm_lemma,
    error_sample,
    error_series,
    fit_rate,
    growth_bound_check,
    reconstruct,
    stability_experiment,
    sweep_error,
    unfold,
)

__version__ = "0.1.0"
