"""Spectral simulator and verification lab for a stochastic NLS.

Simulates i du = -Delta u dt + lambda |u|^(alpha-1) u dt + nonlinear
multiplicative Stratonovich noise on a periodic box, with two integrators
(a mild-solution Picard fixed point with running-norm truncation, and an
exactly mass-conserving split-step reference), exact rational exponent
algebra, and a Monte Carlo harness for conservation, localization and
global-existence checks.
"""

from .errors import (
    ConfigError,
    CriticalDelta,
    EmptyTrajectory,
    GridMismatch,
    LengthMismatch,
    MaxItersExceeded,
    MeshMismatch,
    NoContraction,
    NotAdmissible,
    NotConservative,
    OutOfRange,
    SnlsError,
    SolverError,
    UnboundedCoefficient,
)
from .exponents import (
    BootstrapExponents,
    ModelParams,
    StrichartzPair,
    ZExponents,
    bootstrap_exponents,
    calculus_dichotomy_check,
    dichotomy_roots,
    gamma_global_bound,
    picard_window_length,
    strichartz_pair,
    strichartz_q,
    z_exponents,
)
from .grid_field import (
    ComplexField,
    Grid,
    Trajectory,
    bochner_norm,
    constant_field,
    gaussian_field,
    lp_norm,
    mass_outside_central_halfbox,
    plane_wave_field,
    random_field,
    z_process,
    zero_field,
)
from .noise import (
    BrownianPath,
    NoiseModel,
    coarsen_path,
    diffusion_only_exact,
    euler_maruyama_diffusion,
    heun_stratonovich_diffusion,
    make_noise_model,
    negate_path,
    noise_term,
    sample_brownian_path,
    stratonovich_drift,
)
from .propagator import (
    ModeForcing,
    SpectralPlan,
    duhamel_convolution,
    estimate_strichartz_constant,
    free_evolve,
    get_plan,
    stochastic_convolution,
)
from .dynamics import (
    TruncationState,
    ZPrefix,
    chained_z_value,
    detect_stopping_time,
    evaluate_phi,
    evaluate_phi_chained,
    power_nonlinearity,
    theta,
)
from .solver import (
    SimConfig,
    SolveReport,
    WindowRecord,
    materialize,
    path_coincidence_check,
    path_for,
    picard_solve,
    solve,
    splitstep_solve,
)
from .montecarlo import (
    EnsembleSummary,
    UniformityStudy,
    chebyshev_consistency,
    run_ensemble,
    truncation_uniformity_study,
)

__version__ = "0.1.0"
