"""Translation-invariant non-unitary Gaussian circuits via per-momentum Mobius maps."""
from .errors import *  # noqa: F401,F403
from .mobius import (
    Critical,
    FixedPoints,
    LayerSpec,
    NonCritical,
    amplitude,
    apply_mobius,
    classify_momentum,
    compose_round,
    fixed_points,
    layer_mobius,
    matrix_power,
    projective_distance,
)
from .models import (
    CriticalWindow,
    LogLawParams,
    VolumeParams,
    critical_window,
    cycle_spec,
    lambda_c_loglaw,
    lambda_c_volume,
    loglaw_matrix,
    volume_matrix,
    volume_round,
    z_coefficient,
)
from .steady_state import (
    Coefficients,
    MomentumGrid,
    Phase,
    SymbolPair,
    averaged_symbols,
    classify_phase,
    closed_form_fn,
    correlation_coefficients,
    evolve_amplitude,
)
from .entanglement import (
    EntropyReport,
    ExponentFit,
    SlopeResult,
    asymptotic_slope,
    build_correlation_matrix,
    entanglement_spectrum,
    entropy_density_integral,
    entropy_from_spectrum,
    fit_exponent,
    fit_slope,
    gamma_coefficient,
)
from .ed import (
    FiniteLatticeSpec,
    ancilla_weak_measurement,
    apply_layer_dense,
    finite_lattice_entropies,
    reduced_entropies,
    run_circuit,
)

__version__ = "0.1.0"
