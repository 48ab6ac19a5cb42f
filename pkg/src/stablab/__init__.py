"""stablab: spectral stability lab for perturbed 2-D compressible shear flow."""
from .grid import Grid, SpectralField, make_grid, dealiased_product
from .operators import FrameSymbol, frame_symbol, apply_operator
from .multipliers import (
    MultiplierParams,
    MultiplierEval,
    phi,
    m1,
    m2,
    dlog_multipliers,
    audit_inequalities,
)
from .params import PhysParams
from .linear_modes import (
    ModeState,
    ModeTrajectory,
    linear_rhs,
    integrate_mode,
    toy_exact,
    envelope_scan,
)
from .energy import (
    EnergyWeights,
    WeightedUnknowns,
    weighted_unknowns,
    energy_family,
    total_energy,
    EnergyReport,
    DecayFit,
    fit_decay,
    zero_mode_norms,
)
from .solver import (
    SimState,
    StepperConfig,
    DensityBoundError,
    nonlinear_rhs,
    step,
    run_simulation,
    extract_ndw,
    w_equation_residual,
    mass_integral,
)
from .initial_data import make_initial_data, weighted_h4_norm

__version__ = "0.1.0"
