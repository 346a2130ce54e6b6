"""Two-level particle in a thermal magnetic noise field: decay constant and weak dwell time."""

from .dynamics import (
    BlochState,
    DensityMatrix,
    DissipatorMode,
    EvolutionConfig,
    Trajectory,
    bloch_rhs,
    bloch_to_density,
    density_to_bloch,
    evolve,
    lindblad_rhs,
)
from .errors import (
    ConvergenceError,
    DegenerateDecayError,
    DwellError,
    NumericalError,
    ParameterError,
    QuadratureError,
    StateError,
)
from .model import BathParams, DriveField, SystemParams, planck_occupation, thermal_weight
from .stationary import (
    DecayBreakdown,
    consistency_report,
    decay_constant,
    evolution_exponent,
    stationary_state,
)
from .sweep import SweepConfig, SweepRow, run_sweep
from .weakmeas import (
    BarrierWindow,
    LadderConfig,
    MeasurementWindow,
    barrier_indicator,
    dwell_approx,
    dwell_closed,
    dwell_integral,
    dwell_resonant,
    dwell_thermal,
    free_evolution,
    ladder_decay,
    u00,
    un0,
    weak_projection,
)

__version__ = "0.1.0"
