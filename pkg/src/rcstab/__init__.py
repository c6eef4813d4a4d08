"""Lyapunov stability regions and training-error maps for reservoir computers."""

__version__ = "0.1.0"

from .dynamics import (
    NodalDynamics,
    Polynomial,
    RatioCandidates,
    ScaledTanh,
    ShiftedNode,
    Sigmoid,
    ratio_candidates,
    stationarity_roots,
    with_param,
)
from .network import (
    ReservoirNetwork,
    SpectralSummary,
    alpha_max,
    construct_adjacency,
    critical_shifts,
    spectral_normalize,
)
from .reservoir import (
    DriveResult,
    TrainingResult,
    build_omega,
    drive_continuous,
    drive_discrete,
    fit_readout,
    spread,
    training_error,
)
from .signals import (
    SignalPair,
    SignalSpec,
    Trajectory,
    integrate_duffing,
    integrate_lorenz,
    make_signal_pair,
    normalize,
)
from .stability import (
    Regime,
    ShiftedDynamics,
    StabilityReport,
    analyze,
    basin_verify,
    cmax_continuous,
    cmax_discrete,
    fixed_point,
    kstar_continuous,
    kstar_discrete,
    kstar_nonhomogeneous,
    linear_stability,
)
from .sweep import (
    BasinMap,
    GridSpec,
    RuntimeParams,
    SweepConfig,
    SweepRecord,
    basin_map,
    boundary_curve,
    realization_stats,
    run_sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
