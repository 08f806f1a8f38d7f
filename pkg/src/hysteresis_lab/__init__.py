"""Dynamic hysteresis and metastability in driven-dissipative Kerr resonators."""

from .analysis import (
    AreaScan,
    DoublePowerLawFit,
    FreezeOutScan,
    PowerLawFit,
    RelaxationFit,
    ResonanceMap,
    characteristic_time_map,
    constrained_characteristic_time,
    detect_crossover,
    find_local_minima,
    fit_double_power_law,
    fit_power_law,
    fit_relaxation_area,
    hysteresis_area,
    kz_asymptote,
    kz_scan,
    kz_window,
    local_log_slopes,
    run_area_scan,
    sweep_timescale,
)
from .dimer import (
    DimerParams,
    build_dimer_liouvillian,
    dimer_mf_rhs,
    dimer_mf_sweep,
    dimer_observables,
    dimer_steady_state,
    evolve_dimer,
    swap_defect,
)
from .errors import CutoffUnsafeError, HysteresisLabError, SchemaError, SimulationError
from .fock import (
    TAIL_TOL,
    DensityMatrix,
    ResonatorParams,
    coherent_state,
    create,
    destroy,
    drive_operator,
    expectation,
    mean_field_peak_population,
    number,
    photon_number,
    safe_cutoff,
    second_order_coherence,
    static_hamiltonian,
    thermal_state,
    with_auto_cutoff,
)
from .lindblad import evolve, lindblad_rhs
from .liouville import build_liouvillian, pack_state, unpack_state
from .mean_field import (
    BranchDiagram,
    FixedPoints,
    bistable_window,
    branch_gap_area,
    fixed_points,
    mf_branches,
    mf_rhs,
    mf_sweep,
)
from .parallel import deterministic_map
from .quasi_adiabatic import qa_rhs, qa_sweep
from .spectral import (
    SpectralResult,
    TransitionData,
    cutoff_shift_check,
    generator_spectrum,
    slow_mode_analysis,
    slow_mode_scan,
)
from .steady_state import analytic_coherence, analytic_population, hyp0f2, steady_state_numeric
from .sweeps import DimerTrace, HysteresisTrace, SweepProtocol

__version__ = "0.1.0"

__all__ = [
    "AreaScan",
    "BranchDiagram",
    "CutoffUnsafeError",
    "DensityMatrix",
    "DimerParams",
    "DimerTrace",
    "DoublePowerLawFit",
    "FixedPoints",
    "FreezeOutScan",
    "HysteresisLabError",
    "HysteresisTrace",
    "PowerLawFit",
    "RelaxationFit",
    "ResonanceMap",
    "ResonatorParams",
    "SchemaError",
    "SimulationError",
    "SpectralResult",
    "SweepProtocol",
    "TAIL_TOL",
    "TransitionData",
    "analytic_coherence",
    "analytic_population",
    "bistable_window",
    "branch_gap_area",
    "build_dimer_liouvillian",
    "build_liouvillian",
    "characteristic_time_map",
    "coherent_state",
    "constrained_characteristic_time",
    "create",
    "cutoff_shift_check",
    "destroy",
    "detect_crossover",
    "deterministic_map",
    "dimer_mf_rhs",
    "dimer_mf_sweep",
    "dimer_observables",
    "dimer_steady_state",
    "drive_operator",
    "evolve",
    "evolve_dimer",
    "expectation",
    "find_local_minima",
    "fit_double_power_law",
    "fit_power_law",
    "fit_relaxation_area",
    "fixed_points",
    "generator_spectrum",
    "hyp0f2",
    "hysteresis_area",
    "kz_asymptote",
    "kz_scan",
    "kz_window",
    "lindblad_rhs",
    "local_log_slopes",
    "mean_field_peak_population",
    "mf_branches",
    "mf_rhs",
    "mf_sweep",
    "number",
    "pack_state",
    "photon_number",
    "qa_rhs",
    "qa_sweep",
    "run_area_scan",
    "safe_cutoff",
    "second_order_coherence",
    "slow_mode_analysis",
    "slow_mode_scan",
    "static_hamiltonian",
    "steady_state_numeric",
    "swap_defect",
    "sweep_timescale",
    "thermal_state",
    "unpack_state",
    "with_auto_cutoff",
    "__version__",
]
