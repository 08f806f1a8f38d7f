"""Time propagation of the driven-dissipative resonator through drive sweeps."""

from __future__ import annotations

import numpy as np

from .errors import SimulationError
from .fock import (
    G2_FLOOR,
    TAIL_TOL,
    DensityMatrix,
    ResonatorParams,
    create,
    destroy,
    drive_operator,
    static_hamiltonian,
)
from .integrate import propagate_leg
from .liouville import PackedGenerator, pack_state, packed_generator, single_resonator_parts
from .sweeps import HysteresisTrace, SweepProtocol

TRAJECTORY_TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-12


def lindblad_rhs(rho: np.ndarray, drive: float, params: ResonatorParams) -> np.ndarray:
    """Right-hand side d(rho)/dt at a fixed drive, direct matrix form.

    This is the reference construction; the propagation engine applies the
    same generator in sparse packed form and is tested against this function.
    """
    if drive < 0:
        raise ValueError("drive amplitude must be non-negative")
    dim = params.dim
    if rho.shape != (dim, dim):
        raise ValueError(f"state has shape {rho.shape}, expected {(dim, dim)}")
    a = destroy(dim)
    ad = create(dim)
    h = static_hamiltonian(params) + drive * drive_operator(dim)
    g, nth = params.decay, params.thermal
    out = 1j * (rho @ h - h @ rho)
    ar = a @ rho
    out += g * (1.0 + nth) * (ar @ ad - 0.5 * (ad @ ar + (rho @ ad) @ a))
    if nth > 0.0:
        adr = ad @ rho
        out += g * nth * (adr @ a - 0.5 * (a @ adr + (rho @ a) @ ad))
    return out


def run_packed_sweep(
    gen: PackedGenerator,
    y0: np.ndarray,
    protocol: SweepProtocol,
    rtol: float,
    atol: float,
    max_steps: int,
) -> tuple[np.ndarray, np.ndarray, dict]:
    """Both legs of a triangular sweep in packed coordinates.

    Returns per-leg sample blocks aligned to the ascending drive grid and the
    merged integrator statistics.
    """
    ramp = protocol.ramp_time
    rate = protocol.drive_span / ramp
    up, y_mid, stats_up = propagate_leg(
        gen, y0, 0.0, ramp, protocol.drive_start, rate, protocol.up_times(), rtol, atol, max_steps
    )
    down_t, y_end, stats_down = propagate_leg(
        gen,
        y_mid,
        ramp,
        2.0 * ramp,
        protocol.drive_start + protocol.drive_span,
        -rate,
        protocol.down_times(),
        rtol,
        atol,
        max_steps,
    )
    stats = {key: stats_up[key] + stats_down[key] for key in stats_up}
    return up, down_t[::-1], stats


def _diag_observables(populations: np.ndarray, g2_floor: float) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(populations.shape[1], dtype=np.float64)
    # rounding can leave populations at -1e-22; moments are clipped at zero
    n = np.maximum(populations @ k, 0.0)
    pair = np.maximum(populations @ (k * (k - 1.0)), 0.0)
    g2 = np.full_like(n, np.nan)
    ok = n >= g2_floor
    g2[ok] = pair[ok] / n[ok] ** 2
    return n, g2


def evolve(
    rho0: DensityMatrix | np.ndarray,
    protocol: SweepProtocol,
    params: ResonatorParams,
    *,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_steps: int = 50_000_000,
    g2_floor: float = G2_FLOOR,
    tail_tol: float = TAIL_TOL,
) -> HysteresisTrace:
    """Propagate through one triangular sweep starting from rho0.

    rho0 should be the stationary state at the starting drive (see
    steady_state_numeric); any physical state is accepted. Hermiticity is
    preserved structurally by the packed representation; trace conservation
    and positivity are checked at every sample. A violated Fock-tail bound
    does not abort the run, it clears the cutoff_safe metadata flag.
    """
    dm = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(np.asarray(rho0))
    dim = params.dim
    if dm.dim != dim:
        raise ValueError(f"state dimension {dm.dim} does not match params.dim {dim}")
    if dm.trace_error() > 1e-6:
        raise SimulationError("initial state is not normalized")

    l0, l1 = single_resonator_parts(params)
    gen = packed_generator(l0, l1, dim)
    y0 = pack_state(dm.matrix)
    up, down, stats = run_packed_sweep(gen, y0, protocol, rtol, atol, max_steps)

    pop_up = up[:, :dim]
    pop_down = down[:, :dim]
    n_up, g2_up = _diag_observables(pop_up, g2_floor)
    n_down, g2_down = _diag_observables(pop_down, g2_floor)

    all_pops = np.vstack([pop_up, pop_down])
    trace_err = float(np.abs(all_pops.sum(axis=1) - 1.0).max())
    if trace_err > TRAJECTORY_TRACE_TOL:
        raise SimulationError(f"trace drifted by {trace_err:.3e} along the trajectory")
    min_pop = float(all_pops.min())
    max_tail = float(all_pops[:, -1].max())

    metadata = {
        **stats,
        "rtol": rtol,
        "atol": atol,
        "max_trace_error": trace_err,
        "min_population": min_pop,
        "positivity_ok": bool(min_pop >= -POSITIVITY_TOL),
        "max_tail": max_tail,
        "tail_tol": tail_tol,
        "cutoff_safe": bool(max_tail <= tail_tol),
    }
    return HysteresisTrace(
        protocol=protocol,
        drive=protocol.drive_grid(),
        n_up=n_up,
        n_down=n_down,
        g2_up=g2_up,
        g2_down=g2_down,
        metadata=metadata,
    )
