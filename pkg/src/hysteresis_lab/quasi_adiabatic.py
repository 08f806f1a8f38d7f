"""Population ODE closed with the instantaneous analytic steady-state coherence."""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .errors import SimulationError
from .fock import ResonatorParams
from .steady_state import analytic_coherence, analytic_population
from .sweeps import HysteresisTrace, SweepProtocol


def qa_rhs(n: float, drive: float, params: ResonatorParams) -> float:
    """dn/dt with the coherence slaved to its steady value at the current drive.

    The drive term's sign makes the constant-drive fixed point coincide with
    the exact stationary population identity n = -2 F Im<a> / decay.
    """
    if params.thermal != 0.0:
        raise ValueError("closure holds only for a zero-temperature bath")
    coherence = analytic_coherence(drive, params)
    return -params.decay * n - 2.0 * drive * coherence.imag


def qa_sweep(
    protocol: SweepProtocol,
    params: ResonatorParams,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> HysteresisTrace:
    """Triangular sweep of the closed population ODE; g2 is undefined here."""
    n0 = analytic_population(protocol.drive_start, params)

    def rhs(t, y):
        return [qa_rhs(float(y[0]), protocol.drive(float(t)), params)]

    ramp = protocol.ramp_time
    sol_up = solve_ivp(
        rhs, (0.0, ramp), [n0], t_eval=protocol.up_times(), rtol=rtol, atol=atol
    )
    if not sol_up.success:
        raise SimulationError(f"quasi-adiabatic up leg failed: {sol_up.message}")
    sol_down = solve_ivp(
        rhs,
        (ramp, 2.0 * ramp),
        [sol_up.y[0, -1]],
        t_eval=protocol.down_times(),
        rtol=rtol,
        atol=atol,
    )
    if not sol_down.success:
        raise SimulationError(f"quasi-adiabatic down leg failed: {sol_down.message}")

    n_up = np.maximum(sol_up.y[0], 0.0)
    n_down = np.maximum(sol_down.y[0][::-1], 0.0)
    undefined = np.full_like(n_up, np.nan)
    return HysteresisTrace(
        protocol=protocol,
        drive=protocol.drive_grid(),
        n_up=n_up,
        n_down=n_down,
        g2_up=undefined,
        g2_down=undefined.copy(),
        metadata={"rtol": rtol, "atol": atol, "model": "quasi-adiabatic"},
    )
