"""Semiclassical (coherent-field) limit: fixed points, stability, sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import SimulationError
from .fock import ResonatorParams
from .sweeps import HysteresisTrace, SweepProtocol


def mf_rhs(alpha: complex, drive: float, params: ResonatorParams) -> complex:
    """d(alpha)/dt for the coherent field amplitude in the rotating frame."""
    delta, u, g = params.detuning, params.kerr, params.decay
    return (1j * delta - 0.5 * g - 1j * u * abs(alpha) ** 2) * alpha - 1j * drive


def _amplitude_for(n: float, drive: float, params: ResonatorParams) -> complex:
    delta, u, g = params.detuning, params.kerr, params.decay
    return drive / (delta + 0.5j * g - u * n)


def _jacobian(alpha: complex, params: ResonatorParams) -> np.ndarray:
    """Linearization of the (Re alpha, Im alpha) flow around a fixed point."""
    delta, u, g = params.detuning, params.kerr, params.decay
    x, y = alpha.real, alpha.imag
    n = x * x + y * y
    return np.array(
        [
            [-0.5 * g + 2.0 * u * x * y, -(delta - u * n) + 2.0 * u * y * y],
            [(delta - u * n) - 2.0 * u * x * x, -0.5 * g - 2.0 * u * x * y],
        ]
    )


@dataclass
class FixedPoints:
    """Fixed points at one drive amplitude, ascending in population."""

    drive: float
    populations: np.ndarray
    amplitudes: np.ndarray
    stable: np.ndarray

    @property
    def bistable(self) -> bool:
        return len(self.populations) == 3

    def stable_low(self) -> tuple[float, complex]:
        idx = np.nonzero(self.stable)[0]
        if idx.size == 0:
            raise SimulationError("no stable semiclassical branch")
        i = idx[0]
        return float(self.populations[i]), complex(self.amplitudes[i])

    def stable_high(self) -> tuple[float, complex]:
        idx = np.nonzero(self.stable)[0]
        if idx.size == 0:
            raise SimulationError("no stable semiclassical branch")
        i = idx[-1]
        return float(self.populations[i]), complex(self.amplitudes[i])


def fixed_points(drive: float, params: ResonatorParams) -> FixedPoints:
    """Real roots of n[(detuning - kerr*n)^2 + decay^2/4] = drive^2, with stability."""
    if drive < 0:
        raise ValueError("drive amplitude must be non-negative")
    delta, u, g = params.detuning, params.kerr, params.decay
    if u == 0.0:
        roots = np.array([drive**2 / (delta**2 + 0.25 * g**2)])
    else:
        coeffs = [u**2, -2.0 * delta * u, delta**2 + 0.25 * g**2, -(drive**2)]
        raw = np.roots(coeffs)
        roots = np.sort(raw[np.abs(raw.imag) < 1e-9 * (1.0 + np.abs(raw.real))].real)
        roots = np.clip(roots[roots >= -1e-12], 0.0, None)
    amps = np.array([_amplitude_for(n, drive, params) for n in roots])
    stable = np.array(
        [np.linalg.eigvals(_jacobian(a, params)).real.max() < 1e-12 for a in amps]
    )
    return FixedPoints(drive=drive, populations=roots, amplitudes=amps, stable=stable)


def bistable_window(params: ResonatorParams) -> tuple[float, float] | None:
    """Drive interval with three fixed points, None below the detuning threshold."""
    delta, u, g = params.detuning, params.kerr, params.decay
    if u == 0.0 or delta <= math.sqrt(3.0) * g / 2.0:
        return None
    disc = delta**2 - 0.75 * g**2
    n_minus = (2.0 * delta - math.sqrt(disc)) / (3.0 * u)
    n_plus = (2.0 * delta + math.sqrt(disc)) / (3.0 * u)

    def drive_of(n: float) -> float:
        return math.sqrt(n * ((delta - u * n) ** 2 + 0.25 * g**2))

    return drive_of(n_plus), drive_of(n_minus)


@dataclass
class BranchDiagram:
    """Fixed-point branches over a drive grid.

    populations is (len(grid), 3) with NaN padding where fewer roots exist;
    stable carries matching boolean labels (False on padding).
    """

    drive_grid: np.ndarray
    populations: np.ndarray
    stable: np.ndarray
    root_counts: np.ndarray
    window: tuple[float, float] | None = field(default=None)

    @property
    def bistable_window(self) -> tuple[float, float] | None:
        return self.window


def mf_branches(drive_grid: np.ndarray, params: ResonatorParams) -> BranchDiagram:
    grid = np.atleast_1d(np.asarray(drive_grid, dtype=float))
    pops = np.full((grid.size, 3), np.nan)
    stab = np.zeros((grid.size, 3), dtype=bool)
    counts = np.zeros(grid.size, dtype=int)
    for i, f in enumerate(grid):
        fp = fixed_points(float(f), params)
        k = len(fp.populations)
        pops[i, :k] = fp.populations
        stab[i, :k] = fp.stable
        counts[i] = k
    window = bistable_window(params)
    return BranchDiagram(
        drive_grid=grid, populations=pops, stable=stab, root_counts=counts, window=window
    )


def branch_gap_area(params: ResonatorParams, points: int = 4001) -> float:
    """Static area between the stable branches across the bistable window."""
    window = bistable_window(params)
    if window is None:
        return 0.0
    lo, hi = window
    grid = np.linspace(lo, hi, points)
    gap = np.empty_like(grid)
    for i, f in enumerate(grid):
        fp = fixed_points(float(f), params)
        gap[i] = fp.populations[2] - fp.populations[0] if fp.bistable else 0.0
    return float(np.trapezoid(gap, grid))


def mf_sweep(
    protocol: SweepProtocol,
    params: ResonatorParams,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> HysteresisTrace:
    """Triangular sweep of the semiclassical field, starting on the low branch.

    The g2 columns are identically 1: the coherent-field ansatz has no number
    fluctuations beyond Poissonian.
    """
    _, alpha0 = fixed_points(protocol.drive_start, params).stable_low()

    def rhs(t, y):
        return [mf_rhs(y[0], protocol.drive(float(t)), params)]

    ramp = protocol.ramp_time
    sol_up = solve_ivp(
        rhs,
        (0.0, ramp),
        [alpha0],
        t_eval=protocol.up_times(),
        rtol=rtol,
        atol=atol,
        method="RK45",
    )
    if not sol_up.success:
        raise SimulationError(f"mean-field up leg failed: {sol_up.message}")
    sol_down = solve_ivp(
        rhs,
        (ramp, 2.0 * ramp),
        [sol_up.y[0, -1]],
        t_eval=protocol.down_times(),
        rtol=rtol,
        atol=atol,
        method="RK45",
    )
    if not sol_down.success:
        raise SimulationError(f"mean-field down leg failed: {sol_down.message}")

    n_up = np.abs(sol_up.y[0]) ** 2
    n_down = np.abs(sol_down.y[0][::-1]) ** 2
    ones = np.ones_like(n_up)
    return HysteresisTrace(
        protocol=protocol,
        drive=protocol.drive_grid(),
        n_up=n_up,
        n_down=n_down,
        g2_up=ones,
        g2_down=ones.copy(),
        metadata={"rtol": rtol, "atol": atol, "model": "mean-field"},
    )
