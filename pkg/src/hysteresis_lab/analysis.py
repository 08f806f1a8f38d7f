"""Loop areas, power-law fits, resonance maps, and sweep-rate windows."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, curve_fit

from .errors import SimulationError
from .fock import DensityMatrix, ResonatorParams, with_auto_cutoff
from .lindblad import evolve
from .mean_field import bistable_window, mf_sweep
from .parallel import deterministic_map
from .quasi_adiabatic import qa_sweep
from .spectral import SpectralResult, TransitionData
from .steady_state import steady_state_numeric
from .sweeps import DimerTrace, HysteresisTrace, SweepProtocol

MIN_POINTS_PER_REGIME = 6


def hysteresis_area(trace: HysteresisTrace | DimerTrace) -> float:
    """Area enclosed between the legs: integral of |n_down - n_up| over drive.

    Dimer traces are measured on the first site's population.
    """
    if isinstance(trace, DimerTrace):
        up, down = trace.n1_up, trace.n1_down
    else:
        up, down = trace.n_up, trace.n_down
    if up.shape != down.shape or up.shape != trace.drive.shape:
        raise ValueError("trace legs do not share one drive grid")
    return float(np.trapezoid(np.abs(down - up), trace.drive))


# ---------------------------------------------------------------------------
# Power-law fitting


@dataclass
class PowerLawFit:
    exponent: float
    exponent_stderr: float
    log_amplitude: float


@dataclass
class DoublePowerLawFit:
    exponent_slow: float
    stderr_slow: float
    exponent_fast: float
    stderr_fast: float
    crossover: float
    characteristic_time: float


@dataclass
class RelaxationFit:
    """A(t) = offset + amplitude * t**(-exponent), offset constrained >= 0."""

    offset: float
    amplitude: float
    exponent: float
    offset_stderr: float
    exponent_stderr: float


def local_log_slopes(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Segment-wise d log y / d log x and the geometric segment midpoints."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slopes = np.diff(ly) / np.diff(lx)
    mids = np.exp(0.5 * (lx[1:] + lx[:-1]))
    return mids, slopes


def detect_crossover(x: np.ndarray, y: np.ndarray) -> float:
    """Boundary between the two power-law regimes of a decaying scan.

    The local slope is compared against the midpoint of the fast-side and
    slow-side plateau slopes (each estimated from two edge segments); the
    first crossing scanned from the fast side, log-interpolated, is the
    boundary. Indistinguishable plateaus put the boundary at x[0].
    """
    if len(x) < 4:
        raise ValueError("need at least 4 points to locate a crossover")
    mids, slopes = local_log_slopes(x, y)
    fast = slopes[:2].mean()
    slow = slopes[-2:].mean()
    if abs(fast - slow) < 0.1:
        return float(x[0])
    midway = 0.5 * (fast + slow)
    crossed = (slopes - midway) * np.sign(slow - fast) >= 0
    idx = np.argmax(crossed)
    if idx == 0:
        return float(x[0])
    m0, m1 = np.log(mids[idx - 1]), np.log(mids[idx])
    s0, s1 = slopes[idx - 1], slopes[idx]
    frac = (midway - s0) / (s1 - s0) if s1 != s0 else 0.5
    return float(np.exp(m0 + frac * (m1 - m0)))


def fit_power_law(x: np.ndarray, y: np.ndarray) -> PowerLawFit:
    """Log-log linear least squares with the standard error of the slope."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if len(lx) < 3:
        (slope, intercept) = np.polyfit(lx, ly, 1)
        return PowerLawFit(float(slope), np.nan, float(intercept))
    (slope, intercept), cov = np.polyfit(lx, ly, 1, cov=True)
    return PowerLawFit(float(slope), float(np.sqrt(cov[0, 0])), float(intercept))


def fit_double_power_law(
    ramp_times: np.ndarray, areas: np.ndarray, drive_span: float
) -> DoublePowerLawFit:
    """Two-regime fit of an area scan plus the slow-law characteristic time.

    The slow regime must decay (non-monotone trends are rejected). The
    characteristic time comes from a slope-constrained intercept,
    A = (t / (time * span))^-1, using only points past 3x the crossover.
    """
    t = np.asarray(ramp_times, float)
    a = np.asarray(areas, float)
    if np.any(a <= 0):
        raise ValueError("areas must be positive for log-log fitting")
    order = np.argsort(t)
    t, a = t[order], a[order]
    cross = detect_crossover(t, a)
    fast_mask = t <= cross
    slow_mask = t > cross
    if fast_mask.sum() < MIN_POINTS_PER_REGIME or slow_mask.sum() < MIN_POINTS_PER_REGIME:
        raise ValueError(
            f"need at least {MIN_POINTS_PER_REGIME} points per regime "
            f"(got {int(fast_mask.sum())} fast, {int(slow_mask.sum())} slow)"
        )
    fast = fit_power_law(t[fast_mask], a[fast_mask])
    slow = fit_power_law(t[slow_mask], a[slow_mask])
    if slow.exponent >= 0:
        raise ValueError("slow-regime trend is not decaying; rejecting the scan")
    tail = t > 3.0 * cross
    if not np.any(tail):
        raise ValueError("no points beyond 3x the crossover for the intercept")
    time = float(np.exp(np.mean(np.log(a[tail]) + np.log(t[tail]))) / drive_span)
    return DoublePowerLawFit(
        exponent_slow=slow.exponent,
        stderr_slow=slow.exponent_stderr,
        exponent_fast=fast.exponent,
        stderr_fast=fast.exponent_stderr,
        crossover=cross,
        characteristic_time=time,
    )


def constrained_characteristic_time(
    rates: np.ndarray, areas: np.ndarray
) -> float:
    """Slope -1 intercept on A(rate) with rate = t / span: A = time / rate."""
    r = np.asarray(rates, float)
    a = np.asarray(areas, float)
    return float(np.exp(np.mean(np.log(a) + np.log(r))))


def fit_relaxation_area(
    ramp_times: np.ndarray, areas: np.ndarray, *, exponent_guess: float = 2.0 / 3.0
) -> RelaxationFit:
    """Fit A = offset + amplitude * t**(-exponent) with offset bounded at 0.

    Residuals are taken on log A so both regimes weigh in; the offset keeps
    any static loop contribution out of the exponent.
    """
    t = np.asarray(ramp_times, float)
    a = np.asarray(areas, float)
    if np.any(a <= 0):
        raise ValueError("areas must be positive")
    a_floor = float(a.min())

    def model(tt, offset, amplitude, exponent):
        return np.log(offset + amplitude * tt ** (-exponent))

    guess = (
        max(0.5 * a_floor, 1e-12),
        (a[np.argmin(t)] - 0.5 * a_floor) * t.min() ** exponent_guess,
        exponent_guess,
    )
    popt, pcov = curve_fit(
        model,
        t,
        np.log(a),
        p0=guess,
        bounds=([0.0, 1e-300, 0.05], [a_floor, np.inf, 3.0]),
        maxfev=20000,
    )
    err = np.sqrt(np.diag(pcov))
    return RelaxationFit(
        offset=float(popt[0]),
        amplitude=float(popt[1]),
        exponent=float(popt[2]),
        offset_stderr=float(err[0]),
        exponent_stderr=float(err[2]),
    )


# ---------------------------------------------------------------------------
# Area scans


@dataclass
class AreaScan:
    """Loop areas over a grid of ramp times at one fixed drive window.

    rates holds ramp_times / drive_span (the sweep-slowness axis used for
    all fits and plots); kind names the engine that produced the areas.
    """

    kind: str
    ramp_times: np.ndarray
    areas: np.ndarray
    drive_span: float
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def rates(self) -> np.ndarray:
        return self.ramp_times / self.drive_span


def _area_worker(task: dict[str, Any]) -> tuple[float, dict[str, Any]]:
    kind = task["kind"]
    protocol: SweepProtocol = task["protocol"]
    if kind == "quantum":
        trace = evolve(
            DensityMatrix(task["rho0"]),
            protocol,
            task["params"],
            rtol=task["rtol"],
            atol=task["atol"],
        )
    elif kind == "mean-field":
        trace = mf_sweep(protocol, task["params"])
    elif kind == "qa":
        trace = qa_sweep(protocol, task["params"])
    elif kind == "dimer":
        from .dimer import evolve_dimer

        trace = evolve_dimer(
            DensityMatrix(task["rho0"]),
            protocol,
            task["params"],
            rtol=task["rtol"],
            atol=task["atol"],
        )
    elif kind == "dimer-mean-field":
        from .dimer import dimer_mf_sweep

        trace = dimer_mf_sweep(protocol, task["params"])
    else:
        raise ValueError(f"unknown scan kind: {kind}")
    meta = {
        "cutoff_safe": trace.metadata.get("cutoff_safe", True),
        "positivity_ok": trace.metadata.get("positivity_ok", True),
    }
    return hysteresis_area(trace), meta


def run_area_scan(
    kind: str,
    rates: Sequence[float],
    drive_start: float,
    drive_span: float,
    params,
    *,
    samples: int = 201,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    jobs: int = 1,
) -> AreaScan:
    """Loop area at each rate = ramp_time / drive_span, slowest rate last.

    Quantum flavors start every sweep from the stationary state at the
    starting drive, computed once and shared across the grid.
    """
    rate_arr = np.sort(np.asarray(list(rates), dtype=float))
    if np.any(rate_arr <= 0):
        raise ValueError("rates must be positive")
    ramp_times = rate_arr * drive_span

    rho0 = None
    if kind == "quantum":
        rho0 = steady_state_numeric(drive_start, params).matrix
    elif kind == "dimer":
        from .dimer import dimer_steady_state

        rho0 = dimer_steady_state(drive_start, params).matrix

    tasks = [
        {
            "kind": kind,
            "protocol": SweepProtocol(drive_start, drive_span, float(t), samples),
            "params": params,
            "rho0": rho0,
            "rtol": rtol,
            "atol": atol,
        }
        for t in ramp_times
    ]
    results = deterministic_map(_area_worker, tasks, jobs)
    areas = np.array([a for a, _ in results])
    metadata = {
        "kind": kind,
        "drive_start": drive_start,
        "samples": samples,
        "cutoff_safe": all(m["cutoff_safe"] for _, m in results),
        "positivity_ok": all(m["positivity_ok"] for _, m in results),
    }
    return AreaScan(
        kind=kind,
        ramp_times=ramp_times,
        areas=areas,
        drive_span=drive_span,
        metadata=metadata,
    )


# ---------------------------------------------------------------------------
# Resonance map


@dataclass
class ResonanceMap:
    kerr_grid: np.ndarray
    characteristic_times: np.ndarray
    windows: list[tuple[float, float]]
    minima: np.ndarray


def find_local_minima(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Interior local minima of a sampled curve, parabolically refined."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    out = []
    for i in range(1, len(y) - 1):
        if y[i] < y[i - 1] and y[i] < y[i + 1]:
            denom = (y[i - 1] - 2.0 * y[i] + y[i + 1])
            shift = 0.0 if denom <= 0 else 0.5 * (y[i - 1] - y[i + 1]) / denom
            step = 0.5 * (x[i + 1] - x[i - 1])
            out.append(float(x[i] + np.clip(shift, -1.0, 1.0) * step))
    return np.array(out)


def _map_window(params: ResonatorParams, margin: float) -> tuple[float, float]:
    window = bistable_window(params)
    if window is None:
        raise SimulationError(
            f"no bistable window at kerr={params.kerr}, detuning={params.detuning}"
        )
    lo, hi = window
    width = hi - lo
    start = max(0.0, lo - margin * width)
    return start, (hi + margin * width) - start


def characteristic_time_map(
    kerr_grid: Sequence[float],
    base: ResonatorParams,
    rates: Sequence[float],
    *,
    margin: float = 0.75,
    samples: int = 201,
    jobs: int = 1,
) -> ResonanceMap:
    """Slow-sweep characteristic time versus interaction strength.

    Each grid point scans its own drive window (the bistable interval plus
    margins) at the given slow rates; the time is the slope-constrained
    intercept, so the rates must already sit in the decaying regime.
    """
    kerr_arr = np.asarray(list(kerr_grid), dtype=float)
    times = np.empty_like(kerr_arr)
    windows: list[tuple[float, float]] = []
    for i, u in enumerate(kerr_arr):
        params = base.replace(kerr=float(u))
        start, span = _map_window(params, margin)
        params = with_auto_cutoff(params, start + span)
        scan = run_area_scan(
            "quantum",
            rates,
            start,
            span,
            params,
            samples=samples,
            jobs=jobs,
        )
        times[i] = constrained_characteristic_time(scan.rates, scan.areas)
        windows.append((start, start + span))
    minima = find_local_minima(kerr_arr, times)
    return ResonanceMap(
        kerr_grid=kerr_arr,
        characteristic_times=times,
        windows=windows,
        minima=minima,
    )


# ---------------------------------------------------------------------------
# Sweep-rate (freeze-out) window


def sweep_timescale(
    drive: np.ndarray, ramp_time: float, transition_drive: float, drive_span: float
) -> np.ndarray:
    """Time left to reach the transition at the current sweep rate."""
    return ramp_time * np.abs(transition_drive - np.asarray(drive, float)) / drive_span


def _relaxation_interpolant(results: Sequence[SpectralResult]) -> PchipInterpolator:
    drives = np.array([r.drive for r in results])
    times = np.array([r.relaxation_time for r in results])
    order = np.argsort(drives)
    return PchipInterpolator(drives[order], np.log(times[order]))


def kz_window(
    ramp_time: float,
    results: Sequence[SpectralResult],
    transition: TransitionData,
    drive_span: float,
) -> float:
    """Width of the drive interval where the sweep outruns relaxation.

    On each side of the transition the edge solves
    ramp_time * |F - F_c| / span = tau_R(F) by bracketed root finding on the
    scanned relaxation-time curve; the scan must contain both edges.
    """
    interp = _relaxation_interpolant(results)
    drives = np.sort(np.array([r.drive for r in results]))
    f_c = transition.transition_drive

    def gap(f: float) -> float:
        return ramp_time * abs(f - f_c) / drive_span - float(np.exp(interp(f)))

    edges = []
    for side in (-1.0, 1.0):
        outward = drives[drives * side > f_c * side]
        if side < 0:
            outward = outward[::-1]
        bracket = None
        prev = f_c
        for f in outward:
            if gap(float(f)) > 0.0:
                bracket = (prev, float(f))
                break
            prev = float(f)
        if bracket is None:
            raise SimulationError(
                "freeze-out edge lies outside the scanned drive range"
            )
        lo, hi = min(bracket), max(bracket)
        edges.append(brentq(gap, lo, hi, xtol=1e-12))
    return float(edges[1] - edges[0])


def kz_asymptote(
    ramp_time: float, transition: TransitionData, drive_span: float
) -> float:
    """Slow-sweep limit of the freeze-out width: 2 tau_T span / ramp_time."""
    return 2.0 * transition.tunneling_time * drive_span / ramp_time


@dataclass
class FreezeOutScan:
    ramp_times: np.ndarray
    widths: np.ndarray
    asymptotes: np.ndarray
    transition: TransitionData
    drive_span: float


def kz_scan(
    ramp_times: Sequence[float],
    results: Sequence[SpectralResult],
    transition: TransitionData,
    drive_span: float,
) -> FreezeOutScan:
    t_arr = np.sort(np.asarray(list(ramp_times), dtype=float))
    widths = np.array([kz_window(float(t), results, transition, drive_span) for t in t_arr])
    asym = np.array([kz_asymptote(float(t), transition, drive_span) for t in t_arr])
    return FreezeOutScan(
        ramp_times=t_arr,
        widths=widths,
        asymptotes=asym,
        transition=transition,
        drive_span=drive_span,
    )
