"""Generator eigenanalysis: relaxation rates, soft-mode window, transition point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SimulationError
from .fock import ResonatorParams
from .liouville import build_liouvillian

NULL_TOL = 1e-9
IM_TOL = 1e-8
PAIR_RTOL = 1e-6


@dataclass
class SpectralResult:
    """Eigenvalue analysis of the generator at one drive amplitude.

    eigenvalues are sorted by descending real part. slow_eigenvalue is the
    nonzero eigenvalue with the largest real part; relaxation_time is
    -1/Re of it. is_soft marks a numerically real slow eigenvalue;
    has_conjugate_partner marks the paired-mode structure away from the
    soft window.
    """

    drive: float
    eigenvalues: np.ndarray
    slow_eigenvalue: complex
    relaxation_time: float
    is_soft: bool
    has_conjugate_partner: bool


@dataclass
class TransitionData:
    """Peak of the relaxation time over drive.

    transition_drive sits inside soft_window and tunneling_time equals the
    relaxation time evaluated at transition_drive.
    """

    transition_drive: float
    tunneling_time: float
    soft_window: tuple[float, float]


def generator_spectrum(drive: float, params: ResonatorParams) -> np.ndarray:
    """All eigenvalues of the dense generator, sorted by descending real part."""
    mat = build_liouvillian(drive, params)
    vals = scipy.linalg.eigvals(mat, check_finite=False, overwrite_a=True)
    return vals[np.argsort(-vals.real)]


def _classify(drive: float, vals: np.ndarray, decay: float) -> SpectralResult:
    null_mask = np.abs(vals) < NULL_TOL * decay
    n_null = int(null_mask.sum())
    if n_null != 1:
        raise SimulationError(
            f"expected one stationary eigenvalue at drive={drive}, found {n_null}"
        )
    if np.any(vals.real[~null_mask] >= 0.0):
        raise SimulationError(f"non-decaying excitation eigenvalue at drive={drive}")
    rest = vals[~null_mask]
    slow = rest[np.argmax(rest.real)]
    scale = 1.0 + abs(slow)
    partner = bool(
        np.any(np.abs(rest - np.conj(slow)) < PAIR_RTOL * scale)
        and abs(slow.imag) > IM_TOL * decay
    )
    return SpectralResult(
        drive=drive,
        eigenvalues=vals,
        slow_eigenvalue=complex(slow),
        relaxation_time=-1.0 / slow.real,
        is_soft=bool(abs(slow.imag) < IM_TOL * decay),
        has_conjugate_partner=partner,
    )


def slow_mode_analysis(drive: float, params: ResonatorParams) -> SpectralResult:
    return _classify(drive, generator_spectrum(drive, params), params.decay)


def _parabolic_peak(x: np.ndarray, y: np.ndarray, i: int) -> tuple[float, float]:
    """Vertex of the parabola through points i-1, i, i+1 (log-y recommended)."""
    if i == 0 or i == len(x) - 1:
        return float(x[i]), float(y[i])
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a >= 0.0:
        return float(x1), float(y1)
    xv = -b / (2.0 * a)
    if not (min(x0, x2) <= xv <= max(x0, x2)):
        return float(x1), float(y1)
    return float(xv), float(y1)


def slow_mode_scan(
    drive_grid: np.ndarray,
    params: ResonatorParams,
    *,
    jobs: int = 1,
) -> tuple[list[SpectralResult], TransitionData]:
    """Per-drive eigenanalysis plus the refined relaxation-time peak.

    The peak drive is refined parabolically on log relaxation time and then
    resolved by one extra eigensolve, so the reported tunneling time is an
    actual relaxation time, not an interpolation.
    """
    from .parallel import deterministic_map

    grid = np.asarray(drive_grid, dtype=float)
    if grid.size < 3:
        raise ValueError("drive grid must have at least 3 points")
    spectra = deterministic_map(_scan_worker, [(float(f), params) for f in grid], jobs)
    results = [_classify(f, vals, params.decay) for f, vals in zip(grid, spectra)]

    tau = np.array([r.relaxation_time for r in results])
    i_peak = int(np.argmax(tau))
    drive_c, _ = _parabolic_peak(grid, np.log(tau), i_peak)
    peak = results[i_peak]
    if drive_c != grid[i_peak]:
        peak = slow_mode_analysis(drive_c, params)
        if peak.relaxation_time < tau[i_peak]:
            peak = results[i_peak]

    soft = [r.drive for r in results if r.is_soft]
    if soft and soft[0] <= peak.drive <= soft[-1]:
        window = (soft[0], soft[-1])
    else:
        window = (peak.drive, peak.drive)
    transition = TransitionData(
        transition_drive=peak.drive,
        tunneling_time=peak.relaxation_time,
        soft_window=window,
    )
    return results, transition


def _scan_worker(task: tuple[float, ResonatorParams]) -> np.ndarray:
    drive, params = task
    return generator_spectrum(drive, params)


def cutoff_shift_check(
    drive: float, params: ResonatorParams, *, shift: int = 6
) -> float:
    """Relative change of the slow eigenvalue when the basis grows by `shift`."""
    base = slow_mode_analysis(drive, params).slow_eigenvalue
    grown = slow_mode_analysis(
        drive, params.replace(cutoff=params.cutoff + shift)
    ).slow_eigenvalue
    return abs(grown - base) / abs(base)
