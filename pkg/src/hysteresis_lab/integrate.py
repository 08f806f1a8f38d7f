"""Adaptive Dormand-Prince 5(4) propagation of the packed real state.

The generator is applied as two sparse CSR matrix-vector products per
derivative evaluation (static part plus drive part scaled by the
instantaneous amplitude). Sample times are hit through the standard quartic
dense-output interpolant, so the accepted step sequence is never distorted
by output requests. The hot loop is numba-compiled; without numba the same
code runs in plain Python at reduced speed.
"""

from __future__ import annotations

import numpy as np

from .errors import SimulationError

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency in practice

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


# Dormand-Prince 5(4) tableau with the Shampine quartic interpolant.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
        [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
    ]
)
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_MAX_STEPS = 2


@njit(cache=True)
def _rhs(a0_data, a0_idx, a0_ptr, a1_data, a1_idx, a1_ptr, x, drive, out):
    n = x.size
    for i in range(n):
        s = 0.0
        for jj in range(a0_ptr[i], a0_ptr[i + 1]):
            s += a0_data[jj] * x[a0_idx[jj]]
        t = 0.0
        for jj in range(a1_ptr[i], a1_ptr[i + 1]):
            t += a1_data[jj] * x[a1_idx[jj]]
        out[i] = s + drive * t


@njit(cache=True)
def _error_norm(err, y_old, y_new, rtol, atol):
    n = err.size
    acc = 0.0
    for i in range(n):
        ya = abs(y_old[i])
        yb = abs(y_new[i])
        big = ya if ya > yb else yb
        w = err[i] / (atol + rtol * big)
        acc += w * w
    return np.sqrt(acc / n)


@njit(cache=True)
def _integrate_leg(
    a0_data,
    a0_idx,
    a0_ptr,
    a1_data,
    a1_idx,
    a1_ptr,
    y0,
    t0,
    t1,
    drive0,
    slope,
    sample_times,
    rtol,
    atol,
    max_steps,
    a_tab,
    c_tab,
    e_tab,
    p_tab,
):
    n = y0.size
    ns = sample_times.size
    samples = np.empty((ns, n))
    y = y0.copy()
    k = np.empty((7, n))
    ytmp = np.empty(n)
    ynew = np.empty(n)
    err = np.empty(n)

    t = t0
    nfev = 0
    nsteps = 0
    nrej = 0

    _rhs(a0_data, a0_idx, a0_ptr, a1_data, a1_idx, a1_ptr, y, drive0, k[0])
    nfev += 1

    si = 0
    while si < ns and sample_times[si] <= t0 + 1e-14 * max(1.0, abs(t0)):
        for i in range(n):
            samples[si, i] = y[i]
        si += 1

    # initial step size, Hairer-style
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (k[0, i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, t1 - t0)
    for i in range(n):
        ytmp[i] = y[i] + h * k[0, i]
    _rhs(a0_data, a0_idx, a0_ptr, a1_data, a1_idx, a1_ptr, ytmp, drive0 + slope * h, k[1])
    nfev += 1
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d2 += ((k[1, i] - k[0, i]) / sc) ** 2
    d2 = np.sqrt(d2 / n) / h
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    h = min(100.0 * h, h1, t1 - t0)

    hmin = 1e-14 * max(abs(t0), abs(t1))
    status = STATUS_MAX_STEPS
    while nsteps < max_steps:
        if t >= t1 - 1e-14 * max(1.0, abs(t1)):
            status = STATUS_OK
            break
        if h < hmin:
            status = STATUS_STEP_UNDERFLOW
            break
        if t + h > t1:
            h = t1 - t

        for s in range(1, 7):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += a_tab[s, j] * k[j, i]
                ytmp[i] = y[i] + h * acc
            _rhs(
                a0_data,
                a0_idx,
                a0_ptr,
                a1_data,
                a1_idx,
                a1_ptr,
                ytmp,
                drive0 + slope * (t + c_tab[s] * h - t0),
                k[s],
            )
            nfev += 1
        # stage 7 argument ytmp is already the 5th-order solution
        for i in range(n):
            ynew[i] = ytmp[i]
        for i in range(n):
            acc = 0.0
            for s in range(7):
                acc += e_tab[s] * k[s, i]
            err[i] = h * acc
        enorm = _error_norm(err, y, ynew, rtol, atol)
        nsteps += 1

        if enorm <= 1.0:
            t_new = t + h
            while si < ns and sample_times[si] <= t_new + 1e-14 * max(1.0, abs(t_new)):
                theta = (sample_times[si] - t) / h
                for i in range(n):
                    acc = 0.0
                    for s in range(7):
                        w = (
                            p_tab[s, 0] * theta
                            + p_tab[s, 1] * theta**2
                            + p_tab[s, 2] * theta**3
                            + p_tab[s, 3] * theta**4
                        )
                        acc += w * k[s, i]
                    samples[si, i] = y[i] + h * acc
                si += 1
            for i in range(n):
                y[i] = ynew[i]
                k[0, i] = k[6, i]
            t = t_new
            if enorm == 0.0:
                factor = 10.0
            else:
                factor = min(10.0, 0.9 * enorm**-0.2)
            h *= max(0.2, factor)
        else:
            nrej += 1
            h *= max(0.2, 0.9 * enorm**-0.2)

    return samples, y, si, t, nsteps, nfev, nrej, status


def propagate_leg(
    generator,
    y0: np.ndarray,
    t0: float,
    t1: float,
    drive_at_t0: float,
    slope: float,
    sample_times: np.ndarray,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_steps: int = 50_000_000,
):
    """Integrate one linear-drive leg; returns (samples, y_end, stats)."""
    a0, a1 = generator.a0, generator.a1
    samples, y_end, emitted, t_end, nsteps, nfev, nrej, status = _integrate_leg(
        a0.data,
        a0.indices,
        a0.indptr,
        a1.data,
        a1.indices,
        a1.indptr,
        np.asarray(y0, dtype=np.float64),
        float(t0),
        float(t1),
        float(drive_at_t0),
        float(slope),
        np.asarray(sample_times, dtype=np.float64),
        float(rtol),
        float(atol),
        int(max_steps),
        _A,
        _C,
        _E,
        _P,
    )
    if status == STATUS_STEP_UNDERFLOW:
        raise SimulationError(f"step size underflow at t = {t_end:.6g}")
    if status == STATUS_MAX_STEPS:
        raise SimulationError(f"integration exceeded {max_steps} steps at t = {t_end:.6g}")
    if emitted != sample_times.size:
        raise SimulationError(
            f"integrator emitted {emitted} of {sample_times.size} samples"
        )
    stats = {"steps": int(nsteps), "rhs_evals": int(nfev), "rejected": int(nrej)}
    return samples, y_end, stats
