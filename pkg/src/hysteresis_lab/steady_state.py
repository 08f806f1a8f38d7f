"""Stationary states: exact series solution and numerical null-space solver.

The closed-form coherence below is the zero-temperature steady state of the
driven Kerr resonator. Its hypergeometric ratio was validated against the
numerical null-space solver over the bistable transition region before being
frozen here; the two routes are kept independent on purpose and are compared
in the acceptance tests.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SimulationError
from .fock import DensityMatrix, ResonatorParams
from .liouville import single_resonator_parts, trace_indices

SERIES_TOL = 1e-16
SERIES_MAX_TERMS = 100_000
RESIDUAL_FACTOR = 1e-10
DEGENERACY_RTOL = 1e-9


def hyp0f2(b1: complex, b2: complex, z: complex) -> complex:
    """Generalized hypergeometric series 0F2(; b1, b2; z).

    Computed by term recurrence term_{k+1} = term_k * z / ((b1+k)(b2+k)(k+1));
    stops once three consecutive terms fall below SERIES_TOL relative to the
    partial sum.
    """
    for b in (b1, b2):
        if b.imag == 0.0 and b.real <= 0.0 and float(b.real).is_integer():
            raise SimulationError(f"series parameter {b} hits a pole")
    total = term = 1.0 + 0.0j
    quiet = 0
    for k in range(SERIES_MAX_TERMS):
        term = term * z / ((b1 + k) * (b2 + k) * (k + 1.0))
        total += term
        if not np.isfinite(total):
            raise SimulationError("hypergeometric series overflowed")
        if abs(term) < SERIES_TOL * abs(total):
            quiet += 1
            if quiet >= 3:
                return total
        else:
            quiet = 0
    raise SimulationError("hypergeometric series did not converge")


def analytic_coherence(drive: float, params: ResonatorParams) -> complex:
    """Exact steady-state <a> at zero temperature."""
    if params.thermal != 0.0:
        raise ValueError("the closed-form steady state requires zero thermal occupation")
    if drive < 0:
        raise ValueError("drive amplitude must be non-negative")
    delta, u, g = params.detuning, params.kerr, params.decay
    linear = drive / (delta + 0.5j * g)
    if drive == 0.0:
        return 0.0 + 0.0j
    if u == 0.0:
        return linear
    c = -2.0 * (delta + 0.5j * g) / u
    z = 8.0 * (drive / u) ** 2
    ratio = hyp0f2(1.0 + c, np.conj(c), z) / hyp0f2(c, np.conj(c), z)
    return linear * ratio


def analytic_population(drive: float, params: ResonatorParams) -> float:
    """Exact steady-state photon number via the population balance identity."""
    if drive == 0.0:
        return 0.0
    coh = analytic_coherence(drive, params)
    return -2.0 * drive * coh.imag / params.decay


def steady_state_from_parts(
    l0: sp.csr_matrix,
    l1: sp.csr_matrix,
    drive: float,
    dim: int,
    check_uniqueness: bool = False,
) -> DensityMatrix:
    """Null vector of L(F) = l0 + F * l1 with unit trace.

    One row of the linear system is replaced by the vectorized trace
    functional; the residual of the untouched Liouvillian is verified against
    RESIDUAL_FACTOR times its Frobenius norm.
    """
    lmat = (l0 + drive * l1).tocsr()
    size = dim * dim
    tr_cols = trace_indices(dim)
    trace_row = sp.csr_matrix(
        (np.ones(dim), (np.zeros(dim, dtype=int), tr_cols)), shape=(1, size), dtype=np.complex128
    )
    system = sp.vstack([trace_row, lmat[1:, :]]).tocsc()
    rhs = np.zeros(size, dtype=np.complex128)
    rhs[0] = 1.0
    x = spla.spsolve(system, rhs)

    l_norm = np.sqrt(np.sum(np.abs(lmat.data) ** 2))
    residual = np.linalg.norm(lmat @ x)
    if not np.isfinite(residual) or residual > RESIDUAL_FACTOR * l_norm:
        raise SimulationError(
            f"steady-state residual {residual:.3e} exceeds {RESIDUAL_FACTOR:.0e} * |L| = "
            f"{RESIDUAL_FACTOR * l_norm:.3e}"
        )

    meta: dict[str, float] = {"residual": float(residual), "liouvillian_norm": float(l_norm)}
    if check_uniqueness:
        if size > 4096:
            raise SimulationError("dense uniqueness check limited to dim^2 <= 4096")
        sigma = np.linalg.svd(np.asarray(lmat.todense()), compute_uv=False)
        meta["sigma_smallest"] = float(sigma[-1])
        meta["sigma_second"] = float(sigma[-2])
        if sigma[-2] < DEGENERACY_RTOL * sigma[0]:
            raise SimulationError(
                "stationary space is degenerate: second singular value "
                f"{sigma[-2]:.3e} vs largest {sigma[0]:.3e}"
            )

    rho = x.reshape(dim, dim)
    rho = rho / rho.trace()
    return DensityMatrix(rho, metadata=meta)


def steady_state_numeric(
    drive: float, params: ResonatorParams, check_uniqueness: bool = False
) -> DensityMatrix:
    """Numerical steady state of the single resonator at a fixed drive."""
    if drive < 0:
        raise ValueError("drive amplitude must be non-negative")
    l0, l1 = single_resonator_parts(params)
    return steady_state_from_parts(l0, l1, drive, params.dim, check_uniqueness)
