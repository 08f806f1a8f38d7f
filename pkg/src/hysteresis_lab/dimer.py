"""Two identical coupled resonators: joint-space dynamics and correlations."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .errors import SimulationError
from .fock import G2_FLOOR, TAIL_TOL, DensityMatrix, ResonatorParams, create, destroy, number
from .lindblad import run_packed_sweep
from .liouville import liouvillian_parts, packed_generator
from .mean_field import fixed_points
from .steady_state import steady_state_from_parts
from .sweeps import DimerTrace, SweepProtocol

MAX_JOINT_DIM = 400


@dataclass(frozen=True)
class DimerParams:
    """Two identical resonators exchanging photons at rate `hopping`.

    site carries the per-resonator frequencies and the per-site cutoff; the
    joint space has dimension site.dim squared, capped to keep dense states
    and sparse generators at desk scale.
    """

    site: ResonatorParams
    hopping: float

    def __post_init__(self) -> None:
        if self.joint_dim > MAX_JOINT_DIM:
            raise ValueError(
                f"joint dimension {self.joint_dim} exceeds the cap {MAX_JOINT_DIM}"
            )

    @property
    def site_dim(self) -> int:
        return self.site.dim

    @property
    def joint_dim(self) -> int:
        return self.site.dim**2

    def replace_site(self, **changes) -> "DimerParams":
        return replace(self, site=self.site.replace(**changes))


def site_operators(site_dim: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Annihilation operators of the two sites on the joint space."""
    a = sp.csr_matrix(destroy(site_dim))
    eye = sp.identity(site_dim, format="csr", dtype=np.complex128)
    return sp.kron(a, eye, format="csr"), sp.kron(eye, a, format="csr")


def dimer_static_hamiltonian(params: DimerParams) -> sp.csr_matrix:
    d = params.site_dim
    n = sp.csr_matrix(number(d))
    eye = sp.identity(d, format="csr", dtype=np.complex128)
    local = -params.site.detuning * n + 0.5 * params.site.kerr * (n @ (n - eye))
    h = sp.kron(local, eye, format="csr") + sp.kron(eye, local, format="csr")
    a1, a2 = site_operators(d)
    hop = a1.conj().T @ a2
    return (h - params.hopping * (hop + hop.conj().T)).tocsr()


def dimer_drive_operator(params: DimerParams) -> sp.csr_matrix:
    a1, a2 = site_operators(params.site_dim)
    s = a1 + a2
    return (s + s.conj().T).tocsr()


def dimer_parts(params: DimerParams) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """(L0, L1) on the joint space with both sites damped identically."""
    d = params.site_dim
    a1, a2 = site_operators(d)
    g, nth = params.site.decay, params.site.thermal
    collapse = [
        (g * (1.0 + nth), a1),
        (g * (1.0 + nth), a2),
        (g * nth, a1.conj().T),
        (g * nth, a2.conj().T),
    ]
    return liouvillian_parts(
        dimer_static_hamiltonian(params), dimer_drive_operator(params), collapse
    )


def build_dimer_liouvillian(drive: float, params: DimerParams) -> sp.csr_matrix:
    """Sparse joint-space generator at a fixed drive amplitude."""
    if drive < 0:
        raise ValueError("drive amplitude must be non-negative")
    l0, l1 = dimer_parts(params)
    return (l0 + drive * l1).tocsr()


def dimer_steady_state(
    drive: float, params: DimerParams, *, check_uniqueness: bool = False
) -> DensityMatrix:
    l0, l1 = dimer_parts(params)
    return steady_state_from_parts(
        l0, l1, drive, params.joint_dim, check_uniqueness=check_uniqueness
    )


def _joint_moments(
    populations: np.ndarray, site_dim: int, g2_floor: float
) -> dict[str, np.ndarray]:
    """Per-sample site populations and diagonal correlators.

    populations has one row per sample holding the joint diagonal; rounding
    leaves entries at -1e-22 scale, so moments are clipped at zero.
    """
    p = populations.reshape(populations.shape[0], site_dim, site_dim)
    k = np.arange(site_dim, dtype=np.float64)
    n1 = np.maximum(np.einsum("sij,i->s", p, k), 0.0)
    n2 = np.maximum(np.einsum("sij,j->s", p, k), 0.0)
    pair1 = np.maximum(np.einsum("sij,i->s", p, k * (k - 1.0)), 0.0)
    cross = np.maximum(np.einsum("sij,i,j->s", p, k, k), 0.0)
    g2_local = np.full_like(n1, np.nan)
    ok = n1 >= g2_floor
    g2_local[ok] = pair1[ok] / n1[ok] ** 2
    g2_cross = np.full_like(n1, np.nan)
    ok = (n1 >= g2_floor) & (n2 >= g2_floor)
    g2_cross[ok] = cross[ok] / (n1[ok] * n2[ok])
    return {"n1": n1, "n2": n2, "g2_local": g2_local, "g2_cross": g2_cross}


def dimer_observables(
    state: DensityMatrix | np.ndarray, *, g2_floor: float = G2_FLOOR
) -> dict[str, float]:
    """{n1, n2, g2_local, g2_cross} from a joint state; NaN below the floor."""
    rho = state.matrix if isinstance(state, DensityMatrix) else np.asarray(state)
    joint_dim = rho.shape[0]
    site_dim = int(round(joint_dim**0.5))
    if site_dim * site_dim != joint_dim:
        raise ValueError("state dimension is not a perfect square")
    diag = rho.diagonal().real[np.newaxis, :]
    m = _joint_moments(diag, site_dim, g2_floor)
    return {key: float(val[0]) for key, val in m.items()}


def dimer_tail_weight(populations: np.ndarray, site_dim: int) -> np.ndarray:
    """Per-sample probability of either site sitting at its highest level."""
    p = populations.reshape(populations.shape[0], site_dim, site_dim)
    return p[:, -1, :].sum(axis=1) + p[:, :, -1].sum(axis=1) - p[:, -1, -1]


def swap_defect(state: DensityMatrix | np.ndarray) -> float:
    """Largest entry of |rho - S rho S| under exchange of the two sites."""
    rho = state.matrix if isinstance(state, DensityMatrix) else np.asarray(state)
    joint_dim = rho.shape[0]
    site_dim = int(round(joint_dim**0.5))
    perm = np.arange(joint_dim).reshape(site_dim, site_dim).T.ravel()
    return float(np.abs(rho - rho[np.ix_(perm, perm)]).max())


def evolve_dimer(
    rho0: DensityMatrix | np.ndarray,
    protocol: SweepProtocol,
    params: DimerParams,
    *,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_steps: int = 50_000_000,
    g2_floor: float = G2_FLOOR,
    tail_tol: float = TAIL_TOL,
) -> DimerTrace:
    """Triangular sweep on the joint space; same engine as the single resonator."""
    dm = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(np.asarray(rho0))
    if dm.dim != params.joint_dim:
        raise ValueError(
            f"state dimension {dm.dim} does not match joint dimension {params.joint_dim}"
        )
    if dm.trace_error() > 1e-6:
        raise SimulationError("initial state is not normalized")

    l0, l1 = dimer_parts(params)
    gen = packed_generator(l0, l1, params.joint_dim)
    from .liouville import pack_state

    up, down, stats = run_packed_sweep(
        gen, pack_state(dm.matrix), protocol, rtol, atol, max_steps
    )
    joint = params.joint_dim
    site_dim = params.site_dim
    pop_up, pop_down = up[:, :joint], down[:, :joint]
    trace_err = max(
        np.abs(pop_up.sum(axis=1) - 1.0).max(), np.abs(pop_down.sum(axis=1) - 1.0).max()
    )
    if trace_err > 1e-8:
        raise SimulationError(f"trace drifted by {trace_err:.2e} during the sweep")
    min_pop = min(pop_up.min(), pop_down.min())
    max_tail = max(
        dimer_tail_weight(pop_up, site_dim).max(),
        dimer_tail_weight(pop_down, site_dim).max(),
    )

    m_up = _joint_moments(pop_up, site_dim, g2_floor)
    m_down = _joint_moments(pop_down, site_dim, g2_floor)
    metadata: dict[str, Any] = {
        **stats,
        "rtol": rtol,
        "atol": atol,
        "max_trace_error": trace_err,
        "min_population": min_pop,
        "positivity_ok": bool(min_pop > -1e-10),
        "max_tail": max_tail,
        "cutoff_safe": bool(max_tail < tail_tol),
    }
    return DimerTrace(
        protocol=protocol,
        drive=protocol.drive_grid(),
        n1_up=m_up["n1"],
        n1_down=m_down["n1"],
        n2_up=m_up["n2"],
        n2_down=m_down["n2"],
        g2_local_up=m_up["g2_local"],
        g2_local_down=m_down["g2_local"],
        g2_cross_up=m_up["g2_cross"],
        g2_cross_down=m_down["g2_cross"],
        metadata=metadata,
    )


# ---------------------------------------------------------------------------
# Dimer mean field: two coupled copies of the single-site flow


def dimer_mf_rhs(
    amplitudes: np.ndarray, drive: float, params: DimerParams
) -> np.ndarray:
    """Coupled coherent-field derivatives for (alpha_1, alpha_2)."""
    p = params.site
    a1, a2 = amplitudes
    base1 = (1j * p.detuning - 0.5 * p.decay - 1j * p.kerr * abs(a1) ** 2) * a1
    base2 = (1j * p.detuning - 0.5 * p.decay - 1j * p.kerr * abs(a2) ** 2) * a2
    return np.array(
        [
            base1 + 1j * params.hopping * a2 - 1j * drive,
            base2 + 1j * params.hopping * a1 - 1j * drive,
        ]
    )


def dimer_mf_sweep(
    protocol: SweepProtocol,
    params: DimerParams,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> DimerTrace:
    """Mean-field dimer loop; symmetric initial condition on the low branch.

    Under symmetric drive the two amplitudes satisfy the single-site flow with
    the detuning shifted by the hopping, which fixes the initial condition.
    """
    effective = params.site.replace(detuning=params.site.detuning + params.hopping)
    _, alpha0 = fixed_points(protocol.drive_start, effective).stable_low()

    def rhs(t, y):
        return dimer_mf_rhs(y, protocol.drive(float(t)), params)

    ramp = protocol.ramp_time
    sol_up = solve_ivp(
        rhs,
        (0.0, ramp),
        [alpha0, alpha0],
        t_eval=protocol.up_times(),
        rtol=rtol,
        atol=atol,
    )
    if not sol_up.success:
        raise SimulationError(f"dimer mean-field up leg failed: {sol_up.message}")
    sol_down = solve_ivp(
        rhs,
        (ramp, 2.0 * ramp),
        sol_up.y[:, -1],
        t_eval=protocol.down_times(),
        rtol=rtol,
        atol=atol,
    )
    if not sol_down.success:
        raise SimulationError(f"dimer mean-field down leg failed: {sol_down.message}")

    n1_up = np.abs(sol_up.y[0]) ** 2
    n2_up = np.abs(sol_up.y[1]) ** 2
    n1_down = np.abs(sol_down.y[0][::-1]) ** 2
    n2_down = np.abs(sol_down.y[1][::-1]) ** 2
    ones = np.ones_like(n1_up)
    return DimerTrace(
        protocol=protocol,
        drive=protocol.drive_grid(),
        n1_up=n1_up,
        n1_down=n1_down,
        n2_up=n2_up,
        n2_down=n2_down,
        g2_local_up=ones,
        g2_local_down=ones.copy(),
        g2_cross_up=ones.copy(),
        g2_cross_down=ones.copy(),
        metadata={"rtol": rtol, "atol": atol, "model": "dimer-mean-field"},
    )
