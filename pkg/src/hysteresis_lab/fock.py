"""Truncated Fock-space primitives: parameters, operators, states, observables.

Everything downstream works in the frame rotating at the pump frequency, with
the drive amplitude treated as real. Energies and rates are measured in units
of the decay rate unless stated otherwise; the decay rate itself is kept as an
explicit parameter so dimensional checks stay honest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SimulationError

# Default numerical guards; callers may override per call.
TRACE_TOL = 1e-9
HERM_TOL = 1e-10
POSITIVITY_TOL = 1e-12
TAIL_TOL = 1e-8
G2_FLOOR = 1e-8


@dataclass(frozen=True)
class ResonatorParams:
    """Single Kerr resonator in the pump rotating frame.

    detuning : pump frequency minus bare cavity frequency.
    kerr     : two-photon interaction strength (positive for stiffening).
    decay    : single-photon loss rate (full width, not half).
    thermal  : mean occupation of the bath, >= 0.
    cutoff   : highest retained Fock level N; the space has dimension N + 1.
    """

    detuning: float
    kerr: float
    decay: float = 1.0
    thermal: float = 0.0
    cutoff: int = 30

    def __post_init__(self) -> None:
        if self.decay <= 0:
            raise ValueError("decay rate must be positive")
        if self.thermal < 0:
            raise ValueError("thermal occupation must be non-negative")
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    def replace(self, **changes) -> "ResonatorParams":
        return replace(self, **changes)


def destroy(dim: int) -> np.ndarray:
    """Annihilation operator on a dim-dimensional truncated Fock space."""
    return np.diag(np.sqrt(np.arange(1.0, dim)), k=1).astype(np.complex128)


def create(dim: int) -> np.ndarray:
    return destroy(dim).conj().T


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=np.float64)).astype(np.complex128)


def static_hamiltonian(params: ResonatorParams) -> np.ndarray:
    """Drive-independent part: -detuning * n + (kerr/2) * n (n - 1), diagonal."""
    n = np.arange(params.dim, dtype=np.float64)
    diag = -params.detuning * n + 0.5 * params.kerr * n * (n - 1.0)
    return np.diag(diag).astype(np.complex128)


def drive_operator(dim: int) -> np.ndarray:
    """Coupling operator for a real drive amplitude: a + a^dagger."""
    a = destroy(dim)
    return a + a.conj().T


@dataclass
class DensityMatrix:
    """A density matrix plus the checks every consumer relies on."""

    matrix: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace_error(self) -> float:
        return abs(self.matrix.trace().real - 1.0) + abs(self.matrix.trace().imag)

    def herm_defect(self) -> float:
        d = self.matrix - self.matrix.conj().T
        return float(np.abs(d).max())

    def min_population(self) -> float:
        return float(self.matrix.diagonal().real.min())

    def tail_weight(self) -> float:
        """Population of the highest retained Fock level."""
        return float(self.matrix[-1, -1].real)

    def populations(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()

    def require_physical(
        self,
        trace_tol: float = TRACE_TOL,
        herm_tol: float = HERM_TOL,
        positivity_tol: float = POSITIVITY_TOL,
        tail_tol: float = TAIL_TOL,
    ) -> None:
        if self.trace_error() > trace_tol:
            raise SimulationError(f"trace deviates from 1 by {self.trace_error():.3e}")
        if self.herm_defect() > herm_tol:
            raise SimulationError(f"hermiticity defect {self.herm_defect():.3e}")
        if self.min_population() < -positivity_tol:
            raise SimulationError(f"negative population {self.min_population():.3e}")
        if self.tail_weight() > tail_tol:
            raise SimulationError(
                f"cutoff tail {self.tail_weight():.3e} exceeds {tail_tol:.1e}; "
                "raise the cutoff"
            )


def expectation(op: np.ndarray, rho: np.ndarray) -> complex:
    """Tr(op @ rho) without forming the product matrix."""
    return complex(np.sum(op.T * rho))


def photon_number(rho: np.ndarray) -> float:
    k = np.arange(rho.shape[0])
    return float(np.real(rho.diagonal()) @ k)


def second_order_coherence(rho: np.ndarray, floor: float = G2_FLOOR) -> float:
    """Equal-time g2; NaN when the population is below the floor."""
    k = np.arange(rho.shape[0])
    p = np.real(rho.diagonal())
    n = float(p @ k)
    if n < floor:
        return math.nan
    return float(p @ (k * (k - 1.0))) / n**2


def coherent_state(dim: int, alpha: complex) -> DensityMatrix:
    """Displacement of the vacuum on the truncated space."""
    from scipy.linalg import expm

    a = destroy(dim)
    disp = expm(alpha * a.conj().T - np.conj(alpha) * a)
    psi = disp[:, 0]
    return DensityMatrix(np.outer(psi, psi.conj()))


def thermal_state(dim: int, occupation: float) -> DensityMatrix:
    """Geometric thermal distribution, renormalized on the truncated space."""
    if occupation < 0:
        raise ValueError("occupation must be non-negative")
    if occupation == 0:
        p = np.zeros(dim)
        p[0] = 1.0
    else:
        ratio = occupation / (1.0 + occupation)
        p = ratio ** np.arange(dim)
        p /= p.sum()
    return DensityMatrix(np.diag(p).astype(np.complex128))


def mean_field_peak_population(params: ResonatorParams, drive_max: float) -> float:
    """Largest physical root of the semiclassical steady-state cubic at drive_max."""
    u, delta, g = params.kerr, params.detuning, params.decay
    if u == 0.0:
        return drive_max**2 / (delta**2 + 0.25 * g**2)
    coeffs = [u**2, -2.0 * delta * u, delta**2 + 0.25 * g**2, -(drive_max**2)]
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) < 1e-9 * (1.0 + np.abs(roots.real))].real
    real = real[real >= 0.0]
    if real.size == 0:
        raise SimulationError("no physical mean-field root found")
    return float(real.max())


def safe_cutoff(params: ResonatorParams, drive_max: float) -> int:
    """Cutoff rule N >= n_peak + 8 sqrt(n_peak) + 10 from the mean-field peak."""
    n_peak = mean_field_peak_population(params, drive_max)
    return int(math.ceil(n_peak + 8.0 * math.sqrt(n_peak) + 10.0))


def with_auto_cutoff(params: ResonatorParams, drive_max: float) -> ResonatorParams:
    return replace(params, cutoff=safe_cutoff(params, drive_max))
