"""Liouvillian assembly and the real-packed Hermitian representation.

Vectorization is row-major: vec(A rho B) = kron(A, B.T) vec(rho). The
generator is split into a drive-independent part and a part linear in the
real drive amplitude, L(F) = L0 + F * L1, which every consumer (time
propagation, steady states, spectra) shares.

For propagation the Hermitian matrix rho is stored as d^2 real coordinates:
the diagonal, then the real parts of the upper triangle, then the imaginary
parts (row-major pair order). The generator restricted to that subspace is a
real sparse matrix, so Hermiticity is preserved by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import SimulationError
from .fock import ResonatorParams, create, destroy, drive_operator, static_hamiltonian


def liouvillian_parts(
    h_static: np.ndarray | sp.spmatrix,
    drive_op: np.ndarray | sp.spmatrix,
    collapse: Sequence[tuple[float, np.ndarray | sp.spmatrix]],
) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Sparse (L0, L1) with L(F) = L0 + F * L1 acting on row-major vec(rho).

    The equation of motion is d rho/dt = i [rho, H(F)] + sum_k rate_k *
    (c rho c^dag - (c^dag c rho + rho c^dag c) / 2) with H(F) = h_static +
    F * drive_op.
    """
    h0 = sp.csr_matrix(h_static, dtype=np.complex128)
    hd = sp.csr_matrix(drive_op, dtype=np.complex128)
    dim = h0.shape[0]
    eye = sp.identity(dim, format="csr", dtype=np.complex128)

    def commutator_part(h: sp.csr_matrix) -> sp.csr_matrix:
        # i [rho, H] = i (rho H - H rho)
        return 1j * (sp.kron(eye, h.T, format="csr") - sp.kron(h, eye, format="csr"))

    l0 = commutator_part(h0)
    for rate, op in collapse:
        if rate == 0.0:
            continue
        c = sp.csr_matrix(op, dtype=np.complex128)
        cdc = (c.conj().T @ c).tocsr()
        l0 = l0 + rate * (
            sp.kron(c, c.conj(), format="csr")
            - 0.5 * sp.kron(cdc, eye, format="csr")
            - 0.5 * sp.kron(eye, cdc.T, format="csr")
        )
    l1 = commutator_part(hd)
    return l0.tocsr(), l1.tocsr()


def single_resonator_parts(params: ResonatorParams) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    dim = params.dim
    a = destroy(dim)
    collapse = [
        (params.decay * (1.0 + params.thermal), a),
        (params.decay * params.thermal, create(dim)),
    ]
    return liouvillian_parts(static_hamiltonian(params), drive_operator(dim), collapse)


def build_liouvillian(drive: float, params: ResonatorParams) -> np.ndarray:
    """Dense Liouvillian matrix at a fixed drive amplitude."""
    if drive < 0:
        raise ValueError("drive amplitude must be non-negative")
    l0, l1 = single_resonator_parts(params)
    return np.asarray((l0 + drive * l1).todense())


def trace_indices(dim: int) -> np.ndarray:
    """Positions of the diagonal entries inside row-major vec(rho)."""
    return np.arange(dim) * dim + np.arange(dim)


# ---------------------------------------------------------------------------
# Hermitian real packing


def _pair_index(dim: int) -> tuple[np.ndarray, np.ndarray]:
    iu = np.triu_indices(dim, k=1)
    return iu[0], iu[1]


def pack_state(rho: np.ndarray) -> np.ndarray:
    """Hermitian matrix -> real coordinate vector of length dim^2."""
    dim = rho.shape[0]
    rows, cols = _pair_index(dim)
    off = rho[rows, cols]
    return np.concatenate([rho.diagonal().real, off.real, off.imag])


def unpack_state(v: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of pack_state; always returns an exactly Hermitian matrix."""
    m = dim * (dim - 1) // 2
    rho = np.zeros((dim, dim), dtype=np.complex128)
    rows, cols = _pair_index(dim)
    rho[np.arange(dim), np.arange(dim)] = v[:dim]
    rho[rows, cols] = v[dim : dim + m] + 1j * v[dim + m :]
    rho[cols, rows] = v[dim : dim + m] - 1j * v[dim + m :]
    return rho


def _packing_maps(dim: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """(pack, unpack) sparse maps between vec(rho) and packed coordinates."""
    m = dim * (dim - 1) // 2
    size = dim * dim
    rows, cols = _pair_index(dim)

    # unpack: vec = Q v
    q_r, q_c, q_v = [], [], []
    for k in range(dim):
        q_r.append(k * dim + k)
        q_c.append(k)
        q_v.append(1.0 + 0.0j)
    for p in range(m):
        n, mm = int(rows[p]), int(cols[p])
        q_r += [n * dim + mm, n * dim + mm, mm * dim + n, mm * dim + n]
        q_c += [dim + p, dim + m + p, dim + p, dim + m + p]
        q_v += [1.0, 1.0j, 1.0, -1.0j]
    unpack = sp.csr_matrix((q_v, (q_r, q_c)), shape=(size, size), dtype=np.complex128)

    # pack: v = Re(R vec)
    r_r, r_c, r_v = [], [], []
    for k in range(dim):
        r_r.append(k)
        r_c.append(k * dim + k)
        r_v.append(1.0 + 0.0j)
    for p in range(m):
        n, mm = int(rows[p]), int(cols[p])
        r_r += [dim + p, dim + p, dim + m + p, dim + m + p]
        r_c += [n * dim + mm, mm * dim + n, n * dim + mm, mm * dim + n]
        r_v += [0.5, 0.5, -0.5j, 0.5j]
    pack = sp.csr_matrix((r_v, (r_r, r_c)), shape=(size, size), dtype=np.complex128)
    return pack, unpack


@dataclass
class PackedGenerator:
    """Real-coordinate generator: dv/dt = (a0 + drive(t) * a1) v."""

    dim: int
    a0: sp.csr_matrix
    a1: sp.csr_matrix

    def matrix(self, drive: float) -> sp.csr_matrix:
        return (self.a0 + drive * self.a1).tocsr()


def packed_generator(
    l0: sp.csr_matrix, l1: sp.csr_matrix, dim: int, leak_tol: float = 1e-10
) -> PackedGenerator:
    """Restrict a Hermiticity-preserving Liouvillian to real packed coordinates."""
    pack, unpack = _packing_maps(dim)
    out = []
    for l in (l0, l1):
        full = (pack @ l @ unpack).tocsr()
        scale = max(1.0, np.abs(full.data).max() if full.nnz else 0.0)
        leak = np.abs(full.data.imag).max() / scale if full.nnz else 0.0
        if leak > leak_tol:
            raise SimulationError(
                f"generator leaks off the Hermitian subspace (relative {leak:.2e})"
            )
        real = full.copy()
        real.data = full.data.real
        real.eliminate_zeros()
        out.append(sp.csr_matrix(real, dtype=np.float64))
    return PackedGenerator(dim=dim, a0=out[0], a1=out[1])
