import numpy as np
import scipy.sparse as sp

import hysteresis_lab as hl
from hysteresis_lab.liouville import (
    build_liouvillian,
    liouvillian_parts,
    pack_state,
    packed_generator,
    single_resonator_parts,
    trace_indices,
    unpack_state,
)


def _random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    return rho / rho.trace()


def test_vectorization_matches_matrix_equation():
    rng = np.random.default_rng(7)
    params = hl.ResonatorParams(detuning=1.3, kerr=0.4, thermal=0.1, cutoff=5)
    l0, l1 = single_resonator_parts(params)
    drive = 0.7
    rho = _random_density(params.dim, rng)

    lhs = ((l0 + drive * l1) @ rho.ravel()).reshape(params.dim, params.dim)

    h = hl.static_hamiltonian(params) + drive * hl.drive_operator(params.dim)
    a = hl.destroy(params.dim)
    ad = hl.create(params.dim)
    gamma, nth = params.decay, params.thermal

    def dissipator(c, rate):
        cdc = c.conj().T @ c
        return rate * (c @ rho @ c.conj().T - 0.5 * (cdc @ rho + rho @ cdc))

    rhs = 1j * (rho @ h - h @ rho)
    rhs += dissipator(a, gamma * (1 + nth))
    rhs += dissipator(ad, gamma * nth)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_trace_indices_pick_the_diagonal():
    dim = 6
    idx = trace_indices(dim)
    rho = np.arange(dim * dim, dtype=complex).reshape(dim, dim)
    assert rho.ravel()[idx].sum() == rho.trace()


def test_pack_roundtrip_preserves_hermitian_states():
    rng = np.random.default_rng(3)
    dim = 7
    rho = _random_density(dim, rng)
    packed = pack_state(rho)
    assert packed.dtype == np.float64
    assert packed.shape == (dim * dim,)
    back = unpack_state(packed, dim)
    np.testing.assert_allclose(back, rho, atol=1e-14)
    # unpacked matrices are Hermitian by construction
    np.testing.assert_allclose(back, back.conj().T, atol=0)


def test_packed_generator_matches_complex_action():
    rng = np.random.default_rng(11)
    params = hl.ResonatorParams(detuning=0.9, kerr=0.6, thermal=0.05, cutoff=6)
    l0, l1 = single_resonator_parts(params)
    gen = packed_generator(l0, l1, params.dim)
    drive = 1.1
    rho = _random_density(params.dim, rng)

    complex_rhs = ((l0 + drive * l1) @ rho.ravel()).reshape(params.dim, params.dim)
    packed_rhs = unpack_state(gen.matrix(drive) @ pack_state(rho), params.dim)
    np.testing.assert_allclose(packed_rhs, complex_rhs, atol=1e-12)


def test_packed_generator_is_real_sparse():
    params = hl.ResonatorParams(detuning=2.0, kerr=0.5, cutoff=8)
    l0, l1 = single_resonator_parts(params)
    gen = packed_generator(l0, l1, params.dim)
    assert gen.a0.dtype == np.float64
    assert gen.a1.dtype == np.float64
    assert sp.issparse(gen.a0)


def test_build_liouvillian_dense_agrees_with_parts():
    params = hl.ResonatorParams(detuning=1.0, kerr=0.2, cutoff=4)
    l0, l1 = single_resonator_parts(params)
    dense = build_liouvillian(0.5, params)
    np.testing.assert_allclose(dense, (l0 + 0.5 * l1).toarray(), atol=1e-14)


def test_liouvillian_parts_accept_sparse_inputs():
    dim = 5
    h = sp.csr_matrix(hl.static_hamiltonian(hl.ResonatorParams(1.0, 0.3, cutoff=dim - 1)))
    d = sp.csr_matrix(hl.drive_operator(dim))
    l0, l1 = liouvillian_parts(h, d, [(1.0, hl.destroy(dim))])
    assert l0.shape == (dim * dim, dim * dim)
    assert l1.shape == (dim * dim, dim * dim)
