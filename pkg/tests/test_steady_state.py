import numpy as np
import pytest

import hysteresis_lab as hl
from hysteresis_lab.liouville import single_resonator_parts
from hysteresis_lab.steady_state import hyp0f2, steady_state_from_parts

# frozen oracle value: sum_k z^k / ((b1)_k (b2)_k k!) at b1 = b2 = z = 1,
# summed in exact rational arithmetic and rounded once to double
HYP_1_1_1 = 2.1297025489833064


def test_series_frozen_value():
    assert hyp0f2(1.0, 1.0, 1.0) == pytest.approx(HYP_1_1_1, abs=1e-15)


def test_series_degenerates_to_bessel():
    # one large parameter: 0F2(b1, 1; b1*z) -> 0F1(1; z) = I0(2 sqrt(z))
    from scipy.special import iv

    z = 0.7
    b1 = 1e8
    assert hyp0f2(b1, 1.0, b1 * z) == pytest.approx(iv(0, 2 * np.sqrt(z)), rel=1e-7)


def test_series_conjugate_symmetry():
    b1, b2, z = 2.0 - 3.0j, 1.5 + 0.2j, 4.0 + 1.0j
    assert hyp0f2(np.conj(b1), np.conj(b2), np.conj(z)) == pytest.approx(
        np.conj(hyp0f2(b1, b2, z))
    )


def test_linear_limit_of_analytic_coherence():
    # U -> 0 reduces to the driven damped cavity: <a> = F / (Delta + i gamma/2)
    params = hl.ResonatorParams(detuning=1.4, kerr=1e-9, cutoff=10)
    f = 0.8
    expected = f / (1.4 + 0.5j)
    assert hl.analytic_coherence(f, params) == pytest.approx(expected, rel=1e-6)


def test_analytic_population_identity():
    # stationarity of the photon number ties n to Im<a>
    params = hl.ResonatorParams(detuning=2.0, kerr=0.5, cutoff=10)
    for f in (0.3, 0.9, 1.4):
        n = hl.analytic_population(f, params)
        coh = hl.analytic_coherence(f, params)
        assert n == pytest.approx(-2.0 * f * coh.imag / params.decay, rel=1e-10)


def test_analytic_requires_zero_thermal():
    params = hl.ResonatorParams(detuning=2.0, kerr=0.5, thermal=0.1, cutoff=10)
    with pytest.raises(ValueError):
        hl.analytic_coherence(1.0, params)


@pytest.mark.parametrize("kerr,f", [(0.1, 2.8), (0.5, 1.2), (1.0, 0.9), (2.0, 0.6)])
def test_analytic_matches_null_space(kerr, f):
    params = hl.with_auto_cutoff(
        hl.ResonatorParams(detuning=2.0, kerr=kerr, cutoff=1), f
    )
    rho = hl.steady_state_numeric(f, params)
    a = hl.destroy(params.dim)
    numeric = hl.expectation(a, rho.matrix)
    assert hl.analytic_coherence(f, params) == pytest.approx(numeric, abs=1e-9)
    assert hl.analytic_population(f, params) == pytest.approx(
        hl.photon_number(rho.matrix), abs=1e-9
    )


def test_thermal_steady_state_without_drive():
    # F = 0 with thermal photons: the Gibbs state of the bath, geometric weights
    nth = 0.25
    params = hl.ResonatorParams(detuning=1.0, kerr=0.7, thermal=nth, cutoff=40)
    rho = hl.steady_state_numeric(0.0, params)
    k = np.arange(params.dim)
    geometric = (nth / (1 + nth)) ** k / (1 + nth)
    np.testing.assert_allclose(rho.populations(), geometric, atol=1e-12)


def test_steady_state_is_physical():
    params = hl.ResonatorParams(detuning=2.0, kerr=0.5, cutoff=30)
    rho = hl.steady_state_numeric(1.3, params)
    rho.require_physical()
    assert rho.metadata["residual"] < 1e-8 * rho.metadata["liouvillian_norm"]


def test_uniqueness_check_accepts_generic_point():
    params = hl.ResonatorParams(detuning=2.0, kerr=0.5, cutoff=12)
    rho = hl.steady_state_numeric(0.8, params, check_uniqueness=True)
    assert rho.metadata["sigma_second"] > 0


def test_uniqueness_check_rejects_large_systems():
    params = hl.ResonatorParams(detuning=2.0, kerr=0.5, cutoff=80)
    with pytest.raises(hl.SimulationError):
        hl.steady_state_numeric(0.8, params, check_uniqueness=True)


def test_from_parts_matches_numeric_wrapper():
    params = hl.ResonatorParams(detuning=2.0, kerr=0.3, thermal=0.05, cutoff=14)
    l0, l1 = single_resonator_parts(params)
    rho_parts = steady_state_from_parts(l0, l1, 1.1, params.dim)
    rho_wrap = hl.steady_state_numeric(1.1, params)
    np.testing.assert_allclose(rho_parts.matrix, rho_wrap.matrix, atol=1e-13)
