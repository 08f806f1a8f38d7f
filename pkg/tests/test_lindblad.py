import numpy as np
import pytest
from scipy.integrate import solve_ivp

import hysteresis_lab as hl


def _linear_reference(protocol, params, alpha0):
    """U = 0 oracle: a coherent state stays coherent; its amplitude obeys a
    scalar ODE driven by the triangular ramp."""

    def rhs(t, y):
        alpha = y[0] + 1j * y[1]
        f = protocol.drive(float(t))
        d = (1j * params.detuning - 0.5 * params.decay) * alpha - 1j * f
        return [d.real, d.imag]

    t_eval = np.concatenate([protocol.up_times(), protocol.down_times()[1:]])
    sol = solve_ivp(
        rhs,
        (0.0, protocol.total_time),
        [alpha0.real, alpha0.imag],
        t_eval=t_eval,
        rtol=1e-12,
        atol=1e-14,
    )
    return sol.y[0] + 1j * sol.y[1]


def test_linear_sweep_matches_coherent_oracle():
    params = hl.ResonatorParams(detuning=2.0, kerr=0.0, cutoff=25)
    protocol = hl.SweepProtocol(0.1, 1.4, 12.0, samples=41)
    alpha0 = hl.analytic_coherence(protocol.drive_start, params)
    rho0 = hl.coherent_state(params.dim, alpha0)

    trace = hl.evolve(rho0, protocol, params)
    alpha = _linear_reference(protocol, params, alpha0)
    n_ref = np.abs(alpha) ** 2
    n_sim = np.concatenate([trace.n_up, trace.n_down[::-1][1:]])
    np.testing.assert_allclose(n_sim, n_ref, atol=1e-7)
    # coherent states have flat second-order coherence
    assert np.nanmax(np.abs(trace.g2_up - 1.0)) < 1e-4


def test_linear_sweep_with_thermal_photons():
    # same displacement dynamics; the occupation gains n_th of thermal weight
    nth = 0.2
    params = hl.ResonatorParams(detuning=1.5, kerr=0.0, thermal=nth, cutoff=25)
    protocol = hl.SweepProtocol(0.2, 1.0, 8.0, samples=21)
    rho0 = hl.steady_state_numeric(protocol.drive_start, params)
    alpha0 = hl.expectation(hl.destroy(params.dim), rho0.matrix)

    trace = hl.evolve(rho0, protocol, params)
    alpha = _linear_reference(protocol, params, alpha0)
    n_ref = np.abs(alpha) ** 2 + nth
    n_sim = np.concatenate([trace.n_up, trace.n_down[::-1][1:]])
    np.testing.assert_allclose(n_sim, n_ref, atol=1e-6)


def test_evolution_is_deterministic():
    params = hl.ResonatorParams(detuning=2.0, kerr=0.5, cutoff=18)
    protocol = hl.SweepProtocol(0.4, 1.2, 15.0, samples=31)
    rho0 = hl.steady_state_numeric(protocol.drive_start, params)
    t1 = hl.evolve(rho0, protocol, params)
    t2 = hl.evolve(rho0, protocol, params)
    assert np.array_equal(t1.n_up, t2.n_up)
    assert np.array_equal(t1.n_down, t2.n_down)
    assert t1.metadata["steps"] == t2.metadata["steps"]


def test_tolerance_refinement_converges():
    params = hl.ResonatorParams(detuning=2.0, kerr=0.5, cutoff=18)
    protocol = hl.SweepProtocol(0.4, 1.2, 10.0, samples=21)
    rho0 = hl.steady_state_numeric(protocol.drive_start, params)
    coarse = hl.evolve(rho0, protocol, params, rtol=1e-6, atol=1e-9)
    fine = hl.evolve(rho0, protocol, params, rtol=1e-9, atol=1e-12)
    # the coarse run must sit within a few of its own error tolerances
    assert np.max(np.abs(coarse.n_up - fine.n_up)) < 1e-4
    assert coarse.metadata["steps"] < fine.metadata["steps"]


def test_trace_and_positivity_diagnostics():
    params = hl.ResonatorParams(detuning=2.0, kerr=0.5, thermal=0.05, cutoff=20)
    protocol = hl.SweepProtocol(0.3, 1.5, 20.0, samples=41)
    rho0 = hl.steady_state_numeric(protocol.drive_start, params)
    trace = hl.evolve(rho0, protocol, params)
    md = trace.metadata
    assert md["max_trace_error"] < 1e-9
    assert md["positivity_ok"]
    assert md["cutoff_safe"]
    assert md["rhs_evals"] >= 6 * md["steps"]
    assert np.all(trace.n_up >= 0)
    assert np.all(trace.n_down >= 0)


def test_tail_violation_flags_not_raises():
    # a box far too small: the run completes but is marked cutoff-unsafe
    params = hl.ResonatorParams(detuning=2.0, kerr=0.1, cutoff=4)
    protocol = hl.SweepProtocol(0.5, 2.0, 5.0, samples=11)
    rho0 = hl.steady_state_numeric(protocol.drive_start, params)
    trace = hl.evolve(rho0, protocol, params)
    assert not trace.metadata["cutoff_safe"]
    assert trace.metadata["max_tail"] > hl.TAIL_TOL


def test_initial_state_validation():
    params = hl.ResonatorParams(detuning=2.0, kerr=0.5, cutoff=10)
    protocol = hl.SweepProtocol(0.4, 1.2, 5.0, samples=5)
    with pytest.raises(ValueError):
        hl.evolve(hl.coherent_state(8, 0.1), protocol, params)
    unnormalized = hl.DensityMatrix(2.0 * np.eye(params.dim, dtype=complex) / params.dim)
    with pytest.raises(hl.SimulationError):
        hl.evolve(unnormalized, protocol, params)


def test_hysteresis_appears_at_finite_rate():
    # the nonlinear resonator opens a loop; its down leg lags the up leg
    params = hl.ResonatorParams(detuning=2.0, kerr=0.5, cutoff=22)
    protocol = hl.SweepProtocol(0.4, 1.8, 10.0 * 1.8, samples=61)
    rho0 = hl.steady_state_numeric(protocol.drive_start, params)
    trace = hl.evolve(rho0, protocol, params)
    assert hl.hysteresis_area(trace) > 0.5
    mid = slice(20, 41)
    assert np.all(trace.n_down[mid] > trace.n_up[mid])
