import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp, trapezoid
from scipy.linalg import expm

from pendula import errors, tls
from pendula.model import ApparatusParams, MagnetAssembly

finite = st.floats(-3, 3, allow_nan=False)


@given(finite, finite, finite, finite, st.floats(1e-4, 2.0))
def test_propagator_matches_expm(h0, hx, hy, hz, dt):
    H = np.array([[h0 + hz, hx - 1j * hy], [hx + 1j * hy, h0 - hz]])
    np.testing.assert_allclose(tls.propagator(H, dt), expm(-1j * H * dt), atol=1e-12)


def test_propagator_zero_field():
    np.testing.assert_allclose(tls.propagator(np.zeros((2, 2)), 0.3), np.eye(2))


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 100))
def test_basis_change_maps_hamiltonians(Delta, eps, t):
    S = tls.S_MATRIX
    for gauge in ("standard", "traceless"):
        Hr = tls.hamiltonian_rabi(np.asarray(t), Delta, eps, gauge)
        Hl = tls.hamiltonian_lz(np.asarray(t), Delta, eps, gauge)
        np.testing.assert_allclose(S @ Hr @ S, Hl, atol=1e-15)


def test_hamiltonian_shapes_and_gauge():
    t = np.linspace(0, 1, 5)
    H = tls.hamiltonian_lz(t, 0.1, tls.DriveWaveform(0.1, 0.2, 1.0))
    assert H.shape == (5, 2, 2)
    Ht = tls.hamiltonian_lz(t, 0.1, 0.3, gauge="traceless")
    assert np.allclose(np.trace(Ht, axis1=1, axis2=2), 0)
    with pytest.raises(ValueError):
        tls.hamiltonian_lz(t, 0.1, 0.3, gauge="other")


def test_state_basis_round_trip():
    s = tls.EnvelopeState(0.3 + 0.1j, -0.7j, "individual")
    back = s.to("modes").to("individual")
    np.testing.assert_allclose(back.as_array(), s.as_array(), atol=1e-15)
    assert s.to("modes").norm == pytest.approx(s.norm)
    with pytest.raises(ValueError):
        tls.EnvelopeState(0, 0)


@given(st.floats(0.01, 0.2), st.floats(-0.2, 0.2), st.floats(0, 0.3), st.floats(0.01, 0.2))
def test_evolve_conserves_norm(Delta, eps0, A, Omega):
    drive = tls.DriveWaveform(eps0, A, Omega)
    tr = tls.evolve(tls.EnvelopeState(0.6, 0.8j), lambda t: tls.hamiltonian_lz(t, Delta, drive),
                    (0, 50), 0.05)
    np.testing.assert_allclose(tr.norm(), 1.0, atol=1e-12)


def test_evolve_matches_ode_oracle():
    Delta, drive = 0.07, tls.DriveWaveform(0.01, 0.2, 0.05)
    psi0 = np.array([0.0, 1.0], dtype=complex)

    def rhs(t, y):
        psi = y[:2] + 1j * y[2:]
        d = -1j * tls.hamiltonian_lz(np.asarray(t), Delta, drive) @ psi
        return np.concatenate([d.real, d.imag])

    ref = solve_ivp(rhs, (0, 120), np.concatenate([psi0.real, psi0.imag]), method="DOP853",
                    rtol=1e-12, atol=1e-12, t_eval=[120.0])
    tr = tls.evolve(tls.EnvelopeState.from_array(psi0), lambda t: tls.hamiltonian_lz(t, Delta, drive),
                    (0, 120), 0.01)
    want = ref.y[:2, -1] + 1j * ref.y[2:, -1]
    np.testing.assert_allclose(tr.psi[-1], want, atol=1e-6)


def test_evolve_sampling_and_errors():
    H = lambda t: tls.hamiltonian_lz(t, 0.1, 0.0)
    tr = tls.evolve(tls.EnvelopeState(1, 0), H, (0, 10), 0.1, sample_every=10)
    assert len(tr) == 11 and tr.dt == pytest.approx(1.0)
    with pytest.raises(ValueError):
        tls.evolve(tls.EnvelopeState(1, 0), H, (0, 10), -0.1)
    bad = lambda t: tls.hamiltonian_lz(t, 0.1, np.where(t > 5, np.nan, 0.0))
    with pytest.raises(errors.DivergenceError):
        tls.evolve(tls.EnvelopeState(1, 0), bad, (0, 10), 0.1)


def test_static_beating_frequency():
    # constant eps: populations beat at sqrt(Delta^2 + eps^2)
    Delta, eps = 0.05, 0.12
    tr = tls.evolve(tls.EnvelopeState(0, 1), lambda t: tls.hamiltonian_lz(t, Delta, eps),
                    (0, 200), 0.01)
    E = math.hypot(Delta, eps)
    want = (Delta / E) ** 2 * np.sin(0.5 * E * tr.t) ** 2
    np.testing.assert_allclose(tr.populations()[:, 0], want, atol=1e-9)


def test_gauges_give_same_populations():
    d = tls.DriveWaveform(0.02, 0.2, 0.03)
    runs = [tls.evolve(tls.EnvelopeState(0, 1), lambda t, g=g: tls.hamiltonian_lz(t, 0.05, d, g),
                       (0, 100), 0.01) for g in ("standard", "traceless")]
    np.testing.assert_allclose(runs[0].populations(), runs[1].populations(), atol=1e-10)


def test_drive_waveform():
    d = tls.DriveWaveform(0.1, 0.3, 0.5)
    t1, t2 = d.crossing_times()
    assert d(t1) == pytest.approx(0, abs=1e-14) and d(t2) == pytest.approx(0, abs=1e-14)
    assert 0 < t1 < d.period / 2 < t2 < d.period
    with pytest.raises(errors.NoCrossingError):
        tls.DriveWaveform(0.4, 0.3, 0.5).crossing_times()
    with pytest.raises(ValueError):
        tls.DriveWaveform(0, 1, -1)


def test_sampled_drive():
    d = tls.SampledDrive(0.0, 1.0, np.array([0.0, 1.0, 4.0]))
    assert d(1.5) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        d(3.0)


def test_rabi_frequency_closed_form():
    app = ApparatusParams(magnets=MagnetAssembly(L=0.33))
    c, p, m = app.constants, app.pendulum, app.magnets
    G = 6 * c.mu0 * m.m_l**2 * p.l_l**2 / (math.pi * m.L**5)
    assert tls.rabi_frequency(app) == pytest.approx(G / (2 * p.omega0 * p.J0), rel=1e-14)


@given(st.floats(-1, 1), st.floats(0.01, 1), st.floats(1e-3, 1))
def test_effective_rabi_properties(Delta, Omega, OR):
    w, nu = tls.effective_rabi(Delta, Omega, OR)
    assert w >= OR and 0 < nu <= 1
    assert w**2 * nu == pytest.approx(OR**2)


def test_effective_rabi_resonance():
    w, nu = tls.effective_rabi(0.07, 0.07, 0.003)
    assert w == pytest.approx(0.003) and nu == pytest.approx(1.0)
    with pytest.raises(ValueError):
        tls.effective_rabi(0.07, 0.07, 0.0)


def test_sweep_velocity_and_probability():
    assert tls.sweep_velocity(0.1, 0.5, 0.3) == pytest.approx(0.04)
    assert tls.sweep_velocity(0.1, 0.5, 0.3, direction=-1) == pytest.approx(-0.04)
    with pytest.raises(errors.NoCrossingError):
        tls.sweep_velocity(0.1, 0.2, 0.3)
    assert tls.lz_probability(0.0, 1.0) == 1.0
    assert tls.lz_probability(1.0, 1e-6) < 1e-100
    with pytest.raises(ValueError):
        tls.lz_probability(1.0, 0.0)


@given(st.floats(-2, 2), st.floats(-1, 1))
def test_adiabatic_eigenvalues_match_eigvalsh(eps, Delta):
    wp, wm = tls.adiabatic_eigenvalues(eps, Delta)
    w = np.linalg.eigvalsh(tls.hamiltonian_lz(np.asarray(0.0), Delta, eps))
    np.testing.assert_allclose([wm, wp], w, atol=1e-12)
    assert wp - wm == pytest.approx(math.hypot(Delta, eps))


def test_adiabatic_phase_constant_drive():
    ph = tls.adiabatic_phase(0.3, 0.4, (0, 10), 0.01)
    assert ph.B == pytest.approx(3.0) and ph.Phi_ad == pytest.approx(5.0)


@pytest.mark.parametrize("x", [0.2, 1.0, 2.5])
def test_lz_sweep_matches_formula(x):
    Delta = 0.1
    v = math.pi * Delta**2 / (2 * x)
    assert tls.lz_sweep(Delta, v) == pytest.approx(math.exp(-x), abs=0.01)


def test_mean_upper_population_matches_evolve():
    Delta, d = 0.05, tls.DriveWaveform(0.05, 0.3, 0.04)
    psi0 = np.array([0.1, math.sqrt(0.99)], dtype=complex)
    T, dt = 300.0, 0.01
    tr = tls.evolve(tls.EnvelopeState.from_array(psi0), lambda t: tls.hamiltonian_lz(t, Delta, d),
                    (0, T), dt)
    want = trapezoid(tr.populations()[:, 0], tr.t) / T
    assert tls.mean_upper_population(psi0, Delta, d, T, dt) == pytest.approx(want, abs=1e-9)


def test_default_dt():
    assert tls.default_dt(0.1, tls.DriveWaveform(0.2, 0.3, 0.05)) == pytest.approx(0.02)
    with pytest.raises(ValueError):
        tls.default_dt(0.0, 0.0)
