import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp, trapezoid

from pendula import errors, newton, tls
from pendula.model import ApparatusParams, MagnetAssembly, interaction_energies

from test_model import dipole_energy_oracle


@pytest.fixture(scope="module")
def static_app():
    return ApparatusParams(magnets=MagnetAssembly(L=0.33, Omega=0.0))


@given(st.floats(-0.05, 0.05), st.floats(-0.05, 0.05))
def test_dipole_potential_matches_vector_oracle(a, b):
    app = ApparatusParams(magnets=MagnetAssembly(L=0.33, Omega=0.0))
    got = newton.dipole_potential(a, b, 0.0, "lower", app)
    want = dipole_energy_oracle(a, b, 0.33, app.pendulum.l_l, app.magnets.m_l)
    assert got == pytest.approx(want, rel=1e-12)


def test_dipole_potential_rotation_and_upper(app):
    a = app.replace(Omega=0.1)
    u0 = newton.dipole_potential(0.0, 0.0, 0.0, "lower", a)
    uT = newton.dipole_potential(0.0, 0.0, math.pi / 0.1, "lower", a)
    assert u0 < 0 and uT == pytest.approx(-u0)
    assert newton.dipole_potential(0.0, 0.0, 0.0, "upper", app) == 0.0
    assert newton.dipole_potential(0.0, 0.0, 0.0, "upper", app.replace(upper=True)) < 0
    with pytest.raises(ValueError):
        newton.dipole_potential(0.0, 0.0, 0.0, "middle", app)


def test_hessian_matches_interaction_energy(static_app):
    G = interaction_energies(static_app)[0]
    h = 1e-4
    U = lambda a, b: newton.dipole_potential(a, b, 0.0, "lower", static_app)
    mixed = (U(h, h) - U(h, -h) - U(-h, h) + U(-h, -h)) / (4 * h * h)
    assert mixed == pytest.approx(G, rel=0.01)


def test_dipole_configuration():
    c = newton.dipole_configuration(0.0, 0.0, 0.4, 1.0)
    assert c.R == pytest.approx(0.4) and c.psi == pytest.approx(0.0)


def test_torque_against_richardson(static_app):
    s = newton.NewtonState(0.01, -0.02)
    a1, a2 = newton.nonlinear_rhs(s, 0.0, static_app)
    p = static_app.pendulum
    U = lambda x, y: newton.dipole_potential(x, y, 0.0, "lower", static_app)

    def d1(h):
        return (U(s.phi1 + h, s.phi2) - U(s.phi1 - h, s.phi2)) / (2 * h)

    h = 1e-3
    rich = (4 * d1(h / 2) - d1(h)) / 3
    want = -p.omega1**2 * math.sin(s.phi1) - rich / p.J1
    assert a1 == pytest.approx(want, rel=1e-6)


def test_state_validation():
    with pytest.raises(ValueError):
        newton.NewtonState(2.0, 0.0)
    with pytest.raises(ValueError):
        newton.NewtonState(0.0, 0.0, frame="moving")
    with pytest.raises(ValueError):
        newton.NewtonState(math.nan, 0.0)
    s = newton.NewtonState(0.1, 0.2, 0.3, 0.4, "relative")
    assert newton.NewtonState.from_array(s.as_array(), "relative") == s


def test_frame_checks(app):
    with pytest.raises(ValueError):
        newton.nonlinear_rhs(newton.NewtonState(0, 0, frame="relative"), 0.0, app)
    with pytest.raises(ValueError):
        newton.linear_rhs(newton.NewtonState(0, 0), 0.0, 0.1, 3.3, 3.2)
    with pytest.raises(ValueError):
        newton.simulate_linear(newton.NewtonState(0, 0), 0.1, 3.3, 3.2, (0, 1))


def test_energy_conserved_without_drive(static_app):
    s = newton.NewtonState(0.01, -0.005)
    tr = newton.simulate_nonlinear(s, (0, 60), static_app, dt=1e-3, sample_every=1000)
    E = np.array([newton.total_energy(tr.state(i), t, static_app) for i, t in enumerate(tr.t)])
    assert np.max(np.abs(E / E[0] - 1)) < 1e-8


def test_compiled_matches_python_rk4(static_app):
    s = newton.NewtonState(0.01, 0.0)
    a = newton.simulate_nonlinear(s, (0, 2), static_app, dt=1e-2)
    b = newton.integrate(newton.nonlinear_vector_field(static_app), s, (0, 2), dt=1e-2)
    np.testing.assert_allclose(a.samples, b.samples, rtol=1e-12, atol=1e-15)


def test_linear_engine_matches_ode_oracle():
    w1, w2 = 3.35, 3.28
    d = tls.DriveWaveform(0.02, 0.15, 0.05)
    s = newton.NewtonState(0.01, 0.0, 0.0, 0.0, "relative")
    tr = newton.simulate_linear(s, d, w1, w2, (0, 100), dt=1e-3, sample_every=100000)
    f = newton.linear_vector_field(d, w1, w2)
    ref = solve_ivp(f, (0, 100), s.as_array(), method="DOP853", rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(tr.final().as_array(), ref.y[:, -1], atol=1e-9)


def test_linear_engine_matches_generic_integrator():
    d = tls.DriveWaveform(0.0, 0.2, 0.04)
    s = newton.NewtonState(0.0, 0.01, 0.0, 0.0, "relative")
    a = newton.simulate_linear(s, d, 3.3, 3.25, (0, 20), dt=0.01)
    b = newton.integrate(newton.linear_vector_field(d, 3.3, 3.25), s, (0, 20), dt=0.01)
    np.testing.assert_allclose(a.samples, b.samples, rtol=1e-11, atol=1e-15)
    a1, a2 = newton.linear_rhs(s, 0.0, d, 3.3, 3.25)
    assert a1 == pytest.approx(3.275 * 0.2 * -0.01)
    assert a2 == pytest.approx(-3.25**2 * 0.01 + 3.275 * 0.2 * 0.01)


def test_integrate_batch_and_divergence():
    y0 = np.zeros((4, 3))
    y0[0] = [0.01, 0.02, 0.03]
    tr = newton.integrate(newton.linear_vector_field(0.0, 3.3, 3.3), y0, (0, 1), dt=0.01)
    assert tr.samples.shape == (101, 4, 3)
    blow = lambda t, y: y * 1e3
    with pytest.raises(errors.DivergenceError) as exc, np.errstate(over="ignore"):
        newton.integrate(blow, np.ones(4), (0, 10), dt=0.1)
    assert exc.value.time is not None


def test_mode_power_average_matches_trapezoid():
    d = tls.DriveWaveform(0.05, 0.2, 0.05)
    s = newton.NewtonState(0.01, -0.01, 0.0, 0.0, "relative")
    a, b = newton.mode_power_average(s, d, 3.34, 3.30, (0, 200), dt=0.01)
    tr = newton.simulate_linear(s, d, 3.34, 3.30, (0, 200), dt=0.01)
    plus = 0.5 * (tr.phi1 + tr.phi2)
    minus = 0.5 * (tr.phi1 - tr.phi2)
    assert a == pytest.approx(trapezoid(plus**2, tr.t) / 200, rel=1e-10)
    assert b == pytest.approx(trapezoid(minus**2, tr.t) / 200, rel=1e-10)


@given(st.floats(-1.0, 1.5), st.floats(3.0, 3.5), st.floats(-0.2, 0.2),
       st.floats(2.0, 4.0), st.floats(2.0, 4.0))
def test_eigenfrequencies_match_dense_solver(eps, w1, dw, J1, J2):
    w2 = w1 + dw
    modes = newton.linearized_eigenfrequencies(eps, w1, w2, J1, J2)
    G = eps * 0.5 * (w1 + w2) * 0.5 * (J1 + J2)
    K = np.array([[J1 * w1**2 - G, G], [G, J2 * w2**2 - G]])
    lam = np.sort(np.linalg.eigvals(np.linalg.solve(np.diag([J1, J2]), K)).real)
    want = np.sqrt(lam.astype(complex))
    np.testing.assert_allclose(modes.positive, want, atol=1e-10)
    assert bool(modes.unstable) == (lam[0] < 0)


def test_instability_threshold_symmetric():
    w = 3.3
    assert not newton.linearized_eigenfrequencies(0.49 * w, w, w).unstable
    assert newton.linearized_eigenfrequencies(0.51 * w, w, w).unstable


def test_eigenfrequencies_uncoupled():
    lo, hi = newton.linearized_eigenfrequencies(0.0, 3.3, 3.2).positive
    assert lo == pytest.approx(3.2) and hi == pytest.approx(3.3)


def test_lab_relative_round_trip(app):
    s = newton.NewtonState(0.01, 0.0, 0.001, 0.0, "relative")
    lab = newton.to_lab(s, app, t=3.0)
    assert lab.frame == "lab"
    back = newton.to_relative(lab, app, t=3.0)
    np.testing.assert_allclose(back.as_array(), s.as_array(), atol=1e-15)
    tr = newton.simulate_linear(s, 0.0, 3.3, 3.2, (0, 1), dt=0.1)
    np.testing.assert_allclose(newton.to_relative(newton.to_lab(tr, app), app).samples,
                               tr.samples, atol=1e-15)


def test_quasistatic_tracking(app):
    # the lab-frame run started on the quasistatic branch stays close to it
    a = app.replace(L=0.33)
    s = newton.to_lab(newton.NewtonState(0, 0, 0, 0, "relative"), a, t=0.0)
    tr = newton.simulate_nonlinear(s, (0, 40), a, dt=0.01, sample_every=10)
    rel = newton.to_relative(tr, a)
    assert np.max(np.abs(rel.phi1)) < 0.05 * np.max(np.abs(tr.phi1))
