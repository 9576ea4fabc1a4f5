"""Classical dynamics of the magnetically coupled pendula.

Two engines are provided:

* the full nonlinear equations ``J_k phi_k'' = -J_k omega_k^2 sin(phi_k) - dU/dphi_k``
  with the point-dipole potential ``U`` (lab frame), and
* the linearized equations around the quasistatic equilibrium
  ``phi_1'' = -omega_1^2 phi_1 + omega_0 eps(t) (phi_1 - phi_2)`` and the mirror
  equation for ``phi_2`` (quasistatic-relative frame).

Both are integrated with a fixed-step classical Runge-Kutta scheme so that
trajectories come out uniformly sampled.  The nonlinear engine has a
compiled fast path (:func:`simulate_nonlinear`); :func:`nonlinear_rhs` and
:func:`nonlinear_vector_field` evaluate the same kernels from Python.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DivergenceError, SingularityError
from .model import ApparatusParams, quasistatic_deflection

__all__ = [
    "FRAMES",
    "NewtonState",
    "Trajectory",
    "DipoleConfiguration",
    "NormalModes",
    "dipole_configuration",
    "dipole_potential",
    "total_energy",
    "nonlinear_rhs",
    "nonlinear_vector_field",
    "linear_rhs",
    "linear_vector_field",
    "integrate",
    "simulate_nonlinear",
    "simulate_linear",
    "mode_power_average",
    "linearized_eigenfrequencies",
    "to_lab",
    "to_relative",
]

FRAMES = ("lab", "relative")
FD_STEP = 1e-7  # rad, central-difference step for the dipole torque


@dataclass(frozen=True)
class NewtonState:
    """Deflections (rad), angular velocities (rad/s) and reference frame.

    ``frame`` is ``"lab"`` for absolute angles or ``"relative"`` for
    angles measured from the quasistatic equilibrium.
    """

    phi1: float
    phi2: float
    dphi1: float = 0.0
    dphi2: float = 0.0
    frame: str = "lab"

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        vals = (self.phi1, self.phi2, self.dphi1, self.dphi2)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("state components must be finite")
        if abs(self.phi1) >= math.pi / 2 or abs(self.phi2) >= math.pi / 2:
            raise ValueError("deflections must stay below pi/2")

    def as_array(self):
        return np.array([self.phi1, self.phi2, self.dphi1, self.dphi2])

    @classmethod
    def from_array(cls, y, frame="lab"):
        y = np.asarray(y, dtype=float)
        return cls(float(y[0]), float(y[1]), float(y[2]), float(y[3]), frame)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled trajectory.

    Attributes
    ----------
    t0, dt : float
        Start time and sample spacing (s).
    samples : ndarray, shape (n, 4, ...)
        Rows ``(phi1, phi2, dphi1, dphi2)``; trailing axes index a batch of
        independent runs.
    frame : str
    """

    t0: float
    dt: float
    samples: np.ndarray
    frame: str = "lab"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.samples.ndim < 2 or self.samples.shape[1] != 4:
            raise ValueError("samples must have shape (n, 4, ...)")
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def t(self):
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def phi1(self):
        return self.samples[:, 0]

    @property
    def phi2(self):
        return self.samples[:, 1]

    @property
    def dphi1(self):
        return self.samples[:, 2]

    @property
    def dphi2(self):
        return self.samples[:, 3]

    def state(self, i):
        return NewtonState.from_array(self.samples[i], self.frame)

    def final(self):
        return self.state(-1)


@dataclass(frozen=True)
class DipoleConfiguration:
    """Separation ``R`` (m) and orientation ``psi`` (rad) of a magnet pair."""

    R: float
    psi: float


@dataclass(frozen=True, eq=False)
class NormalModes:
    """Frozen-coupling eigenfrequencies of the linearized system.

    ``frequencies`` has trailing axis of length 4 ordered
    ``(-w_hi, -w_lo, w_lo, w_hi)``; an unstable mode appears as a purely
    imaginary pair ``+-i*sqrt(|lambda|)``.
    """

    frequencies: np.ndarray
    unstable: np.ndarray

    @property
    def positive(self):
        """``(w_lo, w_hi)`` as complex numbers."""
        return self.frequencies[..., 2], self.frequencies[..., 3]


# --------------------------------------------------------------------------
# dipole kernels, compiled; ``.py_func`` gives the numpy version


def _pair_energy(p1, p2, cf, L, l, pref):
    s1, c1 = np.sin(p1), np.cos(p1)
    s2, c2 = np.sin(p2), np.cos(p2)
    rx = L + l * s2 - l * s1
    ry = l * c1 - l * c2
    R = np.sqrt(rx * rx + ry * ry)
    ex = rx / R
    ey = ry / R
    # in-plane part of the rotating moment scales with cf; its out-of-plane
    # part is orthogonal to both m1 and e_R and drops out
    bracket = c1 * c2 + s1 * s2 - 3.0 * (c1 * ex + s1 * ey) * (c2 * ex + s2 * ey)
    return cf * pref * bracket / (R * R * R)


def _potential(p1, p2, t, par):
    cf = np.cos(par[7] * t + par[8])
    u = _pair_energy(p1, p2, cf, par[0], par[1], par[2])
    if par[6] != 0.0:
        u = u + _pair_energy(p1, p2, 1.0, par[3], par[4], par[5])
    return u


def _accel(p1, p2, t, par, h):
    g1 = (_potential(p1 + h, p2, t, par) - _potential(p1 - h, p2, t, par)) / (2.0 * h)
    g2 = (_potential(p1, p2 + h, t, par) - _potential(p1, p2 - h, t, par)) / (2.0 * h)
    a1 = -par[11] ** 2 * np.sin(p1) - g1 / par[9]
    a2 = -par[12] ** 2 * np.sin(p2) - g2 / par[10]
    return a1, a2


_jit = numba.njit(cache=True, error_model="numpy")
_pair_energy = _jit(_pair_energy)
_potential = _jit(_potential)
_accel = _jit(_accel)


@_jit
def _rk4_nonlinear(y0, t0, dt, n_steps, stride, par, h):
    n_out = n_steps // stride + 1
    out = np.empty((n_out, 4))
    p1, p2, v1, v2 = y0[0], y0[1], y0[2], y0[3]
    out[0, 0] = p1
    out[0, 1] = p2
    out[0, 2] = v1
    out[0, 3] = v2
    k = 1
    for i in range(n_steps):
        t = t0 + i * dt
        a1, b1 = _accel(p1, p2, t, par, h)
        q1 = p1 + 0.5 * dt * v1
        q2 = p2 + 0.5 * dt * v2
        w1 = v1 + 0.5 * dt * a1
        w2 = v2 + 0.5 * dt * b1
        a2, b2 = _accel(q1, q2, t + 0.5 * dt, par, h)
        r1 = p1 + 0.5 * dt * w1
        r2 = p2 + 0.5 * dt * w2
        x1 = v1 + 0.5 * dt * a2
        x2 = v2 + 0.5 * dt * b2
        a3, b3 = _accel(r1, r2, t + 0.5 * dt, par, h)
        s1 = p1 + dt * x1
        s2 = p2 + dt * x2
        z1 = v1 + dt * a3
        z2 = v2 + dt * b3
        a4, b4 = _accel(s1, s2, t + dt, par, h)
        p1 = p1 + dt / 6.0 * (v1 + 2.0 * w1 + 2.0 * x1 + z1)
        p2 = p2 + dt / 6.0 * (v2 + 2.0 * w2 + 2.0 * x2 + z2)
        v1 = v1 + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        v2 = v2 + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        if not (np.isfinite(p1) and np.isfinite(p2) and np.isfinite(v1) and np.isfinite(v2)):
            return out[:k], i + 1
        if (i + 1) % stride == 0:
            out[k, 0] = p1
            out[k, 1] = p2
            out[k, 2] = v1
            out[k, 3] = v2
            k += 1
    return out[:k], -1


def _kernel_params(app: ApparatusParams):
    c, p, m = app.constants, app.pendulum, app.magnets
    pref_l = c.mu0 * m.m_l**2 / (4 * math.pi)
    pref_u = c.mu0 * m.m_u**2 / (4 * math.pi)
    return np.array([
        m.L, p.l_l, pref_l,
        m.L_u, p.l_u, pref_u, 1.0 if m.upper else 0.0,
        m.Omega, m.phase,
        p.J1, p.J2, p.omega1, p.omega2,
    ])


def dipole_configuration(phi1, phi2, L, l):
    """Separation and orientation of two magnets mounted at distance `l` below pivots `L` apart."""
    rx = L + l * np.sin(phi2) - l * np.sin(phi1)
    ry = l * np.cos(phi1) - l * np.cos(phi2)
    return DipoleConfiguration(float(np.hypot(rx, ry)), float(np.arctan2(ry, rx)))


def dipole_potential(phi1, phi2, t, pair, app):
    """Dipole-dipole energy (J) of one magnet pair.

    Parameters
    ----------
    phi1, phi2 : float or ndarray
        Lab-frame deflections (rad).
    t : float or ndarray
        Time (s); sets the rotation factor of the lower pair.
    pair : {"lower", "upper"}
    app : ApparatusParams

    Raises
    ------
    SingularityError
        If the magnets coincide.
    """
    par = _kernel_params(app)
    if pair == "lower":
        L, l, pref = par[0], par[1], par[2]
        cf = app.magnets.drive_factor(t)
    elif pair == "upper":
        if not app.magnets.upper:
            return np.zeros(np.broadcast(phi1, phi2, t).shape)[()] * 1.0
        L, l, pref = par[3], par[4], par[5]
        cf = 1.0
    else:
        raise ValueError(f"pair must be 'lower' or 'upper', got {pair!r}")
    rx = L + l * np.sin(phi2) - l * np.sin(phi1)
    ry = l * np.cos(phi1) - l * np.cos(phi2)
    if np.any(np.hypot(rx, ry) <= 0):
        raise SingularityError("magnet collision: separation R vanishes")
    return _pair_energy.py_func(np.asarray(phi1, float), np.asarray(phi2, float), cf, L, l, pref)[()]


def total_energy(y, t, app):
    """Kinetic plus gravitational plus dipole energy (J) of a lab-frame state."""
    y = y.as_array() if isinstance(y, NewtonState) else np.asarray(y, dtype=float)
    p = app.pendulum
    p1, p2, v1, v2 = y[0], y[1], y[2], y[3]
    kin = 0.5 * (p.J1 * v1**2 + p.J2 * v2**2)
    grav = p.J1 * p.omega1**2 * (1 - np.cos(p1)) + p.J2 * p.omega2**2 * (1 - np.cos(p2))
    return (kin + grav + dipole_potential(p1, p2, t, "lower", app)
            + dipole_potential(p1, p2, t, "upper", app))


def nonlinear_rhs(state, t, app, h=FD_STEP):
    """Angular accelerations ``(ddphi1, ddphi2)`` of the nonlinear system.

    The dipole torque is the central finite difference of the potential
    with step `h`.
    """
    if state.frame != "lab":
        raise ValueError("nonlinear_rhs needs a lab-frame state")
    a1, a2 = _accel(state.phi1, state.phi2, float(t), _kernel_params(app), h)
    if not (math.isfinite(a1) and math.isfinite(a2)):
        raise SingularityError("dipole torque is not finite (magnet collision)")
    return a1, a2


def nonlinear_vector_field(app, h=FD_STEP):
    """``f(t, y)`` for :func:`integrate`, lab frame, single run."""
    par = _kernel_params(app)

    def f(t, y):
        a1, a2 = _accel(y[0], y[1], t, par, h)
        return np.array([y[2], y[3], a1, a2])

    return f


def _eps_at(eps, t):
    return eps(t) if callable(eps) else eps


def linear_rhs(state, t, eps, omega1, omega2):
    """Accelerations of the linearized system (quasistatic-relative frame).

    `eps` is a constant (rad/s) or a callable ``eps(t)``.
    """
    if state.frame != "relative":
        raise ValueError("linear_rhs needs a quasistatic-relative state")
    e = _eps_at(eps, t)
    w0 = 0.5 * (omega1 + omega2)
    d = state.phi1 - state.phi2
    return -omega1**2 * state.phi1 + w0 * e * d, -omega2**2 * state.phi2 - w0 * e * d


def linear_vector_field(eps, omega1, omega2):
    """``f(t, y)`` for :func:`integrate`; broadcasts over trailing batch axes.

    `omega1`, `omega2` and the value of `eps` may be arrays shaped like the
    batch.
    """
    w0 = 0.5 * (np.asarray(omega1) + np.asarray(omega2))
    w1sq = np.asarray(omega1) ** 2
    w2sq = np.asarray(omega2) ** 2

    def f(t, y):
        e = _eps_at(eps, t)
        c = w0 * e * (y[0] - y[1])
        return np.stack([y[2], y[3], -w1sq * y[0] + c, -w2sq * y[1] - c])

    return f


def _grid(t_span, dt):
    t0, t1 = map(float, t_span)
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    n = max(1, int(round((t1 - t0) / dt)))
    return t0, (t1 - t0) / n, n


def integrate(rhs, state0, t_span, dt=1e-3, sample_every=1):
    """Fixed-step classical RK4.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y) -> dy/dt`` with ``y`` of shape ``(4, ...)``.
    state0 : NewtonState or array_like, shape (4, ...)
        Arrays are taken to be in the relative frame unless the caller
        wraps them in a ``NewtonState``.
    t_span : (float, float)
    dt : float
        Requested step; adjusted slightly so the grid ends on ``t_span[1]``.
    sample_every : int
        Keep every n-th step.

    Returns
    -------
    Trajectory

    Raises
    ------
    DivergenceError
        On the first non-finite state.
    """
    if isinstance(state0, NewtonState):
        y = state0.as_array()
        frame = state0.frame
    else:
        y = np.array(state0, dtype=float)
        frame = "relative"
    if y.shape[0] != 4:
        raise ValueError("state must have leading dimension 4")
    t0, h, n = _grid(t_span, dt)
    stride = int(sample_every)
    if stride < 1:
        raise ValueError("sample_every must be >= 1")
    out = np.empty((n // stride + 1,) + y.shape)
    out[0] = y
    k = 1
    for i in range(n):
        t = t0 + i * h
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DivergenceError("non-finite state", time=t + h)
        if (i + 1) % stride == 0:
            out[k] = y
            k += 1
    return Trajectory(t0, h * stride, out[:k], frame)


def simulate_nonlinear(state0, t_span, app, dt=1e-3, sample_every=1, h=FD_STEP):
    """Integrate the nonlinear lab-frame equations with the compiled RK4 loop.

    Same scheme and kernels as ``integrate(nonlinear_vector_field(app), ...)``.
    """
    if state0.frame != "lab":
        raise ValueError("the nonlinear engine runs in the lab frame")
    t0, step, n = _grid(t_span, dt)
    stride = int(sample_every)
    if stride < 1:
        raise ValueError("sample_every must be >= 1")
    out, fail = _rk4_nonlinear(state0.as_array(), t0, step, n, stride, _kernel_params(app), h)
    if fail >= 0:
        raise DivergenceError("non-finite state in nonlinear engine", time=t0 + fail * step)
    return Trajectory(t0, step * stride, out, "lab")


@_jit
def _linear_accel(p1, p2, t, w1sq, w2sq, w0, eps0, A, Omega):
    c = w0 * (eps0 + A * math.cos(Omega * t)) * (p1 - p2)
    return -w1sq * p1 + c, -w2sq * p2 - c


@_jit
def _rk4_linear(y0, t0, dt, n_steps, stride, w1, w2, eps0, A, Omega, out, acc):
    # out: samples (or a 0-row array); acc: trapezoid sums of phi_+^2, phi_-^2
    w1sq, w2sq, w0 = w1 * w1, w2 * w2, 0.5 * (w1 + w2)
    p1, p2, v1, v2 = y0[0], y0[1], y0[2], y0[3]
    keep = out.shape[0] > 0
    if keep:
        out[0, 0] = p1
        out[0, 1] = p2
        out[0, 2] = v1
        out[0, 3] = v2
    acc[0] = 0.25 * (p1 + p2) ** 2
    acc[1] = 0.25 * (p1 - p2) ** 2
    k = 1
    for i in range(n_steps):
        t = t0 + i * dt
        a1, b1 = _linear_accel(p1, p2, t, w1sq, w2sq, w0, eps0, A, Omega)
        q1 = p1 + 0.5 * dt * v1
        q2 = p2 + 0.5 * dt * v2
        x1 = v1 + 0.5 * dt * a1
        x2 = v2 + 0.5 * dt * b1
        a2, b2 = _linear_accel(q1, q2, t + 0.5 * dt, w1sq, w2sq, w0, eps0, A, Omega)
        r1 = p1 + 0.5 * dt * x1
        r2 = p2 + 0.5 * dt * x2
        y1 = v1 + 0.5 * dt * a2
        y2 = v2 + 0.5 * dt * b2
        a3, b3 = _linear_accel(r1, r2, t + 0.5 * dt, w1sq, w2sq, w0, eps0, A, Omega)
        s1 = p1 + dt * y1
        s2 = p2 + dt * y2
        z1 = v1 + dt * a3
        z2 = v2 + dt * b3
        a4, b4 = _linear_accel(s1, s2, t + dt, w1sq, w2sq, w0, eps0, A, Omega)
        p1 = p1 + dt / 6.0 * (v1 + 2.0 * x1 + 2.0 * y1 + z1)
        p2 = p2 + dt / 6.0 * (v2 + 2.0 * x2 + 2.0 * y2 + z2)
        v1 = v1 + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        v2 = v2 + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        if not (np.isfinite(p1) and np.isfinite(p2) and np.isfinite(v1) and np.isfinite(v2)):
            return k, i + 1
        wgt = 1.0 if i < n_steps - 1 else 0.5
        acc[0] += wgt * 0.25 * (p1 + p2) ** 2
        acc[1] += wgt * 0.25 * (p1 - p2) ** 2
        if keep and (i + 1) % stride == 0:
            out[k, 0] = p1
            out[k, 1] = p2
            out[k, 2] = v1
            out[k, 3] = v2
            k += 1
    acc[0] *= dt
    acc[1] *= dt
    # the first sample carries trapezoid weight 1/2
    acc[0] -= 0.125 * dt * (y0[0] + y0[1]) ** 2
    acc[1] -= 0.125 * dt * (y0[0] - y0[1]) ** 2
    return k, -1


def _harmonic(drive):
    try:
        return float(drive.eps0), float(drive.A), float(drive.Omega)
    except AttributeError:
        return float(drive), 0.0, 0.0


def simulate_linear(state0, drive, omega1, omega2, t_span, dt=1e-3, sample_every=1):
    """Compiled RK4 for the linearized equations with a harmonic coupling.

    Parameters
    ----------
    state0 : NewtonState
        Quasistatic-relative frame.
    drive : DriveWaveform-like or float
        Anything with ``eps0``, ``A``, ``Omega`` attributes, or a constant.

    Returns
    -------
    Trajectory
    """
    if state0.frame != "relative":
        raise ValueError("the linearized engine runs in the quasistatic-relative frame")
    eps0, A, Om = _harmonic(drive)
    t0, step, n = _grid(t_span, dt)
    stride = int(sample_every)
    if stride < 1:
        raise ValueError("sample_every must be >= 1")
    out = np.empty((n // stride + 1, 4))
    acc = np.zeros(2)
    k, fail = _rk4_linear(state0.as_array(), t0, step, n, stride, float(omega1),
                          float(omega2), eps0, A, Om, out, acc)
    if fail >= 0:
        raise DivergenceError("non-finite state in linearized engine", time=t0 + fail * step)
    return Trajectory(t0, step * stride, out[:k], "relative")


def mode_power_average(state0, drive, omega1, omega2, t_span, dt=1e-3):
    """Time averages of ``phi_+^2`` and ``phi_-^2`` along a linearized run.

    ``phi_pm = (phi1 +- phi2)/2``; trapezoid rule over the step grid.
    Returns ``(nan, nan)`` if the run diverges.
    """
    eps0, A, Om = _harmonic(drive)
    t0, step, n = _grid(t_span, dt)
    acc = np.zeros(2)
    _, fail = _rk4_linear(state0.as_array(), t0, step, n, 1, float(omega1), float(omega2),
                          eps0, A, Om, np.empty((0, 4)), acc)
    if fail >= 0:
        return math.nan, math.nan
    span = step * n
    return acc[0] / span, acc[1] / span


def linearized_eigenfrequencies(eps, omega1, omega2, J1=1.0, J2=1.0):
    """Eigenfrequencies of the linearized system at frozen coupling.

    Solves ``det(V - w^2 M) = 0`` with ``M = diag(J1, J2)`` and
    ``V = [[J1 w1^2 - G, G], [G, J2 w2^2 - G]]``, ``G = eps omega0 J0``.

    Parameters
    ----------
    eps : float or ndarray
        Coupling (rad/s).
    omega1, omega2 : float
    J1, J2 : float

    Returns
    -------
    NormalModes
    """
    eps = np.asarray(eps, dtype=float)
    w0 = 0.5 * (omega1 + omega2)
    G = eps * w0 * 0.5 * (J1 + J2)
    # Q = M^-1/2 V M^-1/2, symmetric 2x2
    a = omega1**2 - G / J1
    d = omega2**2 - G / J2
    b = G / math.sqrt(J1 * J2)
    mid = 0.5 * (a + d)
    rad = np.sqrt(0.25 * (a - d) ** 2 + b * b)
    lam_hi = mid + rad
    lam_lo = mid - rad
    w_hi = np.sqrt(lam_hi.astype(complex))
    w_lo = np.sqrt(lam_lo.astype(complex))
    freqs = np.stack([-w_hi, -w_lo, w_lo, w_hi], axis=-1)
    return NormalModes(freqs, np.asarray(lam_lo < 0))


def _qs_and_rate(t, app):
    t = np.asarray(t, dtype=float)
    q1, q2 = quasistatic_deflection(t, app)
    Om = app.magnets.Omega
    if Om == 0:
        return q1, q2, np.zeros_like(q1), np.zeros_like(q2)
    h = 1e-4 / Om
    a1, a2 = quasistatic_deflection(t + h, app)
    b1, b2 = quasistatic_deflection(t - h, app)
    return q1, q2, (a1 - b1) / (2 * h), (a2 - b2) / (2 * h)


def _shift(obj, app, sign, frame):
    q1, q2, r1, r2 = _qs_and_rate(obj.t, app)
    shift = np.stack([q1, q2, r1, r2], axis=1)
    shift = shift.reshape(shift.shape + (1,) * (obj.samples.ndim - 2))
    return Trajectory(obj.t0, obj.dt, obj.samples + sign * shift, frame)


def to_lab(obj, app, t=None):
    """Convert a relative-frame state or trajectory to the lab frame.

    Adds the quasistatic deflection and its time derivative.  For a single
    :class:`NewtonState` pass the time `t`.
    """
    if obj.frame == "lab":
        return obj
    if isinstance(obj, NewtonState):
        q1, q2, r1, r2 = (float(v) for v in _qs_and_rate(0.0 if t is None else t, app))
        return NewtonState(obj.phi1 + q1, obj.phi2 + q2, obj.dphi1 + r1, obj.dphi2 + r2, "lab")
    return _shift(obj, app, +1, "lab")


def to_relative(obj, app, t=None):
    """Inverse of :func:`to_lab`."""
    if obj.frame == "relative":
        return obj
    if isinstance(obj, NewtonState):
        q1, q2, r1, r2 = (float(v) for v in _qs_and_rate(0.0 if t is None else t, app))
        return NewtonState(obj.phi1 - q1, obj.phi2 - q2, obj.dphi1 - r1, obj.dphi2 - r2,
                           "relative")
    return _shift(obj, app, -1, "relative")
