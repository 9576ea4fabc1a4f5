"""Envelope (two-level) dynamics and closed-form qubit formulas.

The slowly varying envelopes ``Psi_k`` of ``phi_k = Psi_k exp(-i omega0 t) + c.c.``
obey ``i dPsi/dt = H(t) Psi`` with, in the individual basis ``(Psi_1, Psi_2)``,

    H_rabi = 1/2 [[Delta - eps, eps], [eps, -Delta - eps]]

and, in the mode basis ``Psi_pm = (Psi_1 +- Psi_2)/sqrt(2)``,

    H_lz = 1/2 [[0, Delta], [Delta, -2 eps]].

The two are related by ``S = (sigma_x + sigma_z)/sqrt(2)``.  Units are rad/s
with hbar = 1.

Propagation uses the exact exponential of the midpoint Hamiltonian of each
step, so the norm is conserved to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DivergenceError, NoCrossingError

__all__ = [
    "BASES",
    "EnvelopeState",
    "EnvelopeTrajectory",
    "DriveWaveform",
    "SampledDrive",
    "LinearSweep",
    "AdiabaticPhase",
    "S_MATRIX",
    "to_modes",
    "to_individual",
    "hamiltonian_rabi",
    "hamiltonian_lz",
    "propagator",
    "evolve",
    "default_dt",
    "rabi_frequency",
    "effective_rabi",
    "sweep_velocity",
    "lz_probability",
    "adiabatic_eigenvalues",
    "adiabatic_eigenvectors",
    "adiabatic_phase",
    "lz_sweep",
    "mean_upper_population",
]

BASES = ("individual", "modes")
S_MATRIX = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
_CHUNK = 1 << 16


@dataclass(frozen=True)
class EnvelopeState:
    """Pair of complex envelopes in the individual or mode basis."""

    psi_a: complex
    psi_b: complex
    basis: str = "modes"

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"basis must be one of {BASES}, got {self.basis!r}")
        n = self.norm
        if not (math.isfinite(n) and n > 0):
            raise ValueError("envelope norm must be finite and positive")

    @property
    def norm(self):
        return abs(self.psi_a) ** 2 + abs(self.psi_b) ** 2

    def as_array(self):
        return np.array([self.psi_a, self.psi_b], dtype=complex)

    @classmethod
    def from_array(cls, psi, basis="modes"):
        return cls(complex(psi[0]), complex(psi[1]), basis)

    def to(self, basis):
        """Same state expressed in `basis`."""
        if basis == self.basis:
            return self
        if basis not in BASES:
            raise ValueError(f"unknown basis {basis!r}")
        return EnvelopeState.from_array(S_MATRIX @ self.as_array(), basis)

    def populations(self):
        p = np.abs(self.as_array()) ** 2
        return p / p.sum()


def to_modes(psi):
    """``(Psi_1, Psi_2) -> (Psi_+, Psi_-)`` along the last-but-one axis of length 2."""
    return np.einsum("ij,...j->...i", S_MATRIX, psi)


to_individual = to_modes  # S is its own inverse


@dataclass(frozen=True, eq=False)
class EnvelopeTrajectory:
    """Uniformly sampled envelope evolution.

    Attributes
    ----------
    t0, dt : float
    psi : ndarray, shape (n, 2), complex
    basis : str
    """

    t0: float
    dt: float
    psi: np.ndarray
    basis: str = "modes"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.basis not in BASES:
            raise ValueError(f"unknown basis {self.basis!r}")

    def __len__(self):
        return self.psi.shape[0]

    @property
    def t(self):
        return self.t0 + self.dt * np.arange(len(self))

    def norm(self):
        return np.sum(np.abs(self.psi) ** 2, axis=1)

    def populations(self):
        """``|psi|^2 / N`` with shape (n, 2)."""
        p = np.abs(self.psi) ** 2
        return p / p.sum(axis=1, keepdims=True)

    def to(self, basis):
        if basis == self.basis:
            return self
        if basis not in BASES:
            raise ValueError(f"unknown basis {basis!r}")
        return EnvelopeTrajectory(self.t0, self.dt, to_modes(self.psi), basis)

    def state(self, i):
        return EnvelopeState.from_array(self.psi[i], self.basis)


@dataclass(frozen=True)
class DriveWaveform:
    """Harmonic coupling ``eps(t) = eps0 + A cos(Omega t)`` (rad/s)."""

    eps0: float
    A: float
    Omega: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.eps0, self.A, self.Omega)):
            raise ValueError("drive parameters must be finite")
        if self.Omega < 0:
            raise ValueError("Omega must be non-negative")

    def __call__(self, t):
        return self.eps0 + self.A * np.cos(self.Omega * np.asarray(t, dtype=float))

    @property
    def period(self):
        return 2 * math.pi / self.Omega

    @property
    def rate_scale(self):
        return abs(self.eps0) + abs(self.A)

    @property
    def is_harmonic(self):
        return True

    def crossing_times(self):
        """First two zero crossings of eps(t) within one period."""
        if self.A < abs(self.eps0) or self.A == 0:
            raise NoCrossingError(
                f"A = {self.A!r} < |eps0| = {abs(self.eps0)!r}: the crossing is never reached")
        t1 = math.acos(-self.eps0 / self.A) / self.Omega
        return t1, self.period - t1


@dataclass(frozen=True, eq=False)
class SampledDrive:
    """Coupling given as a uniformly sampled table, linearly interpolated."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if len(self.values) < 2:
            raise ValueError("need at least two samples")

    @property
    def t_end(self):
        return self.t0 + self.dt * (len(self.values) - 1)

    @property
    def rate_scale(self):
        return float(np.max(np.abs(self.values)))

    @property
    def is_harmonic(self):
        return False

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tol = 1e-9 * self.dt
        if np.any(t < self.t0 - tol) or np.any(t > self.t_end + tol):
            raise ValueError("requested time outside the sampled drive")
        grid = self.t0 + self.dt * np.arange(len(self.values))
        return np.interp(t, grid, self.values)


@dataclass(frozen=True)
class LinearSweep:
    """Linearized drive ``eps(t) = v (t - t_cross)``."""

    v: float
    t_cross: float = 0.0

    @property
    def is_harmonic(self):
        return False

    def __call__(self, t):
        return self.v * (np.asarray(t, dtype=float) - self.t_cross)


@dataclass(frozen=True, eq=False)
class AdiabaticPhase:
    """Accumulated ``B = int eps dt`` and ``Phi_ad = int sqrt(Delta^2 + eps^2) dt``."""

    t: np.ndarray
    B_series: np.ndarray
    Phi_series: np.ndarray

    @property
    def B(self):
        return float(self.B_series[-1])

    @property
    def Phi_ad(self):
        return float(self.Phi_series[-1])


def _as_eps(drive, t):
    if callable(drive):
        return np.asarray(drive(t), dtype=float)
    return np.broadcast_to(np.asarray(drive, dtype=float), np.shape(t))


def _check_gauge(gauge):
    if gauge not in ("standard", "traceless"):
        raise ValueError("gauge must be 'standard' or 'traceless'")


def hamiltonian_rabi(t, Delta, drive, gauge="standard"):
    """Individual-basis Hamiltonian, shape ``t.shape + (2, 2)``.

    `drive` is a callable ``eps(t)`` or a constant.  ``gauge='traceless'``
    drops the ``-eps/2`` identity term.
    """
    _check_gauge(gauge)
    eps = _as_eps(drive, t)
    H = np.empty(eps.shape + (2, 2), dtype=complex)
    H[..., 0, 0] = 0.5 * (Delta - eps)
    H[..., 1, 1] = 0.5 * (-Delta - eps)
    H[..., 0, 1] = 0.5 * eps
    H[..., 1, 0] = 0.5 * eps
    if gauge == "traceless":
        H[..., 0, 0] += 0.5 * eps
        H[..., 1, 1] += 0.5 * eps
    return H


def hamiltonian_lz(t, Delta, drive, gauge="standard"):
    """Mode-basis Hamiltonian, shape ``t.shape + (2, 2)``."""
    _check_gauge(gauge)
    eps = _as_eps(drive, t)
    H = np.zeros(eps.shape + (2, 2), dtype=complex)
    H[..., 0, 1] = 0.5 * Delta
    H[..., 1, 0] = 0.5 * Delta
    H[..., 1, 1] = -eps
    if gauge == "traceless":
        H[..., 0, 0] += 0.5 * eps
        H[..., 1, 1] += 0.5 * eps
    return H


def _pauli_components(H):
    h0 = 0.5 * (H[..., 0, 0] + H[..., 1, 1]).real
    hz = 0.5 * (H[..., 0, 0] - H[..., 1, 1]).real
    hx = H[..., 0, 1].real
    hy = -H[..., 0, 1].imag
    return h0, hx, hy, hz


def propagator(H, dt):
    """``exp(-i H dt)`` for Hermitian 2x2 `H` (any leading shape), closed form."""
    H = np.asarray(H)
    h0, hx, hy, hz = _pauli_components(H)
    r = np.sqrt(hx * hx + hy * hy + hz * hz)
    c = np.cos(r * dt)
    s = dt * np.sinc(r * dt / np.pi)  # sin(r dt)/r, finite at r = 0
    ph = np.exp(-1j * h0 * dt)
    U = np.empty(H.shape, dtype=complex)
    U[..., 0, 0] = ph * (c - 1j * s * hz)
    U[..., 1, 1] = ph * (c + 1j * s * hz)
    U[..., 0, 1] = ph * (-1j * s * (hx - 1j * hy))
    U[..., 1, 0] = ph * (-1j * s * (hx + 1j * hy))
    return U


@numba.njit(cache=True)
def _apply_steps(a, b, h0, hx, hy, hz, dt, stride, out, k0, phase):
    # phase counts completed steps so sampling is continuous across chunks
    k = k0
    for i in range(h0.shape[0]):
        r = math.sqrt(hx[i] * hx[i] + hy[i] * hy[i] + hz[i] * hz[i])
        c = math.cos(r * dt)
        s = dt if r * dt < 1e-300 else math.sin(r * dt) / r
        ph = complex(math.cos(h0[i] * dt), -math.sin(h0[i] * dt))
        u00 = ph * complex(c, -s * hz[i])
        u11 = ph * complex(c, s * hz[i])
        u01 = ph * complex(-s * hy[i], -s * hx[i])
        u10 = ph * complex(s * hy[i], -s * hx[i])
        a, b = u00 * a + u01 * b, u10 * a + u11 * b
        phase += 1
        if phase % stride == 0:
            out[k, 0] = a
            out[k, 1] = b
            k += 1
    return a, b, k, phase


def default_dt(Delta, drive):
    """``0.01 / max(|Delta|, |eps0| + A, Omega)``."""
    rates = [abs(Delta)]
    if isinstance(drive, DriveWaveform):
        rates += [drive.rate_scale, drive.Omega]
    elif isinstance(drive, SampledDrive):
        rates.append(drive.rate_scale)
    elif isinstance(drive, (int, float)):
        rates.append(abs(drive))
    top = max(rates)
    if top == 0:
        raise ValueError("cannot choose a step for a vanishing Hamiltonian")
    return 0.01 / top


def evolve(state0, hamiltonian, t_span, dt, sample_every=1):
    """Propagate an envelope state.

    Parameters
    ----------
    state0 : EnvelopeState
    hamiltonian : callable
        ``H(t)`` returning ``t.shape + (2, 2)`` Hermitian matrices, expressed
        in the basis of `state0`.
    t_span : (float, float)
    dt : float
        Requested step; adjusted so the grid ends on ``t_span[1]``.
    sample_every : int

    Returns
    -------
    EnvelopeTrajectory

    Raises
    ------
    DivergenceError
        If the Hamiltonian has non-finite entries.
    """
    t0, t1 = map(float, t_span)
    if not (dt > 0 and t1 > t0):
        raise ValueError("need dt > 0 and an increasing span")
    n = max(1, int(round((t1 - t0) / dt)))
    h = (t1 - t0) / n
    stride = int(sample_every)
    if stride < 1:
        raise ValueError("sample_every must be >= 1")
    out = np.empty((n // stride + 1, 2), dtype=complex)
    a, b = complex(state0.psi_a), complex(state0.psi_b)
    out[0] = a, b
    k, done = 1, 0
    for start in range(0, n, _CHUNK):
        idx = np.arange(start, min(n, start + _CHUNK))
        H = np.asarray(hamiltonian(t0 + (idx + 0.5) * h))
        if not np.all(np.isfinite(H)):
            bad = idx[~np.all(np.isfinite(H.reshape(len(idx), -1)), axis=1)][0]
            raise DivergenceError("non-finite Hamiltonian", time=t0 + (bad + 0.5) * h)
        h0, hx, hy, hz = (np.ascontiguousarray(x) for x in _pauli_components(H))
        a, b, k, done = _apply_steps(a, b, h0, hx, hy, hz, h, stride, out, k, done)
    return EnvelopeTrajectory(t0, h * stride, out[:k], state0.basis)


def rabi_frequency(app):
    """``Omega_R = A/2 = 3 mu0 m_l^2 l_l^2 / (pi omega0 J0 L^5)`` (rad/s).

    Uses the uncorrected lower-pair modulation amplitude.
    """
    c, p, m = app.constants, app.pendulum, app.magnets
    return 3 * c.mu0 * m.m_l**2 * p.l_l**2 / (math.pi * p.omega0 * p.J0 * m.L**5)


def effective_rabi(Delta, Omega, Omega_R):
    """Generalized Rabi frequency and visibility.

    Returns
    -------
    Omega_eff : float or ndarray
        ``sqrt((Delta - Omega)^2 + Omega_R^2)``.
    visibility : float or ndarray
        ``Omega_R^2 / Omega_eff^2``.
    """
    if np.any(np.asarray(Omega_R) < 0):
        raise ValueError("Omega_R must be non-negative")
    w = np.hypot(np.asarray(Delta) - Omega, Omega_R)
    if np.any(w == 0):
        raise ValueError("visibility undefined: Omega_R = 0 at resonance")
    return w[()], (np.asarray(Omega_R) ** 2 / w**2)[()]


def sweep_velocity(Omega, A, eps0, direction=1):
    """Slope of eps(t) at the crossing: ``direction * Omega sqrt(A^2 - eps0^2)``."""
    if A < abs(eps0):
        raise NoCrossingError(f"A = {A!r} < |eps0| = {abs(eps0)!r}")
    return math.copysign(Omega * math.sqrt(A * A - eps0 * eps0), direction)


def lz_probability(Delta, v):
    """Diabatic passage probability ``exp(-pi Delta^2 / (2|v|))``."""
    v = np.asarray(v, dtype=float)
    if np.any(v == 0):
        raise ValueError("sweep velocity must be nonzero")
    return np.exp(-np.pi * np.asarray(Delta) ** 2 / (2 * np.abs(v)))[()]


def adiabatic_eigenvalues(eps, Delta):
    """Eigenvalues ``(w_plus, w_minus) = ((-eps +- sqrt(Delta^2 + eps^2))/2)`` of ``H_lz``."""
    eps = np.asarray(eps, dtype=float)
    root = np.hypot(Delta, eps)
    return (0.5 * (-eps + root))[()], (0.5 * (-eps - root))[()]


def adiabatic_eigenvectors(eps, Delta):
    """Normalized eigenvectors of ``H_lz`` at frozen `eps` in the mode basis.

    Returns
    -------
    upper, lower : ndarray, shape (2,)
    """
    H = hamiltonian_lz(np.asarray(float(eps)), Delta, float(eps))
    w, v = np.linalg.eigh(H)
    return v[:, 1], v[:, 0]


def adiabatic_phase(drive, Delta, t_span, dt):
    """Trapezoid accumulation of ``B`` and ``Phi_ad`` on a uniform grid."""
    t0, t1 = map(float, t_span)
    n = max(1, int(round((t1 - t0) / dt)))
    t = np.linspace(t0, t1, n + 1)
    eps = _as_eps(drive, t)
    h = (t1 - t0) / n
    B = np.concatenate([[0.0], np.cumsum(0.5 * h * (eps[1:] + eps[:-1]))])
    e = np.hypot(Delta, eps)
    Phi = np.concatenate([[0.0], np.cumsum(0.5 * h * (e[1:] + e[:-1]))])
    return AdiabaticPhase(t, B, Phi)


def lz_sweep(Delta, v, span_factor=20.0, dt=None):
    """Numerical single passage through the crossing with ``eps = v t``.

    Starts in the adiabatic ground state at ``-T`` and returns the final
    probability of having stayed in the diabatic state, i.e. of ending in
    the excited adiabatic state.  ``T = span_factor * max(|Delta|, sqrt|v|) / |v|``.
    """
    if v == 0:
        raise ValueError("sweep velocity must be nonzero")
    av = abs(v)
    T = span_factor * max(abs(Delta), math.sqrt(av)) / av
    if dt is None:
        dt = 0.01 / max(abs(Delta), av * T)
    drive = LinearSweep(v)
    _, lower0 = adiabatic_eigenvectors(drive(-T), Delta)
    psi0 = EnvelopeState.from_array(lower0, "modes")
    n = max(1, int(round(2 * T / dt)))
    traj = evolve(psi0, lambda t: hamiltonian_lz(t, Delta, drive), (-T, T), 2 * T / n,
                  sample_every=n)
    upper1, _ = adiabatic_eigenvectors(drive(T), Delta)
    psi1 = traj.psi[-1]
    return float(abs(np.vdot(upper1, psi1)) ** 2 / np.sum(abs(psi1) ** 2))


@numba.njit(cache=True)
def _mean_upper_cosine(a, b, Delta, eps0, A, Omega, t_end, dt):
    n = max(1, int(round(t_end / dt)))
    h = t_end / n
    hx = 0.5 * Delta
    acc = 0.5 * (abs(a) ** 2) / (abs(a) ** 2 + abs(b) ** 2)
    for i in range(n):
        eps = eps0 + A * math.cos(Omega * (i + 0.5) * h)
        # H = -eps/2 I + (Delta/2) sigma_x + (eps/2) sigma_z
        hz = 0.5 * eps
        r = math.sqrt(hx * hx + hz * hz)
        c = math.cos(r * h)
        s = h if r * h < 1e-300 else math.sin(r * h) / r
        ph = complex(math.cos(0.5 * eps * h), math.sin(0.5 * eps * h))
        u00 = ph * complex(c, -s * hz)
        u11 = ph * complex(c, s * hz)
        u01 = ph * complex(0.0, -s * hx)
        a, b = u00 * a + u01 * b, u01 * a + u11 * b
        p = abs(a) ** 2 / (abs(a) ** 2 + abs(b) ** 2)
        acc += p if i < n - 1 else 0.5 * p
    return acc / n


def mean_upper_population(psi0, Delta, drive, t_end, dt=None):
    """Trapezoid time average of ``P_+`` under ``H_lz`` with a harmonic drive.

    A compiled loop for scans over many drive parameters; equivalent to
    averaging ``evolve(...).populations()[:, 0]``.
    """
    if dt is None:
        dt = default_dt(Delta, drive)
    a, b = complex(psi0[0]), complex(psi0[1])
    return _mean_upper_cosine(a, b, float(Delta), float(drive.eps0), float(drive.A),
                              float(drive.Omega), float(t_end), float(dt))
