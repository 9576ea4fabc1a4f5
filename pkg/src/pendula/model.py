"""Apparatus parameters and the effective two-level coupling they produce.

All frequencies are angular (rad/s) and all lengths are in metres.  The
functions here are pure; they accept an :class:`ApparatusParams` bundle and
return plain floats or numpy arrays.

The mapping from geometry to the two-level parameters runs through three
steps:

1. interaction energies ``G_l`` and ``G_u`` of the lower (rotating) and upper
   (static) magnet pairs,
2. the quasistatic equilibrium deflection of the pendula under the
   modulated magnetic force,
3. the curvature correction ``(1 - (l/L) dphi_qs)**-5`` which feeds the
   equilibrium shift back into the effective coupling ``eps(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SingularityError

__all__ = [
    "MU0",
    "PhysicalConstants",
    "PendulumParams",
    "MagnetAssembly",
    "ApparatusParams",
    "TlsParams",
    "center_of_mass_distance",
    "interaction_energies",
    "raw_modulation",
    "quasistatic_deflection",
    "effective_coupling",
    "fourier_drive_params",
    "effective_tls_params",
    "params_from_extremes",
]

MU0 = 4e-7 * math.pi

# Measured pairs of reduced length l_r = g/omega**2 and centre-of-mass
# distance for the adjustable pendulum; used to interpolate l_c.
_L_REDUCED = (0.818, 0.912)
_L_CENTER = (0.754, 0.841)

DEFAULT_F1 = 0.53365  # Hz
DEFAULT_F2 = 0.52195  # Hz
DEFAULT_MASS = 4.242  # kg
DEFAULT_L_LOWER = 1.148  # m, pivot to lower magnet
DEFAULT_L_UPPER = 0.635  # m, pivot to upper magnet
DEFAULT_M_LOWER = 25.37  # A m^2
DEFAULT_M_UPPER = 6.544  # A m^2
DEFAULT_L = 0.454  # m
DEFAULT_L_U = 0.13  # m
DEFAULT_OMEGA = 2 * math.pi * 11.7e-3  # rad/s


@dataclass(frozen=True)
class PhysicalConstants:
    """Vacuum permeability (T m/A) and gravitational acceleration (m/s^2)."""

    mu0: float = MU0
    g: float = 9.807232

    def __post_init__(self):
        if not (self.g > 0 and math.isfinite(self.g)):
            raise ValueError(f"g must be positive, got {self.g!r}")
        if self.mu0 != MU0:
            raise ValueError("mu0 is fixed at 4*pi*1e-7")


def center_of_mass_distance(omega, g=9.807232):
    """Centre-of-mass distance of a physical pendulum from its frequency.

    Linear interpolation (and extrapolation) of the measured relation
    between reduced length ``g/omega**2`` and centre-of-mass distance.
    """
    lr = g / omega**2
    slope = (_L_CENTER[1] - _L_CENTER[0]) / (_L_REDUCED[1] - _L_REDUCED[0])
    return _L_CENTER[0] + slope * (lr - _L_REDUCED[0])


@dataclass(frozen=True)
class PendulumParams:
    """Mechanical parameters of the two physical pendula.

    Attributes
    ----------
    omega1, omega2 : float
        Angular eigenfrequencies (rad/s).
    J1, J2 : float
        Moments of inertia about the pivots (kg m^2).
    l_c1, l_c2 : float
        Centre-of-mass distances from the pivots (m).
    M : float
        Pendulum mass (kg).
    l_l, l_u : float
        Pivot to lower and upper magnet distances (m).
    """

    omega1: float
    omega2: float
    J1: float
    J2: float
    l_c1: float
    l_c2: float
    M: float = DEFAULT_MASS
    l_l: float = DEFAULT_L_LOWER
    l_u: float = DEFAULT_L_UPPER

    def __post_init__(self):
        for name in ("omega1", "omega2", "J1", "J2", "l_c1", "l_c2", "M", "l_l", "l_u"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if abs(self.omega1 - self.omega2) >= 0.1 * self.omega0:
            raise ValueError(
                "|omega1 - omega2| must stay below 0.1*omega0 "
                f"(got {abs(self.omega1 - self.omega2)!r} vs omega0={self.omega0!r})"
            )

    @classmethod
    def from_frequencies(cls, f1=DEFAULT_F1, f2=DEFAULT_F2, *, g=9.807232,
                         M=DEFAULT_MASS, l_c1=None, l_c2=None,
                         l_l=DEFAULT_L_LOWER, l_u=DEFAULT_L_UPPER):
        """Build from eigenfrequencies in Hz; J_k = M l_ck g / omega_k**2."""
        w1, w2 = 2 * math.pi * f1, 2 * math.pi * f2
        return cls.from_angular(w1, w2, g=g, M=M, l_c1=l_c1, l_c2=l_c2, l_l=l_l, l_u=l_u)

    @classmethod
    def from_angular(cls, omega1, omega2, *, g=9.807232, M=DEFAULT_MASS,
                     l_c1=None, l_c2=None, l_l=DEFAULT_L_LOWER, l_u=DEFAULT_L_UPPER):
        """Build from angular eigenfrequencies (rad/s)."""
        if l_c1 is None:
            l_c1 = center_of_mass_distance(omega1, g)
        if l_c2 is None:
            l_c2 = center_of_mass_distance(omega2, g)
        J1 = M * l_c1 * g / omega1**2
        J2 = M * l_c2 * g / omega2**2
        return cls(omega1, omega2, J1, J2, l_c1, l_c2, M, l_l, l_u)

    @property
    def omega0(self):
        return 0.5 * (self.omega1 + self.omega2)

    @property
    def Delta(self):
        return self.omega1 - self.omega2

    @property
    def J0(self):
        return 0.5 * (self.J1 + self.J2)

    def with_detuning(self, Delta, g=9.807232):
        """Same mean frequency, new detuning; inertia recomputed."""
        w0 = self.omega0
        return PendulumParams.from_angular(
            w0 + Delta / 2, w0 - Delta / 2, g=g, M=self.M,
            l_c1=self.l_c1, l_c2=self.l_c2, l_l=self.l_l, l_u=self.l_u)

    def inertia_residual(self, g):
        """Largest relative mismatch of J_k against M l_ck g / omega_k**2."""
        r1 = abs(self.J1 - self.M * self.l_c1 * g / self.omega1**2) / self.J1
        r2 = abs(self.J2 - self.M * self.l_c2 * g / self.omega2**2) / self.J2
        return max(r1, r2)


@dataclass(frozen=True)
class MagnetAssembly:
    """Lower (rotating) and optional upper (static) magnet pairs.

    Attributes
    ----------
    m_l, m_u : float
        Dipole moment magnitudes (A m^2).
    L : float
        Horizontal pivot distance (m).
    L_u : float
        Rest distance between the upper magnets (m); ignored unless `upper`.
    Omega : float
        Rotation frequency of the driven lower magnet (rad/s).
    upper : bool
        Whether the upper pair is mounted.
    phase : float
        Rotation angle of the driven magnet at t = 0 (rad).  ``pi`` turns the
        static lower pair repulsive when ``Omega = 0``.
    """

    m_l: float = DEFAULT_M_LOWER
    m_u: float = DEFAULT_M_UPPER
    L: float = DEFAULT_L
    L_u: float = DEFAULT_L_U
    Omega: float = DEFAULT_OMEGA
    upper: bool = False
    phase: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive, got {self.L!r}")
        if self.upper and not (math.isfinite(self.L_u) and self.L_u > 0):
            raise ValueError(f"L_u must be positive, got {self.L_u!r}")
        if not (math.isfinite(self.Omega) and self.Omega >= 0):
            raise ValueError(f"Omega must be non-negative, got {self.Omega!r}")
        if self.m_l < 0 or self.m_u < 0:
            raise ValueError("magnetic moments must be non-negative")
        if not math.isfinite(self.phase):
            raise ValueError("phase must be finite")

    def drive_factor(self, t):
        """cos(Omega t + phase), the modulation of the lower pair."""
        return np.cos(self.Omega * np.asarray(t, dtype=float) + self.phase)


@dataclass(frozen=True)
class ApparatusParams:
    """Everything needed to evaluate the pendula and magnet model."""

    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    pendulum: PendulumParams = field(default_factory=PendulumParams.from_frequencies)
    magnets: MagnetAssembly = field(default_factory=MagnetAssembly)

    def __post_init__(self):
        res = self.pendulum.inertia_residual(self.constants.g)
        if res > 1e-9:
            raise ValueError(
                f"moments of inertia inconsistent with M l_c g/omega^2 (rel. error {res:.3g})")

    @property
    def omega0(self):
        return self.pendulum.omega0

    @property
    def Delta(self):
        return self.pendulum.Delta

    @property
    def J0(self):
        return self.pendulum.J0

    @property
    def cross_coupling_ratio(self):
        """(l_l - l_u)/L; the upper/lower cross terms are neglected when this is ~2 or more."""
        return (self.pendulum.l_l - self.pendulum.l_u) / self.magnets.L

    def replace(self, **changes):
        """Copy with fields of the sub-records replaced.

        Keys are looked up in ``magnets``, then ``constants``.  Pendulum
        changes go through ``pendulum=`` directly.
        """
        mag, con, top = {}, {}, {}
        for k, v in changes.items():
            if k in ("constants", "pendulum", "magnets"):
                top[k] = v
            elif k in MagnetAssembly.__dataclass_fields__:
                mag[k] = v
            elif k in PhysicalConstants.__dataclass_fields__:
                con[k] = v
            else:
                raise TypeError(f"unknown parameter {k!r}")
        out = replace(self, **top)
        if mag:
            out = replace(out, magnets=replace(out.magnets, **mag))
        if con:
            out = replace(out, constants=replace(out.constants, **con))
        return out


@dataclass(frozen=True)
class TlsParams:
    """Effective two-level parameters (rad/s): eps(t) = eps0 + A cos(Omega t)."""

    Delta: float
    eps0: float
    A: float
    Omega: float

    def validity(self, omega0):
        """Largest TLS rate relative to the carrier; the mapping needs this << 1."""
        return max(abs(self.Delta), abs(self.eps0) + abs(self.A), self.Omega) / omega0

    def is_valid(self, omega0, limit=0.1):
        return self.validity(omega0) < limit


def interaction_energies(app):
    """Interaction energies ``(G_l, G_u)`` of the magnet pairs in joules."""
    c, p, m = app.constants, app.pendulum, app.magnets
    if m.L <= 0:
        raise ValueError("L must be positive")
    G_l = 6 * c.mu0 * m.m_l**2 * p.l_l**2 / (math.pi * m.L**5)
    if not m.upper:
        return G_l, 0.0
    if m.L_u <= 0:
        raise ValueError("L_u must be positive")
    G_u = 6 * c.mu0 * m.m_u**2 * p.l_u**2 / (math.pi * m.L_u**5)
    return G_l, G_u


def raw_modulation(t, app):
    """Second-order coupling energy ``G~(t)`` and linear force term ``F~(t)``.

    Returns
    -------
    G_tilde, F_tilde : ndarray or float
        Same shape as `t`.
    """
    G_l, G_u = interaction_energies(app)
    c = app.magnets.drive_factor(t)
    p, m = app.pendulum, app.magnets
    G_t = G_u + G_l * c
    F_u = (m.L_u / (4 * p.l_u)) * G_u if m.upper else 0.0
    F_t = F_u + (m.L / (4 * p.l_l)) * G_l * c
    return G_t, F_t


def quasistatic_deflection(t, app, symmetric=False):
    """Equilibrium deflections ``(phi1_qs, phi2_qs)`` under the magnetic force.

    Parameters
    ----------
    t : float or array_like
        Time (s).
    app : ApparatusParams
    symmetric : bool
        Use the equal-pendulum form ``F/(omega0^2 J0 - 2G) = -phi2``.

    Raises
    ------
    SingularityError
        If the restoring curvature vanishes or turns negative, i.e. there is
        no stable equilibrium.
    """
    G_t, F_t = raw_modulation(t, app)
    p = app.pendulum
    if symmetric:
        den = p.omega0**2 * p.J0 - 2 * G_t
        scale = p.omega0**2 * p.J0
        _check_denominator(den, scale)
        phi1 = F_t / den
        return phi1, -phi1
    k1 = p.J1 * p.omega1**2
    k2 = p.J2 * p.omega2**2
    den = k1 * k2 - G_t * (k1 + k2)
    _check_denominator(den, k1 * k2)
    return k2 * F_t / den, -k1 * F_t / den


def _check_denominator(den, scale):
    if np.any(np.asarray(den) <= 1e-12 * scale):
        raise SingularityError(
            "quasistatic denominator vanishes: coupling exceeds the restoring torque")


def effective_coupling(t, app, correction=True):
    """Effective coupling ``eps(t)`` in rad/s.

    The equilibrium shift ``dphi = phi1_qs - phi2_qs`` (symmetric form)
    changes the magnet separation; each pair's energy is scaled by
    ``(1 - (l/L) dphi)**-5``.  With ``correction=False`` the result is
    ``G~(t)/(omega0 J0)``.
    """
    G_l, G_u = interaction_energies(app)
    p, m = app.pendulum, app.magnets
    c = m.drive_factor(t)
    norm = p.omega0 * p.J0
    if not correction:
        return (G_u + G_l * c) / norm
    phi1, phi2 = quasistatic_deflection(t, app, symmetric=True)
    dphi = phi1 - phi2
    base_l = 1.0 - (p.l_l / m.L) * dphi
    if np.any(base_l <= 0):
        raise SingularityError("lower-pair correction base is not positive")
    G = G_l * c * base_l**-5
    if m.upper:
        base_u = 1.0 - (p.l_u / m.L_u) * dphi
        if np.any(base_u <= 0):
            raise SingularityError("upper-pair correction base is not positive")
        G = G + G_u * base_u**-5
    return G / norm


def fourier_drive_params(eps, Omega, n_samples=1024):
    """Mean and first cosine coefficient of a periodic coupling.

    Parameters
    ----------
    eps : callable
        ``eps(t)`` accepting an array of times.
    Omega : float
        Angular frequency of the period (rad/s), > 0.
    n_samples : int
        Uniform samples per period (>= 64).

    Returns
    -------
    eps0, A : float
        ``eps0 = <eps>``, ``A = 2 <eps cos(Omega t)>``.
    """
    if not Omega > 0:
        raise ValueError("Omega must be positive for a Fourier projection")
    if n_samples < 64:
        raise ValueError("n_samples must be at least 64")
    T = 2 * math.pi / Omega
    # trapezoid rule on a periodic grid reduces to the plain mean
    t = np.arange(n_samples) * (T / n_samples)
    e = np.asarray(eps(t), dtype=float)
    eps0 = float(np.mean(e))
    A = float(2 * np.mean(e * np.cos(Omega * t)))
    return eps0, A


def effective_tls_params(app, n_samples=1024):
    """Two-level parameters implied by the apparatus.

    Projects :func:`effective_coupling` on ``1`` and ``cos(Omega t)``
    over one drive period.  With a static lower pair (``Omega = 0``) the
    coupling is constant and ``A = 0``.
    """
    m = app.magnets
    Delta = app.Delta
    if m.Omega == 0 or m.m_l == 0:
        e = float(effective_coupling(0.0, app))
        return TlsParams(Delta, e, 0.0, m.Omega)
    if m.phase != 0:
        raise ValueError("Fourier projection assumes zero drive phase")
    eps0, A = fourier_drive_params(lambda t: effective_coupling(t, app), m.Omega, n_samples)
    return TlsParams(Delta, eps0, A, m.Omega)


def params_from_extremes(eps_min, eps_max):
    """``(A, eps0)`` from the extreme values of the coupling."""
    if eps_max < eps_min:
        raise ValueError("eps_max must not be smaller than eps_min")
    return 0.5 * (eps_max - eps_min), 0.5 * (eps_max + eps_min)
