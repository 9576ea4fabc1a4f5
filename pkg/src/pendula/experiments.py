"""Scenario runners: Rabi scans, LZ passages, LZSM fans, spectra and eigenvalue checks.

Every runner takes an :class:`ExperimentConfig` and one of three engines:

``schrodinger``
    envelope equation in the mode basis (fast, exact within the envelope
    approximation);
``newton-linear``
    linearized pendulum equations around the quasistatic equilibrium,
    populations recovered with the signal chain;
``newton-nonlinear``
    full dipole-coupled pendulum equations in the lab frame, quasistatic
    drift removed by the signal chain.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from . import newton, signal, tls
from .errors import ConfigError, NoCrossingError
from .model import (ApparatusParams, MagnetAssembly, PendulumParams, effective_coupling,
                    effective_tls_params)

__all__ = [
    "ENGINES",
    "Grid",
    "InitialCondition",
    "init_single_pendulum",
    "init_out_of_phase",
    "ExperimentConfig",
    "RunResult",
    "RabiScan",
    "LzPassage",
    "FanDiagram",
    "SpectraComparison",
    "PeakRow",
    "EigenTable",
    "resolve_drive",
    "simulate",
    "beat_frequency",
    "run_rabi_scan",
    "run_lz_passage",
    "lz_phase_band",
    "run_lzsm_fan",
    "run_spectra_comparison",
    "eps_from_peak",
    "run_eigenvalue_consistency",
    "preset",
]

ENGINES = ("newton-nonlinear", "newton-linear", "schrodinger")
NEWTON_DT = 0.01  # s, omega0*dt ~ 0.03
NEWTON_SAMPLE_DT = 0.05  # s, ~38 samples per carrier period
TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Grid:
    """``num`` evenly spaced values from `start` to `stop` inclusive."""

    start: float
    stop: float
    num: int

    def __post_init__(self):
        if int(self.num) != self.num or self.num < 1:
            raise ConfigError(f"grid needs at least one point, got num={self.num!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ConfigError("grid bounds must be finite")

    def values(self):
        return np.linspace(self.start, self.stop, int(self.num))


@dataclass(frozen=True)
class InitialCondition:
    """Initial excitation of the pendula.

    Attributes
    ----------
    kind : {"single", "out-of-phase"}
        Deflect pendulum 1 only, or both pendula in antiphase.
    amplitude : float
        Deflection (rad) of the excited pendula.
    relative_phase : float
        Phase (rad) of the small admixture of the out-of-phase start
        relative to its zero-phase value.
    dressed : bool
        Out-of-phase start in the lower adiabatic mode (default) rather
        than in the pure antiphase mode ``Psi_-``.
    """

    kind: str = "single"
    amplitude: float = 0.01
    relative_phase: float = 0.0
    dressed: bool = True

    def __post_init__(self):
        if self.kind not in ("single", "out-of-phase"):
            raise ConfigError(f"unknown initial condition {self.kind!r}")
        if not math.isfinite(self.amplitude) or not math.isfinite(self.relative_phase):
            raise ConfigError("initial amplitude and phase must be finite")

    def envelope(self, Delta, eps_initial):
        """Normalized envelope state in the mode basis.

        The dressed out-of-phase start is the lower adiabatic mode of the
        coupling ``eps_initial``: mostly ``Psi_-`` with a small ``Psi_+``
        admixture whose phase is shifted by `relative_phase`.  Undressed,
        the start is ``Psi_-`` itself with the phase of its upper adiabatic
        component shifted instead.
        """
        if self.kind == "single":
            return tls.EnvelopeState(1.0, 0.0, "individual").to("modes")
        near, far = _antiphase_modes(Delta, eps_initial)
        rot = np.exp(1j * self.relative_phase)
        if not self.dressed:
            pure = np.array([0.0, 1.0], dtype=complex)
            psi = np.vdot(near, pure) * near + np.vdot(far, pure) * rot * far
            return tls.EnvelopeState.from_array(psi, "modes")
        near = near * np.exp(-1j * np.angle(near[1]))
        psi = np.array([near[0].real * rot, near[1].real], dtype=complex)
        return tls.EnvelopeState.from_array(psi, "modes")

    def upper_population(self, Delta, eps_initial):
        """Initial occupation of the adiabatic mode away from ``Psi_-``.

        For ``eps_initial > 0`` this is the upper adiabatic mode.
        """
        _, far = _antiphase_modes(Delta, eps_initial)
        psi = self.envelope(Delta, eps_initial).as_array()
        return float(abs(np.vdot(far, psi)) ** 2)

    def newton_state(self, Delta, eps_initial, omega0):
        """Relative-frame pendulum state carrying the same envelopes.

        ``phi_k = 2 s Re Psi_k`` and ``dphi_k = 2 s omega0 Im Psi_k`` with the
        scale ``s`` chosen so the larger deflection equals `amplitude`.
        """
        ind = self.envelope(Delta, eps_initial).to("individual").as_array()
        s = self.amplitude / (2 * np.max(np.abs(ind)))
        return newton.NewtonState(2 * s * ind[0].real, 2 * s * ind[1].real,
                                  2 * s * omega0 * ind[0].imag, 2 * s * omega0 * ind[1].imag,
                                  "relative")


def _antiphase_modes(Delta, eps):
    """Adiabatic modes ``(near, far)`` ordered by their ``Psi_-`` weight.

    ``near`` is the lower mode for ``eps >= 0`` and the upper one otherwise.
    """
    upper, lower = tls.adiabatic_eigenvectors(eps, Delta)
    return (upper, lower) if abs(upper[1]) > abs(lower[1]) else (lower, upper)


def init_single_pendulum(amplitude=0.01):
    """Pendulum 1 deflected by `amplitude`, pendulum 2 at rest."""
    return InitialCondition("single", amplitude)


def init_out_of_phase(amplitude=0.01, relative_phase=0.0, dressed=True):
    """Both pendula deflected in antiphase.

    With ``dressed=False`` the start is exactly ``phi1 = -phi2 = amplitude``,
    which for ``Delta != 0`` and ``eps(0) != 0`` occupies the upper
    adiabatic mode slightly.  The default dresses the antiphase mode into
    the lower adiabatic mode, so the zero-phase start carries no adiabatic
    admixture and a small in-phase deflection instead.
    """
    return InitialCondition("out-of-phase", amplitude, relative_phase, dressed)


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of a run.

    ``None`` entries are resolved by each runner from the apparatus and
    drive (documented per runner).
    """

    apparatus: ApparatusParams = field(default_factory=ApparatusParams)
    drive: tls.DriveWaveform | None = None
    engine: str = "schrodinger"
    init: InitialCondition | None = None
    t_end: float | None = None
    dt: float | None = None
    sample_dt: float | None = None
    lowpass_sigma: float | None = None
    delta_grid: Grid | None = None
    eps0_grid: Grid | None = None
    A_grid: Grid | None = None
    fan_periods: int = 5
    eig_delta: float = TWO_PI * 24e-3
    eps_grid: Grid | None = None
    lz_half_width: float | None = None
    spectrum_sigma: float | None = None
    peak_threshold: float = 0.05
    regime: str = "auto"

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.regime not in ("auto", "rabi", "lzsm"):
            raise ConfigError(f"regime must be auto, rabi or lzsm, got {self.regime!r}")
        for name in ("t_end", "dt", "sample_dt", "lowpass_sigma", "lz_half_width"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        if self.spectrum_sigma is not None and not self.spectrum_sigma >= 0:
            raise ConfigError("spectrum_sigma must be non-negative")
        if int(self.fan_periods) != self.fan_periods or self.fan_periods < 1:
            raise ConfigError("fan_periods must be a positive integer")
        if not 0 <= self.peak_threshold < 1:
            raise ConfigError("peak_threshold must lie in [0, 1)")

    @property
    def Delta(self):
        return self.apparatus.Delta

    @property
    def omega0(self):
        return self.apparatus.omega0

    def sigma(self):
        return self.lowpass_sigma if self.lowpass_sigma is not None else 10.0 / self.omega0


def resolve_drive(config):
    """Explicit drive, or the one implied by the magnets."""
    if config.drive is not None:
        return config.drive
    p = effective_tls_params(config.apparatus)
    return tls.DriveWaveform(p.eps0, p.A, p.Omega)


@dataclass(frozen=True, eq=False)
class RunResult:
    """Populations on a uniform time grid.

    ``P`` maps ``"P1"``, ``"P2"``, ``"P+"``, ``"P-"`` to arrays.
    """

    engine: str
    t: np.ndarray
    P: dict
    trajectory: object


def _chain(traj, sigma, lab):
    phi1 = signal.TimeSeries(traj.t0, traj.dt, traj.phi1)
    phi2 = signal.TimeSeries(traj.t0, traj.dt, traj.phi2)
    if lab:
        phi1 = signal.split_timescales(phi1, sigma)[1]
        phi2 = signal.split_timescales(phi2, sigma)[1]
    plus, minus = signal.mode_transform(phi1, phi2)
    P1, P2 = signal.populations([signal.envelope_sq(phi1, sigma), signal.envelope_sq(phi2, sigma)])
    Pp, Pm = signal.populations([signal.envelope_sq(plus, sigma), signal.envelope_sq(minus, sigma)])
    return {"P1": P1.values, "P2": P2.values, "P+": Pp.values, "P-": Pm.values}


def _stride(dt, sample_dt):
    return 1 if sample_dt is None else max(1, int(round(sample_dt / dt)))


def _run(config, app, drive, init, t_end):
    Delta = app.Delta
    eng = config.engine
    if eng == "schrodinger":
        psi0 = init.envelope(Delta, float(drive(0.0)))
        dt = config.dt or tls.default_dt(Delta, drive)
        traj = tls.evolve(psi0, lambda t: tls.hamiltonian_lz(t, Delta, drive), (0.0, t_end), dt,
                          sample_every=_stride(dt, config.sample_dt))
        pm = traj.populations()
        p12 = traj.to("individual").populations()
        P = {"P1": p12[:, 0], "P2": p12[:, 1], "P+": pm[:, 0], "P-": pm[:, 1]}
        return RunResult(eng, traj.t, P, traj)
    p = app.pendulum
    dt = config.dt or NEWTON_DT
    stride = _stride(dt, config.sample_dt or NEWTON_SAMPLE_DT)
    if eng == "newton-linear":
        state = init.newton_state(Delta, float(drive(0.0)), p.omega0)
        if isinstance(drive, tls.DriveWaveform):
            traj = newton.simulate_linear(state, drive, p.omega1, p.omega2, (0.0, t_end), dt,
                                          sample_every=stride)
        else:
            traj = newton.integrate(newton.linear_vector_field(drive, p.omega1, p.omega2),
                                    state, (0.0, t_end), dt, sample_every=stride)
        return RunResult(eng, traj.t, _chain(traj, config.sigma(), lab=False), traj)
    eps_initial = float(effective_coupling(0.0, app))
    state = newton.to_lab(init.newton_state(Delta, eps_initial, p.omega0), app, t=0.0)
    traj = newton.simulate_nonlinear(state, (0.0, t_end), app, dt, sample_every=stride)
    return RunResult(eng, traj.t, _chain(traj, config.sigma(), lab=True), traj)


def simulate(config):
    """Single run of the configured engine.

    Defaults: single-pendulum start, one drive period (or ``100/|Delta|``
    for a static coupling).
    """
    drive = resolve_drive(config)
    init = config.init or init_single_pendulum()
    if config.t_end is not None:
        t_end = config.t_end
    elif drive.Omega > 0:
        t_end = drive.period
    else:
        t_end = 100.0 / max(abs(config.Delta), 1e-3)
    return _run(config, config.apparatus, drive, init, t_end)


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# --------------------------------------------------------------------------
# Rabi


@dataclass(frozen=True, eq=False)
class RabiScan:
    """Measured and predicted beat frequency (rad/s) and visibility per detuning."""

    Delta: np.ndarray
    Omega_eff: np.ndarray
    visibility: np.ndarray
    Omega_eff_theory: np.ndarray
    visibility_theory: np.ndarray
    Omega_R: float
    Omega: float


def beat_frequency(P, dt, f_max=None, pad=8):
    """Dominant nonzero angular frequency of a population series.

    Hann window, zero padding by `pad`, quadratic refinement of the peak.
    Bins below two natural resolution cells are skipped to avoid the
    window's DC lobe.
    """
    x = np.asarray(P, dtype=float)
    x = (x - x.mean()) * np.hanning(len(x))
    nfft = pad * (1 << int(math.ceil(math.log2(len(x)))))
    mag = np.abs(np.fft.rfft(x, nfft))
    f = np.fft.rfftfreq(nfft, dt)
    lo = int(2 * pad)
    hi = len(f) if f_max is None else int(np.searchsorted(f, f_max))
    i = lo + int(np.argmax(mag[lo:hi]))
    return TWO_PI * signal.refine_peak(f, mag, i)


def run_rabi_scan(config, delta_grid=None, threads=1):
    """Beat frequency and visibility versus detuning for a single-pendulum start.

    Defaults: ``Delta = Omega + Omega_R * linspace(-5, 5, 21)`` and a run of
    eight resonant Rabi periods.
    """
    drive = resolve_drive(config)
    Omega_R = 0.5 * abs(drive.A)
    if Omega_R == 0:
        raise ConfigError("Rabi scan needs a nonzero modulation amplitude")
    if delta_grid is None:
        delta_grid = (config.delta_grid.values() if config.delta_grid is not None
                      else drive.Omega + Omega_R * np.linspace(-5, 5, 21))
    delta_grid = np.asarray(delta_grid, dtype=float)
    t_end = config.t_end or 8 * TWO_PI / Omega_R
    init = config.init or init_single_pendulum()
    app0 = config.apparatus
    g = app0.constants.g

    def point(Delta):
        app = replace(app0, pendulum=app0.pendulum.with_detuning(Delta, g))
        res = _run(config, app, drive, init, t_end)
        dt = res.t[1] - res.t[0]
        w = beat_frequency(res.P["P1"], dt, f_max=drive.Omega / (2 * TWO_PI))
        vis = float(res.P["P2"].max() - res.P["P2"].min())
        return w, vis

    out = _map(point, delta_grid, threads)
    w_meas = np.array([o[0] for o in out])
    v_meas = np.array([o[1] for o in out])
    w_th, v_th = tls.effective_rabi(delta_grid, drive.Omega, Omega_R)
    return RabiScan(delta_grid, w_meas, v_meas, np.asarray(w_th), np.asarray(v_th),
                    Omega_R, drive.Omega)


# --------------------------------------------------------------------------
# Landau-Zener


@dataclass(frozen=True, eq=False)
class LzPassage:
    """One drive period starting at maximal coupling.

    ``P_bar`` is the window average of ``P+`` around ``T/2``; the analytic
    expectation is ``1 - P_LZ``.
    """

    t: np.ndarray
    P_plus: np.ndarray
    P_bar: float
    P_LZ: float
    v: float
    center: float
    half_width: float
    initial_P_plus: float

    @property
    def expected(self):
        return 1.0 - self.P_LZ


def _lz_window(drive, half_width=None):
    t1, t2 = drive.crossing_times()
    center = 0.5 * drive.period
    return center, half_width if half_width is not None else 0.25 * (t2 - t1)


def run_lz_passage(config, relative_phase=None):
    """Integrate one period from an out-of-phase start and average ``P+`` near ``T/2``.

    Raises
    ------
    NoCrossingError
        If ``A < |eps0|``.
    """
    drive = resolve_drive(config)
    if not isinstance(drive, tls.DriveWaveform) or drive.Omega <= 0:
        raise ConfigError("LZ passage needs a harmonic drive with Omega > 0")
    center, hw = _lz_window(drive, config.lz_half_width)
    init = config.init or init_out_of_phase()
    if init.kind != "out-of-phase":
        init = init_out_of_phase(init.amplitude, init.relative_phase, init.dressed)
    if relative_phase is not None:
        init = replace(init, relative_phase=float(relative_phase))
    res = _run(config, config.apparatus, drive, init, config.t_end or drive.period)
    P = signal.TimeSeries(float(res.t[0]), float(res.t[1] - res.t[0]), res.P["P+"])
    P_bar = signal.window_average(P, center, hw)
    Delta = config.Delta
    v = tls.sweep_velocity(drive.Omega, drive.A, drive.eps0)
    P_LZ = float(tls.lz_probability(Delta, v))
    p0 = float(init.envelope(Delta, float(drive(0.0))).populations()[0])
    return LzPassage(res.t, res.P["P+"], P_bar, P_LZ, v, center, hw, p0)


def lz_phase_band(config, n_phases=12):
    """Range of ``P_bar`` over evenly spaced initial relative phases."""
    vals = [run_lz_passage(config, ph).P_bar
            for ph in np.linspace(0, TWO_PI, n_phases, endpoint=False)]
    return min(vals), max(vals)


# --------------------------------------------------------------------------
# LZSM fan


@dataclass(frozen=True, eq=False)
class FanDiagram:
    """Time-averaged ``P+`` over ``(A, eps0)``; rows index `A`, columns `eps0`.

    Cells whose frozen-coupling linearized spectrum turns imaginary during
    the drive are flagged in `unstable`; on the Newton engine they carry NaN.
    """

    eps0: np.ndarray
    A: np.ndarray
    P: np.ndarray
    unstable: np.ndarray
    periods: int
    engine: str


def _fan_unstable(eps0, A, app):
    p = app.pendulum
    e_hi = eps0[None, :] + np.abs(A)[:, None]
    e_lo = eps0[None, :] - np.abs(A)[:, None]
    u1 = newton.linearized_eigenfrequencies(e_hi, p.omega1, p.omega2, p.J1, p.J2).unstable
    u2 = newton.linearized_eigenfrequencies(e_lo, p.omega1, p.omega2, p.J1, p.J2).unstable
    return u1 | u2


def run_lzsm_fan(config, eps0_grid=None, A_grid=None, n_periods=None, threads=1):
    """Averaged ``P+`` after an out-of-phase start for every ``(eps0, A)`` cell.

    The averaging span is `n_periods` drive periods; the drive frequency
    comes from the resolved drive.  Default grids span 0..0.36 omega0 with
    60 points each.
    """
    if config.engine not in ("schrodinger", "newton-linear"):
        raise ConfigError("fan diagrams run on the schrodinger or newton-linear engine")
    drive0 = resolve_drive(config)
    if drive0.Omega <= 0:
        raise ConfigError("fan diagram needs Omega > 0")
    app = config.apparatus
    w0 = app.omega0
    if eps0_grid is None:
        eps0_grid = (config.eps0_grid.values() if config.eps0_grid is not None
                     else np.linspace(0.0, 0.36 * w0, 60))
    if A_grid is None:
        A_grid = (config.A_grid.values() if config.A_grid is not None
                  else np.linspace(0.0, 0.36 * w0, 60))
    eps0_grid = np.asarray(eps0_grid, dtype=float)
    A_grid = np.asarray(A_grid, dtype=float)
    periods = int(n_periods or config.fan_periods)
    t_end = periods * TWO_PI / drive0.Omega
    init = config.init or init_out_of_phase()
    if init.kind != "out-of-phase":
        init = init_out_of_phase(init.amplitude, init.relative_phase, init.dressed)
    Delta = app.Delta
    p = app.pendulum
    unstable = _fan_unstable(eps0_grid, A_grid, app)

    def row(i):
        A = A_grid[i]
        out = np.empty(len(eps0_grid))
        for j, e0 in enumerate(eps0_grid):
            drive = tls.DriveWaveform(float(e0), float(A), drive0.Omega)
            if config.engine == "schrodinger":
                psi = init.envelope(Delta, e0 + A).as_array()
                out[j] = tls.mean_upper_population(psi, Delta, drive, t_end, config.dt)
            elif unstable[i, j]:
                out[j] = np.nan
            else:
                st = init.newton_state(Delta, e0 + A, w0)
                a, b = newton.mode_power_average(st, drive, p.omega1, p.omega2, (0.0, t_end),
                                                 config.dt or NEWTON_DT)
                out[j] = a / (a + b)
        return out

    P = np.array(_map(row, range(len(A_grid)), threads))
    return FanDiagram(eps0_grid, A_grid, P, unstable, periods, config.engine)


# --------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class PeakRow:
    """Spectral peak and the coupling it implies on the eigenvalue curves."""

    case: str
    signal: str
    freq_hz: float
    height: float
    lam: float
    eps_est: float


@dataclass(frozen=True, eq=False)
class SpectraComparison:
    regime: str
    spectra: dict
    peaks: list
    eps: dict


def eps_from_peak(omega_peak, omega0, Delta):
    """Coupling at which ``omega0 + (-eps +- sqrt(Delta^2 + eps^2))/2`` equals `omega_peak`.

    Inverts the adiabatic eigenvalue relation: with ``lam = omega_peak - omega0``,
    ``eps = (Delta^2 - 4 lam^2) / (4 lam)``; NaN when ``lam = 0``.
    """
    lam = np.asarray(omega_peak, dtype=float) - omega0
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(lam == 0, np.nan, (Delta**2 - 4 * lam**2) / (4 * lam))[()]


def run_spectra_comparison(config):
    """Spectra of static-attractive, static-repulsive and driven runs.

    The Rabi regime (``A <= Omega``, single-pendulum start) reports
    ``phi1, phi2``; the LZSM regime (out-of-phase start) reports
    ``phi+, phi-``.  Static cases freeze the coupling at ``eps0 + A`` and
    ``eps0 - A``.  Default span: five drive periods; default smoothing:
    0.025 Hz for LZSM, none for Rabi.
    """
    drive = resolve_drive(config)
    regime = config.regime
    if regime == "auto":
        regime = "rabi" if abs(drive.A) <= drive.Omega else "lzsm"
    init = config.init or (init_single_pendulum() if regime == "rabi" else init_out_of_phase())
    if drive.Omega > 0:
        t_end = config.t_end or 5 * drive.period
    else:
        t_end = config.t_end or 100.0 / max(abs(config.Delta), 1e-3)
    sigma_hz = config.spectrum_sigma
    if sigma_hz is None:
        sigma_hz = 0.0 if regime == "rabi" else 0.025
    app = config.apparatus
    w0, Delta = app.omega0, app.Delta
    cases = {
        "attractive": tls.DriveWaveform(drive.eps0 + abs(drive.A), 0.0, 0.0),
        "repulsive": tls.DriveWaveform(drive.eps0 - abs(drive.A), 0.0, 0.0),
        "driven": drive,
    }
    magnet_cases = {
        "attractive": dict(Omega=0.0, phase=0.0),
        "repulsive": dict(Omega=0.0, phase=math.pi),
        "driven": {},
    }
    sample_dt = config.sample_dt or NEWTON_SAMPLE_DT
    spectra, peaks, eps = {}, [], {}
    for case, d in cases.items():
        if config.engine == "schrodinger":
            psi0 = init.envelope(Delta, float(d(0.0)))
            dt = config.dt or tls.default_dt(Delta, d if d.rate_scale > 0 else drive)
            stride = _stride(dt, sample_dt)
            traj = tls.evolve(psi0, lambda t, d=d: tls.hamiltonian_lz(t, Delta, d), (0.0, t_end),
                              dt, sample_every=stride)
            ind = traj.to("individual").psi
            s = init.amplitude / (2 * np.max(np.abs(ind[0])))
            phi = signal.reconstruct_deflection(ind, traj.t, w0, s)
            t0, h, phi1, phi2 = traj.t0, traj.dt, phi[:, 0], phi[:, 1]
        else:
            sub = replace(config, t_end=t_end, sample_dt=sample_dt, init=init)
            if config.engine == "newton-linear":
                res = _run(sub, app, d, init, t_end)
                tr = res.trajectory
            else:
                app_c = app.replace(**magnet_cases[case])
                res = _run(sub, app_c, d, init, t_end)
                tr = res.trajectory
                lab1 = signal.TimeSeries(tr.t0, tr.dt, tr.phi1)
                lab2 = signal.TimeSeries(tr.t0, tr.dt, tr.phi2)
                sig = config.sigma()
                tr = newton.Trajectory(tr.t0, tr.dt, np.stack(
                    [signal.split_timescales(lab1, sig)[1].values,
                     signal.split_timescales(lab2, sig)[1].values,
                     tr.dphi1, tr.dphi2], axis=1), "relative")
            t0, h, phi1, phi2 = tr.t0, tr.dt, tr.phi1, tr.phi2
        s1 = signal.TimeSeries(t0, h, phi1)
        s2 = signal.TimeSeries(t0, h, phi2)
        if regime == "rabi":
            named = {"phi1": s1, "phi2": s2}
        else:
            plus, minus = signal.mode_transform(s1, s2)
            named = {"phi+": plus, "phi-": minus}
        for name, series in named.items():
            sp = signal.spectrum(series, sigma_hz, config.peak_threshold)
            spectra[(case, name)] = sp
            for k in sp.peaks:
                f = signal.refine_peak(sp.frequencies, sp.smoothed, int(k))
                lam = TWO_PI * f - w0
                peaks.append(PeakRow(case, name, f, float(sp.smoothed[k]), lam,
                                     float(eps_from_peak(TWO_PI * f, w0, Delta))))
        eps[case] = float(d(0.0)) if case != "driven" else (drive.eps0, drive.A)
    return SpectraComparison(regime, spectra, peaks, eps)


# --------------------------------------------------------------------------
# eigenvalue consistency


@dataclass(frozen=True, eq=False)
class EigenTable:
    """Positive Newton eigenfrequencies against ``omega0 + adiabatic eigenvalues``.

    Columns ``(lo, hi)`` in rad/s; ``deviation`` is the larger of the two
    absolute differences per row (NaN where the Newton mode is unstable).
    """

    eps: np.ndarray
    newton: np.ndarray
    schrodinger: np.ndarray
    deviation: np.ndarray
    unstable: np.ndarray
    omega0: float
    Delta: float

    def max_deviation(self, eps_limit=None):
        mask = np.ones(len(self.eps), bool) if eps_limit is None else np.abs(self.eps) <= eps_limit
        return float(np.nanmax(self.deviation[mask]))


def run_eigenvalue_consistency(Delta, eps_grid, apparatus):
    """Compare the frozen-coupling spectra of both engines.

    The pendula keep the apparatus mean frequency and are detuned by
    `Delta`; the moments of inertia follow from the detuned frequencies.
    """
    eps = np.asarray(eps_grid, dtype=float)
    p = apparatus.pendulum.with_detuning(Delta, apparatus.constants.g)
    modes = newton.linearized_eigenfrequencies(eps, p.omega1, p.omega2, p.J1, p.J2)
    lo, hi = modes.positive
    new = np.stack([lo, hi], axis=-1)
    wp, wm = tls.adiabatic_eigenvalues(eps, p.Delta)
    sch = np.stack([p.omega0 + wm, p.omega0 + wp], axis=-1)
    dev = np.max(np.abs(new - sch), axis=-1)
    dev = np.where(modes.unstable, np.nan, dev)
    return EigenTable(eps, new, sch, dev, modes.unstable, p.omega0, p.Delta)


# --------------------------------------------------------------------------
# presets


def _apparatus(f0, Delta_hz, L=0.454, Omega_hz=11.7e-3):
    pend = PendulumParams.from_frequencies(f0 + Delta_hz / 2, f0 - Delta_hz / 2)
    return ApparatusParams(pendulum=pend, magnets=MagnetAssembly(L=L, Omega=TWO_PI * Omega_hz))


def _lz_pivot_distance(f0, Delta_hz, Omega_hz, P_target):
    Delta = TWO_PI * Delta_hz

    def miss(L):
        p = effective_tls_params(_apparatus(f0, Delta_hz, L, Omega_hz))
        v = tls.sweep_velocity(p.Omega, p.A, p.eps0)
        return float(tls.lz_probability(Delta, v)) - P_target

    return optimize.brentq(miss, 0.2, 0.6, xtol=1e-10)


def preset(name):
    """Ready-made configurations of the reference experiments.

    ``"rabi"``: mean frequency 528 mHz, detuning 11.7 mHz, drive 11.8 mHz,
    L = 454 mm.  ``"lz"``: 530 mHz, detuning 6.7 mHz, drive 2.27 mHz, L chosen
    so that ``P_LZ = 0.4``.  ``"lzsm"``: as ``"lz"`` but driven at 7.1 mHz, with
    a 60 x 60 fan over 0..1.2 s^-1.  ``"eigen"``: 24 mHz detuning.
    """
    if name == "rabi":
        return ExperimentConfig(apparatus=_apparatus(0.528, 11.7e-3, 0.454, 11.8e-3),
                                init=init_single_pendulum())
    if name == "lz":
        L = _lz_pivot_distance(0.53, 6.7e-3, 2.27e-3, 0.4)
        return ExperimentConfig(apparatus=_apparatus(0.53, 6.7e-3, L, 2.27e-3),
                                init=init_out_of_phase())
    if name == "lzsm":
        return ExperimentConfig(apparatus=_apparatus(0.53, 6.7e-3, 0.454, 7.1e-3),
                                drive=tls.DriveWaveform(0.0, 0.0, TWO_PI * 7.1e-3),
                                init=init_out_of_phase(),
                                eps0_grid=Grid(0.0, 1.2, 60), A_grid=Grid(0.0, 1.2, 60))
    if name == "eigen":
        return ExperimentConfig(eps_grid=Grid(-0.1 * TWO_PI * 0.528, 0.1 * TWO_PI * 0.528, 41))
    raise KeyError(f"unknown preset {name!r}")
