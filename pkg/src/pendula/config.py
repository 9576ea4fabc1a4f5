"""Configuration files: sectioned ``key = value unit`` text.

Every dimensional value carries an explicit unit suffix; frequencies may be
given in Hz, mHz or rad/s and are stored as angular frequencies.  Omitted
keys fall back to the apparatus defaults.  :func:`dumps` writes canonical
SI units with shortest round-trip floats so ``loads(dumps(c)) == c``.

Example::

    [pendula]
    f1 = 0.53365 Hz
    f2 = 0.52195 Hz

    [magnets]
    L = 454 mm
    Omega = 11.7 mHz

    [run]
    engine = newton-linear
    t_end = 600 s
"""

from __future__ import annotations

import configparser
import math
import re

from . import tls
from .errors import ConfigError
from .experiments import ENGINES, ExperimentConfig, Grid, InitialCondition
from .model import ApparatusParams, MagnetAssembly, PendulumParams, PhysicalConstants

__all__ = ["UNITS", "parse_quantity", "load", "loads", "dumps", "dump"]

TWO_PI = 2 * math.pi

# unit -> factor into the internal SI value, grouped by dimension
UNITS = {
    "frequency": {"rad/s": 1.0, "1/s": 1.0, "s^-1": 1.0, "Hz": TWO_PI, "mHz": TWO_PI * 1e-3},
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3},
    "time": {"s": 1.0, "ms": 1e-3, "min": 60.0},
    "angle": {"rad": 1.0, "deg": math.pi / 180},
    "mass": {"kg": 1.0, "g": 1e-3},
    "moment": {"A m^2": 1.0, "A*m^2": 1.0, "Am^2": 1.0},
    "acceleration": {"m/s^2": 1.0},
    "spectral": {"Hz": 1.0, "mHz": 1e-3},
}
CANONICAL = {"frequency": "rad/s", "length": "m", "time": "s", "angle": "rad", "mass": "kg",
             "moment": "A m^2", "acceleration": "m/s^2", "spectral": "Hz"}

# section -> key -> kind ("number" is dimensionless, "int", "bool", "str:<choices>")
SCHEMA = {
    "constants": {"g": "acceleration"},
    "pendula": {"f1": "frequency", "f2": "frequency", "mass": "mass", "l_c1": "length",
                "l_c2": "length", "l_l": "length", "l_u": "length"},
    "magnets": {"m_l": "moment", "m_u": "moment", "L": "length", "L_u": "length",
                "Omega": "frequency", "upper": "bool", "phase": "angle"},
    "drive": {"eps0": "frequency", "A": "frequency", "Omega": "frequency"},
    "run": {"engine": "str:" + ",".join(ENGINES), "init": "str:single,out-of-phase",
            "amplitude": "angle", "relative_phase": "angle", "dressed": "bool", "t_end": "time", "dt": "time",
            "sample_dt": "time", "lowpass_sigma": "time"},
    "rabi": {"delta_start": "frequency", "delta_stop": "frequency", "delta_num": "int"},
    "lz": {"half_width": "time"},
    "fan": {"eps0_start": "frequency", "eps0_stop": "frequency", "eps0_num": "int",
            "A_start": "frequency", "A_stop": "frequency", "A_num": "int", "periods": "int"},
    "spectra": {"sigma": "spectral", "threshold": "number", "regime": "str:auto,rabi,lzsm"},
    "eigencheck": {"delta": "frequency", "eps_start": "frequency", "eps_stop": "frequency",
                   "eps_num": "int"},
}

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY = re.compile(rf"^\s*({_NUM})\s*(.*?)\s*$")
_KEYLINE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")
_SECTION = re.compile(r"^\s*\[([^\]]+)\]")


def _locate(text):
    """Map ``(section, key)`` to 1-based line numbers."""
    where, sec = {}, None
    for i, line in enumerate(text.splitlines(), 1):
        m = _SECTION.match(line)
        if m:
            sec = m.group(1).strip()
            where.setdefault((sec, None), i)
            continue
        m = _KEYLINE.match(line)
        if m and sec is not None:
            where.setdefault((sec, m.group(1)), i)
    return where


def parse_quantity(text, kind):
    """Parse ``"<number> <unit>"`` into the internal SI value.

    Raises
    ------
    ConfigError
        Malformed number, missing unit or unit of the wrong dimension.
    """
    m = _QUANTITY.match(text)
    if not m:
        raise ConfigError(f"cannot read a number from {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    if not math.isfinite(value):
        raise ConfigError(f"value {text!r} is not finite")
    if kind == "number":
        if unit not in ("", "1"):
            raise ConfigError(f"{text!r} is dimensionless but carries unit {unit!r}")
        return value
    table = UNITS[kind]
    if not unit:
        raise ConfigError(f"{text!r} needs a {kind} unit, one of {sorted(table)}")
    if unit not in table:
        raise ConfigError(f"unit {unit!r} is not a {kind} unit; expected one of {sorted(table)}")
    return value * table[unit]


def _value(raw, kind):
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"expected an integer, got {raw!r}") from None
    if kind == "bool":
        low = raw.strip().lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"expected true or false, got {raw!r}")
    if kind.startswith("str:"):
        choices = kind[4:].split(",")
        if raw.strip() not in choices:
            raise ConfigError(f"expected one of {choices}, got {raw!r}")
        return raw.strip()
    return parse_quantity(raw, kind)


def _read(text):
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    where = _locate(text)
    values = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"line {where.get((sec, None), '?')}: unknown section [{sec}]")
        for key, raw in cp.items(sec):
            line = where.get((sec, key), "?")
            if key not in SCHEMA[sec]:
                raise ConfigError(f"line {line}: unknown key {key!r} in [{sec}]")
            try:
                values[(sec, key)] = _value(raw, SCHEMA[sec][key])
            except ConfigError as exc:
                raise ConfigError(f"line {line}: [{sec}] {key}: {exc}") from None
    return values, where


def _grid(values, sec, stem):
    keys = [(sec, f"{stem}_{s}") for s in ("start", "stop", "num")]
    present = [k in values for k in keys]
    if not any(present):
        return None
    if not all(present):
        raise ConfigError(f"[{sec}] needs all of {stem}_start, {stem}_stop, {stem}_num")
    return Grid(*(values[k] for k in keys))


def loads(text):
    """Parse configuration text into an :class:`ExperimentConfig`."""
    values, where = _read(text)

    def get(sec, key, default=None):
        return values.get((sec, key), default)

    def build(sec, key, fn):
        # rethrow validation errors with the offending key and line
        try:
            return fn()
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            line = where.get((sec, key), where.get((sec, None), "?"))
            raise ConfigError(f"line {line}: [{sec}] {key}: {exc}") from None

    const = build("constants", "g",
                  lambda: PhysicalConstants(g=get("constants", "g", PhysicalConstants.g)))
    pdef = PendulumParams.from_frequencies(g=const.g)
    w1 = get("pendula", "f1", TWO_PI * 0.53365)
    w2 = get("pendula", "f2", TWO_PI * 0.52195)
    for key in ("f1", "f2", "mass", "l_c1", "l_c2", "l_l", "l_u"):
        v = get("pendula", key)
        if v is not None and not v > 0:
            raise ConfigError(f"line {where.get(('pendula', key), '?')}: [pendula] {key} "
                              f"must be positive, got {v!r}")
    pend = build("pendula", "f1", lambda: PendulumParams.from_angular(
        w1, w2, g=const.g, M=get("pendula", "mass", pdef.M),
        l_c1=get("pendula", "l_c1"), l_c2=get("pendula", "l_c2"),
        l_l=get("pendula", "l_l", pdef.l_l), l_u=get("pendula", "l_u", pdef.l_u)))

    mag_kw = {}
    for (sec, key), v in values.items():
        if sec == "magnets":
            mag_kw[key] = v
    for key, v in mag_kw.items():
        if key in ("L", "L_u") and not v > 0:
            raise ConfigError(f"line {where.get(('magnets', key), '?')}: [magnets] {key} "
                              f"must be positive, got {v!r}")
    mags = build("magnets", min(mag_kw, default="L"), lambda: MagnetAssembly(**mag_kw))
    app = build("pendula", "f1", lambda: ApparatusParams(const, pend, mags))

    drive = None
    if any(k[0] == "drive" for k in values):
        missing = [k for k in ("eps0", "A", "Omega") if ("drive", k) not in values]
        if missing:
            raise ConfigError(f"line {where.get(('drive', None), '?')}: [drive] needs "
                              f"eps0, A and Omega (missing {', '.join(missing)})")
        drive = build("drive", "Omega", lambda: tls.DriveWaveform(
            get("drive", "eps0"), get("drive", "A"), get("drive", "Omega")))

    init = None
    if any(("run", k) in values for k in ("init", "amplitude", "relative_phase", "dressed")):
        init = build("run", "init", lambda: InitialCondition(
            get("run", "init", "single"), get("run", "amplitude", 0.01),
            get("run", "relative_phase", 0.0), get("run", "dressed", True)))

    kw = dict(apparatus=app, drive=drive, init=init,
              engine=get("run", "engine", "schrodinger"),
              t_end=get("run", "t_end"), dt=get("run", "dt"), sample_dt=get("run", "sample_dt"),
              lowpass_sigma=get("run", "lowpass_sigma"),
              delta_grid=_grid(values, "rabi", "delta"),
              eps0_grid=_grid(values, "fan", "eps0"), A_grid=_grid(values, "fan", "A"),
              fan_periods=get("fan", "periods", 5),
              eps_grid=_grid(values, "eigencheck", "eps"),
              lz_half_width=get("lz", "half_width"),
              spectrum_sigma=get("spectra", "sigma"),
              peak_threshold=get("spectra", "threshold", 0.05),
              regime=get("spectra", "regime", "auto"))
    if ("eigencheck", "delta") in values:
        kw["eig_delta"] = values[("eigencheck", "delta")]
    try:
        return ExperimentConfig(**kw)
    except ConfigError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def load(path):
    """Read and parse a configuration file.

    Raises
    ------
    ConfigError
        Missing or unreadable file, unknown key, unit violation.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigError(f"configuration file {str(path)!r} does not exist") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read configuration {str(path)!r}: {exc}") from None
    return loads(text)


def _q(value, kind):
    return f"{value!r} {CANONICAL[kind]}" if kind in CANONICAL else repr(value)


def dumps(config):
    """Canonical text form; every resolved value is written explicitly."""
    app = config.apparatus
    p, m, c = app.pendulum, app.magnets, app.constants
    out = []

    def section(name, items):
        out.append(f"[{name}]")
        for key, text in items:
            out.append(f"{key} = {text}")
        out.append("")

    section("constants", [("g", _q(c.g, "acceleration"))])
    section("pendula", [("f1", _q(p.omega1, "frequency")), ("f2", _q(p.omega2, "frequency")),
                        ("mass", _q(p.M, "mass")), ("l_c1", _q(p.l_c1, "length")),
                        ("l_c2", _q(p.l_c2, "length")), ("l_l", _q(p.l_l, "length")),
                        ("l_u", _q(p.l_u, "length"))])
    section("magnets", [("m_l", _q(m.m_l, "moment")), ("m_u", _q(m.m_u, "moment")),
                        ("L", _q(m.L, "length")), ("L_u", _q(m.L_u, "length")),
                        ("Omega", _q(m.Omega, "frequency")),
                        ("upper", "true" if m.upper else "false"),
                        ("phase", _q(m.phase, "angle"))])
    if config.drive is not None:
        d = config.drive
        section("drive", [("eps0", _q(d.eps0, "frequency")), ("A", _q(d.A, "frequency")),
                          ("Omega", _q(d.Omega, "frequency"))])
    run = [("engine", config.engine)]
    if config.init is not None:
        run += [("init", config.init.kind), ("amplitude", _q(config.init.amplitude, "angle")),
                ("relative_phase", _q(config.init.relative_phase, "angle")),
                ("dressed", "true" if config.init.dressed else "false")]
    for key in ("t_end", "dt", "sample_dt", "lowpass_sigma"):
        v = getattr(config, key)
        if v is not None:
            run.append((key, _q(v, "time")))
    section("run", run)

    def grid(stem, g, kind):
        return [] if g is None else [(f"{stem}_start", _q(g.start, kind)),
                                     (f"{stem}_stop", _q(g.stop, kind)),
                                     (f"{stem}_num", str(int(g.num)))]

    section("rabi", grid("delta", config.delta_grid, "frequency"))
    section("lz", [] if config.lz_half_width is None
            else [("half_width", _q(config.lz_half_width, "time"))])
    section("fan", grid("eps0", config.eps0_grid, "frequency")
            + grid("A", config.A_grid, "frequency") + [("periods", str(int(config.fan_periods)))])
    spectra_items = [] if config.spectrum_sigma is None else [("sigma", _q(config.spectrum_sigma, "spectral"))]
    section("spectra", spectra_items + [("threshold", repr(config.peak_threshold)),
                               ("regime", config.regime)])
    section("eigencheck", [("delta", _q(config.eig_delta, "frequency"))]
            + grid("eps", config.eps_grid, "frequency"))
    return "\n".join(out)


def dump(config, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(config))

