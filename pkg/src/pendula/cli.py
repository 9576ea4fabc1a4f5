"""Command-line front end.

::

    pendula <subcommand> [--config FILE] [--out DIR] [--engine NAME]
                         [--threads N] [--quiet]

Subcommands: simulate, rabi, lz, lzsm-fan, spectra, eigencheck.  Each writes
one or more CSV files and ``manifest.txt`` into ``--out``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure
(divergence, singular geometry, unresolvable signal), 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__, config as cfgmod, csvio, experiments as ex
from .errors import ConfigError, PendulaError

log = logging.getLogger("pendula")

SUBCOMMANDS = ("simulate", "rabi", "lz", "lzsm-fan", "spectra", "eigencheck")
EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 1, 2, 3


def _simulate(config, threads):
    r = ex.simulate(config)
    cols = {"t": r.t, "P1": r.P["P1"], "P2": r.P["P2"], "P_plus": r.P["P+"],
            "P_minus": r.P["P-"]}
    return {"simulate.csv": cols}, [f"engine {r.engine}, {len(r.t)} samples"]


def _rabi(config, threads):
    s = ex.run_rabi_scan(config, threads=threads)
    cols = {"Delta": s.Delta, "Omega_eff": s.Omega_eff, "visibility": s.visibility,
            "Omega_eff_theory": s.Omega_eff_theory, "visibility_theory": s.visibility_theory}
    rel = (s.Omega_eff - s.Omega_eff_theory) / s.Omega_eff_theory
    return {"rabi.csv": cols}, [
        f"Omega_R = {s.Omega_R:.6g} rad/s, Omega = {s.Omega:.6g} rad/s",
        f"RMS relative beat-frequency error {np.sqrt(np.mean(rel**2)):.3g}",
        f"max visibility error {np.max(np.abs(s.visibility - s.visibility_theory)):.3g}"]


def _lz(config, threads):
    p = ex.run_lz_passage(config)
    lo, hi = ex.lz_phase_band(config)
    summary = {"P_bar": [p.P_bar], "P_LZ": [p.P_LZ], "expected": [p.expected], "v": [p.v],
               "center": [p.center], "half_width": [p.half_width],
               "initial_P_plus": [p.initial_P_plus], "band_lo": [lo], "band_hi": [hi]}
    return {"lz_series.csv": {"t": p.t, "P_plus": p.P_plus}, "lz_summary.csv": summary}, [
        f"P_bar = {p.P_bar:.4f}, 1 - P_LZ = {p.expected:.4f}, phase band [{lo:.4f}, {hi:.4f}]"]


def _fan(config, threads):
    f = ex.run_lzsm_fan(config, threads=threads)
    A, E = np.meshgrid(f.A, f.eps0, indexing="ij")
    cols = {"eps0": E.ravel(), "A": A.ravel(), "P_plus": f.P.ravel(),
            "unstable": f.unstable.ravel()}
    return {"lzsm_fan.csv": cols}, [
        f"{f.P.size} cells, {int(f.unstable.sum())} flagged unstable, {f.periods} periods"]


def _spectra(config, threads):
    s = ex.run_spectra_comparison(config)
    rows = {"case": [], "signal": [], "frequency_hz": [], "magnitude": [], "smoothed": []}
    for (case, name), sp in s.spectra.items():
        n = len(sp.frequencies)
        rows["case"] += [case] * n
        rows["signal"] += [name] * n
        rows["frequency_hz"] += list(sp.frequencies)
        rows["magnitude"] += list(sp.magnitudes)
        rows["smoothed"] += list(sp.smoothed)
    peaks = {"case": [r.case for r in s.peaks], "signal": [r.signal for r in s.peaks],
             "frequency_hz": [r.freq_hz for r in s.peaks], "height": [r.height for r in s.peaks],
             "lambda": [r.lam for r in s.peaks], "eps_estimate": [r.eps_est for r in s.peaks]}
    return {"spectra.csv": rows, "spectra_peaks.csv": peaks}, [
        f"regime {s.regime}, {len(s.peaks)} peaks"]


def _eigencheck(config, threads):
    grid = config.eps_grid or ex.preset("eigen").eps_grid
    t = ex.run_eigenvalue_consistency(config.eig_delta, grid.values(), config.apparatus)
    cols = {"eps": t.eps, "newton_lo": t.newton[:, 0], "newton_hi": t.newton[:, 1],
            "schrodinger_lo": t.schrodinger[:, 0], "schrodinger_hi": t.schrodinger[:, 1],
            "deviation": t.deviation, "unstable": t.unstable}
    lim = 0.05 * t.omega0
    return {"eigencheck.csv": cols}, [
        f"max deviation {t.max_deviation(lim) / t.omega0:.3g} omega0 for |eps| <= 0.05 omega0"]


RUNNERS = {"simulate": _simulate, "rabi": _rabi, "lz": _lz, "lzsm-fan": _fan,
           "spectra": _spectra, "eigencheck": _eigencheck}


def build_parser():
    ap = argparse.ArgumentParser(prog="pendula",
                                 description="Coupled-pendula two-level-system experiments.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="configuration file (defaults when omitted)")
    ap.add_argument("--out", default=".", help="output directory (default: current)")
    ap.add_argument("--engine", choices=ex.ENGINES, help="override the configured engine")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for scans")
    ap.add_argument("--quiet", action="store_true", help="suppress the summary")
    ap.add_argument("--version", action="version", version=f"pendula {__version__}")
    return ap


def _manifest(path, args, config, files, elapsed):
    lines = [
        f"pendula {__version__}",
        f"subcommand: {args.subcommand}",
        f"engine: {config.engine}",
        f"threads: {args.threads}",
        "determinism: no random numbers are drawn; identical configuration gives "
        "byte-identical CSV files",
        f"elapsed_s: {elapsed:.3f}",
        "outputs:",
        *(f"  {f}" for f in files),
        "",
        "# resolved configuration",
        cfgmod.dumps(config),
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(format="%(message)s", stream=sys.stderr)
    log.setLevel(logging.WARNING if args.quiet else logging.INFO)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        config = cfgmod.load(args.config) if args.config else ex.ExperimentConfig()
        if args.engine:
            config = replace(config, engine=args.engine)
        if args.subcommand == "lzsm-fan" and config.engine == "newton-nonlinear":
            raise ConfigError("lzsm-fan supports the schrodinger and newton-linear engines")
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    start = time.perf_counter()
    try:
        tables, summary = RUNNERS[args.subcommand](config, args.threads)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except PendulaError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    elapsed = time.perf_counter() - start
    try:
        os.makedirs(args.out, exist_ok=True)
        written = []
        for name, cols in tables.items():
            csvio.write_columns(os.path.join(args.out, name), cols)
            written.append(name)
        _manifest(os.path.join(args.out, "manifest.txt"), args, config, written, elapsed)
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    for line in summary:
        log.info("%s", line)
    log.info("wrote %s to %s", ", ".join(written + ["manifest.txt"]), args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
