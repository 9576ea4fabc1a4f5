"""Mode splitting seen in spectra and in a Husimi time-frequency map.

Static magnets freeze the coupling at its attractive or repulsive extreme;
the spectrum of the mode oscillation then shows the two eigenfrequencies,
and inverting the eigenvalue relation recovers the coupling.  Under the
drive, a Husimi map of a synthetic carrier follows the instantaneous gap
``sqrt(Delta^2 + eps(t)^2)``.

    python demos/spectra_and_husimi.py
"""

import math
from dataclasses import replace

import numpy as np

from pendula import experiments as ex, signal, tls

config = replace(ex.preset("lzsm"), drive=tls.DriveWaveform(0.3, 0.2, 2 * math.pi * 7.1e-3))
comp = ex.run_spectra_comparison(config)
print(f"regime {comp.regime}; frozen couplings {comp.eps['attractive']:.2f} and "
      f"{comp.eps['repulsive']:.2f} rad/s")
for row in comp.peaks:
    if row.case != "driven":
        print(f"  {row.case:10s} {row.signal:5s} f = {row.freq_hz:.4f} Hz  "
              f"height {row.height:8.3f}  eps estimate {row.eps_est:+.3f} rad/s")

lz = ex.preset("lz")
d = ex.resolve_drive(lz)
w0, Delta, T = lz.omega0, lz.Delta, d.period
ph = tls.adiabatic_phase(d, Delta, (0, T), 0.05)
carrier = signal.reconstruct_deflection(np.exp(-1j * ph.Phi_series), ph.t, w0)
series = signal.TimeSeries(0.0, ph.t[1] - ph.t[0], carrier)
tc = np.linspace(T / 5, 4 * T / 5, 9)
ridge = signal.husimi(series, T / 20, w0 + np.arange(0, 0.3, 0.002), tc).ridge() - w0
print("\n  t (s)   ridge - w0   sqrt(D^2 + eps^2)")
for t, r in zip(tc, ridge):
    print(f"{t:7.0f} {r:12.4f} {math.hypot(Delta, d(t)):16.4f}")
