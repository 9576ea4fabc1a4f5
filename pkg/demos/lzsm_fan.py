"""Landau-Zener-Stueckelberg-Majorana interference fan.

Each cell starts in the out-of-phase mode and averages the in-phase
population over five drive periods.  Below the diagonal ``A = |eps0|`` the
drive never reaches the crossing and little happens; above it repeated
passages interfere and multiphoton resonances appear as bright fringes.
The coarse grid keeps the run short; use the full preset for a 60 x 60 map.

    python demos/lzsm_fan.py
"""

from dataclasses import replace

import numpy as np

from pendula import experiments as ex

config = replace(ex.preset("lzsm"), eps0_grid=ex.Grid(0.0, 1.2, 24), A_grid=ex.Grid(0.0, 1.2, 24))
fan = ex.run_lzsm_fan(config)

shades = " .:-=+*#%@"
print("rows: A from 1.2 down to 0 rad/s; columns: eps0 from 0 to 1.2 rad/s")
for i in range(len(fan.A) - 1, -1, -1):
    row = "".join(shades[min(int(p * len(shades)), len(shades) - 1)] for p in fan.P[i])
    print(f"{fan.A[i]:5.2f} |{row}|")
print(f"\nmean P+ above the diagonal {np.mean(fan.P[fan.A[:, None] > fan.eps0[None, :]]):.3f}, "
      f"below {np.mean(fan.P[fan.A[:, None] < fan.eps0[None, :]]):.3f}")
