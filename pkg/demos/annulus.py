# A disc-shaped membrane with a hole: pulled on the inner circle r = 0.2, glued out to r = 1.
# With toughness 1 the debonded region stays a ring, and at w = 0.6479 its edge sits near r = 0.5,
# where pi w^2 / log(l / 0.2) + pi (l^2 - l0^2) is smallest.
# The full run takes a couple of minutes; pass a step count to go faster.
import math
import sys
import time

import numpy as np

from debond import (BoundaryDrive, RadialProfile, SchemeSettings, band_mask, build_grid,
                    mm_run, toughness_from_profile)

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 100
h = 1 / 200
g = build_grid("annulus", (0.2, 1.0), h)
a0 = band_mask(g, 0.2 + 2 * h)
kappa = toughness_from_profile(g, RadialProfile(1.0), a0)
drive = BoundaryDrive.uniform(g, [0.0, 1.0], [0.0, 0.6479])

t0 = time.perf_counter()
trace = mm_run(g, kappa, a0, drive, settings=SchemeSettings(steps=steps, gs_every=10, check_initial=False))
print(f"{steps} steps in {time.perf_counter() - t0:.0f} s")

ell = np.linspace(0.21, 1.0, 100001)[1:]
G = math.pi * 0.6479**2 / np.log(ell / 0.2) + math.pi * ell**2
print("front radius:", trace.ledger[-1].front_stat, " radial minimiser:", ell[np.argmin(G)])

for e in trace.ledger[:: max(1, steps // 10)]:
    print(f"t = {e.t:.2f}  radius = {e.front_stat:.4f}  gs margin = {e.gs_margin:.2e}")
