# A toughness tuned so that, at a fixed pull w = 0.3, every front between 0.1 and 0.5
# has the same total energy w^2 / (2 * 0.1) = 0.45.  Any choice is an energetic solution;
# the scheme keeps the front it has unless a strictly better one exists.
import numpy as np

from debond import (BoundaryDrive, InverseSquareProfile, build_grid, flat_landscape_front,
                    interval_mask, linear_drive, mm_run, toughness_from_profile)

w = 0.3
g = build_grid("interval", 1.0, 1 / 400)
a0 = interval_mask(g, 0.1)
kappa = toughness_from_profile(g, InverseSquareProfile(w * w / 2, cap=0.5), a0)
trace = mm_run(g, kappa, a0, BoundaryDrive.uniform(g, [0.0, 1.0], [w, w]), steps=100)

fronts = trace.fronts()
totals = np.array([e.elastic + e.dissipated for e in trace.ledger])
print("fronts between", fronts.min(), "and", fronts.max())
print("total energy between", totals.min(), "and", totals.max())

traj = flat_landscape_front(linear_drive(1.0, rate=0.0, start=w), w * w / 2, 0.5, 0.1, 1.0)
print("band of equally good fronts:", traj.band)
