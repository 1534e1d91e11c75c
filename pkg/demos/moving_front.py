# A membrane glued to [0, 1], pulled up at x = 0 with w(t) = t.
# Constant toughness 0.5, initial debonded length 0.1.
# The front should follow l(t) = max(0.1, t) until t = 0.5 and then let go completely.
import time

import numpy as np

from debond import (BoundaryDrive, ConstantProfile, build_grid, constant_kappa_front,
                    des_verdict, energy_balance_report, interval_mask, linear_drive,
                    mm_run, toughness_from_profile)

h = 1 / 400
g = build_grid("interval", 1.0, h)
a0 = interval_mask(g, 0.1)
kappa = toughness_from_profile(g, ConstantProfile(0.5), a0)
drive = BoundaryDrive.uniform(g, [0.0, 0.8], [0.0, 0.8])

t0 = time.perf_counter()
trace = mm_run(g, kappa, a0, drive, steps=160)
print(f"160 steps in {time.perf_counter() - t0:.1f} s")

# the closed form on the same times
exact = constant_kappa_front(linear_drive(0.8), 0.5, 0.1, 1.0)
times = np.array([e.t for e in trace.ledger])
dev = exact.deviation(times, trace.fronts())
print("front deviation from the closed form:", dev.max(), " allowed:", h + trace.tau)

for e in trace.ledger[::20]:
    print(f"t = {e.t:.3f}  front = {e.front_stat:.4f}  elastic = {e.elastic:.4f}  dissipated = {e.dissipated:.4f}")

rep = energy_balance_report(trace)
print(rep.summary())
print(des_verdict(trace, rep).summary())
