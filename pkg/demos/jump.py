# Same bar, but starting from l0 = 0.6: past the midpoint the crack is unstable.
# Nothing moves until w^2 = 2 kappa l0 (L - l0), then everything debonds at once.
import math

from debond import (BoundaryDrive, ConstantProfile, build_grid, constant_kappa_front,
                    interval_mask, linear_drive, mm_run, toughness_from_profile)
from debond.onedim import check_eb_ell

g = build_grid("interval", 1.0, 1 / 400)
a0 = interval_mask(g, 0.6)
kappa = toughness_from_profile(g, ConstantProfile(0.5), a0)
trace = mm_run(g, kappa, a0, BoundaryDrive.uniform(g, [0.0, 0.8], [0.0, 0.8]), steps=160)

t_exact = math.sqrt(2 * 0.5 * 0.6 * 0.4)
k = next(e.i for e in trace.ledger if e.front_stat == 1.0)
print(f"scheme jumps at step {k}, t = {trace.time(k):.4f}; closed form t = {t_exact:.4f}")

# where does the stored elastic energy go?  all of it into the newly debonded part
before, after = trace.ledger[k - 1], trace.ledger[k]
print("elastic drop:", before.elastic - after.elastic)
print("dissipated:  ", after.dissipated - before.dissipated)

# the closed-form trajectory balances exactly, jump included
traj = constant_kappa_front(linear_drive(0.8), 0.5, 0.6, 1.0)
print("jumps:", traj.jumps)
series = check_eb_ell(traj)
print("max |closed-form residual|:", abs(series.residual).max())
