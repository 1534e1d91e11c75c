# Halving the time step should halve the worst energy-balance residual.
from debond import (BoundaryDrive, ConstantProfile, Problem, SchemeSettings, build_grid,
                    interval_mask, refine_study, toughness_from_profile)

g = build_grid("interval", 1.0, 1 / 400)
a0 = interval_mask(g, 0.1)
p = Problem(g, toughness_from_profile(g, ConstantProfile(0.5), a0), a0,
            BoundaryDrive.uniform(g, [0.0, 0.8], [0.0, 0.8]))
table = refine_study(p, [40, 80, 160, 320], SchemeSettings(gs_every=0, check_initial=False))
for r in table.rows:
    print(f"j = {r.steps:4d}  max |residual| = {r.max_residual:.3e}")
print("ratios:", [round(x, 3) for x in table.ratios])
