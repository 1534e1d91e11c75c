# A train of tents: each one rises to a peak and falls back to zero, and the tents get
# narrower and lower towards t = 0.  Only the running maximum of the drive moves the front,
# so the front climbs tent by tent and never retreats while w drops back to zero.
from debond import build_spiky_drive, check_gs_ell, constant_kappa_front
from debond.config import load_config
from debond.cli import verify
from pathlib import Path

here = Path(__file__).parent
drive = build_spiky_drive([1.0, 0.5, 0.25, 0.125, 0.0625], [1.0, 0.8, 0.6, 0.4, 0.2])
print("knots:", [(round(float(t), 4), round(float(v), 3)) for t, v in zip(drive.times, drive.values)])
print("envelope knots:", len(drive.envelope().times))

traj = constant_kappa_front(drive, 0.5, 0.1, 4.0)
for t in (0.0625, 0.125, 0.25, 0.5, 1.0):
    print(f"t = {t}: front {traj.front(t):.4f}, stable: {check_gs_ell(traj.front(t), float(drive(t)), traj.kappa, 4.0).passed}")

# the same comparison through the configuration file (320 steps, a few seconds)
ok, diag = verify(load_config(here / "configs" / "spiky.toml"))
print("verify:", ok, diag)
