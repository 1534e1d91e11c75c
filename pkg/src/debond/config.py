"""TOML run configuration.

Every section is checked against a fixed set of keys; anything unknown is
an error. Input paths are resolved against the config file's directory;
the output directory is taken relative to the working directory.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field as dfield, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bernoulli import CompetitorFamily, SolverSettings
from .dirichlet import harmonic_extension
from .errors import ConfigError
from .evolution import Problem, SchemeSettings
from .grid import (
    BoundaryDrive,
    ConstantProfile,
    InverseSquareProfile,
    RadialProfile,
    band_mask,
    build_grid,
    fatten_initial_set,
    interval_mask,
    make_toughness,
    toughness_from_profile,
)
from .io import read_field_csv, read_mask_pgm
from .onedim import PiecewiseLinear, build_spiky_drive

_SECTIONS = {"domain", "physics", "scheme", "output", "sweep"}
_DOMAIN = {"shape", "extents", "spacing", "gamma"}
_PHYSICS = {"kappa", "a0", "drive", "bound"}
_KAPPA = {
    "constant": {"value"},
    "inverse_square": {"c", "cap"},
    "radial": {"c", "power"},
    "raster": {"path"},
}
_A0 = {
    "empty": set(),
    "interval": {"length"},
    "band": {"outer", "inner"},
    "raster": {"path"},
}
_DRIVE = {
    "samples": {"samples", "extension"},
    "spiky": {"times", "peaks", "extension"},
}
_SOLVER = {f for f in SolverSettings.__dataclass_fields__}
_COMPETITORS = {f for f in CompetitorFamily.__dataclass_fields__} - {"seed"}
_SCHEME = {"steps", "T", "gs_every", "check_initial", "rate_constant", "seed", "solver", "competitors"}
_OUTPUT = {"dir", "dump_every", "formats"}
_SWEEP = {"steps"}
_FORMATS = {"csv", "pgm", "png"}


def _keys(table, allowed, where):
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table")
    extra = set(table) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(extra))}")


def _typed(table, allowed, where):
    kind = table.get("type")
    if kind not in allowed:
        raise ConfigError(f"[{where}] type must be one of {sorted(allowed)}, got {kind!r}")
    _keys(table, allowed[kind] | {"type", "fatten"} if where == "physics.a0" else allowed[kind] | {"type"}, where)
    return kind


def _need(table, key, where):
    if key not in table:
        raise ConfigError(f"[{where}] needs {key!r}")
    return table[key]


@dataclass
class RunConfig:
    problem: Problem
    scheme: SchemeSettings
    rate_constant: float = 5.0
    seed: int = 0
    out_dir: Path = Path("out")
    dump_every: int = 0
    formats: tuple = ("csv", "pgm")
    sweep_steps: tuple = (40, 80, 160)
    scalar_drive: PiecewiseLinear | None = None
    a0_length: float | None = None
    kappa_table: dict = dfield(default_factory=dict)
    source: Path | None = None

    def with_overrides(self, steps=None, seed=None, out=None, dump_every=None):
        cfg = replace(self)
        if steps is not None:
            if steps < 1:
                raise ConfigError("--steps must be positive")
            cfg.scheme = replace(cfg.scheme, steps=int(steps))
        if seed is not None:
            cfg.seed = int(seed)
            cfg.scheme = replace(cfg.scheme, competitors=replace(cfg.scheme.competitors, seed=int(seed)))
        if out is not None:
            cfg.out_dir = Path(out)
        if dump_every is not None:
            cfg.dump_every = int(dump_every)
        return cfg


def load_config(path):
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, base=path.parent, source=path)


def _kappa(grid, table, a0):
    kind = _typed(table, _KAPPA, "physics.kappa")
    if kind == "constant":
        return toughness_from_profile(grid, ConstantProfile(float(_need(table, "value", "physics.kappa"))), a0)
    if kind == "inverse_square":
        cap = table.get("cap")
        prof = InverseSquareProfile(float(_need(table, "c", "physics.kappa")), None if cap is None else float(cap))
        return toughness_from_profile(grid, prof, a0)
    if kind == "radial":
        prof = RadialProfile(float(_need(table, "c", "physics.kappa")), float(table.get("power", 0.0)))
        return toughness_from_profile(grid, prof, a0)
    return make_toughness(grid, read_field_csv(table["path"], grid.shape), a0)


def _a0(grid, table):
    kind = _typed(table, _A0, "physics.a0")
    if kind == "empty":
        a = grid.empty()
    elif kind == "interval":
        if grid.kind != "interval":
            raise ConfigError("a0 type 'interval' needs an interval domain")
        a = interval_mask(grid, float(_need(table, "length", "physics.a0")))
    elif kind == "band":
        if grid.kind != "annulus":
            raise ConfigError("a0 type 'band' needs an annulus domain")
        inner = table.get("inner")
        a = band_mask(grid, float(_need(table, "outer", "physics.a0")), None if inner is None else float(inner))
    else:
        a = read_mask_pgm(table["path"], grid)
    eps = float(table.get("fatten", 0.0))
    return fatten_initial_set(grid, a, eps) if eps > 0 else a


def _drive(grid, table, base):
    kind = _typed(table, _DRIVE, "physics.drive")
    scalar = None
    if kind == "samples":
        samples = _need(table, "samples", "physics.drive")
        if not isinstance(samples, list) or len(samples) < 1:
            raise ConfigError("drive samples must be a list of [t, value] pairs")
        times, rows = [], []
        ng = int(np.count_nonzero(grid.gamma))
        for s in samples:
            if not isinstance(s, list) or len(s) != 2:
                raise ConfigError(f"bad drive sample {s!r}; expected [t, value or path]")
            times.append(float(s[0]))
            v = s[1]
            if isinstance(v, str):
                vals = read_field_csv(_path(base, v)).ravel()
                if vals.size != ng:
                    raise ConfigError(f"{v}: expected {ng} Gamma values, found {vals.size}")
                rows.append(vals)
            else:
                rows.append(np.full(ng, float(v)))
        if all(not isinstance(s[1], str) for s in samples) and len(samples) > 1:
            scalar = PiecewiseLinear(np.array(times), np.array([float(s[1]) for s in samples]))
        drive = BoundaryDrive(grid, np.array(times), np.array(rows))
    else:
        scalar = build_spiky_drive(_need(table, "times", "physics.drive"), _need(table, "peaks", "physics.drive"))
        drive = scalar.to_boundary(grid)
    return drive, scalar, table.get("extension", "none")


def _path(base, p):
    q = Path(p)
    return q if q.is_absolute() or base is None else Path(base) / q


def parse_config(raw, base=None, source=None):
    _keys(raw, _SECTIONS, "top level")
    dom = _need(raw, "domain", "top level")
    _keys(dom, _DOMAIN, "domain")
    phys = _need(raw, "physics", "top level")
    _keys(phys, _PHYSICS, "physics")
    sch = raw.get("scheme", {})
    _keys(sch, _SCHEME, "scheme")
    out = raw.get("output", {})
    _keys(out, _OUTPUT, "output")
    sw = raw.get("sweep", {})
    _keys(sw, _SWEEP, "sweep")

    grid = build_grid(_need(dom, "shape", "domain"), _need(dom, "extents", "domain"),
                      _need(dom, "spacing", "domain"), dom.get("gamma"))
    for sec in ("kappa", "a0"):
        t = phys.get(sec, {})
        if isinstance(t, dict) and "path" in t:
            t["path"] = _path(base, t["path"])
    a0_table = phys.get("a0", {"type": "empty"})
    a0 = _a0(grid, a0_table)
    kappa_table = _need(phys, "kappa", "physics")
    kappa = _kappa(grid, kappa_table, a0)
    drive, scalar, ext = _drive(grid, _need(phys, "drive", "physics"), base)
    if ext not in ("none", "harmonic"):
        raise ConfigError(f"drive extension must be 'none' or 'harmonic', got {ext!r}")
    if ext == "harmonic":
        drive = harmonic_extension(drive, a0)
    if "bound" in phys and float(phys["bound"]) < drive.bound:
        raise ConfigError(f"bound {phys['bound']} is below the drive maximum {drive.bound}")

    solver = sch.get("solver", {})
    _keys(solver, _SOLVER, "scheme.solver")
    comp = sch.get("competitors", {})
    _keys(comp, _COMPETITORS, "scheme.competitors")
    seed = int(sch.get("seed", 0))
    scheme = SchemeSettings(
        steps=int(sch.get("steps", 100)),
        T=None if sch.get("T") is None else float(sch["T"]),
        solver=SolverSettings(**solver),
        competitors=CompetitorFamily(**comp, seed=seed),
        gs_every=int(sch.get("gs_every", 1)),
        check_initial=bool(sch.get("check_initial", True)),
    )
    if scheme.steps < 1:
        raise ConfigError("scheme.steps must be positive")
    formats = tuple(out.get("formats", ("csv", "pgm")))
    if set(formats) - _FORMATS:
        raise ConfigError(f"unknown output formats {sorted(set(formats) - _FORMATS)}")
    steps = tuple(int(j) for j in sw.get("steps", (40, 80, 160)))
    length = a0_table.get("length") if a0_table.get("type") == "interval" else (0.0 if a0_table.get("type") == "empty" else None)
    if length is not None and a0_table.get("fatten", 0.0) > 0:
        length = None
    return RunConfig(
        problem=Problem(grid, kappa, a0, drive),
        scheme=scheme,
        rate_constant=float(sch.get("rate_constant", 5.0)),
        seed=seed,
        out_dir=Path(out.get("dir", "out")),
        dump_every=int(out.get("dump_every", 0)),
        formats=formats,
        sweep_steps=steps,
        scalar_drive=scalar,
        a0_length=None if length is None else float(length),
        kappa_table=dict(kappa_table),
        source=source,
    )
