"""Time stepping: each step minimises the free-boundary functional relative to the
current debonded set, then grows the set by the new positivity set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield, replace

import numpy as np

from .bernoulli import CompetitorFamily, SolverSettings, minimize_ac, stability_check
from .dirichlet import (
    dirichlet_energy,
    energy_product,
    positivity_threshold,
    solve_dirichlet,
)
from .errors import EmptyAdmissibleClass, InadmissiblePowerDatum, InnerSolveDivergence


@dataclass
class Problem:
    grid: object
    kappa: object
    a0: object
    drive: object


@dataclass
class SchemeSettings:
    steps: int = 100
    T: float | None = None
    solver: SolverSettings = dfield(default_factory=SolverSettings)
    competitors: CompetitorFamily = dfield(default_factory=CompetitorFamily)
    gs_every: int = 1
    check_initial: bool = True


@dataclass
class EnergyLedger:
    i: int
    t: float
    elastic: float
    dissipated: float
    work: float
    eb_residual: float
    gs_margin: float = math.nan
    front_stat: float = math.nan

    COLUMNS = ("i", "t", "elastic", "dissipated", "work", "eb_residual", "gs_margin", "front_stat")

    def row(self):
        return tuple(getattr(self, c) for c in self.COLUMNS)


@dataclass
class IntervalWork:
    """Power at both ends of one step, evaluated with the step's secant slope.

    ``quad_left``/``quad_right`` are tau^2 times the Dirichlet energy of the
    slope solutions; they bound the second-order terms of the discrete
    energy inequalities.
    """

    i: int
    t0: float
    t1: float
    p_left: float
    p_right: float
    quad_left: float
    quad_right: float
    certified: bool = True

    @property
    def increment(self):
        if not self.certified:
            return 0.0
        return 0.5 * (self.t1 - self.t0) * (self.p_left + self.p_right)


@dataclass(eq=False)
class EvolutionTrace:
    grid: object
    kappa: object
    a0: object
    drive: object
    settings: SchemeSettings
    times: list = dfield(default_factory=list)
    fields: list = dfield(default_factory=list)
    sets: list = dfield(default_factory=list)
    ledger: list = dfield(default_factory=list)
    intervals: list = dfield(default_factory=list)
    steps_info: list = dfield(default_factory=list)
    warnings: list = dfield(default_factory=list)
    failure: str | None = None
    _cache: dict = dfield(default_factory=dict, repr=False)

    @property
    def tau(self):
        t0 = float(self.drive.times[0])
        T = self.settings.T if self.settings.T is not None else self.drive.T
        return (T - t0) / self.settings.steps

    def time(self, i):
        return float(self.drive.times[0]) + i * self.tau

    @property
    def bound(self):
        return self.drive.bound

    def fronts(self):
        return np.array([e.front_stat for e in self.ledger])


def front_statistic(mask):
    """One number locating the front.

    Interval: length of the debonded run starting at the Dirichlet end.
    Annulus: radius of the disc whose area equals the hole plus the set.
    Rectangle: debonded area divided by the length of the Dirichlet side.
    """
    g = mask.grid
    ind = mask.indicator
    if g.kind == "interval":
        run = ind if g.gamma[0] else ind[::-1]
        if run.all():
            return g.extents[0]
        return float(np.argmin(run)) * g.spacing
    if g.kind == "annulus":
        r0 = g.extents[0]
        return math.sqrt(mask.measure / math.pi + r0 * r0)
    side = g.extents[1] if (g.gamma[0, :].any() or g.gamma[-1, :].any()) else g.extents[0]
    return mask.measure / side


def slope_solution(grid, a, slope, cache=None):
    """h_{a, slope}: the Dirichlet solution with the drive velocity as data."""
    key = None
    if cache is not None:
        key = (a.indicator.tobytes(), slope.tobytes())
        if key in cache:
            return cache[key]
    try:
        h = solve_dirichlet(grid, a, slope).field
    except EmptyAdmissibleClass as exc:
        raise InadmissiblePowerDatum(str(exc)) from exc
    if cache is not None:
        if len(cache) > 8:
            cache.clear()
        cache[key] = h
    return h


def interval_work(trace, i):
    """Power terms for the step ending at index ``i`` (i >= 1)."""
    g = trace.grid
    t0, t1 = trace.time(i - 1), trace.time(i)
    s = trace.drive.secant(t0, t1)
    if not np.any(s):
        return IntervalWork(i, t0, t1, 0.0, 0.0, 0.0, 0.0)
    tau = t1 - t0
    try:
        hl = slope_solution(g, trace.sets[i - 1], s, trace._cache)
        hr = slope_solution(g, trace.sets[i], s, trace._cache)
    except InadmissiblePowerDatum:
        return IntervalWork(i, t0, t1, math.nan, math.nan, math.nan, math.nan, certified=False)
    return IntervalWork(
        i, t0, t1,
        energy_product(hl, trace.fields[i - 1], g),
        energy_product(hr, trace.fields[i], g),
        tau * tau * dirichlet_energy(hl, g),
        tau * tau * dirichlet_energy(hr, g),
    )


def _record(trace, i, field, A, gs_margin):
    g = trace.grid
    elastic = dirichlet_energy(field, g)
    dissipated = trace.kappa.dissipation(A, trace.sets[0]) if i > 0 else 0.0
    if i == 0:
        work = 0.0
    else:
        iw = interval_work(trace, i)
        trace.intervals.append(iw)
        work = trace.ledger[-1].work + iw.increment
    e0 = trace.ledger[0].elastic if trace.ledger else elastic
    trace.ledger.append(
        EnergyLedger(i, trace.time(i), elastic, dissipated, work, elastic + dissipated - e0 - work,
                     gs_margin, front_statistic(A))
    )


def _gs(trace, i, field, A, t):
    every = trace.settings.gs_every
    if not every or i % every:
        return math.nan
    rep = stability_check(field, A, trace.kappa, trace.drive.at(t),
                          trace.settings.competitors, trace.settings.solver)
    return rep.worst_margin


def init_evolution(grid, kappa, a0, drive, settings=None):
    """Step 0: the Dirichlet solution on the initial set with the initial data."""
    st = settings or SchemeSettings()
    if st.steps < 1:
        raise ValueError("need at least one step")
    drive.check_extension(a0)
    trace = EvolutionTrace(grid, kappa, a0, drive, st)
    t0 = trace.time(0)
    w0 = drive.at(t0)
    u0 = solve_dirichlet(grid, a0, w0, rtol=st.solver.rtol, precond=st.solver.precond).field
    thr = positivity_threshold(drive.max_at(t0))
    A0 = a0 | grid.mask(u0 > thr)
    trace.times.append(t0)
    trace.fields.append(u0)
    trace.sets.append(A0)
    margin = math.nan
    if st.check_initial:
        rep = stability_check(u0, A0, kappa, w0, st.competitors, st.solver)
        margin = rep.worst_margin
        if not rep.passed:
            trace.warnings.append(
                f"initial state is not stable: worst margin {rep.worst_margin:.3e} ({rep.worst_kind})"
            )
    trace.steps_info.append({"source": "initial", "solves": 1, "converged": True})
    _record(trace, 0, u0, A0, margin)
    return trace


def mm_step(trace, i):
    if len(trace.fields) != i:
        raise ValueError(f"step {i - 1} must be complete before step {i}")
    g = trace.grid
    t = trace.time(i)
    w = trace.drive.at(t)
    prev = trace.sets[i - 1]
    try:
        res = minimize_ac(g, prev, trace.kappa, w, warm=trace.fields[i - 1], settings=trace.settings.solver)
    except InnerSolveDivergence as exc:
        exc.step, exc.trace = i, trace
        trace.failure = f"step {i}: {exc}"
        raise
    A = prev | res.positivity
    trace.times.append(t)
    trace.fields.append(res.field)
    trace.sets.append(A)
    trace.steps_info.append(
        {"source": res.source, "solves": res.solves, "converged": res.converged, "ac_value": res.ac_value}
    )
    if not res.converged:
        trace.warnings.append(f"step {i}: continuation did not settle; best iterate kept")
    _record(trace, i, res.field, A, _gs(trace, i, res.field, A, t))
    return trace


def mm_run(grid, kappa, a0, drive, steps=None, settings=None):
    st = settings or SchemeSettings()
    if steps is not None:
        st = replace(st, steps=int(steps))
    trace = init_evolution(grid, kappa, a0, drive, st)
    for i in range(1, st.steps + 1):
        mm_step(trace, i)
    return trace


def run_problem(problem, settings=None, steps=None):
    return mm_run(problem.grid, problem.kappa, problem.a0, problem.drive, steps, settings)


@dataclass
class RefinementRow:
    steps: int
    tau: float
    elastic: float
    dissipated: float
    max_residual: float
    front: float


@dataclass
class RefinementTable:
    rows: list
    decreasing: bool
    ratios: list


def refine_study(problem, step_counts, settings=None):
    """Run the same physics at several step counts and tabulate the energy residual."""
    counts = sorted(int(j) for j in step_counts)
    if len(counts) < 2:
        raise ValueError("need at least two step counts")
    rows = []
    for j in counts:
        tr = run_problem(problem, settings, steps=j)
        last = tr.ledger[-1]
        res = max(abs(e.eb_residual) for e in tr.ledger)
        rows.append(RefinementRow(j, tr.tau, last.elastic, last.dissipated, res, last.front_stat))
    vals = [r.max_residual for r in rows]
    floor = 1e-12 * max(1.0, max(abs(r.elastic) + abs(r.dissipated) for r in rows))
    decreasing = all(b <= a + floor for a, b in zip(vals, vals[1:]))
    ratios = [a / b if b > floor else math.inf for a, b in zip(vals, vals[1:])]
    return RefinementTable(rows, decreasing, ratios)
