"""Post-hoc verification of a completed trace: stability, energy balance, irreversibility."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .bernoulli import gs_tolerance, stability_check
from .dirichlet import dirichlet_energy, energy_product, positivity_threshold, solve_dirichlet
from .errors import WorkFormMismatch
from .evolution import interval_work, slope_solution


def field_tolerance(bound):
    return 1e-8 * max(1.0, float(bound))


def compute_power(trace, i, slope=None):
    """Rate of work at step ``i``: the energy product of u_i with h_{A_i, wdot}.

    Without an explicit ``slope`` the segment slope ending at t_i is used
    (the first segment for i = 0). With an extension in the drive the
    extension's rate is used instead, after checking both forms agree.
    """
    g = trace.grid
    t = trace.time(i)
    side = "right" if i == 0 else "left"
    s = trace.drive.rate(t, side) if slope is None else slope
    u = trace.fields[i]
    if not np.any(s):
        p = 0.0
    else:
        h = slope_solution(g, trace.sets[i], s)
        p = energy_product(h, u, g)
    if trace.drive.extension is None or slope is not None:
        return p
    wdot = trace.drive.extension_rate(t, side)
    pbar = energy_product(wdot, u, g)
    if abs(p - pbar) > 1e-6 * max(1.0, abs(p)):
        raise WorkFormMismatch(f"step {i}: power {p:.12g} vs extension form {pbar:.12g}")
    return pbar


@dataclass
class StepAudit:
    i: int
    t: float
    elastic: float
    dissipated: float
    work: float
    residual: float
    lower_residual: float
    upper_residual: float
    gs_margin: float
    gs_tol: float
    gs_passed: bool
    lower_ok: bool
    upper_ok: bool
    rate_ok: bool

    COLUMNS = ("i", "t", "elastic", "dissipated", "work", "residual", "lower_residual",
               "upper_residual", "gs_margin", "gs_tol", "gs_passed", "lower_ok", "upper_ok", "rate_ok")

    def row(self):
        return tuple(getattr(self, c) for c in self.COLUMNS)


@dataclass
class AuditReport:
    steps: list
    intervals: list
    tau: float
    rate_constant: float
    rate_bound: float
    peak_power: float
    certified: bool
    eb_passed: bool
    gs_passed: bool
    uncertified_steps: list = dfield(default_factory=list)

    @property
    def passed(self):
        return self.eb_passed and self.gs_passed

    @property
    def max_residual(self):
        return max(abs(s.residual) for s in self.steps)

    def summary(self):
        worst_gs = min((s.gs_margin for s in self.steps if not math.isnan(s.gs_margin)), default=math.nan)
        lines = [
            f"steps: {len(self.steps) - 1}, tau = {self.tau:.6g}",
            f"max |energy residual|: {self.max_residual:.3e} (bound {self.rate_bound:.3e}, "
            f"C = {self.rate_constant}, peak power {self.peak_power:.4g})",
            f"lower inequality: {'ok' if all(s.lower_ok for s in self.steps) else 'FAILED'}",
            f"upper inequality: {'ok' if all(s.upper_ok for s in self.steps) else 'FAILED'}",
            f"stability: {'ok' if self.gs_passed else 'FAILED'} (worst margin {worst_gs:.3e})",
            f"energy balance certified: {self.certified}",
        ]
        if self.uncertified_steps:
            lines.append(f"uncertified intervals: {self.uncertified_steps}")
        return "\n".join(lines)


def energy_balance_report(trace, rate_constant=5.0, recompute_gs=False):
    """Recompute the energy ledger of ``trace`` from its fields and sets.

    Besides the trapezoidal residual, two one-sided residuals are checked,
    both exact for the time-discrete scheme: the left one (work from the
    start of each step plus its second-order term) is never positive, and
    the right one (work from the end of each step minus its second-order
    term) is never negative when every state is stable.
    """
    g = trace.grid
    kappa = trace.kappa
    A0 = trace.sets[0]
    n = len(trace.fields)
    intervals = []
    for i in range(1, n):
        saved = trace._cache
        trace._cache = {}
        try:
            intervals.append(interval_work(trace, i))
        finally:
            trace._cache = saved
    e0 = dirichlet_energy(trace.fields[0], g)
    peak = max([abs(iw.p_left) for iw in intervals if iw.certified]
               + [abs(iw.p_right) for iw in intervals if iw.certified] + [0.0])
    bound = rate_constant * trace.tau * max(1.0, peak)
    steps = []
    work = lo_work = up_work = 0.0
    gs_ok = True
    uncert = []
    for i in range(n):
        u, A = trace.fields[i], trace.sets[i]
        el = dirichlet_energy(u, g)
        diss = float(np.sum(kappa.penalty[A.indicator & ~A0.indicator]))
        if i > 0:
            iw = intervals[i - 1]
            if iw.certified:
                tau = iw.t1 - iw.t0
                work += iw.increment
                lo_work += tau * iw.p_right - iw.quad_right
                up_work += tau * iw.p_left + iw.quad_left
            else:
                uncert.append(i)
        total = el + diss
        res = total - e0 - work
        lo = total - e0 - lo_work
        up = total - e0 - up_work
        tol = gs_tolerance(total)
        margin = trace.ledger[i].gs_margin if i < len(trace.ledger) else math.nan
        if recompute_gs and math.isnan(margin):
            t = trace.time(i)
            margin = stability_check(u, A, kappa, trace.drive.at(t), trace.settings.competitors,
                                     trace.settings.solver).worst_margin
        gs_pass = math.isnan(margin) or margin >= -gs_tolerance(el)
        gs_ok &= gs_pass
        steps.append(StepAudit(i, trace.time(i), el, diss, work, res, lo, up, margin, gs_tolerance(el),
                               gs_pass, lo >= -tol, up <= tol, abs(res) <= bound))
    certified = not uncert
    eb = all(s.lower_ok and s.upper_ok and s.rate_ok for s in steps)
    return AuditReport(steps, intervals, trace.tau, rate_constant, bound, peak, certified, eb, gs_ok, uncert)


@dataclass
class ConditionVerdict:
    name: str
    passed: bool
    worst_step: int | None
    worst_value: float
    note: str = ""


@dataclass
class DESVerdict:
    conditions: dict
    certified: bool

    @property
    def passed(self):
        return all(c.passed for c in self.conditions.values())

    def summary(self):
        out = []
        for c in self.conditions.values():
            where = "" if c.worst_step is None else f" worst at step {c.worst_step}"
            out.append(f"{c.name:>4}: {'pass' if c.passed else 'FAIL'} ({c.worst_value:.3e}{where}) {c.note}".rstrip())
        out.append(f"certified: {self.certified}")
        return "\n".join(out)


def _worst(values, bad, absolute=False):
    """(first offending index or argmax, value) for a per-step list."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return None, 0.0
    idx = np.flatnonzero(bad)
    k = int(idx[0]) if idx.size else int(np.nanargmax(np.abs(values) if absolute else values))
    return k, float(values[k])


def des_verdict(trace, audit, fixed_point=True):
    """Checklist over the trace: boundary data, initial datum, irreversibility,
    set reconstruction, bounds, fixed point, stability and energy balance."""
    g = trace.grid
    M = trace.bound
    tol = field_tolerance(M)
    n = len(trace.fields)
    conds = {}

    co = []
    for i in range(n):
        u = trace.fields[i]
        w = trace.drive.at(trace.time(i))
        err = float(np.max(np.abs(u[g.gamma] - w[g.gamma]))) if np.all(np.isfinite(u)) else math.inf
        co.append(err)
    k, v = _worst(co, np.asarray(co) > tol)
    conds["CO"] = ConditionVerdict("CO", all(c <= tol for c in co), k, v, "boundary data on Gamma")

    h0 = solve_dirichlet(g, trace.a0, trace.drive.at(trace.time(0)), admissible=False).field
    d0 = float(np.max(np.abs(trace.fields[0] - h0)))
    conds["ID"] = ConditionVerdict("ID", d0 <= 10 * tol, 0, d0, "initial field is the Dirichlet solution")

    ir = [0.0] + [float(np.count_nonzero(trace.sets[i - 1].indicator & ~trace.sets[i].indicator))
                  for i in range(1, n)]
    k, v = _worst(ir, np.asarray(ir) > 0)
    conds["IR"] = ConditionVerdict("IR", not any(ir), k if any(ir) else None, v, "nodes lost from the set")

    union = trace.a0.indicator.copy()
    au = []
    for i in range(n):
        thr = positivity_threshold(trace.drive.max_at(trace.time(i)))
        union = union | (trace.fields[i] > thr)
        au.append(float(np.count_nonzero(union != trace.sets[i].indicator)))
    k, v = _worst(au, np.asarray(au) > 0)
    conds["AU"] = ConditionVerdict("AU", not any(au), k if any(au) else None, v,
                                   "set equals the union of positivity sets")

    lo = [float(-np.min(u)) for u in trace.fields]
    hi = [float(np.max(u) - M) for u in trace.fields]
    viol = [max(a, b) for a, b in zip(lo, hi)]
    k, v = _worst(viol, np.asarray(viol) > 1e-8)
    conds["BD"] = ConditionVerdict("BD", all(x <= 1e-8 for x in viol), k, v, "0 <= u <= M")

    if fixed_point:
        fp = []
        for i in range(n):
            h = solve_dirichlet(g, trace.sets[i], trace.drive.at(trace.time(i)), admissible=False).field
            fp.append(float(np.max(np.abs(trace.fields[i] - h))))
        k, v = _worst(fp, np.asarray(fp) > 10 * tol)
        conds["FP"] = ConditionVerdict("FP", all(x <= 10 * tol for x in fp), k, v,
                                       "field is the Dirichlet solution on its set")

    gs = [s.gs_margin for s in audit.steps]
    bad = [not s.gs_passed for s in audit.steps]
    known = [m for m in gs if not math.isnan(m)]
    k = next((i for i, b in enumerate(bad) if b), None)
    worst = min(known) if known else math.nan
    conds["GS"] = ConditionVerdict("GS", audit.gs_passed, k, worst if k is None else gs[k],
                                   f"{len(known)} of {len(gs)} steps checked")

    eb_bad = [not (s.lower_ok and s.upper_ok and s.rate_ok) for s in audit.steps]
    res = [s.residual for s in audit.steps]
    k, v = _worst(res, eb_bad, absolute=True)
    note = "" if audit.certified else "not certified: some power data inadmissible"
    conds["EB"] = ConditionVerdict("EB", audit.eb_passed, k, v, note)
    return DESVerdict(conds, audit.certified)
