"""Minimisation of the one-phase free-boundary functional and stability audits.

The functional of a field ``v`` relative to a debonded set ``a`` is its
Dirichlet energy plus the toughness-weighted measure of the nodes where
``v`` is positive outside ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np

from .dirichlet import (
    RTOL,
    boundary_data,
    dirichlet_energy,
    positivity_threshold,
    solve_dirichlet,
    spd_solve,
)
from .errors import InnerSolveDivergence, SolverDivergence
from .grid import RegionMask


@dataclass
class SolverSettings:
    levels: int = 12
    band_cells: int = 10
    pattern_iters: int = 30
    polish_shells: int = 3
    polish_rounds: int = 500
    band_moves: int = 100
    rtol: float = RTOL
    precond: str = "auto"
    tie_rtol: float = 1e-12


@dataclass
class ACResult:
    field: np.ndarray
    positivity: RegionMask
    ac_value: float
    converged: bool
    continuation_trace: list
    debonded: RegionMask
    source: str = "dirichlet"
    solves: int = 0
    level_values: list = dfield(default_factory=list)


def gs_tolerance(value):
    return 1e-6 * (1.0 + abs(value))


def ac_value(field, a, kappa, threshold=None):
    """Dirichlet energy plus toughness on the positive nodes outside ``a``."""
    grid = a.grid
    field = np.asarray(field, dtype=float)
    if threshold is None:
        scale = float(field[grid.gamma].max()) if grid.gamma.any() else 0.0
        threshold = positivity_threshold(scale)
    pos = (field > threshold) & ~a.indicator & grid.active
    return dirichlet_energy(field, grid) + float(np.sum(kappa.penalty[pos]))


class _Candidates:
    """Dirichlet solutions on trial sets, with their functional values."""

    def __init__(self, grid, a, kappa, data, thr, st):
        self.grid, self.a, self.data, self.thr, self.st = grid, a, data, thr, st
        self.penalty = kappa.penalty
        self.cache = {}
        self.solves = 0

    def value(self, f):
        pos = (f > self.thr) & ~self.a.indicator
        return dirichlet_energy(f, self.grid) + float(np.sum(self.penalty[pos]))

    def evaluate(self, ind, x0=None):
        ind = ind & self.grid.active
        key = ind.tobytes()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        try:
            sol = solve_dirichlet(
                self.grid, RegionMask(self.grid, ind), self.data,
                x0=x0, rtol=self.st.rtol, precond=self.st.precond, admissible=False,
            )
        except SolverDivergence as exc:
            raise InnerSolveDivergence(str(exc)) from exc
        self.solves += 1
        out = (self.value(sol.field), sol.field)
        self.cache[key] = out
        return out


def _solve_level(A, b, c, eps, v, max_iter, precond, open_start=False):
    """Minimise v.A.v/2 - b.v + sum c*clamp(v/eps, 0, 1) over v >= 0.

    Primal-dual active-set iteration on the three pieces of the clamp
    (zero, ramp, saturated). Returns the best iterate seen and whether the
    piece pattern settled. The zero set can only lose one layer of nodes per
    iteration, so ``open_start`` begins with every node on the ramp and lets
    the zero set form by shrinking instead.
    """
    sink = c / eps

    def pieces(x):
        return np.where(x <= 0, 0, np.where(x < eps, 1, 2))

    piece = np.maximum(pieces(v), 1) if open_start else pieces(v)
    best_v, best_f = v, np.inf
    for _ in range(max_iter):
        free = piece > 0
        vn = np.zeros_like(v)
        if free.any():
            rhs = b[free] - np.where(piece[free] == 1, sink[free], 0.0)
            try:
                vn[free], _ = spd_solve(A[free][:, free], rhs, v[free], RTOL, precond)
            except SolverDivergence as exc:
                raise InnerSolveDivergence(str(exc)) from exc
        vn = np.maximum(vn, 0.0)
        grad = A @ vn - b
        f = 0.5 * vn @ (A @ vn) - b @ vn + float(c @ np.clip(vn / eps, 0.0, 1.0))
        if f < best_f:
            best_v, best_f = vn, f
        new = pieces(vn)
        zero = piece == 0
        new[zero] = np.where(grad[zero] + sink[zero] < 0, 1, 0)
        if np.array_equal(new, piece):
            return vn, True
        piece = new
    return best_v, False


def _band(grid, seed, width):
    d_in = grid.distance_to(seed)
    d_out = grid.distance_to(grid.active & ~seed)
    lim = width * grid.spacing + 1e-9 * grid.spacing
    return grid.active & (d_in <= lim) & (d_out <= lim)


def _continuation(grid, cand, base_field, seed, st, trace, levels_out, best_value):
    """Run the eps-continuation on a band around ``seed``; returns (field, settled, touches_edge)."""
    a_ind = cand.a.indicator
    band = _band(grid, seed, st.band_cells)
    unknown = band & ~grid.gamma
    if not unknown.any():
        return None, True, False
    uidx = np.flatnonzero(unknown.ravel())
    K = grid.stiffness
    Ku = K[uidx]
    A = Ku[:, uidx].tocsr()
    v_full = base_field.ravel().copy()
    v_full[uidx] = 0.0
    b = -(Ku @ v_full)
    c = np.where(a_ind.ravel()[uidx], 0.0, cand.penalty.ravel()[uidx])
    v = base_field.ravel()[uidx].copy()
    eps0 = float(cand.data.max())
    settled = True
    running = best_value
    for k in range(st.levels):
        eps = eps0 * 2.0 ** (-k)
        v, settled = _solve_level(A, b, c, eps, v, st.pattern_iters, st.precond, open_start=(k == 0))
        v_full[uidx] = v
        hard = cand.value(v_full.reshape(grid.shape))
        levels_out.append((eps, hard))
        running = min(running, hard)
        trace.append((eps, running))
    v_full[uidx] = v
    out = v_full.reshape(grid.shape)
    edge = band & grid.dilate(grid.active & ~band, 1) & ~seed
    touches = bool(np.any(edge & (out > cand.thr)))
    return out, settled, touches


def minimize_ac(grid, a, kappa, w_t, *, warm=None, settings=None):
    """Minimise the free-boundary functional relative to ``a`` with data ``w_t`` on Gamma.

    The result is always an exact Dirichlet solution on its own debonded set,
    chosen as the best of: the solution on ``a``, the continuation's rounded
    set, its shell dilations/erosions, the warm start's set and full debonding.
    """
    st = settings or SolverSettings()
    data = boundary_data(grid, w_t)
    gvals = data[grid.gamma]
    if np.any(gvals < 0):
        raise ValueError("boundary data must be nonnegative")
    wmax = float(gvals.max())
    thr = positivity_threshold(wmax)
    cand = _Candidates(grid, a, kappa, data, thr, st)
    a_ind = a.indicator
    x0 = None if warm is None else np.asarray(warm, dtype=float)
    best_J, best_f = cand.evaluate(a_ind, x0)
    source = "dirichlet"
    trace, levels = [], []
    settled = True
    full = grid.active

    def tie(J):
        return st.tie_rtol * max(1.0, abs(J))

    if wmax > thr and not np.array_equal(a_ind, full):
        for _ in range(st.band_moves):
            seed = a_ind | (best_f > thr)
            v, settled, touches = _continuation(grid, cand, best_f, seed, st, trace, levels, best_J)
            if v is None:
                break
            B = a_ind | (v > thr)
            if np.array_equal(B, seed):
                break
            J, f = cand.evaluate(B, v)
            if J > best_J:
                break
            best_J, best_f, source = J, f, "continuation"
            if not touches:
                break

        if warm is not None:
            J, f = cand.evaluate(a_ind | (x0 > thr), x0)
            if J < best_J - tie(best_J):
                best_J, best_f, source = J, f, "warm"

        polished = False
        for _ in range(st.polish_rounds):
            S = a_ind | (best_f > thr)
            trials = [(grid.dilate(S, k), "dilation") for k in range(1, st.polish_shells + 1)]
            shrink = S & ~(grid.boundary_layer(S) & ~a_ind)
            trials.append((shrink, "erosion"))
            scored = []
            for ind, kind in trials:
                if np.array_equal(ind, S):
                    continue
                J, f = cand.evaluate(ind, best_f)
                scored.append((J, kind, f))
            if not scored:
                polished = True
                break
            J, kind, f = min(scored, key=lambda s: s[0])
            if J < best_J - tie(best_J):
                best_J, best_f, source = J, f, kind
            else:
                polished = True
                break
        settled = settled and polished

        guess = np.where(full, wmax, 0.0) if np.ptp(gvals) == 0 else best_f
        J, f = cand.evaluate(full, guess)
        if J < best_J - tie(best_J):
            best_J, best_f, source = J, f, "full"

    pos = grid.mask(best_f > thr)
    return ACResult(
        field=best_f,
        positivity=pos,
        ac_value=best_J,
        converged=settled,
        continuation_trace=trace,
        debonded=a | pos,
        source=source,
        solves=cand.solves,
        level_values=levels,
    )


# -- stability ------------------------------------------------------------


@dataclass
class CompetitorFamily:
    dilations: int = 3
    bumps: int = 8
    bump_radius: float = 2.0
    bump_reach: float = 3.0
    full: bool = True
    retractions: int = 1
    seed: int = 0


@dataclass
class CompetitorMargin:
    ident: int
    kind: str
    margin: float
    growth: bool
    passed: bool


@dataclass
class StabilityReport:
    margins: list
    tol: float
    passed: bool
    worst_margin: float
    worst_kind: str
    coverage: str

    def rows(self):
        return [(m.ident, m.kind, m.margin, m.passed) for m in self.margins]


def _competitor_sets(grid, a_u, fam):
    S = a_u.indicator
    out = []
    for k in range(1, fam.dilations + 1):
        out.append(("dilation", grid.dilate(S, k), True))
    if fam.bumps > 0:
        near = grid.active & ~S & (grid.distance_to(S) <= fam.bump_reach * grid.spacing + 1e-12)
        cands = np.flatnonzero(near.ravel())
        if cands.size:
            rng = np.random.default_rng(fam.seed)
            pick = rng.choice(cands, size=min(fam.bumps, cands.size), replace=False)
            coords = [c.ravel() for c in grid.coords]
            for p in np.sort(pick):
                d2 = sum((c - c[p]) ** 2 for c in coords).reshape(grid.shape)
                ball = d2 <= (fam.bump_radius * grid.spacing) ** 2 + 1e-12
                out.append(("bump", (S | ball) & grid.active, True))
    if fam.full:
        out.append(("full", grid.active.copy(), True))
    shrink = S.copy()
    for _ in range(fam.retractions):
        shrink = shrink & ~(grid.boundary_layer(shrink) & ~grid.gamma)
        out.append(("retraction", shrink.copy(), False))
    return out


def stability_check(field, a_u, kappa, w_t, competitors=None, settings=None):
    """Compare the state against sampled competitor fields.

    Each margin is the competitor's functional value relative to ``a_u``
    minus the Dirichlet energy of ``field``. Only growth competitors decide
    the verdict; retractions are recorded for information.
    """
    fam = competitors or CompetitorFamily()
    st = settings or SolverSettings()
    grid = a_u.grid
    data = boundary_data(grid, w_t)
    thr = positivity_threshold(float(data[grid.gamma].max()))
    base = dirichlet_energy(field, grid)
    tol = gs_tolerance(ac_value(field, a_u, kappa, thr))
    cand = _Candidates(grid, a_u, kappa, data, thr, st)
    margins = []
    for ident, (kind, ind, growth) in enumerate(_competitor_sets(grid, a_u, fam)):
        J, _ = cand.evaluate(ind, field)
        m = J - base
        margins.append(CompetitorMargin(ident, kind, m, growth, (m >= -tol) or not growth))
    grow = [m for m in margins if m.growth]
    worst = min(grow, key=lambda m: m.margin) if grow else None
    cov = (
        f"{fam.dilations} dilations, {sum(m.kind == 'bump' for m in margins)} bumps "
        f"(radius {fam.bump_radius} cells, seed {fam.seed}), full debond={fam.full}, "
        f"{fam.retractions} retractions (informative)"
    )
    return StabilityReport(
        margins=margins,
        tol=tol,
        passed=all(m.passed for m in grow),
        worst_margin=worst.margin if worst else np.inf,
        worst_kind=worst.kind if worst else "",
        coverage=cov,
    )
