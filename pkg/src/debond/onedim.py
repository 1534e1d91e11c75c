"""Closed-form one-dimensional fronts and exact checks of their stability and energy balance.

On (0, L) with the drive at x = 0 and a debonded run (0, l), the elastic
state is linear: w (1 - x/l) up to the front, zero beyond. Everything here
is evaluated in closed form, so it can serve as an oracle for the grid
solver without sharing any of its error sources.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DriveError, UnsupportedDriveClass
from .grid import BoundaryDrive, ConstantProfile, InverseSquareProfile


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Scalar drive sampled at increasing times, linear in between."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise DriveError("need matching 1-D arrays with at least two samples")
        if np.any(np.diff(t) <= 0):
            raise DriveError("sample times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    @property
    def T(self):
        return float(self.times[-1])

    def envelope(self):
        """Running maximum, with the crossing points inserted as knots."""
        ts, ws = [self.times[0]], [self.values[0]]
        m = self.values[0]
        for t0, t1, w0, w1 in zip(self.times[:-1], self.times[1:], self.values[:-1], self.values[1:]):
            if w1 > m and w0 < m:
                tc = t0 + (m - w0) / (w1 - w0) * (t1 - t0)
                if tc > ts[-1]:
                    ts.append(tc)
                    ws.append(m)
            m = max(m, w1)
            ts.append(t1)
            ws.append(m)
        return PiecewiseLinear(np.array(ts), np.array(ws))

    def crossings(self, level):
        """Times where the drive first reaches ``level`` on each rising segment."""
        out = []
        for t0, t1, w0, w1 in zip(self.times[:-1], self.times[1:], self.values[:-1], self.values[1:]):
            if w0 < level <= w1:
                out.append(t0 + (level - w0) / (w1 - w0) * (t1 - t0))
        return out

    def first_reach(self, level):
        if self.values[0] >= level:
            return float(self.times[0])
        c = self.crossings(level)
        return c[0] if c else None

    def to_boundary(self, grid):
        return BoundaryDrive.uniform(grid, self.times, self.values)


def linear_drive(T, rate=1.0, start=0.0):
    return PiecewiseLinear(np.array([0.0, T]), np.array([start, start + rate * T]))


@dataclass(eq=False)
class FrontTrajectory:
    """Front position made of affine pieces l = a + b t on [knots[k], knots[k+1]).

    The front is right-continuous; a jump sits at a knot where consecutive
    pieces disagree.
    """

    knots: np.ndarray
    intercepts: np.ndarray
    slopes: np.ndarray
    drive: PiecewiseLinear
    kappa: object
    ell0: float
    L: float

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        self.intercepts = np.asarray(self.intercepts, dtype=float)
        self.slopes = np.asarray(self.slopes, dtype=float)
        if self.knots.size != self.intercepts.size + 1 or self.slopes.size != self.intercepts.size:
            raise ValueError("need one more knot than pieces")

    @property
    def times(self):
        return self.knots

    def _piece(self, t, left=False):
        k = int(np.searchsorted(self.knots, t, side="left" if left else "right")) - 1
        return min(max(k, 0), self.intercepts.size - 1)

    def front(self, t):
        k = self._piece(t)
        return float(self.intercepts[k] + self.slopes[k] * t)

    def front_left(self, t):
        """Left limit of the front at ``t`` (equal to the value away from jumps)."""
        if t <= self.knots[0]:
            return self.front(t)
        k = self._piece(t, left=True)
        return float(self.intercepts[k] + self.slopes[k] * t)

    def sample(self, times):
        return np.array([self.front(t) for t in np.atleast_1d(times)])

    @property
    def jumps(self):
        out = []
        for k in range(1, self.intercepts.size):
            t = self.knots[k]
            before = self.intercepts[k - 1] + self.slopes[k - 1] * t
            after = self.intercepts[k] + self.slopes[k] * t
            if abs(after - before) > 1e-14 * max(1.0, self.L):
                out.append((float(t), float(before), float(after)))
        return out

    def deviation(self, times, fronts):
        """Distance of each simulated front to the trajectory's graph at the same time.

        At a jump time the graph is the whole vertical segment between the
        left limit and the value.
        """
        out = []
        for t, f in zip(times, fronts):
            lo, hi = sorted((self.front_left(t), self.front(t)))
            out.append(max(lo - f, f - hi, 0.0))
        return np.array(out)


def front_field(ell, w, x, L=None):
    """Elastic displacement for a debonded run (0, ell) and drive value w."""
    x = np.asarray(x, dtype=float)
    if ell <= 0:
        return np.zeros_like(x)
    if L is not None and ell >= L:
        return np.full_like(x, w)
    return w * np.clip(1.0 - x / ell, 0.0, None)


def elastic(ell, w, L):
    if ell <= 0 or ell >= L:
        return 0.0
    return 0.5 * w * w / ell


@dataclass
class GSReport:
    worst_margin: float
    worst_rho: float
    passed: bool
    tol: float


def check_gs_ell(ell, w, kappa, L, n=1000):
    """Worst stability margin of a front ``ell`` against all larger fronts and full debonding."""
    if ell >= L:
        return GSReport(math.inf, L, True, 0.0)
    if ell <= 0:
        ok = w == 0
        return GSReport(0.0 if ok else -math.inf, 0.0, ok, 0.0)
    e = 0.5 * w * w / ell
    tol = 1e-12 * max(1.0, e)
    rho = np.linspace(ell, L, n + 2)[1:-1]
    extra = [b for b in kappa.breakpoints if ell < b < L]
    rho = np.unique(np.concatenate([rho, extra]))
    m = np.array([0.5 * w * w / r + kappa.integral(ell, r) - e for r in rho])
    full = kappa.integral(ell, L) - e
    k = int(np.argmin(m)) if m.size else 0
    worst, where = (m[k], rho[k]) if m.size and m[k] < full else (full, L)
    return GSReport(float(worst), float(where), bool(worst >= -tol), tol)


def _work_piece(p, q, alpha, beta, a, b):
    """Exact integral over [p, q] of wdot * w / l with w = alpha + beta t, l = a + b t.

    Written as (w_p D g(x) + beta D^2 k(x)) / l_p with D = q - p and
    x = b D / l_p, where g(x) = log(1 + x) / x and k(x) = (1 - g(x)) / x;
    both are evaluated by series near x = 0, so nearly flat fronts lose
    no digits.
    """
    if beta == 0 or q <= p:
        return 0.0
    D = q - p
    wp = alpha + beta * p
    lp = a + b * p
    if lp <= 0:
        # front growing from zero in proportion to the drive
        if wp != 0:
            return math.inf
        return beta * beta * D / b
    x = b * D / lp
    if abs(x) < 1e-2:
        g = sum((-x) ** n / (n + 1) for n in range(12))
        k = sum((-1) ** n * x**n / (n + 2) for n in range(12))
    else:
        g = math.log1p(x) / x
        k = (1.0 - g) / x
    return beta * (wp * D * g + beta * D * D * k) / lp


@dataclass
class EBSeries:
    times: np.ndarray
    front: np.ndarray
    elastic: np.ndarray
    dissipated: np.ndarray
    work: np.ndarray
    residual: np.ndarray

    COLUMNS = ("t", "front", "elastic", "dissipated", "work", "residual")

    def rows(self):
        return list(zip(self.times, self.front, self.elastic, self.dissipated, self.work, self.residual))


def check_eb_ell(traj, times=None):
    """Energy residual of a trajectory with every integral in closed form."""
    drive, L = traj.drive, traj.L
    bps = np.unique(np.concatenate([traj.knots, drive.times[(drive.times >= traj.knots[0]) & (drive.times <= traj.knots[-1])]]))
    ts = bps if times is None else np.unique(np.concatenate([np.asarray(times, float), bps]))
    ts = ts[(ts >= traj.knots[0]) & (ts <= traj.knots[-1])]
    grid = np.unique(np.concatenate([bps, ts]))
    cum = [0.0]
    for p, q in zip(grid[:-1], grid[1:]):
        mid = 0.5 * (p + q)
        k = traj._piece(mid)
        a, b = traj.intercepts[k], traj.slopes[k]
        lm = a + b * mid
        seg = min(int(np.searchsorted(drive.times, mid)) - 1, drive.times.size - 2)
        seg = max(seg, 0)
        t0, t1 = drive.times[seg], drive.times[seg + 1]
        beta = (drive.values[seg + 1] - drive.values[seg]) / (t1 - t0)
        alpha = drive.values[seg] - beta * t0
        if lm <= 0 or lm >= L:
            inc = 0.0
        else:
            inc = _work_piece(p, q, alpha, beta, a, b)
        cum.append(cum[-1] + inc)
    cum = np.array(cum)
    work = np.interp(ts, grid, cum)
    fr = np.array([traj.front(t) for t in ts])
    el = np.array([elastic(f, float(drive(t)), L) for f, t in zip(fr, ts)])
    diss = np.array([traj.kappa.integral(traj.ell0, f) for f in fr])
    e0 = elastic(traj.ell0, float(drive(traj.knots[0])), L)
    return EBSeries(ts, fr, el, diss, work, el + diss - e0 - work)


def constant_kappa_front(drive, kappa, ell0, L):
    """Closed-form front for constant toughness.

    Below half the length the front follows the running maximum of the
    drive divided by sqrt(2 kappa) and jumps to L when that reaches L/2.
    From half the length on it stays put until the drive reaches
    sqrt(2 kappa ell0 (L - ell0)) and then jumps to L.
    """
    if not kappa > 0:
        raise ValueError("toughness must be positive")
    if not 0 <= ell0 < L:
        raise ValueError("need 0 <= ell0 < L")
    if np.any(drive.values < 0):
        raise UnsupportedDriveClass("drive must be nonnegative")
    s = math.sqrt(2.0 * kappa)
    below = ell0 < 0.5 * L
    wj = s * 0.5 * L if below else math.sqrt(2.0 * kappa * ell0 * (L - ell0))
    w_start = float(drive.values[0])
    if (below and w_start > s * ell0 * (1 + 1e-12)) or (not below and w_start >= wj):
        raise UnsupportedDriveClass("initial state is not stable for this drive")
    env = drive.envelope()
    t_jump = env.first_reach(wj)
    knots = list(env.times)
    if below and ell0 * s > env.values[0]:
        c = env.first_reach(ell0 * s)
        if c is not None:
            knots.append(c)
    if t_jump is not None:
        knots = [t for t in knots if t < t_jump] + [t_jump]
    knots = np.unique(np.array(knots + [drive.T]))
    knots = knots[knots <= drive.T]
    ints, slopes = [], []
    for p, q in zip(knots[:-1], knots[1:]):
        mid = 0.5 * (p + q)
        if t_jump is not None and p >= t_jump:
            ints.append(L)
            slopes.append(0.0)
            continue
        seg = max(min(int(np.searchsorted(env.times, mid)) - 1, env.times.size - 2), 0)
        t0, t1 = env.times[seg], env.times[seg + 1]
        beta = (env.values[seg + 1] - env.values[seg]) / (t1 - t0)
        alpha = env.values[seg] - beta * t0
        if below and (alpha + beta * mid) / s > ell0:
            ints.append(alpha / s)
            slopes.append(beta / s)
        else:
            ints.append(ell0)
            slopes.append(0.0)
    if t_jump is not None and t_jump >= drive.T:
        # the jump lands on the final time: a zero-length last piece
        knots = np.append(knots, drive.T)
        ints.append(L)
        slopes.append(0.0)
    return FrontTrajectory(knots, np.array(ints), np.array(slopes), drive, ConstantProfile(kappa), ell0, L)


def build_spiky_drive(times, peaks):
    """Tent drive: peak ``peaks[j]`` halfway through [times[j+1], times[j]].

    ``times`` decreases from T; if it has as many entries as ``peaks`` the
    last tent starts at 0.
    """
    t = np.asarray(times, dtype=float)
    a = np.asarray(peaks, dtype=float)
    if t.size == a.size:
        t = np.append(t, 0.0)
    if t.size != a.size + 1:
        raise DriveError("need one more time than peaks (or equally many, ending at 0)")
    if np.any(np.diff(t) >= 0) or t[-1] < 0:
        raise DriveError("times must be strictly decreasing and nonnegative")
    if np.any(a <= 0) or np.any(np.diff(a) > 0):
        raise DriveError("peaks must be positive and non-increasing")
    ts, ws = [], []
    if t[-1] > 0:
        ts.append(0.0)
        ws.append(0.0)
    for j in range(a.size - 1, -1, -1):
        lo, hi = t[j + 1], t[j]
        if not ts or ts[-1] < lo:
            ts.append(lo)
            ws.append(0.0)
        ts += [0.5 * (lo + hi), hi]
        ws += [a[j], 0.0]
    return PiecewiseLinear(np.array(ts), np.array(ws))


def envelope_power_integral(drive):
    """Exact integral of |wdot| / sqrt(running max) over the drive's span."""
    env = drive.envelope()
    knots = np.unique(np.concatenate([drive.times, env.times]))
    total = 0.0
    for p, q in zip(knots[:-1], knots[1:]):
        wp, wq = float(drive(p)), float(drive(q))
        mp, mq = float(env(p)), float(env(q))
        if mq > mp:
            total += 2.0 * (math.sqrt(mq) - math.sqrt(mp))
        elif mp > 0:
            total += abs(wq - wp) / math.sqrt(mp)
    return total


def flat_landscape_front(drive, c, cap, ell0, L):
    """Resting front for toughness c / x^2 on [ell0, cap] under the constant drive sqrt(2c).

    Every front in [ell0, cap] has the same total energy here; the resting
    one is returned and ``band`` in the result's notes is the whole
    admissible range.
    """
    w = float(drive.values[0])
    if np.any(drive.values != w):
        raise UnsupportedDriveClass("the flat landscape needs a constant drive")
    if abs(w * w - 2.0 * c) > 1e-12 * max(1.0, w * w):
        raise UnsupportedDriveClass("the flat landscape needs c = w^2 / 2")
    if not 0 < ell0 < cap <= L:
        raise UnsupportedDriveClass("need 0 < ell0 < cap <= L")
    traj = FrontTrajectory(np.array([drive.times[0], drive.T]), np.array([ell0]), np.array([0.0]),
                           drive, InverseSquareProfile(c, cap), ell0, L)
    traj.band = (ell0, cap)
    return traj
