"""Constrained Dirichlet minimiser: harmonic on a set, given data on Gamma, zero outside."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import linalg as spla

from .errors import EmptyAdmissibleClass, SolverDivergence

try:
    import pyamg
except ImportError:  # pragma: no cover
    pyamg = None

RTOL = 1e-10
# below this many unknowns the preconditioner is an exact sparse factorisation
EXACT_PRECOND_LIMIT = 60000


@dataclass
class DirichletSolution:
    field: np.ndarray
    energy: float
    residual_el: float
    iterations: int


def positivity_threshold(scale):
    return 1e-8 * max(1.0, float(scale))


def el_tolerance(grid, scale):
    """Admissible Euler-Lagrange residual for data of size ``scale``."""
    return 1e-7 * max(1.0, float(scale)) / grid.spacing**2


def boundary_data(grid, eta):
    """Full-grid array carrying ``eta`` on Gamma and zero elsewhere."""
    out = np.zeros(grid.shape)
    if np.ndim(eta) == 0:
        out[grid.gamma] = float(eta)
    else:
        eta = np.asarray(eta, dtype=float)
        if eta.shape != grid.shape:
            raise ValueError("boundary data must be a scalar or a full-grid array")
        out[grid.gamma] = eta[grid.gamma]
    return out


def dirichlet_energy(field, grid):
    i, j = grid.edges
    v = np.asarray(field, dtype=float).ravel()
    d = v[i] - v[j]
    return 0.5 * grid.spacing ** (grid.dim - 2) * float(d @ d)


def energy_product(f, g, grid):
    """Bilinear form of the Dirichlet energy: the discrete integral of grad f . grad g."""
    i, j = grid.edges
    f = np.asarray(f, dtype=float).ravel()
    g = np.asarray(g, dtype=float).ravel()
    return grid.spacing ** (grid.dim - 2) * float((f[i] - f[j]) @ (g[i] - g[j]))


def discrete_laplacian(field, grid):
    """5-point (3-point in 1D) Laplacian with natural Neumann closure at the edge."""
    v = np.asarray(field, dtype=float).ravel()
    return -(grid.stiffness @ v).reshape(grid.shape) / grid.cell_volume


def free_nodes(a):
    g = a.grid
    return a.indicator & g.active & ~g.gamma


def el_residual(field, a):
    free = free_nodes(a)
    if not free.any():
        return 0.0
    return float(np.max(np.abs(discrete_laplacian(field, a.grid)[free])))


def check_admissible(grid, a, data, thr):
    """Every Gamma node carrying data must be in ``a`` or touch it."""
    live = grid.gamma & (np.abs(data) > thr)
    reach = grid.dilate(a.indicator, 1)
    bad = live & ~reach
    if bad.any():
        n = int(np.flatnonzero(bad.ravel())[0])
        raise EmptyAdmissibleClass(
            f"{int(bad.sum())} Gamma node(s) with nonzero data are not adjacent to the set (first: node {n})"
        )


def _preconditioner(A, kind):
    n = A.shape[0]
    if kind == "auto":
        kind = "exact" if n <= EXACT_PRECOND_LIMIT or pyamg is None else "amg"
    if kind == "exact":
        lu = spla.splu(A.tocsc())
        return spla.LinearOperator(A.shape, matvec=lu.solve, dtype=float)
    if kind == "amg":
        if pyamg is None:
            raise ValueError("amg preconditioner requested but pyamg is not installed")
        ml = pyamg.smoothed_aggregation_solver(A.tocsr())
        return ml.aspreconditioner(cycle="V")
    if kind == "jacobi":
        d = A.diagonal()
        return spla.LinearOperator(A.shape, matvec=lambda x: x / d, dtype=float)
    if kind == "none":
        return None
    raise ValueError(f"unknown preconditioner {kind!r}")


def spd_solve(A, b, x0=None, rtol=RTOL, precond="auto"):
    """Preconditioned CG with the iteration cap 50*sqrt(n); returns (x, iterations)."""
    n = b.size
    if n == 0:
        return b.copy(), 0
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), 0
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    if np.linalg.norm(b - A @ x) <= rtol * bnorm:
        return x, 0
    M = _preconditioner(A, precond)
    maxiter = int(50 * np.sqrt(n)) + 1
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.cg(A, b, x0=x, rtol=rtol, atol=0.0, maxiter=maxiter, M=M, callback=cb)
    res = float(np.linalg.norm(b - A @ x))
    if res > 10 * rtol * bnorm:
        raise SolverDivergence(f"CG stopped after {count[0]} iterations at relative residual {res / bnorm:.3e}")
    return x, count[0]


def solve_dirichlet(grid, a, eta, *, x0=None, rtol=RTOL, precond="auto", admissible=True):
    """Minimise the Dirichlet energy over fields equal to ``eta`` on Gamma and zero outside ``a``.

    Gamma nodes always take the data, whether or not they belong to ``a``;
    with ``admissible`` set, a Gamma node with nonzero data that neither
    belongs to ``a`` nor touches it raises ``EmptyAdmissibleClass``.
    """
    data = boundary_data(grid, eta)
    scale = float(np.max(np.abs(data))) if data.size else 0.0
    if admissible:
        check_admissible(grid, a, data, positivity_threshold(scale))
    free = free_nodes(a).ravel()
    field = data.ravel().copy()
    fidx = np.flatnonzero(free)
    iters = 0
    if fidx.size:
        K = grid.stiffness
        Kf = K[fidx]
        A = Kf[:, fidx]
        b = -(Kf @ field)
        guess = None if x0 is None else np.asarray(x0, dtype=float).ravel()[fidx]
        sol, iters = spd_solve(A, b, guess, rtol, precond)
        field[fidx] = sol
    field = field.reshape(grid.shape)
    return DirichletSolution(field, dirichlet_energy(field, grid), el_residual(field, a), iters)


def harmonic_extension(drive, a0, **kw):
    """Drive with extension fields h_{a0, w_k}: equal to w_k on Gamma, zero outside a0."""
    from .grid import BoundaryDrive

    ext = np.stack([solve_dirichlet(drive.grid, a0, drive.at(t), **kw).field for t in drive.times])
    return BoundaryDrive(drive.grid, drive.times, drive.values, ext)
