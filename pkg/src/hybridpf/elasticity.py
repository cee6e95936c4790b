"""
Quasistatic linear elasticity with an order-parameter dependent eigenstrain.

Discretisation: nodal displacements on the structured grid, linear (1D) or
bilinear (2D) interpolation, one midpoint quadrature point per 1D cell and
2x2 Gauss points per 2D cell.  The stiffness ``K = B^T (w D) B`` is
symmetric positive definite once the Dirichlet boundary is removed.  The
order parameter enters at the quadrature points through the same
interpolation, so the nodal stress obtained by lumped projection gives the
exact variational derivative ``dW/dS = -eps_bar : T`` of the discrete
stored energy (divided by the trapezoidal node weight).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SingularSystem, SolverDiverged
from .grid import Grid, LevelSet, interpolate
from .materials import MaterialSet, contraction_weights

log = logging.getLogger(__name__)

BoundaryDisplacement = Callable[[float, np.ndarray], np.ndarray]

CG_RTOL = 1e-10


@dataclass
class ElasticSolution:
    u: np.ndarray          # (dim, *shape)
    T: np.ndarray          # (ncomp, *shape), tensor components
    residual_norm: float
    iterations: int
    stored_energy: float = 0.0
    load_potential: float = 0.0


def affine_displacement(matrix) -> BoundaryDisplacement:
    """Boundary data ``U(x) = A x`` (time independent)."""
    A = np.atleast_2d(np.asarray(matrix, dtype=float))

    def U(t, points):
        return points @ A.T

    return U


def bar_displacement(U1: float, length: float = 1.0, origin: float = 0.0) -> BoundaryDisplacement:
    """1D data ``u(origin) = 0``, ``u(origin + length) = U1``."""

    def U(t, points):
        return U1 * (points - origin) / length

    return U


class _Operators:
    """Sparse operators of the discretisation, built once per problem."""

    def __init__(self, grid: Grid, material: MaterialSet):
        self.grid = grid
        self.material = material
        if grid.dim == 1:
            self._build_1d()
        else:
            self._build_2d()
        self.ncomp = material.tensor.ncomp
        nq = self.w.size
        Dv = material.tensor.voigt
        self.Dblk = sp.bmat([[Dv[a, b] * sp.identity(nq) for b in range(self.ncomp)] for a in range(self.ncomp)], format="csr")
        self.Dw = sp.bmat([[Dv[a, b] * sp.diags(self.w) for b in range(self.ncomp)] for a in range(self.ncomp)], format="csr")
        eb = material.eps_bar * contraction_weights(grid.dim)  # Voigt eigenstrain
        self.E = sp.vstack([eb[a] * self.Nq for a in range(self.ncomp)], format="csr")
        self.K = (self.B.T @ self.Dw @ self.B).tocsr()
        self.G = (self.B.T @ self.Dw @ self.E).tocsr()
        self.mass = np.asarray(self.Nq.T @ self.w).ravel()

        bmask = grid.boundary_mask().ravel()
        N = grid.n_nodes
        dofs_b = np.concatenate([np.nonzero(bmask)[0] + a * N for a in range(grid.dim)])
        dofs_f = np.concatenate([np.nonzero(~bmask)[0] + a * N for a in range(grid.dim)])
        self.dofs_b, self.dofs_f = dofs_b, dofs_f
        self.Kff = self.K[dofs_f][:, dofs_f].tocsr()
        self.Kfb = self.K[dofs_f][:, dofs_b].tocsr()
        self.diag_inv = 1.0 / self.Kff.diagonal()
        self.boundary_points = np.column_stack([m.ravel()[bmask] for m in grid.mesh()])

    def _build_1d(self):
        n = self.grid.shape[0]
        h = self.grid.h[0]
        ne = n - 1
        rows = np.repeat(np.arange(ne), 2)
        cols = np.column_stack([np.arange(ne), np.arange(1, n)]).ravel()
        self.Nq = sp.csr_matrix((np.full(2 * ne, 0.5), (rows, cols)), shape=(ne, n))
        self.B = sp.csr_matrix((np.tile([-1.0 / h, 1.0 / h], ne), (rows, cols)), shape=(ne, n))
        self.w = np.full(ne, h)

    def _build_2d(self):
        nx, ny = self.grid.shape
        hx, hy = self.grid.h
        N = nx * ny
        ex, ey = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
        ex, ey = ex.ravel(), ey.ravel()
        ne = ex.size
        corners = [(0, 0), (1, 0), (1, 1), (0, 1)]
        node = np.stack([(ex + di) * ny + (ey + dj) for di, dj in corners], axis=1)  # (ne, 4)
        g = 1.0 / np.sqrt(3.0)
        gauss = [(-g, -g), (g, -g), (g, g), (-g, g)]
        xi_a = np.array([-1.0, 1.0, 1.0, -1.0])
        eta_a = np.array([-1.0, -1.0, 1.0, 1.0])

        nq = 4 * ne
        rows_n, cols_n, vals_n = [], [], []
        rows_b, cols_b, vals_b = [], [], []
        for q, (xi, eta) in enumerate(gauss):
            qidx = np.arange(ne) * 4 + q
            Na = 0.25 * (1 + xi * xi_a) * (1 + eta * eta_a)
            dNx = 0.25 * xi_a * (1 + eta * eta_a) * (2.0 / hx)
            dNy = 0.25 * eta_a * (1 + xi * xi_a) * (2.0 / hy)
            for a in range(4):
                rows_n.append(qidx); cols_n.append(node[:, a]); vals_n.append(np.full(ne, Na[a]))
                # exx <- ux ; eyy <- uy ; gxy <- ux_y + uy_x
                rows_b += [qidx, nq + qidx, 2 * nq + qidx, 2 * nq + qidx]
                cols_b += [node[:, a], N + node[:, a], node[:, a], N + node[:, a]]
                vals_b += [np.full(ne, dNx[a]), np.full(ne, dNy[a]), np.full(ne, dNy[a]), np.full(ne, dNx[a])]
        cat = np.concatenate
        self.Nq = sp.csr_matrix((cat(vals_n), (cat(rows_n), cat(cols_n))), shape=(nq, N))
        self.B = sp.csr_matrix((cat(vals_b), (cat(rows_b), cat(cols_b))), shape=(3 * nq, 2 * N))
        self.w = np.full(nq, 0.25 * hx * hy)

    @cached_property
    def banded_ff(self) -> np.ndarray:
        """Tridiagonal ``K_ff`` in LAPACK banded layout (1D only)."""
        d = self.Kff.diagonal()
        off = self.Kff.diagonal(1)
        ab = np.zeros((3, d.size))
        ab[0, 1:] = off
        ab[1] = d
        ab[2, :-1] = off
        return ab

    @cached_property
    def lu(self):
        return spla.splu(self.Kff.tocsc())


@dataclass
class ElasticProblem:
    """Data of the elasticity system: body force and boundary displacement.

    ``body_force`` is ``None``, a constant vector of length ``dim``, or a
    nodal array ``(dim, *shape)``.  ``boundary_displacement`` maps
    ``(t, points[n, dim])`` to ``(n, dim)``; ``None`` means ``U = 0``.
    """

    grid: Grid
    material: MaterialSet
    body_force: np.ndarray | None = None
    boundary_displacement: BoundaryDisplacement | None = None
    method: str = "auto"
    _ops: _Operators | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.material.dim != self.grid.dim:
            raise ValueError("material and grid dimensions differ")
        if self.body_force is not None:
            b = np.asarray(self.body_force, dtype=float)
            if b.ndim == 1:
                b = b.reshape((-1,) + (1,) * self.grid.dim) * np.ones((1,) + self.grid.shape)
            if b.shape != (self.grid.dim,) + self.grid.shape or not np.all(np.isfinite(b)):
                raise ValueError("body force must be finite with shape (dim, *grid.shape)")
            self.body_force = b

    @property
    def ops(self) -> _Operators:
        if self._ops is None:
            self._ops = _Operators(self.grid, self.material)
        return self._ops

    @property
    def is_trivial(self) -> bool:
        """No eigenstrain, load or boundary motion: the solution is zero."""
        return (not self.material.has_eigenstrain and self.body_force is None
                and self.boundary_displacement is None)

    def boundary_values(self, t: float) -> np.ndarray:
        ops = self.ops
        if self.boundary_displacement is None:
            return np.zeros(ops.dofs_b.size)
        vals = np.asarray(self.boundary_displacement(t, ops.boundary_points), dtype=float)
        vals = vals.reshape(len(ops.boundary_points), -1)
        if vals.shape[1] != self.grid.dim or not np.all(np.isfinite(vals)):
            raise SingularSystem("boundary displacement missing or non-finite on part of the boundary")
        return vals.T.ravel()


def _zero_solution(problem: ElasticProblem) -> ElasticSolution:
    g = problem.grid
    return ElasticSolution(np.zeros((g.dim,) + g.shape), np.zeros((problem.material.tensor.ncomp,) + g.shape), 0.0, 0)


def solve_quasistatic(problem: ElasticProblem, S: np.ndarray, t: float = 0.0,
                      guess: np.ndarray | None = None, method: str | None = None) -> ElasticSolution:
    """Solve ``-div T = b``, ``T = D(eps(u) - eps_bar S)``, ``u = U`` on the boundary.

    ``method`` is ``"direct"`` (banded solve in 1D, sparse LU in 2D),
    ``"cg"`` (Jacobi-preconditioned conjugate gradients, relative tolerance
    1e-10, at most ``20 N`` iterations, warm-started from ``guess``) or
    ``"auto"`` (direct in 1D, cg in 2D).

    Raises:
        SolverDiverged: CG did not reach the tolerance.
        SingularSystem: boundary data unusable.
    """
    grid = problem.grid
    S = grid.check_scalar(S)
    if not np.all(np.isfinite(S)):
        raise ValueError("order parameter is not finite")
    if problem.is_trivial:
        return _zero_solution(problem)

    ops = problem.ops
    N = grid.n_nodes
    method = method or problem.method
    if method == "auto":
        method = "direct" if grid.dim == 1 else "cg"

    u = np.zeros(grid.dim * N)
    u_b = problem.boundary_values(t)
    u[ops.dofs_b] = u_b
    rhs = ops.G @ S.ravel()
    if problem.body_force is not None:
        rhs = rhs + np.tile(ops.mass, grid.dim) * problem.body_force.reshape(grid.dim, -1).ravel()
    rhs_f = rhs[ops.dofs_f] - ops.Kfb @ u_b
    rhs_norm = float(np.linalg.norm(rhs_f))

    iterations = 0
    if rhs_norm == 0.0:
        u_f = np.zeros(ops.dofs_f.size)
    elif method == "direct":
        if grid.dim == 1:
            u_f = scipy.linalg.solve_banded((1, 1), ops.banded_ff, rhs_f)
        else:
            u_f = ops.lu.solve(rhs_f)
    elif method == "cg":
        history: list[float] = []

        def record(xk):
            history.append(float(np.linalg.norm(rhs_f - ops.Kff @ xk)) / rhs_norm)

        x0 = None if guess is None else np.asarray(guess, dtype=float).reshape(-1)[ops.dofs_f]
        M = spla.LinearOperator(ops.Kff.shape, matvec=lambda r: ops.diag_inv * r)
        cap = 20 * N
        u_f, info = spla.cg(ops.Kff, rhs_f, x0=x0, rtol=CG_RTOL, atol=0.0, maxiter=cap, M=M, callback=record)
        iterations = len(history)
        if info != 0:
            raise SolverDiverged(f"CG stopped after {iterations} iterations (cap {cap})", history)
    else:
        raise ValueError(f"unknown method {method!r}")

    u[ops.dofs_f] = u_f
    res = float(np.linalg.norm(rhs_f - ops.Kff @ u_f)) / rhs_norm if rhs_norm else 0.0
    return _finish(problem, S, u, res, iterations)


def _finish(problem: ElasticProblem, S: np.ndarray, u: np.ndarray, res: float, iterations: int) -> ElasticSolution:
    ops = problem.ops
    grid = problem.grid
    nq = ops.w.size
    elastic = ops.B @ u - ops.E @ S.ravel()          # Voigt strain minus eigenstrain
    Tq = (ops.Dblk @ elastic).reshape(ops.ncomp, nq)  # tensor stress components
    T = (ops.Nq.T @ (ops.w[None, :] * Tq).T).T / ops.mass[None, :]
    stored = 0.5 * float(elastic @ (ops.Dw @ elastic))
    load = 0.0
    if problem.body_force is not None:
        load = -float(np.sum(np.tile(ops.mass, grid.dim) * problem.body_force.reshape(grid.dim, -1).ravel() * u))
    return ElasticSolution(
        u.reshape((grid.dim,) + grid.shape),
        T.reshape((ops.ncomp,) + grid.shape),
        res, iterations, stored, load,
    )


def elastic_energy(problem: ElasticProblem, u: np.ndarray, S: np.ndarray) -> float:
    """Discrete ``int W dx - int b.u dx`` for an arbitrary displacement field."""
    if problem.is_trivial and not np.any(u):
        return 0.0
    ops = problem.ops
    elastic = ops.B @ np.asarray(u).ravel() - ops.E @ np.asarray(S).ravel()
    e = 0.5 * float(elastic @ (ops.Dw @ elastic))
    if problem.body_force is not None:
        e -= float(np.sum(np.tile(ops.mass, problem.grid.dim) * problem.body_force.reshape(problem.grid.dim, -1).ravel() * np.asarray(u).ravel()))
    return e


def dW_dS_nodal(material: MaterialSet, T: np.ndarray) -> np.ndarray:
    """Nodal ``-eps_bar : T``."""
    w = contraction_weights(material.dim) * material.eps_bar
    return -np.tensordot(w, T, axes=(0, 0))


def mean_interface_stress(grid: Grid, T: np.ndarray, samples: LevelSet, offset: float) -> tuple[np.ndarray, np.ndarray]:
    """Average of the stress probed at ``x +/- offset * n`` for each sample.

    Returns ``(mean, clamped)`` with ``mean`` of shape ``(n, ncomp)`` and a
    boolean flag per sample marking probes that left the domain and were
    clamped to it.
    """
    if offset <= 0:
        raise ValueError("offset must be positive")
    pos = samples.positions
    nrm = samples.normals
    plus = pos + offset * nrm
    minus = pos - offset * nrm
    lo, hi = np.asarray(grid.origin), np.asarray(grid.upper)
    clamped = np.any((plus < lo) | (plus > hi) | (minus < lo) | (minus > hi), axis=1)
    if np.any(clamped):
        log.warning("interface stress probe left the domain at %d samples; clamped", int(clamped.sum()))
    Tp = interpolate(grid, T, plus)
    Tm = interpolate(grid, T, minus)
    mean = 0.5 * (Tp + Tm)
    return mean.reshape(len(pos), -1), clamped
