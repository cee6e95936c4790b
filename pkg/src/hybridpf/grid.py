"""
Uniform structured grids in one and two space dimensions.

Fields are plain numpy arrays indexed by node (``indexing='ij'`` in 2D).
Vector fields carry the component axis first, e.g. a gradient in 2D has
shape ``(2, nx, ny)``.  Homogeneous Neumann data for the order parameter
is imposed through mirror ghost nodes (``S[-1] = S[1]``), which keeps all
stencils second order and makes the discrete Laplacian the exact
variational derivative of the edge-based gradient energy (see
:func:`gradient_energy`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import EmptyLevelSet

_GRAD_EPS = 1e-14


@dataclass(frozen=True)
class Grid:
    """Node-based uniform grid on ``[origin, origin + extent]``.

    Attributes:
        shape: node count per axis (at least 8 each).
        extent: physical length per axis.
        origin: coordinate of the first node per axis.
    """

    shape: tuple[int, ...]
    extent: tuple[float, ...]
    origin: tuple[float, ...] = field(default=())

    def __post_init__(self):
        shape = tuple(int(n) for n in np.atleast_1d(self.shape))
        extent = tuple(float(e) for e in np.atleast_1d(self.extent))
        origin = tuple(float(o) for o in np.atleast_1d(self.origin)) if len(self.origin) else (0.0,) * len(shape)
        if len(shape) not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        if len(extent) != len(shape) or len(origin) != len(shape):
            raise ValueError("shape, extent and origin must have the same length")
        if min(shape) < 8:
            raise ValueError("need at least 8 nodes per axis")
        if min(extent) <= 0.0:
            raise ValueError("extent must be positive")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def uniform(cls, dim: int, nodes: int, extent: float = 1.0, origin: float = 0.0) -> "Grid":
        return cls((nodes,) * dim, (extent,) * dim, (origin,) * dim)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(e / (n - 1) for e, n in zip(self.extent, self.shape))

    @property
    def h_min(self) -> float:
        return min(self.h)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(o + e for o, e in zip(self.origin, self.extent))

    def coords(self, axis: int = 0) -> np.ndarray:
        return self.origin[axis] + self.h[axis] * np.arange(self.shape[axis])

    def mesh(self) -> tuple[np.ndarray, ...]:
        return np.meshgrid(*(self.coords(a) for a in range(self.dim)), indexing="ij")

    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights (equal to the lumped Q1 mass)."""
        w = np.ones(self.shape)
        for axis, (n, h) in enumerate(zip(self.shape, self.h)):
            w1 = np.full(n, h)
            w1[[0, -1]] *= 0.5
            w = w * w1.reshape([-1 if a == axis else 1 for a in range(self.dim)])
        return w

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(self.weights() * values))

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for axis in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[axis] = 0
            mask[tuple(idx)] = True
            idx[axis] = -1
            mask[tuple(idx)] = True
        return mask

    def contains(self, point: Sequence[float], tol: float = 1e-12) -> bool:
        p = np.asarray(point, dtype=float)
        lo = np.asarray(self.origin) - tol
        hi = np.asarray(self.upper) + tol
        return bool(np.all(p >= lo) and np.all(p <= hi))

    def check_scalar(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != self.shape:
            raise ValueError(f"field shape {values.shape} does not match grid {self.shape}")
        return values


def _mirror(S: np.ndarray) -> np.ndarray:
    return np.pad(S, 1, mode="reflect")


def _interior(P: np.ndarray, axis: int, offset: int) -> np.ndarray:
    """Slice of a mirror-padded array shifted by ``offset`` along ``axis``."""
    idx = [slice(1, -1)] * P.ndim
    idx[axis] = slice(1 + offset, P.shape[axis] - 1 + offset)
    return P[tuple(idx)]


def gradient(grid: Grid, S: np.ndarray) -> np.ndarray:
    """Central-difference gradient with mirror ghosts, shape ``(dim, *grid.shape)``."""
    P = _mirror(grid.check_scalar(S))
    return np.stack([(_interior(P, a, 1) - _interior(P, a, -1)) / (2.0 * grid.h[a]) for a in range(grid.dim)])


def one_sided(grid: Grid, S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Backward and forward differences per axis, each ``(dim, *shape)``."""
    P = _mirror(grid.check_scalar(S))
    back = np.stack([(S - _interior(P, a, -1)) / grid.h[a] for a in range(grid.dim)])
    fwd = np.stack([(_interior(P, a, 1) - S) / grid.h[a] for a in range(grid.dim)])
    return back, fwd


def laplacian(grid: Grid, S: np.ndarray) -> np.ndarray:
    """3-point (1D) / 5-point (2D) Laplacian with Neumann mirror ghosts."""
    P = _mirror(grid.check_scalar(S))
    out = np.zeros_like(S, dtype=float)
    for a in range(grid.dim):
        out += (_interior(P, a, 1) - 2.0 * S + _interior(P, a, -1)) / grid.h[a] ** 2
    return out


def gradient_energy(grid: Grid, S: np.ndarray) -> float:
    """Edge-based discretisation of ``0.5 * int |grad S|^2``.

    Edges on the boundary carry half the transverse weight, so that
    ``-laplacian`` is exactly the derivative of this quantity divided by the
    trapezoidal node weights.
    """
    S = grid.check_scalar(S)
    total = 0.0
    for a in range(grid.dim):
        d = np.diff(S, axis=a) / grid.h[a]
        w = np.full(d.shape, float(np.prod(grid.h)))
        for b in range(grid.dim):
            if b == a:
                continue
            sl = [slice(None)] * grid.dim
            sl[b] = 0
            w[tuple(sl)] *= 0.5
            sl[b] = -1
            w[tuple(sl)] *= 0.5
        total += 0.5 * float(np.sum(w * d * d))
    return total


def grad_norm_godunov(grid: Grid, S: np.ndarray, speed_sign: np.ndarray | float) -> np.ndarray:
    """Godunov upwind approximation of ``|grad S|``.

    ``speed_sign`` is the sign of the normal speed ``s`` in the level-set
    form ``S_t + s |grad S| = 0``.  For ``s > 0`` the stencil keeps
    ``max(D-, 0)`` and ``min(D+, 0)``; for ``s < 0`` the mirrored pair.  Per
    axis the larger squared candidate is taken.
    """
    back, fwd = one_sided(grid, S)
    sign = np.broadcast_to(np.sign(speed_sign), S.shape)
    pos = sign > 0
    total = np.zeros(S.shape)
    for a in range(grid.dim):
        bp = np.maximum(back[a], 0.0) ** 2
        fm = np.minimum(fwd[a], 0.0) ** 2
        bm = np.minimum(back[a], 0.0) ** 2
        fp = np.maximum(fwd[a], 0.0) ** 2
        total += np.where(pos, np.maximum(bp, fm), np.maximum(bm, fp))
    return np.sqrt(total)


def grad_norm_upper(grid: Grid, S: np.ndarray) -> float:
    """Upper bound of any one-sided gradient magnitude (time step control)."""
    back, fwd = one_sided(grid, S)
    m = np.maximum(np.abs(back), np.abs(fwd))
    return float(np.sqrt(np.max(np.sum(m * m, axis=0))))


def curvature(grid: Grid, S: np.ndarray) -> np.ndarray:
    """Nodal ``-div(grad S / |grad S|)`` from central second differences (2D).

    Returns zeros in 1D.
    """
    S = grid.check_scalar(S)
    if grid.dim == 1:
        return np.zeros_like(S)
    P = _mirror(S)
    hx, hy = grid.h
    Sx = (P[2:, 1:-1] - P[:-2, 1:-1]) / (2 * hx)
    Sy = (P[1:-1, 2:] - P[1:-1, :-2]) / (2 * hy)
    Sxx = (P[2:, 1:-1] - 2 * S + P[:-2, 1:-1]) / hx**2
    Syy = (P[1:-1, 2:] - 2 * S + P[1:-1, :-2]) / hy**2
    Sxy = (P[2:, 2:] - P[2:, :-2] - P[:-2, 2:] + P[:-2, :-2]) / (4 * hx * hy)
    g2 = Sx * Sx + Sy * Sy
    num = Sxx * Sy * Sy - 2 * Sx * Sy * Sxy + Syy * Sx * Sx
    return -num / np.maximum(g2, _GRAD_EPS) ** 1.5


def interpolate(grid: Grid, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """(Bi)linear interpolation of nodal data at ``points`` of shape ``(n, dim)``.

    ``values`` is ``grid.shape`` (scalar) or ``(ncomp, *grid.shape)``; the
    result is ``(n,)`` or ``(n, ncomp)``.  Points are clamped to the domain.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    lo = np.asarray(grid.origin)
    hi = np.asarray(grid.upper)
    points = np.clip(points, lo, hi)
    axes = tuple(grid.coords(a) for a in range(grid.dim))
    vals = np.asarray(values, dtype=float)
    if vals.shape != grid.shape:
        vals = np.moveaxis(vals, 0, -1)
    interp = RegularGridInterpolator(axes, vals, method="linear", bounds_error=False, fill_value=None)
    return interp(points)


@dataclass(frozen=True)
class LevelSetSample:
    position: np.ndarray
    normal: np.ndarray
    curvature: float
    grad_magnitude: float
    length: float = 1.0


@dataclass
class LevelSet:
    """Samples of ``{S = c}`` stored column-wise.

    Iterating yields :class:`LevelSetSample` objects; ``length`` holds the
    marching-squares segment length (1 in 1D) for weighted averages.
    """

    level: float
    positions: np.ndarray
    normals: np.ndarray
    curvatures: np.ndarray
    grad_magnitudes: np.ndarray
    lengths: np.ndarray

    def __len__(self) -> int:
        return len(self.positions)

    def __getitem__(self, i: int) -> LevelSetSample:
        return LevelSetSample(
            self.positions[i], self.normals[i], float(self.curvatures[i]),
            float(self.grad_magnitudes[i]), float(self.lengths[i]),
        )

    def __iter__(self) -> Iterator[LevelSetSample]:
        return (self[i] for i in range(len(self)))


def _crossings_1d(grid: Grid, S: np.ndarray, c: float) -> tuple[np.ndarray, np.ndarray]:
    above = S > c
    idx = np.nonzero(above[:-1] != above[1:])[0]
    s0, s1 = S[idx], S[idx + 1]
    frac = (c - s0) / (s1 - s0)
    x = grid.coords(0)
    return x[idx] + frac * grid.h[0], np.sign(s1 - s0)


def level_crossings(grid: Grid, S: np.ndarray, c: float) -> np.ndarray:
    """All edge crossings of ``{S = c}`` as an ``(n, dim)`` point array."""
    S = grid.check_scalar(S)
    if grid.dim == 1:
        return _crossings_1d(grid, S, c)[0][:, None]
    pts = []
    x, y = grid.coords(0), grid.coords(1)
    above = S > c
    for axis in (0, 1):
        a = above[:-1, :] if axis == 0 else above[:, :-1]
        b = above[1:, :] if axis == 0 else above[:, 1:]
        va = S[:-1, :] if axis == 0 else S[:, :-1]
        vb = S[1:, :] if axis == 0 else S[:, 1:]
        i, j = np.nonzero(a != b)
        t = (c - va[i, j]) / (vb[i, j] - va[i, j])
        if axis == 0:
            pts.append(np.column_stack([x[i] + t * grid.h[0], y[j]]))
        else:
            pts.append(np.column_stack([x[i], y[j] + t * grid.h[1]]))
    return np.concatenate(pts) if pts else np.empty((0, 2))


def _marching_squares(grid: Grid, S: np.ndarray, c: float) -> tuple[np.ndarray, np.ndarray]:
    """Segment endpoints ``(m, 2, 2)`` of the isocontour, saddle cells split
    by comparing the corner average with ``c``."""
    hx, hy = grid.h
    x, y = grid.coords(0), grid.coords(1)
    v00, v10 = S[:-1, :-1], S[1:, :-1]
    v01, v11 = S[:-1, 1:], S[1:, 1:]
    X0 = x[:-1, None] + 0 * v00
    Y0 = y[None, :-1] + 0 * v00

    def cross(va, vb):
        hit = (va > c) != (vb > c)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(hit, (c - va) / (vb - va), np.nan)
        return t

    # edge order: bottom (00-10), right (10-11), top (01-11), left (00-01)
    tb, tr, tt, tl = cross(v00, v10), cross(v10, v11), cross(v01, v11), cross(v00, v01)
    ex = np.stack([X0 + tb * hx, X0 + hx + 0 * tr, X0 + tt * hx, X0 + 0 * tl])
    ey = np.stack([Y0 + 0 * tb, Y0 + tr * hy, Y0 + hy + 0 * tt, Y0 + tl * hy])
    hit = ~np.isnan(np.stack([tb, tr, tt, tl]))
    count = hit.sum(axis=0)

    segs = []
    two = np.nonzero(count == 2)
    if two[0].size:
        h2 = hit[:, two[0], two[1]]
        order = np.argsort(~h2, axis=0, kind="stable")[:2]
        px = np.take_along_axis(ex[:, two[0], two[1]], order, axis=0)
        py = np.take_along_axis(ey[:, two[0], two[1]], order, axis=0)
        segs.append(np.stack([np.stack([px[0], py[0]], -1), np.stack([px[1], py[1]], -1)], axis=1))
    four = np.nonzero(count == 4)
    if four[0].size:
        i, j = four
        centre = 0.25 * (v00[i, j] + v10[i, j] + v01[i, j] + v11[i, j])
        joined = (centre > c) == (v00[i, j] > c)
        P = np.stack([ex[:, i, j], ey[:, i, j]], -1)  # (4, m, 2)
        # joined: cut corners 10 and 01 -> (bottom,right), (top,left)
        # else:   cut corners 00 and 11 -> (left,bottom), (right,top)
        a1 = np.where(joined[:, None], P[0], P[3])
        b1 = np.where(joined[:, None], P[1], P[0])
        a2 = np.where(joined[:, None], P[2], P[1])
        b2 = np.where(joined[:, None], P[3], P[2])
        segs.append(np.stack([a1, b1], axis=1))
        segs.append(np.stack([a2, b2], axis=1))
    if not segs:
        return np.empty((0, 2, 2)), np.empty(0)
    seg = np.concatenate(segs)
    return seg, np.linalg.norm(seg[:, 1] - seg[:, 0], axis=1)


def extract_level_set(grid: Grid, S: np.ndarray, c: float = 0.5) -> LevelSet:
    """Sample the level set ``{S = c}``.

    1D: linear interpolation between sign-change node pairs.  2D:
    marching-squares segments sampled at their midpoints.  Normals are
    ``grad S / |grad S|`` and curvature ``-div(grad S / |grad S|)``, both
    interpolated from nodal central-difference fields.

    Raises:
        EmptyLevelSet: when no crossing exists.
    """
    S = grid.check_scalar(S)
    if grid.dim == 1:
        pos, slope_sign = _crossings_1d(grid, S, c)
        if pos.size == 0:
            raise EmptyLevelSet(f"no crossing of level {c}")
        points = pos[:, None]
        g = interpolate(grid, gradient(grid, S)[0], points)
        normals = slope_sign[:, None].astype(float)
        return LevelSet(c, points, normals, np.zeros(len(pos)), np.abs(g), np.ones(len(pos)))

    seg, lengths = _marching_squares(grid, S, c)
    if len(seg) == 0:
        raise EmptyLevelSet(f"no crossing of level {c}")
    points = seg.mean(axis=1)
    g = interpolate(grid, gradient(grid, S), points)
    gnorm = np.linalg.norm(g, axis=1)
    normals = g / np.maximum(gnorm, _GRAD_EPS)[:, None]
    kappa = interpolate(grid, curvature(grid, S), points)
    return LevelSet(c, points, normals, kappa, gnorm, lengths)
