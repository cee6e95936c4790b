"""Measurements on phase-field states: speed, width, energy, dissipation, error."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .elasticity import ElasticProblem, elastic_energy
from .errors import DegenerateFit, DegenerateGradient, EmptyLevelSet, NoOracle
from .grid import Grid, LevelSet, _crossings_1d, _marching_squares, extract_level_set, gradient_energy, interpolate

log = logging.getLogger(__name__)

GRAD_FLOOR = 1e-8

RECORD_COLUMNS = (
    "t", "width", "energy", "cd_residual_max", "speed_measured_max",
    "speed_oracle_max", "error_max", "cell_updates", "wall_time",
)


def fmt(value) -> str:
    """12 significant digits, integers verbatim."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def _signed_max(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    if values.size == 0:
        return math.nan
    return float(values[np.argmax(np.abs(values))])


@dataclass
class DiagnosticsRecord:
    t: float
    level_set: LevelSet | None
    speed_measured: np.ndarray
    speed_oracle: np.ndarray
    model_error: np.ndarray
    width: float
    free_energy: float
    cd_residual_max: float
    cell_update_count: int
    wall_time: float
    valid: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))

    @property
    def speed_measured_max(self) -> float:
        return _signed_max(self.speed_measured[self.valid])

    @property
    def speed_oracle_max(self) -> float:
        return _signed_max(self.speed_oracle[self.valid]) if self.speed_oracle.size else math.nan

    @property
    def error_max(self) -> float:
        if self.model_error.size == 0 or not np.any(self.valid):
            return math.nan
        return float(np.max(np.abs(self.model_error[self.valid])))

    def to_csv_row(self) -> list[str]:
        vals = (self.t, self.width, self.free_energy, self.cd_residual_max, self.speed_measured_max,
                self.speed_oracle_max, self.error_max, int(self.cell_update_count), self.wall_time)
        return [fmt(v) for v in vals]


@dataclass(frozen=True)
class SlopeFit:
    points: np.ndarray  # (n, 2) log parameter, log quantity
    slope: float
    intercept: float
    residual: float

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope


def fit_slope(x: Sequence[float], y: Sequence[float] | None = None, min_points: int = 4) -> SlopeFit:
    """Least-squares line through ``(log x, log y)``.

    Accepts two sequences or a single sequence of ``(x, y)`` pairs.

    Raises:
        DegenerateFit: fewer than ``min_points`` points, non-positive or
            non-finite values, or all ``x`` equal.
    """
    if y is None:
        pts = np.asarray(x, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < min_points:
        raise DegenerateFit(f"need at least {min_points} points, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.all(x > 0) and np.all(y > 0)):
        raise DegenerateFit("log-log fit needs positive finite values")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise DegenerateFit("all abscissae coincide")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return SlopeFit(np.column_stack([lx, ly]), float(slope), float(intercept), resid)


def normal_speed_measured(grid: Grid, S_prev: np.ndarray, S_next: np.ndarray, dt: float,
                          level: float = 0.5, strict: bool = False) -> tuple[LevelSet, np.ndarray, np.ndarray]:
    """Normal speed ``-S_t / |grad S|`` on the level set of the midpoint field.

    Returns ``(level_set, speeds, valid)``.  Samples with ``|grad S|`` below
    ``1e-8`` are flagged invalid (speed NaN); with ``strict`` they raise.

    Raises:
        EmptyLevelSet: the midpoint field has no crossing of ``level``.
        DegenerateGradient: ``strict`` and some sample is degenerate.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    mid = 0.5 * (np.asarray(S_prev) + np.asarray(S_next))
    ls = extract_level_set(grid, mid, level)
    rate = (np.asarray(S_next) - np.asarray(S_prev)) / dt
    St = interpolate(grid, rate, ls.positions)
    g = ls.grad_magnitudes
    valid = g >= GRAD_FLOOR
    if strict and not np.all(valid):
        raise DegenerateGradient(f"|grad S| < {GRAD_FLOOR} at {int((~valid).sum())} samples")
    speeds = np.full(len(ls), np.nan)
    speeds[valid] = -St[valid] / g[valid]
    return ls, speeds, valid


def _dense_contour(grid: Grid, S: np.ndarray, c: float, per_segment: int = 4) -> np.ndarray:
    seg, _ = _marching_squares(grid, S, c)
    if len(seg) == 0:
        raise EmptyLevelSet(f"no crossing of level {c}")
    t = (np.arange(per_segment + 1) / per_segment)[None, :, None]
    return (seg[:, :1] * (1 - t) + seg[:, 1:] * t).reshape(-1, 2)


def interface_width(grid: Grid, S: np.ndarray, lo: float = 0.1, hi: float = 0.9) -> float:
    """Largest distance between the ``lo`` and ``hi`` level sets.

    1D: every ``lo`` crossing is paired with the nearest ``hi`` crossing.
    2D: nearest distance from each ``lo`` contour sample to the densely
    sampled ``hi`` contour, which equals the normal distance for nearly
    parallel contours.

    Raises:
        EmptyLevelSet: either level set is empty.
    """
    S = grid.check_scalar(S)
    if grid.dim == 1:
        a, _ = _crossings_1d(grid, S, lo)
        b, _ = _crossings_1d(grid, S, hi)
        if a.size == 0 or b.size == 0:
            raise EmptyLevelSet(f"width needs both {lo} and {hi} crossings")
        return float(np.max(np.min(np.abs(a[:, None] - b[None, :]), axis=1)))
    a = _dense_contour(grid, S, lo, 1)
    b = _dense_contour(grid, S, hi)
    d, _ = cKDTree(b).query(a)
    return float(np.max(d))


def free_energy(problem: ElasticProblem, S: np.ndarray, u: np.ndarray | None, params=None,
                weighted: bool = True) -> float:
    """Discrete free energy ``int W + w_psi psi(S) + w_grad |grad S|^2 / 2``.

    ``params`` supplies ``energy_weights`` (model scaling); ``weighted=False``
    or ``params=None`` gives the unscaled form.  ``psi`` uses trapezoidal
    node weights and the gradient term the matching edge quadrature, so that
    the discrete Laplacian is its exact variational derivative.
    """
    grid = problem.grid
    S = grid.check_scalar(S)
    wpsi, wgrad = params.energy_weights if (weighted and params is not None) else (1.0, 1.0)
    e = wpsi * grid.integrate(problem.material.well.psi(S)) + wgrad * gradient_energy(grid, S)
    if u is not None:
        e += elastic_energy(problem, u, S)
    return float(e)


def clausius_duhem_residual(force_scaled: np.ndarray, S_rate: np.ndarray) -> tuple[np.ndarray, float]:
    """Pointwise product ``force * S_t`` and its maximum (must be ``<= 0``)."""
    r = np.asarray(force_scaled, dtype=float) * np.asarray(S_rate, dtype=float)
    return r, float(np.max(r)) if r.size else 0.0


def model_error(speed_measured: np.ndarray, speed_oracle: np.ndarray,
                valid: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Per-sample ``measured - oracle`` and its max-norm over valid samples."""
    m = np.asarray(speed_measured, dtype=float)
    o = np.asarray(speed_oracle, dtype=float)
    err = m - o
    mask = np.isfinite(err) if valid is None else (np.asarray(valid, bool) & np.isfinite(err))
    return err, float(np.max(np.abs(err[mask]))) if np.any(mask) else math.nan


def oracle_speeds(oracle, level_set: LevelSet) -> np.ndarray:
    if oracle is None:
        raise NoOracle("no sharp-interface oracle for this geometry")
    return np.asarray(oracle.speeds(level_set), dtype=float)


def make_record(problem: ElasticProblem, params, state, new, info, oracle=None, level: float = 0.5,
                cd_residual_max: float | None = None, wall_time: float = 0.0) -> DiagnosticsRecord:
    """Build the record at ``state.t`` from the step ``state -> new``."""
    grid = problem.grid
    empty = np.zeros(0)
    try:
        ls, speeds, valid = normal_speed_measured(grid, state.S, new.S, info.dt, level)
    except EmptyLevelSet:
        ls, speeds, valid = None, empty, np.zeros(0, bool)
    s_or, err = empty, empty
    if ls is not None and oracle is not None:
        s_or = oracle_speeds(oracle, ls)
        err, _ = model_error(speeds, s_or, valid)
    try:
        width = interface_width(grid, state.S)
    except EmptyLevelSet:
        width = math.nan
    energy = free_energy(problem, state.S, state.u, params)
    cd = info.cd_max if cd_residual_max is None else cd_residual_max
    return DiagnosticsRecord(state.t, ls, speeds, s_or, err, width, energy, cd,
                             new.cell_update_count, wall_time, valid)
