"""
Experiment orchestration: single runs, parameter sweeps with log-log fits,
characteristic relations and the effort-versus-accuracy study.

CSV outputs (one header line, 12 significant digits):

``records.csv``  t, width, energy, cd_residual_max, speed_measured_max,
                 speed_oracle_max, error_max, cell_updates, wall_time

``sweep.csv``    parameter, value, error_max, width, E, F, W, e_num,
                 cell_updates, wall_time, status

``fits.csv``     quantity, slope, intercept, residual, points

``effort.csv``   target, ac_E, ac_F, ac_W, ac_error, ac_e_num, ac_cells,
                 hyb_nu, hyb_F, hyb_error, hyb_e_num, hyb_cells
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import evolution as ev
from .config import ExperimentConfig
from .diagnostics import RECORD_COLUMNS, DiagnosticsRecord, SlopeFit, fit_slope, fmt
from .elasticity import ElasticProblem, bar_displacement
from .errors import DegenerateFit, HybridPFError, TargetUnreachable
from .grid import Grid
from .materials import DoubleWell, ElasticityTensor, MaterialSet
from .sharp_oracle import BarOracle, CircleOracle, OracleParams

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ("parameter", "value", "error_max", "width", "E", "F", "W", "e_num",
                 "cell_updates", "wall_time", "status")
FIT_COLUMNS = ("quantity", "slope", "intercept", "residual", "points")
EFFORT_COLUMNS = ("target", "ac_E", "ac_F", "ac_W", "ac_error", "ac_e_num", "ac_cells",
                  "hyb_nu", "hyb_F", "hyb_error", "hyb_e_num", "hyb_cells")


# ---------------------------------------------------------------- building


def build_material(cfg: ExperimentConfig) -> MaterialSet:
    m = cfg.material
    if cfg.dim == 1:
        tensor = ElasticityTensor(dim=1, D=m.D)
    else:
        tensor = ElasticityTensor.isotropic(m.lam_e, m.mu_e)
    return MaterialSet(DoubleWell(m.a), tensor, m.eigenstrain)


def build_grid(cfg: ExperimentConfig) -> Grid:
    return Grid(cfg.grid.nodes, cfg.grid.extent, cfg.grid.origin)


def build_problem(cfg: ExperimentConfig, grid: Grid | None = None,
                  material: MaterialSet | None = None) -> ElasticProblem:
    grid = grid or build_grid(cfg)
    material = material or build_material(cfg)
    bc = None
    if cfg.geometry == "bar1d":
        bc = bar_displacement(cfg.bar.U1, grid.extent[0], grid.origin[0])
    return ElasticProblem(grid, material, boundary_displacement=bc)


def build_params(cfg: ExperimentConfig, material: MaterialSet | None = None) -> ev.Params:
    """Model parameters with the default mobilities ``c_hat c1`` (ac) and ``c_hat`` (hybrid)."""
    p = cfg.params
    material = material or build_material(cfg)
    if cfg.model == "ac":
        c = p.c if p.c is not None else p.c_hat * material.c1
        return ev.ACParams(p.mu, p.lam, c, mu0=p.mu0, lam0=p.lam0)
    c = p.c if p.c is not None else p.c_hat
    return ev.HybridParams(p.nu, c, nu0=p.nu0)


def oracle_params(cfg: ExperimentConfig, material: MaterialSet | None = None) -> OracleParams:
    """Sharp reference: interface energy ``sqrt(lam)`` for ac, zero for hybrid unless set."""
    material = material or build_material(cfg)
    E = cfg.params.E
    if E is None:
        E = math.sqrt(cfg.params.lam) if cfg.model == "ac" else 0.0
    return OracleParams(material, cfg.params.c_hat, E)


def circle_center(cfg: ExperimentConfig) -> tuple[float, float]:
    if cfg.circle.center is not None:
        return tuple(cfg.circle.center)
    return tuple(o + 0.5 * e for o, e in zip(cfg.grid.origin, cfg.grid.extent))


def build_oracle(cfg: ExperimentConfig, material: MaterialSet | None = None):
    op = oracle_params(cfg, material)
    if cfg.geometry == "bar1d":
        return BarOracle(op, cfg.bar.U1, cfg.bar.phase2_on_left, cfg.grid.extent[0], cfg.grid.origin[0])
    return CircleOracle(op, circle_center(cfg))


def initial_field(cfg: ExperimentConfig, grid: Grid, params: ev.Params, material: MaterialSet) -> np.ndarray:
    k = params.profile_k(material.well)
    if cfg.geometry == "bar1d":
        return ev.bar_profile(grid, grid.origin[0] + cfg.bar.z0, k, cfg.bar.phase2_on_left)
    return ev.disc_profile(grid, circle_center(cfg), cfg.circle.R0, k)


def schedule_of(cfg: ExperimentConfig) -> ev.Schedule:
    return ev.Schedule(cfg.schedule.t_end, cfg.schedule.samples)


def simulate(cfg: ExperimentConfig) -> ev.RunResult:
    """One full run of the configured experiment."""
    material = build_material(cfg)
    grid = build_grid(cfg)
    problem = build_problem(cfg, grid, material)
    params = build_params(cfg, material)
    S0 = initial_field(cfg, grid, params, material)
    return ev.run(problem, params, S0, schedule_of(cfg), oracle=build_oracle(cfg, material),
                  level=cfg.level, safety=cfg.params.safety, stride=cfg.params.stride)


def aggregate_error(records: Sequence[DiagnosticsRecord], skip: int = 1) -> float:
    """Max-norm model error over the records after the first ``skip``."""
    errs = [r.error_max for r in records[skip:] if np.isfinite(r.error_max)]
    return max(errs) if errs else math.nan


# ------------------------------------------------------- characteristic relations


def characteristic_relations(params: ev.Params | Mapping[str, float], model: str, p: float) -> dict[str, float]:
    """Interface-energy, error and width parameters and the effort ``W^-p``.

    Allen-Cahn: ``E = lam^1/2``, ``F = mu^1/2``, ``W = E F``.
    Hybrid: ``F = W = nu^1/2`` (no interface-energy parameter).
    """
    get = params.get if isinstance(params, Mapping) else (lambda k, d=None: getattr(params, k, d))
    if model == "ac":
        E = math.sqrt(get("lam"))
        F = math.sqrt(get("mu"))
        W = E * F
    elif model == "hybrid":
        E = math.nan
        F = W = math.sqrt(get("nu"))
    else:
        raise ValueError(f"unknown model {model!r}")
    return {"E": E, "F": F, "W": W, "e_num": W ** (-p)}


# ------------------------------------------------------------------- sweeps


@dataclass
class SweepRow:
    parameter: str
    value: float
    error_max: float = math.nan
    width: float = math.nan
    E: float = math.nan
    F: float = math.nan
    W: float = math.nan
    e_num: float = math.nan
    cell_update_count: int = 0
    wall_time: float = 0.0
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_csv_row(self) -> list[str]:
        vals = (self.value, self.error_max, self.width, self.E, self.F, self.W, self.e_num,
                int(self.cell_update_count), self.wall_time)
        return [self.parameter] + [fmt(v) for v in vals] + [self.status]


@dataclass
class SweepResult:
    rows: list[SweepRow]
    error_fit: SlopeFit | None = None
    width_fit: SlopeFit | None = None

    def fits(self) -> dict[str, SlopeFit]:
        return {k: v for k, v in (("error", self.error_fit), ("width", self.width_fit)) if v is not None}


def sweep_config(cfg: ExperimentConfig, value: float) -> ExperimentConfig:
    name = cfg.sweep.parameter
    if name == "mu_lam":  # the product mu lam, split evenly
        root = math.sqrt(value)
        return cfg.with_params(mu=root, lam=root)
    return cfg.with_params(**{name: value})


def _sweep_point(cfg: ExperimentConfig, value: float) -> SweepRow:
    point = sweep_config(cfg, value)
    row = SweepRow(cfg.sweep.parameter, value)
    t0 = time.perf_counter()
    try:
        params = build_params(point)
        rel = characteristic_relations(params, cfg.model, cfg.effort_p)
        row.E, row.F, row.W, row.e_num = rel["E"], rel["F"], rel["W"], rel["e_num"]
        result = simulate(point)
    except HybridPFError as exc:
        row.status = f"{type(exc).__name__}: {exc}"
        log.warning("sweep point %s=%g failed: %s", cfg.sweep.parameter, value, row.status)
        row.wall_time = time.perf_counter() - t0
        return row
    recs = result.records
    row.error_max = aggregate_error(recs, cfg.schedule.skip)
    row.width = recs[-1].width
    row.cell_update_count = result.final.cell_update_count
    row.wall_time = time.perf_counter() - t0
    return row


def _fit_or_none(x, y) -> SlopeFit | None:
    try:
        return fit_slope(x, y)
    except DegenerateFit:
        return None


def run_sweep(cfg: ExperimentConfig, values: Sequence[float] | None = None) -> SweepResult:
    """One simulation per swept value; failed points are marked, not fatal.

    Rows are ordered by swept value.  Slope fits of the aggregated error and
    the final width against the swept value need four successful points.
    """
    if cfg.sweep.parameter is None:
        raise ValueError("configuration has no [sweep] parameter")
    values = sorted(values if values is not None else cfg.sweep.values)
    if cfg.sweep.workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=cfg.sweep.workers) as pool:
            rows = list(pool.map(_sweep_point, [cfg] * len(values), values))
    else:
        rows = [_sweep_point(cfg, v) for v in values]
    ok = [r for r in rows if r.ok]
    x = [r.value for r in ok]
    return SweepResult(rows, _fit_or_none(x, [r.error_max for r in ok]), _fit_or_none(x, [r.width for r in ok]))


# ------------------------------------------------------------- effort study


def optimize_ac(E_values: Iterable[float], F_values: Iterable[float],
                total_error: Callable[[float, float], float], target: float) -> tuple[float, float, float]:
    """Lattice point maximizing ``E F`` subject to ``total_error(E, F) <= target``.

    Pairs are tried in decreasing ``E F`` (ties: larger ``E`` first) and the
    first feasible one is returned, so ``total_error`` is evaluated lazily.

    Raises:
        TargetUnreachable: no lattice point meets the target.
    """
    pairs = sorted(((E, F) for E in E_values for F in F_values), key=lambda q: (-q[0] * q[1], -q[0]))
    for E, F in pairs:
        err = total_error(E, F)
        if err <= target:
            return E, F, err
    raise TargetUnreachable(f"no (E, F) lattice point reaches total error {target:g}")


def optimize_hybrid(nu_values: Iterable[float], error: Callable[[float], float], target: float) -> tuple[float, float]:
    """Largest ``nu`` with ``error(nu) <= target`` by bisection over the sorted list.

    Assumes the error grows with ``nu``.

    Raises:
        TargetUnreachable: even the smallest ``nu`` misses the target.
    """
    nus = sorted(nu_values)
    lo, hi = 0, len(nus) - 1
    if error(nus[0]) > target:
        raise TargetUnreachable(f"no nu reaches error {target:g}")
    if error(nus[hi]) <= target:
        return nus[hi], error(nus[hi])
    while hi - lo > 1:  # error(nus[lo]) <= target < error(nus[hi])
        mid = (lo + hi) // 2
        if error(nus[mid]) <= target:
            lo = mid
        else:
            hi = mid
    return nus[lo], error(nus[lo])


@dataclass
class EffortStudyRow:
    target: float
    ac_E: float
    ac_F: float
    ac_error: float
    ac_e_num: float
    ac_cells: float
    hyb_nu: float
    hyb_error: float
    hyb_e_num: float
    hyb_cells: float

    @property
    def ac_W(self) -> float:
        return self.ac_E * self.ac_F

    @property
    def hyb_F(self) -> float:
        return math.sqrt(self.hyb_nu)

    def to_csv_row(self) -> list[str]:
        vals = (self.target, self.ac_E, self.ac_F, self.ac_W, self.ac_error, self.ac_e_num, self.ac_cells,
                self.hyb_nu, self.hyb_F, self.hyb_error, self.hyb_e_num, self.hyb_cells)
        return [fmt(v) for v in vals]


@dataclass
class EffortResult:
    rows: list[EffortStudyRow]
    ac_fit: SlopeFit        # cells vs target
    hybrid_fit: SlopeFit
    ac_e_num_fit: SlopeFit  # W^-p vs target
    hybrid_e_num_fit: SlopeFit

    @property
    def exponent_ratio(self) -> float:
        return abs(self.ac_fit.slope) / abs(self.hybrid_fit.slope)

    def fits(self) -> dict[str, SlopeFit]:
        return {"ac_cells": self.ac_fit, "hybrid_cells": self.hybrid_fit,
                "ac_e_num": self.ac_e_num_fit, "hybrid_e_num": self.hybrid_e_num_fit}


class EffortModel:
    """Measured error and effort for the zero-interface-energy bar target.

    Errors come from short runs of a window of the bar around the
    interface, resolved with ``n_k`` nodes per profile length ``1/k`` and
    loaded so that its stress equals the full bar's stress at ``z0``.  The
    Allen-Cahn total error adds the curvature term ``c_hat c1 kappa_ref E``;
    the hybrid total error adds the measured curvature error of a shrinking
    hybrid disc (radius ``R0``) with the same ``nu``.

    The effort of a parameter choice is the cell-update count of the full
    bar run to ``t_ref`` at the same resolution, i.e. node count times the
    number of steps the stepper's own stable time step requires.
    """

    def __init__(self, cfg: ExperimentConfig):
        if cfg.geometry != "bar1d":
            raise ValueError("the effort study targets the bar geometry")
        self.cfg = cfg
        self.material = build_material(cfg)
        self.well = self.material.well
        self.c_hat = cfg.params.c_hat
        self.c1 = self.material.c1
        self.kappa_ref = cfg.effort.kappa_ref or 1.0 / cfg.circle.R0
        self.length = cfg.grid.extent[0]
        self._cache: dict = {}

    # parameters
    def ac_params(self, E: float, F: float) -> ev.ACParams:
        return ev.ACParams(F * F, E * E, self.c_hat * self.c1)

    def hybrid_params(self, nu: float) -> ev.HybridParams:
        return ev.HybridParams(nu, self.c_hat)

    def relax_time(self, params: ev.Params) -> float:
        k = params.profile_k(self.well)
        if isinstance(params, ev.ACParams):
            return params.mu * math.sqrt(params.lam) / (2 * self.well.a * params.c)
        return 1.0 / (params.c * k * self.well.a)

    def stress_at_start(self) -> float:
        bar = self.cfg.bar
        D, eb = self.material.tensor.D, self.material.eps_bar[0]
        L2 = bar.z0 if bar.phase2_on_left else self.length - bar.z0
        return D * (bar.U1 - eb * L2) / self.length

    def window_error(self, params: ev.Params) -> float:
        e = self.cfg.effort
        k = params.profile_k(self.well)
        ell = e.window / k
        nodes = int(round(e.window * e.n_k)) + 1
        grid = Grid((nodes,), (ell,), (0.0,))
        D, eb = self.material.tensor.D, self.material.eps_bar[0]
        U1 = self.stress_at_start() * ell / D + eb * 0.5 * ell
        problem = ElasticProblem(grid, self.material, boundary_displacement=bar_displacement(U1, ell))
        left = self.cfg.bar.phase2_on_left
        oracle = BarOracle(OracleParams(self.material, self.c_hat, 0.0), U1, left, ell)
        S0 = ev.bar_profile(grid, 0.5 * ell, k, left)
        sched = ev.Schedule(e.t_window * self.relax_time(params), 5)
        res = ev.run(problem, params, S0, sched, oracle=oracle)
        return aggregate_error(res.records, 3)

    def circle_error(self, params: ev.HybridParams) -> float:
        e = self.cfg.effort
        k = params.profile_k(self.well)
        R0 = self.cfg.circle.R0
        half = R0 + max(0.05, 12.0 / k)
        nodes = int(math.ceil(2 * half * k * e.circle_n_k)) + 1
        grid = Grid((nodes, nodes), (2 * half, 2 * half), (-half, -half))
        material = MaterialSet(self.well, ElasticityTensor.isotropic(1.0, 1.0), (0.0, 0.0, 0.0))
        problem = ElasticProblem(grid, material)
        oracle = CircleOracle(OracleParams(material, self.c_hat, 0.0))
        S0 = ev.disc_profile(grid, (0.0, 0.0), R0, k)
        t_end = max(e.circle_t_end, e.t_window * self.relax_time(params))
        res = ev.run(problem, params, S0, ev.Schedule(t_end, 3), oracle=oracle)
        return aggregate_error(res.records, 1)

    def ac_total_error(self, E: float, F: float) -> float:
        key = ("ac", E, F)
        if key not in self._cache:
            bar = self.window_error(self.ac_params(E, F))
            self._cache[key] = self.c_hat * self.c1 * self.kappa_ref * E + bar
        return self._cache[key]

    def hybrid_total_error(self, nu: float) -> float:
        key = ("hybrid", nu)
        if key not in self._cache:
            p = self.hybrid_params(nu)
            self._cache[key] = self.window_error(p) + self.circle_error(p)
        return self._cache[key]

    def reference_cells(self, params: ev.Params) -> float:
        e = self.cfg.effort
        k = params.profile_k(self.well)
        nodes = int(math.ceil(self.length * k * e.n_k)) + 1
        grid = Grid((nodes,), (self.length,), (0.0,))
        problem = ElasticProblem(grid, self.material,
                                 boundary_displacement=bar_displacement(self.cfg.bar.U1, self.length))
        S0 = ev.bar_profile(grid, self.cfg.bar.z0, k, self.cfg.bar.phase2_on_left)
        state = ev.initial_state(problem, S0)
        dt = ev.stable_dt(params, grid, problem, state, self.cfg.params.safety)
        return float(nodes) * math.ceil(e.t_ref / dt)


def _fit_exponents(rows, targets, ac_key, hyb_key) -> tuple[SlopeFit, SlopeFit]:
    return (fit_slope(targets, [getattr(r, ac_key) for r in rows]),
            fit_slope(targets, [getattr(r, hyb_key) for r in rows]))


def effort_from_functions(targets: Sequence[float], E_values, F_values, nu_values,
                          ac_error: Callable[[float, float], float], hybrid_error: Callable[[float], float],
                          p: float, ac_cells: Callable[[float, float], float] | None = None,
                          hybrid_cells: Callable[[float], float] | None = None) -> EffortResult:
    """Effort study over given error models.

    ``ac_cells`` / ``hybrid_cells`` default to the effort parameter ``W^-p``.

    Raises:
        TargetUnreachable: a target cannot be met by one of the models.
        DegenerateFit: fewer than four targets.
    """
    rows = []
    for target in targets:
        E, F, ac_err = optimize_ac(E_values, F_values, ac_error, target)
        nu, hyb_err = optimize_hybrid(nu_values, hybrid_error, target)
        ac_e = characteristic_relations({"mu": F * F, "lam": E * E}, "ac", p)["e_num"]
        hyb_e = characteristic_relations({"nu": nu}, "hybrid", p)["e_num"]
        rows.append(EffortStudyRow(
            target, E, F, ac_err, ac_e, ac_cells(E, F) if ac_cells else ac_e,
            nu, hyb_err, hyb_e, hybrid_cells(nu) if hybrid_cells else hyb_e,
        ))
    ac_fit, hyb_fit = _fit_exponents(rows, targets, "ac_cells", "hyb_cells")
    ac_e_fit, hyb_e_fit = _fit_exponents(rows, targets, "ac_e_num", "hyb_e_num")
    return EffortResult(rows, ac_fit, hyb_fit, ac_e_fit, hyb_e_fit)


def effort_study(cfg: ExperimentConfig, targets: Sequence[float] | None = None) -> EffortResult:
    """Effort versus accuracy on the zero-interface-energy bar (measured errors)."""
    targets = sorted(targets if targets is not None else cfg.effort.targets, reverse=True)
    if len(targets) < 4:
        raise DegenerateFit("the effort study needs at least four targets")
    model = EffortModel(cfg)
    e = cfg.effort
    return effort_from_functions(
        targets, e.E_values, e.F_values, e.nu_values,
        model.ac_total_error, model.hybrid_total_error, e.p,
        ac_cells=lambda E, F: model.reference_cells(model.ac_params(E, F)),
        hybrid_cells=lambda nu: model.reference_cells(model.hybrid_params(nu)),
    )


# --------------------------------------------------------------------- CSV


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_records(path, records: Sequence[DiagnosticsRecord]) -> Path:
    return _write(path, RECORD_COLUMNS, (r.to_csv_row() for r in records))


def write_sweep(path, result: SweepResult) -> Path:
    return _write(path, SWEEP_COLUMNS, (r.to_csv_row() for r in result.rows))


def write_fits(path, fits: Mapping[str, SlopeFit]) -> Path:
    rows = ([name, fmt(f.slope), fmt(f.intercept), fmt(f.residual), str(len(f.points))] for name, f in fits.items())
    return _write(path, FIT_COLUMNS, rows)


def write_effort(path, result: EffortResult) -> Path:
    return _write(path, EFFORT_COLUMNS, (r.to_csv_row() for r in result.rows))
