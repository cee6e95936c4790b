"""
Explicit time stepping of the order parameter coupled to quasistatic
elasticity.

Allen-Cahn:  ``S_t = -c/sqrt(mu lam) * (dW/dS + psi'(S)/sqrt(mu) - sqrt(mu) lam lap S)``

Hybrid:      ``S_t = -c * (dW/dS + psi'(S) - nu lap S) * |grad S|``

Both are forward Euler.  The hybrid factor ``|grad S|`` uses Godunov
upwinding so that flat bulk regions stay frozen.  The bracket is the exact
variational derivative of the discrete free energy (trapezoidal node
weights), which makes the pointwise Clausius-Duhem product
``force * S_t`` non-positive by construction.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import diagnostics as diag
from .elasticity import ElasticProblem, ElasticSolution, dW_dS_nodal, solve_quasistatic
from .errors import EmptyLevelSet, HybridPFError, UnstableStep
from .grid import Grid, grad_norm_godunov, grad_norm_upper, laplacian
from .materials import DoubleWell, KineticFunction

log = logging.getLogger(__name__)

BLOWUP = 10.0


@dataclass(frozen=True)
class ACParams:
    """Allen-Cahn scalings ``mu``, ``lam`` and mobility ``c``."""

    mu: float
    lam: float
    c: float = 1.0
    mu0: float = 1.0
    lam0: float = 1.0
    kinetic: KineticFunction | None = None

    model = "ac"

    def __post_init__(self):
        if min(self.mu, self.lam, self.c) <= 0:
            raise ValueError("mu, lam and c must be positive")
        if self.mu > self.mu0 or self.lam > self.lam0:
            raise ValueError(f"mu={self.mu}, lam={self.lam} exceed caps ({self.mu0}, {self.lam0})")

    @classmethod
    def matched(cls, mu: float, lam: float, c_hat: float, c1: float, **kw) -> "ACParams":
        """Mobility ``c = c_hat c1`` so the leading-order speed is the sharp one."""
        return cls(mu, lam, c_hat * c1, **kw)

    @property
    def f(self) -> KineticFunction:
        return self.kinetic or KineticFunction(self.c)

    @property
    def energy_weights(self) -> tuple[float, float]:
        """Weights of ``psi`` and ``|grad S|^2 / 2`` in the scaled free energy."""
        return 1.0 / math.sqrt(self.mu), math.sqrt(self.mu) * self.lam

    @property
    def mobility(self) -> float:
        return 1.0 / math.sqrt(self.mu * self.lam)

    def profile_k(self, well: DoubleWell) -> float:
        return math.sqrt(well.a / (2.0 * self.mu * self.lam))


@dataclass(frozen=True)
class HybridParams:
    """Hybrid scaling ``nu`` and mobility ``c``."""

    nu: float
    c: float = 1.0
    nu0: float = 1.0
    kinetic: KineticFunction | None = None

    model = "hybrid"

    def __post_init__(self):
        if min(self.nu, self.c) <= 0:
            raise ValueError("nu and c must be positive")
        if self.nu > self.nu0:
            raise ValueError(f"nu={self.nu} exceeds cap {self.nu0}")

    @classmethod
    def matched(cls, nu: float, c_hat: float, **kw) -> "HybridParams":
        return cls(nu, c_hat, **kw)

    @property
    def f(self) -> KineticFunction:
        return self.kinetic or KineticFunction(self.c)

    @property
    def energy_weights(self) -> tuple[float, float]:
        return 1.0, self.nu

    def profile_k(self, well: DoubleWell) -> float:
        return math.sqrt(well.a / (2.0 * self.nu))


Params = ACParams | HybridParams


def model_tag(params: Params) -> str:
    return params.model


@dataclass
class SimState:
    t: float
    S: np.ndarray
    elastic: ElasticSolution
    step_count: int = 0
    cell_update_count: int = 0
    cd_residual_max: float = -math.inf

    @property
    def u(self) -> np.ndarray:
        return self.elastic.u

    @property
    def T(self) -> np.ndarray:
        return self.elastic.T


def initial_state(problem: ElasticProblem, S0: np.ndarray, t: float = 0.0) -> SimState:
    S0 = problem.grid.check_scalar(S0).copy()
    return SimState(t, S0, solve_quasistatic(problem, S0, t))


def tanh_profile(signed_distance: np.ndarray, k: float, clip: float = 6.0) -> np.ndarray:
    """``(1 + tanh(k d)) / 2``, clipped to exactly 0/1 for ``|d| > clip/k``."""
    d = np.asarray(signed_distance, dtype=float)
    S = 0.5 * (1.0 + np.tanh(k * d))
    S = np.where(d > clip / k, 1.0, S)
    return np.where(d < -clip / k, 0.0, S)


def bar_profile(grid: Grid, z: float, k: float, phase2_on_left: bool = True) -> np.ndarray:
    x = grid.coords(0)
    return tanh_profile(z - x if phase2_on_left else x - z, k)


def disc_profile(grid: Grid, center: Sequence[float], R: float, k: float) -> np.ndarray:
    X, Y = grid.mesh()
    r = np.hypot(X - center[0], Y - center[1])
    return tanh_profile(R - r, k)


def driving_force_scaled(state: SimState, problem: ElasticProblem, params: Params) -> np.ndarray:
    """Bracketed configurational force of the scaled model equation."""
    grid = problem.grid
    well = problem.material.well
    bulk, grad_w = params.energy_weights
    force = bulk * well.psi_prime(state.S) - grad_w * laplacian(grid, state.S)
    if problem.material.has_eigenstrain:
        force = force + dW_dS_nodal(problem.material, state.T)
    return force


def _psi_second_bound(well: DoubleWell, S: np.ndarray) -> float:
    lo = min(float(S.min()), 0.0) - 0.05
    hi = max(float(S.max()), 1.0) + 0.05
    return well.max_curvature(lo, hi)


def stable_dt(params: Params, grid: Grid, problem: ElasticProblem | None = None,
              state: SimState | None = None, safety: float = 0.4) -> float:
    """Explicit-Euler step bound.

    AC: ``safety * min(h^2/(2 dim c sqrt(lam)), mu sqrt(lam)/(c max|psi''|),
    sqrt(mu lam)/(c eps_bar:D:eps_bar))``.

    Hybrid: ``safety * min(h^2/(2 dim c nu G), h/(c H), 1/(c G (max|psi''| +
    eps_bar:D:eps_bar)))`` with ``G`` an upper bound of the one-sided gradients
    and ``H = max|force|`` from ``state``.
    """
    c = params.f.slope_bound()
    h2 = grid.h_min ** 2
    dim = grid.dim
    well = problem.material.well if problem is not None else DoubleWell()
    stiff = problem.material.eigen_stiffness if problem is not None else 0.0
    psi2 = _psi_second_bound(well, state.S) if state is not None else well.max_curvature()
    bounds = []
    if isinstance(params, ACParams):
        sl = math.sqrt(params.lam)
        bounds.append(h2 / (2 * dim * c * sl))
        bounds.append(params.mu * sl / (c * psi2))
        if stiff > 0:
            bounds.append(math.sqrt(params.mu * params.lam) / (c * stiff))
    else:
        if state is None:
            raise ValueError("hybrid time step needs the current state")
        G = grad_norm_upper(grid, state.S)
        force = driving_force_scaled(state, problem, params)
        H = float(np.max(np.abs(force)))
        if G > 0:
            bounds.append(h2 / (2 * dim * c * params.nu * G))
            bounds.append(1.0 / (c * G * (psi2 + stiff)))
        if H > 0:
            bounds.append(grid.h_min / (c * H))
    return safety * min(bounds) if bounds else math.inf


@dataclass
class StepInfo:
    dt: float
    force: np.ndarray
    rate: np.ndarray
    cd_residual: np.ndarray

    @property
    def cd_max(self) -> float:
        return float(np.max(self.cd_residual))


def _advance(state: SimState, problem: ElasticProblem, params: Params, dt: float,
             rate: np.ndarray, force: np.ndarray, stride: int) -> tuple[SimState, StepInfo]:
    S_new = state.S + dt * rate
    step = state.step_count + 1
    if not np.all(np.isfinite(S_new)) or float(np.max(np.abs(S_new))) > BLOWUP:
        raise UnstableStep(f"order parameter left [-{BLOWUP}, {BLOWUP}] at step {step} (dt={dt:g})", step)
    cd_field, _ = diag.clausius_duhem_residual(force, (S_new - state.S) / dt)
    t_new = state.t + dt
    if step % stride == 0:
        elastic = solve_quasistatic(problem, S_new, t_new, guess=state.elastic.u)
    else:
        elastic = state.elastic
    cd_max = float(np.max(cd_field))
    new = SimState(t_new, S_new, elastic, step, state.cell_update_count + problem.grid.n_nodes,
                   max(state.cd_residual_max, cd_max))
    return new, StepInfo(dt, force, rate, cd_field)


def step_allen_cahn(state: SimState, problem: ElasticProblem, p: ACParams, dt: float,
                    stride: int = 1) -> tuple[SimState, StepInfo]:
    """One forward-Euler step of the scaled Allen-Cahn equation."""
    force = driving_force_scaled(state, problem, p)
    rate = -p.mobility * p.f(force)
    return _advance(state, problem, p, dt, rate, force, stride)


def step_hybrid(state: SimState, problem: ElasticProblem, p: HybridParams, dt: float,
                stride: int = 1) -> tuple[SimState, StepInfo]:
    """One forward-Euler step of the hybrid equation with Godunov ``|grad S|``."""
    force = driving_force_scaled(state, problem, p)
    fval = p.f(force)
    # level-set normal speed is f(force); S grows where it is negative
    G = grad_norm_godunov(problem.grid, state.S, fval)
    rate = -fval * G
    return _advance(state, problem, p, dt, rate, force, stride)


def step(state: SimState, problem: ElasticProblem, params: Params, dt: float, stride: int = 1):
    if isinstance(params, ACParams):
        return step_allen_cahn(state, problem, params, dt, stride)
    return step_hybrid(state, problem, params, dt, stride)


@dataclass(frozen=True)
class Schedule:
    """Sample times ``linspace(t_start, t_end, samples)``."""

    t_end: float
    samples: int = 11
    t_start: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.samples)


@dataclass
class RunResult:
    records: list
    final: SimState
    params: Params = field(repr=False, default=None)


def run(problem: ElasticProblem, params: Params, S0: np.ndarray | SimState, schedule: Schedule,
        oracle=None, level: float = 0.5, safety: float = 0.4, stride: int = 1,
        observer: Callable[[SimState, SimState, StepInfo], None] | None = None) -> RunResult:
    """Integrate to every sample time and emit one diagnostics record each.

    At a sample time ``t_k`` the next explicit step ``S_k -> S_{k+1}`` is
    taken and the record is built from that pair: the measured normal speed
    is ``-(S_{k+1} - S_k)/dt / |grad S|`` on the level set of the midpoint
    field.  The record time is ``t_k``.

    Errors raised by the stepper or the elasticity solver are re-raised with
    the step index attached.
    """
    grid = problem.grid
    state = S0 if isinstance(S0, SimState) else initial_state(problem, S0, schedule.t_start)
    times = schedule.times
    fixed_dt = stable_dt(params, grid, problem, state, safety) if isinstance(params, ACParams) else None
    records = []
    t0 = time.perf_counter()
    cd_since = -math.inf

    def take_step(st: SimState, limit: float):
        dt = fixed_dt if fixed_dt is not None else stable_dt(params, grid, problem, st, safety)
        dt = min(dt, limit) if limit > 0 else dt
        try:
            new, info = step(st, problem, params, dt, stride)
        except HybridPFError as exc:
            if getattr(exc, "step", None) is None:
                exc.args = (f"step {st.step_count + 1}: {exc}",) + exc.args[1:]
            raise
        if observer is not None:
            observer(st, new, info)
        return new, info

    for k, t_k in enumerate(times):
        while t_k - state.t > 1e-12 * max(1.0, abs(t_k)):
            state, info = take_step(state, t_k - state.t)
            cd_since = max(cd_since, info.cd_max)
        nxt = times[k + 1] - state.t if k + 1 < len(times) else 0.0
        new, info = take_step(state, nxt)
        cd_since = max(cd_since, info.cd_max)
        rec = diag.make_record(problem, params, state, new, info, oracle=oracle, level=level,
                               cd_residual_max=cd_since, wall_time=time.perf_counter() - t0)
        records.append(rec)
        cd_since = -math.inf
        if k + 1 < len(times):
            state = new
    return RunResult(records, state, params)
