"""
Reference solutions of the sharp-interface model.

Two geometries admit closed forms: the 1D two-phase bar (transmission
problem with constant stress) and a phase-2 disc moving by curvature
without elastic driving.

Orientation: the interface normal points into phase 2 (``S = 1``) and a
positive normal speed moves the interface along that normal, so phase 2
shrinks.  In the bar with phase 2 on the left this gives
``dz/dt = -s``; with phase 2 on the right ``dz/dt = +s``.  A phase-2 disc
has positive curvature ``1/R`` under ``kappa = -div(n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CircleVanished, InterfaceExitedDomain
from .grid import LevelSet
from .materials import MaterialSet, contraction_weights


@dataclass(frozen=True)
class SharpState1D:
    z: float
    phase2_on_left: bool = True
    U1: float = 0.5
    length: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.z < self.length:
            raise InterfaceExitedDomain(f"interface position {self.z} outside (0, {self.length})")

    @property
    def orientation(self) -> float:
        return -1.0 if self.phase2_on_left else 1.0


@dataclass(frozen=True)
class CircleState:
    R: float
    center: tuple[float, ...] = (0.0, 0.0)

    def __post_init__(self):
        if self.R <= 0:
            raise CircleVanished("radius must be positive")


@dataclass(frozen=True)
class OracleParams:
    material: MaterialSet
    c_hat: float = 1.0
    E: float = 0.0
    c1: float | None = None

    def __post_init__(self):
        if self.c_hat <= 0:
            raise ValueError("c_hat must be positive")
        if self.E < 0:
            raise ValueError("interface-energy parameter must be non-negative")
        if self.c1 is None:
            object.__setattr__(self, "c1", self.material.c1)


def transmission_1d(state: SharpState1D, material: MaterialSet) -> tuple[float, float]:
    """Constant bar stress for ``u(0) = 0``, ``u(L) = U1`` and no body force.

    Integrating ``u_x = T/D + eps_bar S`` over the bar gives
    ``T = D (U1 - eps_bar L2) / L`` with ``L2`` the length of phase 2.
    Stress is continuous, so the interface mean equals ``T``.
    """
    D = material.tensor.D
    eb = material.eps_bar[0]
    L2 = state.z if state.phase2_on_left else state.length - state.z
    T = D * (state.U1 - eb * L2) / state.length
    return T, T


def kinetic_speed(mean_stress, curvature, p: OracleParams):
    """Linear kinetic relation ``c_hat (-eps_bar:<T> + E c1 kappa)``.

    ``mean_stress`` carries tensor components on its last axis (a bare
    scalar or a per-sample vector is accepted in 1D).
    """
    ms = np.asarray(mean_stress, dtype=float)
    eb = p.material.eps_bar * contraction_weights(p.material.dim)
    if p.material.dim == 1:
        drive = -eb[0] * (ms[..., 0] if ms.ndim and ms.shape[-1] == 1 else ms)
    else:
        drive = -(ms @ eb)
    return p.c_hat * (drive + p.E * p.c1 * np.asarray(curvature, dtype=float))


def sharp_speed_1d(state: SharpState1D, p: OracleParams) -> float:
    _, mean = transmission_1d(state, p.material)
    return float(kinetic_speed(mean, 0.0, p))


def _dzdt(z: float, state0: SharpState1D, p: OracleParams) -> float:
    if not 0.0 < z < state0.length:
        raise InterfaceExitedDomain(f"interface left the bar at z = {z}")
    s = SharpState1D(z, state0.phase2_on_left, state0.U1, state0.length)
    return state0.orientation * sharp_speed_1d(s, p)


def evolve_sharp_1d(state0: SharpState1D, p: OracleParams, t_span: tuple[float, float],
                    n_steps: int = 10_000, t_eval=None) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 integration of the bar interface position.

    Returns ``(t, z)`` on ``t_eval`` if given (the RK4 step is chosen so
    every requested time is hit exactly), otherwise on the uniform RK4 grid.
    """
    t0, t1 = map(float, t_span)
    if t_eval is None:
        t_eval = np.linspace(t0, t1, n_steps + 1)
        per = 1
    else:
        t_eval = np.asarray(t_eval, dtype=float)
        per = max(1, int(np.ceil(n_steps / max(len(t_eval) - 1, 1))))
    z = state0.z
    out = [z]
    for ta, tb in zip(t_eval[:-1], t_eval[1:]):
        h = (tb - ta) / per
        for _ in range(per):
            k1 = _dzdt(z, state0, p)
            k2 = _dzdt(z + 0.5 * h * k1, state0, p)
            k3 = _dzdt(z + 0.5 * h * k2, state0, p)
            k4 = _dzdt(z + h * k3, state0, p)
            z = z + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        if not 0.0 < z < state0.length:
            raise InterfaceExitedDomain(f"interface left the bar at t = {tb}")
        out.append(z)
    return t_eval, np.asarray(out)


def bar_closed_form(state0: SharpState1D, p: OracleParams, t):
    """Exact ``z(t) = z_inf + (z0 - z_inf) exp(-c_hat eps_bar^2 D t / L)`` (E = 0)."""
    D = p.material.tensor.D
    eb = p.material.eps_bar[0]
    L = state0.length
    if eb == 0.0:
        return np.full_like(np.asarray(t, dtype=float), state0.z)
    z_inf = state0.U1 / eb if state0.phase2_on_left else L - state0.U1 / eb
    rate = p.c_hat * eb * eb * D / L
    return z_inf + (state0.z - z_inf) * np.exp(-rate * np.asarray(t, dtype=float))


def circle_vanishing_time(R0: float, p: OracleParams) -> float:
    rate = 2.0 * p.c_hat * p.c1 * p.E
    return np.inf if rate == 0 else R0 * R0 / rate


def shrinking_circle(R0: float, p: OracleParams, t):
    """Radius ``sqrt(R0^2 - 2 c_hat c1 E t)`` of a phase-2 disc.

    Raises:
        CircleVanished: for ``t >= R0^2 / (2 c_hat c1 E)``.
    """
    t = np.asarray(t, dtype=float)
    R2 = R0 * R0 - 2.0 * p.c_hat * p.c1 * p.E * t
    if np.any(R2 <= 0):
        raise CircleVanished(f"circle vanished before t = {float(np.max(t))}")
    return np.sqrt(R2)


class BarOracle:
    """Sharp speed for the current phase-field interface of the bar.

    The transmission problem is re-solved with the interface placed at each
    measured level-set position.
    """

    geometry = "bar1d"

    def __init__(self, p: OracleParams, U1: float, phase2_on_left: bool = True, length: float = 1.0, origin: float = 0.0):
        self.p = p
        self.U1 = U1
        self.phase2_on_left = phase2_on_left
        self.length = length
        self.origin = origin

    def speeds(self, level_set: LevelSet) -> np.ndarray:
        out = []
        for x in np.atleast_2d(level_set.positions)[:, 0]:
            st = SharpState1D(float(x - self.origin), self.phase2_on_left, self.U1, self.length)
            out.append(sharp_speed_1d(st, self.p))
        return np.asarray(out)


class CircleOracle:
    """Curvature-driven sharp speed of a disc, radius fitted to the samples."""

    geometry = "circle2d"

    def __init__(self, p: OracleParams, center=(0.0, 0.0)):
        self.p = p
        self.center = np.asarray(center, dtype=float)

    def radius(self, positions: np.ndarray, weights: np.ndarray | None = None) -> float:
        r = np.linalg.norm(np.atleast_2d(positions) - self.center, axis=1)
        return float(np.average(r, weights=weights))

    def speeds(self, level_set: LevelSet) -> np.ndarray:
        R = self.radius(level_set.positions, level_set.lengths)
        s = self.p.c_hat * self.p.E * self.p.c1 / R
        return np.full(len(level_set), s)
