"""Quick self-checks run by ``hybridpf validate`` (a few seconds in total)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import evolution as ev
from .diagnostics import fit_slope, free_energy, interface_width
from .elasticity import ElasticProblem, bar_displacement
from .grid import Grid, extract_level_set, gradient, grad_norm_godunov, laplacian
from .harness import effort_from_functions
from .materials import DoubleWell, ElasticityTensor, MaterialSet, c1_of
from .sharp_oracle import OracleParams, SharpState1D, bar_closed_form, evolve_sharp_1d


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def _stencils() -> str:
    g = Grid.uniform(1, 11)
    x = g.coords(0)
    lap = laplacian(g, x * x)[1:-1]
    grad = gradient(g, 2 * x)[0][1:-1]
    g2 = Grid.uniform(2, 12)
    X, Y = g2.mesh()
    lap2 = laplacian(g2, X * X + Y * Y)[1:-1, 1:-1]
    err = max(np.max(np.abs(lap - 2)), np.max(np.abs(grad - 2)), np.max(np.abs(lap2 - 4)))
    assert err < 1e-9, f"stencil error {err:.2e}"
    return f"max stencil error {err:.1e}"


def _godunov() -> str:
    g = Grid.uniform(1, 16)
    S = 3 * g.coords(0)
    for sign in (1.0, -1.0):
        val = grad_norm_godunov(g, S, sign)[1:-1]
        assert np.allclose(val, 3.0, atol=1e-12), "Godunov magnitude on affine data"
    return "affine slope recovered for both signs"


def _surface_constant() -> str:
    c1 = c1_of(DoubleWell(1.0))
    assert abs(c1 - math.sqrt(2) / 6) < 1e-12
    return f"c1 = {c1:.12f}"


def _oracle() -> str:
    p = OracleParams(MaterialSet(eigenstrain=(1.0,)))
    s0 = SharpState1D(0.25)
    t, z = evolve_sharp_1d(s0, p, (0.0, 1.0), t_eval=np.linspace(0, 1, 11))
    err = np.max(np.abs(z - bar_closed_form(s0, p, t)))
    assert err < 1e-8, f"RK4 deviates by {err:.2e}"
    return f"RK4 vs closed form {err:.1e}"


def _bar_fixture(params, nodes=128):
    g = Grid.uniform(1, nodes)
    mat = MaterialSet(eigenstrain=(1.0,))
    prob = ElasticProblem(g, mat, boundary_displacement=bar_displacement(0.5))
    S0 = ev.bar_profile(g, 0.3, params.profile_k(mat.well))
    return prob, ev.initial_state(prob, S0)


def _dissipation(params) -> str:
    prob, st = _bar_fixture(params)
    e0 = free_energy(prob, st.S, st.u, params)
    worst = -math.inf
    for _ in range(50):
        dt = ev.stable_dt(params, prob.grid, prob, st)
        st, info = ev.step(st, prob, params, dt)
        e1 = free_energy(prob, st.S, st.u, params)
        worst = max(worst, (e1 - e0) / max(abs(e0), 1e-300))
        e0 = e1
        assert info.cd_max <= 1e-12, f"Clausius-Duhem residual {info.cd_max:.2e}"
    assert worst <= 1e-9, f"energy rose by {worst:.2e} (relative)"
    return f"max relative energy change {worst:.2e}"


def _bulk_freezing() -> str:
    p = ev.HybridParams(1e-3)
    prob, st = _bar_fixture(p)
    count = 0
    for _ in range(20):
        frozen = frozen_nodes(st.S)
        new, _ = ev.step(st, prob, p, ev.stable_dt(p, prob.grid, prob, st))
        assert np.array_equal(new.S[frozen], st.S[frozen]), "bulk node moved"
        count += int(frozen.sum())
        st = new
    return f"{count} frozen node updates left unchanged"


def frozen_nodes(S: np.ndarray) -> np.ndarray:
    """Nodes at exactly 0 or 1 whose axis neighbours (mirror ghosts included) agree."""
    bulk = (S == 0.0) | (S == 1.0)
    P = np.pad(S, 1, mode="reflect")
    for axis in range(S.ndim):
        for shift in (0, 2):
            sl = [slice(1, -1)] * S.ndim
            sl[axis] = slice(shift, shift + S.shape[axis])
            bulk &= P[tuple(sl)] == S
    return bulk


def _stationary() -> str:
    g = Grid.uniform(1, 256)
    prob = ElasticProblem(g, MaterialSet())
    p = ev.ACParams(0.05, 0.05, 1.0)
    k = p.profile_k(prob.material.well)
    st = ev.initial_state(prob, ev.bar_profile(g, 0.5, k))
    z0 = extract_level_set(g, st.S).positions[0, 0]
    dt = ev.stable_dt(p, g, prob, st)
    for _ in range(100):
        st, _ = ev.step(st, prob, p, dt)
    drift = abs(extract_level_set(g, st.S).positions[0, 0] - z0)
    width = interface_width(g, st.S)
    expect = 2 * math.atanh(0.8) / k
    assert drift <= g.h[0] ** 2, f"drift {drift:.2e}"
    assert abs(width / expect - 1) < 0.05, f"width {width:.4f} vs {expect:.4f}"
    return f"drift {drift:.1e}, width {width:.4f} (profile {expect:.4f})"


def _slope_fit() -> str:
    x = np.array([1e-3, 2e-3, 4e-3, 8e-3])
    fit = fit_slope(x, 3 * x ** 0.5)
    assert abs(fit.slope - 0.5) < 1e-12
    return f"slope {fit.slope:.12f}"


def _synthetic_effort() -> str:
    lattice = [2.0 ** -i for i in range(12)]
    targets = [2 * 2.0 ** -m for m in range(2, 7)]
    p = 2.0
    res = effort_from_functions(targets, lattice, lattice, [4.0 ** -i for i in range(12)],
                                lambda E, F: E + F, math.sqrt, p)
    assert abs(res.ac_fit.slope + 2 * p) < 1e-9 and abs(res.hybrid_fit.slope + p) < 1e-9
    return f"exponents {res.ac_fit.slope:.6f} / {res.hybrid_fit.slope:.6f}"


CHECKS: list[tuple[str, Callable[[], str]]] = [
    ("stencil exactness", _stencils),
    ("Godunov affine data", _godunov),
    ("surface constant c1", _surface_constant),
    ("bar oracle closed form", _oracle),
    ("dissipation, Allen-Cahn", lambda: _dissipation(ev.ACParams(1e-2, 1e-2, 0.2357))),
    ("dissipation, hybrid", lambda: _dissipation(ev.HybridParams(1e-3))),
    ("hybrid bulk freezing", _bulk_freezing),
    ("stationary Allen-Cahn profile", _stationary),
    ("log-log slope fit", _slope_fit),
    ("synthetic effort exponents", _synthetic_effort),
]


def run_checks() -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        try:
            out.append(CheckResult(name, True, fn()))
        except Exception as exc:  # report every failure, keep going
            out.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
    return out
