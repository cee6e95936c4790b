import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridpf.errors import CircleVanished, InterfaceExitedDomain
from hybridpf.grid import Grid, extract_level_set
from hybridpf.materials import ElasticityTensor, MaterialSet
from hybridpf.sharp_oracle import (
    BarOracle, CircleOracle, CircleState, OracleParams, SharpState1D, bar_closed_form,
    circle_vanishing_time, evolve_sharp_1d, kinetic_speed, sharp_speed_1d, shrinking_circle,
    transmission_1d,
)

BAR = MaterialSet(eigenstrain=(1.0,))
C1 = math.sqrt(2) / 6
DISC_MAT = MaterialSet(tensor=ElasticityTensor.isotropic(1.0, 1.0), eigenstrain=(0.0, 0.0, 0.0))


def test_state_invariants():
    with pytest.raises(InterfaceExitedDomain):
        SharpState1D(1.2)
    with pytest.raises(CircleVanished):
        CircleState(0.0)
    with pytest.raises(ValueError):
        OracleParams(BAR, c_hat=0.0)
    with pytest.raises(ValueError):
        OracleParams(BAR, E=-1.0)
    assert OracleParams(BAR).c1 == pytest.approx(C1)


def test_transmission_examples():
    assert transmission_1d(SharpState1D(0.25, U1=0.5), BAR)[0] == pytest.approx(0.25)
    assert transmission_1d(SharpState1D(0.4, U1=0.4), BAR)[0] == pytest.approx(0.0, abs=1e-15)
    for z in (0.1, 0.3, 0.7):
        assert transmission_1d(SharpState1D(z, U1=0.0), BAR)[0] == pytest.approx(-z)
    # phase 2 on the right occupies (z, 1)
    assert transmission_1d(SharpState1D(0.75, False, U1=0.5), BAR)[0] == pytest.approx(0.25)


def test_kinetic_speed_examples():
    assert kinetic_speed(0.0, 0.0, OracleParams(BAR)) == 0.0
    assert kinetic_speed(0.25, 0.0, OracleParams(BAR)) == pytest.approx(-0.25)
    p = OracleParams(DISC_MAT, 1.0, 0.1, C1)
    assert kinetic_speed(np.zeros(3), -4.0, p) == pytest.approx(-0.0942809, abs=1e-7)


def test_evolve_equilibrium_is_constant():
    p = OracleParams(BAR)
    t, z = evolve_sharp_1d(SharpState1D(0.5, U1=0.5), p, (0.0, 2.0), n_steps=100)
    assert np.all(z == 0.5)


def test_bar_trajectory_matches_closed_form():
    p = OracleParams(BAR)
    s0 = SharpState1D(0.25, U1=0.5)
    t, z = evolve_sharp_1d(s0, p, (0.0, 3.0), t_eval=np.linspace(0, 3, 31))
    assert np.max(np.abs(z - (0.5 - 0.25 * np.exp(-t)))) <= 1e-8
    assert np.max(np.abs(z - bar_closed_form(s0, p, t))) <= 1e-8


@given(st.floats(0.05, 0.95), st.floats(0.1, 0.9), st.floats(0.2, 3.0), st.booleans())
@settings(max_examples=15, deadline=None)
def test_rk4_matches_closed_form_and_approaches_monotonically(z0, U1, c_hat, left):
    p = OracleParams(BAR, c_hat=c_hat)
    s0 = SharpState1D(z0, left, U1)
    t, z = evolve_sharp_1d(s0, p, (0.0, 1.0), n_steps=2000)
    assert np.max(np.abs(z - bar_closed_form(s0, p, t))) <= 1e-8
    z_inf = U1 if left else 1 - U1
    gap = np.abs(z - z_inf)
    if gap[0] > 1e-12:
        assert np.all(np.diff(gap) < 0)


def test_halving_c_hat_halves_initial_speed():
    s0 = SharpState1D(0.25, U1=0.5)
    a = sharp_speed_1d(s0, OracleParams(BAR, c_hat=1.0))
    b = sharp_speed_1d(s0, OracleParams(BAR, c_hat=0.5))
    assert b == pytest.approx(a / 2)


@given(st.floats(0.05, 0.95), st.floats(-0.5, 1.5), st.floats(0.1, 5), st.booleans())
def test_sharp_dissipation_nonnegative(z, U1, c_hat, left):
    p = OracleParams(BAR, c_hat=c_hat)
    s0 = SharpState1D(z, left, U1)
    T, mean = transmission_1d(s0, BAR)
    s = sharp_speed_1d(s0, p)
    assert s * (-BAR.eps_bar[0] * mean) >= 0


def test_interface_exit_detected():
    # U1 = 1.5 drives phase 2 toward z = 1.5, outside the bar
    with pytest.raises(InterfaceExitedDomain):
        evolve_sharp_1d(SharpState1D(0.5, U1=1.5), OracleParams(BAR), (0.0, 5.0), n_steps=1000)


def test_shrinking_circle_examples():
    p = OracleParams(DISC_MAT, 1.0, 0.1, C1)
    tstar = circle_vanishing_time(0.3, p)
    assert tstar == pytest.approx(1.90919, abs=1e-5)
    assert shrinking_circle(0.3, p, 0.0) == pytest.approx(0.3)
    assert shrinking_circle(0.3, p, tstar / 2) == pytest.approx(0.212132, abs=1e-6)
    with pytest.raises(CircleVanished):
        shrinking_circle(0.3, p, tstar)
    assert circle_vanishing_time(0.3, OracleParams(DISC_MAT)) == math.inf


def test_circle_radius_satisfies_curvature_flow():
    p = OracleParams(DISC_MAT, 0.7, 0.2, C1)
    t = np.linspace(0, 0.5 * circle_vanishing_time(0.25, p), 50)
    R = shrinking_circle(0.25, p, t)
    dR = np.gradient(R, t, edge_order=2)
    assert np.allclose(dR, -kinetic_speed(np.zeros(3), 1 / R, p), rtol=1e-3)


def test_bar_oracle_on_level_set():
    g = Grid.uniform(1, 101)
    S = 0.5 * (1 + np.tanh(20 * (0.25 - g.coords(0))))
    oracle = BarOracle(OracleParams(BAR), U1=0.5)
    ls = extract_level_set(g, S)
    assert oracle.speeds(ls)[0] == pytest.approx(-0.25, abs=1e-6)


def test_circle_oracle_on_level_set():
    g = Grid.uniform(2, 129, extent=1.0, origin=-0.5)
    X, Y = g.mesh()
    S = 0.5 * (1 + np.tanh(25 * (0.3 - np.hypot(X, Y))))
    p = OracleParams(DISC_MAT, 1.0, 0.1)
    s = CircleOracle(p).speeds(extract_level_set(g, S))
    assert np.allclose(s, p.E * p.c1 / 0.3, rtol=1e-3)
