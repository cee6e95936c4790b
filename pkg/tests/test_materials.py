import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridpf.materials import (
    DoubleWell, ElasticityTensor, KineticFunction, MaterialSet, c1_of, ddot, dW_dS, psi_hat,
    psi_hat_prime, stored_energy, stress,
)

iso = ElasticityTensor.isotropic(1.3, 0.7)


def test_double_well_examples():
    w = DoubleWell(1.0)
    assert psi_hat(w, 0.0) == 0 and psi_hat(w, 1.0) == 0
    assert psi_hat(w, 0.5) == pytest.approx(0.0625)
    assert psi_hat_prime(w, 0.5) == 0


@given(st.floats(-2, 3), st.floats(0.1, 10))
def test_psi_prime_matches_finite_difference(r, a):
    w = DoubleWell(a)
    d = 1e-5
    fd = (w.psi(r + d) - w.psi(r - d)) / (2 * d)
    assert fd == pytest.approx(float(w.psi_prime(r)), abs=1e-6 * a)


@given(st.floats(-3.0, 4.0))
def test_psi_nonnegative(r):
    assert float(DoubleWell(2.0).psi(r)) >= 0


@given(st.floats(1e-6, 1 - 1e-6))
def test_psi_positive_between_wells(r):
    assert float(DoubleWell(2.0).psi(r)) > 0


def test_max_curvature_bounds_samples():
    w = DoubleWell(1.5)
    r = np.linspace(-0.1, 1.1, 1001)
    assert w.max_curvature() >= np.max(np.abs(w.psi_second(r))) - 1e-12


@pytest.mark.parametrize("a, expected", [(1.0, math.sqrt(2) / 6), (2.0, 2 / 6)])
def test_c1_examples(a, expected):
    assert c1_of(DoubleWell(a)) == pytest.approx(expected, abs=1e-10)


@given(st.floats(0.01, 100))
def test_c1_scaling(a):
    assert c1_of(DoubleWell(4 * a)) == pytest.approx(2 * c1_of(DoubleWell(a)), rel=1e-10)


def test_material_c1_property():
    assert MaterialSet(DoubleWell(3.0)).c1 == pytest.approx(math.sqrt(6) / 6, abs=1e-10)


def test_tensor_validation():
    with pytest.raises(ValueError):
        ElasticityTensor(dim=1, D=0.0)
    with pytest.raises(ValueError):
        ElasticityTensor.isotropic(-1.0, 0.5)
    with pytest.raises(ValueError):
        MaterialSet(tensor=iso, eigenstrain=(1.0,))


def test_stored_energy_1d_example():
    ms = MaterialSet(eigenstrain=(1.0,))
    assert stored_energy(ms, 0.5, 0.0) == pytest.approx(0.125)
    assert stress(ms, 0.5, 0.0)[0] == pytest.approx(0.5)
    assert dW_dS(ms, 0.5, 0.0) == pytest.approx(-0.5)


@given(st.floats(0, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_stress_free_when_strain_equals_eigenstrain(S, a, b, c):
    ms = MaterialSet(tensor=iso, eigenstrain=(a, b, c))
    eps = np.array([a, b, c]) * S
    assert abs(ms.stored_energy(eps, S)) < 1e-14
    assert np.allclose(ms.stress(eps, S), 0.0)
    assert abs(ms.dW_dS(eps, S)) < 1e-14


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.floats(-0.5, 1.5))
def test_stored_energy_nonnegative_and_dW_dS_derivative(eps, S):
    ms = MaterialSet(tensor=iso, eigenstrain=(0.1, -0.05, 0.02))
    eps = np.array(eps)
    assert ms.stored_energy(eps, S) >= 0
    d = 1e-6
    fd = (ms.stored_energy(eps, S + d) - ms.stored_energy(eps, S - d)) / (2 * d)
    assert fd == pytest.approx(float(ms.dW_dS(eps, S)), abs=1e-8)


def test_shear_counts_twice_in_double_contraction():
    A = np.array([0.0, 0.0, 1.0])
    assert ddot(A, A, 2) == 2.0


def test_plane_strain_isotropic_stress():
    ms = MaterialSet(tensor=iso, eigenstrain=(0.0, 0.0, 0.0))
    T = ms.stress(np.array([0.1, 0.0, 0.05]), 0.0)
    lam, mu = 1.3, 0.7
    assert T == pytest.approx([(lam + 2 * mu) * 0.1, lam * 0.1, 2 * mu * 0.05])


def test_eigen_stiffness():
    ms = MaterialSet(tensor=iso, eigenstrain=(0.1, 0.1, 0.0))
    assert ms.eigen_stiffness == pytest.approx(4 * (1.3 + 0.7) * 0.01)
    assert MaterialSet(eigenstrain=(2.0,)).eigen_stiffness == pytest.approx(4.0)


def test_kinetic_sign_property():
    r = np.linspace(-10, 10, 1000)
    for f in (KineticFunction(0.7), KineticFunction(fn=lambda x: x ** 3 + np.tanh(x))):
        assert np.all(r * f(r) >= 0)
    assert KineticFunction(2.0).is_linear and KineticFunction(2.0).slope_bound() == 2.0
    assert KineticFunction(fn=np.tanh).slope_bound() == pytest.approx(1.0, abs=1e-3)
