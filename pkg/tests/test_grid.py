import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridpf.errors import EmptyLevelSet
from hybridpf.grid import (
    Grid, curvature, extract_level_set, gradient, gradient_energy, grad_norm_godunov,
    interpolate, laplacian, level_crossings,
)

coef = st.floats(-5, 5, allow_nan=False)


def test_grid_rejects_small_or_bad_shapes():
    with pytest.raises(ValueError):
        Grid.uniform(1, 7)
    with pytest.raises(ValueError):
        Grid((8, 8, 8), (1, 1, 1))
    with pytest.raises(ValueError):
        Grid((16,), (0.0,))


def test_grid_geometry():
    g = Grid((11, 21), (1.0, 2.0), (-0.5, 0.0))
    assert g.h == pytest.approx((0.1, 0.1))
    assert g.upper == pytest.approx((0.5, 2.0))
    assert g.integrate(np.ones(g.shape)) == pytest.approx(2.0)
    assert g.boundary_mask().sum() == 2 * 11 + 2 * 21 - 4


def test_gradient_examples():
    g = Grid((11,), (1.0,))
    x = g.coords(0)
    assert np.all(gradient(g, np.full(11, 7.0)) == 0)
    assert np.allclose(gradient(g, 2 * x)[0][1:-1], 2.0, atol=1e-13)
    assert gradient(g, x * x)[0][5] == pytest.approx(1.0, abs=1e-13)


def test_gradient_neumann_ghosts_give_zero_boundary_slope():
    g = Grid.uniform(1, 16)
    assert gradient(g, g.coords(0) ** 3)[0][[0, -1]] == pytest.approx([0.0, 0.0])


def test_laplacian_examples():
    g = Grid.uniform(1, 11)
    x = g.coords(0)
    assert np.all(laplacian(g, np.full(11, 3.0)) == 0)
    assert np.allclose(laplacian(g, x * x)[1:-1], 2.0, atol=1e-10)
    g2 = Grid.uniform(2, 13)
    X, Y = g2.mesh()
    assert np.allclose(laplacian(g2, X * X + Y * Y)[1:-1, 1:-1], 4.0, atol=1e-10)


@given(coef, coef, coef, coef, coef, coef)
def test_laplacian_exact_on_quadratics(a, b, c, d, e, f):
    g = Grid((10, 12), (1.0, 1.3), (0.2, -0.4))
    X, Y = g.mesh()
    S = a * X * X + b * Y * Y + c * X * Y + d * X + e * Y + f
    expected = 2 * a + 2 * b
    assert np.allclose(laplacian(g, S)[1:-1, 1:-1], expected, atol=1e-8 * (1 + abs(expected) + abs(f)))


@given(st.floats(-10, 10).filter(lambda v: abs(v) > 1e-3), st.sampled_from([-1.0, 1.0]))
def test_godunov_affine_monotone(slope, sign):
    g = Grid.uniform(1, 20)
    S = slope * g.coords(0)
    assert np.allclose(grad_norm_godunov(g, S, sign)[1:-1], abs(slope), rtol=1e-12)


def test_godunov_examples():
    g = Grid.uniform(1, 21, extent=2.0, origin=-1.0)
    x = g.coords(0)
    assert np.allclose(grad_norm_godunov(g, 3 * x, 1.0)[1:-1], 3.0)
    assert np.all(grad_norm_godunov(g, np.ones(21), -1.0) == 0)
    tent = np.abs(x)
    apex = 10
    # a rising minimum (s < 0, phase 2 advancing) sees unit slope; a falling one is frozen
    assert grad_norm_godunov(g, tent, -1.0)[apex] == pytest.approx(1.0)
    assert grad_norm_godunov(g, tent, 1.0)[apex] == 0.0


def test_godunov_2d_affine():
    g = Grid.uniform(2, 16)
    X, Y = g.mesh()
    val = grad_norm_godunov(g, 3 * X - 4 * Y, np.ones(g.shape))
    assert np.allclose(val[1:-1, 1:-1], 5.0)


@given(st.integers(0, 10_000))
@settings(max_examples=25)
def test_laplacian_is_variational_derivative_of_gradient_energy(seed):
    rng = np.random.default_rng(seed)
    g = Grid((9, 11), (1.0, 1.4))
    S = rng.normal(size=g.shape)
    V = rng.normal(size=g.shape)
    eps = 1e-6
    dE = (gradient_energy(g, S + eps * V) - gradient_energy(g, S - eps * V)) / (2 * eps)
    assert dE == pytest.approx(-np.sum(g.weights() * laplacian(g, S) * V), rel=1e-6, abs=1e-8)


def test_gradient_energy_of_linear_ramp():
    g = Grid.uniform(1, 33)
    assert gradient_energy(g, 2 * g.coords(0)) == pytest.approx(2.0)


def test_level_set_linear_data():
    g = Grid.uniform(1, 11)
    ls = extract_level_set(g, g.coords(0), 0.5)
    assert len(ls) == 1
    assert ls.positions[0, 0] == pytest.approx(0.5)
    assert ls.normals[0, 0] == 1.0
    assert ls.curvatures[0] == 0.0


def _tanh_position_error(n):
    g = Grid.uniform(1, n)
    S = 0.5 * (1 + np.tanh(20 * (g.coords(0) - 0.3)))
    return abs(extract_level_set(g, S, 0.5).positions[0, 0] - 0.3)


def test_level_set_tanh_position_converges_second_order():
    errs = [_tanh_position_error(n) for n in (64, 127, 253)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert errs[-1] < 1e-4
    assert min(orders) >= 1.8


def test_level_set_circle_radius_and_curvature():
    g = Grid.uniform(2, 129, extent=1.0, origin=-0.5)
    X, Y = g.mesh()
    S = np.hypot(X, Y)
    ls = extract_level_set(g, S, 0.25)
    r = np.linalg.norm(ls.positions, axis=1)
    assert np.max(np.abs(r - 0.25)) < 0.5 * g.h[0] ** 2 / 0.25 + 1e-6
    assert np.allclose(np.linalg.norm(ls.normals, axis=1), 1.0, atol=1e-12)
    # S grows outward, so -div(grad S/|grad S|) = -1/r
    assert np.max(np.abs(ls.curvatures + 4.0)) < 0.05
    assert np.sum(ls.lengths) == pytest.approx(2 * math.pi * 0.25, rel=1e-3)


def test_phase2_disc_has_positive_curvature():
    g = Grid.uniform(2, 101, extent=1.0, origin=-0.5)
    X, Y = g.mesh()
    S = 0.5 * (1 + np.tanh(30 * (0.3 - np.hypot(X, Y))))
    ls = extract_level_set(g, S)
    assert np.mean(ls.curvatures) == pytest.approx(1 / 0.3, rel=0.02)
    inward = -ls.positions / np.linalg.norm(ls.positions, axis=1)[:, None]
    assert np.all(np.sum(ls.normals * inward, axis=1) > 0.99)


def test_curvature_zero_in_1d():
    g = Grid.uniform(1, 16)
    assert np.all(curvature(g, np.sin(g.coords(0))) == 0)


def test_empty_level_set_raises():
    g = Grid.uniform(2, 10)
    with pytest.raises(EmptyLevelSet):
        extract_level_set(g, np.zeros(g.shape), 0.5)
    with pytest.raises(EmptyLevelSet):
        extract_level_set(Grid.uniform(1, 10), np.ones(10), 0.5)


def test_marching_squares_saddle_is_deterministic():
    g = Grid.uniform(2, 8)
    S = np.zeros(g.shape)
    S[::2, ::2] = 1.0
    S[1::2, 1::2] = 1.0
    a = extract_level_set(g, S, 0.5)
    b = extract_level_set(g, S.copy(), 0.5)
    assert np.array_equal(a.positions, b.positions)


def test_level_crossings_2d_on_circle():
    g = Grid.uniform(2, 65, extent=1.0, origin=-0.5)
    X, Y = g.mesh()
    pts = level_crossings(g, np.hypot(X, Y), 0.3)
    assert np.allclose(np.linalg.norm(pts, axis=1), 0.3, atol=g.h[0] ** 2)


def test_interpolate_bilinear_exact_and_clamped():
    g = Grid.uniform(2, 9)
    X, Y = g.mesh()
    vals = np.stack([2 * X + Y, X - Y])
    pts = np.array([[0.31, 0.77], [1.5, -2.0]])
    out = interpolate(g, vals, pts)
    assert out.shape == (2, 2)
    assert out[0] == pytest.approx([2 * 0.31 + 0.77, 0.31 - 0.77])
    assert out[1] == pytest.approx([2.0, 1.0])  # clamped to (1, 0)
