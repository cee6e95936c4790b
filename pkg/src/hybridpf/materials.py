"""Constitutive data: double well, elasticity tensor, eigenstrain, kinetics.

Symmetric tensors are stored by their independent components: a scalar in
1D and ``(xx, yy, xy)`` in 2D, with the component axis first for fields.
Double contraction weights the shear component by two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class DoubleWell:
    """Quartic double well ``a r^2 (1 - r)^2`` with wells at 0 and 1."""

    a: float = 1.0

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("well height a must be positive")

    def psi(self, r):
        r = np.asarray(r, dtype=float)
        return self.a * r * r * (1.0 - r) ** 2

    def psi_prime(self, r):
        r = np.asarray(r, dtype=float)
        return 2.0 * self.a * r * (1.0 - r) * (1.0 - 2.0 * r)

    def psi_second(self, r):
        r = np.asarray(r, dtype=float)
        return 2.0 * self.a * (1.0 - 6.0 * r + 6.0 * r * r)

    def max_curvature(self, lo: float = -0.1, hi: float = 1.1) -> float:
        """Bound of ``|psi''|`` on ``[lo, hi]`` (convex parabola: ends or vertex)."""
        return float(np.max(np.abs(self.psi_second(np.array([lo, hi, 0.5])))))


def psi_hat(well: DoubleWell, r):
    return well.psi(r)


def psi_hat_prime(well: DoubleWell, r):
    return well.psi_prime(r)


def c1_of(well: DoubleWell, panels: int = 64, order: int = 8) -> float:
    """Surface constant ``int_0^1 sqrt(2 psi(r)) dr`` by composite Gauss-Legendre.

    For the quartic well the closed form is ``sqrt(2a)/6``; the quadrature is
    kept general so other wells can be dropped in.
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * np.diff(edges)[:, None]
    r = mid + half * nodes[None, :]
    vals = np.sqrt(2.0 * np.maximum(well.psi(r), 0.0))
    return float(np.sum(half * weights[None, :] * vals))


@dataclass(frozen=True)
class ElasticityTensor:
    """1D modulus ``D`` or 2D isotropic plane-strain Lamé pair."""

    dim: int = 1
    D: float = 1.0
    lam_e: float = 0.0
    mu_e: float = 0.0

    def __post_init__(self):
        if self.dim == 1:
            if self.D <= 0:
                raise ValueError("D must be positive")
        elif self.dim == 2:
            if not (self.mu_e > 0 and self.lam_e + self.mu_e > 0):
                raise ValueError("Lamé pair is not positive definite")
        else:
            raise ValueError("dim must be 1 or 2")

    @classmethod
    def isotropic(cls, lam_e: float, mu_e: float) -> "ElasticityTensor":
        return cls(dim=2, lam_e=lam_e, mu_e=mu_e)

    @cached_property
    def voigt(self) -> np.ndarray:
        """Matrix acting on Voigt strain ``(exx, eyy, 2 exy)``."""
        if self.dim == 1:
            return np.array([[self.D]])
        l, m = self.lam_e, self.mu_e
        return np.array([[l + 2 * m, l, 0.0], [l, l + 2 * m, 0.0], [0.0, 0.0, m]])

    @property
    def ncomp(self) -> int:
        return 1 if self.dim == 1 else 3


def contraction_weights(dim: int) -> np.ndarray:
    return np.array([1.0]) if dim == 1 else np.array([1.0, 1.0, 2.0])


def ddot(A, B, dim: int):
    """``A : B`` for component-first symmetric tensors."""
    w = contraction_weights(dim).reshape((-1,) + (1,) * (np.ndim(A) - 1))
    return np.sum(w * np.asarray(A) * np.asarray(B), axis=0)


def apply_tensor(tensor: ElasticityTensor, eps):
    """``D eps`` for component-first arrays of symmetric tensors."""
    eps = np.asarray(eps, dtype=float)
    w = contraction_weights(tensor.dim).reshape((-1,) + (1,) * (eps.ndim - 1))
    return np.tensordot(tensor.voigt, w * eps, axes=(1, 0))


@dataclass(frozen=True)
class KineticFunction:
    """Kinetic map ``f`` with ``r f(r) >= 0``; linear ``c r`` unless ``fn`` is given."""

    c: float = 1.0
    fn: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.c * r if self.fn is None else np.asarray(self.fn(r), dtype=float)

    @property
    def is_linear(self) -> bool:
        return self.fn is None

    def slope_bound(self, r_max: float = 10.0) -> float:
        """Lipschitz-type bound of ``f`` used for explicit time-step limits."""
        if self.fn is None:
            return self.c
        r = np.linspace(-r_max, r_max, 2001)
        f = self(r)
        return float(np.max(np.abs(np.diff(f) / np.diff(r))))


@dataclass(frozen=True)
class MaterialSet:
    well: DoubleWell = field(default_factory=DoubleWell)
    tensor: ElasticityTensor = field(default_factory=ElasticityTensor)
    eigenstrain: tuple[float, ...] = (0.0,)
    kinetic: KineticFunction = field(default_factory=KineticFunction)

    def __post_init__(self):
        eig = tuple(float(v) for v in np.atleast_1d(self.eigenstrain))
        if len(eig) != self.tensor.ncomp:
            raise ValueError(f"eigenstrain needs {self.tensor.ncomp} components")
        if not np.all(np.isfinite(eig)):
            raise ValueError("eigenstrain must be finite")
        object.__setattr__(self, "eigenstrain", eig)

    @property
    def dim(self) -> int:
        return self.tensor.dim

    @property
    def eps_bar(self) -> np.ndarray:
        return np.asarray(self.eigenstrain)

    @cached_property
    def c1(self) -> float:
        return c1_of(self.well)

    @property
    def has_eigenstrain(self) -> bool:
        return bool(np.any(self.eps_bar != 0.0))

    @cached_property
    def eigen_stiffness(self) -> float:
        """``eps_bar : D eps_bar``, the elastic curvature of ``W`` in ``S``."""
        eb = self.eps_bar
        return float(ddot(eb, apply_tensor(self.tensor, eb), self.dim))

    def _shape_eps(self, eps):
        eps = np.asarray(eps, dtype=float)
        if self.dim == 1 and (eps.ndim == 0 or eps.shape[0] != 1):
            eps = eps[None, ...]
        return eps

    def _eb(self, ndim: int) -> np.ndarray:
        return self.eps_bar.reshape((-1,) + (1,) * (ndim - 1))

    def stress(self, eps, S):
        eps = self._shape_eps(eps)
        elastic = eps - self._eb(eps.ndim) * np.asarray(S, dtype=float)
        T = apply_tensor(self.tensor, elastic)
        return T

    def stored_energy(self, eps, S):
        eps = self._shape_eps(eps)
        elastic = eps - self._eb(eps.ndim) * np.asarray(S, dtype=float)
        return 0.5 * ddot(apply_tensor(self.tensor, elastic), elastic, self.dim)

    def dW_dS(self, eps, S):
        T = self.stress(eps, S)
        return -ddot(self._eb(T.ndim), T, self.dim)


def stored_energy(ms: MaterialSet, eps, S):
    return ms.stored_energy(eps, S)


def stress(ms: MaterialSet, eps, S):
    return ms.stress(eps, S)


def dW_dS(ms: MaterialSet, eps, S):
    return ms.dW_dS(eps, S)
