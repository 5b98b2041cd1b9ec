"""Tensor-product Lagrange basis, Gauss quadrature and the DG dof layout."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss


def nodes_1d(p: int) -> np.ndarray:
    """Equispaced Lagrange nodes on [0, 1]; the midpoint for ``p = 0``."""
    if p < 0:
        raise ValueError(f"degree must be nonnegative, got {p}")
    if p == 0:
        return np.array([0.5])
    return np.linspace(0.0, 1.0, p + 1)


def lagrange_1d(p: int, t) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of the 1D nodal basis at points ``t``.

    Returns two arrays of shape ``(len(t), p + 1)``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = nodes_1d(p)
    k = p + 1
    val = np.ones((t.size, k))
    der = np.zeros((t.size, k))
    for i in range(k):
        for j in range(k):
            if j == i:
                continue
            val[:, i] *= (t - x[j]) / (x[i] - x[j])
        # product rule, one factor differentiated at a time
        for m in range(k):
            if m == i:
                continue
            term = np.full(t.size, 1.0 / (x[i] - x[m]))
            for j in range(k):
                if j != i and j != m:
                    term *= (t - x[j]) / (x[i] - x[j])
            der[:, i] += term
    return val, der


def tabulate(p: int, points) -> tuple[np.ndarray, np.ndarray]:
    """Tensor basis values ``(npts, nloc)`` and reference gradients ``(npts, nloc, 2)``.

    Local node ``ix + (p + 1) * iy`` sits at ``(x_ix, x_iy)``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    vx, dx = lagrange_1d(p, points[:, 0])
    vy, dy = lagrange_1d(p, points[:, 1])
    values = (vy[:, :, None] * vx[:, None, :]).reshape(len(points), -1)
    gx = (vy[:, :, None] * dx[:, None, :]).reshape(len(points), -1)
    gy = (dy[:, :, None] * vx[:, None, :]).reshape(len(points), -1)
    return values, np.stack([gx, gy], axis=-1)


def eval_basis(p: int, point) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate all ``(p+1)**2`` basis functions at one reference point.

    Raises
    ------
    ValueError
        If the point lies outside the reference cell ``[0, 1]^2``.
    """
    point = np.asarray(point, dtype=float)
    if point.shape != (2,):
        raise ValueError(f"expected a 2D point, got shape {point.shape}")
    if np.any(point < 0.0) or np.any(point > 1.0):
        raise ValueError(f"point {point} is outside the reference cell")
    values, grads = tabulate(p, point[None, :])
    return values[0], grads[0]


def node_coordinates(p: int) -> np.ndarray:
    x = nodes_1d(p)
    X, Y = np.meshgrid(x, x)
    return np.stack([X.ravel(), Y.ravel()], axis=1)


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray


def gauss_1d(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on [0, 1]."""
    if n < 1:
        raise ValueError(f"need at least one quadrature point, got {n}")
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def make_quadrature(n: int) -> QuadratureRule:
    """Tensor Gauss rule with ``n`` points per direction on ``[0, 1]^2``."""
    x, w = gauss_1d(n)
    X, Y = np.meshgrid(x, x)
    W = np.outer(w, w)
    return QuadratureRule(np.stack([X.ravel(), Y.ravel()], axis=1), W.ravel())


@dataclass(frozen=True)
class DgSpace:
    """Layout of the vector-valued DG space on one mesh level.

    Global dof index is ``(cell * groups + group) * nloc + node``.
    """

    degree: int
    groups: int
    level: int

    @property
    def nloc(self) -> int:
        return (self.degree + 1) ** 2

    @property
    def dofs_per_cell(self) -> int:
        return self.groups * self.nloc

    @property
    def ncells(self) -> int:
        return 4**self.level

    @property
    def global_dofs(self) -> int:
        return self.ncells * self.dofs_per_cell

    def dof(self, cell, group, node):
        return (cell * self.groups + group) * self.nloc + node

    def split(self, dof):
        """Inverse of :meth:`dof`."""
        cg, node = divmod(dof, self.nloc)
        cell, group = divmod(cg, self.groups)
        return cell, group, node
