"""Singular M-matrix reaction models.

A model provides the reaction matrix ``Sigma(x, y)``, symmetric with zero
row and column sums, and the reaction coefficient ``Sigma / epsilon`` that
multiplies ``u . v`` in the weak form.  For two groups the matrix is
``[[1, -1], [-1, 1]]``; the contrast models carry their own powers of
``epsilon`` inside ``Sigma`` in addition to the overall ``1/epsilon``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

KINDS = ("zero", "two_group", "contrast", "spatial_contrast")

# Powers of 1/epsilon coupling the groups of the five-group contrast model.
# Group index 1 couples to everything with unit strength; the other four
# couple with epsilon**-|rank difference|.
CONTRAST_EXPONENTS = np.array(
    [
        [0, 0, 1, 2, 3],
        [0, 0, 0, 0, 0],
        [1, 0, 0, 1, 2],
        [2, 0, 1, 0, 1],
        [3, 0, 2, 1, 0],
    ]
)


def _with_diagonal(off: np.ndarray) -> np.ndarray:
    """Fill the diagonal with the negative off-diagonal row sums (works on stacks)."""
    sigma = off.copy()
    g = sigma.shape[-1]
    idx = np.arange(g)
    sigma[..., idx, idx] = 0.0
    sigma[..., idx, idx] = -sigma.sum(axis=-1)
    return sigma


@dataclass(frozen=True)
class ReactionModel:
    """Reaction matrix field of a ``G``-group problem.

    Attributes
    ----------
    groups : int
    epsilon : float
    kind : str
    matrix : callable
        ``matrix(x, y)`` returns ``Sigma`` with shape ``x.shape + (G, G)``.
    constant : bool
        Whether ``Sigma`` is independent of position.
    """

    groups: int
    epsilon: float
    kind: str
    matrix: Callable[[np.ndarray, np.ndarray], np.ndarray]
    constant: bool = True

    def sigma(self, x, y) -> np.ndarray:
        return self.matrix(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def __call__(self, x, y) -> np.ndarray:
        """Reaction coefficient ``Sigma(x, y) / epsilon``."""
        return self.sigma(x, y) / self.epsilon

    def at(self, x: float, y: float) -> np.ndarray:
        return self(np.array(x), np.array(y))

    @property
    def label(self) -> str:
        if self.kind == "zero":
            return f"zero(G={self.groups})"
        return f"{self.kind}(G={self.groups}, eps={self.epsilon:g})"


def _constant_model(sigma: np.ndarray, epsilon: float, kind: str) -> ReactionModel:
    sigma = np.array(sigma, dtype=float)
    sigma.setflags(write=False)

    def matrix(x, y):
        shape = np.broadcast(x, y).shape
        return np.broadcast_to(sigma, shape + sigma.shape).copy()

    return ReactionModel(sigma.shape[0], epsilon, kind, matrix, constant=True)


def _check_epsilon(epsilon):
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")


def zero(groups: int = 1) -> ReactionModel:
    if groups < 1:
        raise ValueError(f"need at least one group, got {groups}")
    return _constant_model(np.zeros((groups, groups)), 1.0, "zero")


def two_group(epsilon: float) -> ReactionModel:
    """Two groups exchanging with unit rate; coefficient ``[[1, -1], [-1, 1]] / epsilon``."""
    _check_epsilon(epsilon)
    return _constant_model(np.array([[1.0, -1.0], [-1.0, 1.0]]), epsilon, "two_group")


def contrast_matrix(groups: int, epsilon: float) -> ReactionModel:
    """Top-left ``G x G`` block of the multi-scale contrast matrix.

    Off-diagonal entries of ``Sigma`` are ``-epsilon**(-k)`` with ``k``
    taken from :data:`CONTRAST_EXPONENTS`.
    """
    if not 2 <= groups <= 5:
        raise ValueError(f"contrast model supports 2 <= G <= 5, got {groups}")
    _check_epsilon(epsilon)
    k = CONTRAST_EXPONENTS[:groups, :groups]
    off = -(epsilon ** (-k.astype(float)))
    return _constant_model(_with_diagonal(off), epsilon, "contrast")


def quadrant_weights(x, y) -> np.ndarray:
    """``f_i(x, y)`` for the four quadrants, stacked on the last axis.

    Quadrants are numbered row-major with half-open lower bounds:
    0 = [0,.5)x[0,.5), 1 = [.5,1]x[0,.5), 2 = [0,.5)x[.5,1], 3 = [.5,1]x[.5,1].
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    bump = np.sin(2 * np.pi * x) ** 2 * np.sin(2 * np.pi * y) ** 2
    quadrant = (x >= 0.5).astype(int) + 2 * (y >= 0.5).astype(int)
    shape = np.broadcast(x, y).shape
    out = np.zeros(shape + (4,))
    quadrant = np.broadcast_to(quadrant, shape)
    np.put_along_axis(out, quadrant[..., None], np.broadcast_to(bump, shape)[..., None], axis=-1)
    return out


def spatial_contrast_at(groups: int, epsilon: float, x, y) -> np.ndarray:
    """Contrast matrix with each ``epsilon**(-k)`` coupling scaled by ``f_k(x, y)``."""
    k = CONTRAST_EXPONENTS[:groups, :groups]
    f = quadrant_weights(x, y)
    off = -(epsilon ** (-k.astype(float))) * f[..., k]
    return _with_diagonal(off)


def spatial_contrast(groups: int, epsilon: float) -> ReactionModel:
    if not 2 <= groups <= 5:
        raise ValueError(f"spatial contrast model supports 2 <= G <= 5, got {groups}")
    _check_epsilon(epsilon)

    def matrix(x, y):
        return spatial_contrast_at(groups, epsilon, x, y)

    return ReactionModel(groups, epsilon, "spatial_contrast", matrix, constant=False)


def make_model(kind: str, epsilon: float = 1.0, groups: int | None = None) -> ReactionModel:
    """Build a reaction model by name."""
    if kind == "zero":
        return zero(groups or 1)
    if kind == "two_group":
        if groups not in (None, 2):
            raise ValueError("two_group model has exactly two groups")
        return two_group(epsilon)
    if kind == "contrast":
        return contrast_matrix(groups or 5, epsilon)
    if kind == "spatial_contrast":
        return spatial_contrast(groups or 5, epsilon)
    raise ValueError(f"unknown reaction model {kind!r}; choose from {KINDS}")
