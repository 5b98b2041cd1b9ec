"""Embedding of coarse DG functions into the next finer level and its adjoint."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh, build_mesh
from .space import node_coordinates, tabulate

# Child offsets (a, b) in the order used by Mesh.children.
CHILD_OFFSETS = ((0, 0), (1, 0), (0, 1), (1, 1))


@lru_cache(maxsize=None)
def embedding_matrices(p: int) -> np.ndarray:
    """Local matrices ``E[k]`` mapping parent coefficients to child ``k``.

    ``E[k][i, j]`` is parent basis function ``j`` evaluated at node ``i``
    of child ``k``; exact because the spaces are nested.
    """
    nodes = node_coordinates(p)
    mats = []
    for a, b in CHILD_OFFSETS:
        pts = (nodes + np.array([a, b])) / 2.0
        values, _ = tabulate(p, pts)
        mats.append(values)
    out = np.array(mats)
    out.setflags(write=False)
    return out


def child_indices(coarse: Mesh) -> np.ndarray:
    """Fine cell index of every child, shape ``(ncoarse, 4)``."""
    i, j = coarse.ij[:, 0], coarse.ij[:, 1]
    nf = 2 * coarse.n
    return np.stack([(2 * j + b) * nf + 2 * i + a for a, b in CHILD_OFFSETS], axis=1)


class TransferPair:
    """Prolongation ``E`` from ``coarse_level`` to ``coarse_level + 1`` and restriction ``E^T``.

    Prolongation acts on coefficient (primal) vectors, restriction on
    assembled functionals such as residuals.
    """

    def __init__(self, coarse_level, degree: int = 1, groups: int = 1):
        self.coarse = coarse_level if isinstance(coarse_level, Mesh) else build_mesh(coarse_level)
        self.degree = degree
        self.groups = groups
        self.nloc = (degree + 1) ** 2
        self.local = embedding_matrices(degree)
        self.children = child_indices(self.coarse)

    @property
    def coarse_level(self) -> int:
        return self.coarse.level

    @property
    def fine_level(self) -> int:
        return self.coarse.level + 1

    @property
    def coarse_size(self) -> int:
        return self.coarse.ncells * self.groups * self.nloc

    @property
    def fine_size(self) -> int:
        return 4 * self.coarse_size

    def prolongate(self, v: np.ndarray) -> np.ndarray:
        if v.shape != (self.coarse_size,):
            raise ValueError(
                f"expected a level-{self.coarse_level} vector of length {self.coarse_size}, got {v.shape}"
            )
        nc = self.coarse.ncells
        V = v.reshape(nc, self.groups, self.nloc)
        out = np.empty((4 * nc, self.groups, self.nloc))
        for k in range(4):
            out[self.children[:, k]] = V @ self.local[k].T
        return out.reshape(-1)

    def restrict(self, r: np.ndarray) -> np.ndarray:
        if r.shape != (self.fine_size,):
            raise ValueError(
                f"expected a level-{self.fine_level} vector of length {self.fine_size}, got {r.shape}"
            )
        nc = self.coarse.ncells
        R = r.reshape(4 * nc, self.groups, self.nloc)
        out = np.zeros((nc, self.groups, self.nloc))
        for k in range(4):
            out += R[self.children[:, k]] @ self.local[k]
        return out.reshape(-1)

    def to_sparse(self) -> sp.csr_matrix:
        """The embedding as an explicit ``fine x coarse`` matrix."""
        if self.coarse_size > 4096:
            raise ValueError("explicit embedding only supported for small levels")
        cols = np.eye(self.coarse_size)
        return sp.csr_matrix(np.column_stack([self.prolongate(c) for c in cols]))

