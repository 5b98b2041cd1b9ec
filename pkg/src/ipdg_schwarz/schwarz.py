"""Nonoverlapping cell-wise Schwarz smoothers.

Each subdomain is one mesh cell, so the local problems are the diagonal
blocks of the assembled operator.  The additive smoother is block Jacobi,
the multiplicative one a single block Gauss-Seidel sweep.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .assembly import BlockOperator

ORDERS = ("lexicographic", "reverse", "redblack")


class SingularBlockError(np.linalg.LinAlgError):
    """A cell block could not be factorized."""


@njit(cache=True)
def _block_gauss_seidel(inv, coupling, eta, neighbors, order, d, damping):
    nc, bs, _ = inv.shape
    G = eta.shape[0]
    nloc = coupling.shape[1]
    z = np.zeros(nc * bs)
    r = np.empty(bs)
    for c in order:
        for k in range(bs):
            r[k] = d[c * bs + k]
        for f in range(4):
            nb = neighbors[c, f]
            if nb < 0:
                continue
            for g in range(G):
                base = nb * bs + g * nloc
                for i in range(nloc):
                    s = 0.0
                    for j in range(nloc):
                        s += coupling[f, i, j] * z[base + j]
                    r[g * nloc + i] -= eta[g] * s
        # z is still zero on cell c, so r is the local residual
        for i in range(bs):
            s = 0.0
            for j in range(bs):
                s += inv[c, i, j] * r[j]
            z[c * bs + i] = damping * s
    return z


def cell_order(mesh, order: str = "lexicographic") -> np.ndarray:
    """Traversal order of the cells for the multiplicative sweep."""
    cells = np.arange(mesh.ncells)
    if order == "lexicographic":
        return cells
    if order == "reverse":
        return cells[::-1].copy()
    if order == "redblack":
        red = (mesh.ij.sum(axis=1) % 2) == 0
        return np.concatenate([cells[red], cells[~red]])
    raise ValueError(f"unknown order {order!r}; choose from {ORDERS}")


class CellBlockSolver:
    """Exact local solves on every cell of one level.

    Parameters
    ----------
    op : BlockOperator
    order : {'lexicographic', 'reverse', 'redblack'}
        Cell order of the multiplicative sweep.  Red-black visits all cells
        with even ``i + j`` first, so each color could be processed in
        parallel.
    damping : float
        Scales every local correction.
    """

    def __init__(self, op: BlockOperator, order: str = "lexicographic", damping: float = 1.0):
        self.op = op
        self.damping = float(damping)
        self.order_name = order
        self.order = cell_order(op.mesh, order)
        try:
            self.inv = np.linalg.inv(op.diag)
        except np.linalg.LinAlgError as err:
            raise SingularBlockError(f"cell block factorization failed on level {op.level}") from err
        if not np.all(np.isfinite(self.inv)):
            raise SingularBlockError(f"cell block factorization failed on level {op.level}")

    @property
    def level(self) -> int:
        return self.op.level

    def apply_additive(self, r: np.ndarray) -> np.ndarray:
        nc, bs = self.inv.shape[:2]
        z = np.matmul(self.inv, r.reshape(nc, bs, 1))[:, :, 0]
        if self.damping != 1.0:
            z *= self.damping
        return z.reshape(-1)

    def apply_multiplicative(self, r: np.ndarray) -> np.ndarray:
        op = self.op
        return _block_gauss_seidel(
            self.inv,
            op.coupling,
            op.eta,
            op.mesh.neighbors,
            self.order,
            np.ascontiguousarray(r, dtype=np.float64),
            self.damping,
        )


class Smoother:
    """A :class:`CellBlockSolver` bound to one kind, callable on residuals."""

    def __init__(self, solver: CellBlockSolver, kind: str):
        if kind not in ("additive", "multiplicative"):
            raise ValueError(f"smoother kind must be 'additive' or 'multiplicative', got {kind!r}")
        self.solver = solver
        self.kind = kind
        self._apply = solver.apply_additive if kind == "additive" else solver.apply_multiplicative

    def __call__(self, r: np.ndarray) -> np.ndarray:
        return self._apply(r)
