"""Two-level Schwarz and multigrid V-cycle preconditioners.

All preconditioners map a residual (dual vector) to a correction (primal
vector) and are linear, so they can be used inside right-preconditioned
GMRES.  Coarse operators are rediscretized on the coarse mesh rather than
formed as Galerkin products.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .assembly import BlockOperator, ProblemParams, assemble_operator
from .schwarz import CellBlockSolver, Smoother
from .transfer import TransferPair

METHODS = ("none", "2AS", "2HS", "2MS", "MGAS", "MGMS")
TWO_LEVEL_KINDS = ("additive", "hybrid", "multiplicative")
# Where the multiplicative two-level method places its cell sweeps relative
# to the coarse correction.  "post" is the single sweep after a coarse
# correction, (I - P_N)...(I - P_1)(I - P_0).
SWEEP_PLACEMENTS = ("pre_post", "post", "pre")

_DENSE_LIMIT = 2000


class DirectSolver:
    """Exact solve with an assembled operator: dense LU when small, sparse LU otherwise."""

    def __init__(self, op: BlockOperator):
        self.op = op
        n = op.shape[0]
        if n <= _DENSE_LIMIT:
            self._lu = scipy.linalg.lu_factor(op.to_dense())
            self._solve = lambda r: scipy.linalg.lu_solve(self._lu, r)
        else:
            self._lu = spla.splu(op.to_sparse().tocsc())
            self._solve = self._lu.solve

    def __call__(self, r: np.ndarray) -> np.ndarray:
        return self._solve(r)


class TwoLevel:
    """Two-level nonoverlapping Schwarz preconditioner.

    Parameters
    ----------
    fine, coarse : BlockOperator
        Operators on levels ``L`` and ``L - 1``.
    kind : {'additive', 'hybrid', 'multiplicative'}
    smoother : callable, optional
        Replaces the cell-block smoother (block Jacobi for additive and
        hybrid, block Gauss-Seidel for multiplicative).
    sweeps : {'pre_post', 'post', 'pre'}
        For the multiplicative method: one Gauss-Seidel sweep before and one
        after the coarse correction (default), a single sweep after it, or
        a single sweep before it.
    order : str
        Cell order of the Gauss-Seidel sweep.
    """

    def __init__(
        self,
        fine: BlockOperator,
        coarse: BlockOperator,
        kind: str = "additive",
        smoother: Callable[[np.ndarray], np.ndarray] | None = None,
        sweeps: str = "pre_post",
        order: str = "lexicographic",
    ):
        if kind not in TWO_LEVEL_KINDS:
            raise ValueError(f"unknown two-level kind {kind!r}; choose from {TWO_LEVEL_KINDS}")
        if sweeps not in SWEEP_PLACEMENTS:
            raise ValueError(f"unknown sweep placement {sweeps!r}; choose from {SWEEP_PLACEMENTS}")
        if coarse.level != fine.level - 1:
            raise ValueError(f"coarse level {coarse.level} does not match fine level {fine.level}")
        self.fine = fine
        self.coarse = coarse
        self.kind = kind
        self.sweeps = sweeps
        self.transfer = TransferPair(coarse.mesh, fine.space.degree, fine.space.groups)
        self.coarse_solve = DirectSolver(coarse)
        if smoother is None:
            solver = CellBlockSolver(fine, order=order)
            smoother = Smoother(solver, "multiplicative" if kind == "multiplicative" else "additive")
        self.smoother = smoother

    def coarse_correction(self, r: np.ndarray) -> np.ndarray:
        T = self.transfer
        return T.prolongate(self.coarse_solve(T.restrict(r)))

    def __call__(self, r: np.ndarray) -> np.ndarray:
        A, B = self.fine, self.smoother
        if self.kind == "additive":
            return self.coarse_correction(r) + B(r)
        if self.kind == "multiplicative" and self.sweeps == "post":
            x = self.coarse_correction(r)
            x += B(r - A @ x)
            return x
        # smooth, coarse-correct, smooth
        x = B(r)
        x += self.coarse_correction(r - A @ x)
        if self.kind == "hybrid" or self.sweeps == "pre_post":
            x += B(r - A @ x)
        return x

    apply = __call__


class VCycle:
    """Multigrid V-cycle with cell-wise Schwarz smoothing.

    ``ops[l]`` is the operator on mesh level ``l``; level 0 is solved
    directly.  Each level ``l >= 1`` runs ``m`` pre-smoothing steps, a
    coarse correction through the V-cycle on ``l - 1`` and ``m``
    post-smoothing steps, all starting from a zero initial guess.
    """

    def __init__(
        self,
        ops: Sequence[BlockOperator],
        smoother: str = "additive",
        m: int = 1,
        order: str = "lexicographic",
        damping: float = 1.0,
    ):
        if m < 1:
            raise ValueError(f"need at least one smoothing step, got {m}")
        for level, op in enumerate(ops):
            if op.level != level:
                raise ValueError(f"operator {level} lives on level {op.level}")
        self.ops = list(ops)
        self.m = m
        self.smoother_kind = smoother
        space = ops[0].space
        self.coarsest = DirectSolver(ops[0])
        self.smoothers = [None] + [
            Smoother(CellBlockSolver(op, order=order, damping=damping), smoother) for op in ops[1:]
        ]
        self.transfers = [TransferPair(op.mesh, space.degree, space.groups) for op in ops[:-1]]

    @property
    def finest_level(self) -> int:
        return len(self.ops) - 1

    def apply(self, g: np.ndarray, level: int | None = None) -> np.ndarray:
        level = self.finest_level if level is None else level
        if level == 0:
            return self.coarsest(g)
        A, B, T = self.ops[level], self.smoothers[level], self.transfers[level - 1]
        x = B(g)
        for _ in range(self.m - 1):
            x += B(g - A @ x)
        x += T.prolongate(self.apply(T.restrict(g - A @ x), level - 1))
        for _ in range(self.m):
            x += B(g - A @ x)
        return x

    __call__ = apply


def assemble_levels(max_level: int, params: ProblemParams, min_level: int = 0) -> list[BlockOperator]:
    return [assemble_operator(level, params) for level in range(min_level, max_level + 1)]


def make_preconditioner(
    method: str,
    ops: Sequence[BlockOperator],
    m: int = 1,
    order: str = "lexicographic",
    sweeps: str = "pre_post",
) -> Callable[[np.ndarray], np.ndarray] | None:
    """Build a preconditioner by name.

    ``ops`` holds the operators on levels ``0..L`` (two-level methods use
    only the last two).  Returns ``None`` for ``"none"``.
    """
    if method == "none":
        return None
    if method in ("2AS", "2HS", "2MS"):
        kind = {"2AS": "additive", "2HS": "hybrid", "2MS": "multiplicative"}[method]
        return TwoLevel(ops[-1], ops[-2], kind, sweeps=sweeps, order=order)
    if method in ("MGAS", "MGMS"):
        kind = "additive" if method == "MGAS" else "multiplicative"
        return VCycle(ops, kind, m=m, order=order)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
