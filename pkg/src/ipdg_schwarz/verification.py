"""Property and oracle checks that can be run from the command line.

Each suite returns a list of :class:`Check` entries; a failing property is
reported, never raised.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import oracles
from .assembly import ProblemParams, assemble_operator, assemble_rhs
from .precond import TwoLevel, VCycle, assemble_levels
from .reaction import make_model
from .space import tabulate
from .transfer import TransferPair


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.suite}: {self.name}" + (f" ({self.detail})" if self.detail else "")


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.abs(b).max(), 1e-300)
    return float(np.abs(a - b).max() / scale)


def _models():
    yield make_model("zero", 1.0, 1)
    for eps in (1.0, 0.1, 0.01):
        yield make_model("two_group", eps, 2)
        for G in (2, 5):
            yield make_model("contrast", eps, G)
            yield make_model("spatial_contrast", eps, G)


def reaction_suite(npoints: int = 1000, seed: int = 0) -> list[Check]:
    """Singular M-matrix structure of every model at random points."""
    rng = np.random.default_rng(seed)
    x, y = rng.random(npoints), rng.random(npoints)
    out = []
    for model in _models():
        S = model.sigma(x, y)
        scale = max(np.abs(S).max(), 1.0)
        off = S.copy()
        idx = np.arange(model.groups)
        off[:, idx, idx] = 0.0
        eig = np.linalg.eigvalsh(S)
        checks = {
            "symmetric": np.abs(S - S.transpose(0, 2, 1)).max() <= 1e-14 * scale,
            "zero column sums": np.abs(S.sum(axis=1)).max() <= 1e-12 * scale,
            "nonpositive off-diagonal": off.max() <= 0.0,
            "positive semidefinite": eig.min() >= -1e-12 * scale,
            "ones in kernel": np.abs(S @ np.ones(model.groups)).max() <= 1e-12 * scale,
        }
        out += [Check("reaction", f"{model.label} {k}", bool(v)) for k, v in checks.items()]
    return out


def transfer_suite(seed: int = 0) -> list[Check]:
    """Adjointness, agreement with the interpolation oracle and nestedness."""
    rng = np.random.default_rng(seed)
    out = []
    for G in (1, 2):
        for level in range(4):
            T = TransferPair(level, 1, G)
            v = rng.standard_normal(T.coarse_size)
            r = rng.standard_normal(T.fine_size)
            lhs = T.prolongate(v) @ r
            rhs = v @ T.restrict(r)
            err = abs(lhs - rhs) / (np.linalg.norm(v) * np.linalg.norm(r))
            out.append(Check("transfer", f"adjoint level {level} G={G}", err <= 1e-13, f"{err:.1e}"))
        for level in range(3):
            E = TransferPair(level, 1, G).to_sparse().toarray()
            err = _rel(E, oracles.embedding_matrix(level, 1, G))
            out.append(Check("transfer", f"oracle level {level} G={G}", err <= 1e-14, f"{err:.1e}"))
    # the embedded function agrees with the coarse one at random points
    T = TransferPair(2, 1, 1)
    v = rng.standard_normal(T.coarse_size)
    w = T.prolongate(v)
    pts = rng.random((200, 2))
    worst = 0.0
    fine_n, coarse_n = 8, 4
    for x, y in pts:
        vals = []
        for n, coef in ((coarse_n, v), (fine_n, w)):
            i, j = min(int(x * n), n - 1), min(int(y * n), n - 1)
            c = j * n + i
            phi, _ = tabulate(1, [[x * n - i, y * n - j]])
            vals.append(phi[0] @ coef[4 * c : 4 * c + 4])
        worst = max(worst, abs(vals[0] - vals[1]))
    out.append(Check("transfer", "embedding preserves functions", worst <= 1e-13, f"{worst:.1e}"))
    return out


def assembly_oracle_suite() -> list[Check]:
    """Operator and load vector against the entry-by-entry oracle on levels 0 and 1."""
    out = []
    cases = [
        make_model("zero", 1.0, 1),
        make_model("two_group", 0.1, 2),
        make_model("contrast", 0.1, 5),
        make_model("spatial_contrast", 0.1, 5),
    ]
    for model in cases:
        params = ProblemParams(model)
        for level in (0, 1):
            A = assemble_operator(level, params).to_dense()
            ref = oracles.ipdg_matrix(
                level, model.at, model.groups, params.degree, params.penalty, params.nquad
            )
            err = _rel(A, ref)
            out.append(Check("assembly_oracle", f"{model.label} level {level}", err <= 1e-12, f"{err:.1e}"))
        source = np.arange(1.0, model.groups + 1)
        err = _rel(assemble_rhs(1, params, source), oracles.load_vector(1, source, 1, params.nquad))
        out.append(Check("assembly_oracle", f"{model.label} load vector", err <= 1e-12, f"{err:.1e}"))
    A = assemble_operator(2, ProblemParams(make_model("contrast", 0.1, 3))).to_dense()
    out.append(Check("assembly_oracle", "symmetric level 2", np.abs(A - A.T).max() <= 1e-12 * np.abs(A).max()))
    return out


def scaling_suite(samples: int = 20, seed: int = 0) -> list[Check]:
    """``a_H(v, v) = (h/H) a_h(E v, E v)`` for piecewise constant ``v`` without reaction."""
    rng = np.random.default_rng(seed)
    params = ProblemParams(make_model("zero", 1.0, 1))
    out = []
    for coarse in (0, 1, 2, 3):
        A_H = assemble_operator(coarse, params)
        A_h = assemble_operator(coarse + 1, params)
        T = TransferPair(coarse, 1, 1)
        worst = 0.0
        for _ in range(samples):
            v = np.repeat(rng.standard_normal(A_H.mesh.ncells), 4)
            w = T.prolongate(v)
            lhs = v @ (A_H @ v)
            rhs = 0.5 * (w @ (A_h @ w))
            worst = max(worst, abs(lhs - rhs) / abs(lhs))
        out.append(Check("scaling", f"levels {coarse}/{coarse + 1}", worst <= 1e-12, f"{worst:.1e}"))
    return out


def _dense_setup(finest: int, groups: int = 3, eps: float = 0.1):
    params = ProblemParams(make_model("contrast", eps, groups))
    ops = assemble_levels(finest, params)
    dense = [op.to_dense() for op in ops]
    embeds = [oracles.embedding_matrix(level, 1, groups) for level in range(finest)]
    return ops, dense, embeds, groups * 4


def twolevel_oracle_suite(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    ops, dense, embeds, block = _dense_setup(2)
    out = []
    for fine in (1, 2):
        for kind in ("additive", "hybrid", "multiplicative"):
            placements = ("pre_post", "post", "pre") if kind == "multiplicative" else ("pre_post",)
            for sweeps in placements:
                P = TwoLevel(ops[fine], ops[fine - 1], kind, sweeps=sweeps)
                M = oracles.two_level_matrix(dense[fine], dense[fine - 1], embeds[fine - 1], kind, block, sweeps)
                R = rng.standard_normal((dense[fine].shape[0], 3))
                got = np.column_stack([P(r) for r in R.T])
                err = _rel(got, M @ R)
                name = f"{kind} {sweeps} levels ({fine},{fine - 1})"
                out.append(Check("twolevel_oracle", name, err <= 1e-10, f"{err:.1e}"))
    return out


def vcycle_oracle_suite(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    ops, dense, embeds, block = _dense_setup(2)
    out = []
    for finest in (1, 2):
        for smoother in ("additive", "multiplicative"):
            for m in (1, 2):
                V = VCycle(ops[: finest + 1], smoother, m=m)
                M = oracles.vcycle_matrix(dense[: finest + 1], embeds[:finest], smoother, block, m)
                R = rng.standard_normal((dense[finest].shape[0], 3))
                got = np.column_stack([V(r) for r in R.T])
                err = _rel(got, M @ R)
                name = f"{smoother} m={m} finest level {finest}"
                out.append(Check("vcycle_oracle", name, err <= 1e-10, f"{err:.1e}"))
    return out


SUITES: dict[str, Callable[[], list[Check]]] = {
    "reaction": reaction_suite,
    "transfer": transfer_suite,
    "assembly_oracle": assembly_oracle_suite,
    "scaling": scaling_suite,
    "twolevel_oracle": twolevel_oracle_suite,
    "vcycle_oracle": vcycle_oracle_suite,
}


def verify(suite: str = "all") -> list[Check]:
    """Run one suite by name, or every suite for ``"all"``."""
    if suite == "all":
        return [c for run in SUITES.values() for c in run()]
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)} or 'all'")
    return SUITES[suite]()
