"""Preconditioned GMRES."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)

Operator = Callable[[np.ndarray], np.ndarray]

# Reorthogonalize when a Gram-Schmidt pass shrinks the vector by more than this.
_REORTH_RATIO = 0.7


class GmresBreakdown(RuntimeError):
    """Arnoldi broke down before the residual target was reached."""


@dataclass(frozen=True)
class SolveConfig:
    """Stopping and preconditioning options for :func:`gmres`.

    ``restart=None`` keeps the full Krylov basis.  ``side`` is ``"right"``
    (the monitored residual is the true residual) or ``"left"``.
    """

    tol: float = 1e-8
    maxiter: int = 100
    restart: int | None = None
    side: str = "right"

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError(f"tol must lie in (0, 1), got {self.tol}")
        if self.maxiter < 1:
            raise ValueError(f"maxiter must be positive, got {self.maxiter}")
        if self.restart is not None and self.restart < 1:
            raise ValueError(f"restart must be positive, got {self.restart}")
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")


@dataclass
class IterationReport:
    """Outcome of one GMRES run.

    ``residuals[k]`` is the residual norm after ``k`` Arnoldi steps as
    given by the GMRES least-squares recurrence; ``true_residual`` is
    ``||b - A x|| / ||b||`` recomputed from the returned solution.
    """

    iterations: int
    converged: bool
    residuals: list[float] = field(default_factory=list)
    true_residual: float = float("nan")
    breakdown: bool = False
    method: str = ""
    level: int | None = None
    epsilon: float | None = None
    source: str = ""

    @property
    def relative_residuals(self) -> list[float]:
        if not self.residuals or self.residuals[0] == 0:
            return list(self.residuals)
        r0 = self.residuals[0]
        return [r / r0 for r in self.residuals]


def _identity(x):
    return x


def gmres(
    apply_A: Operator,
    b: np.ndarray,
    apply_M: Operator | None = None,
    config: SolveConfig = SolveConfig(),
) -> tuple[np.ndarray, IterationReport]:
    """Solve ``A x = b`` from ``x0 = 0`` with preconditioned GMRES.

    With right preconditioning GMRES minimizes ``||b - A M y||`` and
    returns ``x = M y``; with left preconditioning it minimizes
    ``||M (b - A x)||``.  Convergence is declared once the monitored
    residual drops below ``tol`` times its initial value, which for right
    preconditioning is ``||b||``.  The iteration count is the total number
    of Arnoldi steps, across restarts.

    Raises
    ------
    GmresBreakdown
        If the Krylov space becomes invariant while the residual is still
        above the target.
    """
    M = apply_M or _identity
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, IterationReport(0, True, [0.0], true_residual=0.0)

    if config.side == "right":
        r = b.copy()
    else:
        r = M(b)
    beta = np.linalg.norm(r)
    target = config.tol * beta
    history = [beta]
    total = 0
    converged = False
    broke_down = False
    m = config.restart or config.maxiter

    while total < config.maxiter and not converged:
        steps = min(m, config.maxiter - total)
        V = np.empty((steps + 1, b.size))
        H = np.zeros((steps + 1, steps))
        cs = np.zeros(steps)
        sn = np.zeros(steps)
        s = np.zeros(steps + 1)
        s[0] = beta
        V[0] = r / beta
        k = 0
        for j in range(steps):
            if config.side == "right":
                w = apply_A(M(V[j]))
            else:
                w = M(apply_A(V[j]))
            # operators may hand back their argument; never orthogonalize a basis vector in place
            w = np.array(w, dtype=float, copy=True)
            wnorm0 = np.linalg.norm(w)
            for i in range(j + 1):
                H[i, j] = np.dot(V[i], w)
                w -= H[i, j] * V[i]
            wnorm = np.linalg.norm(w)
            if wnorm < _REORTH_RATIO * wnorm0:
                for i in range(j + 1):
                    c = np.dot(V[i], w)
                    H[i, j] += c
                    w -= c * V[i]
                wnorm = np.linalg.norm(w)
            H[j + 1, j] = wnorm
            for i in range(j):
                hi, hi1 = H[i, j], H[i + 1, j]
                H[i, j] = cs[i] * hi + sn[i] * hi1
                H[i + 1, j] = -sn[i] * hi + cs[i] * hi1
            denom = np.hypot(H[j, j], H[j + 1, j])
            if denom == 0.0:
                # A M maps the Krylov space into a proper subspace: no progress is possible
                total += 1
                history.append(history[-1])
                broke_down = True
                break
            cs[j] = H[j, j] / denom
            sn[j] = H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            s[j + 1] = -sn[j] * s[j]
            s[j] = cs[j] * s[j]
            k = j + 1
            total += 1
            res = abs(s[j + 1])
            history.append(res)
            if res <= target:
                converged = True
                break
            if wnorm <= 1e-14 * max(wnorm0, 1.0):
                broke_down = True
                break
            V[j + 1] = w / wnorm

        if k > 0:
            y = np.linalg.solve(np.triu(H[:k, :k]), s[:k])
            update = V[:k].T @ y
            x += M(update) if config.side == "right" else update
        if broke_down and not converged:
            raise GmresBreakdown(
                f"Arnoldi breakdown after {total} steps with residual {history[-1]:.3e}"
            )
        if not converged and total < config.maxiter:
            r = b - apply_A(x)
            if config.side == "left":
                r = M(r)
            beta = np.linalg.norm(r)

    true_res = np.linalg.norm(b - apply_A(x)) / bnorm
    report = IterationReport(
        iterations=total,
        converged=converged,
        residuals=history,
        true_residual=float(true_res),
        breakdown=broke_down,
    )
    log.debug("gmres: %d iterations, converged=%s, true residual %.2e", total, converged, true_res)
    return x, report
