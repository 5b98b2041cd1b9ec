"""Independent dense reference implementations used for verification.

Nothing here shares code with the production assembly, smoothers or
transfers beyond the mesh geometry and Gauss-Legendre points.  Everything is
written with scalar loops in global coordinates or as explicit dense matrix
products, so it is only practical on meshes with a handful of cells.

The interior penalty form is stated in the textbook jump/average notation
with ``{w} = (w_+ + w_-)/2`` and ``[v] = v_+ n_+ + v_- n_-``::

    a(u, v) = sum_K (grad u, grad v)_K + (S u, v)_K
            + sum_F interior  delta/h <[u], [v]> - <{grad u}, [v]> - <[u], {grad v}>
            + sum_F boundary 2 delta/h <u, v>  - <du/dn, v>  - <u, dv/dn>
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .mesh import build_mesh


def _lagrange(p: int, i: int, t: float) -> tuple[float, float]:
    """Value and derivative of the ``i``-th equispaced Lagrange polynomial on [0, 1]."""
    if p == 0:
        return 1.0, 0.0
    nodes = [k / p for k in range(p + 1)]
    val = 1.0
    der = 0.0
    for j in range(p + 1):
        if j == i:
            continue
        scale = nodes[i] - nodes[j]
        # (f g)' = f' g + f g' with g the new factor
        der = der * (t - nodes[j]) / scale + val / scale
        val *= (t - nodes[j]) / scale
    return val, der


def basis_at(p: int, h: float, corner, x: float, y: float):
    """Global basis values and gradients of a cell at the point ``(x, y)``."""
    s = (x - corner[0]) / h
    t = (y - corner[1]) / h
    k = p + 1
    vals = np.zeros(k * k)
    grads = np.zeros((k * k, 2))
    for iy in range(k):
        vy, dy = _lagrange(p, iy, t)
        for ix in range(k):
            vx, dx = _lagrange(p, ix, s)
            node = ix + k * iy
            vals[node] = vx * vy
            grads[node] = (dx * vy / h, vx * dy / h)
    return vals, grads


def _gauss(n: int):
    x, w = leggauss(n)
    return (x + 1) / 2, w / 2


def _cell_of(mesh, x: float, y: float, exclude=None) -> list[int]:
    """Cells whose closure contains ``(x, y)``."""
    out = []
    for c in range(mesh.ncells):
        x0, y0 = mesh.corners[c]
        if x0 - 1e-12 <= x <= x0 + mesh.h + 1e-12 and y0 - 1e-12 <= y <= y0 + mesh.h + 1e-12:
            out.append(c)
    return out


def _faces(mesh):
    """All faces as ``(cell_minus, cell_plus or -1, normal, start point, direction)``."""
    h = mesh.h
    faces = []
    for c in range(mesh.ncells):
        x0, y0 = mesh.corners[c]
        i, j = mesh.ij[c]
        n = mesh.n
        # west and south faces are owned by the cell; east and north only on the boundary
        west = mesh.cell_index(i - 1, j) if i > 0 else -1
        faces.append((c, west, np.array([-1.0, 0.0]), (x0, y0), (0.0, 1.0)))
        south = mesh.cell_index(i, j - 1) if j > 0 else -1
        faces.append((c, south, np.array([0.0, -1.0]), (x0, y0), (1.0, 0.0)))
        if i == n - 1:
            faces.append((c, -1, np.array([1.0, 0.0]), (x0 + h, y0), (0.0, 1.0)))
        if j == n - 1:
            faces.append((c, -1, np.array([0.0, 1.0]), (x0, y0 + h), (1.0, 0.0)))
    return faces


def ipdg_matrix(
    level: int,
    coefficient: Callable[[float, float], np.ndarray] | None,
    groups: int = 1,
    degree: int = 1,
    delta: float = 2.0,
    nquad: int = 4,
    diffusion=None,
) -> np.ndarray:
    """Dense IP-DG matrix assembled entry by entry.

    ``coefficient(x, y)`` returns the ``G x G`` reaction coefficient at a
    point; ``None`` means no reaction.  The dof numbering is
    ``(cell * G + g) * nloc + node``.
    """
    mesh = build_mesh(level)
    h = mesh.h
    nloc = (degree + 1) ** 2
    G = groups
    eta = np.ones(G) if diffusion is None else np.asarray(diffusion, dtype=float)
    N = mesh.ncells * G * nloc
    A = np.zeros((N, N))
    pts, wts = _gauss(nquad)

    def dof(c, g, i):
        return (c * G + g) * nloc + i

    for c in range(mesh.ncells):
        x0, y0 = mesh.corners[c]
        for qx, wx in zip(pts, wts):
            for qy, wy in zip(pts, wts):
                x, y = x0 + h * qx, y0 + h * qy
                w = wx * wy * h * h
                phi, grad = basis_at(degree, h, (x0, y0), x, y)
                S = np.zeros((G, G)) if coefficient is None else coefficient(x, y)
                for a in range(nloc):
                    for b in range(nloc):
                        stiff = w * grad[b] @ grad[a]
                        mass = w * phi[b] * phi[a]
                        for g in range(G):
                            A[dof(c, g, a), dof(c, g, b)] += eta[g] * stiff
                            for k in range(G):
                                A[dof(c, g, a), dof(c, k, b)] += S[g, k] * mass

    for minus, plus, normal, start, direction in _faces(mesh):
        for q, wq in zip(pts, wts):
            x = start[0] + h * q * direction[0]
            y = start[1] + h * q * direction[1]
            w = wq * h
            if plus < 0:
                phi, grad = basis_at(degree, h, mesh.corners[minus], x, y)
                dn = grad @ normal
                for a in range(nloc):
                    for b in range(nloc):
                        val = 2 * delta / h * phi[b] * phi[a] - dn[b] * phi[a] - phi[b] * dn[a]
                        for g in range(G):
                            A[dof(minus, g, a), dof(minus, g, b)] += eta[g] * w * val
                continue
            # traces on both sides; jump uses the outward normal of each side
            sides = []
            for cell, sign in ((minus, 1.0), (plus, -1.0)):
                phi, grad = basis_at(degree, h, mesh.corners[cell], x, y)
                sides.append((cell, phi, grad, sign * normal))
            for cell_t, phi_t, grad_t, n_t in sides:
                for cell_s, phi_s, grad_s, n_s in sides:
                    for a in range(nloc):
                        for b in range(nloc):
                            jump_jump = (phi_s[b] * n_s) @ (phi_t[a] * n_t)
                            avg_jump = 0.5 * grad_s[b] @ (phi_t[a] * n_t)
                            jump_avg = 0.5 * (phi_s[b] * n_s) @ grad_t[a]
                            val = delta / h * jump_jump - avg_jump - jump_avg
                            for g in range(G):
                                A[dof(cell_t, g, a), dof(cell_s, g, b)] += eta[g] * w * val
    return A


def load_vector(level: int, source, degree: int = 1, nquad: int = 4) -> np.ndarray:
    """``int phi_i S_g`` for a constant per-group source."""
    mesh = build_mesh(level)
    h = mesh.h
    source = np.atleast_1d(np.asarray(source, dtype=float))
    G = source.size
    nloc = (degree + 1) ** 2
    b = np.zeros(mesh.ncells * G * nloc)
    pts, wts = _gauss(nquad)
    for c in range(mesh.ncells):
        x0, y0 = mesh.corners[c]
        for qx, wx in zip(pts, wts):
            for qy, wy in zip(pts, wts):
                phi, _ = basis_at(degree, h, (x0, y0), x0 + h * qx, y0 + h * qy)
                for g in range(G):
                    b[(c * G + g) * nloc : (c * G + g + 1) * nloc] += wx * wy * h * h * source[g] * phi
    return b


def embedding_matrix(coarse_level: int, degree: int = 1, groups: int = 1) -> np.ndarray:
    """Dense embedding by interpolating coarse functions at the fine nodes."""
    coarse = build_mesh(coarse_level)
    fine = build_mesh(coarse_level + 1)
    k = degree + 1
    nloc = k * k
    nodes = [0.5] if degree == 0 else [i / degree for i in range(k)]
    E = np.zeros((fine.ncells * groups * nloc, coarse.ncells * groups * nloc))
    for cf in range(fine.ncells):
        x0, y0 = fine.corners[cf]
        for iy in range(k):
            for ix in range(k):
                # a point strictly inside the fine cell on the node's side
                x = x0 + fine.h * nodes[ix]
                y = y0 + fine.h * nodes[iy]
                xi = x0 + fine.h * (0.5 + 0.999 * (nodes[ix] - 0.5))
                yi = y0 + fine.h * (0.5 + 0.999 * (nodes[iy] - 0.5))
                (cc,) = _cell_of(coarse, xi, yi)
                phi, _ = basis_at(degree, coarse.h, coarse.corners[cc], x, y)
                node = ix + k * iy
                for g in range(groups):
                    E[(cf * groups + g) * nloc + node, (cc * groups + g) * nloc : (cc * groups + g + 1) * nloc] = phi
    return E


def block_parts(A: np.ndarray, block: int, order=None):
    """Block diagonal ``D`` and strictly block lower part ``L`` w.r.t. a cell order."""
    nb = A.shape[0] // block
    order = np.arange(nb) if order is None else np.asarray(order)
    rank = np.empty(nb, dtype=int)
    rank[order] = np.arange(nb)
    D = np.zeros_like(A)
    L = np.zeros_like(A)
    for i in range(nb):
        si = slice(i * block, (i + 1) * block)
        for j in range(nb):
            sj = slice(j * block, (j + 1) * block)
            if i == j:
                D[si, sj] = A[si, sj]
            elif rank[j] < rank[i]:
                L[si, sj] = A[si, sj]
    return D, L


def jacobi_matrix(A: np.ndarray, block: int) -> np.ndarray:
    D, _ = block_parts(A, block)
    return np.linalg.inv(D)


def gauss_seidel_matrix(A: np.ndarray, block: int, order=None) -> np.ndarray:
    D, L = block_parts(A, block, order)
    return np.linalg.inv(D + L)


def _from_error(A: np.ndarray, factors) -> np.ndarray:
    """Preconditioner ``M`` with error propagation ``I - M A`` = product of ``factors``."""
    n = A.shape[0]
    Ep = np.eye(n)
    for F in factors:
        Ep = Ep @ F
    return (np.eye(n) - Ep) @ np.linalg.inv(A)


def two_level_matrix(A, Ac, E, kind: str, block: int, sweeps: str = "pre_post") -> np.ndarray:
    """Dense two-level preconditioner from its defining formula."""
    n = A.shape[0]
    C = E @ np.linalg.inv(Ac) @ E.T
    I = np.eye(n)
    if kind == "additive":
        return C + jacobi_matrix(A, block)
    B = jacobi_matrix(A, block) if kind == "hybrid" else gauss_seidel_matrix(A, block)
    S = I - B @ A
    K = I - C @ A
    if kind == "multiplicative" and sweeps == "post":
        return _from_error(A, [S, K])
    if kind == "multiplicative" and sweeps == "pre":
        return _from_error(A, [K, S])
    return _from_error(A, [S, K, S])


def vcycle_matrix(ops, transfers, smoother: str, block: int, m: int = 1) -> np.ndarray:
    """Dense V-cycle preconditioner on the finest of ``ops`` (dense matrices, coarse first).

    ``transfers[l]`` embeds level ``l`` into ``l + 1``.
    """
    M = np.linalg.inv(ops[0])
    for level in range(1, len(ops)):
        A = ops[level]
        E = transfers[level - 1]
        B = jacobi_matrix(A, block) if smoother == "additive" else gauss_seidel_matrix(A, block)
        I = np.eye(A.shape[0])
        S = np.linalg.matrix_power(I - B @ A, m)
        K = I - E @ M @ E.T @ A
        M = _from_error(A, [S, K, S])
    return M
