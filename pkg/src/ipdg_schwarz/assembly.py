"""Interior penalty DG assembly of the reaction-diffusion operator.

The bilinear form is

    a_h(u, v) = sum_K (D grad u, grad v)_K
              + sum_F c_pen delta/h  <{{D u n}}, {{v n}}>_F
              - sum_F c_con (<{{u n}}, {{D grad v}}>_F + <{{D grad u}}, {{v n}}>_F)

with ``{{w}} = (w_+ + w_-)/sqrt(2)`` on interior faces and ``{{w}} = w`` on
the boundary, plus the cell-local reaction term ``(Sigma u, v)``.  Dirichlet
data enters only through the boundary face terms.

Two face normalizations are available (see :data:`FACE_FACTORS`):
``"symmetric"`` uses ``(c_pen, c_con) = (2, 1)``, the consistent SIPG form
with penalty ``delta/h`` on interior jumps and ``2 delta/h`` on boundary
values; ``"doubled"`` uses ``(4, 2)``.

Operators are stored cell-block sparse: one dense diagonal block per cell
and, for each of the four face directions, the face coupling block.  On the
uniform meshes used here the coupling across a face depends only on its
direction, so it is kept as a scalar ``nloc x nloc`` matrix scaled per group
by the diffusion coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.io
import scipy.sparse as sp

from .mesh import FACE_NORMALS, OPPOSITE, Mesh, build_mesh
from .reaction import ReactionModel
from .space import DgSpace, gauss_1d, make_quadrature, tabulate

_CHUNK = 4096

FACE_FACTORS = {"symmetric": (2.0, 1.0), "doubled": (4.0, 2.0)}


@dataclass(frozen=True)
class ProblemParams:
    """Coefficients and discretization choices of one problem.

    ``diffusion`` defaults to ones; ``quad_points`` defaults to ``degree + 3``
    Gauss points per direction.
    """

    reaction: ReactionModel
    degree: int = 1
    penalty: float = 2.0
    diffusion: tuple[float, ...] | None = None
    quad_points: int | None = None
    face_form: str = "symmetric"

    def __post_init__(self):
        if self.face_form not in FACE_FACTORS:
            raise ValueError(f"face_form must be one of {sorted(FACE_FACTORS)}")
        if self.penalty <= 0:
            raise ValueError(f"penalty must be positive, got {self.penalty}")
        if self.degree < 0:
            raise ValueError(f"degree must be nonnegative, got {self.degree}")
        if self.diffusion is not None:
            if len(self.diffusion) != self.groups:
                raise ValueError(
                    f"{len(self.diffusion)} diffusion coefficients for {self.groups} groups"
                )
            if min(self.diffusion) <= 0:
                raise ValueError("diffusion coefficients must be positive")

    @property
    def groups(self) -> int:
        return self.reaction.groups

    @property
    def eta(self) -> np.ndarray:
        if self.diffusion is None:
            return np.ones(self.groups)
        return np.asarray(self.diffusion, dtype=float)

    @property
    def nquad(self) -> int:
        return self.quad_points or self.degree + 3


def face_points(face: int, t: np.ndarray) -> np.ndarray:
    """Reference coordinates of the points ``t`` on a local face."""
    zeros, ones = np.zeros_like(t), np.ones_like(t)
    return np.stack(
        [
            (zeros, t),
            (ones, t),
            (t, zeros),
            (t, ones),
        ][face],
        axis=1,
    )


def face_matrix(p, nq, h, delta, trial_face, test_face, weight, factors=FACE_FACTORS["symmetric"]):
    """Face terms of ``a_h`` between two traces sharing a face, unit diffusion.

    ``trial_face`` and ``test_face`` are local face ids of the cells that
    own the trial and test functions; ``weight`` is the averaging factor
    (``1/sqrt(2)`` inside, 1 on the boundary).  Returns ``M[test, trial]``.
    """
    c_pen, c_con = factors
    t, w = gauss_1d(nq)
    phi, dphi = tabulate(p, face_points(trial_face, t))
    psi, dpsi = tabulate(p, face_points(test_face, t))
    n_a = FACE_NORMALS[trial_face]
    n_b = FACE_NORMALS[test_face]
    dphi_nb = dphi @ n_b / h
    dpsi_na = dpsi @ n_a / h
    ds = w * h
    penalty = c_pen * delta / h * (n_a @ n_b) * np.einsum("q,qi,qj->ij", ds, psi, phi)
    consistency = c_con * (
        np.einsum("q,qi,qj->ij", ds, dpsi_na, phi) + np.einsum("q,qi,qj->ij", ds, psi, dphi_nb)
    )
    return weight**2 * (penalty - consistency)


@dataclass(frozen=True)
class LocalMatrices:
    """Scalar reference-cell matrices for one mesh size."""

    volume: np.ndarray  # (grad phi_j, grad phi_i)
    mass: np.ndarray
    face_interior: np.ndarray  # (4, nloc, nloc) self terms of an interior face
    face_boundary: np.ndarray  # (4, nloc, nloc) self terms of a boundary face
    coupling: np.ndarray  # (4, nloc, nloc) test in cell, trial across the face


def local_matrices(p: int, nq: int, h: float, delta: float, face_form: str = "symmetric") -> LocalMatrices:
    fac = FACE_FACTORS[face_form]
    quad = make_quadrature(nq)
    phi, dphi = tabulate(p, quad.points)
    volume = np.einsum("q,qid,qjd->ij", quad.weights, dphi, dphi)
    mass = h * h * np.einsum("q,qi,qj->ij", quad.weights, phi, phi)
    inner = 1.0 / np.sqrt(2.0)
    face_interior = np.array([face_matrix(p, nq, h, delta, f, f, inner, fac) for f in range(4)])
    face_boundary = np.array([face_matrix(p, nq, h, delta, f, f, 1.0, fac) for f in range(4)])
    coupling = np.array(
        [face_matrix(p, nq, h, delta, OPPOSITE[f], f, inner, fac) for f in range(4)]
    )
    return LocalMatrices(volume, mass, face_interior, face_boundary, coupling)


@dataclass
class BlockOperator:
    """Cell-block sparse IP-DG operator on one mesh level.

    Attributes
    ----------
    mesh : Mesh
    space : DgSpace
    diag : ndarray, shape (ncells, bs, bs)
        Cell self-coupling blocks, ``bs = groups * nloc``.
    coupling : ndarray, shape (4, nloc, nloc)
        Scalar face coupling for each local face direction; the full
        off-diagonal block is ``kron(diag(eta), coupling[f])``.
    eta : ndarray, shape (groups,)
    """

    mesh: Mesh
    space: DgSpace
    diag: np.ndarray = field(repr=False)
    coupling: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    symmetric: bool = True

    @property
    def level(self) -> int:
        return self.mesh.level

    @property
    def block_size(self) -> int:
        return self.diag.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        n = self.space.global_dofs
        return n, n

    def offdiag_block(self, cell: int, face: int) -> np.ndarray:
        """Block coupling test dofs of ``cell`` to trial dofs across ``face``."""
        if self.mesh.neighbors[cell, face] < 0:
            raise ValueError(f"face {face} of cell {cell} is on the boundary")
        return np.kron(np.diag(self.eta), self.coupling[face])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        nc, bs = self.diag.shape[:2]
        G, nloc = self.space.groups, self.space.nloc
        X = x.reshape(nc, bs)
        y = np.matmul(self.diag, X[:, :, None])[:, :, 0]
        Y = y.reshape(nc, G, nloc)
        Xg = x.reshape(nc, G, nloc)
        for f in range(4):
            nb = self.mesh.neighbors[:, f]
            inside = nb >= 0
            Y[inside] += self.eta[:, None] * (Xg[nb[inside]] @ self.coupling[f].T)
        return y.reshape(-1)

    __call__ = matvec

    def __matmul__(self, x):
        return self.matvec(x)

    def block_diagonal(self) -> BlockOperator:
        """The same operator with all face coupling removed."""
        return replace(self, coupling=np.zeros_like(self.coupling))

    def to_sparse(self) -> sp.csr_matrix:
        nc, bs = self.diag.shape[:2]
        ii, jj = np.meshgrid(np.arange(bs), np.arange(bs), indexing="ij")
        base = np.arange(nc)[:, None, None] * bs
        rows = [(base + ii).ravel()]
        cols = [(base + jj).ravel()]
        vals = [self.diag.ravel()]
        for f in range(4):
            block = np.kron(np.diag(self.eta), self.coupling[f])
            cells = np.flatnonzero(self.mesh.neighbors[:, f] >= 0)
            nb = self.mesh.neighbors[cells, f]
            rows.append((cells[:, None, None] * bs + ii).ravel())
            cols.append((nb[:, None, None] * bs + jj).ravel())
            vals.append(np.broadcast_to(block, (len(cells), bs, bs)).ravel())
        A = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=self.shape
        )
        A = A.tocsr()
        A.eliminate_zeros()
        return A

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()


def _as_mesh(level_or_mesh) -> Mesh:
    if isinstance(level_or_mesh, Mesh):
        return level_or_mesh
    return build_mesh(int(level_or_mesh))


def reaction_blocks(mesh: Mesh, params: ProblemParams) -> np.ndarray:
    """Cell blocks of ``(Sigma u, v)``, shape ``(ncells, bs, bs)``."""
    p, G = params.degree, params.groups
    quad = make_quadrature(params.nquad)
    phi, _ = tabulate(p, quad.points)
    nloc = phi.shape[1]
    h = mesh.h
    model = params.reaction
    if model.constant:
        sigma = model.at(0.5, 0.5)
        mass = h * h * np.einsum("q,qi,qj->ij", quad.weights, phi, phi)
        block = np.kron(sigma, mass)
        return np.broadcast_to(block, (mesh.ncells, G * nloc, G * nloc)).copy()
    # weighted products of basis pairs at each quadrature point
    wpp = h * h * quad.weights[:, None, None] * phi[:, :, None] * phi[:, None, :]
    out = np.empty((mesh.ncells, G * nloc, G * nloc))
    for start in range(0, mesh.ncells, _CHUNK):
        corners = mesh.corners[start : start + _CHUNK]
        x = corners[:, 0, None] + h * quad.points[None, :, 0]
        y = corners[:, 1, None] + h * quad.points[None, :, 1]
        sigma = model(x, y)  # (c, q, G, G)
        blk = np.einsum("cqab,qij->caibj", sigma, wpp, optimize=True)
        out[start : start + len(corners)] = blk.reshape(len(corners), G * nloc, G * nloc)
    return out


def assemble_operator(level, params: ProblemParams) -> BlockOperator:
    """Assemble the IP-DG operator on a mesh level (or a given :class:`Mesh`)."""
    mesh = _as_mesh(level)
    space = DgSpace(params.degree, params.groups, mesh.level)
    G, nloc = params.groups, space.nloc
    eta = params.eta
    loc = local_matrices(params.degree, params.nquad, mesh.h, params.penalty, params.face_form)

    # diffusion and face self terms, classified by which faces are on the boundary
    on_boundary = mesh.neighbors < 0
    scalar = np.empty((mesh.ncells, nloc, nloc))
    pattern = on_boundary @ (1 << np.arange(4))
    for code in np.unique(pattern):
        flags = [(code >> f) & 1 for f in range(4)]
        S = loc.volume.copy()
        for f in range(4):
            S += loc.face_boundary[f] if flags[f] else loc.face_interior[f]
        scalar[pattern == code] = S
    diag = np.einsum("g,cij->cgij", eta, scalar)
    full = np.zeros((mesh.ncells, G, nloc, G, nloc))
    idx = np.arange(G)
    full[:, idx, :, idx, :] = diag.transpose(1, 0, 2, 3)
    diag = full.reshape(mesh.ncells, G * nloc, G * nloc)
    diag += reaction_blocks(mesh, params)
    return BlockOperator(mesh, space, diag, loc.coupling.copy(), eta.copy())


def assemble_rhs(level, params: ProblemParams, source) -> np.ndarray:
    """Load vector of a per-group constant source, ``int_K S_g phi_i``."""
    mesh = _as_mesh(level)
    source = np.asarray(source, dtype=float)
    if source.shape != (params.groups,):
        raise ValueError(f"source needs {params.groups} entries, got shape {source.shape}")
    quad = make_quadrature(params.nquad)
    phi, _ = tabulate(params.degree, quad.points)
    integrals = mesh.h**2 * quad.weights @ phi
    cell = np.outer(source, integrals).ravel()
    return np.tile(cell, mesh.ncells)


def export_matrix_market(op: BlockOperator, path, comment: str = "") -> None:
    scipy.io.mmwrite(str(path), op.to_sparse().tocoo(), comment=comment, symmetry="general")
