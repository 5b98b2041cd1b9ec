import numpy as np
import pytest
from numpy.testing import assert_allclose

from ipdg_schwarz import oracles
from ipdg_schwarz.assembly import ProblemParams, assemble_operator, local_matrices
from ipdg_schwarz.reaction import make_model
from ipdg_schwarz.space import tabulate
from ipdg_schwarz.transfer import TransferPair, child_indices, embedding_matrices


def _evaluate(level, coef, x, y, groups=1, g=0):
    n = 2**level
    i, j = min(int(x * n), n - 1), min(int(y * n), n - 1)
    c = j * n + i
    phi, _ = tabulate(1, [[x * n - i, y * n - j]])
    start = (c * groups + g) * 4
    return phi[0] @ coef[start : start + 4]


@pytest.mark.parametrize("coarse", [0, 1, 2])
def test_prolongation_preserves_functions(coarse):
    T = TransferPair(coarse, 1, 2)
    rng = np.random.default_rng(coarse)
    v = rng.standard_normal(T.coarse_size)
    w = T.prolongate(v)
    for x, y in rng.random((100, 2)):
        for g in range(2):
            assert_allclose(
                _evaluate(coarse + 1, w, x, y, 2, g), _evaluate(coarse, v, x, y, 2, g), atol=1e-13
            )


@pytest.mark.parametrize("groups", [1, 5])
def test_restriction_is_adjoint(groups):
    rng = np.random.default_rng(7)
    for coarse in range(4):
        T = TransferPair(coarse, 1, groups)
        v = rng.standard_normal(T.coarse_size)
        r = rng.standard_normal(T.fine_size)
        err = abs(T.prolongate(v) @ r - v @ T.restrict(r))
        assert err <= 1e-13 * np.linalg.norm(v) * np.linalg.norm(r)


@pytest.mark.parametrize("coarse", [0, 1, 2])
def test_matches_interpolation_oracle(coarse):
    E = TransferPair(coarse, 1, 2).to_sparse().toarray()
    assert_allclose(E, oracles.embedding_matrix(coarse, 1, 2), atol=1e-15)


def test_quadratic_embedding_matches_oracle():
    E = TransferPair(1, 2, 1).to_sparse().toarray()
    assert_allclose(E, oracles.embedding_matrix(1, 2, 1), atol=1e-14)


def test_embedding_is_the_l2_projection_onto_the_fine_space():
    # M_H^{-1} E^T M_h E = I since the coarse space is a subspace of the fine one
    E = TransferPair(1).to_sparse().toarray()
    M_h = np.kron(np.eye(16), local_matrices(1, 4, 0.25, 2.0).mass)
    M_H = np.kron(np.eye(4), local_matrices(1, 4, 0.5, 2.0).mass)
    assert_allclose(np.linalg.solve(M_H, E.T @ M_h @ E), np.eye(16), atol=1e-13)


def test_full_column_rank_and_norm():
    E = TransferPair(2).to_sparse().toarray()
    s = np.linalg.svd(E, compute_uv=False)
    assert s.min() > 0.5
    # every coarse dof value is copied to at least one fine node, never amplified
    assert np.abs(E).max() <= 1.0 + 1e-15
    assert_allclose(E.sum(axis=1), 1.0)


def test_local_embedding_for_p1():
    E = embedding_matrices(1)
    assert E.shape == (4, 4, 4)
    # child (0,0): its node (1,1) sits at the parent center
    assert_allclose(E[0][3], [0.25, 0.25, 0.25, 0.25])
    assert_allclose(E[0][0], [1.0, 0.0, 0.0, 0.0])
    assert not E.flags.writeable


def test_child_indices_match_mesh_children():
    T = TransferPair(2)
    for c in range(T.coarse.ncells):
        assert_allclose(child_indices(T.coarse)[c], T.coarse.children(c))


def test_length_validation():
    T = TransferPair(1, 1, 2)
    with pytest.raises(ValueError):
        T.prolongate(np.zeros(T.fine_size))
    with pytest.raises(ValueError):
        T.restrict(np.zeros(T.coarse_size))
    assert T.fine_level == 2 and T.coarse_level == 1


def test_galerkin_coarse_operator_differs_from_rediscretized():
    # E^T A_h E is a valid coarse operator but not the rediscretized one
    params = ProblemParams(make_model("zero"))
    E = TransferPair(1).to_sparse().toarray()
    A_h = assemble_operator(2, params).to_dense()
    A_H = assemble_operator(1, params).to_dense()
    G = E.T @ A_h @ E
    assert_allclose(G, G.T, atol=1e-12)
    assert np.abs(G - A_H).max() > 1e-3
