import numpy as np
import pytest
import scipy.io
from numpy.testing import assert_allclose

from ipdg_schwarz import oracles
from ipdg_schwarz.assembly import (
    ProblemParams,
    assemble_operator,
    assemble_rhs,
    export_matrix_market,
    local_matrices,
)
from ipdg_schwarz.reaction import make_model
from ipdg_schwarz.transfer import TransferPair

CASES = [
    ("zero", 1, 1.0),
    ("two_group", 2, 0.1),
    ("contrast", 3, 0.01),
    ("contrast", 5, 0.1),
    ("spatial_contrast", 5, 0.1),
]


@pytest.mark.parametrize("kind,groups,eps", CASES)
@pytest.mark.parametrize("level", [0, 1])
def test_matches_scalar_oracle(kind, groups, eps, level):
    model = make_model(kind, eps, groups)
    params = ProblemParams(model)
    A = assemble_operator(level, params).to_dense()
    ref = oracles.ipdg_matrix(level, model.at, groups, 1, params.penalty, params.nquad)
    assert_allclose(A, ref, rtol=0, atol=1e-12 * np.abs(ref).max())


def test_oracle_with_group_diffusion_and_other_penalty():
    model = make_model("two_group", 0.5)
    params = ProblemParams(model, penalty=5.0, diffusion=(1.0, 3.0))
    A = assemble_operator(1, params).to_dense()
    ref = oracles.ipdg_matrix(1, model.at, 2, 1, 5.0, params.nquad, diffusion=(1.0, 3.0))
    assert_allclose(A, ref, atol=1e-12 * np.abs(ref).max())


def test_quadratic_elements_match_oracle():
    model = make_model("contrast", 0.1, 2)
    params = ProblemParams(model, degree=2, penalty=6.0)
    A = assemble_operator(1, params).to_dense()
    ref = oracles.ipdg_matrix(1, model.at, 2, 2, 6.0, params.nquad)
    assert_allclose(A, ref, atol=1e-12 * np.abs(ref).max())


@pytest.mark.parametrize("kind,groups,eps", CASES)
def test_symmetric_positive_definite(kind, groups, eps):
    A = assemble_operator(2, ProblemParams(make_model(kind, eps, groups))).to_dense()
    assert_allclose(A, A.T, atol=1e-12 * np.abs(A).max())
    assert np.linalg.eigvalsh(A).min() > 0


def test_matvec_agrees_with_sparse_matrix():
    op = assemble_operator(4, ProblemParams(make_model("spatial_contrast", 0.1, 5)))
    x = np.random.default_rng(3).standard_normal(op.shape[0])
    assert_allclose(op @ x, op.to_sparse() @ x, rtol=1e-12, atol=1e-9)


def test_block_storage_shapes():
    op = assemble_operator(3, ProblemParams(make_model("contrast", 0.1, 5)))
    assert op.diag.shape == (64, 20, 20)
    assert op.coupling.shape == (4, 4, 4)
    assert op.shape == (1280, 1280)
    with pytest.raises(ValueError):
        op.offdiag_block(0, 0)  # west face of cell 0 is on the boundary
    A = op.to_dense()
    assert_allclose(op.offdiag_block(0, 1), A[0:20, 20:40])


def test_block_diagonal_drops_faces():
    op = assemble_operator(2, ProblemParams(make_model("zero")))
    D = op.block_diagonal().to_dense()
    A = op.to_dense()
    for c in range(op.mesh.ncells):
        s = slice(4 * c, 4 * c + 4)
        assert_allclose(D[s, s], A[s, s])
    assert np.count_nonzero(D) == 16 * 16


def test_scaling_identity_for_piecewise_constants():
    params = ProblemParams(make_model("zero"))
    rng = np.random.default_rng(0)
    for coarse in (0, 1, 2):
        A_H = assemble_operator(coarse, params)
        A_h = assemble_operator(coarse + 1, params)
        T = TransferPair(coarse)
        for _ in range(20):
            v = np.repeat(rng.standard_normal(A_H.mesh.ncells), 4)
            w = T.prolongate(v)
            # H = 2 h
            assert_allclose(v @ (A_H @ v), 0.5 * (w @ (A_h @ w)), rtol=1e-12)


def test_energy_grows_with_penalty():
    model = make_model("zero")
    v = np.random.default_rng(1).standard_normal(64)
    energies = [v @ (assemble_operator(2, ProblemParams(model, penalty=d)) @ v) for d in (2.0, 4.0, 8.0)]
    assert energies[0] < energies[1] < energies[2]


def test_reaction_vanishes_on_group_constant_vectors():
    # Sigma ones = 0, so the reaction part does not act on group-constant fields
    p0 = ProblemParams(make_model("zero", 1.0, 5))
    p1 = ProblemParams(make_model("contrast", 0.01, 5))
    u = np.repeat(np.random.default_rng(2).standard_normal((16, 1, 4)), 5, axis=1).ravel()
    assert_allclose(assemble_operator(2, p1) @ u, assemble_operator(2, p0) @ u, atol=1e-10)


def test_face_coupling_blocks_are_mutual_transposes():
    # the block seen from the west neighbor is the transpose of the one seen from the east
    loc = local_matrices(1, 4, 0.25, 2.0)
    assert_allclose(loc.coupling[1], loc.coupling[0].T, atol=1e-15)
    assert_allclose(loc.coupling[3], loc.coupling[2].T, atol=1e-15)


def test_rhs_unit_source():
    params = ProblemParams(make_model("zero"))
    b = assemble_rhs(0, params, [1.0])
    assert_allclose(b, 0.25)
    b = assemble_rhs(2, params, [1.0])
    assert_allclose(b.sum(), 1.0)
    params5 = ProblemParams(make_model("contrast", 0.1, 5))
    b = assemble_rhs(1, params5, [1, 0, 1, 0, 1]).reshape(4, 5, 4)
    assert_allclose(b[:, [0, 2, 4]], 1 / 16)
    assert_allclose(b[:, [1, 3]], 0.0)
    with pytest.raises(ValueError):
        assemble_rhs(1, params5, [1.0, 0.0])


def test_rhs_matches_oracle():
    params = ProblemParams(make_model("two_group", 0.1))
    assert_allclose(assemble_rhs(1, params, [2.0, -1.0]), oracles.load_vector(1, [2.0, -1.0], 1, params.nquad))


def test_params_validation():
    model = make_model("two_group", 0.1)
    with pytest.raises(ValueError):
        ProblemParams(model, penalty=0.0)
    with pytest.raises(ValueError):
        ProblemParams(model, diffusion=(1.0,))
    with pytest.raises(ValueError):
        ProblemParams(model, diffusion=(1.0, -1.0))
    with pytest.raises(ValueError):
        ProblemParams(model, face_form="other")
    assert ProblemParams(model).nquad == 4
    assert ProblemParams(model, quad_points=2).nquad == 2


def test_doubled_face_form_is_the_symmetric_form_with_scaled_faces():
    model = make_model("zero")
    sym = assemble_operator(1, ProblemParams(model)).to_dense()
    dbl = assemble_operator(1, ProblemParams(model, face_form="doubled")).to_dense()
    # the doubled form has twice the face contribution of the symmetric one
    loc = local_matrices(1, 4, 0.5, 2.0)
    volume = np.kron(np.eye(4), loc.volume)
    assert_allclose(dbl - volume, 2 * (sym - volume), atol=1e-12)


def test_matrix_market_roundtrip(tmp_path):
    op = assemble_operator(1, ProblemParams(make_model("two_group", 0.1)))
    path = tmp_path / "a.mtx"
    export_matrix_market(op, path, comment="test")
    A = scipy.io.mmread(str(path)).toarray()
    assert_allclose(A, op.to_dense())
