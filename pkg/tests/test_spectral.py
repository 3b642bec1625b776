import math

import numpy as np
import pytest

from elastopoint.assembly import build_dof_map, vector_p1_form_matrix
from elastopoint.mesh import build_unit_box_mesh, cell_geometry
from elastopoint.spectral import (
    InfSupReport,
    discrete_infsup,
    discrete_korn_constant,
    kernel_basis,
    theorem31_report,
    weighted_pairing_demo,
    weighted_pairing_matrices,
)
from elastopoint.weights import WeightSpec

from oracles import (
    infsup_oracle,
    pencil_lambda_min_oracle,
    random_report_instance,
    theorem31_oracle,
)


def _close(a, b, tol=1e-8):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(b))


def test_infsup_identity_cases():
    I3 = np.eye(3)
    assert discrete_infsup(I3, I3, I3) == pytest.approx(1.0, abs=1e-14)
    B = np.diag([2.0, 1.0])
    assert discrete_infsup(B, np.eye(2), np.eye(2)) == pytest.approx(1.0)
    B = np.array([[1.0, 0.0], [0.0, 0.0]])
    assert discrete_infsup(B, np.eye(2), np.eye(2)) == pytest.approx(0.0, abs=1e-14)


def test_infsup_degenerate_shapes():
    assert discrete_infsup(np.zeros((0, 3)), np.eye(3), np.zeros((0, 0))) == math.inf
    assert discrete_infsup(np.ones((3, 2)), np.eye(2), np.eye(3)) == 0.0


def test_infsup_scaling_in_grams():
    # scaling the M metric by 4 scales the constant by 1/2
    rng = np.random.default_rng(3)
    B = rng.standard_normal((3, 5))
    G_Y = np.eye(5)
    G_M = np.eye(3)
    base = discrete_infsup(B, G_Y, G_M)
    scaled = discrete_infsup(B, G_Y, 4.0 * G_M)
    assert scaled == pytest.approx(0.5 * base, rel=1e-12)


def test_infsup_matches_sqrtm_oracle():
    rng = np.random.default_rng(17)
    for _ in range(20):
        nM = int(rng.integers(1, 7))
        nY = int(rng.integers(1, 7))
        B = rng.standard_normal((nM, nY))
        QY = rng.standard_normal((nY, nY))
        QM = rng.standard_normal((nM, nM))
        G_Y = QY @ QY.T + nY * np.eye(nY)
        G_M = QM @ QM.T + nM * np.eye(nM)
        got = discrete_infsup(B, G_Y, G_M)
        ref = infsup_oracle(B, G_Y, G_M)
        assert _close(got, ref, 1e-10)


def test_gram_validation():
    B = np.eye(2)
    with pytest.raises(ValueError):
        discrete_infsup(B, np.eye(3), np.eye(2))
    asym = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError):
        discrete_infsup(B, asym, np.eye(2))
    indefinite = np.diag([1.0, -1.0])
    with pytest.raises(ValueError):
        discrete_infsup(B, np.eye(2), indefinite)


def test_kernel_basis_trivial_and_full():
    G = np.eye(3)
    Z = kernel_basis(np.zeros((2, 3)), G)
    assert Z.shape == (3, 3)
    assert np.allclose(Z.T @ G @ Z, np.eye(3), atol=1e-12)
    Z = kernel_basis(np.eye(3), G)
    assert Z.shape == (3, 0)
    Z = kernel_basis(np.zeros((0, 3)), G)
    assert Z.shape == (3, 3)


def test_kernel_basis_random_properties():
    rng = np.random.default_rng(5)
    for _ in range(10):
        nQ = int(rng.integers(1, 5))
        nX = int(rng.integers(1, 8))
        C = rng.standard_normal((nQ, nX))
        Q = rng.standard_normal((nX, nX))
        G = Q @ Q.T + nX * np.eye(nX)
        Z = kernel_basis(C, G)
        k = Z.shape[1]
        assert k == nX - np.linalg.matrix_rank(C)
        if k:
            assert np.max(np.abs(C @ Z)) < 1e-10
            assert np.allclose(Z.T @ G @ Z, np.eye(k), atol=1e-10)


def test_report_identity_instance():
    I3 = np.eye(3)
    rep = theorem31_report(I3, I3, I3, I3, I3, I3, I3)
    assert isinstance(rep, InfSupReport)
    assert rep.beta_B == pytest.approx(1.0)
    assert rep.beta_C == pytest.approx(1.0)
    assert rep.alpha_A_kernel == pytest.approx(1.0)
    assert rep.alpha_A_full == pytest.approx(1.0)
    assert rep.injective_on_kernels is True


def test_report_zero_constraints_instance():
    I3 = np.eye(3)
    Z = np.zeros((1, 3))
    rep = theorem31_report(I3, Z, Z, I3, I3, np.eye(1), np.eye(1))
    assert rep.beta_B == pytest.approx(0.0, abs=1e-14)
    assert rep.beta_C == pytest.approx(0.0, abs=1e-14)
    assert rep.alpha_A_kernel == pytest.approx(1.0)
    assert rep.alpha_A_full == pytest.approx(1.0)
    assert rep.injective_on_kernels is True


def test_report_kernel_vs_full_gap():
    # trial kernel e1, test kernel e1, but A couples e1 only to e2:
    # the kernel-restricted constant collapses while the full one stays 1
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    B = np.array([[0.0, 1.0]])
    C = np.array([[0.0, 1.0]])
    I2 = np.eye(2)
    I1 = np.eye(1)
    rep = theorem31_report(A, B, C, I2, I2, I1, I1)
    assert rep.alpha_A_kernel == pytest.approx(0.0, abs=1e-14)
    assert rep.alpha_A_full == pytest.approx(1.0)
    assert rep.injective_on_kernels is False
    assert rep.alpha_A_kernel <= rep.alpha_A_full + 1e-10


def test_report_shape_validation():
    I3 = np.eye(3)
    with pytest.raises(ValueError):
        theorem31_report(I3, np.ones((1, 2)), np.zeros((1, 3)),
                         I3, I3, np.eye(1), np.eye(1))
    with pytest.raises(ValueError):
        theorem31_report(I3, np.ones((1, 3)), np.zeros((1, 2)),
                         I3, I3, np.eye(1), np.eye(1))


def test_report_matches_oracle_on_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(25):
        A, B, C, G_X, G_Y, G_M, G_Q = random_report_instance(rng)
        rep = theorem31_report(A, B, C, G_X, G_Y, G_M, G_Q)
        ref = theorem31_oracle(A, B, C, G_X, G_Y, G_M, G_Q)
        assert _close(rep.beta_B, ref["beta_B"])
        assert _close(rep.beta_C, ref["beta_C"])
        assert _close(rep.alpha_A_kernel, ref["alpha_A_kernel"])
        assert _close(rep.alpha_A_full, ref["alpha_A_full"])
        assert rep.injective_on_kernels == ref["injective_on_kernels"]
        if not math.isinf(rep.alpha_A_full):
            assert rep.alpha_A_kernel <= rep.alpha_A_full + 1e-10


def test_pairing_matrices_shapes_and_s_zero():
    mesh = build_unit_box_mesh(2, 2)
    A, B, C, G_X, G_Y, G_M, G_Q = weighted_pairing_matrices(mesh, 0.0,
                                                            [0.5, 0.5])
    nX = 3 * mesh.num_cells
    assert A.shape == G_X.shape == G_Y.shape == (nX, nX)
    assert B.shape == C.shape == (2, nX)
    assert G_M.shape == G_Q.shape == (2, 2)
    assert np.array_equal(A, G_X)
    assert np.array_equal(A, G_Y)
    assert np.array_equal(B, C)


def test_pairing_matrices_strain_entries():
    # B[(dof of z), (cell, a)] = vol * eps(z)|_cell : E_a, checked by a
    # hand loop over cells for the single interior hat field
    mesh = build_unit_box_mesh(2, 2)
    dm = build_dof_map(mesh)
    _, B, _, _, _, _, _ = weighted_pairing_matrices(mesh, 0.0, [0.5, 0.5])
    vols, grads = cell_geometry(mesh)
    sq2 = 1.0 / math.sqrt(2.0)
    basis = [np.array([[1.0, 0.0], [0.0, 0.0]]),
             np.array([[0.0, 0.0], [0.0, 1.0]]),
             np.array([[0.0, sq2], [sq2, 0.0]])]
    expected = np.zeros_like(B)
    for ci in range(mesh.num_cells):
        for i in range(3):
            v = mesh.cells[ci, i]
            g = grads[ci, i]
            for comp in range(2):
                row = dm.free_index[v, comp]
                if row < 0:
                    continue
                gradfield = np.zeros((2, 2))
                gradfield[comp, :] = g
                eps = 0.5 * (gradfield + gradfield.T)
                for a in range(3):
                    expected[row, 3 * ci + a] += vols[ci] * float(
                        (eps * basis[a]).sum())
    assert np.allclose(B, expected, atol=1e-14)


def test_pairing_matrices_validation():
    mesh = build_unit_box_mesh(2, 2)
    with pytest.raises(ValueError):
        weighted_pairing_matrices(mesh, 1.0, [0.5, 0.5])
    with pytest.raises(ValueError):
        weighted_pairing_matrices(mesh, -1.0, [0.5, 0.5])
    with pytest.raises(ValueError):
        weighted_pairing_matrices(mesh, 0.5, [0.5, 0.0])
    with pytest.raises(ValueError):
        weighted_pairing_matrices(mesh, 0.5, [0.5])
    with pytest.raises(ValueError):
        weighted_pairing_matrices(build_unit_box_mesh(2, 1), 0.5, [0.5, 0.5])


def test_demo_s_zero_is_exact():
    for n in (2, 4):
        rep = weighted_pairing_demo(build_unit_box_mesh(2, n), 0.0,
                                    [0.5, 0.5])
        assert abs(rep.alpha_A_kernel - 1.0) < 1e-12
        assert abs(rep.alpha_A_full - 1.0) < 1e-12
        assert rep.injective_on_kernels is True


@pytest.mark.parametrize("s", [-0.5, 0.5])
@pytest.mark.parametrize("n", [2, 4])
def test_demo_invariant_and_symmetry(s, n):
    mesh = build_unit_box_mesh(2, n)
    rep = weighted_pairing_demo(mesh, s, [0.5, 0.5])
    assert 0.0 < rep.alpha_A_kernel <= rep.alpha_A_full + 1e-10
    assert rep.injective_on_kernels is True
    mirror = weighted_pairing_demo(mesh, -s, [0.5, 0.5])
    assert rep.beta_B == mirror.beta_C
    assert rep.beta_C == mirror.beta_B


def test_demo_matches_oracle_small():
    mesh = build_unit_box_mesh(2, 2)
    mats = weighted_pairing_matrices(mesh, 0.5, [0.5, 0.5])
    rep = theorem31_report(*mats)
    ref = theorem31_oracle(*mats)
    assert _close(rep.beta_B, ref["beta_B"])
    assert _close(rep.beta_C, ref["beta_C"])
    assert _close(rep.alpha_A_kernel, ref["alpha_A_kernel"])
    assert _close(rep.alpha_A_full, ref["alpha_A_full"])


@pytest.mark.parametrize("dim,n", [(2, 4), (2, 8), (3, 2)])
def test_korn_constant_unweighted_range(dim, n):
    mesh = build_unit_box_mesh(dim, n)
    ch = discrete_korn_constant(mesh)
    lam = 1.0 / ch**2
    assert 0.5 - 1e-12 <= lam <= 1.0 + 1e-12
    assert ch >= 1.0


@pytest.mark.parametrize("dim,n", [(2, 4), (3, 2)])
def test_korn_matches_pencil_oracle(dim, n):
    mesh = build_unit_box_mesh(dim, n)
    dm = build_dof_map(mesh)
    E = vector_p1_form_matrix(mesh, dm, None, c_eps=1.0)
    G = vector_p1_form_matrix(mesh, dm, None, c_grad=1.0)
    lam_ref = pencil_lambda_min_oracle(E, G)
    ch = discrete_korn_constant(mesh)
    assert abs(1.0 / ch**2 - lam_ref) < 1e-10


def test_korn_iterative_branch_matches_dense_oracle():
    # 2d n=33 has 2048 free dofs, just over the dense cutoff
    mesh = build_unit_box_mesh(2, 33)
    dm = build_dof_map(mesh)
    assert dm.n_free == 2048
    ch = discrete_korn_constant(mesh)
    import scipy.linalg

    E = vector_p1_form_matrix(mesh, dm, None, c_eps=1.0).toarray()
    G = vector_p1_form_matrix(mesh, dm, None, c_grad=1.0).toarray()
    lam_ref = scipy.linalg.eigh(E, G, eigvals_only=True,
                                subset_by_index=(0, 0))[0]
    assert abs(1.0 / ch**2 - lam_ref) < 1e-8


def test_korn_weighted_stays_bounded():
    mesh = build_unit_box_mesh(2, 4)
    spec = WeightSpec([[0.5, 0.5]], 1.0)
    ch = discrete_korn_constant(mesh, spec)
    lam = 1.0 / ch**2
    assert 0.0 < lam <= 1.0 + 1e-12


def test_korn_requires_interior_vertices():
    with pytest.raises(ValueError):
        discrete_korn_constant(build_unit_box_mesh(2, 1))
