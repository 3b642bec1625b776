import numpy as np
import pytest

from elastopoint.assembly import (
    CONSTRAINED,
    EPS_DIV,
    GRAD_DIV,
    DofMap,
    LameParams,
    PointLoadSet,
    assemble_point_load,
    assemble_smooth_load,
    assemble_stiffness,
    build_dof_map,
    point_load_nodal,
    vector_p1_form_matrix,
)
from elastopoint.mesh import build_unit_box_mesh, cell_volumes

from oracles import dense_stiffness_loop, restrict_to_free


def test_lame_params_validate():
    p = LameParams(2.0, 0.5)
    assert p.mu == 2.0 and p.lam == 0.5
    with pytest.raises(ValueError):
        LameParams(0.0, 1.0)
    with pytest.raises(ValueError):
        LameParams(1.0, -0.1)


def test_point_load_set_validate():
    loads = PointLoadSet([[0.25, 0.75]], [[1.0, -2.0]])
    assert loads.dim == 2
    assert len(loads) == 1
    with pytest.raises(ValueError):
        PointLoadSet([[0.0, 0.5]], [[1.0, 0.0]])
    with pytest.raises(ValueError):
        PointLoadSet([[0.5, 1.0]], [[1.0, 0.0]])
    with pytest.raises(ValueError):
        PointLoadSet([[0.5, 0.5]], [[1.0, 0.0, 0.0]])
    with pytest.raises(ValueError):
        PointLoadSet(np.empty((0, 2)), np.empty((0, 2)))


@pytest.mark.parametrize("dim,n", [(2, 2), (2, 3), (3, 2)])
def test_dof_map_ordering(dim, n):
    mesh = build_unit_box_mesh(dim, n)
    dm = build_dof_map(mesh)
    assert dm.n_free == dim * (n - 1) ** dim
    assert dm.free_index.shape == (mesh.num_vertices, dim)
    running = 0
    for v in range(mesh.num_vertices):
        for c in range(dim):
            if mesh.boundary_vertex[v]:
                assert dm.free_index[v, c] == CONSTRAINED
            else:
                assert dm.free_index[v, c] == running
                running += 1
    assert running == dm.n_free


@pytest.mark.parametrize("dim,n", [(2, 2), (2, 3), (3, 2)])
@pytest.mark.parametrize("form", [GRAD_DIV, EPS_DIV])
@pytest.mark.parametrize("mu,lam", [(1.0, 1.0), (2.0, 0.5)])
def test_stiffness_matches_loop_oracle(dim, n, form, mu, lam):
    mesh = build_unit_box_mesh(dim, n)
    dm = build_dof_map(mesh)
    A = assemble_stiffness(mesh, LameParams(mu, lam), form=form).toarray()
    K = restrict_to_free(dense_stiffness_loop(mesh, mu, lam, form), dm)
    assert np.allclose(A, K, atol=1e-12)


@pytest.mark.parametrize("dim,n", [(2, 8), (3, 4)])
@pytest.mark.parametrize("mu,lam", [(1.0, 1.0), (1.0, 10.0), (2.0, 0.5)])
def test_two_forms_agree_after_elimination(dim, n, mu, lam):
    mesh = build_unit_box_mesh(dim, n)
    params = LameParams(mu, lam)
    A1 = assemble_stiffness(mesh, params, form=GRAD_DIV)
    A2 = assemble_stiffness(mesh, params, form=EPS_DIV)
    diff = abs(A1 - A2).max()
    scale = abs(A1).max()
    assert diff <= 1e-12 * scale


@pytest.mark.parametrize("dim,n", [(2, 6), (3, 3)])
def test_stiffness_symmetric_and_positive(dim, n):
    mesh = build_unit_box_mesh(dim, n)
    A = assemble_stiffness(mesh, LameParams(1.0, 2.0))
    # duplicate summation order in the sparse conversion costs an ulp
    asym = abs(A - A.T).max()
    assert asym <= 1e-12 * abs(A).max()
    evals = np.linalg.eigvalsh(A.toarray())
    assert evals[0] > 0


def test_form_matrix_weights_default_to_volumes():
    mesh = build_unit_box_mesh(2, 4)
    dm = build_dof_map(mesh)
    A = vector_p1_form_matrix(mesh, dm, None, c_grad=1.0, c_div=0.5)
    B = vector_p1_form_matrix(mesh, dm, cell_volumes(mesh), c_grad=1.0, c_div=0.5)
    assert abs(A - B).max() == 0.0


def test_form_matrix_empty_free_space():
    mesh = build_unit_box_mesh(2, 1)
    dm = build_dof_map(mesh)
    assert dm.n_free == 0
    A = vector_p1_form_matrix(mesh, dm, None, c_grad=1.0)
    assert A.shape == (0, 0)


def test_invalid_form_name():
    mesh = build_unit_box_mesh(2, 2)
    with pytest.raises(ValueError):
        assemble_stiffness(mesh, LameParams(1.0, 1.0), form="FOO")


@pytest.mark.parametrize("dim,n", [(2, 5), (3, 3)])
def test_point_load_partition_of_unity(dim, n):
    mesh = build_unit_box_mesh(dim, n)
    rng = np.random.default_rng(3)
    pts = 0.1 + 0.8 * rng.random((4, dim))
    forces = rng.standard_normal((4, dim))
    nodal = point_load_nodal(mesh, PointLoadSet(pts, forces))
    assert nodal.shape == (mesh.num_vertices, dim)
    assert np.allclose(nodal.sum(axis=0), forces.sum(axis=0), atol=1e-13)


def test_point_load_at_vertex_hits_single_node():
    mesh = build_unit_box_mesh(2, 4)
    target = np.array([0.5, 0.25])
    v = int(np.flatnonzero((mesh.vertices == target).all(axis=1))[0])
    nodal = point_load_nodal(mesh, PointLoadSet([target], [[3.0, -1.0]]))
    expected = np.zeros_like(nodal)
    expected[v] = [3.0, -1.0]
    assert np.array_equal(nodal, expected)


def test_point_load_is_linear_in_loads():
    mesh = build_unit_box_mesh(2, 3)
    a = PointLoadSet([[0.3, 0.4]], [[1.0, 2.0]])
    b = PointLoadSet([[0.7, 0.6]], [[-1.0, 0.5]])
    both = PointLoadSet([[0.3, 0.4], [0.7, 0.6]], [[1.0, 2.0], [-1.0, 0.5]])
    s = point_load_nodal(mesh, a) + point_load_nodal(mesh, b)
    assert np.allclose(point_load_nodal(mesh, both), s, atol=1e-15)


@pytest.mark.parametrize("dim,n", [(2, 4), (3, 2)])
def test_assemble_point_load_restricts_to_free(dim, n):
    mesh = build_unit_box_mesh(dim, n)
    dm = build_dof_map(mesh)
    loads = PointLoadSet([np.full(dim, 0.5)], [np.arange(1.0, dim + 1.0)])
    full = point_load_nodal(mesh, loads)
    b = assemble_point_load(mesh, dm, loads)
    assert b.shape == (dm.n_free,)
    for v in range(mesh.num_vertices):
        for c in range(dim):
            k = dm.free_index[v, c]
            if k >= 0:
                assert b[k] == full[v, c]


def test_load_dim_mismatch_raises():
    mesh = build_unit_box_mesh(3, 2)
    dm = build_dof_map(mesh)
    loads = PointLoadSet([[0.5, 0.5]], [[1.0, 0.0]])
    with pytest.raises(ValueError):
        assemble_point_load(mesh, dm, loads)


@pytest.mark.parametrize("dim,n", [(2, 4), (3, 2)])
def test_smooth_constant_load_recovers_hat_integrals(dim, n):
    # sum_i int phi_i = |box| per component, and a constant integrand is
    # integrated exactly by every rule, so the orders must agree
    mesh = build_unit_box_mesh(dim, n)
    dm = build_dof_map(mesh)
    f = lambda x: np.tile(np.arange(1.0, dim + 1.0), (x.shape[0], 1))
    b2 = assemble_smooth_load(mesh, dm, f, quad_order=2)
    b4 = assemble_smooth_load(mesh, dm, f, quad_order=4)
    assert np.allclose(b2, b4, atol=1e-14)
    full = np.zeros((mesh.num_vertices, dim))
    free = dm.free_index >= 0
    full[free] = b4[dm.free_index[free]]
    # hat functions of interior vertices each integrate to 1/n^d * const?
    # no closed form per vertex, but the total over all vertices is exact
    # once boundary hats are added back; use a mesh-level linear check:
    # f constant c -> nodal vector sums to c * (volume covered by free hats)
    hats = np.zeros(mesh.num_vertices)
    vols = cell_volumes(mesh)
    for ci in range(mesh.num_cells):
        hats[mesh.cells[ci]] += vols[ci] / (dim + 1)
    expected = hats[:, None] * np.arange(1.0, dim + 1.0)[None, :]
    assert np.allclose(full[~mesh.boundary_vertex],
                       expected[~mesh.boundary_vertex], atol=1e-14)
