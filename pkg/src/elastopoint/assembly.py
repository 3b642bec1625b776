"""Vector P1 assembly for the elasticity forms and load vectors.

The stiffness matrix comes in two algebraically equal flavours on the
zero-trace space,

    GRAD_DIV:  mu (grad u, grad v) + (mu + lambda) (div u, div v)
    EPS_DIV:   2 mu (eps(u), eps(v)) + lambda (div u, div v)

both built from one parametrized cellwise kernel. All element
integrands are cellwise constant for P1, so assembly is exact.

Free degrees of freedom are the (vertex, component) pairs of interior
vertices, ordered by vertex index then component. Sparse outputs are
scipy CSR matrices over the free dofs.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import cell_geometry, locate_point
from .quadrature import simplex_rule

CONSTRAINED = -1

GRAD_DIV = "GRAD_DIV"
EPS_DIV = "EPS_DIV"

# element-matrix entries per einsum chunk; bounds transient memory
_CHUNK_ENTRIES = 8_000_000


@dataclass(frozen=True)
class LameParams:
    """Positive Lame constants."""

    mu: float
    lam: float

    def __post_init__(self):
        if not (self.mu > 0 and self.lam > 0):
            raise ValueError("Lame constants must be positive, got mu=%r "
                             "lambda=%r" % (self.mu, self.lam))


@dataclass(frozen=True)
class PointLoadSet:
    """Point forces sum_k f_k delta_{x_k} with strictly interior x_k."""

    points: np.ndarray
    forces: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        fcs = np.atleast_2d(np.asarray(self.forces, dtype=float))
        if pts.shape != fcs.shape or pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("points and forces must be matching (K, d) "
                             "arrays with K >= 1")
        if np.any(pts <= 0.0) or np.any(pts >= 1.0):
            raise ValueError("load locations must lie strictly inside "
                             "the unit box")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "forces", fcs)

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class DofMap:
    """Free-dof numbering: (vertex, component) pairs on interior vertices.

    free_index[v, c] is the free dof number or CONSTRAINED for boundary
    vertices.
    """

    mesh: object
    free_index: np.ndarray
    n_free: int


def build_dof_map(mesh):
    free = np.full((mesh.num_vertices, mesh.dim), CONSTRAINED,
                   dtype=np.int64)
    interior = ~mesh.boundary_vertex
    n_int = int(interior.sum())
    idx = np.arange(n_int * mesh.dim, dtype=np.int64).reshape(n_int, mesh.dim)
    free[interior] = idx
    return DofMap(mesh, free, n_int * mesh.dim)


def _element_matrices(vols, grads, c_grad, c_div, c_eps):
    """Element matrices of the parametrized vector form on a cell batch.

    Local dof (i, a) = vertex i, component a, flattened vertex-major.
    Entry[(i,a),(j,b)] = vol * ( c_grad * d_ab (g_i . g_j)
                               + c_div  * g_i[a] g_j[b]
                               + c_eps  * 0.5 (d_ab (g_i . g_j)
                                               + g_i[b] g_j[a]) ).
    """
    m, nv, d = grads.shape
    eye = np.eye(d)
    K = np.zeros((m, nv, d, nv, d))
    dots = None
    if c_grad or c_eps:
        dots = np.einsum("xia,xja->xij", grads, grads)
        gg = dots[:, :, None, :, None] * eye[None, None, :, None, :]
    if c_grad:
        K += c_grad * gg
    if c_div:
        K += c_div * np.einsum("xia,xjb->xiajb", grads, grads)
    if c_eps:
        K += (0.5 * c_eps) * (gg + np.einsum("xib,xja->xiajb", grads, grads))
    K *= vols[:, None, None, None, None]
    return K.reshape(m, nv * d, nv * d)


def vector_p1_form_matrix(mesh, dofmap, cell_weights=None, c_grad=0.0,
                          c_div=0.0, c_eps=0.0):
    """CSR matrix of a cellwise-constant vector P1 bilinear form.

    cell_weights scales each cell's contribution; None means plain cell
    volumes (unweighted form), integrals of a weight over each cell
    give the weighted form. Constrained rows/columns are eliminated
    symmetrically. Deterministic: fixed chunking and accumulation
    order.
    """
    d = mesh.dim
    nv = d + 1
    ldof = nv * d
    if dofmap.n_free == 0:
        return sp.csr_matrix((0, 0))

    vols, grads = cell_geometry(mesh)
    if cell_weights is None:
        weights = vols
    else:
        weights = np.asarray(cell_weights, dtype=float)
        if weights.shape != (mesh.num_cells,):
            raise ValueError("cell_weights must have one entry per cell")

    gdofs = dofmap.free_index[mesh.cells].reshape(-1, ldof)
    shape = (dofmap.n_free, dofmap.n_free)
    acc = sp.csr_matrix(shape)
    chunk = max(1, _CHUNK_ENTRIES // (ldof * ldof))
    for lo in range(0, mesh.num_cells, chunk):
        hi = min(lo + chunk, mesh.num_cells)
        K = _element_matrices(weights[lo:hi], grads[lo:hi],
                              c_grad, c_div, c_eps)
        g = gdofs[lo:hi]
        rows = np.broadcast_to(g[:, :, None], K.shape)
        cols = np.broadcast_to(g[:, None, :], K.shape)
        keep = (rows >= 0) & (cols >= 0)
        part = sp.coo_matrix(
            (K[keep], (rows[keep], cols[keep])), shape=shape).tocsr()
        acc = acc + part
    acc.sum_duplicates()
    acc.sort_indices()
    return acc


def assemble_stiffness(mesh, params, form=GRAD_DIV):
    """Elasticity stiffness on free dofs in either algebraic form.

    Returns an empty 0 x 0 matrix when the mesh has no interior
    vertices (n_free = 0); that is a signal, not an error.
    """
    if form == GRAD_DIV:
        coeffs = dict(c_grad=params.mu, c_div=params.mu + params.lam)
    elif form == EPS_DIV:
        coeffs = dict(c_eps=2.0 * params.mu, c_div=params.lam)
    else:
        raise ValueError("form must be GRAD_DIV or EPS_DIV, got %r" % (form,))
    dofmap = build_dof_map(mesh)
    return vector_p1_form_matrix(mesh, dofmap, **coeffs)


def point_load_nodal(mesh, loads):
    """Pre-elimination nodal load vector, shape (nv, dim).

    Entry (vertex v, component c) accumulates f_k[c] * lambda_v(x_k)
    over all loads, boundary vertices included. Summing each column
    recovers sum_k f_k exactly up to roundoff (partition of unity).
    """
    if loads.dim != mesh.dim:
        raise ValueError("load dimension %d does not match mesh dimension %d"
                         % (loads.dim, mesh.dim))
    out = np.zeros((mesh.num_vertices, mesh.dim))
    for xk, fk in zip(loads.points, loads.forces):
        loc = locate_point(mesh, xk)
        for lv, lam in zip(mesh.cells[loc.cell_index], loc.barycentric):
            out[lv] += lam * fk
    return out


def assemble_point_load(mesh, dofmap, loads):
    """Free-dof load vector for f = sum_k f_k delta_{x_k}."""
    nodal = point_load_nodal(mesh, loads)
    b = np.zeros(dofmap.n_free)
    free = dofmap.free_index >= 0
    b[dofmap.free_index[free]] = nodal[free]
    return b


def assemble_smooth_load(mesh, dofmap, f, quad_order):
    """Free-dof load vector int f . phi_i dx by cellwise quadrature.

    f maps an (m, dim) array of points to an (m, dim) array of values.
    """
    if quad_order not in (1, 2, 4):
        raise ValueError("quad_order must be one of 1, 2, 4, got %r"
                         % (quad_order,))
    bary, qw = simplex_rule(mesh.dim, quad_order)
    vols, _ = cell_geometry(mesh)
    verts = mesh.vertices[mesh.cells]
    # physical quadrature points, (nc, nq, d)
    pts = np.einsum("qi,xid->xqd", bary, verts)
    fvals = np.asarray(f(pts.reshape(-1, mesh.dim)), dtype=float)
    fvals = fvals.reshape(mesh.num_cells, len(qw), mesh.dim)
    # contribution of cell x to vertex slot i: vol * sum_q w_q b_qi f(x_q)
    contrib = np.einsum("q,qi,xqc->xic", qw, bary, fvals)
    contrib *= vols[:, None, None]

    nodal = np.zeros((mesh.num_vertices, mesh.dim))
    np.add.at(nodal, mesh.cells.ravel(),
              contrib.reshape(-1, mesh.dim))
    b = np.zeros(dofmap.n_free)
    free = dofmap.free_index >= 0
    b[dofmap.free_index[free]] = nodal[free]
    return b
