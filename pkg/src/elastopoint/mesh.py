"""Structured simplicial meshes of the unit box (0,1)^d, d = 2 or 3.

Every grid cube is split into d! simplices sharing the main diagonal
(two triangles per square, six tetrahedra per cube). This split is
reproduced by dyadic refinement, so the meshes at n and 2n are nested,
which the convergence machinery relies on.

Vertex numbering is C-order over the (n+1)^d lattice; cells are
numbered cube-major with the d! simplices of a cube in lexicographic
order of their axis permutation.
"""

from dataclasses import dataclass
from itertools import permutations, product
from math import factorial

import numpy as np

LOCATE_TOL = 1e-12


@dataclass(frozen=True)
class Mesh:
    """Simplicial triangulation of the unit box.

    Attributes
    ----------
    dim : int
        Space dimension, 2 or 3.
    n : int
        Grid subdivisions per axis.
    vertices : ndarray, shape (nv, dim)
        Vertex coordinates; grid values k/n.
    cells : ndarray, shape (nc, dim + 1)
        Vertex indices per cell, positively oriented.
    boundary_vertex : ndarray of bool, shape (nv,)
        True iff some coordinate equals 0 or 1 exactly.
    """

    dim: int
    n: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary_vertex: np.ndarray

    @property
    def h(self):
        """Maximal cell diameter, the cube diagonal sqrt(dim)/n."""
        return float(np.sqrt(self.dim)) / self.n

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_cells(self):
        return self.cells.shape[0]


@dataclass(frozen=True)
class CellLocation:
    """A containing cell and barycentric coordinates of a point in it."""

    cell_index: int
    barycentric: np.ndarray


def _perm_parity(p):
    inv = 0
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                inv += 1
    return inv % 2


def _chain_templates(dim):
    """Integer corner offsets of the d! simplices subdividing a unit cube.

    The simplex of permutation pi walks from the cube corner along the
    axes in pi-order. Odd permutations get their last two vertices
    swapped so that every simplex is positively oriented.
    """
    out = []
    for perm in permutations(range(dim)):
        corners = np.zeros((dim + 1, dim), dtype=np.int64)
        for k, axis in enumerate(perm):
            corners[k + 1] = corners[k]
            corners[k + 1, axis] += 1
        if _perm_parity(perm):
            corners[[dim - 1, dim]] = corners[[dim, dim - 1]]
        out.append(corners)
    return np.array(out)


def _lattice_strides(dim, n):
    return np.array([(n + 1) ** (dim - 1 - k) for k in range(dim)],
                    dtype=np.int64)


def build_unit_box_mesh(dim, n):
    """Triangulate the unit box with n subdivisions per axis.

    Parameters
    ----------
    dim : int
        2 or 3.
    n : int
        Cells per side, at least 1.

    Returns
    -------
    Mesh
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3, got %r" % (dim,))
    n = int(n)
    if n < 1:
        raise ValueError("n must be a positive integer, got %r" % (n,))

    grid = np.arange(n + 1, dtype=float) / n
    axes = np.meshgrid(*([grid] * dim), indexing="ij")
    vertices = np.stack([a.ravel() for a in axes], axis=1)

    templates = _chain_templates(dim)
    strides = _lattice_strides(dim, n)
    cube_axes = np.meshgrid(*([np.arange(n, dtype=np.int64)] * dim),
                            indexing="ij")
    cubes = np.stack([a.ravel() for a in cube_axes], axis=1)
    # (n^d, d!, d+1, d) integer lattice coords of every cell vertex
    corner = cubes[:, None, None, :] + templates[None, :, :, :]
    cells = (corner * strides).sum(axis=-1).reshape(-1, dim + 1)

    on_face = (vertices == 0.0) | (vertices == 1.0)
    boundary = on_face.any(axis=1)
    return Mesh(dim, n, vertices, cells, np.ascontiguousarray(boundary))


def cell_gradients(mesh, cell_index):
    """Constant gradients of the d+1 barycentric basis functions of a cell.

    Returns an (d+1, dim) array whose rows sum to zero.
    """
    ci = int(cell_index)
    if not 0 <= ci < mesh.num_cells:
        raise ValueError("cell index %d out of range [0, %d)"
                         % (ci, mesh.num_cells))
    verts = mesh.vertices[mesh.cells[ci]]
    edges = verts[1:] - verts[0]
    grads = np.empty((mesh.dim + 1, mesh.dim))
    grads[1:] = np.linalg.inv(edges).T
    grads[0] = -grads[1:].sum(axis=0)
    return grads


def cell_volumes(mesh):
    """Volumes of all cells, shape (nc,)."""
    verts = mesh.vertices[mesh.cells]
    edges = verts[:, 1:, :] - verts[:, :1, :]
    return np.abs(np.linalg.det(edges)) / factorial(mesh.dim)


def cell_geometry(mesh):
    """Volumes and basis gradients of all cells at once.

    Returns
    -------
    volumes : ndarray, shape (nc,)
    gradients : ndarray, shape (nc, dim + 1, dim)
        gradients[c, i] is the gradient of barycentric function i on
        cell c; rows sum to zero per cell.
    """
    verts = mesh.vertices[mesh.cells]
    edges = verts[:, 1:, :] - verts[:, :1, :]
    vols = np.abs(np.linalg.det(edges)) / factorial(mesh.dim)
    grads = np.empty((mesh.num_cells, mesh.dim + 1, mesh.dim))
    grads[:, 1:, :] = np.transpose(np.linalg.inv(edges), (0, 2, 1))
    grads[:, 0, :] = -grads[:, 1:, :].sum(axis=1)
    return vols, grads


def _barycentric_in(mesh, cell_index, x):
    verts = mesh.vertices[mesh.cells[cell_index]]
    edges = (verts[1:] - verts[0]).T
    lam = np.linalg.solve(edges, x - verts[0])
    bary = np.empty(mesh.dim + 1)
    bary[1:] = lam
    bary[0] = 1.0 - lam.sum()
    return bary


def locate_point(mesh, x):
    """Find the lowest-index cell whose closure contains x.

    Points on shared faces/edges/vertices resolve to the containing
    cell of smallest index. Raises ValueError for x outside the closed
    box (tolerance LOCATE_TOL).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (mesh.dim,):
        raise ValueError("expected a point with %d coordinates" % mesh.dim)
    if np.any(x < -LOCATE_TOL) or np.any(x > 1.0 + LOCATE_TOL):
        raise ValueError("point %s lies outside the closed unit box"
                         % (x.tolist(),))

    n = mesh.n
    xc = np.clip(x, 0.0, 1.0)
    base = np.minimum(np.floor(xc * n).astype(np.int64), n - 1)
    nfact = factorial(mesh.dim)

    # scan candidate cubes (the floor cube and, near grid planes, the
    # one below per axis) in ascending linear index
    ranges = [range(max(b - 1, 0), b + 1) for b in base]
    cube_strides = np.array([n ** (mesh.dim - 1 - k) for k in range(mesh.dim)],
                            dtype=np.int64)
    candidates = sorted(int(np.dot(c, cube_strides)) for c in product(*ranges))
    for cube_lin in candidates:
        for t in range(nfact):
            ci = cube_lin * nfact + t
            bary = _barycentric_in(mesh, ci, x)
            if np.all(bary >= -LOCATE_TOL):
                return CellLocation(ci, bary)
    raise ValueError("point location failed for %s" % (x.tolist(),))


def cells_containing_point(mesh, x):
    """All cells whose closure contains x, ascending by index.

    Interior points give one hit; points on shared faces/edges/vertices
    give every incident cell. locate_point returns the first entry.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (mesh.dim,):
        raise ValueError("expected a point with %d coordinates" % mesh.dim)
    if np.any(x < -LOCATE_TOL) or np.any(x > 1.0 + LOCATE_TOL):
        raise ValueError("point %s lies outside the closed unit box"
                         % (x.tolist(),))
    n = mesh.n
    xc = np.clip(x, 0.0, 1.0)
    base = np.minimum(np.floor(xc * n).astype(np.int64), n - 1)
    nfact = factorial(mesh.dim)
    ranges = [range(max(b - 1, 0), min(b + 1, n - 1) + 1) for b in base]
    cube_strides = np.array([n ** (mesh.dim - 1 - k) for k in range(mesh.dim)],
                            dtype=np.int64)
    hits = []
    for cube_lin in sorted(int(np.dot(c, cube_strides))
                           for c in product(*ranges)):
        for t in range(nfact):
            ci = cube_lin * nfact + t
            bary = _barycentric_in(mesh, ci, x)
            if np.all(bary >= -LOCATE_TOL):
                hits.append(CellLocation(ci, bary))
    return hits
