"""Nested-mesh error measurement and convergence-rate studies.

For point loads there is no closed-form solution on the box, so the
error at each level is measured against the discrete solution on a
reference mesh at least two dyadic levels finer; nested P1 spaces make
the comparison exact (prolongation introduces no interpolation error).
Smooth manufactured problems are measured against the exact field by
quadrature instead.
"""

from dataclasses import dataclass
from math import log, sqrt
from typing import Callable, Optional

import numpy as np

from .assembly import (GRAD_DIV, LameParams, PointLoadSet,
                       assemble_point_load, assemble_smooth_load,
                       assemble_stiffness, build_dof_map)
from .mesh import build_unit_box_mesh, cell_volumes, _lattice_strides
from .quadrature import simplex_rule
from .solver import cg_solve

# cells per chunk in the exact mass-norm accumulation
_NORM_CHUNK = 400_000


class StudyError(RuntimeError):
    """A level of a convergence study failed to solve."""


@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact solution / forcing pair; both map (m, d) points to (m, d)."""

    u: Callable
    f: Callable
    description: str


@dataclass(frozen=True)
class ReportRow:
    level: int
    n: int
    h: float
    ndof: int
    error_l2: float
    eoc: Optional[float]


@dataclass(frozen=True)
class ConvergenceReport:
    dim: int
    params: LameParams
    load_description: str
    reference_n: Optional[int]
    rows: tuple


def manufactured_sine_2d(params):
    """u = sin(pi x) sin(pi y) (1, 1)^T with its elasticity forcing."""
    mu, lam = params.mu, params.lam
    pi = np.pi

    def u(pts):
        w = np.sin(pi * pts[:, 0]) * np.sin(pi * pts[:, 1])
        return np.stack([w, w], axis=1)

    def f(pts):
        sx, sy = np.sin(pi * pts[:, 0]), np.sin(pi * pts[:, 1])
        cx, cy = np.cos(pi * pts[:, 0]), np.cos(pi * pts[:, 1])
        g = pi * pi * ((3.0 * mu + lam) * sx * sy - (mu + lam) * cx * cy)
        return np.stack([g, g], axis=1)

    return ManufacturedSolution(u, f, "manufactured sine field (2d)")


def _prolong_grid(values, dim, n):
    """Nodal values on the (n+1)^d lattice to the (2n+1)^d lattice.

    Exact for the box triangulations: every new vertex is the midpoint
    of the lattice segment [I//2, I//2 + (I odd-mask)], which is an
    edge of the coarse split, so P1 interpolation is the midpoint
    average.
    """
    m = 2 * n
    axes = np.meshgrid(*([np.arange(m + 1, dtype=np.int64)] * dim),
                       indexing="ij")
    I = np.stack([a.ravel() for a in axes], axis=1)
    strides = _lattice_strides(dim, n)
    lo = (I // 2) @ strides
    hi = (I // 2 + (I & 1)) @ strides
    return 0.5 * (values[lo] + values[hi])


def prolongate(coarse_mesh, values, fine_mesh):
    """Inject a nodal field from mesh(n) into mesh(2n) exactly."""
    if coarse_mesh.dim != fine_mesh.dim:
        raise ValueError("meshes have different dimensions")
    if fine_mesh.n != 2 * coarse_mesh.n:
        raise ValueError("fine mesh must halve the coarse mesh size "
                         "(n=%d vs n=%d)" % (coarse_mesh.n, fine_mesh.n))
    values = np.asarray(values, dtype=float)
    if values.shape[0] != coarse_mesh.num_vertices:
        raise ValueError("field size does not match the coarse mesh")
    return _prolong_grid(values, coarse_mesh.dim, coarse_mesh.n)


def l2_norm_sq_p1(mesh, values):
    """Exact integral of |v_h|^2 for a nodal P1 field.

    Uses the closed-form simplex mass: for nodal values v_i on a cell,
    int (sum_i lambda_i v_i)^2 = |T| ((sum v)^2 + sum v^2) / ((d+1)(d+2)).
    """
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    vols = cell_volumes(mesh)
    scale = 1.0 / ((mesh.dim + 1) * (mesh.dim + 2))
    total = 0.0
    for lo in range(0, mesh.num_cells, _NORM_CHUNK):
        hi = min(lo + _NORM_CHUNK, mesh.num_cells)
        cv = vals[mesh.cells[lo:hi]]
        ssum = cv.sum(axis=1)
        per_cell = (ssum * ssum + (cv * cv).sum(axis=1)).sum(axis=1)
        total += float(vols[lo:hi] @ per_cell)
    return total * scale


def l2_error_nested(level_mesh, u_level, ref_mesh, u_ref):
    """L2 distance between a level solution and a nested reference.

    The level field is prolongated through the intermediate dyadic
    grids onto the reference mesh; the reference must be at least two
    levels finer.
    """
    if level_mesh.dim != ref_mesh.dim:
        raise ValueError("meshes have different dimensions")
    ratio = ref_mesh.n / level_mesh.n
    k = int(round(log(ratio, 2))) if ratio > 1 else 0
    if level_mesh.n * 2 ** k != ref_mesh.n or k < 2:
        raise ValueError("reference mesh must be >= 2 dyadic levels finer "
                         "(n=%d vs n=%d)" % (level_mesh.n, ref_mesh.n))
    u_ref = np.asarray(u_ref, dtype=float)
    v = np.asarray(u_level, dtype=float)
    n = level_mesh.n
    while n < ref_mesh.n:
        v = _prolong_grid(v, level_mesh.dim, n)
        n *= 2
    return sqrt(l2_norm_sq_p1(ref_mesh, v - u_ref))


def l2_error_quadrature(mesh, values, u_exact, quad_order=4):
    """L2 distance between a nodal P1 field and a smooth exact field."""
    bary, qw = simplex_rule(mesh.dim, quad_order)
    vols = cell_volumes(mesh)
    verts = mesh.vertices[mesh.cells]
    vals = np.asarray(values, dtype=float)
    pts = np.einsum("qi,xid->xqd", bary, verts)
    ue = np.asarray(u_exact(pts.reshape(-1, mesh.dim)), dtype=float)
    ue = ue.reshape(mesh.num_cells, len(qw), mesh.dim)
    uh = np.einsum("qi,xic->xqc", bary, vals[mesh.cells])
    diff2 = ((ue - uh) ** 2).sum(axis=2)
    return sqrt(float(vols @ (diff2 @ qw)))


def eoc(errors, hs):
    """Experimental orders log(e_{i-1}/e_i) / log(h_{i-1}/h_i)."""
    errors = [float(e) for e in errors]
    hs = [float(h) for h in hs]
    if len(errors) != len(hs) or len(errors) < 2:
        raise ValueError("need matching error/h lists of length >= 2")
    if any(e <= 0.0 for e in errors):
        raise ValueError("errors must be positive for rate computation")
    if any(h <= 0.0 for h in hs):
        raise ValueError("mesh sizes must be positive")
    return [log(errors[i - 1] / errors[i]) / log(hs[i - 1] / hs[i])
            for i in range(1, len(errors))]


def _solve_level(dim, n, params, forcing, rel_tol, max_iter):
    mesh = build_unit_box_mesh(dim, n)
    dofmap = build_dof_map(mesh)
    A = assemble_stiffness(mesh, params, GRAD_DIV)
    if isinstance(forcing, PointLoadSet):
        b = assemble_point_load(mesh, dofmap, forcing)
    else:
        b = assemble_smooth_load(mesh, dofmap, forcing.f, 4)
    x, stats = cg_solve(A, b, rel_tol=rel_tol, max_iter=max_iter)
    if not stats.converged:
        raise StudyError(
            "cg did not converge at level n=%d (%d iterations, relative "
            "residual %.3e)" % (n, stats.iterations,
                                stats.final_relative_residual))
    full = np.zeros((mesh.num_vertices, dim))
    free = dofmap.free_index >= 0
    full[free] = x[dofmap.free_index[free]]
    return mesh, full, dofmap.n_free


def run_convergence_study(dim, levels, params, forcing, ref_extra_levels=2,
                          rel_tol=1e-10, max_iter=None):
    """Solve a doubling sequence of levels and tabulate L2 errors/EOCs.

    forcing is either a PointLoadSet (errors against a nested reference
    ref_extra_levels finer than the last level) or a
    ManufacturedSolution (errors against the exact field).
    """
    levels = [int(n) for n in levels]
    if not levels or levels[0] < 1:
        raise ValueError("levels must start at a positive n")
    for a, b in zip(levels, levels[1:]):
        if b != 2 * a:
            raise ValueError("levels must double: %d does not follow %d"
                             % (b, a))
    ref_extra_levels = int(ref_extra_levels)
    if ref_extra_levels < 2:
        raise ValueError("ref_extra_levels must be >= 2")

    point_load = isinstance(forcing, PointLoadSet)
    if point_load:
        description = "%d point load(s)" % len(forcing)
    else:
        description = forcing.description

    solutions = []
    hs = []
    ndofs = []
    for n in levels:
        mesh, full, n_free = _solve_level(dim, n, params, forcing,
                                          rel_tol, max_iter)
        hs.append(mesh.h)
        ndofs.append(n_free)
        solutions.append((mesh, full))

    errors = []
    if point_load:
        ref_n = levels[-1] * 2 ** ref_extra_levels
        ref_mesh, ref_full, _ = _solve_level(dim, ref_n, params, forcing,
                                             rel_tol, max_iter)
        for (mesh, full) in solutions:
            errors.append(l2_error_nested(mesh, full, ref_mesh, ref_full))
        reference_n = ref_n
    else:
        for (mesh, full) in solutions:
            errors.append(l2_error_quadrature(mesh, full, forcing.u))
        reference_n = None

    rates = eoc(errors, hs) if len(errors) >= 2 else []
    rows = []
    for i, n in enumerate(levels):
        rows.append(ReportRow(level=i + 1, n=n, h=hs[i], ndof=ndofs[i],
                              error_l2=errors[i],
                              eoc=None if i == 0 else rates[i - 1]))
    return ConvergenceReport(dim=dim, params=params,
                             load_description=description,
                             reference_n=reference_n, rows=tuple(rows))
