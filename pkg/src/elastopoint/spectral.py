"""Discrete inf-sup constants, kernel diagnostics, and Korn constants.

The generic machinery works on coefficient matrices: a pairing P
between spaces U (trial, columns) and V (test, rows) with SPD Grams
becomes the whitened matrix L_V^{-1} P L_U^{-T}, whose smallest
singular value as a map from U is the discrete inf-sup constant

    inf_u sup_v P(u, v) / (|u| |v|).

Conventions for degenerate shapes: an empty trial space gives +inf
(infimum over the empty set), a trial space larger than the test space
gives 0.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .assembly import build_dof_map, vector_p1_form_matrix
from .mesh import cell_geometry
from .weights import WeightSpec, cell_weight_integrals

# relative singular-value cutoff for rank decisions
RANK_RTOL = 1e-10

_DENSE_EIG_LIMIT = 2000


@dataclass(frozen=True)
class InfSupReport:
    """Discrete counterparts of the four well-posedness constants.

    alpha_A_kernel restricts trial and test to the constraint kernels;
    alpha_A_full takes the test supremum over the whole test space (the
    flawed variant, kept for contrast). Always
    alpha_A_kernel <= alpha_A_full + 1e-10.
    """

    beta_B: float
    beta_C: float
    alpha_A_kernel: float
    alpha_A_full: float
    injective_on_kernels: bool


def _as_matrix(P, name):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2:
        raise ValueError("%s must be a matrix, got ndim=%d" % (name, P.ndim))
    return P


def _chol_gram(G, n, name):
    G = np.asarray(G, dtype=float)
    if G.shape != (n, n):
        raise ValueError("%s must be %d x %d, got %s" % (name, n, n, G.shape))
    if n == 0:
        return G.reshape(0, 0)
    scale = max(1.0, float(np.abs(G).max()))
    if float(np.abs(G - G.T).max()) > 1e-10 * scale:
        raise ValueError("%s is not symmetric" % name)
    try:
        return np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise ValueError("%s is not positive definite" % name) from None


def _whiten_rows(L, P):
    # L^{-1} P
    if P.shape[0] == 0:
        return P
    return scipy.linalg.solve_triangular(L, P, lower=True)


def _whiten_cols(L, P):
    # P L^{-T}
    if P.shape[1] == 0:
        return P
    return scipy.linalg.solve_triangular(L, P.T, lower=True).T


def _map_sigma_min(W, trial_dim):
    """Smallest singular value of W as a map from a trial_dim space."""
    if trial_dim == 0:
        return math.inf
    if trial_dim > W.shape[0]:
        return 0.0
    s = np.linalg.svd(W, compute_uv=False)
    return float(s[-1])


def discrete_infsup(B, G_Y, G_M):
    """Discrete inf-sup constant of a pairing B(v, r), v in Y, r in M.

    B has one row per M-basis function and one column per Y-basis
    function: B[i, j] = B(v_j, r_i). Returns the smallest singular
    value of the whitened pairing as a map from M; +inf when M is
    trivial, 0 when dim M exceeds dim Y.
    """
    B = _as_matrix(B, "B")
    nM, nY = B.shape
    if nM == 0:
        return math.inf
    if nM > nY:
        return 0.0
    L_Y = _chol_gram(G_Y, nY, "G_Y")
    L_M = _chol_gram(G_M, nM, "G_M")
    W = _whiten_cols(L_Y, _whiten_rows(L_M, B))
    return _map_sigma_min(W, nM)


def kernel_basis(C, G_X):
    """G_X-orthonormal basis Z of ker C = {w : C(w, q) = 0 for all q}.

    C[i, j] = C(w_j, q_i). Satisfies C Z = 0 and Z^T G_X Z = I within
    1e-10; the kernel dimension is n_X minus the numerical rank of C
    (singular values above RANK_RTOL relative).
    """
    C = _as_matrix(C, "C")
    nQ, nX = C.shape
    L_X = _chol_gram(G_X, nX, "G_X")
    if nX == 0:
        return np.zeros((0, 0))
    if nQ == 0:
        V_ker = np.eye(nX)
    else:
        W = _whiten_cols(L_X, C)
        _, s, Vt = np.linalg.svd(W, full_matrices=True)
        smax = float(s[0]) if s.size else 0.0
        rank = int(np.sum(s > RANK_RTOL * smax)) if smax > 0.0 else 0
        V_ker = Vt[rank:].T
    # back-transform the whitened basis: Z = L_X^{-T} V_ker
    return scipy.linalg.solve_triangular(L_X, V_ker, lower=True, trans="T")


def theorem31_report(A, B, C, G_X, G_Y, G_M, G_Q):
    """All four discrete constants for the generalized saddle problem.

    Orientations: A[i, j] = A(w_j, v_i) (test Y rows, trial X cols);
    B[i, j] = B(v_j, r_i); C[i, j] = C(w_j, q_i).

    When ker C is trivial the kernel restriction of the trial space is
    vacuous and both alpha values are reported as the unrestricted
    whitened smallest singular value of A (this makes identity inputs
    report 1, and keeps the two alphas comparable).
    """
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    C = _as_matrix(C, "C")
    nY, nX = A.shape
    if B.shape[1] != nY:
        raise ValueError("B must have %d columns, got %s" % (nY, B.shape))
    if C.shape[1] != nX:
        raise ValueError("C must have %d columns, got %s" % (nX, C.shape))

    beta_B = discrete_infsup(B, G_Y, G_M)
    beta_C = discrete_infsup(C, G_X, G_Q)

    L_X = _chol_gram(G_X, nX, "G_X")
    L_Y = _chol_gram(G_Y, nY, "G_Y")
    Z_C = kernel_basis(C, G_X)
    Z_B = kernel_basis(B, G_Y)
    kC = Z_C.shape[1]
    kB = Z_B.shape[1]

    if kC == 0:
        W = _whiten_cols(L_X, _whiten_rows(L_Y, A))
        alpha_kernel = _map_sigma_min(W, nX)
        alpha_full = alpha_kernel
    else:
        M_res = Z_B.T @ A @ Z_C
        alpha_kernel = _map_sigma_min(M_res, kC)
        W_full = _whiten_rows(L_Y, A @ Z_C)
        alpha_full = _map_sigma_min(W_full, kC)

    if kB == 0:
        injective = True
    elif kC == 0 or kB > kC:
        injective = False
    else:
        s = np.linalg.svd(Z_B.T @ A @ Z_C, compute_uv=False)
        smax = float(s[0]) if s.size else 0.0
        injective = bool(smax > 0.0 and s[kB - 1] > RANK_RTOL * smax)

    return InfSupReport(beta_B, beta_C, alpha_kernel, alpha_full, injective)


def _sym_tensor_basis(d):
    """Orthonormal (Frobenius) basis of symmetric d x d tensors."""
    basis = []
    for i in range(d):
        E = np.zeros((d, d))
        E[i, i] = 1.0
        basis.append(E)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            E = np.zeros((d, d))
            E[i, j] = inv_sqrt2
            E[j, i] = inv_sqrt2
            basis.append(E)
    return np.array(basis)


def weighted_pairing_matrices(mesh, s, center):
    """Discrete spaces and pairings of the weighted tensor demo.

    X: cellwise-constant symmetric tensors with the r^{ds}-weighted L2
    Gram; Y: the same tensor space with the r^{-ds} Gram; M and Q: the
    zero-trace vector P1 space with weighted gradient Grams (exponents
    ds and -ds). A is the unweighted tensor pairing, and B = C is the
    strain pairing int eps(z) : Sigma dx.

    Returns (A, B, C, G_X, G_Y, G_M, G_Q), all dense.
    """
    if not -1.0 < float(s) < 1.0:
        raise ValueError("s must lie strictly in (-1, 1), got %r" % (s,))
    center = np.asarray(center, dtype=float).reshape(-1)
    if center.shape != (mesh.dim,):
        raise ValueError("center must have %d coordinates" % mesh.dim)
    if np.any(center <= 0.0) or np.any(center >= 1.0):
        raise ValueError("center must be strictly inside the unit box")

    d = mesh.dim
    dofmap = build_dof_map(mesh)
    if dofmap.n_free == 0:
        raise ValueError("mesh has no interior vertices")

    vols, grads = cell_geometry(mesh)
    alpha = d * float(s)
    if s == 0.0:
        w_pos = w_neg = vols
    else:
        w_pos = cell_weight_integrals(mesh, WeightSpec(center[None, :],
                                                       alpha), 4)
        w_neg = cell_weight_integrals(mesh, WeightSpec(center[None, :],
                                                       -alpha), 4)
    basis = _sym_tensor_basis(d)
    nsym = basis.shape[0]
    nc = mesh.num_cells
    nX = nc * nsym

    G_X = np.diag(np.repeat(w_pos, nsym))
    G_Y = np.diag(np.repeat(w_neg, nsym))
    A = np.diag(np.repeat(vols, nsym))

    # B[(free dof of z), (cell, a)] = vol * eps(z)|_cell : E_a
    epsvals = np.einsum("xip,apc->xica", grads, basis)
    epsvals *= vols[:, None, None, None]
    B = np.zeros((dofmap.n_free, nX))
    fidx = dofmap.free_index[mesh.cells]
    cols = (np.arange(nc) * nsym)[:, None] + np.arange(nsym)[None, :]
    for i in range(d + 1):
        for c in range(d):
            rows = fidx[:, i, c]
            keep = rows >= 0
            np.add.at(B, (rows[keep][:, None], cols[keep]),
                      epsvals[keep, i, c, :])

    G_M = vector_p1_form_matrix(mesh, dofmap, w_pos, c_grad=1.0).toarray()
    G_Q = vector_p1_form_matrix(mesh, dofmap, w_neg, c_grad=1.0).toarray()
    return A, B, B.copy(), G_X, G_Y, G_M, G_Q


def weighted_pairing_demo(mesh, s, center):
    """Kernel-vs-full inf-sup contrast for the weighted tensor pairing.

    Reports the honest alpha (test supremum over ker of the strain
    pairing, trial over the mirrored kernel) next to the full-space
    variant. At s = 0 both equal 1 up to roundoff.
    """
    A, B, C, G_X, G_Y, G_M, G_Q = weighted_pairing_matrices(mesh, s, center)
    return theorem31_report(A, B, C, G_X, G_Y, G_M, G_Q)


def discrete_korn_constant(mesh, spec=None):
    """C_h = lambda_min^{-1/2} for the pencil (strain form, grad form).

    Both forms share the cellwise weight integrals (plain volumes when
    spec is None). Unweighted, lambda_min lies in [1/2, 1]. Uses a
    dense generalized eigensolve up to 2000 free dofs and shift-invert
    Lanczos beyond.
    """
    dofmap = build_dof_map(mesh)
    if dofmap.n_free == 0:
        raise ValueError("mesh has no interior vertices")
    if spec is None:
        wints = None
    else:
        wints = cell_weight_integrals(mesh, spec, 4)
    E = vector_p1_form_matrix(mesh, dofmap, wints, c_eps=1.0)
    G = vector_p1_form_matrix(mesh, dofmap, wints, c_grad=1.0)

    if dofmap.n_free <= _DENSE_EIG_LIMIT:
        lam = scipy.linalg.eigh(E.toarray(), G.toarray(),
                                eigvals_only=True,
                                subset_by_index=(0, 0))[0]
    else:
        vals = spla.eigsh(E.tocsc(), k=1, M=G.tocsc(), sigma=0.0,
                          which="LM", tol=1e-10,
                          return_eigenvectors=False)
        lam = float(vals[0])
    if not lam > 0.0:
        raise ValueError("degenerate pencil: lambda_min = %r" % (lam,))
    return float(1.0 / math.sqrt(lam))
