"""SPD linear algebra: preconditioned CG and small dense kernels."""

from dataclasses import dataclass
from math import sqrt

import numpy as np


@dataclass(frozen=True)
class SolveStats:
    iterations: int
    final_relative_residual: float
    converged: bool


def default_max_iter(n):
    return int(20 * sqrt(max(n, 0))) + 200


def cg_solve(A, b, rel_tol=1e-10, max_iter=None, callback=None):
    """Jacobi-preconditioned conjugate gradients for SPD systems.

    Convergence is declared on the true residual: when the recurrence
    residual passes the tolerance the residual is recomputed as
    b - A x, replacing the recurrence value if the check fails so that
    the reported status is honest. Non-convergence within max_iter is
    reported via stats, not raised.

    Parameters
    ----------
    A : scipy sparse matrix or ndarray, SPD over free dofs.
    b : ndarray
    rel_tol : float in (0, 1)
    max_iter : int, defaults to 20 sqrt(n) + 200
    callback : optional callable receiving the iterate after each step
        (diagnostics only).

    Returns
    -------
    (x, SolveStats)
    """
    if not (0.0 < rel_tol < 1.0):
        raise ValueError("rel_tol must lie in (0, 1), got %r" % (rel_tol,))
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix/vector size mismatch: %s vs %d"
                         % (A.shape, n))
    if max_iter is None:
        max_iter = default_max_iter(n)
    if n == 0:
        return np.zeros(0), SolveStats(0, 0.0, True)

    diag = A.diagonal() if hasattr(A, "diagonal") else np.diag(A)
    diag = np.asarray(diag, dtype=float)
    if np.any(diag == 0.0):
        raise ValueError("zero diagonal entry; Jacobi preconditioner "
                         "undefined")
    inv_diag = 1.0 / diag

    bnorm = np.linalg.norm(b)
    x = np.zeros(n)
    if bnorm == 0.0:
        return x, SolveStats(0, 0.0, True)

    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    it = 0
    converged = False
    while it < max_iter:
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            break
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        it += 1
        if callback is not None:
            callback(x.copy())
        if np.linalg.norm(r) <= rel_tol * bnorm:
            r_true = b - A @ x
            if np.linalg.norm(r_true) <= rel_tol * bnorm:
                converged = True
                break
            # recurrence drifted; replace and keep going
            r = r_true
            z = inv_diag * r
            p = z.copy()
            rz = float(r @ z)
            continue
        z = inv_diag * r
        rz_new = float(r @ z)
        beta = rz_new / rz
        p = z + beta * p
        rz = rz_new

    final_rel = float(np.linalg.norm(b - A @ x) / bnorm)
    if converged:
        converged = final_rel <= rel_tol
    return x, SolveStats(it, final_rel, converged)


def dense_sym_eig(M):
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    Raises ValueError for asymmetric input (1e-10 relative) or size
    above 2000.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    if M.shape[0] > 2000:
        raise ValueError("dense eigendecomposition limited to size 2000")
    scale = max(1.0, float(np.abs(M).max()) if M.size else 0.0)
    if M.size and float(np.abs(M - M.T).max()) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric within 1e-10")
    w, V = np.linalg.eigh(M)
    return w, V


def dense_cholesky(M):
    """Lower Cholesky factor of an SPD matrix.

    numpy.linalg.LinAlgError propagates when a pivot fails.
    """
    M = np.asarray(M, dtype=float)
    return np.linalg.cholesky(M)
