"""Linear algebra kernels: Jacobi-preconditioned CG and deflated inverse iteration."""
from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import EigenNotConverged, LinearSolveFailed

DENSE_LIMIT = 500


def pcg(A, b, x0=None, rtol=1e-12, maxiter=None):
    """Solve A x = b for symmetric positive definite A.

    Stops when ||b - A x|| <= rtol ||b||.  Returns (x, iterations).
    """
    b = np.asarray(b, dtype=float)
    n = b.size
    if not np.all(np.isfinite(b)):
        raise LinearSolveFailed("non-finite right-hand side")
    maxiter = 10 * n if maxiter is None else maxiter
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise LinearSolveFailed("nonpositive diagonal in SPD solve")
    inv_diag = 1.0 / diag
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if not np.isfinite(bnorm):
        raise LinearSolveFailed("right-hand side norm overflows")
    if bnorm == 0.0:
        return np.zeros(n), 0
    r = b - A @ x
    target = rtol * bnorm
    if np.linalg.norm(r) <= target:
        return x, 0
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for it in range(1, maxiter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if not pAp > 0:
            raise LinearSolveFailed(f"CG breakdown: p.Ap = {pAp}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= target:
            return x, it
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise LinearSolveFailed(f"CG did not reach rtol={rtol} in {maxiter} iterations")


def solve_spd(A, b, x0=None, rtol=1e-12, method="cg"):
    """SPD solve with a dense direct fallback for small systems."""
    n = A.shape[0]
    if method == "dense":
        if n >= DENSE_LIMIT:
            raise LinearSolveFailed(f"dense solve limited to < {DENSE_LIMIT} unknowns")
        return _dense_solve(A, b), 0
    try:
        return pcg(A, b, x0=x0, rtol=rtol)
    except LinearSolveFailed:
        if n < DENSE_LIMIT:
            return _dense_solve(A, b), -1
        raise


def _dense_solve(A, b):
    dense = A.toarray() if sp.issparse(A) else np.asarray(A)
    try:
        return scipy.linalg.solve(dense, b, assume_a="pos")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise LinearSolveFailed(str(exc)) from exc


class _KernelSolver:
    """Solves A x = b for PSD A with ker A = span(1), given 1.b = 0.

    Pins the first unknown to zero and factorises the remaining SPD block.
    """

    def __init__(self, A):
        A = sp.csc_matrix(A)
        self.n = A.shape[0]
        try:
            self.lu = spla.splu(A[1:, 1:].tocsc())
        except RuntimeError as exc:
            raise LinearSolveFailed(f"reduced operator is singular: {exc}") from exc

    def __call__(self, b):
        x = np.zeros(self.n)
        x[1:] = self.lu.solve(b[1:])
        return x


def smallest_nonzero_eigenpair(A, mass, tol=1e-11, maxiter=10_000, seed=0, block=4):
    """Smallest eigenvalue of A x = lam M x on the M-orthogonal complement of constants.

    `mass` is the diagonal of M.  Block inverse iteration without shifts: every
    solve is followed by deflation of the constant vector and a Rayleigh-Ritz
    step on the block, so a near-degenerate lowest pair does not stall the
    iteration.  Returns (lam, x, relative_residual, iterations) with x
    M-normalised.
    """
    mass = np.asarray(mass, dtype=float)
    n = A.shape[0]
    total = mass.sum()
    block = max(1, min(block, n - 1))

    def deflate(V):
        return V - np.outer(np.ones(n), mass @ V) / total

    solve = _KernelSolver(A)
    rng = np.random.default_rng(seed)
    X = deflate(rng.standard_normal((n, block)))
    lam, res = np.nan, np.inf
    for it in range(1, maxiter + 1):
        Y = deflate(np.column_stack([solve(mass * X[:, j]) for j in range(block)]))
        AY = A @ Y
        theta, Q = scipy.linalg.eigh(Y.T @ AY, Y.T @ (mass[:, None] * Y))
        X = Y @ Q
        x = X[:, 0]
        Ax = AY @ Q[:, 0]
        lam = float(theta[0])
        Mx = mass * x
        res = float(np.linalg.norm(Ax - lam * Mx) / np.linalg.norm(lam * Mx))
        if res <= tol:
            return lam, x / np.sqrt(x @ Mx), res, it
    raise EigenNotConverged(f"inverse iteration stalled at residual {res:.3e} after {maxiter} steps")
