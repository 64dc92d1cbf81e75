import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from bulkface.errors import LinearSolveFailed
from bulkface.linalg import pcg, smallest_nonzero_eigenpair, solve_spd


def laplacian_1d(n, shift=0.0):
    main = np.full(n, 2.0)
    main[[0, -1]] = 1.0
    return sp.diags([main + shift, -np.ones(n - 1), -np.ones(n - 1)], [0, 1, -1]).tocsr()


@given(st.integers(2, 60), st.floats(0.01, 10.0), st.integers(0, 2**31))
@settings(max_examples=30, deadline=None)
def test_pcg_matches_direct(n, shift, seed):
    A = laplacian_1d(n, shift)
    b = np.random.default_rng(seed).standard_normal(n)
    x, _ = pcg(A, b, rtol=1e-12)
    assert np.linalg.norm(A @ x - b) <= 1e-11 * np.linalg.norm(b)
    assert np.allclose(x, scipy.linalg.solve(A.toarray(), b), rtol=1e-8, atol=1e-10)


def test_pcg_zero_rhs_and_failure():
    A = laplacian_1d(10, 1.0)
    x, its = pcg(A, np.zeros(10))
    assert its == 0 and not x.any()
    with pytest.raises(LinearSolveFailed):
        pcg(A, np.ones(10), maxiter=1, rtol=1e-15)
    # small systems fall back to a dense factorisation
    x, its = solve_spd(A, np.arange(10.0), method="dense")
    assert np.allclose(A @ x, np.arange(10.0))


def test_indefinite_diagonal_rejected():
    A = sp.diags(np.array([1.0, -1.0])).tocsr()
    with pytest.raises(LinearSolveFailed):
        pcg(A, np.ones(2))


@pytest.mark.parametrize("n", [5, 40])
def test_deflated_eigenpair_matches_dense(n):
    A = laplacian_1d(n)
    mass = np.random.default_rng(n).uniform(0.5, 2.0, n)
    lam, x, res, _ = smallest_nonzero_eigenpair(A, mass)
    ref = scipy.linalg.eigh(A.toarray(), np.diag(mass), eigvals_only=True)[1]
    assert res <= 1e-11
    assert np.isclose(lam, ref, rtol=1e-10)
    assert np.isclose(x @ (mass * x), 1.0)
    assert abs(mass @ x) <= 1e-10
