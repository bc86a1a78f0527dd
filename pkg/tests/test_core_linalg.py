import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from rmtlab.core_linalg import (HermitianMatrix, SkewMatrix, eigen_hermitian, eigen_skew,
                                eigvals_skew, label_to_position, position_labels,
                                refine_eigenpair)
from rmtlab.ensembles import sample_skew_gaussian, sample_skew_pm1
from rmtlab.errors import InvalidInputError, NoConvergenceError


def skew_from(vals, n):
    return SkewMatrix(n, np.asarray(vals, dtype=float))


def check_spectrum(W, spec, tol=1e-10):
    A = W.dense()
    norm = max(np.linalg.norm(A, 2), 1.0)
    lam, V = spec.eigenvalues, spec.eigenvectors
    n = W.n
    assert np.all(np.diff(lam) >= 0)
    np.testing.assert_array_equal(lam, -lam[::-1])
    assert spec.residuals(W).max() <= tol * norm
    assert np.abs(V.conj().T @ V - np.eye(n)).max() <= tol
    for j in position_labels(n):
        if j > 0:
            np.testing.assert_array_equal(spec.vec(-j), spec.vec(j).conj())
            v = spec.vec(j)
            assert abs(np.linalg.norm(v.real) ** 2 - 0.5) <= tol
            assert abs(np.linalg.norm(v.imag) ** 2 - 0.5) <= tol
    assert abs((lam ** 2).sum() + np.trace(A @ A)) <= tol * max(1.0, -np.trace(A @ A))


def test_two_by_two():
    W = SkewMatrix.from_dense([[0.0, 2.0], [-2.0, 0.0]])
    spec = eigen_skew(W)
    np.testing.assert_allclose(spec.eigenvalues, [-2.0, 2.0], atol=1e-14)
    check_spectrum(W, spec)


def test_one_by_one():
    spec = eigen_skew(SkewMatrix(1, []))
    assert spec.eigenvalues.tolist() == [0.0]
    np.testing.assert_array_equal(spec.eigenvectors, [[1.0]])


def test_cyclic_three():
    W = SkewMatrix.from_dense([[0, 1, -1], [-1, 0, 1], [1, -1, 0]])
    spec = eigen_skew(W)
    np.testing.assert_allclose(spec.eigenvalues, [-np.sqrt(3), 0, np.sqrt(3)], atol=1e-14)
    check_spectrum(W, spec)
    v0 = spec.vec(0)
    np.testing.assert_allclose(v0, np.ones(3) / np.sqrt(3), atol=1e-14)


def test_zero_dimension_rejected():
    with pytest.raises(InvalidInputError):
        SkewMatrix(0, [])
    with pytest.raises(InvalidInputError):
        SkewMatrix.from_dense(np.zeros((0, 0)))


def test_not_skew_rejected():
    with pytest.raises(InvalidInputError):
        SkewMatrix.from_dense([[0, 1], [1, 0]])


def test_storage_roundtrip():
    W = sample_skew_gaussian(6, seed=3)
    A = W.dense()
    np.testing.assert_array_equal(A, -A.T)
    assert np.all(np.diag(A) == 0)
    np.testing.assert_array_equal(SkewMatrix.from_dense(A).lower, W.lower)


def test_labels():
    assert position_labels(5).tolist() == [-2, -1, 0, 1, 2]
    assert position_labels(4).tolist() == [-2, -1, 1, 2]
    assert label_to_position(4, 1) == 2
    with pytest.raises(IndexError):
        label_to_position(4, 0)


@pytest.mark.parametrize("n", [2, 3, 4, 7, 10, 33, 64, 101])
def test_random_spectrum_invariants(n):
    for W in (sample_skew_gaussian(n, seed=n), sample_skew_pm1(n, seed=n)):
        check_spectrum(W, eigen_skew(W))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 24).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.floats(-5, 5), min_size=n * (n - 1) // 2,
                                              max_size=n * (n - 1) // 2))))
def test_property_invariants(arg):
    n, vals = arg
    W = skew_from(vals, n)
    check_spectrum(W, eigen_skew(W), tol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2 ** 32 - 1))
def test_permutation_invariance(n, s):
    W = sample_skew_gaussian(n, seed=s)
    p = np.random.default_rng(s).permutation(n)
    A = W.dense()[np.ix_(p, p)]
    lam1 = eigen_skew(W, vectors=False).eigenvalues
    lam2 = eigen_skew(SkewMatrix.from_dense(A), vectors=False).eigenvalues
    np.testing.assert_allclose(lam1, lam2, atol=1e-12 * max(1.0, np.abs(lam1).max()))


@pytest.mark.parametrize("n", [1, 5, 16, 33, 64])
def test_agrees_with_hermitian_solver(n):
    W = sample_skew_pm1(n, seed=(11, n))
    w, _ = eigen_hermitian(W.hermitian())
    np.testing.assert_allclose(eigvals_skew(W), w, atol=1e-9)


def test_bit_identical_repeat():
    W = sample_skew_gaussian(41, seed=9)
    a, b = eigen_skew(W), eigen_skew(W)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_phase_convention():
    spec = eigen_skew(sample_skew_gaussian(9, seed=5))
    for j in range(1, 5):
        v = spec.vec(j)
        assert v[np.argmax(np.abs(v))].real > 0
    v0 = spec.vec(0)
    assert np.all(v0.imag == 0)
    assert v0[np.flatnonzero(np.abs(v0) > 0)[0]].real > 0


def test_clustered_spectrum():
    # block diagonal copies give exact double eigenvalues
    B = np.array([[0, 1.5], [-1.5, 0]])
    A = scipy.linalg.block_diag(B, B, B, [[0.0]])
    W = SkewMatrix.from_dense(A)
    spec = eigen_skew(W)
    check_spectrum(W, spec)
    np.testing.assert_allclose(spec.eigenvalues, [-1.5] * 3 + [0] + [1.5] * 3, atol=1e-14)


# ---------------------------------------------------------------------------
# Hermitian


def test_hermitian_diag():
    w, V = eigen_hermitian(HermitianMatrix.from_dense(np.diag([3.0, 1.0, 2.0])))
    np.testing.assert_allclose(w, [1, 2, 3])
    np.testing.assert_allclose(np.abs(V), np.eye(3)[:, [1, 2, 0]])


def test_hermitian_pauli():
    w, _ = eigen_hermitian(np.array([[0, 1j], [-1j, 0]]))
    np.testing.assert_allclose(w, [-1, 1], atol=1e-15)


def test_hermitian_nonfinite():
    with pytest.raises(InvalidInputError):
        eigen_hermitian(np.array([[np.nan, 0], [0, 1]]))


def _det_sign_roots(H, lo, hi):
    """Eigenvalues by bisection on the sign of det(H - xI) from an LU factorization."""
    n = H.shape[0]

    def sign(x):
        lu, piv = scipy.linalg.lu_factor(H - x * np.eye(n))
        d = np.diag(lu)
        flips = np.sum(piv != np.arange(n))
        # det is real for Hermitian H; multiply unit phases to avoid overflow
        return np.sign(np.prod(d / np.abs(d)).real) * (-1) ** flips

    grid = np.linspace(lo, hi, 4001)
    s = np.array([sign(x) for x in grid])
    roots = []
    for k in np.flatnonzero(s[:-1] != s[1:]):
        a, b = grid[k], grid[k + 1]
        sa = s[k]
        for _ in range(80):
            m = 0.5 * (a + b)
            if sign(m) == sa:
                a = m
            else:
                b = m
        roots.append(0.5 * (a + b))
    return np.array(roots)


def test_hermitian_det_bisection_oracle():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    H = (X + X.conj().T) / 2
    w, V = eigen_hermitian(HermitianMatrix.from_dense(H))
    roots = _det_sign_roots(H, -12, 12)
    assert roots.size == 8
    np.testing.assert_allclose(w, roots, atol=1e-10)
    assert np.linalg.norm(H @ V - V * w) <= 1e-10 * np.linalg.norm(H, 2)
    assert np.abs(V.conj().T @ V - np.eye(8)).max() <= 1e-10


def test_hermitian_storage():
    H = HermitianMatrix(2, [1.0 + 5j, 2 + 1j, 3.0])
    A = H.dense()
    assert A[0, 0] == 1.0
    np.testing.assert_array_equal(A, A.conj().T)


# ---------------------------------------------------------------------------
# inverse iteration


def test_refine_diag():
    r = refine_eigenpair(np.diag([1.0, 2.0]), 1.9)
    assert abs(r.s - 2) <= 1e-12
    assert r.residual <= 1e-12


def test_refine_cyclic():
    D = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    A = 2 * D + np.eye(3)
    r = refine_eigenpair(A, 0.9j * np.sqrt(3))
    # circulant eigenvalues 1 + 2 w^k; k = 1 gives i sqrt(3)
    w = np.exp(2j * np.pi / 3)
    assert abs(r.s - (1 + 2 * w)) <= 1e-10
    assert abs(r.s - 1j * np.sqrt(3)) <= 1e-10


def test_refine_exact_shift_zero_matrix():
    r = refine_eigenpair(np.zeros((2, 2)), 0.0)
    assert abs(r.s) <= 1e-10
    assert r.residual <= 1e-10
    assert abs(np.linalg.norm(r.v) - 1) <= 1e-12


def test_refine_no_convergence_reports_residual():
    # rotation by 90 degrees: shift halfway between +-i never settles with one iteration
    A = np.array([[0.0, -1.0], [1.0, 0.0]])
    with pytest.raises(NoConvergenceError) as e:
        refine_eigenpair(A, 0.0, maxiter=1, tol=1e-300)
    assert np.isfinite(e.value.best_residual)
