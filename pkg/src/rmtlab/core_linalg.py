"""Dense spectral kernels for anti-symmetric and Hermitian matrices.

The skew solver works on a real anti-symmetric ``W`` and returns the
spectrum of the Hermitian matrix ``M = iW``:

1. orthogonal Householder similarity ``W = Q T Q^T`` with ``T``
   skew-tridiagonal (sub-diagonal ``a_k``);
2. ``D^* (iT) D`` with ``D = diag(i^k)`` is the real symmetric tridiagonal
   matrix ``S`` with zero diagonal and off-diagonal ``a_k``;
3. implicit-shift QL on ``S``; eigenvectors map back as ``v = Q D y``.

``S`` is bipartite (``P S P = -S`` with ``P = diag((-1)^k)``) and
``Q D P y = conj(Q D y)``, so the negative half of the spectrum and its
eigenvectors are produced from the positive half exactly.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.linalg

from .errors import InvalidInputError, NoConvergenceError

_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# matrix containers


@dataclass(frozen=True, eq=False)
class SkewMatrix:
    """Real anti-symmetric matrix, stored as its strict lower triangle.

    ``lower`` is packed row by row: ``a[1,0], a[2,0], a[2,1], a[3,0], ...``.
    """

    n: int
    lower: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise InvalidInputError("matrix dimension must be >= 1")
        lower = np.array(self.lower, dtype=float).reshape(-1)
        if lower.size != n * (n - 1) // 2:
            raise InvalidInputError(f"expected {n * (n - 1) // 2} lower entries, got {lower.size}")
        if not np.all(np.isfinite(lower)):
            raise InvalidInputError("non-finite entries")
        lower.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "lower", lower)

    @classmethod
    def from_dense(cls, W, atol: float = 0.0) -> "SkewMatrix":
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise InvalidInputError("square matrix required")
        n = W.shape[0]
        if n == 0:
            raise InvalidInputError("matrix dimension must be >= 1")
        tol = atol * max(1.0, np.abs(W).max())
        if np.abs(W + W.T).max() > tol:
            raise InvalidInputError("matrix is not anti-symmetric")
        il = np.tril_indices(n, -1)
        return cls(n, 0.5 * (W[il] - W.T[il]))

    def dense(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        il = np.tril_indices(self.n, -1)
        W[il] = self.lower
        W.T[il] = -self.lower
        return W

    def hermitian(self) -> np.ndarray:
        """The Hermitian matrix ``M = iW`` as a dense complex array."""
        return 1j * self.dense()

    def minor(self, k: int = 0) -> "SkewMatrix":
        W = self.dense()
        keep = np.r_[0:k, k + 1:self.n]
        return SkewMatrix.from_dense(W[np.ix_(keep, keep)])

    def __mul__(self, c):
        return SkewMatrix(self.n, self.lower * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Complex Hermitian matrix stored as its upper triangle (diagonal real)."""

    n: int
    upper: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise InvalidInputError("matrix dimension must be >= 1")
        upper = np.array(self.upper, dtype=complex).reshape(-1)
        if upper.size != n * (n + 1) // 2:
            raise InvalidInputError(f"expected {n * (n + 1) // 2} upper entries, got {upper.size}")
        iu = np.triu_indices(n)
        diag = iu[0] == iu[1]
        upper[diag] = upper[diag].real
        upper.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_dense(cls, H, atol: float = 0.0) -> "HermitianMatrix":
        H = np.asarray(H, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] == 0:
            raise InvalidInputError("non-empty square matrix required")
        tol = atol * max(1.0, np.abs(H).max())
        if np.abs(H - H.conj().T).max() > tol:
            raise InvalidInputError("matrix is not Hermitian")
        return cls(H.shape[0], H[np.triu_indices(H.shape[0])])

    def dense(self) -> np.ndarray:
        n = self.n
        H = np.zeros((n, n), dtype=complex)
        iu = np.triu_indices(n)
        H[iu] = self.upper
        H[(iu[1], iu[0])] = np.conj(self.upper)
        return H


# ---------------------------------------------------------------------------
# spectrum container


def position_labels(n: int) -> np.ndarray:
    """Index labels ``j`` of the ascending spectrum of an ``n x n`` skew matrix."""
    m = n // 2
    if n % 2:
        return np.arange(-m, m + 1)
    return np.r_[np.arange(-m, 0), np.arange(1, m + 1)]


def label_to_position(n: int, j: int) -> int:
    m = n // 2
    if n % 2:
        if abs(j) > m:
            raise IndexError(j)
        return j + m
    if j == 0 or abs(j) > m:
        raise IndexError(j)
    return j + m if j < 0 else j + m - 1


@dataclass(frozen=True, eq=False)
class SkewSpectrum:
    """Eigenvalues (ascending) and unit eigenvectors (columns) of ``M = iW``.

    Column ``j`` satisfies ``W v_j = i lam_j v_j``; the spectrum of ``M`` is
    the same set since it is symmetric about zero and ``v_{-j} = conj(v_j)``.
    """

    n: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None

    @property
    def labels(self) -> np.ndarray:
        return position_labels(self.n)

    def lam(self, j: int) -> float:
        return float(self.eigenvalues[label_to_position(self.n, j)])

    def vec(self, j: int) -> np.ndarray:
        return self.eigenvectors[:, label_to_position(self.n, j)]

    @property
    def positive(self) -> np.ndarray:
        """The ``n // 2`` eigenvalues with positive labels."""
        return self.eigenvalues[self.n - self.n // 2:]

    def residuals(self, W: SkewMatrix) -> np.ndarray:
        A = W.dense()
        V = self.eigenvectors
        return np.linalg.norm(A @ V - 1j * V * self.eigenvalues, axis=0)


# ---------------------------------------------------------------------------
# kernels


@numba.njit(cache=True)
def _householder_lower(A, U, betas):
    # only the strict lower triangle of A is read and updated
    n = A.shape[0]
    p = np.empty(n)
    for k in range(n - 2):
        tail = 0.0
        for i in range(k + 2, n):
            tail += A[i, k] ** 2
        if tail == 0.0:
            betas[k] = 0.0
            continue
        x0 = A[k + 1, k]
        alpha = -np.copysign(np.sqrt(x0 * x0 + tail), x0)
        U[k + 1, k] = x0 - alpha
        for i in range(k + 2, n):
            U[i, k] = A[i, k]
        beta = 2.0 / (U[k + 1, k] ** 2 + tail)
        betas[k] = beta
        # p = beta * A_sub u with A_sub skew
        for i in range(k + 1, n):
            p[i] = 0.0
        for i in range(k + 1, n):
            ui = U[i, k]
            acc = 0.0
            for j in range(k + 1, i):
                a = A[i, j]
                acc += a * U[j, k]
                p[j] -= a * ui
            p[i] += acc
        for i in range(k + 1, n):
            p[i] *= beta
        # rank-2 skew update A_sub += u p^T - p u^T
        for i in range(k + 1, n):
            ui = U[i, k]
            pi = p[i]
            for j in range(k + 1, i):
                A[i, j] += ui * p[j] - pi * U[j, k]
        A[k + 1, k] = alpha
        for i in range(k + 2, n):
            A[i, k] = 0.0


@dataclass(frozen=True, eq=False)
class Reflectors:
    """Householder vectors ``U[:, k]`` (zero above row ``k+1``) and scalars ``beta``.

    ``Q = H_0 H_1 ... H_{n-3}`` with ``H_k = I - beta_k u_k u_k^T``.
    """

    U: np.ndarray
    betas: np.ndarray


def householder_skew(W: np.ndarray):
    """Reduce a dense skew matrix to skew-tridiagonal form.

    Returns ``(a, reflectors)`` with ``a[k] = T[k+1, k]`` and ``W = Q T Q^T``.
    """
    A = np.array(W, dtype=float, order="C", copy=True)
    n = A.shape[0]
    U = np.zeros((n, max(n - 2, 0)))
    betas = np.zeros(max(n - 2, 0))
    _householder_lower(A, U, betas)
    a = np.array([A[k + 1, k] for k in range(n - 1)])
    return a, Reflectors(U, betas)


def apply_q(refl: Reflectors, X: np.ndarray, block: int = 32) -> np.ndarray:
    """Compute ``Q @ X`` in place, reflectors grouped into compact-WY blocks."""
    U, betas = refl.U, refl.betas
    r = betas.size
    for k0 in reversed(range(0, r, block)):
        k1 = min(k0 + block, r)
        V = U[:, k0:k1]
        b = k1 - k0
        T = np.zeros((b, b))
        VtV = V.T @ V
        for j in range(b):
            T[j, j] = betas[k0 + j]
            if j:
                T[:j, j] = -betas[k0 + j] * (T[:j, :j] @ VtV[:j, j])
        X -= V @ (T @ (V.T @ X))
    return X


@numba.njit(cache=True)
def _tql(d, e, z, want_vectors, max_iter):
    """Implicit-shift QL on a symmetric tridiagonal matrix.

    ``d`` diagonal, ``e[i]`` couples ``i`` and ``i+1`` (``e[n-1]`` unused).
    Rotations accumulate into the columns of ``z``. Returns the total number
    of QL sweeps, or -1 when ``max_iter`` is exceeded.
    """
    n = d.shape[0]
    anorm = 0.0
    for i in range(n):
        anorm = max(anorm, abs(d[i]) + abs(e[i]))
    tiny = 2.2250738585072014e-308 + 1e-300 * anorm
    eps = 2.220446049250313e-16
    sweeps = 0
    if n > 0:
        e[n - 1] = 0.0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd or abs(e[m]) <= tiny:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_iter:
                return -1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0.0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want_vectors:
                    for k in range(z.shape[0]):
                        f = z[k, i + 1]
                        z[k, i + 1] = s * z[k, i] + c * f
                        z[k, i] = c * z[k, i] - s * f
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return sweeps


def tridiagonal_eigh(offdiag: np.ndarray, vectors: bool = True):
    """Eigen-decomposition of the zero-diagonal symmetric tridiagonal matrix.

    Eigenvalues come back sorted ascending; eigenvector columns follow.
    """
    n = offdiag.size + 1
    d = np.zeros(n)
    e = np.zeros(n)
    e[: n - 1] = offdiag
    z = np.eye(n) if vectors else np.zeros((1, 1))
    sweeps = _tql(d, e, z, vectors, 30 * n)
    if sweeps < 0:
        raise NoConvergenceError(f"QL exceeded {30 * n} sweeps")
    order = np.argsort(d, kind="stable")
    return d[order], (z[:, order] if vectors else None)


def _d_phase(n: int) -> np.ndarray:
    return 1j ** (np.arange(n) % 4)


def _fix_phase_pos(v: np.ndarray) -> np.ndarray:
    a = int(np.argmax(np.abs(v)))
    if v[a] == 0:
        return v
    return v * (np.conj(v[a]) / abs(v[a]))


def _fix_sign_real(v: np.ndarray) -> np.ndarray:
    big = np.abs(v).max()
    nz = np.flatnonzero(np.abs(v) > 1e-10 * big)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def eigvals_skew(W: SkewMatrix) -> np.ndarray:
    """Eigenvalues of ``iW`` only (ascending, exactly paired)."""
    return eigen_skew(W, vectors=False).eigenvalues


def eigen_skew(W: SkewMatrix, vectors: bool = True) -> SkewSpectrum:
    if not isinstance(W, SkewMatrix):
        W = SkewMatrix.from_dense(W)
    n = W.n
    if n == 1:
        return SkewSpectrum(1, np.zeros(1), np.ones((1, 1), dtype=complex) if vectors else None)
    a, refl = householder_skew(W.dense())
    d, Y = tridiagonal_eigh(a, vectors)
    m = n // 2
    lam_pos = 0.5 * (d[n - m:] - d[:m][::-1])  # ascending
    scale = max(np.abs(a).max(initial=0.0), np.finfo(float).tiny)
    zero_tol = 1e-11 * scale
    n_zero_pairs = int(np.searchsorted(lam_pos, zero_tol, side="right"))

    if vectors:
        pos_cols = Y[:, n - m:]  # columns of the positive eigenvalues, ascending
        ev = np.zeros(n, dtype=bool)
        ev[0::2] = True
        # rebalance even/odd halves of positive eigenvectors: makes v^T v = 0 exact
        for c in range(n_zero_pairs, m):
            y = pos_cols[:, c]
            ne, no = np.linalg.norm(y[ev]), np.linalg.norm(y[~ev])
            if min(ne, no) < 1e-6:
                n_zero_pairs = max(n_zero_pairs, c + 1)
                continue
            y[ev] /= ne * np.sqrt(2.0)
            y[~ev] /= no * np.sqrt(2.0)
        n_cluster = n - 2 * (m - n_zero_pairs)
        cluster = Y[:, (n - n_cluster) // 2:(n + n_cluster) // 2]
        Dp = _d_phase(n)

        kernel = _real_kernel_basis(cluster, ev, Dp, refl) if n_cluster else np.zeros((n, 0))
        Yp = pos_cols[:, n_zero_pairs:] * Dp[:, None]
        big = apply_q(refl, np.concatenate([Yp.real, Yp.imag], axis=1))
        k = Yp.shape[1]
        Vp = big[:, :k] + 1j * big[:, k:]

        vz = []
        v0 = None
        kcols = list(kernel.T)
        if n_cluster % 2:
            v0 = _fix_sign_real(kcols.pop(0))
        while kcols:
            vz.append((kcols.pop(0) + 1j * kcols.pop(0)) / np.sqrt(2.0))
        pos_vecs = vz + [Vp[:, c] for c in range(k)]
        # y solves S y = lam y, so Q D y is an eigenvector of W for -i lam;
        # the conjugate carries +i lam, the labelling used throughout
        pos_vecs = [_fix_phase_pos(np.conj(v) / np.linalg.norm(v)) for v in pos_vecs]
        lam_pos = np.r_[np.zeros(n_zero_pairs), lam_pos[n_zero_pairs:]]
        cols = [np.conj(v) for v in reversed(pos_vecs)]
        if n % 2:
            cols.append(v0.astype(complex))
        cols += pos_vecs
        V = np.column_stack(cols)
    else:
        lam_pos = np.r_[np.zeros(n_zero_pairs), lam_pos[n_zero_pairs:]]
        V = None

    lam = np.r_[-lam_pos[::-1], [0.0] * (n % 2), lam_pos]
    lam.setflags(write=False)
    if V is not None:
        V.setflags(write=False)
    return SkewSpectrum(n, lam, V)


def _real_kernel_basis(cluster, ev, Dp, refl):
    """Orthonormal real basis of the (numerical) kernel of ``W``.

    Kernel vectors of the bipartite ``S`` split into even- and odd-supported
    parts; ``D`` maps those to real and imaginary vectors respectively.
    """
    n, c = cluster.shape
    parts = []
    for mask in (ev, ~ev):
        P = np.where(mask[:, None], cluster, 0.0)
        U, s, _ = np.linalg.svd(P, full_matrices=False)
        parts.append((U, s))
    keep = [(U[:, i], s[i]) for U, s in parts for i in range(s.size) if s[i] ** 2 > 0.5]
    if len(keep) != c:
        allv = sorted(((s[i], U[:, i]) for U, s in parts for i in range(s.size)),
                      key=lambda t: -t[0])
        keep = [(v, s) for s, v in allv[:c]]
    cols = []
    for y, _ in keep:
        z = y * Dp
        r = z.real if np.linalg.norm(z.real) >= np.linalg.norm(z.imag) else z.imag
        cols.append(r)
    K = apply_q(refl, np.column_stack(cols))
    Qk, _ = np.linalg.qr(K)
    # qr may flip signs; keep the original orientation
    Qk *= np.sign(np.sum(Qk * K, axis=0) + (np.sum(Qk * K, axis=0) == 0))
    return Qk


def eigen_hermitian(H) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    A = H.dense() if isinstance(H, HermitianMatrix) else np.asarray(H, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidInputError("non-empty square matrix required")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("non-finite entries")
    w, V = np.linalg.eigh(A)
    return w, V


# ---------------------------------------------------------------------------
# inverse iteration


@dataclass(frozen=True)
class RefinedPair:
    s: complex
    v: np.ndarray
    residual: float
    iterations: int


def _lu(B):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, piv = scipy.linalg.lu_factor(B, check_finite=False)
    singular = not np.all(np.isfinite(lu)) or np.abs(np.diag(lu)).min() == 0.0
    return (lu, piv), singular


def refine_eigenpair(A, s0: complex, tol: float = 1e-10, maxiter: int = 100) -> RefinedPair:
    """Polish an eigenvalue estimate of a dense matrix by inverse iteration.

    Fixed-shift iteration from ``s0``; the shift switches to the Rayleigh
    quotient when convergence stalls.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    normf = np.linalg.norm(A)
    scale = normf if normf > 0 else 1.0
    target = tol * normf
    I = np.eye(n)
    v = 1.0 + 0.5j + np.random.Generator(np.random.Philox(key=0x5EED)).random(n)
    v /= np.linalg.norm(v)

    shift = complex(s0)
    fac, singular = _lu(A - shift * I)
    if singular:
        shift += 1e-12 * scale
        fac, singular = _lu(A - shift * I)
        if singular:
            raise NoConvergenceError("shifted matrix singular after perturbed retry")

    best = (np.inf, shift, v)
    prev = np.inf
    extra = False
    for it in range(1, maxiter + 1):
        x = scipy.linalg.lu_solve(fac, v, check_finite=False)
        nx = np.linalg.norm(x)
        if not np.isfinite(nx) or nx == 0:
            break
        v = x / nx
        Av = A @ v
        s = np.vdot(v, Av)
        r = float(np.linalg.norm(Av - s * v))
        if r < best[0]:
            best = (r, s, v)
        if r <= target:
            if extra or r == 0.0:
                break
            extra = True  # one more sweep with the same factorization
            continue
        if r > 1e-3 * prev:
            shift = s
            fac, singular = _lu(A - shift * I)
            if singular:
                shift += 1e-12 * scale
                fac, singular = _lu(A - shift * I)
                if singular:
                    break
        prev = r
    r, s, v = best
    if r > target:
        raise NoConvergenceError(
            f"inverse iteration did not converge (residual {r:.3e} > {target:.3e})",
            best_residual=r, s=complex(s))
    return RefinedPair(complex(s), v, r, it)
