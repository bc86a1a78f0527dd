"""Seeded samplers for the matrix ensembles, plus plain-text matrix I/O.

All samplers take a :class:`~rmtlab.rng.Seed` (or anything ``as_seed``
accepts) and a trial number; the same pair always gives the same matrix.

GUE convention: diagonal entries are real N(0, 1), off-diagonal entries are
``(x + i y) / sqrt(2)`` with ``x, y`` standard normal, so ``E|H_ij|^2 = 1``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .core_linalg import HermitianMatrix, SkewMatrix
from .errors import InvalidInputError
from .rng import as_seed, normal


@dataclass(frozen=True, eq=False)
class TournamentMatrix:
    """Round-robin outcomes: ``bits`` holds ``D[i, j]`` for ``i < j``, row-major."""

    n: int
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise InvalidInputError("tournament needs n >= 1")
        bits = np.array(self.bits, dtype=np.int8).reshape(-1)
        if bits.size != n * (n - 1) // 2:
            raise InvalidInputError(f"expected {n * (n - 1) // 2} bits, got {bits.size}")
        if np.any((bits != 0) & (bits != 1)):
            raise InvalidInputError("tournament bits must be 0 or 1")
        bits.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_dense(cls, D) -> "TournamentMatrix":
        D = np.asarray(D)
        n = D.shape[0]
        if D.shape != (n, n) or np.any(np.diag(D) != 0):
            raise InvalidInputError("square matrix with zero diagonal required")
        off = ~np.eye(n, dtype=bool)
        if np.any(D[off] + D.T[off] != 1):
            raise InvalidInputError("D[i, j] + D[j, i] must equal 1 off the diagonal")
        return cls(n, D[np.triu_indices(n, 1)])

    def dense(self) -> np.ndarray:
        n = self.n
        D = np.zeros((n, n), dtype=np.int64)
        iu = np.triu_indices(n, 1)
        D[iu] = self.bits
        D[(iu[1], iu[0])] = 1 - self.bits
        return D

    def perturbed(self) -> np.ndarray:
        """The real matrix ``2D + I``."""
        return 2.0 * self.dense() + np.eye(self.n)


def cyclic_tournament(n: int = 3) -> TournamentMatrix:
    """Regular tournament where ``i`` beats ``i+1, ..., i+(n-1)/2`` (mod n)."""
    if n % 2 == 0:
        raise InvalidInputError("cyclic tournament needs odd n")
    D = np.zeros((n, n), dtype=int)
    for i in range(n):
        for s in range(1, (n - 1) // 2 + 1):
            D[i, (i + s) % n] = 1
    return TournamentMatrix.from_dense(D)


def sample_tournament(n: int, seed=None, trial: int = 0) -> TournamentMatrix:
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    rng = as_seed(seed).rng(trial)
    return TournamentMatrix(n, rng.integers(0, 2, size=n * (n - 1) // 2, dtype=np.int8))


def tournament_to_skew(D: TournamentMatrix) -> SkewMatrix:
    """``W = 2D - (J - I)``, so that ``M = iW = 2iD - i(J - I)``."""
    n = D.n
    W = 2.0 * D.dense() - (1.0 - np.eye(n))
    return SkewMatrix.from_dense(W)


def sample_skew_pm1(n: int, seed=None, trial: int = 0) -> SkewMatrix:
    return tournament_to_skew(sample_tournament(n, seed, trial))


def sample_skew_gaussian(n: int, seed=None, trial: int = 0, scale: float = 1.0) -> SkewMatrix:
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    if not scale > 0:
        raise InvalidInputError("scale must be positive")
    rng = as_seed(seed).rng(trial)
    return SkewMatrix(n, scale * normal(rng, n * (n - 1) // 2))


def sample_gue(n: int, seed=None, trial: int = 0) -> HermitianMatrix:
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    rng = as_seed(seed).rng(trial)
    diag = normal(rng, n)
    k = n * (n - 1) // 2
    z = normal(rng, 2 * k)
    off = (z[:k] + 1j * z[k:]) / np.sqrt(2.0)
    H = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    H[iu] = off
    H += H.conj().T
    H[np.diag_indices(n)] = diag
    return HermitianMatrix.from_dense(H)


def sample_unit_vector(n: int, seed=None, trial: int = 0) -> np.ndarray:
    """Uniform point on the unit sphere (normalized Gaussian vector)."""
    rng = as_seed(seed).rng(trial)
    while True:
        g = normal(rng, n)
        nrm = np.linalg.norm(g)
        if nrm > 0:
            return g / nrm


@dataclass(frozen=True, eq=False)
class RankOnePerturbedModel:
    """``G + i * strength * b b^T`` for Hermitian ``G`` and real unit ``b``."""

    base: HermitianMatrix
    b: np.ndarray
    strength: float

    def __post_init__(self):
        b = np.array(self.b, dtype=float).reshape(-1)
        if b.size != self.base.n:
            raise InvalidInputError("direction has the wrong length")
        if abs(np.linalg.norm(b) - 1.0) > 1e-12:
            raise InvalidInputError("direction must be a unit vector")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "strength", float(self.strength))

    def dense(self) -> np.ndarray:
        return self.base.dense() + 1j * self.strength * np.outer(self.b, self.b)

    def secular_matrix(self) -> np.ndarray:
        """``i conj(G) + strength * b b^T``.

        Its eigenvalues ``s`` solve ``sum_j w_j / (s - i lam_j(G)) = 1`` with
        ``w_j = strength * |<b, u_j>|^2``; eigenvalues of the model are
        ``i conj(s)``, so their real parts equal ``Im s``.
        """
        return 1j * np.conj(self.base.dense()) + self.strength * np.outer(self.b, self.b)


# ---------------------------------------------------------------------------
# CSV


def _fmt(x) -> str:
    return repr(float(x))


def _lower_rows(n, values, fmt):
    out = []
    pos = 0
    for i in range(1, n):
        out.append(",".join(fmt(v) for v in values[pos:pos + i]))
        pos += i
    return out


def write_matrix_csv(obj, fh=None) -> str:
    """Serialize a SkewMatrix or TournamentMatrix (lower triangle, row by row)."""
    if isinstance(obj, SkewMatrix):
        lines = [f"# skew n={obj.n}"] + _lower_rows(obj.n, obj.lower, _fmt)
    elif isinstance(obj, TournamentMatrix):
        lower = obj.dense()[np.tril_indices(obj.n, -1)]
        lines = [f"# tournament n={obj.n}"] + _lower_rows(obj.n, lower, lambda v: str(int(v)))
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    text = "\n".join(lines) + "\n"
    if fh is not None:
        fh.write(text)
    return text


def read_matrix_csv(src):
    """Inverse of :func:`write_matrix_csv`; ``src`` is text or a file object."""
    fh = io.StringIO(src) if isinstance(src, str) else src
    header = fh.readline().strip()
    try:
        kind, size = header.lstrip("#").split()
        n = int(size.split("=")[1])
    except (ValueError, IndexError):
        raise InvalidInputError(f"bad matrix header {header!r}") from None
    rows = [ln.strip() for ln in fh if ln.strip()]
    if len(rows) != n - 1:
        raise InvalidInputError(f"expected {n - 1} rows, got {len(rows)}")
    vals = []
    for i, ln in enumerate(rows, start=1):
        parts = ln.split(",")
        if len(parts) != i:
            raise InvalidInputError(f"row {i} should have {i} entries")
        vals.extend(parts)
    if kind == "skew":
        return SkewMatrix(n, np.array([float(v) for v in vals]))
    if kind == "tournament":
        D = np.zeros((n, n), dtype=int)
        il = np.tril_indices(n, -1)
        D[il] = [int(v) for v in vals]
        D.T[il] = 1 - D[il]
        return TournamentMatrix.from_dense(D)
    raise InvalidInputError(f"unknown matrix kind {kind!r}")
