"""Finite-N formulas for the Gaussian anti-symmetric ensemble.

For ``K`` real skew with i.i.d. N(0, 1) entries above the diagonal (N odd),
the positive eigenvalues of ``-iK`` have joint density proportional to

    prod_{i<j} |lam_i^2 - lam_j^2|^2  prod_i lam_i^2 exp(-lam_i^2 / 2)

and form a determinantal process on ``(0, inf)`` with kernel

    K~_N(x, y) = 2 sum_{j odd, 1 <= j <= N-2} psi_j(x) psi_j(y),

where ``psi_j`` are the Hermite functions orthonormal on the real line.
Restricted to the half line this is a projection kernel of rank (N-1)/2.

Scaling limits, checked numerically by :func:`sine_limit_check`:

* origin:  pi K~_N(u / c, v / c) / c -> sinc(u - v) - sinc(u + v),  c = sqrt(N - 1)
* bulk at x0 = c E:  K~_N(x0 + u / (pi rho), x0 + v / (pi rho)) / rho -> sinc(u - v),
  with ``rho = c * rho_sc(E)`` the local density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

PSI0_AT_ZERO = (2.0 * np.pi) ** -0.25


def hermite_monic(k: int, x):
    """Probabilists' monic Hermite polynomial ``P_k(x)`` by the three-term recurrence."""
    if k < 0:
        raise InvalidInputError("order must be >= 0")
    x = np.asarray(x, dtype=float)
    p0, p1 = np.ones_like(x), x.copy()
    if k == 0:
        out = p0
    else:
        with np.errstate(over="ignore", invalid="ignore"):
            for j in range(1, k):
                p0, p1 = p1, x * p1 - j * p0
        out = p1
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"P_{k} overflows at this argument; use psi() (normalized form)")
    return out if out.ndim else float(out)


def psi_table(kmax: int, x) -> np.ndarray:
    """Rows ``psi_0(x) .. psi_kmax(x)`` from the normalized recurrence."""
    if kmax < 0:
        raise InvalidInputError("order must be >= 0")
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = PSI0_AT_ZERO * np.exp(-x * x / 4.0)
    if kmax >= 1:
        out[1] = x * out[0]
    for k in range(1, kmax):
        out[k + 1] = (x * out[k] - np.sqrt(k) * out[k - 1]) / np.sqrt(k + 1)
    return out


def psi(k: int, x):
    """Hermite function ``psi_k(x) = P_k(x) exp(-x^2/4) / (sqrt(2 pi) k!)^(1/2)``."""
    out = psi_table(k, x)[k]
    return out if out.ndim else float(out)


def _check_N(N):
    if N < 3 or N % 2 == 0:
        raise InvalidInputError("N must be odd and >= 3")


def kernel_KN(N: int, x, y):
    """``K~_N(x, y)``, broadcasting over ``x`` and ``y``."""
    _check_N(N)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    px = psi_table(N - 2, x)[1::2]
    py = psi_table(N - 2, y)[1::2]
    out = 2.0 * (px * py).sum(axis=0)
    return out if out.ndim else float(out)


def kernel_matrix(N: int, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    P = psi_table(N - 2, pts)[1::2]
    return 2.0 * P.T @ P


def joint_density_log(N: int, lambdas) -> float:
    """Log of the unnormalized joint density of the (N-1)/2 positive eigenvalues."""
    _check_N(N)
    lam = np.asarray(lambdas, dtype=float)
    if lam.size != (N - 1) // 2:
        raise InvalidInputError(f"need {(N - 1) // 2} values")
    if np.any(lam <= 0):
        return -np.inf
    sq = lam ** 2
    iu = np.triu_indices(lam.size, 1)
    diff = np.abs(sq[:, None] - sq[None, :])[iu]
    if np.any(diff == 0):
        return -np.inf
    return float(2.0 * np.log(diff).sum() + (2.0 * np.log(lam) - sq / 2.0).sum())


def correlation_prefactor(N: int, k: int, convention: str = "full") -> float:
    """``(N-k)!/N!`` ("full") or ``(n-k)!/n!`` with ``n = (N-1)/2`` ("positive").

    The "positive" choice makes ``p_k`` integrate to one over the positive
    orthant, since ``K~_N`` is a rank-``n`` projection kernel there.
    """
    top = N if convention == "full" else (N - 1) // 2
    if convention not in ("full", "positive"):
        raise InvalidInputError(f"unknown convention {convention!r}")
    return math.exp(math.lgamma(top - k + 1) - math.lgamma(top + 1))


def correlation_det(N: int, points, convention: str = "full", with_prefactor: bool = True) -> float:
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    k = pts.size
    if k > (N - 1) // 2:
        raise InvalidInputError("at most (N-1)/2 points")
    # det via LU with partial pivoting
    det = float(np.linalg.det(kernel_matrix(N, pts)))
    return det * correlation_prefactor(N, k, convention) if with_prefactor else det


# ---------------------------------------------------------------------------
# scaling limits


def sinc(x):
    x = np.asarray(x, dtype=float)
    return np.sinc(x / np.pi)


@dataclass(frozen=True)
class SineComparison:
    N: int
    regime: str
    E: float | None
    u: np.ndarray
    v: np.ndarray
    kernel: np.ndarray  # normalized K~_N
    limit: np.ndarray
    diff: np.ndarray

    @property
    def sup_dev(self) -> float:
        return float(np.abs(self.diff).max())

    @property
    def limit_scale(self) -> float:
        return float(np.abs(self.limit).max())

    def to_dict(self) -> dict:
        return {"N": self.N, "regime": self.regime, "E": self.E, "sup_dev": self.sup_dev,
                "limit_scale": self.limit_scale,
                "points": [{"u": float(a), "v": float(b), "kernel": float(k), "limit": float(l)}
                           for a, b, k, l in zip(self.u, self.v, self.kernel, self.limit)]}


def rho_sc(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2.0 * np.pi)


def sine_limit_check(N: int, u, v, regime: str = "origin", E: float | None = None) -> SineComparison:
    """Normalized kernel next to its predicted scaling limit at scaled points ``(u, v)``."""
    _check_N(N)
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    u, v = u.ravel(), v.ravel()
    c = np.sqrt(N - 1.0)
    if regime == "origin":
        k = np.pi * kernel_KN(N, u / c, v / c) / c
        lim = sinc(u - v) - sinc(u + v)
    elif regime == "bulk":
        if E is None or not 0 < E < 2:
            raise InvalidInputError("bulk regime needs 0 < E < 2")
        rho = c * float(rho_sc(E))
        x0 = c * E
        k = kernel_KN(N, x0 + u / (np.pi * rho), x0 + v / (np.pi * rho)) / rho
        lim = sinc(u - v)
    else:
        raise InvalidInputError(f"unknown regime {regime!r}")
    return SineComparison(N, regime, E, u, v, np.atleast_1d(k), lim, np.atleast_1d(k) - lim)


# ---------------------------------------------------------------------------
# quadrature


def gl_panels(a: float, b: float, per_unit: int = 64):
    """Composite Gauss-Legendre nodes and weights: one 64-point panel per unit length."""
    npan = max(1, int(math.ceil(b - a)))
    t, w = np.polynomial.legendre.leggauss(per_unit)
    edges = np.linspace(a, b, npan + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return x, wt
