"""Spectral statistics for skew ensembles.

Scaling conventions: ``W`` has unit-variance entries, so the spectrum of
``M = iW`` divided by ``sqrt(n)`` follows the semicircle on ``[-2, 2]`` and
its positive half the quarter-circle ``2 rho_sc`` on ``[0, 2]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy import stats

from .core_linalg import SkewMatrix, SkewSpectrum, eigen_skew, eigvals_skew
from .ensembles import sample_skew_gaussian, sample_skew_pm1
from .errors import InvalidInputError
from .parallel import pmap
from .rng import as_seed, normal


def rho_sc(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2.0 * np.pi)


def semicircle_cdf(x):
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return 0.5 + (x * np.sqrt(4.0 - x * x) / 4.0 + np.arcsin(x / 2.0)) / np.pi


def quarter_circle_cdf(x):
    """``int_0^x 2 rho_sc``, the law of the positive eigenvalues."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 2.0)
    return (x / 2.0 * np.sqrt(4.0 - x * x) + 2.0 * np.arcsin(x / 2.0)) / np.pi


def m_sc(z):
    """Stieltjes transform of the semicircle: root of ``m^2 + z m + 1 = 0`` with ``Im m > 0``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise InvalidInputError("m_sc needs Im z > 0")
    r = np.sqrt(z * z - 4.0 + 0j)
    m = (-z + r) / 2.0
    m = np.where(m.imag > 0, m, (-z - r) / 2.0)
    return m if m.ndim else complex(m)


def _scaled(spec, rescale):
    lam = spec.eigenvalues if isinstance(spec, SkewSpectrum) else np.asarray(spec, dtype=float)
    return lam / np.sqrt(lam.size) if rescale else lam


# ---------------------------------------------------------------------------
# global and local laws


def semicircle_ks(spec, rescale: bool = True) -> float:
    return float(stats.kstest(_scaled(spec, rescale), semicircle_cdf).statistic)


def quarter_circle_ks(positive, n: int) -> float:
    return float(stats.kstest(np.asarray(positive) / np.sqrt(n), quarter_circle_cdf).statistic)


@dataclass(frozen=True, eq=False)
class StieltjesScan:
    n: int
    E: np.ndarray
    eta: np.ndarray
    m_N: np.ndarray  # (len(E), len(eta))
    m_sc: np.ndarray

    @property
    def deviation(self) -> np.ndarray:
        return np.abs(self.m_N - self.m_sc)

    def epsilon(self) -> np.ndarray:
        """Smallest ``eps`` with ``|m_N - m_sc| <= 1 / (n^{1-eps} eta)`` at each point."""
        if self.n < 2:
            return np.full(self.deviation.shape, np.nan)
        with np.errstate(divide="ignore"):
            return 1.0 + np.log(self.deviation * self.eta[None, :]) / np.log(self.n)

    def to_csv(self) -> str:
        rows = ["E,eta,re_mN,im_mN,re_msc,im_msc,dev,eps"]
        eps = self.epsilon()
        for a, E in enumerate(self.E):
            for b, eta in enumerate(self.eta):
                mN, ms = self.m_N[a, b], self.m_sc[a, b]
                rows.append(",".join(repr(float(v)) for v in
                                     (E, eta, mN.real, mN.imag, ms.real, ms.imag,
                                      self.deviation[a, b], eps[a, b])))
        return "\n".join(rows) + "\n"


def stieltjes(lam, z):
    lam = np.asarray(lam, dtype=float)
    z = np.asarray(z, dtype=complex)
    return (1.0 / (lam[None, :] - z.reshape(-1, 1))).mean(axis=1).reshape(z.shape)


def local_law_scan(spec, E_grid, eta_grid, rescale: bool = True) -> StieltjesScan:
    """``m_N(z) = (1/n) sum 1/(lam_j - z)`` against ``m_sc`` on ``z = E + i eta``.

    With ``rescale`` the eigenvalues are divided by ``sqrt(n)`` first.
    """
    lam = _scaled(spec, rescale)
    E = np.atleast_1d(np.asarray(E_grid, dtype=float))
    eta = np.atleast_1d(np.asarray(eta_grid, dtype=float))
    if np.any(eta <= 0):
        raise InvalidInputError("eta must be positive")
    z = E[:, None] + 1j * eta[None, :]
    return StieltjesScan(lam.size, E, eta, stieltjes(lam, z), m_sc(z))


# ---------------------------------------------------------------------------
# classical locations and rigidity


def quarter_circle_quantile(p, tol: float = 1e-12) -> np.ndarray:
    """Inverse of :func:`quarter_circle_cdf` by bracketed bisection on ``[0, 2]``."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise InvalidInputError("probabilities must lie in [0, 1]")
    lo, hi = np.zeros_like(p), np.full_like(p, 2.0)
    while np.max(hi - lo, initial=0.0) > tol:
        mid = 0.5 * (lo + hi)
        below = quarter_circle_cdf(mid) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    out = np.where(p == 0, 0.0, np.where(p == 1, 2.0, out))
    return out


def classical_locations(n_pos: int, include_zero: bool = False) -> np.ndarray:
    """``gamma_j`` with ``int_0^{gamma_j} 2 rho_sc = j / n_pos``, for ``j = 1..n_pos``."""
    if n_pos < 1:
        raise InvalidInputError("n_pos must be >= 1")
    j = np.arange(0 if include_zero else 1, n_pos + 1)
    return quarter_circle_quantile(j / n_pos)


def bulk_window(m_pos, alpha: float = 0.25, first: int = 1):
    """Labels ``j`` with ``alpha m <= j <= (1 - alpha) m`` (and ``j >= first``)."""
    lo = int(np.ceil(alpha * m_pos))
    hi = int(np.floor((1 - alpha) * m_pos))
    return max(lo, first), hi


def rigidity_deviation(positive, n: int, alpha: float = 0.25, gamma=None) -> float:
    """``max_j |lam_j / sqrt(n) - gamma_j|`` over bulk labels ``j``."""
    positive = np.sort(np.asarray(positive, dtype=float))
    m = positive.size
    gamma = classical_locations(m) if gamma is None else np.asarray(gamma)
    lo, hi = bulk_window(m, alpha)
    j = np.arange(lo, hi + 1)
    return float(np.abs(positive[j - 1] / np.sqrt(n) - gamma[j - 1]).max())


@dataclass(frozen=True)
class RigidityReport:
    n: int
    alpha: float
    deviations: list

    def quantiles(self, qs=(0.1, 0.5, 0.9)) -> dict:
        return {str(q): float(np.quantile(self.deviations, q)) for q in qs}

    def fraction_below(self, bound: float) -> float:
        return float(np.mean(np.asarray(self.deviations) <= bound))

    def to_dict(self, exponent: float = 0.9) -> dict:
        b = self.n ** -exponent
        return {"n": self.n, "alpha": self.alpha, "deviations": self.deviations,
                "quantiles": self.quantiles(), "bound": b, "fraction_below": self.fraction_below(b)}


def rigidity_report(spectra, alpha: float = 0.25) -> RigidityReport:
    """Bulk rigidity over a list of spectra of the same size."""
    spectra = list(spectra)
    n = spectra[0].n
    gamma = classical_locations(n // 2)
    devs = [rigidity_deviation(s.positive, n, alpha, gamma) for s in spectra]
    return RigidityReport(n, alpha, devs)


def sample_spectra(n, trials, seed=0, ensemble="pm1", vectors=False, jobs=1):
    seed = as_seed(seed)
    fn = partial(_ensemble_spectrum, n=n, seed=seed.child(_ENSEMBLE_STREAM[ensemble]),
                 ensemble=ensemble, vectors=vectors)
    return pmap(fn, range(trials), jobs)


# ---------------------------------------------------------------------------
# gaps


_ENSEMBLE_STREAM = {"pm1": 1, "gaussian": 2}


def _ensemble_matrix(ensemble, n, seed, t) -> SkewMatrix:
    if ensemble == "pm1":
        return sample_skew_pm1(n, seed, t)
    if ensemble == "gaussian":
        return sample_skew_gaussian(n, seed, t)
    raise InvalidInputError(f"unknown ensemble {ensemble!r}")


def _ensemble_spectrum(t, n, seed, ensemble, vectors=False):
    return eigen_skew(_ensemble_matrix(ensemble, n, seed, t), vectors=vectors)


def bump(x, center: float = 1.0, width: float = 1.0):
    """Smooth bump ``exp(1 - 1/(1 - u^2))`` on ``|u| < 1``, ``u = (x - center)/width``."""
    u = (np.asarray(x, dtype=float) - center) / width
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def cosine_window(x, center: float = 1.0, width: float = 1.0):
    u = (np.asarray(x, dtype=float) - center) / width
    return np.where(np.abs(u) < 1, 0.5 * (1 + np.cos(np.pi * u)), 0.0)


OBSERVABLES = {"bump": bump, "cosine": cosine_window}


def normalized_gap(positive, n: int, j: int):
    """``(raw, normalized)`` gap between labels ``j`` and ``j + 1``.

    Normalized by the local density: ``(lam_{j+1} - lam_j) sqrt(n) rho_sc(gamma)``
    with ``gamma`` the classical location of the gap, so the mean is about 1.
    """
    m = positive.size
    raw = float(positive[j] - positive[j - 1])
    gamma = float(quarter_circle_quantile((j + 0.5) / m))
    return raw, raw * np.sqrt(n) * float(rho_sc(gamma))


def _gap_trial(t, ensemble, n, j, seed):
    lam = np.sort(eigvals_skew(_ensemble_matrix(ensemble, n, seed, t)))
    pos = lam[lam.size - lam.size // 2:]
    return normalized_gap(pos, n, j)


@dataclass(frozen=True, eq=False)
class GapComparison:
    ensembles: tuple
    sizes: tuple
    index: int
    observable: str
    raw: tuple = field(repr=False)
    normalized: tuple = field(repr=False)
    means: tuple = ()
    ses: tuple = ()

    @property
    def difference(self) -> float:
        return self.means[0] - self.means[1]

    @property
    def combined_se(self) -> float:
        return float(np.hypot(*self.ses))

    def to_dict(self) -> dict:
        return {"ensembles": list(self.ensembles), "sizes": list(self.sizes), "index": self.index,
                "observable": self.observable, "means": list(self.means), "ses": list(self.ses),
                "difference": self.difference, "combined_se": self.combined_se,
                "gap_quantiles": [{str(q): float(np.quantile(g, q)) for q in (0.05, 0.5, 0.95)}
                                  for g in self.normalized]}


def gap_statistics(ensemble_a: str, ensemble_b: str, n: int, trials: int, index=None,
                   observable: str = "bump", seed=0, n_b: int | None = None, jobs=1,
                   **obs_kw) -> GapComparison:
    """Mean of ``observable(normalized gap)`` in two ensembles, with standard errors.

    ``index`` is the positive label ``j`` of the gap ``(j, j+1)``; the default
    is the middle of the positive half.  ``n_b`` sets the size of the second
    ensemble (default ``n``).  Each ensemble draws from its own stream, so
    equal ensembles and seeds give equal samples.
    """
    seed = as_seed(seed)
    n_b = n if n_b is None else n_b
    for ens in (ensemble_a, ensemble_b):
        if ens not in _ENSEMBLE_STREAM:
            raise InvalidInputError(f"unknown ensemble {ens!r}")
    if observable not in OBSERVABLES:
        raise InvalidInputError(f"unknown observable {observable!r}")
    obs = OBSERVABLES[observable]
    j = max(1, (n // 2) // 2) if index is None else int(index)
    raws, norms, means, ses = [], [], [], []
    for ens, size in ((ensemble_a, n), (ensemble_b, n_b)):
        if not 1 <= j < size // 2:
            raise InvalidInputError("gap index outside the positive spectrum")
        fn = partial(_gap_trial, ensemble=ens, n=size, j=j, seed=seed.child(_ENSEMBLE_STREAM[ens]))
        out = np.array(pmap(fn, range(trials), jobs))
        vals = obs(out[:, 1], **obs_kw)
        raws.append(out[:, 0])
        norms.append(out[:, 1])
        means.append(float(vals.mean()))
        ses.append(float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else float("nan"))
    return GapComparison((ensemble_a, ensemble_b), (n, n_b), j, observable, tuple(raws),
                         tuple(norms), tuple(means), tuple(ses))


# ---------------------------------------------------------------------------
# eigenvector overlaps


def rayleigh_cdf(x):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, -np.expm1(-x * x / 2.0), 0.0)


RAYLEIGH_MEDIAN = float(np.sqrt(2.0 * np.log(2.0)))


def _overlap_trial(t, n, q, labels, seed):
    spec = eigen_skew(sample_skew_pm1(n, seed, t))
    return [float(np.sqrt(2 * n) * abs(np.vdot(q, spec.vec(j)))) for j in labels]


@dataclass(frozen=True, eq=False)
class OverlapResult:
    n: int
    labels: list
    values: np.ndarray  # (trials, len(labels))
    ks: float
    pvalue: float

    def to_dict(self) -> dict:
        return {"n": self.n, "labels": [int(j) for j in self.labels],
                "samples": int(self.values.size), "ks": self.ks, "pvalue": self.pvalue,
                "median": float(np.median(self.values)), "rayleigh_median": RAYLEIGH_MEDIAN}


def overlap_experiment(n: int, trials: int, q=None, labels=None, seed=0, jobs=1) -> OverlapResult:
    """``sqrt(2n) |<q, v_j>|`` over trials and labels, with KS distance to Rayleigh.

    Defaults: ``q`` the normalized all-ones vector, labels the bulk window.
    """
    q = np.full(n, 1.0 / np.sqrt(n)) if q is None else np.asarray(q, dtype=float)
    if q.shape != (n,) or abs(np.linalg.norm(q) - 1.0) > 1e-12:
        raise InvalidInputError("q must be a unit vector of length n")
    if labels is None:
        lo, hi = bulk_window(n // 2, 0.25)
        labels = list(range(lo, hi + 1))
    seed = as_seed(seed)
    fn = partial(_overlap_trial, n=n, q=q, labels=list(labels), seed=seed.child(3))
    vals = np.array(pmap(fn, range(trials), jobs))
    res = stats.kstest(vals.ravel(), rayleigh_cdf)
    return OverlapResult(n, list(labels), vals, float(res.statistic), float(res.pvalue))


# ---------------------------------------------------------------------------
# minors


@dataclass(frozen=True, eq=False)
class MinorRecord:
    eigenvalues: np.ndarray
    minor_eigenvalues: np.ndarray
    interlaced: bool
    max_violation: float
    points: np.ndarray
    schur_lhs: np.ndarray
    schur_rhs: np.ndarray

    @property
    def schur_rel_err(self) -> float:
        return float((np.abs(self.schur_lhs - self.schur_rhs) / np.abs(self.schur_lhs)).max())

    def to_dict(self) -> dict:
        return {"interlaced": self.interlaced, "max_violation": self.max_violation,
                "schur_rel_err": self.schur_rel_err,
                "eigenvalues": self.eigenvalues.tolist(),
                "minor_eigenvalues": self.minor_eigenvalues.tolist()}


def schur_rhs(W: SkewMatrix, s, minor_spec: SkewSpectrum | None = None):
    """``M_11 - s - sum_j |<v_j(M1), h>|^2 / (lam_j(M1) - s)`` with ``h`` the first column of ``M`` below the diagonal."""
    M = W.hermitian()
    sp = eigen_skew(W.minor(0)) if minor_spec is None else minor_spec
    h = M[1:, 0]
    w = np.abs(sp.eigenvectors.conj().T @ h) ** 2
    s = np.asarray(s, dtype=complex)
    # W v_j = i lam_j v_j, so v_j is the eigenvector of M = iW for -lam_j
    mu = -sp.eigenvalues
    return M[0, 0] - s - (w[None, :] / (mu[None, :] - s.reshape(-1, 1))).sum(1)


def minor_consistency(W: SkewMatrix, points=None, seed=0, tol: float = 1e-10) -> MinorRecord:
    """Cauchy interlacing ``lam_i(M) <= lam_i(M1) <= lam_{i+1}(M)`` of the (1,1) minor,
    and the Schur-complement formula for ``R_11(s)^{-1}`` at non-real ``s``."""
    if W.n < 3:
        raise InvalidInputError("need n >= 3")
    lam = eigen_skew(W, vectors=False).eigenvalues
    sp1 = eigen_skew(W.minor(0))
    mu = sp1.eigenvalues
    viol = max(float(np.max(lam[:-1] - mu)), float(np.max(mu - lam[1:])), 0.0)
    if points is None:
        rng = as_seed(seed).rng(0)
        z = normal(rng, (2, 5))
        scale = np.sqrt(W.n)
        points = scale * (z[0] + 1j * (np.abs(z[1]) + 0.1) * np.sign(z[1] + 1e-300))
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    M = W.hermitian()
    e1 = np.zeros(W.n)
    e1[0] = 1.0
    lhs = np.array([1.0 / np.linalg.solve(M - s * np.eye(W.n), e1)[0] for s in points])
    rhs = schur_rhs(W, points, sp1)
    return MinorRecord(lam, mu, viol <= tol, viol, points, lhs, rhs)
