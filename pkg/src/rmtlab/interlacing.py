"""Monte Carlo checks of interlacing for rank-one non-Hermitian perturbations.

Tournament side: with ``s`` the eigenvalues of ``2D + I`` and ``lam_k`` those
of ``M = iW``, the gap ``k`` (between labels ``k`` and ``k+1``) should hold
exactly one value ``Im lam(D) = Im s / 2`` inside ``(lam_k / 2, lam_{k+1} / 2)``,
and the real parts of the eigenvalues of ``D`` should sit close to ``-1/2``.

GUE side: eigenvalues ``z`` of ``G + i N b b^T`` should have ``Re z``
interlaced with the eigenvalues of ``G``.

Roots on a gap boundary (within ``1e-12``) are counted as boundary
degenerate: they are reported, and left out of the rate denominators.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np
from scipy.stats import binomtest

from .core_linalg import eigen_hermitian, eigen_skew, label_to_position
from .ensembles import (RankOnePerturbedModel, TournamentMatrix, sample_gue,
                        sample_tournament, sample_unit_vector, tournament_to_skew)
from .errors import InvalidInputError
from .jsonutil import sanitize
from .parallel import pmap
from .rng import as_seed
from .secular import build_secular, find_all_mu, make_secular, solve_perturbed

BOUNDARY_TOL = 1e-12
REPORT_VERSION = 1


@dataclass
class TrialRecord:
    n: int
    i: int
    n_gaps: int
    interlaced: bool | None = None
    boundary_degenerate: bool = False
    counts: list = field(default_factory=list)  # roots per gap in the window
    re_dev: float = float("nan")  # max |Re lam(D) + 1/2| over the window roots
    real_root_rel: float = float("nan")  # |(2 lam_0(D) + 1) / n - 1|
    real_root_dev: float = float("nan")  # |(2 lam_0(D) + 1) - n| / sqrt(n)
    separation: list = field(default_factory=list)  # min(mu - lam_k, lam_{k+1} - mu) sqrt(n)
    max_residual: float = float("nan")
    error: str | None = None


def wilson(k: int, n: int, level: float = 0.95):
    """Wilson score interval for ``k`` successes out of ``n``; None if ``n == 0``."""
    if n == 0:
        return None
    ci = binomtest(k, n).proportion_ci(confidence_level=level, method="wilson")
    return (float(ci.low), float(ci.high))


def _window(lo, hi, values, scale):
    """Count values strictly inside each ``(lo[k], hi[k])``; flag boundary hits."""
    tol = BOUNDARY_TOL * max(1.0, scale)
    counts, boundary = [], False
    for a, b in zip(lo, hi):
        near = (np.abs(values - a) <= tol) | (np.abs(values - b) <= tol)
        inside = (values > a + tol) & (values < b - tol)
        boundary |= bool(near.any())
        counts.append(int(inside.sum()))
    return counts, boundary


def _gap_labels(n, i, n_gaps):
    m = n // 2
    first = 0 if n % 2 else 1
    if n_gaps < 0 or i < first or i + n_gaps > m:
        raise InvalidInputError(f"gap window [{i}, {i + n_gaps}) outside [{first}, {m})")
    return list(range(i, i + n_gaps))


def check_interlacing_once(D: TournamentMatrix, i: int, n_gaps: int, polish: bool = True) -> TrialRecord:
    n = D.n
    rec = TrialRecord(n, i, n_gaps)
    if n < 3 and n_gaps == 0:
        return rec
    gaps = _gap_labels(n, i, n_gaps)
    W = tournament_to_skew(D)
    spec = eigen_skew(W)
    f = build_secular(spec)
    ps = solve_perturbed(f, spec, D.perturbed() if polish else None, polish=polish)
    lamD = ps.eigenvalues_D()
    if n % 2:
        s_real = ps.roots[np.argmax(ps.roots.real)].real
        rec.real_root_rel = float(abs(s_real / n - 1.0))
        rec.real_root_dev = float(abs(s_real - n) / np.sqrt(n))
    if not gaps:
        return rec
    lam = spec.eigenvalues
    lo = np.array([lam[label_to_position(n, k)] for k in gaps]) / 2
    hi = np.array([lam[label_to_position(n, k + 1)] for k in gaps]) / 2
    counts, boundary = _window(lo, hi, lamD.imag, lam.max() / 2)
    rec.counts = counts
    rec.boundary_degenerate = boundary
    rec.interlaced = all(c == 1 for c in counts) and not boundary
    inwin = (lamD.imag > lo.min()) & (lamD.imag < hi.max())
    rec.re_dev = float(np.abs(lamD.real[inwin] + 0.5).max()) if inwin.any() else float("nan")
    if polish:
        rec.max_residual = float(np.nanmax(ps.residuals))
    zeros = find_all_mu(f)
    for k in gaps:
        p = label_to_position(n, k)
        mu = zeros.mu[p]
        if np.isfinite(mu):
            rec.separation.append(float(min(mu - lam[p], lam[p + 1] - mu) * np.sqrt(n)))
    return rec


def check_real_root(D: TournamentMatrix) -> float:
    """``|(2 lam_0(D) + 1) - n| / sqrt(n)`` for odd ``n``."""
    if D.n % 2 == 0:
        raise InvalidInputError("real root check needs odd n")
    spec = eigen_skew(tournament_to_skew(D))
    ps = solve_perturbed(build_secular(spec), spec, None, polish=False)
    real = ps.roots[np.array([t == "real-root" for t in ps.tags])]
    s = real.real.max() if real.size else ps.roots.real.max()
    return float(abs(s - D.n) / np.sqrt(D.n))


@dataclass
class InterlaceReport:
    kind: str
    params: dict
    records: list

    @property
    def usable(self):
        return [r for r in self.records if r.error is None and r.interlaced is not None
                and not r.boundary_degenerate]

    def rates(self) -> dict:
        n = self.params["n"]
        use = self.usable
        k = sum(r.interlaced for r in use)
        out = {
            "trials": len(self.records),
            "failures": sum(r.error is not None for r in self.records),
            "boundary_degenerate": sum(r.boundary_degenerate for r in self.records),
            "usable": len(use),
            "interlace_rate": (k / len(use)) if use else None,
            "interlace_ci95": wilson(k, len(use)),
        }
        if self.kind == "tournament":
            ok = [r for r in self.records if r.error is None and np.isfinite(r.re_dev)]
            thr = n ** -0.8
            kr = sum(r.re_dev <= thr for r in ok)
            out.update({
                "re_threshold": thr,
                "re_rate": (kr / len(ok)) if ok else None,
                "re_ci95": wilson(kr, len(ok)),
            })
            rr = [r.real_root_dev for r in self.records if np.isfinite(r.real_root_dev)]
            if rr:
                out["real_root_dev_median"] = float(np.median(rr))
                out["real_root_rel_median"] = float(np.median(
                    [r.real_root_rel for r in self.records if np.isfinite(r.real_root_rel)]))
                out["real_root_within_10"] = float(np.mean(np.array(rr) <= 10.0))
            sep = [s for r in self.records for s in r.separation]
            if sep:
                out["separation_p05"] = float(np.percentile(sep, 5))
        return out

    def to_json(self, verbose: bool = False, **meta) -> str:
        doc = {"version": REPORT_VERSION, "kind": self.kind, "params": self.params,
               **self.rates(), **meta}
        doc["failure_messages"] = [r.error for r in self.records if r.error]
        if verbose:
            doc["per_trial"] = [asdict(r) for r in self.records]
        return json.dumps(sanitize(doc), indent=1, allow_nan=False)

    def to_csv(self) -> str:
        cols = ["trial", "i", "interlaced", "boundary_degenerate", "re_dev", "real_root_dev", "error"]
        lines = [",".join(cols)]
        for t, r in enumerate(self.records):
            lines.append(",".join(str(v) for v in [t, r.i, r.interlaced, r.boundary_degenerate,
                                                   repr(r.re_dev), repr(r.real_root_dev),
                                                   "" if r.error is None else r.error.replace(",", ";")]))
        return "\n".join(lines) + "\n"


def _bulk_window(m_pos, alpha, first=0):
    lo = int(np.ceil(alpha * m_pos))
    hi = int(np.floor((1 - alpha) * m_pos))
    return max(lo, first), hi


def _tournament_trial(t, n, alpha, n_gaps, seed, fixed_i, polish):
    seed = as_seed(seed)
    D = sample_tournament(n, seed, t)
    if fixed_i is None:
        lo, hi = _bulk_window((n - 1) / 2, alpha, 0 if n % 2 else 1)
        hi = min(hi, n // 2 - n_gaps)
        i = int(seed.child(1).rng(t).integers(lo, hi + 1))
    else:
        i = fixed_i
    try:
        return check_interlacing_once(D, i, n_gaps, polish=polish)
    except Exception as e:  # recorded per trial, run continues
        return TrialRecord(n, i, n_gaps, error=f"{type(e).__name__}: {e}")


def run_interlace_experiment(n, trials, alpha=0.25, n_gaps=5, seed=0, fixed_i=None,
                             polish=True, jobs=1) -> InterlaceReport:
    if not 0 < alpha < 0.5:
        raise InvalidInputError("alpha must lie in (0, 1/2)")
    seed = as_seed(seed)
    fn = partial(_tournament_trial, n=n, alpha=alpha, n_gaps=n_gaps, seed=seed,
                 fixed_i=fixed_i, polish=polish)
    recs = pmap(fn, range(trials), jobs)
    params = {"n": n, "trials": trials, "alpha": alpha, "n_gaps": n_gaps,
              "seed": [seed.master, seed.stream], "fixed_i": fixed_i}
    return InterlaceReport("tournament", params, recs)


# ---------------------------------------------------------------------------
# GUE variant


def gue_secular(model: RankOnePerturbedModel):
    """Secular function of ``G + i N b b^T``: poles ``lam_j(G)``, weights ``N |<b, u_j>|^2``."""
    lam, U = eigen_hermitian(model.base)
    w = model.strength * np.abs(model.b @ U) ** 2
    return make_secular(lam, w), lam


def gue_eigenvalues(model: RankOnePerturbedModel, polish: bool = True):
    """Eigenvalues of the model, via ``z = i conj(s)``; returns ``(z, solver output)``."""
    f, lam = gue_secular(model)
    ps = solve_perturbed(f, None, model.secular_matrix() if polish else None, polish=polish)
    return 1j * np.conj(ps.roots), ps


def check_gue_once(model: RankOnePerturbedModel, i: int, n_gaps: int, polish: bool = True) -> TrialRecord:
    n = model.base.n
    rec = TrialRecord(n, i, n_gaps)
    if i < 0 or i + n_gaps > n - 1:
        raise InvalidInputError("gap window outside the spectrum")
    f, lam = gue_secular(model)
    if np.any(f.weights <= f.tol_w) or np.any(np.diff(lam) <= 0):
        rec.boundary_degenerate = True
    z, ps = gue_eigenvalues(model, polish)
    # the outlier (Im z ~ strength) is not one of the labelled bulk eigenvalues;
    # its real part can fall anywhere, so it is left out of the gap matching
    bulk = np.delete(z, np.argmax(z.imag))
    lo, hi = lam[i:i + n_gaps], lam[i + 1:i + n_gaps + 1]
    counts, boundary = _window(lo, hi, bulk.real, np.abs(lam).max())
    rec.counts = counts
    rec.boundary_degenerate |= boundary
    rec.interlaced = all(c == 1 for c in counts) and not rec.boundary_degenerate
    if polish:
        rec.max_residual = float(np.nanmax(ps.residuals))
    return rec


def _gue_trial(t, n, alpha, n_gaps, seed, polish):
    seed = as_seed(seed)
    G = sample_gue(n, seed, t)
    b = sample_unit_vector(n, seed.child(2), t)
    model = RankOnePerturbedModel(G, b, float(n))
    lo, hi = _bulk_window(n - 1, alpha)
    hi = min(hi, n - 1 - n_gaps)
    i = int(seed.child(1).rng(t).integers(lo, hi + 1))
    try:
        return check_gue_once(model, i, n_gaps, polish)
    except Exception as e:
        return TrialRecord(n, i, n_gaps, error=f"{type(e).__name__}: {e}")


def run_gue_variant(n, trials, seed=0, alpha=0.25, n_gaps=5, polish=True, jobs=1) -> InterlaceReport:
    if n < 4:
        raise InvalidInputError("GUE variant needs n >= 4")
    seed = as_seed(seed)
    fn = partial(_gue_trial, n=n, alpha=alpha, n_gaps=n_gaps, seed=seed, polish=polish)
    recs = pmap(fn, range(trials), jobs)
    params = {"n": n, "trials": trials, "alpha": alpha, "n_gaps": n_gaps,
              "seed": [seed.master, seed.stream], "strength": float(n)}
    return InterlaceReport("gue", params, recs)
