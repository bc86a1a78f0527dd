"""Secular equation for rank-one perturbations of a normal matrix ``B``.

If ``B`` has eigenvalues ``i lam_j`` with orthonormal eigenvectors ``u_j``,
the eigenvalues of ``B + c b b^T`` that are not eigenvalues of ``B`` are
the solutions of ``F(s) = 1`` with

    F(s) = sum_j w_j / (s - i lam_j),    w_j = c |<b, u_j>|^2.

For a tournament ``B = W`` (so that ``B + 1 1^T = 2D + I``) and ``c = 1``.
When ``w_j`` vanishes the unperturbed eigenvalue ``i lam_j`` persists.

Roots are located interval by interval: the zero ``mu`` of ``-Im F(it)``
between consecutive poles gives the start ``i mu + 1 / F'(i mu)`` for a
safeguarded Newton iteration. The remaining root (real in the symmetric
case, an outlier in general) comes from the trace identity, and an
Aberth-Ehrlich sweep over all roots repairs anything Newton gets wrong.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core_linalg import NoConvergenceError, SkewSpectrum, position_labels, refine_eigenpair
from .errors import PoleProximityError, SecularAnomalyError, StructuralError

SCHEMA_VERSION = 1
TAGS = ("secular-newton", "persisted", "real-root")


@dataclass(frozen=True, eq=False)
class SecularFunction:
    poles: np.ndarray  # lam_j, ascending
    weights: np.ndarray
    labels: np.ndarray  # index label of each pole
    symmetric: bool  # poles and weights mirror about zero exactly

    @property
    def n(self) -> int:
        return self.poles.size

    @property
    def tol_w(self) -> float:
        return 1e-12 * self.n

    @property
    def scale(self) -> float:
        return max(1.0, float(np.abs(self.poles).max(initial=0.0)))

    def position(self, label: int) -> int:
        hit = np.flatnonzero(self.labels == label)
        if hit.size == 0:
            raise IndexError(label)
        return int(hit[0])


def make_secular(poles, weights, labels=None) -> SecularFunction:
    poles = np.asarray(poles, dtype=float)
    weights = np.asarray(weights, dtype=float)
    order = np.argsort(poles, kind="stable")
    poles, weights = poles[order], weights[order]
    sym = bool(np.array_equal(poles, -poles[::-1]) and np.array_equal(weights, weights[::-1]))
    if labels is None:
        labels = position_labels(poles.size) if sym else np.arange(poles.size)
    else:
        labels = np.asarray(labels)[order]
    for a in (poles, weights, labels):
        a.setflags(write=False)
    return SecularFunction(poles, weights, labels, sym)


def build_secular(spec: SkewSpectrum, direction=None) -> SecularFunction:
    """Weights ``|<direction, v_j>|^2`` (all-ones direction by default)."""
    V = spec.eigenvectors
    if direction is None:
        amp = V.sum(axis=0)
    else:
        amp = np.asarray(direction, dtype=float) @ V
    w = np.abs(amp) ** 2
    return make_secular(spec.eigenvalues, w, spec.labels)


def _check_poles(f: SecularFunction, s: np.ndarray):
    d = np.abs(s[..., None] - 1j * f.poles)
    k = np.argmin(d, axis=-1)
    bad = np.take_along_axis(d, k[..., None], axis=-1)[..., 0] <= 1e-14 * f.scale
    if np.any(bad):
        j = int(np.ravel(k)[np.flatnonzero(np.ravel(bad))[0]])
        raise PoleProximityError(f"s too close to pole i*{f.poles[j]!r}", index=int(f.labels[j]))


def eval_F(f: SecularFunction, s):
    """``F(s)``; scalar or array input."""
    s_arr = np.asarray(s, dtype=complex)
    _check_poles(f, s_arr)
    if f.symmetric and np.all(s_arr.imag == 0):
        # paired form: w_0 / s + 2 s sum_{j > 0} w_j / (s^2 + lam_j^2)
        x = s_arr.real[..., None]
        pos = f.poles > 0
        zero = f.poles == 0
        val = (f.weights[zero] / x).sum(-1) + 2.0 * x[..., 0] * (
            f.weights[pos] / (x ** 2 + f.poles[pos] ** 2)).sum(-1)
        out = val.astype(complex)
    else:
        out = (f.weights / (s_arr[..., None] - 1j * f.poles)).sum(-1)
    return out if np.ndim(s) else complex(out)


def eval_F_direct(f: SecularFunction, s):
    """Plain pole-by-pole sum (no pairing); used as a cross-check."""
    s_arr = np.asarray(s, dtype=complex)
    _check_poles(f, s_arr)
    out = (f.weights / (s_arr[..., None] - 1j * f.poles)).sum(-1)
    return out if np.ndim(s) else complex(out)


def eval_F_derivative(f: SecularFunction, s):
    s_arr = np.asarray(s, dtype=complex)
    _check_poles(f, s_arr)
    out = -(f.weights / (s_arr[..., None] - 1j * f.poles) ** 2).sum(-1)
    return out if np.ndim(s) else complex(out)


# ---------------------------------------------------------------------------
# zeros of F on the imaginary axis


@dataclass(frozen=True)
class SecularZeros:
    """``mu[k]`` lies in the gap between positions ``k`` and ``k+1``; NaN where skipped."""

    mu: np.ndarray
    skipped: np.ndarray


def _g(poles, weights, t):
    # -Im F(i t) = sum w / (t - lam)
    return (weights / (t[:, None] - poles)).sum(-1)


def _bisect_mu(poles, weights, lo_pole, hi_pole, n):
    span = max(poles[-1] - poles[0], 1.0) if poles.size else 1.0
    eps = 1e-13 * span
    lo = lo_pole + eps
    hi = hi_pole - eps
    glo = _g(poles, weights, lo)
    ghi = _g(poles, weights, hi)
    bad = ~((glo > 0) & (ghi < 0))
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise SecularAnomalyError(
            "no sign change of -Im F(it) across interval",
            interval=(float(lo_pole[k]), float(hi_pole[k])), g_lo=float(glo[k]), g_hi=float(ghi[k]))
    spacing = np.maximum(hi_pole - lo_pole, 1e-300)
    gtol = 1e-12 * n / spacing
    done = np.zeros(lo.size, dtype=bool)
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = _g(poles, weights, mid)
        done |= (np.abs(gm) <= gtol) | (hi - lo <= 4 * np.finfo(float).eps * np.abs(mid))
        if np.all(done):
            break
        up = (gm > 0) & ~done
        lo = np.where(up, mid, lo)
        hi = np.where(~up & ~done, mid, hi)
    return mid


def find_all_mu(f: SecularFunction) -> SecularZeros:
    n = f.n
    if n < 2:
        return SecularZeros(np.zeros(0), np.zeros(0, dtype=bool))
    a, b = f.poles[:-1], f.poles[1:]
    skipped = (f.weights[:-1] <= f.tol_w) | (f.weights[1:] <= f.tol_w) | ~(a < b)
    mu = np.full(n - 1, np.nan)
    live = np.flatnonzero(~skipped)
    if live.size:
        keep = f.weights > f.tol_w
        mu[live] = _bisect_mu(f.poles[keep], f.weights[keep], a[live], b[live], n)
    return SecularZeros(mu, skipped)


def find_mu(f: SecularFunction, j: int):
    """Zero of ``-Im F(it)`` between pole ``j`` and the next pole, or None if skipped.

    Degenerate weights (below ``tol_w``) on either end skip the interval.
    """
    k = f.position(j)
    if k + 1 >= f.n:
        raise IndexError(f"no pole after label {j}")
    a, b = f.poles[k], f.poles[k + 1]
    if not a < b or f.weights[k] <= f.tol_w or f.weights[k + 1] <= f.tol_w:
        return None
    keep = f.weights > f.tol_w
    mu = _bisect_mu(f.poles[keep], f.weights[keep], np.array([a]), np.array([b]), f.n)
    return float(mu[0])


# ---------------------------------------------------------------------------
# root finding


@dataclass(frozen=True, eq=False)
class PerturbedSpectrum:
    roots: np.ndarray  # complex, sorted by (imag, real)
    tags: tuple
    residuals: np.ndarray  # from inverse iteration; NaN if not polished
    intervals: np.ndarray  # position of the lower pole of the gap the root came from; -1 otherwise
    failures: tuple = ()
    methods: tuple = ()

    @property
    def n(self) -> int:
        return self.roots.size

    def eigenvalues_D(self) -> np.ndarray:
        return (self.roots - 1.0) / 2.0

    def to_json(self, **extra) -> str:
        rows = [{"re": float(r.real), "im": float(r.imag), "tag": t,
                 "residual": (None if np.isnan(res) else float(res)),
                 "interval_index": (None if iv < 0 else int(iv))}
                for r, t, res, iv in zip(self.roots, self.tags, self.residuals, self.intervals)]
        doc = {"schema_version": SCHEMA_VERSION, "roots": rows,
               "failures": list(self.failures), **extra}
        return json.dumps(doc, indent=1)


@dataclass
class _Reduced:
    poles: np.ndarray  # distinct live poles
    weights: np.ndarray
    source: list  # positions in the original pole list (per reduced pole)
    persisted: list  # (pole value, original position)


def _reduce(f: SecularFunction) -> _Reduced:
    """Merge near-equal poles and drop weightless ones."""
    tol = 1e-11 * f.scale
    groups = []
    for k in range(f.n):
        if groups and f.poles[k] - f.poles[groups[-1][-1]] <= tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    poles, weights, source, persisted = [], [], [], []
    for g in groups:
        p = 0.5 * (f.poles[g[0]] + f.poles[g[-1]])
        w = float(f.weights[g].sum())
        if w > f.tol_w:
            poles.append(p)
            weights.append(w)
            source.append(g[len(g) // 2])
            extra = [k for k in g if k != g[len(g) // 2]]
        else:
            extra = g
        persisted.extend((p, k) for k in extra)
    return _Reduced(np.array(poles), np.array(weights), source, persisted)


def _F(poles, weights, s):
    return (weights / (s - 1j * poles)).sum()


def _Fp(poles, weights, s):
    return -(weights / (s - 1j * poles) ** 2).sum()


def _converged(poles, weights, s, val):
    noise = 16 * np.finfo(float).eps * np.abs(weights / (s - 1j * poles)).sum()
    return abs(val - 1.0) <= 1e-10 + noise


def _newton(poles, weights, s, maxiter=60):
    """Safeguarded complex Newton on ``F(s) = 1``; returns (s, ok, iterations)."""
    val = _F(poles, weights, s)
    for it in range(1, maxiter + 1):
        if _converged(poles, weights, s, val):
            return s, True, it - 1
        dF = _Fp(poles, weights, s)
        if dF == 0 or not np.isfinite(dF):
            return s, False, it
        step = -(val - 1.0) / dF
        dist = np.abs(s - 1j * poles).min()
        if abs(step) > 0.5 * dist:
            step *= 0.5 * dist / abs(step)
        r0 = abs(val - 1.0)
        for _ in range(30):
            cand = s + step
            cv = _F(poles, weights, cand)
            if np.isfinite(cv) and abs(cv - 1.0) < r0:
                break
            step *= 0.5
        else:
            return s, False, it
        if abs(step) <= 4 * np.finfo(float).eps * abs(cand):
            s, val = cand, cv
            return s, _converged(poles, weights, s, val) or abs(val - 1.0) < 1e-8, it
        s, val = cand, cv
    return s, _converged(poles, weights, s, val), maxiter


def _real_root(poles, weights, start):
    """Positive real solution of the (odd) symmetric secular equation.

    Newton with a bisection fallback inside a bracket ``[lo, hi]`` where
    ``F(lo) > 1 > F(hi)``; ``F(s) <= sum(w) / s`` gives ``hi``.
    """
    def Fr(x):
        return float(_F(poles, weights, complex(x)).real)

    hi = max(start, 2.0 * weights.sum())
    while Fr(hi) > 1.0:
        hi *= 2.0
    lo = min(start, hi) / 2.0
    while Fr(lo) < 1.0:
        lo /= 2.0
        if lo < 1e-300:
            raise SecularAnomalyError("no positive real root bracket found")
    x = min(max(start, lo), hi)
    for _ in range(200):
        fx = Fr(x) - 1.0
        if fx > 0:
            lo = x
        else:
            hi = x
        if abs(fx) <= 1e-15 or hi - lo <= 4 * np.finfo(float).eps * hi:
            break
        d = float(_Fp(poles, weights, complex(x)).real)
        xn = x - fx / d if d != 0 else 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        x = xn
    return x


def _aberth(poles, weights, guesses, maxiter=500):
    """Simultaneous Aberth-Ehrlich iteration on ``prod(s - i p) (1 - F(s))``."""
    z = np.array(guesses, dtype=complex)
    r = z.size
    scale = max(1.0, np.abs(poles).max(initial=0.0), weights.sum())
    for _ in range(maxiter):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            corr = _aberth_step(poles, weights, z)
        z = z - corr
        if np.abs(corr).max(initial=0.0) <= 1e-15 * scale:
            break
    assert z.size == r
    return z


def _aberth_step(poles, weights, z):
    diff = z[:, None] - 1j * poles[None, :]
    diff = np.where(diff == 0, 1e-300, diff)
    F = (weights / diff).sum(1)
    Fp = -(weights / diff ** 2).sum(1)
    logd = (1.0 / diff).sum(1) - Fp / (1.0 - F)
    ratio = 1.0 / logd
    dz = z[:, None] - z[None, :]
    np.fill_diagonal(dz, 1.0)
    inv = 1.0 / dz
    np.fill_diagonal(inv, 0.0)
    corr = ratio / (1.0 - ratio * inv.sum(1))
    return np.where(np.isfinite(corr), corr, 0.0)


def _power_sums_ok(P, Wt, z, rtol=1e-8):
    """Check the first two power sums of the roots against ``tr A`` and ``tr A^2``.

    For ``A = i diag(P) + z z^T`` with ``|z_k|^2 = W_k``:
    ``tr A = sum(i P) + sum(W)`` and
    ``tr A^2 = sum((i P)^2) + 2 sum(i P W) + sum(W)^2``.
    A duplicated root in place of a missing one breaks these identities.
    """
    if z.size != P.size or not np.all(np.isfinite(z)):
        return False
    t1 = 1j * P.sum() + Wt.sum()
    t2 = -(P ** 2).sum() + 2j * (P * Wt).sum() + Wt.sum() ** 2
    s1 = max(1.0, np.abs(P).sum() + Wt.sum())
    return bool(abs(z.sum() - t1) <= rtol * s1 and abs((z ** 2).sum() - t2) <= rtol * s1 ** 2)


def solve_perturbed(f: SecularFunction, spec=None, A=None, method: str = "newton",
                    polish: bool = True) -> PerturbedSpectrum:
    """All ``n`` eigenvalues of ``B + c b b^T`` from the secular equation.

    ``A`` is the dense perturbed matrix; when given (and ``polish``), every
    root is refined by inverse iteration on ``A`` and its residual recorded.
    ``method="aberth"`` skips the interval Newton solves.
    """
    red = _reduce(f)
    P, Wt = red.poles, red.weights
    r = P.size
    scale = max(1.0, np.abs(P).max(initial=0.0), Wt.sum(initial=0.0))
    roots, tags, ivals, methods, failures = [], [], [], [], []

    def add(s, tag, iv, how):
        roots.append(complex(s))
        tags.append(tag)
        ivals.append(iv)
        methods.append(how)

    # persisted eigenvalues of B
    for p, k in red.persisted:
        add(1j * p, "persisted", -1, "persisted")

    sym = f.symmetric
    zero_pole = sym and r % 2 == 1
    live = []  # (s, tag, interval, method)
    if r == 1:
        live.append((1j * P[0] + Wt[0], "real-root" if sym else "secular-newton", -1, "exact"))
    elif r > 1 and method == "newton":
        if sym:
            gaps = list(range(r // 2, r - 1))  # gaps above the centre
        else:
            gaps = list(range(r - 1))
        mus = _bisect_mu(P, Wt, P[gaps], P[np.array(gaps) + 1], f.n) if gaps else []
        for k, mu in zip(gaps, mus):
            s0 = 1j * mu + 1.0 / _Fp(P, Wt, 1j * mu)
            s, ok, it = _newton(P, Wt, s0)
            if not ok:
                failures.append({"interval_index": int(red.source[k]), "iterations": it,
                                 "last": [float(s.real), float(s.imag)]})
            live.append((s, "secular-newton", k, "newton"))
        if sym:
            live += [(np.conj(s), t, r - 2 - k, m) for s, t, k, m in list(live)]
            if zero_pole:
                x = _real_root(P, Wt, float(f.n))
                live.append((complex(x), "real-root", -1, "real-newton"))
            else:
                live += _middle_pair(P, Wt, [s for s, *_ in live])
        else:
            s_out = 1j * P.sum() + Wt.sum() - sum(s for s, *_ in live)
            s_out, ok, it = _newton(P, Wt, s_out)
            if not ok:
                failures.append({"interval_index": None, "iterations": it, "outlier": True})
            live.append((s_out, "secular-newton", -1, "trace-newton"))

    if r > 1:
        live = _collapse_clusters(live, scale, P, Wt, 1j * P.sum() + Wt.sum())
        z = np.array([s for s, *_ in live]) if live else np.zeros(0, complex)
        ok = (len(live) == r and not failures and _power_sums_ok(P, Wt, z)
              and all(_converged(P, Wt, s, _F(P, Wt, s)) for s in z))
        if not ok:
            live = _repair(P, Wt, live, sym, scale)
    for s, t, k, m in live:
        add(s, t, int(red.source[k]) if k >= 0 else -1, m)

    if len(roots) != f.n:
        raise StructuralError(f"found {len(roots)} roots for n = {f.n}")

    roots = np.array(roots)
    residuals = np.full(f.n, np.nan)
    if A is not None and polish:
        roots, residuals = _polish(np.asarray(A, dtype=complex), roots, sym)
    order = np.lexsort((roots.real, roots.imag))
    return PerturbedSpectrum(roots[order], tuple(tags[i] for i in order), residuals[order],
                             np.array(ivals)[order], tuple(failures),
                             tuple(methods[i] for i in order))


def _middle_pair(P, Wt, others):
    """Last two roots of the even symmetric problem from trace and product.

    ``sum of roots = sum(w)`` and ``prod of roots = prod(i p_k)``; both are
    solved for the remaining pair and then polished by Newton.
    """
    others = np.asarray(others, dtype=complex)
    tr = Wt.sum() - others.sum().real
    # product of all roots = det(i diag(P)) = prod over pairs p^2
    logprod = np.log(np.abs(P)).sum() - np.log(np.abs(others)).sum() if others.size else np.log(np.abs(P)).sum()
    prod = np.exp(logprod)
    disc = tr * tr - 4.0 * prod
    if disc >= 0:
        q = np.sqrt(disc)
        pair = [0.5 * (tr + q), 0.5 * (tr - q)]
        out = []
        for x0 in pair:
            x, ok, _ = _newton(P, Wt, complex(x0))
            out.append((complex(x.real, 0.0), "real-root", -1, "trace-product"))
        return out
    s0 = complex(0.5 * tr, 0.5 * np.sqrt(-disc))
    s, ok, _ = _newton(P, Wt, s0)
    return [(s, "secular-newton", -1, "trace-product"), (np.conj(s), "secular-newton", -1, "trace-product")]


def _collapse_clusters(live, scale, P, Wt, trace=None):
    """Replace numerically multiple roots by their centroid.

    An ``m``-fold (possibly defective) root is only resolved to about
    ``eps^(1/m)``, but the mean of the cluster is well conditioned. Groups
    whose diameter is within ``10 eps^(1/m)`` (relative) and whose centroid
    solves the secular equation to noise level are collapsed; with
    a single such group and the exact ``trace`` known, its centre is taken
    from the trace identity instead of the noisy mean.
    """
    z = np.array([o[0] for o in live])
    if z.size < 2:
        return live
    eps = np.finfo(float).eps
    d = np.abs(z[:, None] - z[None, :])
    free = np.ones(z.size, dtype=bool)
    groups = []
    for k in range(z.size):
        if not free[k]:
            continue
        cand = np.flatnonzero(free)
        cand = cand[np.argsort(d[k, cand], kind="stable")]
        best = None
        diam = 0.0
        for m in range(2, min(cand.size, 16) + 1):
            if d[k, cand[m - 1]] > 10 * eps ** (1.0 / 16) * scale:
                break
            diam = max(diam, d[cand[m - 1], cand[:m - 1]].max())
            if diam <= 10 * eps ** (1.0 / m) * scale:
                c = z[cand[:m]].mean()
                dist = np.abs(c - 1j * P).min()
                if dist > diam and abs(_F(P, Wt, c) - 1.0) <= 1e-8 + 1e3 * eps * np.abs(Wt / (c - 1j * P)).sum():
                    best = cand[:m]
        if best is not None:
            groups.append(best)
            free[best] = False
    out = list(live)
    for idx in groups:
        centre = z[idx].mean()
        if trace is not None and len(groups) == 1:
            rest = np.delete(z, idx)
            centre = (trace - rest.sum()) / idx.size
            if abs(centre - z[idx].mean()) > 1e-4 * scale:
                centre = z[idx].mean()
        if abs(centre.imag) <= 1e-9 * scale and all(out[k][1] == "real-root" for k in idx):
            centre = complex(centre.real, 0.0)
        for k in idx:
            _, t, iv, _m = out[k]
            out[k] = (centre, t, iv, "cluster-mean")
    return out


def _repair(P, Wt, live, sym, scale):
    """Re-solve the reduced problem by Aberth-Ehrlich, seeded with what Newton found."""
    r = P.size
    seeds = []
    for s, *_ in live:
        if all(abs(s - t) > 1e-6 * scale for t in seeds):
            seeds.append(s)
    mids = 0.5 * (P[:-1] + P[1:])
    k = 0
    while len(seeds) < r:
        cand = 0.5 + 1j * mids[k % mids.size] + 1e-3 * (k + 1)
        seeds.append(cand)
        k += 1
    seeds = np.array(seeds[:r])
    z = _aberth(P, Wt, seeds)
    out = []
    for s in z:
        g = int(np.searchsorted(P, s.imag)) - 1
        iv = g if 0 <= g < r - 1 else -1
        if sym and abs(s.imag) <= 1e-9 * scale:
            out.append((complex(s.real, 0.0), "real-root", -1, "aberth"))
        else:
            out.append((s, "secular-newton", iv, "aberth"))
    if sym:
        out = _conjugate_close(out, r)
    out = _collapse_clusters(out, scale, P, Wt, 1j * P.sum() + Wt.sum())
    z = np.array([o[0] for o in out])
    if len(out) != r or not _power_sums_ok(P, Wt, z):
        raise StructuralError(f"root repair produced {len(out)} roots for {r} live poles")
    return out


def _conjugate_close(out, r):
    """Make a root list exactly closed under conjugation.

    Each root is matched greedily with the nearest conjugate of another
    (or itself); matched pairs are replaced by their conjugate average.
    """
    z = np.array([o[0] for o in out])
    free = list(range(z.size))
    res = []
    while free:
        k = free.pop(0)
        cand = free + [k]
        j = cand[int(np.argmin(np.abs(z[cand] - np.conj(z[k]))))]
        s, t, iv, m = out[k]
        if j == k:
            res.append((complex(z[k].real, 0.0), "real-root", -1, m))
            continue
        free.remove(j)
        avg = 0.5 * (z[k] + np.conj(z[j]))
        if avg.imag < 0:
            avg, k, j = np.conj(avg), j, k
        if avg.imag == 0:
            res += [(avg, "real-root", -1, m), (avg, "real-root", -1, m)]
        else:
            res += [(avg, "secular-newton", out[k][2], m), (np.conj(avg), "secular-newton", out[j][2], m)]
    return res


def _polish(A, roots, sym):
    """Inverse-iteration polish; mirrors the upper half in the symmetric case."""
    n = roots.size
    out = roots.copy()
    res = np.full(n, np.nan)
    scale = max(1.0, np.abs(roots).max())
    spacing = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(spacing, np.inf)
    near = spacing.min(axis=1)
    todo = range(n)
    if sym:
        todo = [k for k in range(n) if roots[k].imag >= 0]
    for k in todo:
        try:
            rp = refine_eigenpair(A, roots[k])
        except NoConvergenceError as e:
            res[k] = e.best_residual
            continue
        drift = abs(rp.s - roots[k])
        # keep the secular root if inverse iteration wandered towards a
        # neighbour, or inside a tight (possibly defective) cluster where
        # neither value is better than ~eps^(1/m)
        if drift <= 0.25 * near[k] and near[k] > 1e-6 * scale:
            out[k] = complex(rp.s.real, 0.0) if (sym and roots[k].imag == 0) else rp.s
        res[k] = rp.residual
    if sym:
        for k in range(n):
            if roots[k].imag < 0:
                j = int(np.argmin(np.abs(roots - np.conj(roots[k]))))
                out[k] = np.conj(out[j])
                res[k] = res[j]
    return out, res
