"""Eigenvector moment flow as a finite master equation.

A configuration ``eta`` places ``m`` particles on a set of sites.  For a
frozen (or prescribed) eigenvalue path the normalized eigenvector moments
``f(t, eta)`` evolve by a particle jump process:

hermitian (sites 1..N)
    df(eta) = sum_{i != j} c_ij eta_i (1 + eta_j) (f(eta^{ij}) - f(eta))

antisymmetric (site 0 carries the real eigenvector v_0, sites 1..k the pairs)
    df(eta) = sum_{i != j >= 1} (c_ij + c~_ij) eta_i (1 + eta_j) (f(eta^{ij}) - f(eta))
            + sum_j c_0j 2 eta_0 (1 + eta_j) (f(eta^{0j}) - f(eta))
            + sum_i c_0i eta_i (2 eta_0 + 1) (f(eta^{i0}) - f(eta))

with ``c_ij = 1/(N (lam_i - lam_j)^2)``, ``c~_ij = 1/(N (lam_i + lam_j)^2)``,
``c_0j = 1/(N lam_j^2)``.  ``eta^{ij}`` moves one particle from ``i`` to ``j``.
Constants are stationary; with the Gaussian moment normalization below the
Gaussian eigenvector law maps to ``f = 1``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInputError, SingularCoefficientError, StabilityError

MAX_SITES, MAX_PARTICLES = 12, 4

# transition kinds
_PAIR, _ZERO_OUT, _ZERO_IN = 0, 1, 2


def configurations(sites: int, m: int) -> list[tuple]:
    """All occupancy vectors with ``m`` particles on ``sites`` sites, colex order."""
    if sites < 1 or m < 0:
        raise InvalidInputError("need sites >= 1 and m >= 0")
    out = []
    for combo in itertools.combinations_with_replacement(range(sites), m):
        eta = [0] * sites
        for s in combo:
            eta[s] += 1
        out.append(tuple(eta))
    out.sort(key=lambda e: e[::-1])
    return out


def n_configurations(sites: int, m: int) -> int:
    return math.comb(sites + m - 1, m)


@dataclass(frozen=True, eq=False)
class Transitions:
    """Sparse description of every allowed move: ``rate = mult * coef[kind][i, j]``."""

    rows: np.ndarray
    cols: np.ndarray
    kind: np.ndarray
    i: np.ndarray
    j: np.ndarray
    mult: np.ndarray


def _transitions(configs, mode):
    index = {c: r for r, c in enumerate(configs)}
    S = len(configs[0])
    rows, cols, kind, ii, jj, mult = [], [], [], [], [], []
    for r, eta in enumerate(configs):
        for i in range(S):
            if eta[i] == 0:
                continue
            for j in range(S):
                if j == i:
                    continue
                new = list(eta)
                new[i] -= 1
                new[j] += 1
                c = index[tuple(new)]
                if mode == "hermitian" or (i > 0 and j > 0):
                    k, w = _PAIR, eta[i] * (1 + eta[j])
                elif i == 0:
                    k, w = _ZERO_OUT, 2 * eta[0] * (1 + eta[j])
                else:
                    k, w = _ZERO_IN, eta[i] * (2 * eta[0] + 1)
                rows.append(r); cols.append(c); kind.append(k)
                ii.append(i); jj.append(j); mult.append(w)
    a = lambda x: np.array(x, dtype=np.int64)
    return Transitions(a(rows), a(cols), a(kind), a(ii), a(jj), a(mult))


@dataclass(frozen=True, eq=False)
class FlowState:
    """Value table ``f`` over all ``m``-particle configurations at time ``t``.

    ``lam`` is either a fixed vector of eigenvalues or a callable ``t -> lam``.
    In antisymmetric mode ``lam`` holds ``lam_1..lam_k`` (site 0 has no
    eigenvalue of its own) and there are ``k + 1`` sites.
    """

    mode: str
    lam: object
    f: np.ndarray
    m: int
    N: int | None = None
    t: float = 0.0
    configs: list = field(default=None, repr=False)
    trans: Transitions = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in ("hermitian", "antisymmetric"):
            raise InvalidInputError(f"unknown mode {self.mode!r}")
        lam0 = np.asarray(self.lam_at(self.t))
        k = lam0.size
        sites = k if self.mode == "hermitian" else k + 1
        if sites > MAX_SITES or self.m > MAX_PARTICLES:
            raise InvalidInputError(f"at most {MAX_SITES} sites and {MAX_PARTICLES} particles")
        if self.N is None:
            object.__setattr__(self, "N", k if self.mode == "hermitian" else 2 * k + 1)
        if self.configs is None:
            object.__setattr__(self, "configs", configurations(sites, self.m))
        if self.trans is None:
            object.__setattr__(self, "trans", _transitions(self.configs, self.mode))
        f = np.asarray(self.f)
        if f.shape != (len(self.configs),):
            raise InvalidInputError(f"table must have {len(self.configs)} entries")

    @property
    def sites(self) -> int:
        return len(self.configs[0])

    def lam_at(self, t):
        return self.lam(t) if callable(self.lam) else self.lam

    def table(self) -> dict:
        return dict(zip(self.configs, self.f))


def make_state(mode, lam, m, f=None, N=None, t=0.0) -> FlowState:
    lam0 = lam(t) if callable(lam) else lam
    sites = len(lam0) if mode == "hermitian" else len(lam0) + 1
    if f is None:
        f = np.ones(n_configurations(sites, m))
    elif callable(f):
        f = np.array([f(eta) for eta in configurations(sites, m)], dtype=float)
    return FlowState(mode, lam, np.asarray(f), m, N, t)


def coefficients(lam, N, mode):
    """``(c, c~, c0)``; works on float or exact (object) arrays."""
    lam = np.asarray(lam)
    d = lam[:, None] - lam[None, :]
    off = ~np.eye(lam.size, dtype=bool)
    if np.any(d[off] == 0):
        raise SingularCoefficientError("coincident eigenvalues")
    d2 = np.where(off, d, 1) ** 2
    c = np.where(off, 1 / (N * d2), 0)
    if mode == "hermitian":
        return c, None, None
    if np.any(lam == 0) or np.any(lam * 1 < 0):
        raise SingularCoefficientError("antisymmetric mode needs positive eigenvalues")
    s2 = (lam[:, None] + lam[None, :]) ** 2
    ct = np.where(off, 1 / (N * s2), 0)
    c0 = 1 / (N * lam ** 2)
    return c, ct, c0


def _rates(state: FlowState, t):
    tr = state.trans
    c, ct, c0 = coefficients(state.lam_at(t), state.N, state.mode)
    if state.mode == "hermitian":
        coef = c[tr.i, tr.j]
    else:
        # site s >= 1 is eigenvalue index s - 1
        pair = (c + ct)[np.maximum(tr.i - 1, 0), np.maximum(tr.j - 1, 0)]
        out = c0[np.maximum(tr.j - 1, 0)]
        inn = c0[np.maximum(tr.i - 1, 0)]
        coef = np.where(tr.kind == _PAIR, pair, np.where(tr.kind == _ZERO_OUT, out, inn))
    return tr.mult * coef


def generator_apply(state: FlowState, t=None, f=None) -> np.ndarray:
    """``(L(t) f)(eta)``, summed move by move so constants give exactly zero."""
    t = state.t if t is None else t
    f = state.f if f is None else np.asarray(f)
    tr = state.trans
    r = _rates(state, t)
    out = np.zeros(f.shape, dtype=np.result_type(f, r))
    np.add.at(out, tr.rows, r * (f[tr.cols] - f[tr.rows]))
    return out


def generator_matrix(state: FlowState, t=None) -> np.ndarray:
    t = state.t if t is None else t
    tr = state.trans
    r = _rates(state, t).astype(float)
    n = len(state.configs)
    L = np.zeros((n, n))
    np.add.at(L, (tr.rows, tr.cols), r)
    np.add.at(L, (tr.rows, tr.rows), -r)
    return L


def max_rate(state: FlowState, t=None) -> float:
    """Largest total exit rate of any configuration."""
    t = state.t if t is None else t
    tr = state.trans
    out = np.zeros(len(state.configs))
    np.add.at(out, tr.rows, _rates(state, t).astype(float))
    return float(out.max()) if out.size else 0.0


def evolve_master(state: FlowState, T: float, dt: float) -> FlowState:
    """RK4 over ``[t, t + T]``; needs ``dt <= 0.1 / max_rate`` at every step."""
    if T < 0 or not dt > 0:
        raise InvalidInputError("need T >= 0 and dt > 0")
    steps = int(math.ceil(T / dt - 1e-9)) if T > 0 else 0
    h = T / steps if steps else dt
    f = np.asarray(state.f, dtype=float).copy()
    t = state.t
    for _ in range(steps):
        need = 0.1 / max(max_rate(state, t), max_rate(state, t + h), 1e-300)
        if h > need * (1 + 1e-12):
            raise StabilityError(f"time step {h:.3g} exceeds the stability bound {need:.3g}", need)
        k1 = generator_apply(state, t, f)
        k2 = generator_apply(state, t + h / 2, f + h / 2 * k1)
        k3 = generator_apply(state, t + h / 2, f + h / 2 * k2)
        k4 = generator_apply(state, t + h, f + h * k3)
        f = f + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return replace(state, f=f, t=t)


def stable_dt(state: FlowState, safety: float = 1.0) -> float:
    return safety * 0.1 / max(max_rate(state), 1e-300)


@dataclass(frozen=True)
class ConvergenceReport:
    times: list
    deviations: list

    @property
    def monotone(self) -> bool:
        d = self.deviations
        return all(b <= a * (1 + 1e-12) + 1e-15 for a, b in zip(d, d[1:]))

    def to_csv(self) -> str:
        return "t,sup_dev\n" + "".join(f"{t!r},{d!r}\n" for t, d in zip(self.times, self.deviations))


def convergence_report(state: FlowState, T_list, dt: float | None = None) -> ConvergenceReport:
    """``sup_eta |f(t, eta) - 1|`` at each requested time (measured from ``state.t``)."""
    T_list = sorted(float(x) for x in T_list)
    if T_list and T_list[0] < 0:
        raise InvalidInputError("times must be >= 0")
    cur, now, devs = state, 0.0, []
    for T in T_list:
        if T > now:
            h = dt if dt is not None else stable_dt(cur)
            cur = evolve_master(cur, T - now, min(h, T - now))
            now = T
        devs.append(float(np.abs(cur.f - 1.0).max()))
    return ConvergenceReport(T_list, devs)


# ---------------------------------------------------------------------------
# initial data from eigenvectors


def double_factorial_odd(j: int) -> int:
    """``a(2j) = (2j - 1)!!``, the ``2j``-th moment of a standard Gaussian."""
    return math.prod(range(2 * j - 1, 0, -2)) if j > 0 else 1


def moment_table(configs, z, mode: str, N: int) -> np.ndarray:
    """Normalized moment monomials of the overlaps ``z``.

    antisymmetric: ``z = (z_0, z_1..z_k)`` with ``z_0`` real;
        ``f(eta) = (N z_0^2)^{eta_0} / a(2 eta_0) * prod_k (2N|z_k|^2)^{eta_k} / (2^{eta_k} eta_k!)``
    hermitian: the product part only, over all sites.
    """
    z = np.asarray(z)
    out = np.empty(len(configs))
    for r, eta in enumerate(configs):
        val = 1.0
        for s, e in enumerate(eta):
            if e == 0:
                continue
            if mode == "antisymmetric" and s == 0:
                val *= (N * float(np.real(z[0])) ** 2) ** e / double_factorial_odd(e)
            else:
                val *= (2 * N * abs(z[s]) ** 2) ** e / (2 ** e * math.factorial(e))
        out[r] = val
    return out


def state_from_spectrum(spec, q, m: int, t: float = 0.0) -> FlowState:
    """Antisymmetric flow with frozen eigenvalues and moments of ``<q, v_j>`` from ``spec``."""
    n = spec.n
    if n % 2 == 0:
        raise InvalidInputError("antisymmetric moment flow needs odd n")
    k = n // 2
    q = np.asarray(q, dtype=complex)
    z = np.array([np.vdot(q, spec.vec(j)) for j in range(k + 1)])
    lam = spec.positive.copy()
    configs = configurations(k + 1, m)
    return FlowState("antisymmetric", lam, moment_table(configs, z, "antisymmetric", n), m, n, t,
                     configs)
