"""Anti-symmetric Dyson Brownian motion.

Matrix level: ``W(t) = W0 + G(t) / sqrt(N)`` with ``G`` a skew matrix of
independent standard Brownian motions above the diagonal (``M = iW`` is the
Hermitian picture).  The OU variant replaces each entry by
``dw = -w dt / (2N) + dB / sqrt(N)``, whose stationary law has unit-variance
entries.

Eigenvalue level: the ``k = (N-1)/2`` positive eigenvalues solve

    d lam_j = dB_j / sqrt(N)
              + (1/N) [sum_{l != j} 1/(lam_j - lam_l) + sum_{l != j} 1/(lam_j + lam_l) + 1/lam_j] dt
              (- lam_j / (2N) dt   for the OU variant)

Eigenvector level: the flow is run in the rotating real frame
``O = [v_0, sqrt2 Re v_1, sqrt2 Im v_1, ...]``.  The driving noise ``E`` is
drawn directly in that frame (its law is rotation invariant), so entry
``E[2j-1, 2j]`` is the eigenvalue noise of ``lam_j`` and the vectors are driven
by the remaining entries.  In the complex eigenbasis ``c`` of the frame the
increment is ``dA[b, a] = (c_b^* E c_a / sqrt N) / (theta_a - theta_b)`` for
``b`` different from ``a`` and from its conjugate partner (which decouples
because ``v^T E v = 0``), plus the Ito drift ``-(dt / 2N) sum 1/|theta_a - theta_b|^2``
along ``v_a``.  Here ``theta = i * (0, lam, -lam)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_linalg import SkewMatrix, SkewSpectrum
from .ensembles import sample_skew_gaussian
from .errors import InvalidInputError, StepFailureError
from .rng import as_seed, normal

MAX_HALVINGS = 10


@dataclass(frozen=True, eq=False)
class MatrixPath:
    times: np.ndarray
    snapshots: list


@dataclass(frozen=True, eq=False)
class EigenPath:
    times: np.ndarray
    values: np.ndarray  # (len(times), k)

    def to_csv(self) -> str:
        k = self.values.shape[1]
        rows = ["t," + ",".join(f"lam{j + 1}" for j in range(k))]
        rows += [",".join(repr(float(x)) for x in (t, *v)) for t, v in zip(self.times, self.values)]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True, eq=False)
class EigenvectorPath:
    times: np.ndarray
    values: np.ndarray   # (len(times), k)
    vectors: np.ndarray  # (len(times), N, k+1); column 0 real, column j is v_j

    def orthonormality_defect(self) -> np.ndarray:
        out = []
        for V in self.vectors:
            full = np.hstack([V, V[:, 1:].conj()])
            out.append(np.abs(full.conj().T @ full - np.eye(full.shape[1])).max())
        return np.array(out)


def _check_variant(variant):
    if variant not in ("brownian", "ou"):
        raise InvalidInputError(f"unknown variant {variant!r}")


def _grid(T, dt):
    if not dt > 0:
        raise InvalidInputError("dt must be positive")
    if T < 0:
        raise InvalidInputError("T must be >= 0")
    steps = int(round(T / dt))
    if T > 0 and (steps == 0 or abs(steps * dt - T) > 1e-9 * max(T, 1)):
        raise InvalidInputError("T must be a positive multiple of dt")
    return steps


# ---------------------------------------------------------------------------
# matrix level


def matrix_flow(M0: SkewMatrix, T: float, dt: float, seed=None, trial: int = 0,
                variant: str = "brownian", record_every: int = 1) -> MatrixPath:
    _check_variant(variant)
    steps = _grid(T, dt)
    n = M0.n
    rng = as_seed(seed).rng(trial)
    x = M0.lower.copy()
    if variant == "brownian":
        a, s = 1.0, np.sqrt(dt / n)
    else:
        a, s = np.exp(-dt / (2 * n)), np.sqrt(1.0 - np.exp(-dt / n))
    times, snaps = [0.0], [SkewMatrix(n, x.copy())]
    for i in range(1, steps + 1):
        x = a * x + s * normal(rng, x.size)
        if i % record_every == 0 or i == steps:
            times.append(i * dt)
            snaps.append(SkewMatrix(n, x.copy()))
    return MatrixPath(np.array(times), snaps)


def ou_interpolation(M0: SkewMatrix, t: float, seed=None, trial: int = 0) -> SkewMatrix:
    """``e^{-t/2} M0 + (1 - e^{-t})^{1/2} G`` with ``G`` Gaussian, entry variance ``1/N``."""
    if t < 0:
        raise InvalidInputError("t must be >= 0")
    if t == 0:
        return M0
    G = sample_skew_gaussian(M0.n, seed, trial, scale=1.0 / np.sqrt(M0.n))
    return SkewMatrix(M0.n, np.exp(-t / 2) * M0.lower + np.sqrt(-np.expm1(-t)) * G.lower)


# ---------------------------------------------------------------------------
# eigenvalue SDE


def eigenvalue_drift(lam: np.ndarray, N: int, variant: str = "brownian") -> np.ndarray:
    """Drift for a batch ``lam`` of shape ``(P, k)``."""
    d = lam[:, :, None] - lam[:, None, :]
    s = lam[:, :, None] + lam[:, None, :]
    k = lam.shape[1]
    idx = np.arange(k)
    d[:, idx, idx] = np.inf
    s[:, idx, idx] = np.inf
    out = (1.0 / d).sum(-1) + (1.0 / s).sum(-1) + 1.0 / lam
    if variant == "ou":
        out = out - lam / 2.0
    return out / N


def _min_sep(lam):
    """Smallest of ``lam_1`` and the consecutive gaps, per path."""
    return np.minimum(lam[:, 0], np.diff(lam, axis=1).min(axis=1, initial=np.inf))


def _log_potential(x, N, variant):
    """Concave potential whose gradient is the drift, ``-inf`` off the ordered chamber."""
    if not (_min_sep(x) > 0).all():
        out = np.full(x.shape[0], -np.inf)
        good = _min_sep(x) > 0
        if good.any():
            out[good] = _log_potential(x[good], N, variant)
        return out
    d = x[:, None, :] - x[:, :, None]
    s = x[:, None, :] + x[:, :, None]
    iu = np.triu_indices(x.shape[1], 1)
    out = (np.log(d[:, iu[0], iu[1]]).sum(-1) + np.log(s[:, iu[0], iu[1]]).sum(-1)
           + np.log(x).sum(-1))
    if variant == "ou":
        out = out - (x * x).sum(-1) / 4.0
    return out / N


def implicit_step(lam, y, h, N, variant="brownian", maxiter=60):
    """Drift-implicit Euler step: solve ``x = y + h b(x)`` inside the ordered chamber.

    ``x`` minimises the strictly convex ``|x - y|^2 / 2 - h Phi(x)`` with
    ``grad Phi = b``, so the solution exists, is unique and is ordered.
    Damped Newton from the (valid) current state ``lam``.
    """
    x = np.array(lam, dtype=float)
    y = np.asarray(y, dtype=float)
    k = x.shape[1]
    idx = np.arange(k)
    eye = np.eye(k)
    obj = lambda z: 0.5 * ((z - y) ** 2).sum(-1) - h * _log_potential(z, N, variant)
    for _ in range(maxiter):
        g = x - y - h * eigenvalue_drift(x, N, variant)
        d = x[:, :, None] - x[:, None, :]
        s = x[:, :, None] + x[:, None, :]
        d[:, idx, idx] = np.inf
        s[:, idx, idx] = np.inf
        J = (1 / d ** 2 - 1 / s ** 2) / N
        J[:, idx, idx] = -((1 / d ** 2).sum(-1) + (1 / s ** 2).sum(-1) + 1 / x ** 2) / N
        if variant == "ou":
            J[:, idx, idx] -= 0.5 / N
        step = np.linalg.solve(eye - h * J, -g[..., None])[..., 0]
        # near-coincident pairs make g ill-conditioned, so test the Newton step
        if (np.abs(step).max(-1) <= 1e-14 * (1.0 + np.abs(x).max(-1))).all():
            return x
        f0 = obj(x)
        f0 = f0 + 1e-13 * (1.0 + np.abs(f0))  # let roundoff-sized steps through
        a = np.ones(x.shape[0])
        for _ in range(60):
            trial = x + a[:, None] * step
            bad = ~(obj(trial) <= f0)
            if not bad.any():
                break
            a[bad] /= 2
        x = np.where(bad[:, None], x, trial)
    raise StepFailureError("implicit step did not converge", None)


def _check_initial(lam0):
    lam0 = np.asarray(lam0, dtype=float)
    if lam0.ndim != 1 or lam0.size == 0:
        raise InvalidInputError("need a non-empty vector of eigenvalues")
    if not (lam0[0] > 0 and np.all(np.diff(lam0) > 0)):
        raise InvalidInputError("initial eigenvalues must be positive and strictly increasing")
    return lam0


class _Lam:
    """Euler-Maruyama for the eigenvalues with Brownian-bridge substepping."""

    def __init__(self, N, variant, rng, noise, floor="implicit"):
        if floor not in ("implicit", "error"):
            raise InvalidInputError(f"unknown floor policy {floor!r}")
        self.N, self.variant, self.rng, self.noise = N, variant, rng, noise
        self.floor = floor

    def thr(self, h):
        return 4.0 * np.sqrt(h / self.N)

    def propose(self, lam, h, dB):
        return lam + eigenvalue_drift(lam, self.N, self.variant) * h + dB / np.sqrt(self.N)

    # state access, overridden by the eigenvector flow
    def lam_of(self, x):
        return x

    def lam_noise(self, dB):
        return dB / np.sqrt(self.N)

    def set_lam(self, x, idx, lam):
        x[idx] = lam

    def take(self, x, idx):
        return x[idx]

    def put(self, x, idx, sub):
        x[idx] = sub

    def bridge(self, dB, h):
        """Increment over the first half of ``[0, h]`` given the total ``dB``."""
        half = dB / 2
        if self.noise:
            half = half + np.sqrt(h / 4) * normal(self.rng, dB.shape)
        return half

    def refine(self, x, h, dB, t, depth=0):
        """One step for a batch of paths; paths that come too close are split in two."""
        new = self.propose(x, h, dB)
        ok = _min_sep(self.lam_of(new)) > 0
        if depth < MAX_HALVINGS:
            ok &= _min_sep(self.lam_of(x)) >= self.thr(h)
        elif not ok.all():
            msg = f"eigenvalue collision at t={t:.6g} despite substepping"
            if self.floor == "error":
                raise StepFailureError(msg, t)
            bad = np.flatnonzero(~ok)
            lam = self.lam_of(self.take(x, bad))
            try:
                fix = implicit_step(lam, lam + self.lam_noise(dB[bad]), h, self.N, self.variant)
            except StepFailureError:
                raise StepFailureError(msg, t) from None
            self.set_lam(new, bad, fix)
            ok[bad] = True
        redo = np.flatnonzero(~ok)
        if redo.size:
            sub, dsub = self.take(x, redo), dB[redo]
            half = self.bridge(dsub, h)
            mid = self.refine(sub, h / 2, half, t, depth + 1)
            self.put(new, redo, self.refine(mid, h / 2, dsub - half, t + h / 2, depth + 1))
        return new

    step = refine


def eigenvalue_sde_batch(lambda0, T: float, dt: float, seed=None, paths: int = 1,
                         variant: str = "brownian", N: int | None = None, noise: bool = True,
                         trial: int = 0, record_every: int | None = None,
                         floor: str = "implicit"):
    """Run ``paths`` independent copies; returns ``(times, values)`` with values ``(m, P, k)``.

    ``lambda0`` is one vector (shared start) or a ``(P, k)`` array.  All paths
    of a batch draw from one stream, keyed by ``(seed, trial)``.  ``floor``
    decides what happens when a proposal still crosses at the smallest
    substep: ``"implicit"`` retakes it with :func:`implicit_step`, ``"error"``
    raises :class:`StepFailureError`.
    """
    _check_variant(variant)
    steps = _grid(T, dt)
    lam0 = np.asarray(lambda0, dtype=float)
    if lam0.ndim == 1:
        lam = np.tile(_check_initial(lam0), (paths, 1))
    else:
        for row in lam0:
            _check_initial(row)
        lam = lam0.copy()
        paths = lam.shape[0]
    k = lam.shape[1]
    N = 2 * k + 1 if N is None else int(N)
    rng = as_seed(seed).rng(trial)
    flow = _Lam(N, variant, rng, noise, floor)
    every = steps if record_every is None else record_every
    times, out = [0.0], [lam.copy()]
    for i in range(steps):
        dB = np.sqrt(dt) * normal(rng, (paths, k)) if noise else np.zeros((paths, k))
        lam = flow.step(lam, dt, dB, i * dt)
        if every and ((i + 1) % every == 0 or i + 1 == steps):
            times.append((i + 1) * dt)
            out.append(lam.copy())
    return np.array(times), np.array(out)


def eigenvalue_sde(lambda0, T: float, dt: float, seed=None, variant: str = "brownian",
                   N: int | None = None, noise: bool = True, trial: int = 0,
                   record_every: int = 1, floor: str = "implicit") -> EigenPath:
    times, vals = eigenvalue_sde_batch(lambda0, T, dt, seed, 1, variant, N, noise, trial,
                                       record_every, floor)
    return EigenPath(times, vals[:, 0, :])


# ---------------------------------------------------------------------------
# eigenvector flow


def _frame_basis(k):
    """Columns: complex eigenbasis of the block-diagonal frame, order (0, 1..k, -1..-k)."""
    N = 2 * k + 1
    C = np.zeros((N, N), dtype=complex)
    C[0, 0] = 1.0
    for j in range(1, k + 1):
        C[2 * j - 1, j] = 1 / np.sqrt(2)
        C[2 * j, j] = 1j / np.sqrt(2)
    C[:, k + 1:] = C[:, 1:k + 1].conj()
    return C


def _partner(k):
    return np.r_[0, np.arange(k + 1, 2 * k + 1), np.arange(1, k + 1)]


def _skew_noise(rng, P, N, h):
    E = np.zeros((P, N, N))
    iu = np.triu_indices(N, 1)
    E[:, iu[0], iu[1]] = np.sqrt(h) * normal(rng, (P, iu[0].size))
    return E - E.transpose(0, 2, 1)


def _orthonormalize(O):
    Q, R = np.linalg.qr(O)
    sgn = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    sgn[sgn == 0] = 1.0
    return Q * sgn[:, None, :]


class _Vec(_Lam):
    def __init__(self, N, variant, rng, noise, floor="implicit"):
        super().__init__(N, variant, rng, noise, floor)
        self.k = (N - 1) // 2
        self.C = _frame_basis(self.k)
        self.CH = self.C.conj().T
        self.pair = _partner(self.k)
        mask = ~np.eye(N, dtype=bool)
        mask[self.pair, np.arange(N)] = False
        mask[0, 0] = False
        self.mask = mask  # mask[b, a]: b couples to a

    def thr(self, h):
        return 10.0 * np.sqrt(h / self.N)

    def propose(self, state, h, E):
        lam, O = state
        N = self.N
        k = self.k
        dB = E[:, 2 * np.arange(1, k + 1) - 1, 2 * np.arange(1, k + 1)]
        lam_new = super().propose(lam, h, dB)
        theta = 1j * np.concatenate([np.zeros((lam.shape[0], 1)), lam, -lam], axis=1)
        den = theta[:, None, :] - theta[:, :, None]  # den[b, a] = theta_a - theta_b
        den = np.where(self.mask, den, np.inf)
        Gh = (self.CH @ E @ self.C) / np.sqrt(N)
        dA = Gh / den
        drift = -0.5 * (h / N) * (1.0 / np.abs(den) ** 2).sum(axis=1)
        idx = np.arange(N)
        dA[:, idx, idx] += drift
        R = (self.C @ dA @ self.CH).real
        return lam_new, _orthonormalize(O + O @ R)

    def lam_of(self, x):
        return x[0]

    def lam_noise(self, E):
        j = np.arange(1, self.k + 1)
        return E[:, 2 * j - 1, 2 * j] / np.sqrt(self.N)

    def set_lam(self, x, idx, lam):
        x[0][idx] = lam

    def take(self, x, idx):
        return x[0][idx], x[1][idx]

    def put(self, x, idx, sub):
        x[0][idx], x[1][idx] = sub

    def bridge(self, E, h):
        half = E / 2
        if self.noise:
            half = half + _skew_noise(self.rng, E.shape[0], self.N, h / 4)
        return half


def frame_from_spectrum(spec: SkewSpectrum) -> np.ndarray:
    n, k = spec.n, spec.n // 2
    O = np.empty((n, n))
    O[:, 0] = spec.vec(0).real
    for j in range(1, k + 1):
        v = spec.vec(j)
        O[:, 2 * j - 1] = np.sqrt(2) * v.real
        O[:, 2 * j] = np.sqrt(2) * v.imag
    return O


def vectors_from_frame(O: np.ndarray) -> np.ndarray:
    """``(..., N, k+1)`` complex: column 0 is ``v_0``, column j is ``v_j``."""
    k = (O.shape[-1] - 1) // 2
    V = np.empty(O.shape[:-1] + (k + 1,), dtype=complex)
    V[..., 0] = O[..., 0]
    V[..., 1:] = (O[..., 1::2] + 1j * O[..., 2::2]) / np.sqrt(2)
    return V


def eigenvector_flow_batch(spec0: SkewSpectrum, T: float, dt: float, seed=None, paths: int = 1,
                           variant: str = "brownian", noise: bool = True, trial: int = 0,
                           record_every: int | None = None, floor: str = "implicit"):
    """Joint eigenvalue/eigenvector flow for ``paths`` copies started at ``spec0``.

    Returns ``(times, values (m, P, k), vectors (m, P, N, k+1))``.
    """
    _check_variant(variant)
    n = spec0.n
    if n % 2 == 0 or n < 3 or spec0.eigenvectors is None:
        raise InvalidInputError("need an odd-dimensional spectrum with eigenvectors")
    steps = _grid(T, dt)
    lam = np.tile(_check_initial(spec0.positive), (paths, 1))
    O = np.tile(frame_from_spectrum(spec0), (paths, 1, 1))
    rng = as_seed(seed).rng(trial)
    flow = _Vec(n, variant, rng, noise, floor)
    every = steps if record_every is None else record_every
    times, vals, vecs = [0.0], [lam.copy()], [vectors_from_frame(O)]
    for i in range(steps):
        E = _skew_noise(rng, paths, n, dt) if noise else np.zeros((paths, n, n))
        lam, O = flow.step((lam, O), dt, E, i * dt)
        if every and ((i + 1) % every == 0 or i + 1 == steps):
            times.append((i + 1) * dt)
            vals.append(lam.copy())
            vecs.append(vectors_from_frame(O))
    return np.array(times), np.array(vals), np.array(vecs)


def eigenvector_flow(spec0: SkewSpectrum, T: float, dt: float, seed=None,
                     variant: str = "brownian", noise: bool = True, trial: int = 0,
                     record_every: int = 1, floor: str = "implicit") -> EigenvectorPath:
    times, vals, vecs = eigenvector_flow_batch(spec0, T, dt, seed, 1, variant, noise, trial,
                                               record_every, floor)
    return EigenvectorPath(times, vals[:, 0], vecs[:, 0])
