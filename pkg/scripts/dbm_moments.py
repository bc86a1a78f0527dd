"""Eigenvalue SDE against the matrix-level flow: moments over time."""
from dataclasses import dataclass

import numpy as np

from common import parse_config
from rmtlab.core_linalg import eigen_skew, eigvals_skew
from rmtlab.dbm import eigenvalue_sde_batch, matrix_flow
from rmtlab.ensembles import sample_skew_gaussian
from rmtlab.rng import Seed


@dataclass
class Config:
    """Compare E[sum lam^2] and E[lam_max] from both levels of the flow."""
    n: int = 5
    paths: int = 5000
    times: tuple = (0.05, 0.1, 0.5, 1.0)
    dt: float = 1e-3
    variant: str = "brownian"
    seed: int = 9


def main(cfg: Config):
    W0 = sample_skew_gaussian(cfg.n, seed=(cfg.seed, 0))
    lam0 = eigen_skew(W0, vectors=False).positive
    k = cfg.n // 2
    print(" t      stat     matrix        sde          z")
    for T in cfg.times:
        mat = np.array([eigvals_skew(matrix_flow(W0, T, T, Seed(cfg.seed, 1), p, cfg.variant)
                                     .snapshots[-1])[cfg.n - k:] for p in range(cfg.paths)])
        _, v = eigenvalue_sde_batch(lam0, T, cfg.dt, Seed(cfg.seed, 2), paths=cfg.paths,
                                    variant=cfg.variant, N=cfg.n)
        for name, f in (("sum_sq", lambda x: (x ** 2).sum(1)), ("max", lambda x: x.max(1))):
            a, b = f(mat), f(v[-1])
            se = np.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
            print(f"{T:5.2f}  {name:7s} {a.mean():10.5f} {b.mean():10.5f} {(a.mean() - b.mean()) / se:8.2f}")


if __name__ == "__main__":
    main(parse_config(Config))
