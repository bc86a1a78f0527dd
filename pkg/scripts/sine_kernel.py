"""Convergence of the rescaled kernel to its sine-type limits."""
from dataclasses import dataclass

import numpy as np

from common import parse_config
from rmtlab.gaussian_model import sine_limit_check


@dataclass
class Config:
    """Sup deviation between kernel and limit on a square window of scaled points."""
    sizes: tuple = (51, 101, 201, 401, 801)
    window: float = 2.0
    points: int = 21
    regime: str = "origin"
    E: float = 1.0


def main(cfg: Config):
    g = np.linspace(-cfg.window, cfg.window, cfg.points)
    U, V = np.meshgrid(g, g)
    prev = None
    for N in cfg.sizes:
        c = sine_limit_check(N, U, V, cfg.regime, cfg.E if cfg.regime == "bulk" else None)
        ratio = "" if prev is None else f"  ratio {c.sup_dev / prev:.3f}"
        print(f"N={N:4d}  sup dev {c.sup_dev:.3e}  (limit scale {c.limit_scale:.3f}){ratio}")
        prev = c.sup_dev


if __name__ == "__main__":
    main(parse_config(Config))
