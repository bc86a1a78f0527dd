"""Relaxation of eigenvector moments towards 1 under the frozen-spectrum flow."""
from dataclasses import dataclass

import numpy as np

from common import parse_config
from rmtlab.core_linalg import eigen_skew
from rmtlab.ensembles import sample_skew_gaussian
from rmtlab.moment_flow import convergence_report, state_from_spectrum


@dataclass
class Config:
    """sup |f - 1| at several times, averaged over sampled spectra."""
    n: int = 9
    particles: int = 2
    samples: int = 20
    times: tuple = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0)
    seed: int = 3


def main(cfg: Config):
    q = np.zeros(cfg.n)
    q[0] = 1.0
    devs = []
    for t in range(cfg.samples):
        spec = eigen_skew(sample_skew_gaussian(cfg.n, (cfg.seed, 0), t))
        devs.append(convergence_report(state_from_spectrum(spec, q, cfg.particles), cfg.times).deviations)
    devs = np.array(devs)
    for T, col in zip(cfg.times, devs.T):
        print(f"t={T:5.2f}  median sup|f-1| {np.median(col):.4f}  max {col.max():.4f}")


if __name__ == "__main__":
    main(parse_config(Config))
