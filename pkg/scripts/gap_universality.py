"""Bulk gap statistics: +-1 against Gaussian skew matrices."""
import json
from dataclasses import asdict, dataclass

from common import parse_config
from rmtlab.analysis import gap_statistics


@dataclass
class Config:
    """Mean of a smooth observable of one normalized bulk gap in two ensembles."""
    n: int = 201
    trials: int = 2000
    observable: str = "bump"
    seed: int = 108
    jobs: int = 1


def main(cfg: Config):
    out = {}
    for tag, nb in (("same size", cfg.n), ("size n-1", cfg.n - 1)):
        c = gap_statistics("pm1", "gaussian", cfg.n, cfg.trials, observable=cfg.observable,
                           seed=cfg.seed, n_b=nb, jobs=cfg.jobs)
        out[tag] = c.to_dict()
        print(f"{tag:10s} means {c.means[0]:.4f} / {c.means[1]:.4f}  "
              f"diff {c.difference:+.4f}  3 s.e. {3 * c.combined_se:.4f}")
    print(json.dumps({"config": asdict(cfg), "results": out}, indent=1)[:2000])


if __name__ == "__main__":
    main(parse_config(Config))
