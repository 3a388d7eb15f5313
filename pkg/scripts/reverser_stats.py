"""Draw counts and residuals of the coninvolutory reverser on c-reversible matrices.

    python3 scripts/reverser_stats.py --dims 1..6 --count 200
"""

import argparse
from collections import Counter
from dataclasses import dataclass

import numpy as np

from coninv.certify import InstanceSpec, random_c_reversible
from coninv.cli import parse_dims
from coninv.errors import RetriesExhausted
from coninv.linalg_core import Tolerance
from coninv.reversibility import coninvolutory_reverser


@dataclass(frozen=True)
class StatsConfig:
    dims: tuple = (1, 2, 3, 4, 5, 6)
    count: int = 200
    seed: int = 0
    cond_cap: float = 1e3


class CountingRng:
    """Wraps a Generator and counts ``standard_normal`` calls (one per draw)."""

    def __init__(self, seed):
        self.inner = np.random.default_rng(seed)
        self.calls = 0

    def standard_normal(self, *args, **kwargs):
        self.calls += 1
        return self.inner.standard_normal(*args, **kwargs)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dims", default="1..6")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cond-cap", type=float, default=1e3)
    a = p.parse_args(argv)
    cfg = StatsConfig(tuple(parse_dims(a.dims)), a.count, a.seed, a.cond_cap)
    tol = Tolerance()
    print(f"{'n':>3} {'exhausted':>9} {'rev med':>10} {'rev max':>10} {'con max':>10}  draws")
    for n in cfg.dims:
        draws, rev, con, exhausted = Counter(), [], [], 0
        for i in range(cfg.count):
            A = random_c_reversible(InstanceSpec("random_c_reversible", n, cfg.seed + i, cfg.cond_cap))
            rng = CountingRng(cfg.seed + i)
            try:
                w = coninvolutory_reverser(A, rng, tol)
            except RetriesExhausted:
                exhausted += 1
                continue
            draws[rng.calls] += 1
            rev.append(w.residual_reverse)
            con.append(w.residual_coninv)
        print(f"{n:3d} {exhausted:9d} {np.median(rev):10.2e} {max(rev):10.2e} {max(con):10.2e}  "
              f"{dict(sorted(draws.items()))}")


if __name__ == "__main__":
    main()
