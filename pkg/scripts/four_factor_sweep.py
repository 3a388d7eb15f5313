"""Sweep four_factor over dimensions and condition caps; print a residual table.

    python3 scripts/four_factor_sweep.py --dims 1..8 --count 50
"""

import argparse
import time
from dataclasses import dataclass

import numpy as np

from coninv.certify import InstanceSpec, random_unimodular_det, verify_certificate
from coninv.cli import parse_dims
from coninv.errors import ConinvError
from coninv.factorization import four_factor
from coninv.linalg_core import AffineMap, Tolerance


@dataclass(frozen=True)
class SweepConfig:
    dims: tuple = (1, 2, 3, 4, 5, 6)
    cond_caps: tuple = (5.0, 20.0, 1e3)
    count: int = 50
    seed: int = 0
    residual_rel: float = 1e-9


def run(cfg: SweepConfig):
    tol = Tolerance(residual_rel=cfg.residual_rel)
    rows = []
    for cap in cfg.cond_caps:
        for n in cfg.dims:
            res, errors, kinds = [], 0, {}
            start = time.perf_counter()
            for i in range(cfg.count):
                seed = cfg.seed + i
                A = random_unimodular_det(InstanceSpec("random_unimodular_det", n, seed, cond_cap=cap))
                rng = np.random.default_rng([seed, n])
                g = AffineMap(A, rng.standard_normal(n) + 1j * rng.standard_normal(n))
                try:
                    cert = four_factor(g, seed, tol)
                except ConinvError:
                    errors += 1
                    continue
                report = verify_certificate(cert, tol)
                errors += not report
                res.append(report.worst)
                kinds[cert.kind] = kinds.get(cert.kind, 0) + 1
            rows.append((cap, n, len(res), errors, np.median(res) if res else np.nan,
                         max(res, default=np.nan), kinds, time.perf_counter() - start))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dims", default="1..6")
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--caps", default="5,20,1e3", help="comma-separated condition caps")
    a = p.parse_args(argv)
    cfg = SweepConfig(tuple(parse_dims(a.dims)), tuple(float(c) for c in a.caps.split(",")), a.count, a.seed)
    print(f"{'cond':>7} {'n':>3} {'ok':>4} {'fail':>4} {'median':>10} {'worst':>10} {'secs':>6}  kinds")
    for cap, n, ok, fail, med, worst, kinds, secs in run(cfg):
        print(f"{cap:7.0e} {n:3d} {ok - fail:4d} {fail:4d} {med:10.2e} {worst:10.2e} {secs:6.2f}  {kinds}")


if __name__ == "__main__":
    main()
