"""Run all three experiments and write their outputs under one directory."""

import argparse
import time
from pathlib import Path

from subband_wiener.experiments import ExperimentConfig, reproduce


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--include-transient", action="store_true")
    args = ap.parse_args()

    for k in (1, 2, 3):
        t0 = time.perf_counter()
        cfg = ExperimentConfig(k, seed=args.seed, runs=args.runs, workers=args.workers,
                               samples=10_000 if k == 3 else 4000,
                               include_transient=args.include_transient)
        res = reproduce(cfg)
        res.write(Path(args.out) / f"experiment{k}")
        print(res.summary())
        print(f"-- experiment {k} done in {time.perf_counter() - t0:.1f}s\n")


if __name__ == "__main__":
    main()
