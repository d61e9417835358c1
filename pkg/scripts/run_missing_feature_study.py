#!/usr/bin/env python3
"""Missing-feature comparison: coordinate-fed networks vs feature baselines."""

import argparse
from pathlib import Path

import numpy as np

from trajteach.experiments import run_study, write_study_outputs
from trajteach.studies import missing_feature_config


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=15)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", type=Path, default=Path("out/missing_feature"))
    args = parser.parse_args()

    finals = {}
    for method in ("ours", "coactive", "linear_bayes"):
        cfg = missing_feature_config(method, seeds=args.seeds)
        rows = run_study(cfg, workers=args.workers)
        write_study_outputs(rows, args.out / method)
        last = max(r["interaction"] for r in rows)
        finals[method] = np.array(
            [r["regret"] for r in rows if r["interaction"] == last]
        )
        print(
            f"{method}: mean final regret {finals[method].mean():.4f} "
            f"(se {finals[method].std(ddof=1) / np.sqrt(args.seeds):.4f})"
        )
    for baseline in ("coactive", "linear_bayes"):
        print(
            f"ours vs {baseline}: "
            f"{finals[baseline].mean() - finals['ours'].mean():.4f} in our favor"
        )


if __name__ == "__main__":
    main()
