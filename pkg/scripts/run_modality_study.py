#!/usr/bin/env python3
"""Modality ablation: D vs DC vs DCP on the 2D tasks, final-regret means."""

import argparse
from pathlib import Path

import numpy as np

from trajteach.experiments import run_study, write_study_outputs
from trajteach.studies import (
    MODALITY_ARMS,
    final_regrets,
    modality_config,
    pooled_standard_error,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=18)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", type=Path, default=Path("out/modality"))
    parser.add_argument(
        "--envs", nargs="+", default=["table2d", "laptop2d"], help="2D environments"
    )
    args = parser.parse_args()

    finals = {}
    for arm in MODALITY_ARMS:
        pooled = []
        for env in args.envs:
            cfg = modality_config(env, arm, seeds=args.seeds)
            rows = run_study(cfg, workers=args.workers)
            write_study_outputs(rows, args.out / f"{env}_{arm}")
            last = max(r["interaction"] for r in rows)
            pooled.extend(
                r["regret"] for r in rows if r["interaction"] == last
            )
            print(f"{env} {arm}: wrote {args.out / f'{env}_{arm}'}")
        finals[arm] = np.array(pooled)

    print()
    for arm, vals in finals.items():
        print(
            f"{arm:>4}: mean final regret {vals.mean():.4f} "
            f"(se {vals.std(ddof=1) / np.sqrt(vals.size):.4f}, n={vals.size})"
        )
    for better in ("DCP", "DC"):
        gap = finals["D"].mean() - finals[better].mean()
        se = pooled_standard_error(finals["D"], finals[better])
        print(f"D - {better}: {gap:.4f}  ({gap / se:.2f} pooled SE)")


if __name__ == "__main__":
    main()
