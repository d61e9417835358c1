#!/usr/bin/env python3
"""Active vs passive preference collection on the 3D bowl/ball scene."""

import argparse
from pathlib import Path

import numpy as np

from trajteach.experiments import run_study, write_study_outputs
from trajteach.studies import active_passive_config, pooled_standard_error


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=50)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", type=Path, default=Path("out/active_passive"))
    args = parser.parse_args()

    finals = {}
    for mode in ("active", "passive"):
        cfg = active_passive_config(mode, seeds=args.seeds)
        rows = run_study(cfg, workers=args.workers)
        write_study_outputs(rows, args.out / mode)
        last = max(r["interaction"] for r in rows)
        finals[mode] = np.array(
            [r["regret"] for r in rows if r["interaction"] == last]
        )
        print(
            f"{mode}: mean final regret {finals[mode].mean():.4f} "
            f"(se {finals[mode].std(ddof=1) / np.sqrt(args.seeds):.4f})"
        )
    gap = finals["passive"].mean() - finals["active"].mean()
    se = pooled_standard_error(finals["active"], finals["passive"])
    print(f"passive - active: {gap:.4f}  ({gap / se:.2f} pooled SE)")


if __name__ == "__main__":
    main()
