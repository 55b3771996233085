"""Sweep quantizer depth and threshold coefficient; write one CSV per sweep.

python3 scripts/trend_sweeps.py --data cir.bin --model det.uwbae --out-dir out/
"""

import argparse
import os
import sys
from dataclasses import replace

from uwbsec.harness import (ExperimentConfig, SweepSection, load_config,
                            run_sweep, write_sweep_csv)
from uwbsec.io import load_dataset, load_model


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", required=True)
    ap.add_argument("--model", required=True)
    ap.add_argument("--config", help="JSON config file (defaults otherwise)")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--out-dir", default=".")
    args = ap.parse_args(argv)

    model, cal, thr, _ = load_model(args.model)
    if cal is None:
        sys.exit("model has no calibration")
    from uwbsec.harness import DetectorBundle
    bundle = DetectorBundle(model, cal, thr)
    pairs, _ = load_dataset(args.data)

    base = load_config(args.config) if args.config else ExperimentConfig()
    base = replace(base, scenario=replace(base.scenario, trials=args.trials,
                                          master_seed=args.seed))
    os.makedirs(args.out_dir, exist_ok=True)
    for parameter, values in (("q_bits", (1, 2, 4)),
                              ("alpha_t", (0.3, 0.5, 0.7))):
        cfg = replace(base, sweep=SweepSection(parameter, values))
        rows = run_sweep(cfg, bundle, dataset_pairs=pairs)
        path = os.path.join(args.out_dir, f"sweep_{parameter}.csv")
        write_sweep_csv(path, cfg, rows)
        print(f"{parameter}: " + "  ".join(
            f"{r.value:g}: fa={r.p_false_alarm:.4f}"
            f" pm={r.p_missed_detection:.4f}" for r in rows))
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
