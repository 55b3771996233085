"""Reproduce the headline detection-rate table.

Generates (or reuses) a benign training dataset, trains and calibrates the
detector, then measures false-alarm rates across clean campaigns and
missed-detection / attack-success rates under the ghost-peak attack:

    python3 scripts/detection_rates.py --out rates.csv
    python3 scripts/detection_rates.py --data cir.bin --model det.uwbae \\
        --trials 2000 --snr 5 10 20

Reruns with the same seed are bit-reproducible.
"""

import argparse
import csv
import os
import sys
import time
from dataclasses import replace

from uwbsec.attack import AttackConfig
from uwbsec.harness import (ExperimentConfig, calibrate_detector,
                            generate_dataset, load_config, run_campaign,
                            train_from_dataset)
from uwbsec.io import load_dataset, load_model, save_dataset, save_model


def build_bundle(args, cfg):
    if args.model and os.path.exists(args.model):
        model, cal, thr, _ = load_model(args.model)
        if cal is None:
            sys.exit(f"{args.model} has no calibration; rerun without --model "
                     "or calibrate it first")
        from uwbsec.harness import DetectorBundle
        return DetectorBundle(model, cal, thr)

    if args.data and os.path.exists(args.data):
        pairs, _ = load_dataset(args.data)
    else:
        print(f"generating {cfg.dataset.n_pairs} training pairs ...")
        pairs, _ = generate_dataset(cfg)
        if args.data:
            save_dataset(args.data, pairs)
    print(f"training {cfg.autoencoder.epochs} epochs ...")
    model, _ = train_from_dataset(cfg, pairs)
    bundle, info = calibrate_detector(cfg, model, pairs)
    print(f"calibrated: t_h={info['t_h']} threshold={info['threshold']}")
    if args.model:
        save_model(args.model, bundle.model, calibration=bundle.calibration,
                   threshold=bundle.threshold)
    return bundle


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="JSON config file (defaults otherwise)")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--snr", type=float, nargs="+", default=[5.0, 10.0, 20.0],
                    help="clean-campaign SNR points (dB)")
    ap.add_argument("--data", help="dataset file to reuse or create")
    ap.add_argument("--model", help="model file to reuse or create")
    ap.add_argument("--out", help="write the table as CSV")
    args = ap.parse_args(argv)

    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = replace(cfg, scenario=replace(cfg.scenario, trials=args.trials,
                                        master_seed=args.seed))
    bundle = build_bundle(args, cfg)

    rows = []
    for snr in args.snr:
        t0 = time.time()
        res = run_campaign(replace(cfg, scenario=replace(cfg.scenario,
                                                         snr_db=snr)), bundle)
        rows.append(("clean", snr, res.metrics["p_false_alarm"], None, None))
        print(f"clean  snr={snr:5.1f}  p_fa={rows[-1][2]:.4f}  "
              f"({time.time()-t0:.0f}s)")
    t0 = time.time()
    res = run_campaign(replace(cfg, attack=AttackConfig(enabled=True)), bundle)
    rows.append(("attacked", cfg.scenario.snr_db,
                 None, res.metrics["p_missed_detection"],
                 res.metrics["p_attack_success"]))
    print(f"attack snr={cfg.scenario.snr_db:5.1f}  "
          f"p_m={rows[-1][3]:.4f}  p_s={rows[-1][4]:.4f}  "
          f"({time.time()-t0:.0f}s)")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["campaign", "snr_db", "p_fa", "p_m", "p_s"])
            w.writerows(rows)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
