"""Command-line front end: dataset generation, training, calibration, runs, sweeps.

Exit codes: 0 on success, 2 for configuration problems, 3 for data problems
(unreadable or malformed model/dataset files, unwritable outputs).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .autoencoder import complexity
from .errors import ConfigError, DataError
from .harness import (DetectorBundle, ExperimentConfig, calibrate_detector,
                      generate_dataset, load_config, run_campaign, run_sweep,
                      train_from_dataset, write_round_csv, write_sweep_csv)
from .io import load_dataset, load_model, save_dataset, save_model


def _say(msg: str) -> None:
    print(msg)


def _progress(label: str):
    def cb(done: int, total: int) -> None:
        print(f"  [{label}] {done}/{total}", file=sys.stderr)
    return cb


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(
            cfg, scenario=dataclasses.replace(cfg.scenario, master_seed=args.seed))
    if getattr(args, "trials", None) is not None:
        cfg = dataclasses.replace(
            cfg, scenario=dataclasses.replace(cfg.scenario, trials=args.trials))
    return cfg


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise ConfigError(f"--{name.replace('_', '-')} is required for this command")


def _load_bundle(args, cfg: ExperimentConfig) -> DetectorBundle | None:
    if not cfg.detector.enabled:
        return None
    _require(args, "model")
    model, cal, thr, _meta = load_model(args.model)
    if cal is None or thr is None:
        raise DataError(f"{args.model} has no detector calibration; "
                        "run the calibrate command first")
    return DetectorBundle(model, cal, thr)


def cmd_gen_data(args) -> int:
    cfg = _load_cfg(args)
    _require(args, "out")
    n = args.trials if args.trials is not None else None  # --trials = pair count here
    pairs, meta = generate_dataset(cfg, n_pairs=n, master_seed=args.seed,
                                   progress=_progress("gen-data"))
    save_dataset(args.out, pairs, meta)
    _say(f"wrote {pairs.shape[0]} estimate pairs ({pairs.shape[2]} taps each) to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    _require(args, "data", "model")
    pairs, dmeta = load_dataset(args.data)
    model, info = train_from_dataset(cfg, pairs)
    save_model(args.model, model, meta={"training": info,
                                        "dataset": {k: dmeta.get(k) for k in
                                                    ("n_pairs", "snr_range_db", "master_seed")
                                                    if k in dmeta}})
    _say(f"trained {len(model.layer_dims) - 1}-layer model on {info['n_training_rows']} rows; "
         f"test loss {info['initial_test_loss']:.6f} -> {info['final_test_loss']:.6f}")
    _say(f"saved model to {args.model}")
    return 0


def cmd_calibrate(args) -> int:
    cfg = _load_cfg(args)
    _require(args, "data", "model")
    model, _cal, _thr, meta = load_model(args.model)
    pairs, _dmeta = load_dataset(args.data)
    bundle, info = calibrate_detector(cfg, model, pairs)
    out_path = args.out if args.out else args.model
    keep = {k: v for k, v in meta.items()
            if k in ("training", "dataset")}
    keep["calibration"] = info
    save_model(out_path, model, bundle.calibration, bundle.threshold, meta=keep)
    _say(f"calibrated quantizer ({info['q_bits']} bits/dim) and threshold: "
         f"t_h={info['t_h']} T={info['threshold']} "
         f"from {info['n_threshold_pairs']} held-out pairs")
    _say(f"saved calibrated model to {out_path}")
    return 0


def cmd_run(args) -> int:
    cfg = _load_cfg(args)
    bundle = _load_bundle(args, cfg)
    result = run_campaign(cfg, bundle, progress=_progress("run"))
    m = result.metrics

    def fmt(v):
        return "null" if v is None else (f"{v:.4f}" if isinstance(v, float) else str(v))

    _say(f"rounds:            {m['n_rounds']} ({m['n_invalid']} invalid)")
    _say(f"attacked rounds:   {m['n_attacked']}")
    _say(f"p_false_alarm:     {fmt(m['p_false_alarm'])}")
    _say(f"p_missed_detection:{fmt(m['p_missed_detection'])}")
    _say(f"p_attack_success:  {fmt(m['p_attack_success'])}")
    _say(f"mean_abs_error_m:  {fmt(m['mean_abs_error_m'])}")
    if args.out:
        write_round_csv(args.out, cfg, result)
        _say(f"wrote per-round records to {args.out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    if cfg.sweep is None:
        raise ConfigError("the config needs a 'sweep' section "
                          '(e.g. {"parameter": "q_bits", "values": [1, 2, 4, 8]})')
    bundle = _load_bundle(args, cfg)
    if bundle is None:
        raise ConfigError("sweeps need the detector enabled and a calibrated model")
    dataset_pairs = None
    if args.data:
        dataset_pairs, _ = load_dataset(args.data)
    rows = run_sweep(cfg, bundle, dataset_pairs, progress=_progress("sweep"))
    _say("value,p_fa,p_m,p_s,n")
    for row in rows:
        def cell(v):
            return "null" if v is None else (repr(v) if isinstance(v, float) else str(v))
        _say(",".join(cell(v) for v in (row.value, row.p_false_alarm,
                                        row.p_missed_detection, row.p_attack_success,
                                        row.n_rounds)))
    if args.out:
        write_sweep_csv(args.out, cfg, rows)
        _say(f"wrote sweep table to {args.out}")
    return 0


def cmd_inspect_model(args) -> int:
    _require(args, "model")
    model, cal, thr, meta = load_model(args.model)
    flops, params = complexity(model)
    _say(f"layer dims:     {list(model.layer_dims)}")
    _say(f"latent:         {model.latent_dim} (layer index {model.latent_index})")
    _say(f"parameters:     {params}")
    _say(f"flops/forward:  {flops}")
    if cal is None:
        _say("calibration:    none")
    else:
        _say(f"calibration:    {cal.q} bits/dim over {cal.dim} dims "
             f"(fingerprint {cal.dim * cal.q} bits)")
        _say(f"threshold:      T={thr.threshold} (alpha_t={thr.alpha_t}, "
             f"t_h={thr.t_h}, statistic={thr.statistic})")
    if meta:
        training = meta.get("training")
        if training:
            _say(f"training:       {training}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uwbsec",
        description="Secure-ranging simulator: channel-reciprocity attack detection "
                    "with an in-band autoencoder fingerprint exchange.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--trials", type=int,
                       help="override the round count (pair count for gen-data)")
        p.add_argument("--out", help="output file (CSV for run/sweep)")
        p.add_argument("--model", help="model file")
        p.add_argument("--data", help="dataset file")
        p.set_defaults(func=func)
        return p

    add("gen-data", cmd_gen_data, "simulate benign rounds and save paired estimates")
    add("train", cmd_train, "train the autoencoder on a dataset")
    add("calibrate", cmd_calibrate, "fit quantizer bounds and the alarm threshold")
    add("run", cmd_run, "run a measurement campaign and report metrics")
    add("sweep", cmd_sweep, "evaluate metrics across a parameter sweep")
    add("inspect-model", cmd_inspect_model, "print a saved model's structure")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
