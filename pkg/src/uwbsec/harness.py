"""Experiment harness: configs, round simulation, campaigns, datasets, sweeps.

One ranging round plays out three messages (poll, response, final) over a
reciprocal channel on a shared drift-free clock.  Each receiver estimates the
channel from the timestamp-sequence field, takes its first-path timestamp,
and, when the detector is on, exchanges a quantized latent fingerprint of the
estimate in-band.  The initiator compares fingerprints after the response and
suspends the round on a mismatch; an optional responder-side check re-runs
the comparison after the final message.

All randomness is drawn from counter-based streams keyed by
(master_seed, trial, purpose), so campaigns are reproducible and two
campaigns that differ only in detector settings see identical physics.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .attack import AttackConfig, forge_sts_waveform, inject
from .autoencoder import (DEFAULT_LAYER_DIMS, MlpModel, TrainConfig, encode,
                          init_model, train)
from .channel import (ChannelModelParams, LinkBudget, NOISE_REF_POWER,
                      draw_realization, propagate, reciprocal_pair)
from .detector import (Decision, QuantizerCalibration, SUPPORTED_BITS,
                       ThresholdSpec, calibrate_quantizer, calibrate_threshold,
                       decide, hamming, pack_bits, quantize, unpack_bits)
from .errors import ConfigError, DataError, NoSignalError
from .frames import FrameConfig, build_frame, sts_template
from .ranging import (DEFAULT_CIR_WINDOW, EdgeParams, RoundTimes,
                      ds_twr_distance, estimate_cir, first_path_sample)

# rng stream purposes; dataset generation uses its own block so a dataset and
# a campaign sharing a master seed never share noise
_P_CHANNEL = 0
_P_NOISE_POLL = 1
_P_NOISE_RESP = 2
_P_NOISE_FINAL = 3
_P_ATTACK = 4
_P_STS_SEED = 5
_P_DATA_CHANNEL = 16
_P_DATA_NOISE_FWD = 17
_P_DATA_NOISE_REV = 18
_P_DATA_STS_SEED = 19
_P_DATA_SNR = 20

HIST_EDGES = np.arange(-40.0, 10.5, 0.5)  # ranging-error histogram bins, metres


def rng_stream(master_seed: int, trial: int, purpose: int) -> np.random.Generator:
    """Counter-based stream keyed by (master seed, trial, purpose)."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial, purpose))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ScenarioSection:
    true_distance_m: float = 10.0
    snr_db: float = 10.0
    trials: int = 1000
    master_seed: int = 1
    reply_time_s: float = 1e-3
    success_distance_m: float = 5.0
    cir_window: int = DEFAULT_CIR_WINDOW

    def __post_init__(self) -> None:
        if self.true_distance_m <= 0:
            raise ConfigError("true_distance_m must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.reply_time_s <= 0:
            raise ConfigError("reply_time_s must be positive")
        if not (0 < self.success_distance_m < self.true_distance_m):
            raise ConfigError("success_distance_m must be in (0, true_distance_m)")
        if self.cir_window < 2:
            raise ConfigError("cir_window must be >= 2")


@dataclass(frozen=True)
class DetectorSection:
    enabled: bool = True
    q_bits: int = 4
    alpha_t: float = 0.5
    statistic: str = "max"
    responder_check: bool = False

    def __post_init__(self) -> None:
        if self.q_bits not in SUPPORTED_BITS:
            raise ConfigError(f"q_bits must be one of {SUPPORTED_BITS}")
        if self.alpha_t <= 0:
            raise ConfigError("alpha_t must be positive")


@dataclass(frozen=True)
class DatasetSection:
    n_pairs: int = 20000
    snr_range_db: tuple[float, float] = (5.0, 20.0)

    def __post_init__(self) -> None:
        if self.n_pairs < 1:
            raise ConfigError("n_pairs must be >= 1")
        lo, hi = self.snr_range_db
        if hi < lo:
            raise ConfigError("snr_range_db must be (lo, hi) with hi >= lo")


@dataclass(frozen=True)
class AutoencoderSection:
    layer_dims: tuple[int, ...] = DEFAULT_LAYER_DIMS
    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 1e-3
    split_ratio: float = 0.9
    shuffle_seed: int = 0
    init_seed: int = 7

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate,
                           split_ratio=self.split_ratio,
                           shuffle_seed=self.shuffle_seed)


@dataclass(frozen=True)
class SweepSection:
    parameter: str = "q_bits"
    values: tuple = ()

    def __post_init__(self) -> None:
        if self.parameter not in SWEEPABLE_PARAMETERS:
            raise ConfigError(f"parameter must be one of {sorted(SWEEPABLE_PARAMETERS)}")
        if len(self.values) == 0:
            raise ConfigError("sweep needs at least one value")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    frame: FrameConfig = field(default_factory=FrameConfig)
    channel: ChannelModelParams = field(default_factory=ChannelModelParams)
    attack: AttackConfig = field(default_factory=AttackConfig)
    edge: EdgeParams = field(default_factory=EdgeParams)
    detector: DetectorSection = field(default_factory=DetectorSection)
    dataset: DatasetSection = field(default_factory=DatasetSection)
    autoencoder: AutoencoderSection = field(default_factory=AutoencoderSection)
    sweep: SweepSection | None = None

    def __post_init__(self) -> None:
        if self.scenario.cir_window <= self.edge.btw_samples:
            raise ConfigError("cir_window must exceed edge.btw_samples")


_SECTION_TYPES = {
    "scenario": ScenarioSection,
    "frame": FrameConfig,
    "channel": ChannelModelParams,
    "attack": AttackConfig,
    "edge": EdgeParams,
    "detector": DetectorSection,
    "dataset": DatasetSection,
    "autoencoder": AutoencoderSection,
    "sweep": SweepSection,
}

_TUPLE_FIELDS = {"advance_range", "snr_range_db", "layer_dims", "values"}


def _build_section(cls, payload: dict, name: str):
    if not isinstance(payload, dict):
        raise ConfigError(f"section '{name}' must be an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(payload) - set(fields)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{name}': {sorted(unknown)}")
    kwargs = {}
    for key, value in payload.items():
        if key in _TUPLE_FIELDS and isinstance(value, list):
            value = tuple(value)
        # config_to_dict writes infinities as strings; accept them back
        if (isinstance(value, str) and value in ("inf", "-inf")
                and fields[key].type == "float"):
            value = float(value)
        if key == "sts_seed" and isinstance(value, str):
            try:
                value = bytes.fromhex(value)
            except ValueError as exc:
                raise ConfigError(f"frame.sts_seed must be hex: {exc}") from exc
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad section '{name}': {exc}") from exc


def config_from_dict(payload: dict) -> ExperimentConfig:
    """Build a full config from parsed JSON; unknown keys are errors."""
    if not isinstance(payload, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(payload) - set(_SECTION_TYPES)
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTION_TYPES.items():
        if payload.get(name) is not None:  # null section = defaults
            kwargs[name] = _build_section(cls, payload[name], name)
    return ExperimentConfig(**kwargs)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(payload)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """JSON-safe snapshot of a config (bytes become hex strings)."""
    def clean(obj):
        if isinstance(obj, bytes):
            return obj.hex()
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, float) and math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    return clean(dataclasses.asdict(cfg))


class RoundOutcome(enum.Enum):
    NORMAL = "normal"  # completed, no alarm
    SUSPENDED = "suspended"  # initiator alarm after the response; no distance
    ATTACKED = "attacked"  # responder alarm after the final; distance discarded


@dataclass
class RoundRecord:
    trial: int
    attacked: bool
    outcome: RoundOutcome
    hamming_distance: int | None = None
    measured_distance_m: float | None = None
    error_m: float | None = None
    times: RoundTimes | None = None
    attack_advance: int | None = None
    invalid: bool = False
    features: tuple[np.ndarray, np.ndarray] | None = None  # (f_IR, f_RI) when collected

    @property
    def detected(self) -> bool:
        return self.outcome is not RoundOutcome.NORMAL


@dataclass
class DetectorBundle:
    """Everything the in-band check needs at run time."""

    model: MlpModel
    calibration: QuantizerCalibration
    threshold: ThresholdSpec


def _legit_sts_power(cfg: ExperimentConfig, rx: np.ndarray, n0: int,
                     sts_start: int, sts_len: int) -> float:
    if math.isinf(cfg.scenario.snr_db):
        region = rx[n0 + sts_start: n0 + sts_start + sts_len]
        return float(np.mean(np.abs(region) ** 2))
    return 10.0 ** (cfg.scenario.snr_db / 10.0) * NOISE_REF_POWER


def run_round(cfg: ExperimentConfig, trial: int,
              bundle: DetectorBundle | None = None,
              collect_features: bool = False) -> RoundRecord:
    """Simulate one full two-way ranging round; see the module docstring."""
    scen = cfg.scenario
    seed = scen.master_seed
    fs = cfg.frame.sample_rate_hz
    detector_on = cfg.detector.enabled and bundle is not None

    realization = draw_realization(cfg.channel, scen.true_distance_m,
                                   rng_stream(seed, trial, _P_CHANNEL))
    fwd, rev = reciprocal_pair(realization)
    sts_seed = rng_stream(seed, trial, _P_STS_SEED).bytes(16)
    fcfg = replace(cfg.frame, sts_seed=sts_seed)
    template = sts_template(fcfg)
    wave, layout = build_frame(fcfg)
    span = (layout.sts_start, layout.sts_length_samples)
    budget = LinkBudget(scen.snr_db)
    n0 = int(round(realization.los_delay_s * fs))
    reply_samples = int(round(scen.reply_time_s * fs))
    attack_rng = rng_stream(seed, trial, _P_ATTACK)
    record = RoundRecord(trial=trial, attacked=cfg.attack.enabled,
                         outcome=RoundOutcome.NORMAL)

    def receive(direction, noise_purpose: int, attack_this: bool):
        rx = propagate(wave, direction, budget, rng_stream(seed, trial, noise_purpose),
                       sts_span=span)
        if attack_this:
            p_legit = _legit_sts_power(cfg, rx.samples, n0, *span)
            forged = forge_sts_waveform(cfg.attack, fcfg, p_legit, attack_rng)
            rx, trace = inject(rx, forged, n0 + layout.sts_start, cfg.attack, attack_rng)
            record.attack_advance = trace.advance_used
        return first_path_sample(rx, template, layout, cfg.edge, scen.cir_window)

    try:
        attack_on = cfg.attack.enabled
        # poll: initiator -> responder, transmitted at time 0
        est_ir, arrival_poll = receive(fwd, _P_NOISE_POLL, False)
        poll_rx_r = arrival_poll

        # response: responder -> initiator
        est_ri, arrival_resp = receive(rev, _P_NOISE_RESP,
                                       attack_on and cfg.attack.target_message == "response")
        resp_tx_r = poll_rx_r + reply_samples
        resp_rx_i = resp_tx_r + arrival_resp
    except NoSignalError:
        record.invalid = True
        return record

    if detector_on:
        f_ir = encode(bundle.model, est_ir.taps)
        f_ri = encode(bundle.model, est_ri.taps)
        if collect_features:
            record.features = (np.asarray(f_ir, dtype=np.float32),
                               np.asarray(f_ri, dtype=np.float32))
        q_ir = quantize(f_ir, bundle.calibration)
        q_ri = quantize(f_ri, bundle.calibration)
        # the responder's fingerprint rides in the response payload
        wire = pack_bits(q_ir)
        q_ir_rx = unpack_bits(wire, len(q_ir.bits), q_ir.q)
        d = hamming(q_ir_rx, q_ri)
        record.hamming_distance = d
        if decide(d, bundle.threshold) is Decision.ATTACKED:
            record.outcome = RoundOutcome.SUSPENDED
            return record
    elif collect_features and bundle is not None:
        record.features = (np.asarray(encode(bundle.model, est_ir.taps), dtype=np.float32),
                           np.asarray(encode(bundle.model, est_ri.taps), dtype=np.float32))

    # final: initiator -> responder
    try:
        est_fin, arrival_final = receive(fwd, _P_NOISE_FINAL,
                                         attack_on and cfg.attack.target_message == "final")
    except NoSignalError:
        record.invalid = True
        return record
    final_tx_i = resp_rx_i + reply_samples
    final_rx_r = final_tx_i + arrival_final

    times = RoundTimes(t_round1=(resp_rx_i - 0) / fs,
                       t_reply1=reply_samples / fs,
                       t_round2=(final_rx_r - resp_tx_r) / fs,
                       t_reply2=reply_samples / fs)
    record.times = times
    record.measured_distance_m = ds_twr_distance(times)
    record.error_m = record.measured_distance_m - scen.true_distance_m

    if record.features is not None and not detector_on:
        # append the final-message fingerprint so stored rounds can be
        # re-scored offline with the same two checks a live round applies
        f_fin = encode(bundle.model, est_fin.taps)
        record.features = record.features + (np.asarray(f_fin, dtype=np.float32),)

    if detector_on and cfg.detector.responder_check:
        # responder re-estimates from the final and checks it against the
        # initiator fingerprint carried in the final payload; this is what
        # catches an attack on the final message
        f_fin = encode(bundle.model, est_fin.taps)
        if record.features is not None:
            record.features = record.features + (np.asarray(f_fin, dtype=np.float32),)
        q_fin = quantize(f_fin, bundle.calibration)
        wire_back = pack_bits(q_ri)
        q_ri_rx = unpack_bits(wire_back, len(q_ri.bits), q_ri.q)
        if decide(hamming(q_fin, q_ri_rx), bundle.threshold) is Decision.ATTACKED:
            record.outcome = RoundOutcome.ATTACKED
    return record


@dataclass
class CampaignResult:
    records: list
    metrics: dict
    hist_counts: np.ndarray
    hist_edges: np.ndarray

    @property
    def n_rounds(self) -> int:
        return len(self.records)


def summarize(records: list, success_distance_m: float) -> tuple[dict, np.ndarray]:
    """Aggregate round records into the standard metric dict and histogram."""
    valid = [r for r in records if not r.invalid]
    h0 = [r for r in valid if not r.attacked]
    h1 = [r for r in valid if r.attacked]
    # a flagged round halts ranging and reports no distance, so only
    # accepted rounds feed the error statistics and the histogram
    accepted = [r for r in valid
                if r.measured_distance_m is not None and not r.detected]

    def frac(part, whole):
        return len(part) / len(whole) if whole else None

    metrics = {
        "n_rounds": len(records),
        "n_invalid": len(records) - len(valid),
        "n_clean": len(h0),
        "n_attacked": len(h1),
        "p_false_alarm": frac([r for r in h0 if r.detected], h0),
        "p_missed_detection": frac([r for r in h1 if not r.detected], h1),
        "p_attack_success": frac(
            [r for r in h1 if not r.detected and r.measured_distance_m is not None
             and r.measured_distance_m < success_distance_m], h1),
        "mean_abs_error_m": (float(np.mean([abs(r.error_m) for r in h0
                                            if r.error_m is not None
                                            and not r.detected]))
                             if any(r.error_m is not None and not r.detected
                                    for r in h0) else None),
    }
    errors = [r.error_m for r in accepted if r.error_m is not None]
    counts, _ = np.histogram(np.clip(errors, HIST_EDGES[0], HIST_EDGES[-1] - 1e-9),
                             bins=HIST_EDGES) if errors else (np.zeros(len(HIST_EDGES) - 1,
                                                                       dtype=np.int64), None)
    return metrics, counts.astype(np.int64)


def run_campaign(cfg: ExperimentConfig, bundle: DetectorBundle | None = None,
                 collect_features: bool = False,
                 progress=None) -> CampaignResult:
    """Run scenario.trials independent rounds and aggregate the metrics."""
    if cfg.detector.enabled and bundle is None:
        raise ConfigError("detector is enabled but no model bundle was provided")
    if bundle is not None and bundle.model.input_dim != cfg.scenario.cir_window:
        raise ConfigError(f"model expects {bundle.model.input_dim} taps but "
                          f"cir_window is {cfg.scenario.cir_window}")
    records = []
    for trial in range(cfg.scenario.trials):
        records.append(run_round(cfg, trial, bundle, collect_features))
        if progress is not None and (trial + 1) % 100 == 0:
            progress(trial + 1, cfg.scenario.trials)
    metrics, hist = summarize(records, cfg.scenario.success_distance_m)
    return CampaignResult(records, metrics, hist, HIST_EDGES.copy())


def generate_dataset(cfg: ExperimentConfig, n_pairs: int | None = None,
                     master_seed: int | None = None,
                     progress=None) -> tuple[np.ndarray, dict]:
    """Benign paired channel estimates for training and calibration.

    Each pair is one attack-free round's two estimate windows (initiator side,
    responder side) at an SNR drawn uniformly from dataset.snr_range_db.
    Refuses to run with the attack enabled: training data must stay clean.
    """
    if cfg.attack.enabled:
        raise ConfigError("refusing to generate training data with the attack enabled; "
                          "disable it in the attack section first")
    n = cfg.dataset.n_pairs if n_pairs is None else int(n_pairs)
    if n < 1:
        raise ConfigError("need at least one pair")
    seed = cfg.scenario.master_seed if master_seed is None else int(master_seed)
    scen = cfg.scenario
    lo, hi = cfg.dataset.snr_range_db
    window = scen.cir_window
    btw = cfg.edge.btw_samples

    pairs = np.empty((n, 2, window), dtype=np.float32)
    snrs = np.empty(n, dtype=np.float64)
    for i in range(n):
        snr = lo if hi == lo else float(
            rng_stream(seed, i, _P_DATA_SNR).uniform(lo, hi))
        snrs[i] = snr
        realization = draw_realization(cfg.channel, scen.true_distance_m,
                                       rng_stream(seed, i, _P_DATA_CHANNEL))
        fwd, rev = reciprocal_pair(realization)
        sts_seed = rng_stream(seed, i, _P_DATA_STS_SEED).bytes(16)
        fcfg = replace(cfg.frame, sts_seed=sts_seed)
        template = sts_template(fcfg)
        wave, layout = build_frame(fcfg)
        span = (layout.sts_start, layout.sts_length_samples)
        budget = LinkBudget(snr)
        rx_f = propagate(wave, fwd, budget, rng_stream(seed, i, _P_DATA_NOISE_FWD),
                         sts_span=span)
        rx_r = propagate(wave, rev, budget, rng_stream(seed, i, _P_DATA_NOISE_REV),
                         sts_span=span)
        pairs[i, 0] = estimate_cir(rx_f, template, window, btw).taps
        pairs[i, 1] = estimate_cir(rx_r, template, window, btw).taps
        if progress is not None and (i + 1) % 200 == 0:
            progress(i + 1, n)
    meta = {
        "n_pairs": n,
        "dim": window,
        "snr_range_db": [lo, hi],
        "snr_mean_db": float(np.mean(snrs)),
        "true_distance_m": scen.true_distance_m,
        "master_seed": seed,
        "split_ratio": cfg.autoencoder.split_ratio,
        "btw_samples": btw,
    }
    return pairs, meta


def train_from_dataset(cfg: ExperimentConfig, pairs: np.ndarray
                       ) -> tuple[MlpModel, dict]:
    """Initialize and train the autoencoder on flattened benign estimates."""
    window = pairs.shape[2]
    dims = cfg.autoencoder.layer_dims
    if dims[0] != window:
        raise ConfigError(f"layer_dims[0]={dims[0]} but dataset windows are {window} wide")
    n_train = int(pairs.shape[0] * cfg.autoencoder.split_ratio)
    if n_train < 1:
        raise DataError("dataset too small to split")
    flat = pairs[:n_train].reshape(-1, window)
    model = init_model(dims, np.random.default_rng(cfg.autoencoder.init_seed))
    trained, history = train(model, flat, cfg.autoencoder.train_config())
    info = {
        "n_training_rows": int(flat.shape[0]),
        "epochs": cfg.autoencoder.epochs,
        "initial_test_loss": history["initial_test_loss"],
        "final_test_loss": history["test_loss"][-1],
    }
    return trained, info


def calibrate_detector(cfg: ExperimentConfig, model: MlpModel, pairs: np.ndarray,
                       q_bits: int | None = None, alpha_t: float | None = None
                       ) -> tuple[DetectorBundle, dict]:
    """Quantizer bounds from the train split, threshold from the held-out split.

    The dataset is split in file order at autoencoder.split_ratio, matching
    the rows the model trained on.  Bounds see both directions of every
    training pair; the threshold statistic sees the held-out pairs' distances.
    """
    if model.input_dim != pairs.shape[2]:
        raise DataError(f"model expects {model.input_dim}-wide windows, "
                        f"dataset has {pairs.shape[2]}")
    q = cfg.detector.q_bits if q_bits is None else q_bits
    alpha = cfg.detector.alpha_t if alpha_t is None else alpha_t
    n = pairs.shape[0]
    n_train = int(n * cfg.autoencoder.split_ratio)
    if n_train < 1 or n - n_train < 1:
        raise DataError("dataset too small to split for calibration")

    train_features = encode(model, pairs[:n_train].reshape(-1, model.input_dim))
    cal = calibrate_quantizer(np.asarray(train_features), q)

    held = pairs[n_train:]
    f_ir = np.asarray(encode(model, held[:, 0, :]))
    f_ri = np.asarray(encode(model, held[:, 1, :]))
    distances = [hamming(quantize(f_ir[i], cal), quantize(f_ri[i], cal))
                 for i in range(held.shape[0])]
    spec = calibrate_threshold(distances, alpha, cfg.detector.statistic)
    info = {
        "n_bound_features": int(train_features.shape[0]),
        "n_threshold_pairs": len(distances),
        "t_h": spec.t_h,
        "threshold": spec.threshold,
        "q_bits": q,
        "alpha_t": alpha,
    }
    return DetectorBundle(model, cal, spec), info


SWEEPABLE_PARAMETERS = {"q_bits", "alpha_t", "snr_db", "sir_db", "true_distance_m"}


@dataclass
class SweepRow:
    value: float
    p_false_alarm: float | None
    p_missed_detection: float | None
    p_attack_success: float | None
    n_rounds: int


def _detector_rates(h0_records, h1_records, bundle_cal, spec, success_distance_m,
                    use_responder_check: bool = True):
    """Re-evaluate stored round features under a different quantizer/threshold.

    A live round flags when either the initiator check or the responder
    check trips, so the offline score is the larger of the two distances
    whenever the record carries the final-message fingerprint.
    """
    def dist(rec):
        feats = [quantize(np.asarray(f, dtype=np.float64), bundle_cal)
                 for f in rec.features]
        d = hamming(feats[0], feats[1])
        if use_responder_check and len(feats) == 3:
            d = max(d, hamming(feats[2], feats[1]))
        return d

    fa = miss = succ = 0
    n0 = n1 = 0
    for rec in h0_records:
        if rec.invalid or rec.features is None:
            continue
        n0 += 1
        if decide(dist(rec), spec) is Decision.ATTACKED:
            fa += 1
    for rec in h1_records:
        if rec.invalid or rec.features is None:
            continue
        n1 += 1
        if decide(dist(rec), spec) is Decision.ATTACKED:
            continue
        miss += 1
        if (rec.measured_distance_m is not None
                and rec.measured_distance_m < success_distance_m):
            succ += 1
    return (fa / n0 if n0 else None, miss / n1 if n1 else None,
            succ / n1 if n1 else None, n0 + n1)


def run_sweep(cfg: ExperimentConfig, bundle: DetectorBundle,
              dataset_pairs: np.ndarray | None = None,
              progress=None) -> list[SweepRow]:
    """Evaluate the configured sweep; every row reruns both hypotheses.

    Detector parameters (q_bits, alpha_t) are recalibrated from the dataset
    per value but share one set of simulated rounds, since quantization does
    not feed back into the physics.  Scenario parameters rerun the campaigns
    per value with the same master seed.
    """
    if cfg.sweep is None:
        raise ConfigError("config has no sweep section")
    param = cfg.sweep.parameter
    values = cfg.sweep.values
    base_attack_on = replace(cfg, attack=replace(cfg.attack, enabled=True))
    base_attack_off = replace(cfg, attack=replace(cfg.attack, enabled=False))

    rows: list[SweepRow] = []
    if param in ("q_bits", "alpha_t"):
        if dataset_pairs is None:
            raise ConfigError(f"sweeping {param} recalibrates the detector and "
                              "needs the calibration dataset (--data)")
        # physics is shared: simulate both hypotheses once, keep latent features;
        # detector off during collection so no round suspends (every record
        # keeps its measured distance for the per-value success rate)
        nodet = replace(cfg.detector, enabled=False)
        h0 = run_campaign(replace(base_attack_off, detector=nodet), bundle,
                          collect_features=True).records
        h1 = run_campaign(replace(base_attack_on, detector=nodet), bundle,
                          collect_features=True).records
        for idx, value in enumerate(values):
            if param == "q_bits":
                nb, _ = calibrate_detector(cfg, bundle.model, dataset_pairs,
                                           q_bits=int(value))
            else:
                nb, _ = calibrate_detector(cfg, bundle.model, dataset_pairs,
                                           alpha_t=float(value))
            fa, miss, succ, n = _detector_rates(h0, h1, nb.calibration, nb.threshold,
                                                cfg.scenario.success_distance_m,
                                                cfg.detector.responder_check)
            rows.append(SweepRow(float(value), fa, miss, succ, n))
            if progress is not None:
                progress(idx + 1, len(values))
        return rows

    for idx, value in enumerate(values):
        if param == "snr_db":
            on = replace(base_attack_on,
                         scenario=replace(cfg.scenario, snr_db=float(value)))
            off = replace(base_attack_off,
                          scenario=replace(cfg.scenario, snr_db=float(value)))
        elif param == "sir_db":
            on = replace(base_attack_on,
                         attack=replace(base_attack_on.attack, sir_db=float(value)))
            off = base_attack_off
        else:  # true_distance_m
            on = replace(base_attack_on,
                         scenario=replace(cfg.scenario, true_distance_m=float(value)))
            off = replace(base_attack_off,
                          scenario=replace(cfg.scenario, true_distance_m=float(value)))
        res_off = run_campaign(off, bundle)
        res_on = run_campaign(on, bundle)
        rows.append(SweepRow(float(value),
                             res_off.metrics["p_false_alarm"],
                             res_on.metrics["p_missed_detection"],
                             res_on.metrics["p_attack_success"],
                             res_off.n_rounds + res_on.n_rounds))
        if progress is not None:
            progress(idx + 1, len(values))
    return rows


def _csv_value(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _meta_line(cfg: ExperimentConfig, extra: dict) -> str:
    meta = {"tool_version": __version__, "config": config_to_dict(cfg)}
    meta.update(extra)
    return "# " + json.dumps(meta, sort_keys=True)


RECORD_COLUMNS = ("trial", "attacked", "outcome", "hamming_distance",
                  "measured_distance_m", "error_m", "attack_advance", "invalid")


def write_round_csv(path: str, cfg: ExperimentConfig, result: CampaignResult) -> None:
    """Per-round records with a JSON metadata header line.

    First line: '# ' + JSON (config snapshot + aggregate metrics).  Undefined
    values are the literal ``null``.  Reruns of the same config are
    byte-identical.
    """
    lines = [_meta_line(cfg, {"metrics": result.metrics}),
             ",".join(RECORD_COLUMNS)]
    for r in result.records:
        lines.append(",".join(_csv_value(v) for v in (
            r.trial, r.attacked, r.outcome.value, r.hamming_distance,
            r.measured_distance_m, r.error_m, r.attack_advance, r.invalid)))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_sweep_csv(path: str, cfg: ExperimentConfig, rows: list[SweepRow]) -> None:
    lines = [_meta_line(cfg, {"parameter": cfg.sweep.parameter if cfg.sweep else None}),
             "value,p_fa,p_m,p_s,n"]
    for row in rows:
        lines.append(",".join(_csv_value(v) for v in (
            row.value, row.p_false_alarm, row.p_missed_detection,
            row.p_attack_success, row.n_rounds)))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
