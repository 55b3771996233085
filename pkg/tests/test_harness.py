"""Config plumbing, round simulation, campaign aggregation, dataset rules."""

import json
import math

import numpy as np
import pytest

from uwbsec.autoencoder import init_model
from uwbsec.detector import QuantizerCalibration, ThresholdSpec, calibrate_quantizer
from uwbsec.errors import ConfigError
from uwbsec.frames import FrameConfig
from uwbsec.harness import (AutoencoderSection, DatasetSection, DetectorBundle,
                            DetectorSection, ExperimentConfig, HIST_EDGES,
                            RoundOutcome, RoundRecord, ScenarioSection,
                            config_from_dict, config_to_dict, generate_dataset,
                            rng_stream, run_campaign, run_round, summarize,
                            train_from_dataset, write_round_csv)
from uwbsec.harness import calibrate_detector
from uwbsec.ranging import EdgeParams

from dataclasses import replace


def micro_config(**kw):
    """Down-scaled frame so one round costs milliseconds, not seconds."""
    defaults = dict(
        scenario=ScenarioSection(trials=2, snr_db=float("inf"), cir_window=30),
        frame=FrameConfig(preamble_duration=8, sts_segment_length=16),
        edge=EdgeParams(btw_samples=10),
        detector=DetectorSection(enabled=False),
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


def micro_bundle(threshold: ThresholdSpec) -> DetectorBundle:
    model = init_model((30, 8, 30), np.random.default_rng(0))
    from uwbsec.autoencoder import encode
    features = encode(model, np.random.default_rng(1).random((50, 30)))
    with pytest.warns(UserWarning):
        cal = calibrate_quantizer(np.asarray(features), 2)
    return DetectorBundle(model, cal, threshold)


class TestConfigDict:
    def test_sections_fill_from_payload(self):
        cfg = config_from_dict({"scenario": {"trials": 5},
                                "dataset": {"snr_range_db": [3, 12]}})
        assert cfg.scenario.trials == 5
        assert cfg.scenario.true_distance_m == 10.0
        assert cfg.dataset.snr_range_db == (3, 12)

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="unknown config section"):
            config_from_dict({"scnario": {}})

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            config_from_dict({"scenario": {"trils": 3}})

    def test_sts_seed_hex_decoding(self):
        cfg = config_from_dict(
            {"frame": {"sts_seed": "00112233445566778899aabbccddeeff"}})
        assert cfg.frame.sts_seed == bytes.fromhex(
            "00112233445566778899aabbccddeeff")
        with pytest.raises(ConfigError, match="hex"):
            config_from_dict({"frame": {"sts_seed": "zz"}})

    def test_snapshot_reloads_exactly(self):
        cfg = ExperimentConfig(
            scenario=ScenarioSection(snr_db=float("inf"), trials=7),
            autoencoder=AutoencoderSection(layer_dims=(30, 4, 30)))
        payload = json.loads(json.dumps(config_to_dict(cfg)))
        back = config_from_dict(payload)
        assert back == cfg
        assert back.scenario.snr_db == math.inf
        assert isinstance(back.frame.sts_seed, bytes)

    def test_root_must_be_object(self):
        with pytest.raises(ConfigError):
            config_from_dict([1, 2])

    def test_window_must_cover_back_search(self):
        with pytest.raises(ConfigError, match="btw"):
            ExperimentConfig(scenario=ScenarioSection(cir_window=100),
                             edge=EdgeParams(btw_samples=400))


class TestRngStreams:
    def test_streams_reproduce_and_separate(self):
        base = rng_stream(1, 0, 0).random(8)
        assert np.array_equal(rng_stream(1, 0, 0).random(8), base)
        for other in (rng_stream(1, 0, 1), rng_stream(1, 1, 0), rng_stream(2, 0, 0)):
            assert not np.array_equal(other.random(8), base)


class TestRunRound:
    def test_noise_free_round_is_deterministic_and_close(self):
        records = []
        for seed in (1, 2, 3):
            cfg = ExperimentConfig(
                scenario=ScenarioSection(trials=1, snr_db=float("inf"),
                                         master_seed=seed))
            records.append(run_round(cfg, 0))
        for r in records:
            assert r.outcome is RoundOutcome.NORMAL
            assert not r.attacked and r.hamming_distance is None
            # leading-edge skirt bias plus grid rounding, identical every seed
            assert abs(r.error_m) < 0.45
        errors = {r.error_m for r in records}
        assert len(errors) == 1

    def test_round_repeats_bit_identically(self):
        cfg = micro_config()
        a, b = run_round(cfg, 0), run_round(cfg, 0)
        assert a.measured_distance_m == b.measured_distance_m
        assert a.error_m == b.error_m

    def test_attacked_round_records_advance(self):
        from uwbsec.attack import AttackConfig
        cfg = micro_config(attack=AttackConfig(enabled=True),
                           scenario=ScenarioSection(trials=1, snr_db=10.0,
                                                    cir_window=30))
        r = run_round(cfg, 0)
        assert r.attacked
        assert r.attack_advance is not None and r.attack_advance > 0


class TestRunCampaign:
    def test_enabled_detector_needs_bundle(self):
        cfg = micro_config(detector=DetectorSection(enabled=True))
        with pytest.raises(ConfigError, match="bundle"):
            run_campaign(cfg)

    def test_model_width_must_match_window(self):
        cfg = micro_config(detector=DetectorSection(enabled=True))
        bundle = DetectorBundle(init_model((12, 4, 12), np.random.default_rng(0)),
                                QuantizerCalibration(np.zeros(4), np.ones(4), 2),
                                ThresholdSpec(0.5, 4, 2))
        with pytest.raises(ConfigError, match="cir_window"):
            run_campaign(cfg, bundle)

    def test_detector_off_campaign_completes_all_rounds(self):
        res = run_campaign(micro_config())
        assert res.n_rounds == 2
        assert all(r.outcome is RoundOutcome.NORMAL for r in res.records)
        assert res.metrics["p_false_alarm"] == 0.0
        assert int(res.hist_counts.sum()) == 2
        again = run_campaign(micro_config())
        assert [r.error_m for r in again.records] == [r.error_m for r in res.records]

    def test_zero_threshold_suspends_every_round(self):
        cfg = micro_config(detector=DetectorSection(enabled=True))
        res = run_campaign(cfg, micro_bundle(ThresholdSpec(0.5, 0, 0)))
        assert all(r.outcome is RoundOutcome.SUSPENDED for r in res.records)
        assert all(r.measured_distance_m is None for r in res.records)
        assert res.metrics["p_false_alarm"] == 1.0
        assert res.metrics["mean_abs_error_m"] is None
        assert int(res.hist_counts.sum()) == 0

    def test_collected_features_ride_along(self):
        cfg = micro_config()  # detector disabled: rounds still complete
        res = run_campaign(cfg, micro_bundle(ThresholdSpec(0.5, 0, 0)),
                           collect_features=True)
        for r in res.records:
            f_ir, f_ri, f_fin = r.features  # all three message fingerprints
            assert f_ir.shape == (8,) and f_ri.shape == (8,)
            assert f_fin.shape == (8,)
            assert r.measured_distance_m is not None


def rec(trial, attacked, outcome, measured=None, error=None, invalid=False):
    return RoundRecord(trial=trial, attacked=attacked, outcome=outcome,
                       measured_distance_m=measured, error_m=error,
                       invalid=invalid)


class TestSummarize:
    def test_metric_identities(self):
        records = [
            rec(0, False, RoundOutcome.NORMAL, 10.1, 0.1),
            rec(1, False, RoundOutcome.SUSPENDED),
            rec(2, True, RoundOutcome.NORMAL, 3.0, -7.0),
            rec(3, True, RoundOutcome.SUSPENDED),
            rec(4, True, RoundOutcome.NORMAL, 8.0, -2.0),
            rec(5, True, RoundOutcome.NORMAL, invalid=True),
            # flagged late, after the distance was formed: ranging halts, so
            # the measurement must stay out of the histogram
            rec(6, True, RoundOutcome.ATTACKED, 2.0, -8.0),
        ]
        metrics, counts = summarize(records, success_distance_m=5.0)
        assert metrics["n_rounds"] == 7
        assert metrics["n_invalid"] == 1
        assert metrics["n_clean"] == 2 and metrics["n_attacked"] == 4
        assert metrics["p_false_alarm"] == pytest.approx(1 / 2)
        assert metrics["p_missed_detection"] == pytest.approx(2 / 4)
        assert metrics["p_attack_success"] == pytest.approx(1 / 4)
        assert metrics["mean_abs_error_m"] == pytest.approx(0.1)
        assert int(counts.sum()) == 3
        below_5m = int(counts[HIST_EDGES[:-1] < -5.0].sum())
        assert below_5m == 1

    def test_rates_are_none_without_their_population(self):
        metrics, _ = summarize([rec(0, False, RoundOutcome.NORMAL, 10.0, 0.0)], 5.0)
        assert metrics["p_missed_detection"] is None
        assert metrics["p_attack_success"] is None
        metrics, _ = summarize([], 5.0)
        assert metrics["p_false_alarm"] is None


class TestDataset:
    def small_cfg(self, **kw):
        return micro_config(
            dataset=DatasetSection(n_pairs=4, snr_range_db=(10.0, 10.0)),
            autoencoder=AutoencoderSection(layer_dims=(30, 4, 30), epochs=2,
                                           batch_size=4, split_ratio=0.5),
            **kw)

    def test_shape_and_reproducibility(self):
        cfg = self.small_cfg()
        pairs, meta = generate_dataset(cfg)
        assert pairs.shape == (4, 2, 30) and pairs.dtype == np.float32
        assert meta["n_pairs"] == 4 and meta["dim"] == 30
        assert meta["snr_mean_db"] == pytest.approx(10.0)
        pairs2, _ = generate_dataset(cfg)
        assert np.array_equal(pairs, pairs2)

    def test_refuses_attacked_generation(self):
        from uwbsec.attack import AttackConfig
        cfg = self.small_cfg(attack=AttackConfig(enabled=True))
        with pytest.raises(ConfigError, match="attack"):
            generate_dataset(cfg)

    def test_split_arithmetic_follows_ratio(self):
        cfg = self.small_cfg()
        rng = np.random.default_rng(3)
        pairs = rng.random((20, 2, 30), dtype=np.float32)
        model, info = train_from_dataset(
            replace(cfg, autoencoder=replace(cfg.autoencoder, split_ratio=0.9)),
            pairs)
        # 18 training pairs, both directions flattened
        assert info["n_training_rows"] == 36
        assert len(info) >= 3 and model.input_dim == 30

    def test_calibration_uses_held_out_pairs(self):
        cfg = self.small_cfg()
        pairs, _ = generate_dataset(cfg)
        model, _ = train_from_dataset(cfg, pairs)
        with pytest.warns(UserWarning):
            bundle, info = calibrate_detector(cfg, model, pairs)
        assert info["n_threshold_pairs"] == 2
        assert info["n_bound_features"] == 4
        assert bundle.threshold.t_h == info["t_h"]

    def test_wrong_window_width_rejected(self):
        cfg = self.small_cfg()
        with pytest.raises(ConfigError, match="layer_dims"):
            train_from_dataset(cfg, np.zeros((4, 2, 31), dtype=np.float32))


class TestRoundCsv:
    def test_format_and_determinism(self, tmp_path):
        cfg = micro_config()
        res = run_campaign(cfg)
        p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        write_round_csv(p1, cfg, res)
        write_round_csv(p2, cfg, run_campaign(cfg))
        b1, b2 = open(p1, "rb").read(), open(p2, "rb").read()
        assert b1 == b2
        lines = b1.decode().splitlines()
        assert lines[0].startswith("# {")
        meta = json.loads(lines[0][2:])
        assert "config" in meta and "metrics" in meta
        assert lines[1] == ("trial,attacked,outcome,hamming_distance,"
                            "measured_distance_m,error_m,attack_advance,invalid")
        first = lines[2].split(",")
        assert first[0] == "0" and first[1] == "0" and first[2] == "normal"
        assert first[3] == "null"  # detector off: no fingerprint distance
