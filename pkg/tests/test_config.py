import json
import logging

import pytest

from src.core.config import RunConfig, load_config, save_config
from src.core.errors import ConfigError
from src.core.log import progress_enabled, setup_logging, verbosity_level


class TestProfiles:
    def test_optimized(self):
        cfg = RunConfig.from_profile("optimized")
        assert (cfg.frame_ms, cfg.overlap_pct, cfg.n_filters) == (40.0, 90.0, 20)
        assert cfg.rate == 4000

    def test_speech_default(self):
        cfg = RunConfig.from_profile("speech-default")
        assert (cfg.frame_ms, cfg.overlap_pct, cfg.n_filters) == (20.0, 50.0, 20)
        assert cfg.profile == "speech-default"

    def test_overrides_on_top(self):
        cfg = RunConfig.from_profile("speech-default", frame_ms=30.0, k=None)
        assert cfg.frame_ms == 30.0
        assert cfg.k == 3

    def test_unknown_profile(self):
        with pytest.raises(ConfigError):
            RunConfig.from_profile("fast")


class TestValidation:
    @pytest.mark.parametrize("overrides", [
        {"k": 4}, {"k": 0}, {"c": 0.0}, {"rate": 2000}, {"overlap_pct": 99.0},
        {"feature": "chroma"}, {"classifier": "tree"}, {"kernel": "poly"},
        {"granularity": "patient"}, {"repeats": 0}, {"select_count": 0}, {"sigma": -0.5},
        {"feature": "mfcc-mean", "classifier": "svm", "kernel": "isect"},
    ])
    def test_rejected(self, overrides):
        with pytest.raises(ConfigError):
            RunConfig.from_profile("optimized", **overrides)

    def test_histogram_kernel_fine_for_knn(self):
        RunConfig.from_profile("optimized", feature="morph", classifier="knn", kernel="bhat")

    def test_effective_repeats(self):
        assert RunConfig(classifier="knn", repeats=25).effective_repeats == 1
        assert RunConfig(classifier="mlp", repeats=25).effective_repeats == 25


class TestFingerprint:
    def test_stable_and_sensitive(self):
        a = RunConfig.from_profile("optimized")
        assert a.fingerprint() == RunConfig.from_profile("optimized").fingerprint()
        assert len(a.fingerprint()) == 16
        assert a.fingerprint() != a.with_overrides(seed=1).fingerprint()


class TestPersistence:
    def test_round_trip(self, tmp_path):
        cfg = RunConfig.from_profile("optimized", classifier="mlp", select_count=40)
        assert load_config(save_config(cfg, tmp_path / "c.json")) == cfg

    def test_embedded_block(self, tmp_path):
        cfg = RunConfig.from_profile("speech-default")
        path = tmp_path / "report.json"
        path.write_text(json.dumps({"oaa": 90.0, "config": cfg.to_dict()}), encoding="utf-8")
        assert load_config(path) == cfg

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"frame_ms": 40.0, "turbo": True}), encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")


class TestLogging:
    def test_levels(self):
        assert verbosity_level(0) == logging.WARNING
        assert verbosity_level(1) == logging.INFO
        assert verbosity_level(2) == logging.DEBUG
        assert verbosity_level(2, quiet=True) == logging.ERROR

    def test_setup_replaces_handlers(self):
        root = logging.getLogger()
        saved = (list(root.handlers), root.level)
        try:
            setup_logging(1)
            setup_logging(1)
            assert root.level == logging.INFO
            assert len(root.handlers) == 1
        finally:
            root.handlers[:] = saved[0]
            root.setLevel(saved[1])

    def test_progress_off_when_quiet(self):
        assert progress_enabled(logging.ERROR) is False
