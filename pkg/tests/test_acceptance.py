"""End-to-end runs on the synthetic reference corpus (24 normal / 24 wheeze / 24 crackle, seed 42)."""

import numpy as np
import pytest

from src.analysis.evaluate import evaluate_features, selection_sweep, sweep, sweep_table
from src.core.config import RunConfig
from src.features.extract import extract_features

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def lbp_table(db1_corpus):
    return extract_features(db1_corpus, RunConfig.from_profile("optimized"), jobs=4)


class TestEndToEnd:
    def test_lbp_knn(self, lbp_table):
        report = evaluate_features(lbp_table, RunConfig.from_profile("optimized", classifier="knn", k=3))
        assert lbp_table.dim == 1044
        assert report.oaa >= 95.0
        assert report.sen >= 95.0

    def test_lbp_svm_bhattacharyya(self, lbp_table):
        cfg = RunConfig.from_profile("optimized", classifier="svm", kernel="bhat", c=1.0)
        report = evaluate_features(lbp_table, cfg, jobs=4)
        assert report.oaa >= 95.0
        assert report.sen >= 95.0

    def test_selection_keeps_accuracy(self, lbp_table):
        cfg = RunConfig.from_profile("optimized", classifier="svm", kernel="isect", c=1.0)
        full = evaluate_features(lbp_table, cfg, jobs=4).oaa
        df = selection_sweep(lbp_table, cfg, [10, 25, 50, 100, 150], jobs=4)
        assert df["oaa"].max() >= full - 2.0


class TestFrameSweep:
    def test_frame_length_range(self, db1_corpus):
        values = list(range(20, 201, 10))
        cfg = RunConfig.from_profile("optimized", classifier="knn", k=3)
        df = sweep_table("frame_ms", sweep(db1_corpus, cfg, "frame_ms", values, jobs=4))
        assert len(df) == 19
        assert np.all(np.isfinite(df[["spe", "sen", "oaa"]].to_numpy()))
