import argparse
import json

import pandas as pd
import pytest

from src.cli.commands import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, build_parser, main, parse_values
from src.core.config import RunConfig, save_config


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--per-class", "2", "--out", str(root / "db"), "--seed", "3", "--quiet"]) == EXIT_OK
    features = root / "features.csv"
    assert main(["extract", "--manifest", str(root / "db" / "manifest.csv"),
                 "--out", str(features), "--quiet"]) == EXIT_OK
    return root


class TestParser:
    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as e:
            main(["eval", "--bogus"])
        assert e.value.code == EXIT_USAGE

    def test_missing_command(self):
        with pytest.raises(SystemExit) as e:
            main([])
        assert e.value.code == EXIT_USAGE

    def test_source_is_exclusive(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["eval", "--manifest", "a.csv", "--features", "b.csv"])

    def test_parse_values(self):
        assert parse_values("20:200:10") == [float(v) for v in range(20, 201, 10)]
        assert len(parse_values("20:200:10")) == 19
        assert parse_values("10,20,30", integer=True) == [10, 20, 30]
        with pytest.raises(argparse.ArgumentTypeError):
            parse_values("a:b")
        with pytest.raises(argparse.ArgumentTypeError):
            parse_values("1:5:0")


class TestCommands:
    def test_extract_is_byte_identical(self, corpus, tmp_path):
        again = tmp_path / "again.csv"
        assert main(["extract", "--manifest", str(corpus / "db" / "manifest.csv"),
                     "--out", str(again), "--jobs", "3", "--quiet"]) == EXIT_OK
        assert again.read_bytes() == (corpus / "features.csv").read_bytes()

    def test_features_header(self, corpus):
        first = (corpus / "features.csv").read_text(encoding="utf-8").splitlines()[:2]
        assert first[0] == "# kind=lbp,n_filters=20"
        assert first[1].startswith("cycle_id,label,subject_id,f0000,")

    def test_eval_and_replay(self, corpus, tmp_path, capsys):
        report = tmp_path / "report.json"
        assert main(["eval", "--features", str(corpus / "features.csv"), "--classifier", "knn",
                     "--k", "3", "--out", str(report), "--quiet"]) == EXIT_OK
        assert "OAA" in capsys.readouterr().out
        first = json.loads(report.read_text(encoding="utf-8"))
        assert first["fingerprint"] == RunConfig.from_dict(first["config"]).fingerprint()
        assert first["n_normal"] == 2 and first["n_abnormal"] == 4

        replay = tmp_path / "replay.json"
        assert main(["eval", "--features", str(corpus / "features.csv"), "--config", str(report),
                     "--out", str(replay), "--quiet"]) == EXIT_OK
        assert json.loads(replay.read_text(encoding="utf-8")) == first

    def test_train_then_predict(self, corpus, tmp_path):
        model = tmp_path / "model.json"
        assert main(["train", "--features", str(corpus / "features.csv"), "--classifier", "svm",
                     "--kernel", "isect", "--out", str(model), "--quiet"]) == EXIT_OK
        preds = tmp_path / "pred.csv"
        assert main(["predict", "--model", str(model), "--features", str(corpus / "features.csv"),
                     "--out", str(preds), "--quiet"]) == EXIT_OK
        df = pd.read_csv(preds)
        assert list(df.columns) == ["cycle_id", "label", "predicted", "score"]
        assert len(df) == 6

    def test_train_rejects_selection(self, corpus, tmp_path):
        assert main(["train", "--features", str(corpus / "features.csv"), "--select", "5",
                     "--out", str(tmp_path / "m.json"), "--quiet"]) == EXIT_FAILURE
        assert not (tmp_path / "m.json").exists()

    def test_train_rejects_selection_from_config(self, corpus, tmp_path):
        cfg = save_config(RunConfig.from_profile("optimized", select_count=5), tmp_path / "cfg.json")
        assert main(["train", "--features", str(corpus / "features.csv"), "--config", str(cfg),
                     "--out", str(tmp_path / "m.json"), "--quiet"]) == EXIT_FAILURE

    def test_select_count(self, corpus, tmp_path):
        out = tmp_path / "sel.json"
        assert main(["select", "--features", str(corpus / "features.csv"), "--count", "10",
                     "--out", str(out), "--quiet"]) == EXIT_OK
        data = json.loads(out.read_text(encoding="utf-8"))
        assert len(data["selected"]) == 10
        assert sum(data["per_filter_counts"].values()) == 10
        assert "fingerprint" in data

        series = tmp_path / "counts.csv"
        assert main(["plot-data", "--kind", "filter-counts", "--input", str(out),
                     "--out", str(series), "--quiet"]) == EXIT_OK
        assert pd.read_csv(series)["count"].sum() == 10

    def test_tune_k(self, corpus, tmp_path):
        out = tmp_path / "k.csv"
        assert main(["tune-k", "--features", str(corpus / "features.csv"), "--candidates", "1,3,5,7",
                     "--out", str(out), "--quiet"]) == EXIT_OK
        assert list(pd.read_csv(out)["k"]) == [1, 3, 5]

    def test_plot_sweep(self, tmp_path):
        src = tmp_path / "sweep.csv"
        pd.DataFrame({"frame_ms": [40.0, 20.0], "spe": [90.0, 80.0], "sen": [95.0, 85.0],
                      "oaa": [93.0, 83.0]}).to_csv(src, index=False)
        out = tmp_path / "series.csv"
        assert main(["plot-data", "--kind", "sweep", "--input", str(src), "--out", str(out)]) == EXIT_OK
        assert list(pd.read_csv(out)["x"]) == [20.0, 40.0]


class TestFailures:
    def test_empty_manifest(self, tmp_path):
        manifest = tmp_path / "empty.csv"
        manifest.write_text("", encoding="utf-8")
        assert main(["extract", "--manifest", str(manifest), "--out", str(tmp_path / "f.csv"),
                     "--quiet"]) == EXIT_FAILURE

    def test_missing_manifest(self, tmp_path):
        assert main(["eval", "--manifest", str(tmp_path / "nope.csv"), "--quiet"]) == EXIT_FAILURE

    def test_bad_sweep_values(self, corpus, tmp_path):
        assert main(["sweep", "--manifest", str(corpus / "db" / "manifest.csv"), "--param", "frame_ms",
                     "--values", "x:y:z", "--out", str(tmp_path / "s.csv"), "--quiet"]) == EXIT_FAILURE

    def test_histogram_kernel_on_signed_feature(self, corpus, tmp_path):
        assert main(["eval", "--manifest", str(corpus / "db" / "manifest.csv"), "--feature", "mfcc-mean",
                     "--classifier", "svm", "--kernel", "bhat", "--quiet"]) == EXIT_FAILURE
