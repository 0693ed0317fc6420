import csv
import io
import json
import warnings

import numpy as np
import pytest
import yaml

from physiofuse import models
from physiofuse.cli import main
from physiofuse.dataset import matrix_from_csv
from physiofuse.errors import (
    ConfigInvalid,
    InfeasibleCombination,
    MalformedArtifact,
    MissingManifest,
    PhysioFuseWarning,
)
from physiofuse.explain import importance_from_csv
from physiofuse.metrics import TABLE3_COLUMNS
from physiofuse.pipeline import cmd_report, cmd_run, cmd_sweep, config_from_dict

SMALL = {
    "input": {"synthetic": {"block_seconds": 100, "sessions": 2}},
    "seed": 7,
    "models": {"rf": {"n_trees": 20}, "gbdt": {"n_rounds": 10}},
    "explain": {"max_rows": 10},
}


def _cfg(tmp_path, **extra):
    doc = {**SMALL, **extra}
    return config_from_dict(doc, base_dir=tmp_path, out=str(tmp_path / "out"))


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PhysioFuseWarning)
        yield


class TestConfig:
    def test_window_zero(self, tmp_path):
        with pytest.raises(ConfigInvalid) as info:
            _cfg(tmp_path, window_seconds=0)
        assert info.value.field == "window_seconds"

    @pytest.mark.parametrize("extra,field", [
        ({"classifiers": ["SVM"]}, "classifiers"),
        ({"split": {"train_fraction": 1.5}}, "split"),
        ({"models": {"rf": {"n_trees": 0}}}, "models"),
        ({"preprocess": {"low_cut": 50.0}}, "preprocess"),
        ({"combinations": ["ECG|FOO"]}, "combinations"),
        ({"bogus": 1}, "bogus"),
    ])
    def test_invalid_fields(self, tmp_path, extra, field):
        with pytest.raises(ConfigInvalid) as info:
            _cfg(tmp_path, **extra)
        assert info.value.field == field

    def test_missing_paths(self, tmp_path):
        doc = {"input": {"recordings": [{"path": "nope.csv", "kss": "nope.kss"}]}}
        with pytest.raises(ConfigInvalid) as info:
            config_from_dict(doc, base_dir=tmp_path)
        assert info.value.field == "input.recordings[0].path"


def test_unimodal_ecg_fails_before_training(tmp_path):
    cfg = _cfg(tmp_path, combinations=["ECG"])
    with pytest.raises(InfeasibleCombination):
        cmd_run(cfg)
    assert not (tmp_path / "out").exists()


def _read_csv(path):
    return list(csv.reader(io.StringIO(path.read_text())))


def test_run_artifacts_reparse(tmp_path):
    cfg = _cfg(tmp_path, combinations=["EMG|EEG"])
    manifest = cmd_run(cfg)
    out = tmp_path / "out"
    fm = matrix_from_csv((out / "features.csv").read_text())
    assert fm.n_features == 45
    split = json.loads((out / "split.json").read_text())
    assert len(split["train"]) + len(split["test"]) == len(fm)
    for name in models.CLASSIFIERS:
        model = models.load(out / "models" / f"{name}.json")
        assert model.feature_names == fm.feature_names
    rows = _read_csv(out / "results.csv")
    assert tuple(rows[0]) == TABLE3_COLUMNS and len(rows) == 5
    importance_from_csv((out / "importance_class0.csv").read_text())
    wf = json.loads((out / "waterfall.json").read_text())
    assert len(wf["steps"]) == 10
    assert wf["final"] == pytest.approx(wf["base_value"] + sum(s["contribution"] for s in wf["steps"])
                                        + wf["remainder"], abs=1e-9)
    shap = json.loads((out / "shap.json").read_text())
    assert len(shap) == 3 and len(shap[0]["rows"]) == min(10, len(split["test"]))
    assert manifest["feature_counts"]["EMG|EEG"] == 45
    assert set(manifest["files"]) >= {"features.csv", "metrics.json", "results.csv"}


def test_sweep_and_report(tmp_path):
    cfg = _cfg(tmp_path, classifiers=["RF", "XGBOOST"])
    manifest = cmd_sweep(cfg)
    assert manifest["data"]["skipped_infeasible"] == ["ECG", "EMG"]
    out = tmp_path / "out"
    rows = _read_csv(out / "results.csv")[1:]
    assert len(rows) == 13 * 2
    acc = [float(r[2]) for r in rows]
    assert acc == sorted(acc, reverse=True)
    groups = _read_csv(out / "feature_groups.csv")
    assert groups[0] == ["Feature Group", "Best Accuracy (XGBoost)", "Best Accuracy (RF)",
                         "AUC (XGBoost)", "AUC (RF)"]
    assert [g[0] for g in groups[1:]] == ["Correlation", "Cross_correlation", "Covariance"]
    text = cmd_report(out)
    best = f"Best cell: {rows[0][0]} on {rows[0][1]}"
    assert best in text
    assert "class 2 (Fatigued)" in text


def test_report_errors(tmp_path):
    with pytest.raises(MissingManifest):
        cmd_report(tmp_path)
    cfg = _cfg(tmp_path, combinations=["EEG"], classifiers=["DT"])
    cmd_run(cfg)
    out = tmp_path / "out"
    one = cmd_report(out)
    table = one.split("Top 1 classifier")[1].split("\n\n")[0].strip().splitlines()
    assert len(table) == 3  # heading, column names, one row
    (out / "metrics.json").write_text("{not json")
    with pytest.raises(MalformedArtifact) as info:
        cmd_report(out)
    assert "metrics.json" in str(info.value)


def test_grouped_split_keeps_sessions_apart(tmp_path):
    cfg = _cfg(tmp_path, combinations=["EEG"], classifiers=["DT"],
               split={"mode": "grouped", "train_fraction": 0.5})
    cmd_run(cfg)
    split = json.loads((tmp_path / "out" / "split.json").read_text())
    assert {k[0] for k in split["train"]}.isdisjoint({k[0] for k in split["test"]})


class TestCli:
    def _write(self, tmp_path, doc):
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(doc))
        return path

    def test_run_report_exit_codes(self, tmp_path, capsys):
        path = self._write(tmp_path, {**SMALL, "combinations": ["EMG|EEG"], "classifiers": ["DT"]})
        out = tmp_path / "o"
        assert main(["run", "--config", str(path), "--out", str(out), "--seed", "3",
                     "--threads", "2"]) == 0
        assert json.loads((out / "manifest.json").read_text())["seed"] == 3
        assert main(["report", str(out)]) == 0
        assert "Best cell: DT on EMG|EEG" in capsys.readouterr().out

    def test_invalid_config_exit_code(self, tmp_path, capsys):
        path = self._write(tmp_path, {**SMALL, "window_seconds": 0})
        assert main(["run", "--config", str(path)]) == 2
        assert "window_seconds" in capsys.readouterr().err

    def test_missing_manifest_exit_code(self, tmp_path):
        assert main(["report", str(tmp_path)]) == 1

    def test_synth_then_recordings(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path / "syn"), "--seed", "2",
                     "--config", str(self._write(tmp_path, {"block_seconds": 40, "sessions": 2}))]) == 0
        files = sorted(p.name for p in (tmp_path / "syn").iterdir())
        assert files == ["synthetic-00.csv", "synthetic-00_kss.csv", "synthetic-01.csv",
                         "synthetic-01_kss.csv"]
        doc = {"input": {"recordings": [
            {"path": f"syn/synthetic-0{i}.csv", "kss": f"syn/synthetic-0{i}_kss.csv"}
            for i in range(2)]},
            "combinations": ["EMG|EEG"], "classifiers": ["DT"]}
        path = self._write(tmp_path, doc)
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "r"),
                     "--strict-labels"]) == 0

    def test_inspect_edf(self, tmp_path, capsys):
        from physiofuse.ingest import EdfHeader, EdfSignalHeader, write_edf

        header = EdfHeader(num_records=2, record_duration=1.0,
                           signals=(EdfSignalHeader("C3", samples_per_record=4),
                                    EdfSignalHeader("Odd", samples_per_record=2)))
        path = tmp_path / "x.edf"
        path.write_bytes(write_edf(header, [np.arange(8), np.arange(4)]))
        assert main(["inspect-edf", str(path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["num_signals"] == 2
        assert doc["signals"][0]["modality"] == "EEG"
        assert doc["signals"][1]["modality"] is None
        assert doc["signals"][1]["sampling_rate"] == 2.0
