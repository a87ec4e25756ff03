import csv
import json

import numpy as np
import pytest

from mcauc.data import SyntheticSpec, gen_synthetic, save_dataset
from mcauc.harness import (
    ExperimentConfig,
    ExperimentError,
    emit_pr_points,
    emit_report,
    load_report,
    run_experiment,
)
from mcauc.train import TrainConfig

FAST = TrainConfig(epochs=4)


def _small(**kw):
    spec = SyntheticSpec(sizes=(150, 150, 300), separation=1.5)
    return ExperimentConfig(train=FAST, synthetic=spec, **kw)


def test_separable_single_run():
    spec = SyntheticSpec(spread=0.005, separation=1.5)
    summary = run_experiment(ExperimentConfig(repeats=1, synthetic=spec))
    for res in summary.results.values():
        for m in ("auc_ovo", "auc_ovr", "avg_pr_auc"):
            assert res.mean[m] == 1.0
            assert res.std[m] == 0.0


def test_summary_coverage_and_aggregation():
    summary = run_experiment(_small(repeats=3))
    assert set(summary.results) == {"softmax_ce", "aauc_ovo", "aauc_ovr"}
    for res in summary.results.values():
        names = {"auc_ovo", "auc_ovr", "avg_pr_auc", "accuracy"}
        names |= {f"{m}_{k}" for m in ("precision", "recall", "f1") for k in range(3)}
        assert set(res.mean) == names
        assert len(res.runs) == 3
        for name in names:
            raw = [r[name] for r in res.runs]
            assert abs(np.mean(raw) - res.mean[name]) <= 1e-12
            assert abs(np.std(raw) - res.std[name]) <= 1e-12
            assert res.std[name] >= 0
            assert 0 <= res.mean[name] <= 1
        assert set(res.pr_curves) == {"0", "1", "2"}
        assert len(res.pr_curves["0"]["recall"]) == 101


def test_paired_seeds_share_data(monkeypatch):
    import mcauc.harness as harness

    seen = []
    original = harness._load_splits

    def spy(config, seed):
        splits = original(config, seed)
        seen.append((seed, splits[2].features.tobytes()))
        return splits

    monkeypatch.setattr(harness, "_load_splits", spy)
    run_experiment(_small(repeats=2, base_seed=5, losses=("softmax_ce", "aauc_ovo")))
    assert [s for s, _ in seen] == [5, 6, 5, 6]
    assert seen[0][1] == seen[2][1] and seen[1][1] == seen[3][1]
    assert seen[0][1] != seen[1][1]


def test_determinism_and_round_trip(tmp_path):
    cfg = _small(repeats=2, losses=("aauc_ovr",))
    a, b = run_experiment(cfg), run_experiment(cfg)
    emit_report(a, tmp_path / "a.json")
    emit_report(b, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    back = load_report(tmp_path / "a.json")
    assert back.to_dict() == a.to_dict()
    doc = json.loads((tmp_path / "a.json").read_text())
    assert doc["provenance"]["repeats"] == 2 and doc["provenance"]["base_seed"] == 0


def test_parallel_matches_serial():
    cfg = _small(repeats=2, losses=("softmax_ce", "aauc_ovo"))
    assert run_experiment(cfg, workers=2).to_dict() == run_experiment(cfg).to_dict()


def test_pr_points_file(tmp_path):
    spec = SyntheticSpec(spread=0.005, separation=1.5)
    summary = run_experiment(ExperimentConfig(repeats=1, synthetic=spec, losses=("aauc_ovo",)))
    (path,) = emit_pr_points(summary, tmp_path)
    assert path.name == "pr_points_aauc_ovo.csv"
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["class", "threshold", "recall", "precision"]
    assert len(rows) == 3 * 101
    assert all(float(r["precision"]) == 1.0 for r in rows)


def test_file_source(tmp_path):
    for name, ds in zip(("train", "val", "test"), gen_synthetic(SyntheticSpec(sizes=(150, 150, 300), seed=3))):
        save_dataset(ds, tmp_path / f"{name}.csv")
    files = tuple(str(tmp_path / f"{n}.csv") for n in ("train", "val", "test"))
    cfg = ExperimentConfig(repeats=2, synthetic=None, data_files=files, losses=("softmax_ce",), train=FAST)
    summary = run_experiment(cfg)
    assert 0.5 < summary.results["softmax_ce"].mean["auc_ovo"] <= 1.0


def test_run_failure_names_run(tmp_path):
    cfg = ExperimentConfig(repeats=1, synthetic=None, data_files=(str(tmp_path / "nope.csv"),) * 3)
    with pytest.raises(ExperimentError, match="run 0"):
        run_experiment(cfg)


def test_report_write_error(tmp_path):
    summary = run_experiment(_small(repeats=1, losses=("softmax_ce",)))
    with pytest.raises(OSError, match="missing"):
        emit_report(summary, tmp_path / "missing" / "r.json")


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(repeats=0)
    with pytest.raises(ValueError):
        ExperimentConfig(synthetic=None)
