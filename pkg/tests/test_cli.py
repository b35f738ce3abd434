import csv
import json

import pytest

from constraint_automl.cli import main
from constraint_automl.constraints import ConstraintSet, distance
from constraint_automl.learners.pipeline import PipelineMetrics

TICK = ["--tick-clock", "0.001"]
SMALL_META = ["--n-samples", "20", "--percentiles", "10", "50", "90", "--search-times", "0.05",
              "--n-runs", "1", "--max-evaluations", "3"]


def run(*argv):
    return main([str(a) for a in argv])


def _samples(path, values):
    path.write_text(json.dumps([{"training_time_s": v} for v in values]))
    return path


@pytest.fixture(scope="module")
def meta_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("meta")
    assert run("meta-train", "--seed", 1, *TICK, *SMALL_META, "--cold-start", 20, "--iterations", 4,
               "--out", out) == 0
    return out


# percentiles -----------------------------------------------------------------------

def test_percentiles_median_of_1_to_100(tmp_path):
    src = _samples(tmp_path / "s.json", range(1, 101))
    assert run("percentiles", "--samples", src, "--percentiles", 50, "--out", tmp_path / "t.json") == 0
    rows = json.loads((tmp_path / "t.json").read_text())
    assert rows == [{"percentile": 50.0, "training_time_s": 50.5}]
    assert (tmp_path / "t.png").stat().st_size > 0


def test_percentiles_row_count_and_no_plot(tmp_path):
    src = _samples(tmp_path / "s.json", [0.1 * i for i in range(1, 40)])
    assert run("percentiles", "--samples", src, "--no-plot", "--out", tmp_path / "t.json") == 0
    rows = json.loads((tmp_path / "t.json").read_text())
    assert [r["percentile"] for r in rows] == [2, 4, 8, 16, 32]
    assert not (tmp_path / "t.png").exists()


def test_percentiles_csv_samples(tmp_path):
    src = tmp_path / "s.csv"
    src.write_text("dataset,pipeline_size_bytes\na,10\nb,20\nc,30\n")
    assert run("percentiles", "--samples", src, "--percentiles", 50, "--no-plot", "--out", tmp_path / "t.json") == 0
    assert json.loads((tmp_path / "t.json").read_text())[0]["pipeline_size_bytes"] == 20.0


@pytest.mark.parametrize("content", [None, "not json", "[]", '[{"training_time_s": "abc"}]'])
def test_percentiles_bad_input_exits_2(tmp_path, content):
    src = tmp_path / "s.json"
    if content is not None:
        src.write_text(content)
    assert run("percentiles", "--samples", src, "--out", tmp_path / "t.json") == 2


def test_usage_errors():
    assert run() == 2
    assert run("search", "--dataset", "bundled:blobs_a") == 2
    assert run("--help") == 0


# search ----------------------------------------------------------------------------

def test_static_search_ignores_meta_artifacts(tmp_path):
    out = tmp_path / "r.json"
    code = run("search", "--dataset", "bundled:blobs_a", "--constraints", '{"search_time_s": 0.3}', "--mode",
               "static", "--models", tmp_path / "missing.json", "--pool", tmp_path / "missing.json",
               *TICK, "--out", out)
    assert code == 0
    report = json.loads(out.read_text())
    assert report["mode"] == "static" and report["result"]["satisfied"]
    assert report["configuration"]["use_ensemble"] is True
    assert (tmp_path / "r.png").stat().st_size > 0


def test_dynamic_search_missing_pool_exits_2(tmp_path, meta_dir):
    code = run("search", "--dataset", "bundled:blobs_a", "--constraints", '{"search_time_s": 0.1}',
               "--models", meta_dir / "models.json", "--pool", tmp_path / "missing.json", *TICK,
               "--out", tmp_path / "r.json")
    assert code == 2


def test_unsatisfiable_search_is_success(tmp_path):
    out = tmp_path / "r.json"
    c = tmp_path / "c.json"
    c.write_text('{"search_time_s": 0.1, "pipeline_size_bytes": 1}')
    assert run("search", "--dataset", "bundled:moons_a", "--constraints", c, "--mode", "static", *TICK,
               "--no-plot", "--out", out) == 0
    result = json.loads(out.read_text())["result"]
    assert result["satisfied"] is False and result["best"] is None and result["n_evaluations"] > 0


def test_reported_deltas_follow_from_metrics(tmp_path):
    out = tmp_path / "r.json"
    text = '{"search_time_s": 0.3, "training_time_s": 0.5, "pipeline_size_bytes": 1e6}'
    assert run("search", "--dataset", "bundled:blobs_b", "--constraints", text, "--mode", "static", *TICK,
               "--no-plot", "--out", out) == 0
    result = json.loads(out.read_text())["result"]
    m = result["metrics"]
    metrics = PipelineMetrics(m["balanced_accuracy"], m["training_time_s"], m["inference_time_s"],
                              m["pipeline_size_bytes"], m.get("equal_opportunity"))
    assert distance(metrics, ConstraintSet.from_json(text)).to_dict() == result["deltas"]


def test_search_csv_dataset(tmp_path):
    src = tmp_path / "d.csv"
    rows = ["a,b,label"] + [f"{i % 7},{(i * 3) % 5},{'x' if i % 7 < 3 else 'y'}" for i in range(60)]
    src.write_text("\n".join(rows) + "\n")
    out = tmp_path / "r.json"
    assert run("search", "--dataset", src, "--target", "label", "--constraints", '{"search_time_s": 0.2}',
               "--mode", "static", *TICK, "--no-plot", "--out", out) == 0
    assert json.loads(out.read_text())["dataset"] == "d"
    assert run("search", "--dataset", src, "--constraints", '{"search_time_s": 0.2}', "--mode", "static",
               "--out", out) == 2


def test_dynamic_search_with_trained_artifacts(tmp_path, meta_dir):
    pool = tmp_path / "pool.json"
    assert run("mine", "--models", meta_dir / "models.json", "--n-tasks", 3, "--iterations", 4,
               "--out", pool) == 0
    out = tmp_path / "r.json"
    args = ["search", "--dataset", "bundled:nominal_a", "--constraints", '{"search_time_s": 0.2}',
            "--models", meta_dir / "models.json", "--pool", pool, *TICK, "--no-plot"]
    assert run(*args, "--out", out) == 0
    first = json.loads(out.read_text())
    assert run(*args, "--out", tmp_path / "r2.json") == 0
    second = json.loads((tmp_path / "r2.json").read_text())
    assert first["configuration"] == second["configuration"]
    assert first["result"]["history"] == second["result"]["history"]
    assert run(*args, "--curve-source", tmp_path / "x.csv", "--out", out) == 2


# mine and meta-train ---------------------------------------------------------------

def test_mine_size_and_determinism(tmp_path, meta_dir):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert run("mine", "--models", meta_dir / "models.json", "--n-tasks", 4, "--iterations", 5,
                   "--seed", 3, "--out", out) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(json.loads(a.read_text())["entries"]) == 4


def test_meta_train_artifacts(meta_dir):
    lines = (meta_dir / "meta.jsonl").read_text().splitlines()
    assert len(lines) == 24
    assert [json.loads(x)["timestamp"] for x in lines] == list(range(24))
    report = json.loads((meta_dir / "meta_train_report.json").read_text())
    assert report["instances"] == 24
    assert json.loads((meta_dir / "spaces.json").read_text())["search_times"] == [0.05]


def test_meta_train_workers_and_resume(tmp_path):
    out = tmp_path / "m"
    assert run("meta-train", *TICK, *SMALL_META, "--cold-start", 20, "--iterations", 4, "--workers", 4,
               "--out", out) == 0
    assert len((out / "meta.jsonl").read_text().splitlines()) == 24
    assert run("meta-train", *TICK, *SMALL_META, "--iterations", 3, "--resume", "--out", out) == 0
    ts = [json.loads(x)["timestamp"] for x in (out / "meta.jsonl").read_text().splitlines()]
    assert ts == list(range(27))


def test_meta_train_too_few_instances(tmp_path):
    assert run("meta-train", *TICK, *SMALL_META, "--cold-start", 5, "--out", tmp_path / "m") != 0


def test_meta_train_thresholds_file(tmp_path):
    src = _samples(tmp_path / "s.json", [0.001 * i for i in range(1, 50)])
    th = tmp_path / "t.json"
    assert run("percentiles", "--samples", src, "--no-plot", "--out", th) == 0
    out = tmp_path / "m"
    assert run("meta-train", *TICK, *SMALL_META, "--thresholds", th, "--cold-start", 20, "--out", out) == 0
    spaces = json.loads((out / "spaces.json").read_text())
    assert list(spaces["thresholds"]) == ["training_time_s"]


# calibrate -------------------------------------------------------------------------

def test_calibrate_deterministic_and_monotone(tmp_path):
    outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for out in outs:
        assert run("calibrate", "--dataset", "bundled:blobs_a", "--max-time", 0.2, "--repetitions", 2,
                   *TICK, "--out", out) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()
    with open(outs[0], newline="") as fh:
        rows = list(csv.DictReader(fh))
    times = [float(r["time_s"]) for r in rows]
    bas = [float(r["balanced_accuracy"]) for r in rows]
    assert times == sorted(times) and bas == sorted(bas)
    assert (tmp_path / "a.png").stat().st_size > 0


def test_collect_samples(tmp_path):
    out = tmp_path / "s.json"
    assert run("collect-samples", "--n", 5, *TICK, "--out", out) == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 5 and all(r["pipeline_size_bytes"] > 0 for r in rows)
