"""Command-line entry point: ``constraint-automl <command> ...``.

Exit codes: 0 on success (an unsatisfiable search is a success with
``satisfied: false``), 2 on usage or input/output errors, 3 when an
internal invariant is violated.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from importlib import resources
from pathlib import Path

from .clock import TickClock, default_clock
from .constraints import (APPLICATION_KINDS, EQUAL_OPPORTUNITY, INFERENCE_TIME, PIPELINE_SIZE, TRAINING_TIME,
                          ConstraintSet, derive_thresholds, distance, threshold_rows)
from .data import Dataset, bundled_datasets, read_csv
from .errors import AutoMLError, DataFormatError, InsufficientDataError, InvalidInputError
from .metafeatures import CalibrationCurve, build_curve
from .metalearning import (ConfigPool, MetaDataset, MetaModels, MetaSpaces, SearchLabeler, alternating_sample,
                           cold_start, default_configuration, dynamic_configure, mine_pool, train_meta_models)
from .optimizer import random_run_samples, run_search
from .search_space import build_default_space
from .seeding import subseed, substream

log = logging.getLogger("constraint_automl")

EXIT_OK, EXIT_USAGE, EXIT_INTERNAL = 0, 2, 3
DEFAULT_PERCENTILES = list(range(1, 101))
# sample-file column -> constraint kind
SAMPLE_KINDS = {"training_time_s": TRAINING_TIME, "inference_time_s": INFERENCE_TIME,
                "pipeline_size_bytes": PIPELINE_SIZE, "equal_opportunity": EQUAL_OPPORTUNITY}
KIND_COLUMN = {k: col for col, k in SAMPLE_KINDS.items()}
KEY_KIND = {k.key: k for k in APPLICATION_KINDS}

class UsageError(Exception):
    pass

# Inputs ------------------------------------------------------------------------

def _clock(args):
    return TickClock(args.tick_clock) if args.tick_clock else default_clock

def load_dataset(spec: str, target: str | None, sensitive: str | None = None) -> Dataset:
    """A CSV path, or ``bundled:<name>`` for one of the synthetic datasets."""
    if spec.startswith("bundled:"):
        name = spec.split(":", 1)[1]
        for d in bundled_datasets("eval") + bundled_datasets("train"):
            if d.name == name:
                return d
        raise UsageError(f"no bundled dataset named {name!r}")
    if not target:
        raise UsageError("--target is required for CSV datasets")
    return read_csv(spec, target, sensitive)

def load_repo(repo: str | None, target: str | None, sensitive: str | None = None) -> list[Dataset]:
    if repo is None:
        return bundled_datasets("train")
    files = sorted(Path(repo).glob("*.csv"))
    if not files:
        raise UsageError(f"no CSV files in {repo}")
    if not target:
        raise UsageError("--target is required with --repo")
    return [read_csv(f, target, sensitive) for f in files]

def load_constraints(text: str) -> ConstraintSet:
    if not text.lstrip().startswith("{"):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return ConstraintSet.from_json(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"constraints are not valid JSON: {exc}") from None

def read_samples(path) -> dict[str, list[float]]:
    """Metric columns of a sample file (JSON list of rows, or CSV with a header)."""
    path = str(path)
    if path.endswith(".csv"):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    else:
        with open(path, encoding="utf-8") as fh:
            try:
                rows = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}: {exc}") from None
        if isinstance(rows, dict):
            rows = rows.get("samples", [])
    out = {}
    for col in SAMPLE_KINDS:
        vals = []
        for r in rows:
            v = r.get(col)
            if v in (None, ""):
                continue
            try:
                vals.append(float(v))
            except ValueError:
                raise DataFormatError(f"{path}: non-numeric {col} value {v!r}") from None
        if vals:
            out[col] = vals
    if not out:
        raise DataFormatError(f"{path}: no metric columns among {sorted(SAMPLE_KINDS)}")
    return out

def read_thresholds(path) -> dict:
    """Threshold grid per kind from a ``percentiles`` output file."""
    with open(path, encoding="utf-8") as fh:
        rows = json.load(fh)
    grid = {}
    for row in rows:
        for key, v in row.items():
            if key != "percentile" and v is not None:
                if key not in KEY_KIND:
                    raise DataFormatError(f"{path}: unknown threshold column {key!r}")
                grid.setdefault(KEY_KIND[key], []).append(float(v))
    return grid

def _stem(path) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix else p

def _write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")

def _packaged(name: str) -> Path | None:
    p = resources.files("constraint_automl.resources").joinpath(name)
    return Path(str(p)) if p.is_file() else None

# Commands ----------------------------------------------------------------------

def cmd_collect_samples(args) -> int:
    datasets = load_repo(args.repo, args.target, args.sensitive)
    rows = random_run_samples(datasets, args.n, subseed(args.seed, "samples"), clock=_clock(args))
    _write_json(args.out, rows)
    print(f"wrote {len(rows)} samples to {args.out}")
    return EXIT_OK

def cmd_percentiles(args) -> int:
    samples = read_samples(args.samples)
    kinds = {SAMPLE_KINDS[c]: v for c, v in samples.items()}
    thresholds = derive_thresholds(kinds, args.percentiles)
    rows = threshold_rows(thresholds, args.percentiles)
    _write_json(args.out, rows)
    if not args.no_plot:
        from .plotting import plot_thresholds

        plot_thresholds(samples, {KIND_COLUMN[k]: v for k, v in thresholds.items()},
                        str(_stem(args.out)) + ".png")
    print(f"wrote {len(rows)} threshold rows to {args.out}")
    return EXIT_OK

def _spaces(args, datasets, thresholds=None) -> MetaSpaces:
    if thresholds is None:
        if args.thresholds:
            thresholds = read_thresholds(args.thresholds)
        else:
            rows = random_run_samples(datasets, args.n_samples, subseed(args.seed, "samples"), clock=_clock(args))
            cols = {}
            for r in rows:
                for col in SAMPLE_KINDS:
                    if r.get(col) is not None:
                        cols.setdefault(SAMPLE_KINDS[col], []).append(r[col])
            thresholds = derive_thresholds(cols, args.percentiles)
    return MetaSpaces(datasets, thresholds, list(args.search_times), p_constraint=args.p_constraint)

def _spaces_to_dict(spaces: MetaSpaces, args) -> dict:
    return {"repo": args.repo, "target": args.target, "sensitive": args.sensitive,
            "datasets": [d.name for d in spaces.datasets],
            "thresholds": {k.key: v for k, v in spaces.thresholds.items()},
            "search_times": spaces.search_times, "p_constraint": spaces.p_constraint}

def _spaces_from_file(path) -> MetaSpaces:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    datasets = load_repo(d.get("repo"), d.get("target"), d.get("sensitive"))
    thresholds = {KEY_KIND[k]: v for k, v in d["thresholds"].items()}
    return MetaSpaces(datasets, thresholds, d["search_times"], p_constraint=d.get("p_constraint", 0.5))

def cmd_meta_train(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    clock = _clock(args)
    t0 = time.perf_counter()
    datasets = load_repo(args.repo, args.target, args.sensitive)
    spaces = _spaces(args, datasets)
    _write_json(out / "spaces.json", _spaces_to_dict(spaces, args))
    meta_path = out / "meta.jsonl"
    if args.resume and meta_path.exists():
        meta = MetaDataset.load(meta_path)
        log.info("resuming from %d instances", len(meta))
    else:
        meta_path.write_text("", encoding="utf-8")
        meta = MetaDataset(path=meta_path)
    labeler = SearchLabeler(args.n_runs, clock=clock, max_evaluations=args.max_evaluations)
    if len(meta) == 0:
        cold_start(spaces, args.cold_start, labeler, substream(args.seed, "cold_start"), meta)
    # resumed runs continue on a fresh substream so they do not replay earlier draws
    sample_seed = subseed(args.seed, f"alternating:{len(meta)}")
    if args.budget_s or args.iterations:
        alternating_sample(meta, spaces, labeler, sample_seed, iterations=args.iterations,
                           time_limit=args.budget_s, clock=clock, workers=args.workers)
    t_sample = time.perf_counter() - t0
    models = train_meta_models(meta, seed=subseed(args.seed, "meta_models"))
    models.save(out / "models.json")
    _write_json(out / "meta_train_report.json", {
        "instances": len(meta), "sampling_wall_s": t_sample, "training_wall_s": time.perf_counter() - t0 - t_sample,
        "regression_params": models.regression_params, "classification_params": models.classification_params,
        "cv_scores": models.cv_scores,
    })
    print(f"meta-trained on {len(meta)} instances; artifacts in {out}")
    return EXIT_OK

def cmd_mine(args) -> int:
    models = MetaModels.load(args.models)
    spaces_path = args.spaces or Path(args.models).with_name("spaces.json")
    spaces = _spaces_from_file(spaces_path)
    pool = mine_pool(models, spaces, args.n_tasks, args.iterations, substream(args.seed, "mine"))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    pool.save(args.out, spaces.tree)
    print(f"mined {len(pool)} configurations into {args.out}")
    return EXIT_OK

def _load_meta_artifacts(args):
    models_path = args.models or _packaged("desk_models.json")
    pool_path = args.pool or _packaged("desk_pool.json")
    if models_path is None or pool_path is None:
        raise UsageError("dynamic mode needs --models and --pool (no packaged meta-model found)")
    for p in (models_path, pool_path):
        if not Path(p).is_file():
            raise FileNotFoundError(f"no such file: {p}")
    return MetaModels.load(models_path), ConfigPool.load(pool_path)

def cmd_search(args) -> int:
    clock = _clock(args)
    d = load_dataset(args.dataset, args.target, args.sensitive)
    c = load_constraints(args.constraints)
    tree = build_default_space()
    t0 = time.perf_counter()
    if args.mode == "dynamic":
        models, pool = _load_meta_artifacts(args)
        curves = None
        if bool(args.curve_source) != bool(args.curve_target):
            raise UsageError("--curve-source and --curve-target go together")
        if args.curve_source:
            curves = (CalibrationCurve.from_csv(args.curve_source), CalibrationCurve.from_csv(args.curve_target))
        omega = dynamic_configure(models, pool, d, c, curves=curves)
    else:
        omega = default_configuration(tree)
    t_conf = time.perf_counter() - t0
    result = run_search(d, omega, c, seed=subseed(args.seed, "search"), clock=clock, tree=tree)
    t_search = time.perf_counter() - t0 - t_conf
    if result.satisfied:
        # the reported deltas must follow from the reported metrics
        recomputed = distance(result.metrics, c)
        if recomputed.to_dict() != result.evaluation.to_dict() or not recomputed.satisfied:
            log.error("reported metrics do not reproduce the reported constraint deltas")
            return EXIT_INTERNAL
    report = {
        "dataset": d.name,
        "constraints": c.to_dict(),
        "mode": args.mode,
        "configuration": omega.to_dict(tree),
        "result": result.to_dict(),
        "wall_times_s": {"configure": t_conf, "search": t_search},
    }
    _write_json(args.out, report)
    if not args.no_plot:
        from .plotting import plot_trace

        plot_trace(result, str(_stem(args.out)) + ".png", f"{d.name} ({args.mode})")
    status = "satisfied" if result.satisfied else "no pipeline satisfies the constraints"
    ba = f", validation BA {result.metrics.balanced_accuracy:.3f}" if result.satisfied else ""
    print(f"{d.name}: {status}{ba}; {len(result.history)} evaluations; report in {args.out}")
    return EXIT_OK

def cmd_calibrate(args) -> int:
    d = load_dataset(args.dataset, args.target, args.sensitive)
    curve = build_curve(d, default_configuration(), args.max_time, args.repetitions,
                        subseed(args.seed, "calibrate"), clock=_clock(args))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    curve.to_csv(args.out)
    if not args.no_plot:
        from .plotting import plot_curve

        plot_curve(curve, str(_stem(args.out)) + ".png")
    print(f"wrote {len(curve)} curve points to {args.out}")
    return EXIT_OK

# Parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tick-clock", type=float, default=None, metavar="SECONDS",
                        help="use a virtual clock advancing SECONDS per reading (reproducible runs)")
    common.add_argument("--no-plot", action="store_true", help="skip figure output")
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--target", help="target column of CSV datasets")
    data.add_argument("--sensitive", help="binary sensitive-attribute column")

    repo = argparse.ArgumentParser(add_help=False, parents=[data])
    repo.add_argument("--repo", help="directory of CSV datasets (default: bundled meta-training datasets)")

    p = argparse.ArgumentParser(prog="constraint-automl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("collect-samples", parents=[common, repo],
                       help="metrics of random pipelines, for threshold derivation")
    s.add_argument("--n", type=int, default=500)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_collect_samples)

    s = sub.add_parser("percentiles", parents=[common], help="constraint thresholds from metric samples")
    s.add_argument("--samples", required=True)
    s.add_argument("--percentiles", type=float, nargs="+", default=[2, 4, 8, 16, 32])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_percentiles)

    s = sub.add_parser("meta-train", parents=[common, repo], help="generate meta-data and fit the meta-models")
    s.add_argument("--thresholds", help="output of `percentiles` (default: sample and derive)")
    s.add_argument("--percentiles", type=float, nargs="+", default=DEFAULT_PERCENTILES)
    s.add_argument("--n-samples", type=int, default=300)
    s.add_argument("--search-times", type=float, nargs="+", default=[1.0, 2.0, 5.0, 10.0])
    s.add_argument("--p-constraint", type=float, default=0.5)
    s.add_argument("--cold-start", type=int, default=20)
    s.add_argument("--budget-s", type=float, default=None, help="wall budget of alternating sampling")
    s.add_argument("--iterations", type=int, default=None, help="alternating-sampling iterations")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--n-runs", type=int, default=3)
    s.add_argument("--max-evaluations", type=int, default=None, help="cap per labeling search")
    s.add_argument("--resume", action="store_true")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_meta_train)

    s = sub.add_parser("mine", parents=[common], help="mine a pool of promising configurations")
    s.add_argument("--models", required=True)
    s.add_argument("--spaces", help="spaces.json written by meta-train (default: next to --models)")
    s.add_argument("--n-tasks", type=int, default=100)
    s.add_argument("--iterations", type=int, default=50)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_mine)

    s = sub.add_parser("search", parents=[common, data], help="constrained pipeline search on one dataset")
    s.add_argument("--dataset", required=True, help="CSV path or bundled:<name>")
    s.add_argument("--constraints", required=True, help="JSON object or file; must set search_time_s")
    s.add_argument("--mode", choices=("static", "dynamic"), default="dynamic")
    s.add_argument("--models")
    s.add_argument("--pool")
    s.add_argument("--curve-source", help="calibration curve of the meta-training machine")
    s.add_argument("--curve-target", help="calibration curve of this machine")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("calibrate", parents=[common, data], help="best-so-far BA over search time")
    s.add_argument("--dataset", required=True)
    s.add_argument("--max-time", type=float, default=10.0)
    s.add_argument("--repetitions", type=int, default=3)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_calibrate)
    return p

def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, OSError, DataFormatError, InvalidInputError, InsufficientDataError,
            json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AutoMLError, AssertionError, ValueError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL

if __name__ == "__main__":
    sys.exit(main())
