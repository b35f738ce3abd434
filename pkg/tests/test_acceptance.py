"""The ten acceptance criteria, each at its stated tolerance and runtime bound."""
import json
import time

import numpy as np
import pytest

from constraint_automl.cli import _packaged, main
from constraint_automl.clock import TickClock
from constraint_automl.constraints import (PIPELINE_SIZE, SEARCH_TIME, TRAINING_TIME, ConstraintEvaluation,
                                           ConstraintSet, budget_init, derive_thresholds)
from constraint_automl.data import bundled_datasets, make_blobs
from constraint_automl.learners.metrics import balanced_accuracy
from constraint_automl.learners.pipeline import predict
from constraint_automl.metafeatures import CalibrationCurve, calibrate
from constraint_automl.metalearning import (ConfigPool, MetaModels, alternating_sample, cold_start,
                                            default_configuration, dynamic_configure, label_run)
from constraint_automl.optimizer import (RungLog, constrained_objective, fidelity_ladder, greedy_ensemble,
                                         incremental_fit_eval, random_run_samples, run_search, split)
from constraint_automl.optimizer.search import SAMPLE_COLUMNS
from constraint_automl.search_space import ActivationMask, build_default_space, default_candidate, normalize_mask

from conftest import ACCEPTANCE
from planted import CountingLabeler, planted_pipeline, planted_spaces
from test_optimizer import VOTE_PREDS, VOTE_Y, vote_records
import oracles


def verdict(n, ok, detail):
    ACCEPTANCE[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE[n])
    assert ok, ACCEPTANCE[n]


def test_01_objective_ordering():
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    deltas = np.where(rng.random(10_000) < 0.5, 0.0, rng.exponential(1.0, 10_000) + 1e-12)
    bas = rng.random(10_000)
    scores = np.array([constrained_objective(ConstraintEvaluation({TRAINING_TIME: d}), b)
                       for d, b in zip(deltas, bas)])
    elapsed = time.perf_counter() - t0
    viol, sat = scores[deltas > 0], scores[deltas == 0]
    ok = viol.max() < sat.min() and elapsed < 1.0
    verdict(1, ok, f"max violator {viol.max():.3g} < min satisfier {sat.min():.3g}; {elapsed:.2f}s (< 1s)")


def test_02_mask_closure():
    tree = build_default_space()
    rng = np.random.default_rng(0)
    raws = [ActivationMask(tuple(bool(b) for b in rng.random(len(tree)) < rng.random())) for _ in range(1000)]
    t0 = time.perf_counter()
    outs = [normalize_mask(tree, m) for m in raws]
    again = [normalize_mask(tree, m) for m in outs]
    elapsed = time.perf_counter() - t0
    edges = [(n.id, n.parent) for n in tree.nodes if n.parent is not None]
    broken = sum(any(o.bits[c] and not o.bits[p] for c, p in edges) for o in outs)
    not_idem = sum(a != b for a, b in zip(outs, again))
    ok = broken == 0 and not_idem == 0 and elapsed < 1.0
    verdict(2, ok, f"{broken} edge violations, {not_idem} non-idempotent; {elapsed:.2f}s (< 1s)")


def test_03_label_short_circuit():
    tree = build_default_space()
    default = default_configuration(tree)
    runs = {"omega": 0, "default": 0}

    def counted(d, om, c, seed, **kw):
        runs["default" if om is default else "omega"] += 1
        return run_search(d, om, c, seed, **kw)

    d = make_blobs(120, 3, 2, 1.0, seed=0)
    c = ConstraintSet({SEARCH_TIME: 0.2, PIPELINE_SIZE: 1})
    label = label_run(d, c, default_configuration(tree), 10, runner=counted, default=default,
                      clock=TickClock(0.001), tree=tree)
    ok = label == 0.0 and runs["default"] == 0 and runs["omega"] == 10
    verdict(3, ok, f"label {label}, {runs['omega']} configuration runs, {runs['default']} default runs")


def test_04_alternating_balance():
    spaces = planted_spaces(build_default_space())
    lab = CountingLabeler()
    # compile the tree builder outside the timed region
    warm = cold_start(spaces, 3, lab, np.random.default_rng(1))
    alternating_sample(warm, spaces, lab, 1, iterations=4)
    meta = cold_start(spaces, 3, lab, np.random.default_rng(0))
    t0 = time.perf_counter()
    alternating_sample(meta, spaces, lab, 0, iterations=1000)
    elapsed = time.perf_counter() - t0
    n_unc = sum(i.source == "uncertainty" for i in meta)
    lo, hi = oracles.binomial_3sigma(1000)
    ok = len(meta) == 1003 and 440 <= n_unc <= 560 and elapsed < 5.0
    verdict(4, ok, f"{n_unc} uncertainty steps of 1000 (3 sigma {lo:.0f}..{hi:.0f}, bound 440..560); "
                   f"{elapsed:.2f}s (< 5s)")


def test_05_planted_signal():
    spaces = planted_spaces(build_default_space())
    t0 = time.perf_counter()
    hits = sum(planted_pipeline(spaces, rep)[0].use_ensemble for rep in range(50))
    elapsed = time.perf_counter() - t0
    ok = hits >= 45 and elapsed < 300
    verdict(5, ok, f"ensemble on in {hits}/50 repetitions (>= 45); {elapsed:.0f}s (< 300s)")


def _test_ba(result, test):
    if not result.satisfied:
        return 0.0  # no pipeline returned
    best = result.best
    labels = best.predict(test)[0] if hasattr(best, "members") else predict(best, test)[0]
    return balanced_accuracy(test.y, labels)


@pytest.mark.slow
def test_06_desk_dynamic_vs_static():
    models_path, pool_path = _packaged("desk_models.json"), _packaged("desk_pool.json")
    if models_path is None or pool_path is None:
        verdict(6, False, "no packaged desk meta-model (run scripts/pretrain_desk.py)")
    models, pool = MetaModels.load(models_path), ConfigPool.load(pool_path)
    tree = build_default_space()
    datasets = bundled_datasets("eval")
    t0 = time.perf_counter()
    rows = random_run_samples(datasets, 160, seed=0, tree=tree)
    samples = {k: [r[col] for r in rows] for k, col in SAMPLE_COLUMNS.items() if k in (TRAINING_TIME, PIPELINE_SIZE)}
    tight = {k: v[0] for k, v in derive_thresholds(samples, [4]).items()}
    outcome = {"static": [], "dynamic": []}
    kept_default = 0
    for d in datasets:
        search_part, test = split(d, 0.25, 0)
        for kind in (TRAINING_TIME, PIPELINE_SIZE):
            c = ConstraintSet({SEARCH_TIME: 10.0, kind: tight[kind]})
            for mode in ("static", "dynamic"):
                omega = (default_configuration(tree) if mode == "static"
                         else dynamic_configure(models, pool, search_part, c, tree=tree))
                if mode == "dynamic":
                    kept_default += omega == default_configuration(tree)
                r = run_search(search_part, omega, c, seed=0, tree=tree)
                outcome[mode].append((r.satisfied, _test_ba(r, test)))
    elapsed = time.perf_counter() - t0
    rate = {m: np.mean([s for s, _ in v]) for m, v in outcome.items()}
    ba = {m: np.mean([b for _, b in v]) for m, v in outcome.items()}
    ok = rate["dynamic"] >= rate["static"] and ba["dynamic"] >= ba["static"] - 0.02 and elapsed < 1800
    verdict(6, ok, f"satisfied dynamic {rate['dynamic']:.3f} vs static {rate['static']:.3f}; "
                   f"mean test BA dynamic {ba['dynamic']:.3f} vs static {ba['static']:.3f} (tolerance 0.02); "
                   f"dynamic kept the default on {kept_default}/16 tasks; "
                   f"{elapsed:.0f}s (< 1800s)")


def test_07_ensemble_monotonicity():
    tree = build_default_space()
    val, recs = vote_records(tree, VOTE_PREDS, VOTE_Y)
    _, m, _, steps = greedy_ensemble(recs, val, ConstraintSet({SEARCH_TIME: 1}))
    best_single = max(r.metrics.balanced_accuracy for r in recs)
    ok = m.balanced_accuracy >= best_single and all(b >= a for a, b in zip(steps, steps[1:]))
    verdict(7, ok, f"ensemble BA {m.balanced_accuracy:.3f} >= best member {best_single:.3f}; "
                   f"steps {[round(s, 3) for s in steps]}")


def test_08_successive_halving():
    tree = build_default_space()
    ladder = fidelity_ladder(400, 2)
    d = make_blobs(600, 3, 2, 1.0, seed=0)
    train, val = split(d, 0.33, 0)
    c = ConstraintSet({SEARCH_TIME: 100, PIPELINE_SIZE: 1})
    rec = incremental_fit_eval(default_candidate(tree), train, val, budget_init(c), RungLog(), c)
    ok = ladder == [20, 40, 80, 160, 320, 400] and fidelity_ladder(401, 3) == [30, 60, 120, 240, 401] \
        and len(rec.rungs) == 1
    verdict(8, ok, f"ladder {ladder}; size-capped candidate ran {len(rec.rungs)} rung(s)")


def test_09_calibration():
    grid = [float(t) for t in range(1, 11)]
    bas = [0.5 + 0.04 * i for i in range(10)]
    source = CalibrationCurve(grid, bas)
    target = CalibrationCurve([t / 2 for t in grid], bas)
    identity = all(calibrate(source, source, t) == t for t in grid)
    doubled = all(calibrate(source, target, t) == 2 * t for t in target.times)
    verdict(9, identity and doubled, f"identity on grid {identity}; half-time target maps t to 2t {doubled}")


def test_10_meta_train_determinism(tmp_path):
    argv = ["meta-train", "--seed", "7", "--tick-clock", "0.001", "--workers", "1", "--n-samples", "20",
            "--percentiles", "10", "50", "90", "--search-times", "0.05", "--cold-start", "20",
            "--iterations", "5", "--n-runs", "2", "--max-evaluations", "3"]
    codes = [main(argv + ["--out", str(tmp_path / name)]) for name in ("a", "b")]
    a, b = ((tmp_path / n / "meta.jsonl").read_bytes() for n in ("a", "b"))
    ok = codes == [0, 0] and a == b and len(a.splitlines()) == 25
    verdict(10, ok, f"exit codes {codes}; {len(a.splitlines())} lines each; byte-identical {a == b}")
