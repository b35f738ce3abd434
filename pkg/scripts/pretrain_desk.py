"""Produce the packaged desk meta-model and configuration pool.

Runs the offline phase through the CLI on the bundled meta-training
datasets, then copies ``models.json`` and ``pool.json`` into the package's
resources. Interrupted runs continue with ``--resume``.

    python3 scripts/pretrain_desk.py --budget-s 14400 --work-dir /tmp/desk
"""
from __future__ import annotations

import argparse
import shutil
import sys
from pathlib import Path

from constraint_automl.cli import main as cli

RESOURCES = Path(__file__).resolve().parents[1] / "src" / "constraint_automl" / "resources"
# dense at the tight end, where the application constraints bite
PERCENTILES = ["1", "2", "4", "8", "16", "32", "64", "100"]


def run(argv) -> None:
    rc = cli([str(a) for a in argv])
    if rc != 0:
        sys.exit(rc)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--work-dir", default="desk_work")
    p.add_argument("--budget-s", type=float, default=4 * 3600)
    p.add_argument("--search-times", nargs="+", default=["2", "5", "10"])
    p.add_argument("--cold-start", type=int, default=40)
    p.add_argument("--n-tasks", type=int, default=200)
    p.add_argument("--mine-iterations", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--skip-sampling", action="store_true", help="only retrain and mine from existing meta-data")
    a = p.parse_args()
    work = Path(a.work_dir)
    work.mkdir(parents=True, exist_ok=True)
    seed = ["--seed", a.seed]
    thresholds = work / "thresholds.json"
    if not thresholds.exists():
        run(["collect-samples", "--n", 400, "--out", work / "samples.json", *seed])
        run(["percentiles", "--samples", work / "samples.json", "--percentiles", *PERCENTILES,
             "--out", thresholds, *seed])
    budget = 0 if a.skip_sampling else a.budget_s
    run(["meta-train", "--out", work, "--thresholds", thresholds, "--search-times", *a.search_times,
         "--cold-start", a.cold_start, "--budget-s", budget, "--n-runs", 3, *seed,
         *(["--resume"] if a.resume or a.skip_sampling else [])])
    run(["mine", "--models", work / "models.json", "--n-tasks", a.n_tasks,
         "--iterations", a.mine_iterations, "--out", work / "pool.json", *seed])
    shutil.copy(work / "models.json", RESOURCES / "desk_models.json")
    shutil.copy(work / "pool.json", RESOURCES / "desk_pool.json")
    shutil.copy(work / "spaces.json", RESOURCES / "desk_spaces.json")
    print(f"desk artifacts copied into {RESOURCES}")


if __name__ == "__main__":
    main()
