"""Run an experiment config and print success rates per grid cell.

    python3 scripts/run_sweep.py scripts/configs/pm_sweep.json --out results/pm
"""

import argparse
import collections
import json
import sys
from pathlib import Path

from hyperspan.lab import run_experiment


def summarize(records):
    cells = collections.defaultdict(collections.Counter)
    for rec in records:
        key = (rec.pipeline, rec.model, rec.n, json.dumps(rec.params, sort_keys=True))
        cells[key][rec.outcome] += 1
        if rec.valid == "fail":
            cells[key]["invalid"] += 1
    print(f"{'pipeline':<11}{'model':<8}{'n':>4}  {'rate':>5}  {'invalid':>7}  params")
    for (pipe, model, n, params), c in sorted(cells.items()):
        total = sum(v for k, v in c.items() if k != "invalid")
        print(f"{pipe:<11}{model:<8}{n:>4}  {c['success'] / total:5.2f}  {c['invalid']:>7}  {params}")
    return sum(c["invalid"] for c in cells.values())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", type=Path)
    ap.add_argument("--out", type=Path, help="output prefix for .csv/.json/.progress.jsonl")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--fresh", action="store_true", help="ignore an existing progress log")
    args = ap.parse_args(argv)
    cfg = json.loads(args.config.read_text())
    if args.workers:
        cfg["workers"] = args.workers
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
    records = run_experiment(cfg, args.out, resume=not args.fresh)
    return 1 if summarize(records) else 0


if __name__ == "__main__":
    sys.exit(main())
