"""Grid sweeps over generators and pipelines, written as CSV and JSON tables.

A config is a JSON object::

    {
      "seed": 1,
      "trials": 20,
      "grid": {"model": ["gnp"], "n": [12, 15], "r": [3], "p": [0.5]},
      "pipelines": ["pm"],
      "params": {"pm": {"eps": 0.1}},
      "caps": {"oracle_n": 12},
      "workers": 1,
      "timing": false
    }

Trial i gets seed ``derive_seed(seed, i)``. Rows are ordered by trial index.
With ``timing`` off the ``millis`` column stays empty so that reruns produce
identical bytes.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..absorb import perfect_matching, verify_perfect_matching
from ..eprim import HypothesisError
from ..hcore import HypergraphError, hole_exact, hole_heuristic, verify_certificate
from ..seeding import derive_seed
from ..span import (
    PipelineError,
    embed_spanning_tree,
    is_loose_hamilton,
    loose_hamilton,
    rainbow_embed,
    verify_embedding,
    verify_rainbow,
)
from . import oracles
from .generators import GeneratorSpec, generate, random_hypertree, random_system
from .io import dumps

COLUMNS = ("model", "n", "r", "params", "pipeline", "seed", "outcome", "valid", "millis", "diagnostics")
PIPELINES = ("pm", "hamilton", "embed-tree", "hole", "rainbow")
GRID_KEYS = {"model", "n", "r", "p", "C", "delta", "t", "sizes"}
TOP_KEYS = {"seed", "trials", "grid", "pipelines", "params", "caps", "workers", "timing", "name"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    grid: dict
    pipelines: tuple[str, ...]
    seed: int = 0
    trials: int = 1
    params: dict = field(default_factory=dict)
    caps: dict = field(default_factory=dict)
    workers: int = 1
    timing: bool = False
    name: str = "experiment"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        grid = d.get("grid")
        if not isinstance(grid, dict) or "model" not in grid or "n" not in grid:
            raise ConfigError("grid must be an object with at least 'model' and 'n'")
        bad = set(grid) - GRID_KEYS
        if bad:
            raise ConfigError(f"unknown grid keys {sorted(bad)}")
        for k, v in grid.items():
            if not isinstance(v, list) or not v:
                raise ConfigError(f"grid entry {k!r} must be a non-empty list")
        pipes = d.get("pipelines")
        if not isinstance(pipes, list) or not pipes or any(p not in PIPELINES for p in pipes):
            raise ConfigError(f"pipelines must be a non-empty list drawn from {PIPELINES}")
        trials = d.get("trials", 1)
        workers = d.get("workers", 1)
        if not isinstance(trials, int) or trials < 1:
            raise ConfigError("trials must be a positive integer")
        if not isinstance(workers, int) or workers < 1:
            raise ConfigError("workers must be a positive integer")
        if not isinstance(d.get("seed", 0), int):
            raise ConfigError("seed must be an integer")
        for key in ("params", "caps"):
            if not isinstance(d.get(key, {}), dict):
                raise ConfigError(f"{key} must be an object")
        return cls(
            grid={k: list(v) for k, v in grid.items()},
            pipelines=tuple(pipes),
            seed=d.get("seed", 0),
            trials=trials,
            params=d.get("params", {}),
            caps=d.get("caps", {}),
            workers=workers,
            timing=bool(d.get("timing", False)),
            name=str(d.get("name", "experiment")),
        )


@dataclass
class ExperimentRecord:
    index: int
    model: str
    n: int
    r: int
    params: dict
    pipeline: str
    seed: int
    outcome: str  # success | failure | rejected | error
    valid: str  # pass | fail | "" when there is nothing to check
    millis: int | None
    diagnostics: dict

    def row(self) -> list[str]:
        return [
            self.model,
            str(self.n),
            str(self.r),
            json.dumps(self.params, sort_keys=True, separators=(",", ":")),
            self.pipeline,
            str(self.seed),
            self.outcome,
            self.valid,
            "" if self.millis is None else str(self.millis),
            json.dumps(self.diagnostics, sort_keys=True, separators=(",", ":"), default=str),
        ]


def trials(cfg: ExperimentConfig) -> list[tuple[int, dict, str]]:
    """(index, grid point, pipeline) in a fixed order."""
    keys = sorted(cfg.grid)
    out = []
    i = 0
    for values in itertools.product(*(cfg.grid[k] for k in keys)):
        point = dict(zip(keys, values))
        for pipe in cfg.pipelines:
            for _ in range(cfg.trials):
                out.append((i, point, pipe))
                i += 1
    return out


def run_trial(cfg: ExperimentConfig, index: int, point: dict, pipe: str) -> ExperimentRecord:
    seed = derive_seed(cfg.seed, index)
    params = dict(cfg.params.get(pipe, {}))
    gp = {k: v for k, v in point.items() if k not in ("model", "n", "r")}
    if "sizes" in gp:
        gp["sizes"] = tuple(gp["sizes"])
    spec = GeneratorSpec(model=point["model"], n=point["n"], r=point.get("r", 3), seed=seed, **gp)
    rec = ExperimentRecord(index, spec.model, spec.n, spec.r, {**_public(gp), **params}, pipe, seed, "error", "", None, {})
    start = time.perf_counter()
    try:
        outcome, valid, diag = _RUNNERS[pipe](spec, params, cfg.caps, seed)
    except (HypothesisError, HypergraphError) as exc:
        outcome, valid, diag = "rejected", "", {"error": str(exc)}
    except PipelineError as exc:
        outcome, valid, diag = "failure", "", {"stage": exc.stage, "error": str(exc)}
    except Exception as exc:  # recorded, never fatal to the sweep
        outcome, valid, diag = "error", "", {"error": f"{type(exc).__name__}: {exc}"}
    if cfg.timing:
        rec.millis = int(round((time.perf_counter() - start) * 1000))
    rec.outcome, rec.valid, rec.diagnostics = outcome, valid, diag
    return rec


def _public(gp: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in gp.items()}


def _host(spec: GeneratorSpec):
    g = generate(spec)
    return getattr(g, "graph", g)


def _run_pm(spec, params, caps, seed):
    host = _host(spec)
    res = perfect_matching(host, seed=seed, **params)
    diag = {"method": res.method}
    cap = caps.get("oracle_n", 15)
    if res.matching is not None:
        ok = verify_perfect_matching(host, res.matching)
        if ok and host.n <= cap:
            ok = oracles.oracle_perfect_matching(host, cap=cap) is not None
        return "success", "pass" if ok else "fail", diag
    if host.n <= cap:
        diag["oracle"] = "found" if oracles.oracle_perfect_matching(host, cap=cap) else "none"
    return "failure", "", diag


def _run_hamilton(spec, params, caps, seed):
    host = _host(spec)
    res = loose_hamilton(host, seed=seed, **params)
    diag = {"method": res.method}
    if res.cycle is not None:
        return "success", "pass" if is_loose_hamilton(host, res.cycle) else "fail", diag
    return "failure", "", diag


def _run_tree(spec, params, caps, seed):
    host = _host(spec)
    params = dict(params)
    guest_delta = params.pop("guest_delta", 3)
    guest = random_hypertree(spec.r, spec.n, guest_delta, derive_seed(seed, "guest"))
    cap = caps.get("oracle_n", 10)
    try:
        emb = embed_spanning_tree(host, guest, seed=seed, **params)
    except PipelineError as exc:
        diag = {"stage": exc.stage, "error": str(exc)}
        if host.n <= cap:
            diag["oracle"] = "found" if oracles.oracle_tree_embed(host, guest.graph, cap=cap) else "none"
        return "failure", "", diag
    bad = verify_embedding(emb)
    return "success", "fail" if bad else "pass", {"stages": len(emb.stages), "problems": bad}


def _run_hole(spec, params, caps, seed):
    host = _host(spec)
    cap = caps.get("exact_n", 12)
    if host.n <= cap:
        hb = hole_exact(host, max_n=cap, **params)
    else:
        hb = hole_heuristic(host, seed=seed, **params)
    ok = verify_certificate(host, hb.certificate)
    return "success", "pass" if ok else "fail", {"lower": hb.lower, "upper": hb.upper, "exact": hb.exact}


def _run_rainbow(spec, params, caps, seed):
    params = dict(params)
    m = params.pop("m", None)
    tree_n = params.pop("tree_n", None)
    p = spec.p
    if tree_n is None:
        tree_n = (m if m is not None else 2) * (spec.r - 1) + 1
    m = m if m is not None else (tree_n - 1) // (spec.r - 1)
    system = random_system(spec.r, spec.n, m, p, seed)
    tree = random_hypertree(spec.r, tree_n, params.pop("guest_delta", 3), derive_seed(seed, "guest")).graph
    emb = rainbow_embed(system, tree, seed=seed, **params)
    bad = verify_rainbow(system, tree, emb)
    return "success", "fail" if bad else "pass", {"method": emb.method}


_RUNNERS = {"pm": _run_pm, "hamilton": _run_hamilton, "embed-tree": _run_tree, "hole": _run_hole, "rainbow": _run_rainbow}


def _run_one(args):
    cfg, index, point, pipe = args
    return run_trial(cfg, index, point, pipe)


def run_experiment(config: dict | ExperimentConfig, out: str | Path | None = None, *, resume: bool = True) -> list[ExperimentRecord]:
    """Run every trial of ``config``; with ``out`` set, write ``out``.csv and
    ``out``.json plus a progress log that a rerun picks up from."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    todo = trials(cfg)
    done: dict[int, ExperimentRecord] = {}
    log = None
    if out is not None:
        out = Path(out)
        log = out.with_suffix(".progress.jsonl")
        if resume and log.exists():
            for line in log.read_text().splitlines():
                try:
                    d = json.loads(line)
                except json.JSONDecodeError:
                    continue  # torn final line from an interrupted run
                done[d["index"]] = ExperimentRecord(**d)
        elif log.exists():
            log.unlink()
    pending = [(cfg, i, pt, pipe) for i, pt, pipe in todo if i not in done]
    sink = log.open("a") if log is not None else None
    try:
        if cfg.workers > 1 and len(pending) > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                for rec in pool.map(_run_one, pending):
                    done[rec.index] = _log(sink, rec)
        else:
            for args in pending:
                rec = _run_one(args)
                done[rec.index] = _log(sink, rec)
    finally:
        if sink is not None:
            sink.close()
    records = [done[i] for i, _, _ in todo]
    if out is not None:
        out.with_suffix(".csv").write_text(to_csv(records))
        out.with_suffix(".json").write_text(dumps([_record_dict(r) for r in records]))
    return records


def _log(sink, rec: ExperimentRecord) -> ExperimentRecord:
    if sink is not None:
        sink.write(json.dumps(asdict(rec), sort_keys=True, default=str) + "\n")
        sink.flush()
    return rec


def _record_dict(rec: ExperimentRecord) -> dict:
    d = asdict(rec)
    return {"index": d.pop("index"), **{k: d[k] for k in COLUMNS}}


def to_csv(records: list[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for rec in records:
        w.writerow(rec.row())
    return buf.getvalue()
