"""Command line entry point.

Exit codes: 0 success, 1 input rejected or no structure found, 2 internal error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .absorb import AbsorptionError, SearchBudget, perfect_matching, verify_perfect_matching
from .eprim import HypothesisError
from .hcore import HypergraphError, hole_exact, hole_heuristic
from .htree import TreeError, validate_hypertree
from .lab.experiment import ConfigError, run_experiment
from .lab.generators import MODELS, GeneratorSpec, generate
from .lab.io import dumps, load_graph, load_system, render
from .span import PipelineError, embed_spanning_tree, is_loose_hamilton, loose_hamilton, rainbow_embed

REJECTED = (HypergraphError, HypothesisError, TreeError, ConfigError)
FAILED = (PipelineError, SearchBudget, AbsorptionError)


class Failure(Exception):
    """No structure found; the record is still emitted."""

    def __init__(self, record: dict):
        super().__init__(record.get("error", "failed"))
        self.record = record


def _emit(ctx: click.Context, text: str) -> None:
    out = ctx.obj["out"]
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _record(ctx: click.Context, rec: dict) -> None:
    if ctx.obj["format"] == "txt":
        text = "".join(f"{k}: {json.dumps(v, sort_keys=True, default=str)}\n" for k, v in rec.items())
    else:
        text = dumps(rec)
    _emit(ctx, text)


def _override(ctx: click.Context, param: click.Parameter, value):
    if value is not None:
        ctx.ensure_object(dict)[param.name] = value
    return value


def common(f):
    """Accept the global flags after the subcommand name too."""
    f = click.option("--out", "out", default=None, expose_value=False, callback=_override, hidden=True)(f)
    f = click.option(
        "--format", "format", type=click.Choice(["json", "txt"]), default=None, expose_value=False,
        callback=_override, hidden=True,
    )(f)
    return click.option("--seed", "seed", type=int, default=None, expose_value=False, callback=_override, hidden=True)(f)


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Master seed.")
@click.option("--format", "fmt", type=click.Choice(["json", "txt"]), default="json", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write output here instead of stdout.")
@click.pass_context
def main(ctx: click.Context, seed: int, fmt: str, out: str | None) -> None:
    """Hypergraph matchings, tree embeddings and loose Hamilton cycles."""
    ctx.obj = {"seed": seed, "format": fmt, "out": out}


@main.command()
@common
@click.argument("model", type=click.Choice(MODELS))
@click.option("--n", type=int, required=True)
@click.option("--r", type=int, default=3, show_default=True)
@click.option("--p", type=float, default=0.5, show_default=True)
@click.option("--C", "C", type=float, default=1.0, show_default=True)
@click.option("--delta", type=int, default=3, show_default=True)
@click.option("--t", type=int, default=6, show_default=True)
@click.option("--sizes", type=str, default="", help="Comma-separated part sizes.")
@click.option("--base", type=click.Path(exists=True, dir_okay=False), default=None, help="Host for 'perturbed'.")
@click.pass_context
def gen(ctx, model, n, r, p, C, delta, t, sizes, base):
    """Generate an instance."""
    sz = tuple(int(x) for x in sizes.split(",") if x.strip())
    spec = GeneratorSpec(model, n, r, p, C, delta, t, sz, ctx.obj["seed"], load_graph(base) if base else None)
    g = generate(spec)
    _emit(ctx, render(getattr(g, "graph", g), ctx.obj["format"]))


@main.command()
@common
@click.argument("host", type=click.Path(exists=True, dir_okay=False))
@click.option("--exact/--heuristic", default=True, show_default=True)
@click.option("--max-n", type=int, default=14, show_default=True)
@click.option("--budget", type=int, default=10_000, show_default=True)
@click.option("--disjoint", is_flag=True, help="Require pairwise disjoint sets.")
@click.pass_context
def hole(ctx, host, exact, max_n, budget, disjoint):
    """Bound the hole number of HOST."""
    g = load_graph(host)
    if exact:
        hb = hole_exact(g, max_n=max_n, disjoint=disjoint)
    else:
        hb = hole_heuristic(g, budget=budget, seed=ctx.obj["seed"], disjoint=disjoint)
    _record(ctx, {"lower": hb.lower, "upper": hb.upper, "exact": hb.exact, "certificate": hb.certificate.to_dict()})


@main.command("embed-tree")
@common
@click.argument("host", type=click.Path(exists=True, dir_okay=False))
@click.argument("tree", type=click.Path(exists=True, dir_okay=False))
@click.option("--eps", type=float, default=None, help="Degree density; defaults to the observed one.")
@click.option("--case", type=click.Choice(["auto", "stars", "caterpillars"]), default="auto", show_default=True)
@click.option("--t-practical", type=int, default=6, show_default=True)
@click.option("--strict", is_flag=True, help="Reject hosts below the degree hypothesis.")
@click.pass_context
def embed_tree(ctx, host, tree, eps, case, t_practical, strict):
    """Embed the spanning hypertree TREE into HOST."""
    g = load_graph(host)
    T = validate_hypertree(load_graph(tree))
    try:
        emb = embed_spanning_tree(
            g, T, eps=eps, seed=ctx.obj["seed"], case=case, t_practical=t_practical, strict=strict
        )
    except PipelineError as exc:
        raise Failure({"map": None, "stages": [exc.diagnostics], "reservoir_ledger": [], "error": str(exc)})
    _record(ctx, emb.to_dict())


@main.command()
@common
@click.argument("host", type=click.Path(exists=True, dir_okay=False))
@click.option("--eps", type=float, default=0.3, show_default=True)
@click.option("--strict", is_flag=True)
@click.pass_context
def pm(ctx, host, eps, strict):
    """Find a perfect matching of HOST."""
    g = load_graph(host)
    res = perfect_matching(g, eps=eps, seed=ctx.obj["seed"], strict=strict)
    rec = {
        "map": [list(e) for e in res.matching] if res.matching is not None else None,
        "stages": [{"method": res.method, **res.diagnostics}],
        "reservoir_ledger": [],
    }
    if res.matching is None or not verify_perfect_matching(g, res.matching):
        raise Failure(rec)
    _record(ctx, rec)


@main.command()
@common
@click.argument("host", type=click.Path(exists=True, dir_okay=False))
@click.option("--eps", type=float, default=0.3, show_default=True)
@click.option("--strict", is_flag=True)
@click.pass_context
def hamilton(ctx, host, eps, strict):
    """Find a loose Hamilton cycle of HOST."""
    g = load_graph(host)
    res = loose_hamilton(g, eps=eps, seed=ctx.obj["seed"], strict=strict)
    rec = {
        "map": list(res.cycle.vertices) if res.cycle else None,
        "stages": [{"method": res.method, **res.diagnostics}],
        "reservoir_ledger": [],
    }
    if res.cycle is None or not is_loose_hamilton(g, res.cycle):
        raise Failure(rec)
    _record(ctx, rec)


@main.command()
@common
@click.argument("system", type=click.Path(exists=True, dir_okay=False))
@click.argument("tree", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def rainbow(ctx, system, tree):
    """Find a rainbow copy of TREE in the graph system SYSTEM."""
    graphs = load_system(system)
    T = load_graph(tree)
    try:
        emb = rainbow_embed(graphs, T, seed=ctx.obj["seed"])
    except PipelineError as exc:
        raise Failure({"map": None, "stages": [exc.diagnostics], "reservoir_ledger": [], "error": str(exc)})
    rec = {
        "map": [emb.vertex_map[v] for v in range(T.n)],
        "colors": [emb.colors[e] for e in T.edges],
        "stages": [{"method": emb.method, **emb.diagnostics}],
        "reservoir_ledger": [],
    }
    _record(ctx, rec)


@main.command()
@common
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--workers", type=int, default=None, help="Override the config's worker count.")
@click.option("--fresh", is_flag=True, help="Ignore progress from an earlier run.")
@click.pass_context
def experiment(ctx, config, workers, fresh):
    """Run the sweep described by the JSON file CONFIG.

    With --out PREFIX the tables go to PREFIX.csv and PREFIX.json; otherwise
    the CSV is printed.
    """
    from .lab.experiment import to_csv

    cfg = json.loads(Path(config).read_text())
    if workers is not None:
        cfg["workers"] = workers
    if ctx.obj["out"]:
        run_experiment(cfg, ctx.obj["out"], resume=not fresh)
    else:
        records = run_experiment(cfg)
        click.echo(to_csv(records), nl=False)


def run(argv: list[str] | None = None) -> int:
    try:
        main.main(args=argv, standalone_mode=False)
    except Failure as exc:
        ctx_out = exc.record
        click.echo(dumps(ctx_out), nl=False)
        click.echo(f"error: {exc}", err=True)
        return 1
    except REJECTED as exc:
        click.echo(f"rejected: {exc}", err=True)
        return 1
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.exceptions.Abort:
        return 2
    except FAILED as exc:
        click.echo(f"failed: {exc}", err=True)
        return 1
    except Exception as exc:
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return 2
    return 0


def entry() -> None:
    sys.exit(run())


if __name__ == "__main__":
    entry()
