"""Reading and writing instances in the JSON and plain-text formats."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Any

from ..hcore import HypergraphError, RGraph, from_dict, validate


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, no whitespace variance, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":")) + "\n"


def _plain(obj: Any) -> Any:
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_plain(v) for v in obj)
    if hasattr(obj, "item"):  # numpy scalars
        return obj.item()
    return obj


def to_text(g: RGraph) -> str:
    lines = [f"{g.r} {g.n} {g.m}"]
    lines += [" ".join(map(str, e)) for e in g.edges]
    return "\n".join(lines) + "\n"


def from_text(text: str) -> RGraph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows or len(rows[0]) != 3:
        raise HypergraphError("text format needs a header line 'r n m'")
    r, n, m = map(int, rows[0])
    if len(rows) - 1 != m:
        raise HypergraphError(f"header announces {m} edges, found {len(rows) - 1}")
    return validate(r, n, [[int(x) for x in row] for row in rows[1:]])


def parse_graph(text: str) -> RGraph:
    s = text.lstrip()
    if s.startswith("{"):
        return from_dict(json.loads(s))
    return from_text(text)


def load_graph(path: str | Path) -> RGraph:
    return parse_graph(Path(path).read_text())


def load_system(path: str | Path) -> list[RGraph]:
    """A list of graphs, either bare or under a ``graphs`` key."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get("graphs")
    if not isinstance(data, list) or not data:
        raise HypergraphError("system file must hold a non-empty list of graphs")
    return [from_dict(d) for d in data]


def render(g: RGraph, fmt: str) -> str:
    if fmt == "txt":
        return to_text(g)
    return dumps(g)
