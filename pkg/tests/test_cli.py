import json

import pytest

from hyperspan.cli import run
from hyperspan.lab.generators import binomial, random_hypertree, random_system
from hyperspan.lab.io import dumps


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, obj in {
        "h12": binomial(3, 12, 0.6, 1),
        "h13": binomial(3, 13, 0.85, 2),
        "t13": random_hypertree(3, 13, 3, 3).graph,
        "sparse": binomial(3, 12, 0.02, 4),
        "t4": random_hypertree(2, 4, 3, 5).graph,
    }.items():
        p = tmp_path / f"{name}.json"
        p.write_text(dumps(obj))
        paths[name] = str(p)
    sys_path = tmp_path / "system.json"
    sys_path.write_text(dumps([g.to_dict() for g in random_system(2, 7, 3, 0.7, 6)]))
    paths["system"] = str(sys_path)
    return paths


def test_gen_and_formats(tmp_path, capsys):
    out = tmp_path / "g.txt"
    assert run(["gen", "gnp", "--n", "6", "--r", "2", "--p", "1", "--format", "txt", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "2 6 15"
    assert run(["--seed", "4", "gen", "random_hypertree", "--n", "9"]) == 0
    assert json.loads(capsys.readouterr().out)["n"] == 9


def test_pm_success_and_failure(files, capsys):
    assert run(["pm", files["h12"]]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert set(rec) == {"map", "stages", "reservoir_ledger"} and len(rec["map"]) == 4
    assert run(["pm", files["sparse"]]) == 1


def test_embed_tree(files, capsys):
    assert run(["--seed", "1", "embed-tree", files["h13"], files["t13"]]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert sorted(rec["map"]) == list(range(13))


def test_hamilton_and_hole(files, capsys):
    assert run(["hamilton", files["h12"]]) == 0
    assert len(json.loads(capsys.readouterr().out)["map"]) == 12
    assert run(["hole", files["h12"], "--format", "txt"]) == 0
    assert "exact: true" in capsys.readouterr().out


def test_rainbow(files, capsys):
    assert run(["rainbow", files["system"], files["t4"]]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert len(set(rec["colors"])) == 3


def test_rejections_exit_one(tmp_path, files):
    bad = tmp_path / "bad.json"
    bad.write_text('{"r": 3, "n": 4, "edges": [[0, 1]]}')
    assert run(["pm", str(bad)]) == 1
    assert run(["hamilton", files["h13"]]) == 1
    assert run(["pm", files["sparse"], "--eps", "0.5", "--strict"]) == 1


def test_usage_error_exits_two(files):
    assert run(["pm"]) == 2
    assert run(["frobnicate"]) == 2


def test_experiment_command(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"grid": {"model": ["gnp"], "n": [9], "r": [3], "p": [0.6]}, "pipelines": ["pm"], "trials": 2}')
    assert run(["experiment", str(cfg)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("model,n,r") and len(lines) == 3
    bad = tmp_path / "bad.json"
    bad.write_text('{"grid": {}}')
    assert run(["experiment", str(bad)]) == 1


def test_outputs_repeat_byte_for_byte(files, capsys):
    for args in (["pm", files["h12"]], ["embed-tree", files["h13"], files["t13"]], ["hamilton", files["h12"]]):
        run(args)
        first = capsys.readouterr().out
        run(args)
        assert capsys.readouterr().out == first
