#!/usr/bin/env python3
"""
End-to-end tests of the operasim command line: run, check, stats and replay
"""

import sys
import os
import io
import json
import pytest

# load code living in the parent dir ../src/operasim
THIS_SCRIPT_DIR = os.path.dirname(os.path.realpath(__file__))
SRC_DIR = os.path.realpath(THIS_SCRIPT_DIR + "/../src")
sys.path.append(SRC_DIR)

from operasim.dsl_parser import parse_file  # noqa: E402
from operasim.main import main  # noqa: E402
from operasim.operasim_app import run_document  # noqa: E402
from operasim.trace import read_jsonl  # noqa: E402
from operasim.trace_stats import ENV_CELLS_TOTAL, stats_frame  # noqa: E402

CORPUS_DIR = os.path.realpath(THIS_SCRIPT_DIR + "/../corpus")
GOLDEN_DIR = os.path.join(THIS_SCRIPT_DIR, "golden")

NONDETERMINISTIC_XM = """
xm twice {
    inputs a;
    outputs a;
    states q;
    initial q;
    function f { }
    function g { }
    transition q f -> q;
    transition q g -> q;
    stream a;
}
"""


def corpus(name: str) -> str:
    return os.path.join(CORPUS_DIR, name)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "operasim.yaml"
    path.write_text("run:\n  format: jsonl\nlimits:\n  max_steps: 50\n")
    return str(path)


@pytest.fixture
def cli(config_file, capsys):
    """
    Runs the CLI with the test configuration and returns (exit code, stdout, stderr).
    """

    def invoke(*args: str):
        code = main(["--config", config_file, *args])
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return invoke


def run_to_file(cli, tmp_path, model: str, *args: str) -> str:
    out = str(tmp_path / (os.path.basename(model) + ".jsonl"))
    code, _, err = cli("run", model, "--out", out, *args)
    assert code == 0, err
    return out


def read_trace(path: str):
    with open(path, encoding="utf-8") as f:
        return read_jsonl(f)


class TestUsage:
    def test_no_command(self, capsys):
        assert main([]) == 1

    def test_missing_argument(self, capsys):
        assert main(["run"]) == 1

    def test_unknown_option(self, cli):
        code, _, err = cli("run", corpus("tumour.opml"), "--turbo")
        assert code == 1
        assert "unrecognized arguments" in err

    def test_version(self, capsys):
        assert main(["-V"]) == 0
        assert capsys.readouterr().out.startswith("Version: ")

    def test_missing_config(self, tmp_path, capsys):
        assert main(["--config", str(tmp_path / "nope.yaml"), "check", corpus("tumour.opml")]) == 1
        assert "Cannot load configuration" in capsys.readouterr().err


class TestCheck:
    def test_ok(self, cli):
        code, out, _ = cli("check", corpus("tumour.opml"))
        assert code == 0
        assert out.strip().endswith("ok (pps model)")

    def test_missing_file(self, cli, tmp_path):
        code, _, err = cli("check", str(tmp_path / "absent.opml"))
        assert code == 1
        assert "error E-IO" in err

    def test_syntax_error_is_located(self, cli, tmp_path):
        path = tmp_path / "bad.opml"
        path.write_text("pps {\n  alphabet a\n}\n")
        code, _, err = cli("check", str(path))
        assert code == 1
        assert err.startswith(f"{path}:3:1: error E-SYNTAX:")


class TestRun:
    def test_jsonl_to_stdout(self, cli):
        code, out, _ = cli("run", corpus("tumour.opml"), "--steps", "3")
        assert code == 0
        lines = out.splitlines()
        assert len(lines) == 6
        records = [json.loads(line) for line in lines]
        assert records[0]["record"] == "header"
        assert records[0]["kind"] == "pps"
        assert records[0]["rng"] == "PCG64"
        assert [r["step"] for r in records[1:5]] == [0, 1, 2, 3]
        assert records[-1] == {"v": 1, "record": "terminal", "status": "completed", "steps": 3}

    def test_text_format(self, cli):
        code, out, _ = cli("run", corpus("diffusion.opml"), "--steps", "2", "--format", "text")
        assert code == 0
        assert "== step 0 ==" in out
        assert "== step 2 ==" in out
        assert out.rstrip().endswith("# completed after 2 steps")

    def test_same_seed_same_trace(self, cli):
        runs = [cli("run", corpus("tumour.opml"), "--steps", "6", "--seed", "42")[1] for _ in range(2)]
        assert runs[0] == runs[1]

    def test_steps_above_limit(self, cli):
        code, _, err = cli("run", corpus("tumour.opml"), "--steps", "51")
        assert code == 1
        assert "exceeds the limit" in err

    def test_stream_machine_halts_at_stream_end(self, cli, tmp_path):
        trace = read_trace(run_to_file(cli, tmp_path, corpus("echo.opml"), "--steps", "10"))
        assert trace.terminal == {"v": 1, "record": "terminal", "status": "halted", "step": 5}
        last = trace.snapshots[-1]["machines"][0]
        assert last["state"] == "ready"
        assert last["memory"]["count"] == 5

    def test_nondeterministic_machine_is_a_runtime_error(self, cli, tmp_path):
        path = tmp_path / "twice.opml"
        path.write_text(NONDETERMINISTIC_XM)
        code, _, err = cli("run", str(path), "--steps", "1")
        assert code == 2
        assert "NondeterminismError" in err


class TestStats:
    def test_diffusion_conserves_objects(self, cli, tmp_path):
        trace_file = run_to_file(cli, tmp_path, corpus("diffusion.opml"), "--steps", "5")
        frame = stats_frame(read_trace(trace_file))
        assert list(frame.columns) == ["step", "pop:c", "population", "env:a", "env:b", "edges", "components", ENV_CELLS_TOTAL]
        assert list(frame["step"]) == [0, 1, 2, 3, 4, 5]
        assert set(frame[ENV_CELLS_TOTAL]) == {10}
        assert set(frame["population"]) == {3}

    def test_csv(self, cli, tmp_path):
        trace_file = run_to_file(cli, tmp_path, corpus("tumour.opml"), "--steps", "2")
        code, out, _ = cli("stats", trace_file, "--csv")
        assert code == 0
        lines = out.splitlines()
        assert lines[0].split(",")[0] == "step"
        assert lines[1].split(",")[0] == "0"
        assert len(lines) == 4

    def test_zero_steps_gives_the_initial_row(self, cli, tmp_path):
        trace_file = run_to_file(cli, tmp_path, corpus("tumour.opml"), "--steps", "0")
        frame = stats_frame(read_trace(trace_file))
        assert len(frame) == 1
        assert frame["pop:stem"].tolist() == [1]

    def test_proliferating_cells_from_type_columns(self, cli, tmp_path):
        trace = read_trace(run_to_file(cli, tmp_path, corpus("tumour.opml"), "--steps", "10"))
        frame = stats_frame(trace)
        proliferating = frame["pop:stem"] + frame.get("pop:transitory", 0)
        expected = [sum(1 for c in s["cells"] if c["type"] in ("stem", "transitory")) for s in trace.snapshots]
        assert proliferating.tolist() == expected
        assert (frame["population"] >= proliferating).all()

    def test_malformed_trace(self, cli, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"v":1,"record":"snapshot","step":0}\n')
        code, _, _ = cli("stats", str(path))
        assert code == 1


class TestReplay:
    def test_identical(self, cli, tmp_path):
        trace_file = run_to_file(cli, tmp_path, corpus("tumour.opml"), "--steps", "4", "--seed", "9")
        code, out, _ = cli("replay", trace_file, corpus("tumour.opml"))
        assert code == 0
        assert "replay identical" in out

    def test_identical_operas(self, cli, tmp_path):
        trace_file = run_to_file(cli, tmp_path, corpus("ants.opml"), "--steps", "3")
        code, _, err = cli("replay", trace_file, corpus("ants.opml"))
        assert code == 0, err

    def test_tampered_snapshot(self, cli, tmp_path):
        trace_file = run_to_file(cli, tmp_path, corpus("tumour.opml"), "--steps", "3")
        with open(trace_file, encoding="utf-8") as f:
            lines = f.readlines()
        record = json.loads(lines[2])
        record["cells"] = []
        lines[2] = json.dumps(record) + "\n"
        with open(trace_file, "w", encoding="utf-8") as f:
            f.writelines(lines)
        code, _, err = cli("replay", trace_file, corpus("tumour.opml"))
        assert code == 2
        assert ":3: error E-DIVERGED" in err

    def test_different_model(self, cli, tmp_path):
        trace_file = run_to_file(cli, tmp_path, corpus("tumour.opml"), "--steps", "2")
        code, _, err = cli("replay", trace_file, corpus("diffusion.opml"))
        assert code == 1
        assert "E-DIGEST" in err


def test_text_and_jsonl_agree(cli, tmp_path):
    trace = read_trace(run_to_file(cli, tmp_path, corpus("food_exchange.opml"), "--steps", "3"))
    _, text, _ = cli("run", corpus("food_exchange.opml"), "--steps", "3", "--format", "text")
    assert text == trace.to_text()
    buf = io.StringIO(trace.to_jsonl())
    assert read_jsonl(buf).records() == trace.records()


def _comparable(jsonl: str) -> list[dict]:
    records = [json.loads(line) for line in jsonl.splitlines() if line.strip()]
    for r in records:
        r.pop("version", None)
    return records


@pytest.mark.parametrize("name", ["echo", "food_exchange"])
def test_golden_trace(name):
    """
    Seed 42, 10 steps against the committed trace under tests/golden.
    """
    doc = parse_file(corpus(f"{name}.opml"))
    trace = run_document(doc, steps=10, seed=42).to_jsonl()
    golden = os.path.join(GOLDEN_DIR, f"{name}.jsonl")
    assert os.path.exists(golden), f"missing golden trace {golden}"
    with open(golden, encoding="utf-8") as f:
        assert _comparable(trace) == _comparable(f.read())
