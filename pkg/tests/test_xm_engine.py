#!/usr/bin/env python3
"""
Unit tests for stream X-machines
"""

import sys
import os
import pytest

# load code living in the parent dir ../src/operasim
THIS_SCRIPT_DIR = os.path.dirname(os.path.realpath(__file__))
SRC_DIR = os.path.realpath(THIS_SCRIPT_DIR + "/../src")
sys.path.append(SRC_DIR)

from operasim.dsl_parser import ModelDocument, parse, parse_file  # noqa: E402
from operasim.errors import MemoryTypeError, NoApplicableFunction, NondeterminismError, ValidationError, XMachineError  # noqa: E402
from operasim.xm_engine import run_model, run_stream, xm_step  # noqa: E402

CORPUS_DIR = os.path.realpath(THIS_SCRIPT_DIR + "/../corpus")


def xm(text: str):
    doc = parse(text)
    assert isinstance(doc, ModelDocument), doc
    return doc.body


PICKY = """
xm picky {
    inputs a b;
    outputs a b;
    states ready;
    initial ready;
    function only_a { guard input == 'a'; }
    transition ready only_a -> ready;
}
"""

AMBIGUOUS = """
xm ambiguous {
    inputs a;
    outputs a;
    states ready;
    initial ready;
    memory n : int = 0;
    function first { update n = n + 1; }
    function second { guard n >= 0; }
    transition ready first -> ready;
    transition ready second -> ready;
}
"""

LATE_AMBIGUITY = """
xm late {
    inputs a b;
    outputs a b;
    states ready busy;
    initial ready;
    function start { guard input == 'a'; }
    function first { guard input == 'b'; }
    function second { guard input != 'a'; }
    transition ready start -> busy;
    transition busy first -> busy;
    transition busy second -> busy;
}
"""

BAD_TYPE = """
xm badtype {
    inputs a;
    outputs a;
    states ready;
    initial ready;
    memory n : int = 0;
    function f { update n = input; }
    transition ready f -> ready;
}
"""


class TestEcho:
    """The echo machine of the corpus"""

    def test_run_stream(self):
        doc = parse_file(os.path.join(CORPUS_DIR, "echo.opml"))
        assert doc.kind == "xm"
        model = doc.body
        assert run_stream(model.machine, model.stream) == ["a", "b", "a", "a", "b"]

    def test_step(self):
        machine = parse_file(os.path.join(CORPUS_DIR, "echo.opml")).body.machine
        state, memory, out = xm_step(machine, "ready", machine.initial_memory(), "b")
        assert state == "ready"
        assert out == "b"
        assert memory == {"count": 1, "seen": ("b",)}

    def test_run_model_stops_at_stream_end(self):
        model = parse_file(os.path.join(CORPUS_DIR, "echo.opml")).body
        trace = run_model(model, steps=10, seed=0)
        assert trace.terminal["status"] == "halted"
        assert trace.terminal["step"] == 5
        last = trace.snapshots[-1]["machines"][0]
        assert last["memory"] == {"count": 5, "seen": ["a", "b", "a", "a", "b"]}
        assert last["fired"] == "echo"
        assert last["output"] == "b"

    def test_run_model_completes(self):
        model = parse_file(os.path.join(CORPUS_DIR, "echo.opml")).body
        trace = run_model(model, steps=2, seed=0)
        assert trace.terminal == {"v": 1, "record": "terminal", "status": "completed", "steps": 2}
        assert len(trace.snapshots) == 3


class TestFailures:
    """Rejection, nondeterminism and type errors"""

    def test_rejection_carries_position_and_outputs(self):
        model = xm(PICKY)
        with pytest.raises(NoApplicableFunction) as info:
            run_stream(model.machine, ["a", "a", "b", "a"])
        assert info.value.input_index == 2
        assert info.value.partial_outputs == ["a", "a"]
        assert info.value.state == "ready"
        assert info.value.machine == "picky"

    def test_rejection_halts_run(self):
        model = xm(PICKY.replace("initial ready;", "initial ready;\n    stream a b a;"))
        trace = run_model(model, steps=5, seed=0)
        assert trace.terminal["status"] == "halted"
        assert trace.terminal["step"] == 1

    def test_nondeterminism_is_reported(self):
        model = xm(AMBIGUOUS)
        with pytest.raises(NondeterminismError) as info:
            run_stream(model.machine, ["a"])
        assert info.value.functions == ["first", "second"]
        assert info.value.state == "ready"
        assert info.value.input_index == 0

    def test_nondeterminism_after_some_inputs(self):
        model = xm(LATE_AMBIGUITY)
        with pytest.raises(NondeterminismError) as info:
            run_stream(model.machine, ["a", "b", "a"])
        assert info.value.functions == ["first", "second"]
        assert info.value.state == "busy"
        assert info.value.input_value == "b"
        assert info.value.input_index == 1
        assert info.value.partial_outputs == ["a"]
        assert info.value.machine == "late"

    def test_memory_type_is_enforced(self):
        model = xm(BAD_TYPE)
        with pytest.raises(MemoryTypeError):
            run_stream(model.machine, ["a"])

    def test_invalid_model_is_not_run(self):
        model = xm(PICKY)
        broken = type(model)(model.machine, ("c",))
        with pytest.raises(ValidationError):
            run_model(broken, steps=1, seed=0)

    def test_unknown_input(self):
        model = xm(PICKY)
        with pytest.raises(XMachineError) as info:
            run_stream(model.machine, ["z"])
        assert info.value.input_index == 0
