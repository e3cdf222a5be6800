#!/usr/bin/env python3
"""
Unit tests for communicating X-machine systems
"""

import sys
import os
import pytest

# load code living in the parent dir ../src/operasim
THIS_SCRIPT_DIR = os.path.dirname(os.path.realpath(__file__))
SRC_DIR = os.path.realpath(THIS_SCRIPT_DIR + "/../src")
sys.path.append(SRC_DIR)

from operasim.cxm_system import CxmSystem, cxm_step, run  # noqa: E402
from operasim.dsl_parser import ModelDocument, parse  # noqa: E402
from operasim.errors import NondeterminismError, ValidationError  # noqa: E402
from operasim.models import build_food_exchange  # noqa: E402


JAM = """
cxm jam {
    machine source {
        inputs t;
        outputs t;
        states q;
        initial q;
        function send to channel c { output 1; }
        transition q send -> q;
    }
    machine sink {
        inputs t;
        outputs t;
        states q;
        initial q;
        function idle { }
        transition q idle -> q;
    }
    instance producer : source { stream t t t; }
    instance consumer : sink { stream t t t; }
    channel c : producer -> consumer;
}
"""


def machines_by_id(snapshot):
    return {m["id"]: m for m in snapshot["machines"]}


class TestFoodExchange:
    """Two ants sharing food over a one-place channel"""

    def test_rounds(self):
        trace = run(build_food_exchange(), steps=10, seed=0)
        rounds = [machines_by_id(s) for s in trace.snapshots]
        buffers = [s["channels"][0]["buffer"] for s in trace.snapshots]

        assert [r["giver"]["memory"]["food"] for r in rounds] == [10, 5, 5, 5, 5]
        assert [r["taker"]["memory"]["food"] for r in rounds] == [2, 2, 7, 7, 7]
        assert [r["giver"]["fired"] for r in rounds] == [None, "giveFood", "rest", "rest", None]
        assert [r["taker"]["fired"] for r in rounds] == [None, "wake", "takeEnoughFood", "settle", "rest"]
        assert [r["taker"]["state"] for r in rounds] == ["inactive", "active", "active", "inactive", "inactive"]
        assert rounds[4]["giver"]["idle"] == "stream-exhausted"
        assert buffers == [None, 5, None, None, None]
        assert trace.terminal == {"v": 1, "record": "terminal", "status": "halted", "step": 4}

    def test_message_is_read_one_round_later(self):
        system = CxmSystem.from_model(build_food_exchange())
        first = cxm_step(system)
        taker = first.machines[1]
        assert taker.memory["food"] == 2
        assert first.channels[0].buffer == 5

    def test_full_buffer_blocks_writer(self):
        doc = parse(JAM)
        assert isinstance(doc, ModelDocument), doc
        trace = run(doc.body, steps=5, seed=0)
        producer = [machines_by_id(s)["producer"] for s in trace.snapshots]
        assert producer[1]["fired"] == "send"
        assert [p["idle"] for p in producer[2:]] == ["blocked-write", "blocked-write"]
        assert [s["channels"][0]["buffer"] for s in trace.snapshots] == [None, 1, 1, 1]
        assert trace.terminal["step"] == 3


MISWIRED = """
cxm miswired {
    machine m {
        inputs t;
        outputs t;
        states q;
        initial q;
        function send to channel c { }
        transition q send -> q;
    }
    instance one : m { stream t; }
    instance two : m { stream t; }
    channel c : one -> two;
}
"""


class TestValidation:
    """Static checks on channel wiring"""

    def test_writer_must_be_sender(self):
        result = parse(MISWIRED)
        assert not isinstance(result, ModelDocument)
        assert "E-BAD-PORT" in [d.code for d in result]

    def test_engine_refuses_invalid_model(self):
        good = build_food_exchange()
        bad = type(good)(good.machines, good.instances[:1], good.channels)
        with pytest.raises(ValidationError):
            run(bad, steps=1, seed=0)


OVERLAP = """
cxm overlap {
    machine source {
        inputs t;
        outputs t;
        states q;
        initial q;
        function send to channel c { output 1; }
        transition q send -> q;
    }
    machine sink {
        inputs t;
        outputs t;
        states q;
        initial q;
        function r from channel c { output 't'; }
        function s { output 't'; }
        transition q r -> q;
        transition q s -> q;
    }
    instance producer : source { stream t t; }
    instance consumer : sink { stream t t t; }
    channel c : producer -> consumer;
}
"""


class TestDeterminism:
    """Channel and stream functions compete for the same round"""

    def test_channel_and_stream_function_both_enabled(self):
        doc = parse(OVERLAP)
        assert isinstance(doc, ModelDocument), doc
        system = cxm_step(CxmSystem.from_model(doc.body))
        assert system.machine("consumer").position == 1
        assert system.channel("c").buffer == 1
        with pytest.raises(NondeterminismError) as e:
            cxm_step(system)
        assert sorted(e.value.functions) == ["r", "s"]
        assert e.value.state == "q"
        assert e.value.machine == "consumer"

    def test_channel_function_alone_fires(self):
        doc = parse(OVERLAP.replace("stream t t t;", "stream t;"))
        assert isinstance(doc, ModelDocument), doc
        system = cxm_step(CxmSystem.from_model(doc.body))
        second = cxm_step(system)
        consumer = {a.machine: a for a in second.last_round}["consumer"]
        assert consumer.fired == "r"
        assert second.channel("c").buffer is None
