#!/usr/bin/env python3
"""
Unit tests for the built-in model builders: tumour growth, ant colony and food exchange
"""

import sys
import os
import pytest

# load code living in the parent dir ../src/operasim
THIS_SCRIPT_DIR = os.path.dirname(os.path.realpath(__file__))
SRC_DIR = os.path.realpath(THIS_SCRIPT_DIR + "/../src")
sys.path.append(SRC_DIR)

from operasim.dsl_parser import ModelDocument, parse  # noqa: E402
from operasim.dsl_printer import print_body  # noqa: E402
from operasim.errors import ParameterError  # noqa: E402
from operasim.models import (  # noqa: E402
    ANT,
    FOOD,
    LCG_MODULUS,
    NEST_EXIT,
    SHARE_CHANNEL,
    build_ants,
    build_food_exchange,
    build_tumour,
    cell_age,
    mt,
    tr,
)
from operasim.multiset import Multiset  # noqa: E402
from operasim.pps_model import Die, Differentiate, Divide, Transform  # noqa: E402


def errors(model) -> list[str]:
    return [p.code for p in model.problems() if p.code.startswith("E-")]


class TestTumour:
    @pytest.mark.parametrize(
        "t_mat, d_t, d_m",
        [
            (3, 6, 3),  # t_mat must be below d_m
            (3, 4, 4),  # d_m must be below d_t
            (0, 6, 4),
            (3, 6, -1),
        ],
    )
    def test_bad_parameters(self, t_mat, d_t, d_m):
        with pytest.raises(ParameterError):
            build_tumour(t_mat, d_t, d_m)

    def test_default_model(self):
        model = build_tumour()
        assert errors(model) == []
        assert len(model.rules) == 15
        assert len(model.alphabet) == 16
        assert model.initial_cells == ((Multiset({"s": 1}), "stem"),)

    def test_rule_shapes_follow_ages(self):
        model = build_tumour(2, 5, 4)
        assert errors(model) == []
        kinds = {type(r) for r in model.rules if r.consumed == tr(1)}
        assert kinds == {Divide}
        assert Transform(tr(2), Multiset({tr(3): 1, "age": 1}), "transitory") in model.rules
        assert Die(tr(5), "transitory") in model.rules
        assert Differentiate(mt(2), Multiset({mt(3): 1, "age": 1}), "transitory", "metatransitory") in model.rules
        assert Die(mt(4), "metatransitory") in model.rules

    def test_cell_age(self):
        assert cell_age(Multiset({"age": 3, tr(3): 1})) == 3
        assert cell_age(Multiset({"s": 1})) == 0


class TestAnts:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"width": 0},
            {"height": -2},
            {"threshold": 0},
            {"n_ants": -1},
            {"max_initial_food": -1},
            {"food_sources": ((10, 3, 5),)},
            {"food_sources": ((3, 3, 0),)},
            {"nest_exit": (0, 10)},
        ],
    )
    def test_bad_parameters(self, kwargs):
        with pytest.raises(ParameterError):
            build_ants(**kwargs)

    def test_default_model(self):
        model = build_ants()
        assert errors(model) == []
        assert len(model.agents) == 4
        assert (model.width, model.height) == (10, 10)
        assert (0, 0, Multiset({NEST_EXIT: 1})) in model.places
        assert (7, 7, Multiset({FOOD: 10})) in model.places
        for decl in model.agents:
            assert decl.agent_type == ANT
            memory = {name: expr.value for name, expr in decl.memory}
            assert 0 <= memory["x"] < 10 and 0 <= memory["y"] < 10
            assert 0 <= memory["food"] <= 10
            assert 1 <= memory["walk"] < LCG_MODULUS

    def test_same_seed_same_colony(self):
        assert build_ants(seed=7) == build_ants(seed=7)

    def test_minimal_colony(self):
        model = build_ants(1, food_sources=(), nest_exit=None)
        assert len(model.agents) == 1
        assert model.places == ()
        assert model.links == ()
        assert errors(model) == []

    def test_prints_as_valid_source(self):
        model = build_ants(seed=3)
        doc = parse(print_body(model))
        assert isinstance(doc, ModelDocument), doc
        assert doc.body == model


class TestFoodExchange:
    @pytest.mark.parametrize("args", [(10, 2, 0), (-1, 2, 5), (10, -2, 5), (10, 2, 5, -1)])
    def test_bad_parameters(self, args):
        with pytest.raises(ParameterError):
            build_food_exchange(*args)

    def test_default_model(self):
        model = build_food_exchange()
        assert errors(model) == []
        assert [ch.name for ch in model.channels] == [SHARE_CHANNEL]
        assert [inst.stream for inst in model.instances] == [("tick",) * 3] * 2

    def test_prints_as_valid_source(self):
        model = build_food_exchange(12, 0, 4, 5)
        doc = parse(print_body(model))
        assert isinstance(doc, ModelDocument), doc
        assert doc.body == model
