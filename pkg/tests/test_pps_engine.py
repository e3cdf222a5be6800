#!/usr/bin/env python3
"""
Unit tests for the Population P System engine

Tests cover rule applicability, maximal and arbitrary parallel selection,
structural rules, bond graph maintenance and the reference tumour model.
"""

import sys
import os
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

# load code living in the parent dir ../src/operasim
THIS_SCRIPT_DIR = os.path.dirname(os.path.realpath(__file__))
SRC_DIR = os.path.realpath(THIS_SCRIPT_DIR + "/../src")
sys.path.append(SRC_DIR)

from operasim.errors import UnknownCellError, ValidationError  # noqa: E402
from operasim.models import META, STEM, TRANSITORY, METATRANSITORY, build_tumour, cell_age  # noqa: E402
from operasim.multiset import EMPTY, Multiset  # noqa: E402
from operasim.pps_engine import PpsEngine, RuleInstance, run  # noqa: E402
from operasim.pps_model import (  # noqa: E402
    BondMakingRule,
    BondMode,
    CommEnter,
    CommExit,
    CommIn,
    Die,
    Differentiate,
    Divide,
    PpsModel,
    StepMode,
    Transform,
    bond,
)
from operasim.seeded_rng import SeededRng  # noqa: E402

SYMBOLS = ("a", "b", "c")
TYPES = ("t", "u")


def ms(**counts) -> Multiset:
    return Multiset(counts)


def model(cells, rules, bonds=(), env=EMPTY, bond_rules=()) -> PpsModel:
    return PpsModel(
        alphabet=frozenset(SYMBOLS),
        cell_types=frozenset(TYPES),
        initial_cells=tuple(cells),
        rules=tuple(rules),
        bond_rules=tuple(bond_rules),
        initial_graph=frozenset(bonds),
        env_init=env,
    )


#
# random models
#

symbols = st.sampled_from(SYMBOLS)
types = st.sampled_from(TYPES)
products = st.lists(symbols, min_size=1, max_size=3).map(Multiset.from_symbols)
contents = st.dictionaries(symbols, st.integers(min_value=0, max_value=3)).map(Multiset)

communication_rules = st.one_of(
    st.builds(CommIn, st.none() | symbols, symbols, types),
    st.builds(CommEnter, st.none() | symbols, symbols, types),
    st.builds(CommExit, symbols, types),
)
any_rules = st.one_of(
    communication_rules,
    st.builds(Transform, symbols, products, types),
    st.builds(Differentiate, symbols, products, types, types),
    st.builds(Divide, symbols, products, products, types, st.none() | types),
    st.builds(Die, symbols, types),
)


@st.composite
def pps_models(draw, rules=any_rules):
    n = draw(st.integers(min_value=1, max_value=4))
    cells = [(draw(contents), draw(types)) for _ in range(n)]
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    bonds = draw(st.sets(st.sampled_from(pairs))) if pairs else set()
    return model(cells, draw(st.lists(rules, max_size=6)), bonds, draw(contents))


def _charge(rule, inst):
    if isinstance(rule, CommIn):
        return inst.source_id, rule.moved
    if isinstance(rule, CommEnter):
        return None, rule.moved
    if isinstance(rule, CommExit):
        return inst.cell_id, rule.moved
    return inst.cell_id, rule.consumed


def _every_grounded_instance(m, config):
    # every (cell, rule, source) whose type and promoter match the pre-step configuration
    out = []
    for cid, cell in config.cells.items():
        for idx, rule in enumerate(m.rules):
            if rule.cell_type != cell.cell_type:
                continue
            trigger = getattr(rule, "trigger", None)
            if trigger is not None and cell.contents.count(trigger) == 0:
                continue
            if isinstance(rule, CommIn):
                out.extend(RuleInstance(cid, idx, n) for n in config.cells if n != cid and bond(cid, n) in config.bonds)
            else:
                out.append(RuleInstance(cid, idx))
    return out


class TestSelection:
    """Maximal and arbitrary parallelism"""

    @settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(pps_models(), st.integers(min_value=0, max_value=2**32))
    def test_maximal_selection_leaves_nothing_applicable(self, m, seed):
        engine = PpsEngine(m)
        config = m.initial_configuration()
        selection = engine.select_step(config, SeededRng(seed))

        pools = {cid: c.contents.to_dict() for cid, c in config.cells.items()}
        pools[None] = config.environment.to_dict()
        locked, busy = set(), set()
        for inst in selection.instances:
            rule = m.rules[inst.rule_index]
            assert inst.cell_id not in locked
            if rule.structural:
                assert inst.cell_id not in busy
                locked.add(inst.cell_id)
            busy.add(inst.cell_id)
            owner, sym = _charge(rule, inst)
            pools[owner][sym] = pools[owner].get(sym, 0) - 1
            assert pools[owner][sym] >= 0

        grounded = _every_grounded_instance(m, config)
        assert set(selection.instances) <= set(grounded)
        for inst in grounded:
            rule = m.rules[inst.rule_index]
            owner, sym = _charge(rule, inst)
            assert (
                inst.cell_id in locked
                or (rule.structural and inst.cell_id in busy)
                or pools[owner].get(sym, 0) == 0
            ), f"{inst} could still be added to {selection}"

    @settings(max_examples=200, deadline=None)
    @given(pps_models(), st.integers(min_value=0, max_value=2**32))
    def test_arbitrary_selection_is_never_empty_when_something_applies(self, m, seed):
        engine = PpsEngine(m, StepMode.ARBITRARY)
        config = m.initial_configuration()
        applicable = [i for cid in config.cells for i in engine.applicable_instances(config, cid)]
        selection = engine.select_step(config, SeededRng(seed))
        assert selection.is_empty() == (not applicable)

    def test_multiplicity(self):
        m = model([(ms(a=3), "t")], [Transform("a", ms(b=1), "t")])
        config = PpsEngine(m).configurations(1, seed=0)[-1]
        assert config.cells[1].contents == ms(b=3)

    def test_same_seed_same_run(self):
        m = build_tumour()
        assert run(m, 8, seed=42).to_jsonl() == run(m, 8, seed=42).to_jsonl()

    def test_unknown_cell(self):
        engine = PpsEngine(model([(ms(a=1), "t")], []))
        with pytest.raises(UnknownCellError):
            engine.applicable_instances(engine.model.initial_configuration(), 7)


class TestConservation:
    """Communication rules only move objects around"""

    @settings(max_examples=200, deadline=None)
    @given(pps_models(rules=communication_rules), st.integers(min_value=0, max_value=2**32))
    def test_total_objects_are_conserved(self, m, seed):
        configs = PpsEngine(m).configurations(20, seed)
        total = configs[0].total_objects()
        for config in configs[1:]:
            assert config.total_objects() == total

    def test_promoter_is_not_consumed(self):
        m = model([(ms(a=1), "t")], [CommEnter("a", "b", "t")], env=ms(b=2))
        config = PpsEngine(m).configurations(1, seed=0)[-1]
        assert config.cells[1].contents == ms(a=1, b=2)
        assert config.environment == EMPTY

    def test_in_pulls_from_bonded_neighbours_only(self):
        m = model([(EMPTY, "t"), (ms(b=1), "u"), (ms(b=1), "u")], [CommIn(None, "b", "t")], bonds=[(1, 2)])
        config = PpsEngine(m).configurations(1, seed=0)[-1]
        assert config.cells[1].contents == ms(b=1)
        assert config.cells[2].contents == EMPTY
        assert config.cells[3].contents == ms(b=1)


class TestStructuralRules:
    """Division, differentiation and death"""

    def test_divide(self):
        m = model([(ms(a=1, c=2), "t")], [Divide("a", ms(b=1), ms(c=1), "t", "u")])
        config = PpsEngine(m).configurations(1, seed=0)[-1]
        assert sorted(config.cells) == [2, 3]
        assert config.cells[2].cell_type == "t"
        assert config.cells[2].contents == ms(b=1, c=2)
        assert config.cells[3].cell_type == "u"
        assert config.cells[3].contents == ms(c=3)
        assert config.next_id == 4

    def test_differentiate_keeps_identity(self):
        m = model([(ms(a=1, b=1), "t")], [Differentiate("a", ms(c=1), "t", "u")])
        config = PpsEngine(m).configurations(1, seed=0)[-1]
        assert config.cells[1].cell_type == "u"
        assert config.cells[1].contents == ms(b=1, c=1)

    @pytest.mark.parametrize("releases, expected", [(False, EMPTY), (True, ms(b=2))])
    def test_death(self, releases, expected):
        m = model([(ms(a=1, b=2), "t")], [Die("a", "t")])
        trace = PpsEngine(m, death_releases_objects=releases).run(3, seed=0)
        last = trace.snapshots[-1]
        assert last["cells"] == []
        assert Multiset(last["environment"]) == expected
        assert trace.terminal == {"v": 1, "record": "terminal", "status": "halted", "step": 1}
        assert trace.header["death_releases_objects"] is releases

    def test_structural_rule_excludes_other_rules(self):
        m = model([(ms(a=1, b=1), "t")], [Die("a", "t"), Transform("b", ms(c=1), "t")])
        engine = PpsEngine(m)
        for seed in range(20):
            selection = engine.select_step(m.initial_configuration(), SeededRng(seed))
            assert len(selection) == 1


class TestBonds:
    """Static inheritance and dynamic recomputation"""

    def test_static_bonds_are_inherited_by_daughters(self):
        m = model([(ms(a=1), "t"), (EMPTY, "u")], [Divide("a", ms(b=1), ms(c=1), "t")], bonds=[(1, 2)])
        engine = PpsEngine(m, bonds=BondMode.STATIC)
        config = engine.configurations(1, seed=0)[-1]
        assert config.bonds == frozenset({(2, 3), (2, 4)})

    def test_static_bonds_of_dead_cells_are_pruned(self):
        m = model([(ms(a=1), "t"), (EMPTY, "u")], [Die("a", "t")], bonds=[(1, 2)])
        config = PpsEngine(m).configurations(1, seed=0)[-1]
        assert config.bonds == frozenset()

    def test_auto_mode(self):
        rule = BondMakingRule("t", ms(a=1), EMPTY, "u")
        assert model([], [], bond_rules=[rule]).effective_bond_mode() is BondMode.DYNAMIC
        assert model([], []).effective_bond_mode() is BondMode.STATIC
        assert model([], []).effective_bond_mode(BondMode.DYNAMIC) is BondMode.DYNAMIC

    def test_dynamic_bonds_follow_contents(self):
        rule = BondMakingRule("t", ms(a=1), EMPTY, "u")
        m = model([(ms(a=1), "t"), (EMPTY, "u"), (EMPTY, "t")], [CommExit("a", "t")], bond_rules=[rule])
        engine = PpsEngine(m)
        assert engine.recompute_bonds(m.initial_configuration()).bonds == frozenset({(1, 2)})
        # once 'a' has left cell 1 the bond is gone
        config = engine.configurations(1, seed=0)[-1]
        assert config.bonds == frozenset()

    def test_bad_initial_graph(self):
        with pytest.raises(ValidationError):
            PpsEngine(model([(EMPTY, "t")], [], bonds=[(1, 2)]))


class TestTumour:
    """The reference tumour growth model"""

    def test_population_doubles_while_no_cell_is_mature(self):
        engine = PpsEngine(build_tumour(11, 14, 13))
        for seed in range(5):
            configs = engine.configurations(10, seed)
            assert [len(c.cells) for c in configs] == [2**t for t in range(11)]

    @pytest.mark.parametrize("seed", range(20))
    def test_stem_cells_persist_and_others_die_on_time(self, seed):
        engine = PpsEngine(build_tumour())
        previous_stems = 1
        for config in engine.configurations(30, seed):
            stems = [c for c in config.cells.values() if c.cell_type == STEM]
            assert len(stems) >= previous_stems
            previous_stems = len(stems)
            assert sum(c.contents.count("s") for c in stems) == 1
            for c in config.cells.values():
                if c.cell_type == STEM:
                    assert cell_age(c.contents) == 0
                elif c.contents.count(META):
                    assert c.cell_type in (TRANSITORY, METATRANSITORY)
                    assert cell_age(c.contents) <= 4
                else:
                    assert c.cell_type == TRANSITORY
                    assert cell_age(c.contents) <= 6
