"""
pps_engine.py
----------------
Interpreter for Population P Systems with active cells
Copyright (C) 2026 operasim contributors

Licensed under the GNU GENERAL PUBLIC LICENSE, Version 3 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    https://www.gnu.org/licenses/gpl-3.0.html

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable

from .errors import InternalError, UnderflowError, UnknownCellError, ValidationError
from .multiset import Multiset
from .pps_model import (
    BondMode,
    Cell,
    CommEnter,
    CommExit,
    CommIn,
    Configuration,
    Die,
    Differentiate,
    Divide,
    PpsModel,
    StepMode,
    Transform,
    bond,
)
from .seeded_rng import SeededRng
from .trace import Trace, make_header, model_digest


@dataclass(frozen=True, order=True)
class RuleInstance:
    """
    A rule grounded on a target cell; source is the neighbour a CommIn pulls from.
    """

    cell_id: int
    rule_index: int
    source_id: int | None = None

    def to_record(self) -> dict:
        rec = {"cell": self.cell_id, "rule": self.rule_index}
        if self.source_id is not None:
            rec["source"] = self.source_id
        return rec


@dataclass(frozen=True)
class StepSelection:
    """
    The multiset of rule instances chosen for one step, sorted.
    """

    instances: tuple[RuleInstance, ...] = ()

    def is_empty(self) -> bool:
        return not self.instances

    def for_cell(self, cell_id: int) -> list[RuleInstance]:
        return [i for i in self.instances if i.cell_id == cell_id]

    def __len__(self) -> int:
        return len(self.instances)


class _Residual:
    """
    Engine-private scratch state tracking what is still available during selection.
    """

    def __init__(self, config: Configuration):
        self.cells: dict[int, dict[str, int]] = {cid: c.contents.to_dict() for cid, c in config.cells.items()}
        self.environment: dict[str, int] = config.environment.to_dict()
        self.locked: set[int] = set()  # cells that selected a structural instance
        self.busy: set[int] = set()  # cells that selected anything

    def pool_for(self, owner: int | None) -> dict[str, int]:
        return self.environment if owner is None else self.cells[owner]


class PpsEngine:
    """
    Runs a PpsModel step after step under maximal or arbitrary parallelism.
    """

    def __init__(
        self,
        model: PpsModel,
        mode: StepMode = StepMode.MAXIMAL,
        bonds: BondMode = BondMode.AUTO,
        death_releases_objects: bool = False,
    ):
        problems = model.problems()
        if problems:
            raise ValidationError(f"PPS model has {len(problems)} problem(s): {problems[0].message}", problems)
        self.model = model
        self.mode = mode
        self.bond_mode = model.effective_bond_mode(bonds)
        self.death_releases_objects = death_releases_objects

    #
    # applicability
    #

    def applicable_instances(self, config: Configuration, cell_id: int) -> list[RuleInstance]:
        """
        Returns every grounded rule instance applicable to the given cell in isolation,
        ordered by rule index and then by source neighbour id.
        """
        cell = config.cell(cell_id)
        if cell is None:
            raise UnknownCellError(f"Cell {cell_id} is not live")
        out: list[RuleInstance] = []
        contents = cell.contents
        for idx, rule in enumerate(self.model.rules):
            if rule.cell_type != cell.cell_type:
                continue
            if isinstance(rule, CommIn):
                if rule.trigger is not None and contents.count(rule.trigger) == 0:
                    continue
                for n in config.neighbours(cell_id):
                    if config.cells[n].contents.count(rule.moved) > 0:
                        out.append(RuleInstance(cell_id, idx, n))
            elif isinstance(rule, CommEnter):
                if rule.trigger is not None and contents.count(rule.trigger) == 0:
                    continue
                if config.environment.count(rule.moved) > 0:
                    out.append(RuleInstance(cell_id, idx))
            elif isinstance(rule, CommExit):
                if contents.count(rule.moved) > 0:
                    out.append(RuleInstance(cell_id, idx))
            elif contents.count(rule.consumed) > 0:
                out.append(RuleInstance(cell_id, idx))
        return out

    def _charge(self, inst: RuleInstance) -> tuple[int | None, str]:
        """
        Returns (owner, symbol) consumed by the instance; owner None is the environment.
        """
        rule = self.model.rules[inst.rule_index]
        if isinstance(rule, CommIn):
            return inst.source_id, rule.moved
        if isinstance(rule, CommEnter):
            return None, rule.moved
        if isinstance(rule, CommExit):
            return inst.cell_id, rule.moved
        return inst.cell_id, rule.consumed

    def _feasible(self, inst: RuleInstance, residual: _Residual) -> bool:
        if inst.cell_id in residual.locked:
            return False
        if self.model.rules[inst.rule_index].structural and inst.cell_id in residual.busy:
            return False
        owner, sym = self._charge(inst)
        return residual.pool_for(owner).get(sym, 0) > 0

    def _take(self, inst: RuleInstance, residual: _Residual):
        owner, sym = self._charge(inst)
        residual.pool_for(owner)[sym] -= 1
        residual.busy.add(inst.cell_id)
        if self.model.rules[inst.rule_index].structural:
            residual.locked.add(inst.cell_id)

    #
    # selection
    #

    def select_step(self, config: Configuration, rng: SeededRng) -> StepSelection:
        """
        Chooses the rule instances of one step.

        Candidates are drawn uniformly one at a time and charged against the residual
        objects until none is feasible, which leaves a maximal selection. Feasibility
        only ever decreases, so an infeasible candidate is discarded for good.
        Promoters are checked against the pre-step contents.
        """
        chosen = self._select_maximal(config, rng)
        if self.mode is StepMode.ARBITRARY and chosen:
            while True:
                subset = [inst for inst in chosen if rng.coin()]
                if subset:
                    chosen = subset
                    break
        return StepSelection(tuple(sorted(chosen)))

    def _select_maximal(self, config: Configuration, rng: SeededRng) -> list[RuleInstance]:
        candidates: list[RuleInstance] = []
        for cell_id in config.cells:
            candidates.extend(self.applicable_instances(config, cell_id))
        residual = _Residual(config)
        chosen: list[RuleInstance] = []
        while candidates:
            k = rng.below(len(candidates))
            inst = candidates[k]
            if self._feasible(inst, residual):
                self._take(inst, residual)
                chosen.append(inst)
            else:
                candidates[k] = candidates[-1]
                candidates.pop()
        return chosen

    #
    # application
    #

    def apply_step(self, config: Configuration, selection: StepSelection) -> Configuration:
        """
        Applies a selection atomically: every consumption first, then every production,
        then the structural rewrites and finally the bond graph update.
        """
        rules = self.model.rules
        consumed: dict[int | None, dict[str, int]] = {}
        produced: dict[int | None, dict[str, int]] = {}
        structural: dict[int, RuleInstance] = {}

        def bump(table, owner, sym, n=1):
            pool = table.setdefault(owner, {})
            pool[sym] = pool.get(sym, 0) + n

        for inst in selection.instances:
            if inst.cell_id not in config.cells:
                raise InternalError(f"Stale selection: cell {inst.cell_id} is not live")
            rule = rules[inst.rule_index]
            owner, sym = self._charge(inst)
            if owner is not None and owner not in config.cells:
                raise InternalError(f"Stale selection: source cell {owner} is not live")
            bump(consumed, owner, sym)
            if isinstance(rule, (CommIn, CommEnter)):
                bump(produced, inst.cell_id, rule.moved)
            elif isinstance(rule, CommExit):
                bump(produced, None, rule.moved)
            elif isinstance(rule, Transform):
                for s, n in rule.produced.items():
                    bump(produced, inst.cell_id, s, n)
            else:
                if inst.cell_id in structural:
                    raise InternalError(f"Cell {inst.cell_id} selected two structural rules")
                structural[inst.cell_id] = inst

        try:
            residual = {
                cid: c.contents - Multiset(consumed.get(cid, {}))
                for cid, c in config.cells.items()
            }
            environment = config.environment - Multiset(consumed.get(None, {}))
        except UnderflowError as e:
            raise InternalError(f"Stale selection: {e}")
        for cid in residual:
            if cid in produced:
                residual[cid] = residual[cid] + Multiset(produced[cid])
        environment = environment + Multiset(produced.get(None, {}))

        next_id = config.next_id
        cells: dict[int, Cell] = {}
        lineage: dict[int, tuple[int, ...]] = {}
        for cid, old in config.cells.items():
            inst = structural.get(cid)
            if inst is None:
                cells[cid] = Cell(cid, old.cell_type, residual[cid])
                continue
            rule = rules[inst.rule_index]
            if isinstance(rule, Differentiate):
                cells[cid] = Cell(cid, rule.to_type, residual[cid] + rule.produced)
            elif isinstance(rule, Divide):
                left, right = next_id, next_id + 1
                next_id += 2
                cells[left] = Cell(left, old.cell_type, residual[cid] + rule.left_product)
                cells[right] = Cell(right, rule.right_type or old.cell_type, residual[cid] + rule.right_product)
                lineage[cid] = (left, right)
            elif isinstance(rule, Die):
                lineage[cid] = ()
                if self.death_releases_objects:
                    environment = environment + residual[cid]

        new_config = Configuration(
            cells=dict(sorted(cells.items())),
            bonds=config.bonds,
            environment=environment,
            step_index=config.step_index + 1,
            next_id=next_id,
        )
        return self.recompute_bonds(new_config, lineage)

    def recompute_bonds(self, config: Configuration, lineage: dict[int, tuple[int, ...]] | None = None) -> Configuration:
        """
        In dynamic mode rebuilds the bond graph from the bond-making rules.
        In static mode carries the previous bonds over: daughters of a division inherit
        their parent's bonds, edges touching dead cells are pruned.
        """
        if self.bond_mode is BondMode.DYNAMIC:
            edges = set()
            cells = list(config.cells.values())
            for ci in cells:
                for cj in cells:
                    if ci.id == cj.id:
                        continue
                    for br in self.model.bond_rules:
                        if br.licenses(ci.cell_type, ci.contents, cj.cell_type, cj.contents):
                            edges.add(bond(ci.id, cj.id))
                            break
            return replace(config, bonds=frozenset(edges))

        lineage = lineage or {}
        edges = set()
        for i, j in config.bonds:
            for a in lineage.get(i, (i,)):
                for b in lineage.get(j, (j,)):
                    if a != b and a in config.cells and b in config.cells:
                        edges.add(bond(a, b))
        return replace(config, bonds=frozenset(edges))

    #
    # runs
    #

    def run(
        self,
        steps: int,
        seed: int,
        listener: Callable[[dict], None] | None = None,
    ) -> Trace:
        """
        Runs up to the given number of steps; halts early on an empty selection.
        The initial graph is used at step 0 only when bonds are dynamic.
        """
        if steps < 0:
            raise ValueError(f"Number of steps must be non-negative, got {steps}")
        rng = SeededRng(seed)
        header = make_header(
            kind="pps",
            model_digest=model_digest(self.model),
            seed=seed,
            steps=steps,
            mode=self.mode.value,
            bonds=self.bond_mode.value,
            death_releases_objects=self.death_releases_objects,
        )
        trace = Trace(header, listener)
        config = self.model.initial_configuration()
        logging.info(
            "Starting PPS run: %d cells, %d rules, %d steps, seed %d, mode %s, bonds %s",
            len(config.cells), len(self.model.rules), steps, seed, self.mode.value, self.bond_mode.value,
        )
        trace.add_snapshot({**config.to_record(), "fired": []})
        for _ in range(steps):
            selection = self.select_step(config, rng)
            if selection.is_empty():
                logging.info("PPS run halted at step %d: nothing applicable", config.step_index)
                trace.halt(config.step_index)
                return trace
            config = self.apply_step(config, selection)
            logging.debug(
                "Step %d: %d rule instances applied, %d cells, %d bonds",
                config.step_index, len(selection), len(config.cells), len(config.bonds),
            )
            trace.add_snapshot({**config.to_record(), "fired": [i.to_record() for i in selection.instances]})
        trace.complete(config.step_index)
        logging.info("PPS run completed after %d steps with %d cells", config.step_index, len(config.cells))
        return trace

    def configurations(self, steps: int, seed: int) -> list[Configuration]:
        """
        Returns the sequence of configurations of a run, starting from the initial one.
        """
        rng = SeededRng(seed)
        config = self.model.initial_configuration()
        out = [config]
        for _ in range(steps):
            selection = self.select_step(config, rng)
            if selection.is_empty():
                break
            config = self.apply_step(config, selection)
            out.append(config)
        return out


def run(
    model: PpsModel,
    steps: int,
    mode: StepMode = StepMode.MAXIMAL,
    seed: int = 0,
    bonds: BondMode = BondMode.AUTO,
    death_releases_objects: bool = False,
) -> Trace:
    """
    Convenience wrapper: validates the model and runs it.
    """
    return PpsEngine(model, mode, bonds, death_releases_objects).run(steps, seed)
