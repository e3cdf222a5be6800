"""
pps_model.py
----------------
Population P System model: rules, cells, configurations and static checks
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

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping

from .multiset import EMPTY, Multiset, SYMBOL_RE


class StepMode(Enum):
    MAXIMAL = "max"
    ARBITRARY = "arb"


class BondMode(Enum):
    DYNAMIC = "dynamic"
    STATIC = "static"
    AUTO = "auto"


@dataclass(frozen=True)
class ModelProblem:
    """
    One static defect of a model. token names the offending identifier, if any,
    so that the DSL validator can attach a source location to it.
    """

    code: str
    message: str
    token: str | None = None


#
# rules
#


@dataclass(frozen=True)
class BondMakingRule:
    left_type: str
    left_required: Multiset
    right_required: Multiset
    right_type: str

    def licenses(self, type_i: str, contents_i: Multiset, type_j: str, contents_j: Multiset) -> bool:
        return (
            type_i == self.left_type
            and type_j == self.right_type
            and contents_i.contains(self.left_required)
            and contents_j.contains(self.right_required)
        )


@dataclass(frozen=True)
class CommIn:
    """(a; b, in)_t : pulls b from a bonded neighbour while promoter a is present"""

    trigger: str | None
    moved: str
    cell_type: str
    structural = False


@dataclass(frozen=True)
class CommEnter:
    """(a; b, enter)_t : pulls b from the environment while promoter a is present"""

    trigger: str | None
    moved: str
    cell_type: str
    structural = False


@dataclass(frozen=True)
class CommExit:
    moved: str
    cell_type: str
    structural = False


@dataclass(frozen=True)
class Transform:
    consumed: str
    produced: Multiset
    cell_type: str
    structural = False


@dataclass(frozen=True)
class Differentiate:
    consumed: str
    produced: Multiset
    cell_type: str
    to_type: str
    structural = True


@dataclass(frozen=True)
class Divide:
    """
    Replaces the parent by two fresh cells, each inheriting the parent's residual contents;
    the left daughter gets left_product, the right one right_product.
    The right daughter takes right_type when given, the parent type otherwise.
    """

    consumed: str
    left_product: Multiset
    right_product: Multiset
    cell_type: str
    right_type: str | None = None
    structural = True


@dataclass(frozen=True)
class Die:
    consumed: str
    cell_type: str
    structural = True


PpsRule = CommIn | CommEnter | CommExit | Transform | Differentiate | Divide | Die

COMMUNICATION_RULES = (CommIn, CommEnter, CommExit)


def rule_symbols(rule: PpsRule) -> Iterator[str]:
    """
    Yields every object symbol mentioned by the rule.
    """
    if isinstance(rule, (CommIn, CommEnter)):
        if rule.trigger is not None:
            yield rule.trigger
        yield rule.moved
    elif isinstance(rule, CommExit):
        yield rule.moved
    elif isinstance(rule, (Transform, Differentiate)):
        yield rule.consumed
        yield from rule.produced.symbols()
    elif isinstance(rule, Divide):
        yield rule.consumed
        yield from rule.left_product.symbols()
        yield from rule.right_product.symbols()
    elif isinstance(rule, Die):
        yield rule.consumed


def rule_types(rule: PpsRule) -> Iterator[str]:
    yield rule.cell_type
    if isinstance(rule, Differentiate):
        yield rule.to_type
    elif isinstance(rule, Divide) and rule.right_type is not None:
        yield rule.right_type


#
# state
#


@dataclass(frozen=True)
class Cell:
    id: int
    cell_type: str
    contents: Multiset

    def to_record(self) -> dict:
        return {"id": self.id, "type": self.cell_type, "contents": self.contents.to_dict()}


def bond(i: int, j: int) -> tuple[int, int]:
    """
    Normalized undirected edge.
    """
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Configuration:
    """
    One global PPS state. cells is keyed and iterated by ascending id.
    """

    cells: Mapping[int, Cell]
    bonds: frozenset[tuple[int, int]]
    environment: Multiset
    step_index: int = 0
    next_id: int = 1

    def cell(self, cell_id: int) -> Cell | None:
        return self.cells.get(cell_id)

    def neighbours(self, cell_id: int) -> list[int]:
        out = []
        for i, j in self.bonds:
            if i == cell_id:
                out.append(j)
            elif j == cell_id:
                out.append(i)
        return sorted(out)

    def total_objects(self) -> Multiset:
        total = self.environment
        for c in self.cells.values():
            total = total + c.contents
        return total

    def population(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.cells.values():
            out[c.cell_type] = out.get(c.cell_type, 0) + 1
        return dict(sorted(out.items()))

    def environment_digest(self) -> str:
        return hashlib.sha256(str(self.environment).encode("utf-8")).hexdigest()[:16]

    def to_record(self) -> dict:
        return {
            "step": self.step_index,
            "cells": [c.to_record() for c in self.cells.values()],
            "bonds": [list(e) for e in sorted(self.bonds)],
            "environment": self.environment.to_dict(),
            "env_digest": self.environment_digest(),
        }


#
# model
#


@dataclass(frozen=True)
class PpsModel:
    alphabet: frozenset[str]
    cell_types: frozenset[str]
    initial_cells: tuple[tuple[Multiset, str], ...]
    rules: tuple[PpsRule, ...] = ()
    bond_rules: tuple[BondMakingRule, ...] = ()
    initial_graph: frozenset[tuple[int, int]] = frozenset()
    env_init: Multiset = EMPTY
    name: str | None = field(default=None, compare=False)

    def problems(self) -> list[ModelProblem]:
        """
        Returns every static invariant violation of this model.
        """
        found: list[ModelProblem] = []

        def check_symbol(sym: str, where: str):
            if sym not in self.alphabet:
                found.append(ModelProblem("E-UNDECLARED-SYMBOL", f"Symbol '{sym}' used in {where} is not in the alphabet", sym))

        def check_type(t: str, where: str):
            if t not in self.cell_types:
                found.append(ModelProblem("E-UNDECLARED-TYPE", f"Cell type '{t}' used in {where} is not declared", t))

        for sym in sorted(self.alphabet):
            if not SYMBOL_RE.match(sym):
                found.append(ModelProblem("E-SYNTAX", f"Invalid symbol name '{sym}'", sym))
        for sym in self.env_init.symbols():
            check_symbol(sym, "the environment")
        for n, (contents, t) in enumerate(self.initial_cells, start=1):
            check_type(t, f"cell {n}")
            for sym in contents.symbols():
                check_symbol(sym, f"cell {n}")
        for n, rule in enumerate(self.rules, start=1):
            for t in rule_types(rule):
                check_type(t, f"rule {n}")
            for sym in rule_symbols(rule):
                check_symbol(sym, f"rule {n}")
            if isinstance(rule, (Transform, Differentiate)) and rule.produced.is_empty():
                found.append(ModelProblem("E-MISSING", f"Rule {n} must produce at least one object"))
            if isinstance(rule, Divide) and (rule.left_product.is_empty() or rule.right_product.is_empty()):
                found.append(ModelProblem("E-MISSING", f"Division rule {n} must produce at least one object per daughter"))
        for n, br in enumerate(self.bond_rules, start=1):
            check_type(br.left_type, f"bond rule {n}")
            check_type(br.right_type, f"bond rule {n}")
            for sym in br.left_required.symbols() + br.right_required.symbols():
                check_symbol(sym, f"bond rule {n}")
        count = len(self.initial_cells)
        for i, j in sorted(self.initial_graph):
            if i == j:
                found.append(ModelProblem("E-BAD-BOND", f"Bond {i}-{j} is a self-loop"))
            elif not (1 <= i <= count and 1 <= j <= count):
                found.append(ModelProblem("E-BAD-BOND", f"Bond {i}-{j} references a cell outside 1..{count}"))
        return found

    def is_communication_only(self) -> bool:
        return all(isinstance(r, COMMUNICATION_RULES) for r in self.rules)

    def effective_bond_mode(self, requested: BondMode = BondMode.AUTO) -> BondMode:
        if requested is BondMode.AUTO:
            return BondMode.DYNAMIC if self.bond_rules else BondMode.STATIC
        return requested

    def initial_configuration(self) -> Configuration:
        cells = {n: Cell(n, t, contents) for n, (contents, t) in enumerate(self.initial_cells, start=1)}
        return Configuration(
            cells=cells,
            bonds=frozenset(bond(i, j) for i, j in self.initial_graph),
            environment=self.env_init,
            step_index=0,
            next_id=len(cells) + 1,
        )
