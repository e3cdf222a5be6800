"""
operas.py
----------------
OPERAS_XC runtime: X-machine agents on a grid with PPS-like structure mutation rules
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
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping

from .errors import (
    AgentBehaviourError,
    EngineError,
    EvaluationError,
    MemoryTypeError,
    NondeterminismError,
    OutOfBounds,
    SelectorAmbiguous,
    ValidationError,
)
from .expressions import EvalContext, Expr, conforms, free_variables, called_functions, value_to_json
from .multiset import EMPTY, Multiset
from .pps_model import ModelProblem, bond
from .seeded_rng import SeededRng
from .trace import Trace, make_header, model_digest
from .xm_engine import GuardedFunction, PortKind, XMachineDef, apply_function, errors_only, guard_holds, machine_record

# canonical percept direction order
DIRECTIONS = ("N", "E", "S", "W", "here")
TICK = "tick"

TAKE_PREFIX = "take_"
DROP_PREFIX = "drop_"

# variables and calls available to conditions and initializers besides memory fields
CONDITION_VARIABLES = ("state", "peers")
CONDITION_CALLS = ("local", "nearby", "global")

SELECTORS = ("self", "peer", "nearest", "nearest_peer", "farthest_peer")

IDLE_BLOCKED_READ = "blocked-read"
IDLE_BLOCKED_WRITE = "blocked-write"
IDLE_NO_FUNCTION = "no-applicable-function"
IDLE_CONTENTION = "environment-contention"


def percept_alphabet(percepts: frozenset[str]) -> frozenset[str]:
    """
    Direction-tagged symbols an agent filtering the given objects may perceive.
    """
    return frozenset({f"{o}_{d}" for o in percepts for d in DIRECTIONS} | {TICK})


def neighbourhood(x: int, y: int) -> list[tuple[str, int, int]]:
    return [("N", x, y - 1), ("E", x + 1, y), ("S", x, y + 1), ("W", x - 1, y), ("here", x, y)]


#
# rules
#


@dataclass(frozen=True)
class AddAgent:
    agent_type: str
    initializer: tuple[tuple[str, Expr], ...] = ()
    structural = True


@dataclass(frozen=True)
class RemoveAgent:
    target: str = "self"
    structural = True


@dataclass(frozen=True)
class AddChannel:
    target: str
    structural = False


@dataclass(frozen=True)
class RemoveChannel:
    target: str
    structural = False


Action = AddAgent | RemoveAgent | AddChannel | RemoveChannel


@dataclass(frozen=True)
class ReconfigRule:
    name: str
    condition: Expr
    action: Action


#
# model
#


@dataclass(frozen=True)
class AgentType:
    name: str
    percepts: frozenset[str]
    machine: XMachineDef
    str_mut: tuple[ReconfigRule, ...] = ()

    def alphabet(self) -> frozenset[str]:
        return percept_alphabet(self.percepts)


@dataclass(frozen=True)
class AgentDecl:
    agent_type: str
    memory: tuple[tuple[str, Expr], ...] = ()


@dataclass(frozen=True)
class EnvironmentModel:
    """
    Grid of multisets (sparse: empty cells are not stored) plus global objects.
    """

    width: int
    height: int
    grid: Mapping[tuple[int, int], Multiset] = field(default_factory=dict)
    globals: Multiset = EMPTY

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def at(self, x: int, y: int) -> Multiset:
        if not self.in_bounds(x, y):
            raise OutOfBounds(f"Position ({x},{y}) is outside the {self.width}x{self.height} grid")
        return self.grid.get((x, y), EMPTY)

    def with_cell(self, x: int, y: int, contents: Multiset) -> "EnvironmentModel":
        grid = dict(self.grid)
        if contents.is_empty():
            grid.pop((x, y), None)
        else:
            grid[(x, y)] = contents
        return replace(self, grid=grid)

    def total(self) -> Multiset:
        total = self.globals
        for ms in self.grid.values():
            total = total + ms
        return total

    def grid_total(self) -> Multiset:
        total = EMPTY
        for ms in self.grid.values():
            total = total + ms
        return total

    def cells_record(self) -> list[dict]:
        return [{"x": x, "y": y, "contents": self.grid[(x, y)].to_dict()} for x, y in sorted(self.grid)]

    def digest(self) -> str:
        text = ";".join(f"{x},{y}{ms}" for (x, y), ms in sorted(self.grid.items())) + f"|{self.globals}"
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class OperasModel:
    width: int
    height: int
    agent_types: tuple[AgentType, ...]
    agents: tuple[AgentDecl, ...] = ()
    places: tuple[tuple[int, int, Multiset], ...] = ()
    globals: Multiset = EMPTY
    links: tuple[tuple[int, int], ...] = ()
    rules: tuple[ReconfigRule, ...] = ()
    name: str | None = field(default=None, compare=False)

    def agent_type(self, name: str) -> AgentType | None:
        for t in self.agent_types:
            if t.name == name:
                return t
        return None

    def problems(self) -> list[ModelProblem]:
        found: list[ModelProblem] = []
        if self.width < 1 or self.height < 1:
            found.append(ModelProblem("E-OUT-OF-RANGE", f"Grid {self.width}x{self.height} must be at least 1x1"))
        for x, y, _ in self.places:
            if not (0 <= x < self.width and 0 <= y < self.height):
                found.append(ModelProblem("E-OUT-OF-RANGE", f"Place ({x},{y}) is outside the grid"))

        all_fields: set[str] = set()
        seen: set[str] = set()
        for t in self.agent_types:
            if t.name in seen:
                found.append(ModelProblem("E-DUPLICATE", f"Agent type '{t.name}' declared twice", t.name))
            seen.add(t.name)
            fields = t.machine.memory_types()
            all_fields |= set(fields)
            for pos in ("x", "y"):
                if fields.get(pos) != "int":
                    found.append(ModelProblem("E-MISSING", f"Agent type '{t.name}' needs an int memory field '{pos}'", t.name))
            found.extend(t.machine.problems(allow_peer=True))
            alphabet = t.alphabet()
            for sym in sorted(t.machine.inputs - alphabet):
                found.append(ModelProblem("E-UNDECLARED-SYMBOL", f"Input '{sym}' of '{t.name}' is not a percept", sym))
            for out in sorted(t.machine.outputs):
                for prefix in (TAKE_PREFIX, DROP_PREFIX):
                    if out.startswith(prefix) and not out[len(prefix):]:
                        found.append(ModelProblem("E-MISSING", f"Output '{out}' names no object", out))
            for rule in t.str_mut:
                found.extend(self._rule_problems(rule, set(fields)))

        for rule in self.rules:
            found.extend(self._rule_problems(rule, all_fields))

        for n, decl in enumerate(self.agents, start=1):
            t = self.agent_type(decl.agent_type)
            if t is None:
                found.append(ModelProblem("E-UNDECLARED-TYPE", f"Agent type '{decl.agent_type}' is not declared", decl.agent_type))
                continue
            found.extend(_initializer_problems(t, decl.memory, f"agent {n}"))
            try:
                memory = self.initial_memory(t, decl)
            except (EvaluationError, MemoryTypeError):
                continue
            x, y = memory.get("x"), memory.get("y")
            if isinstance(x, int) and isinstance(y, int) and not (0 <= x < self.width and 0 <= y < self.height):
                found.append(ModelProblem("E-OUT-OF-RANGE", f"Agent {n} at ({x},{y}) is outside the grid"))

        count = len(self.agents)
        for i, j in self.links:
            if i == j:
                found.append(ModelProblem("E-BAD-BOND", f"Link {i}-{j} is a self-loop"))
            elif not (1 <= i <= count and 1 <= j <= count):
                found.append(ModelProblem("E-BAD-BOND", f"Link {i}-{j} references an agent outside 1..{count}"))
        return found

    def _rule_problems(self, rule: ReconfigRule, fields: set[str]) -> list[ModelProblem]:
        found = []
        allowed = fields | set(CONDITION_VARIABLES)
        exprs = [rule.condition]
        action = rule.action
        if isinstance(action, AddAgent):
            t = self.agent_type(action.agent_type)
            if t is None:
                found.append(ModelProblem("E-UNDECLARED-TYPE", f"Rule '{rule.name}' adds unknown agent type '{action.agent_type}'", action.agent_type))
            else:
                types = t.machine.memory_types()
                for fname, _ in action.initializer:
                    if fname not in types:
                        found.append(ModelProblem("E-UNKNOWN-FIELD", f"Rule '{rule.name}' initializes unknown field '{fname}'", fname))
            exprs.extend(e for _, e in action.initializer)
        else:
            if action.target not in SELECTORS:
                found.append(ModelProblem("E-SYNTAX", f"Rule '{rule.name}' uses unknown selector '{action.target}'", action.target))
        for e in exprs:
            for v in sorted(free_variables(e) - allowed):
                found.append(ModelProblem("E-UNKNOWN-FIELD", f"Rule '{rule.name}' refers to unknown name '{v}'", v))
            for c in sorted(called_functions(e) - set(EvalContext().functions) - set(CONDITION_CALLS)):
                found.append(ModelProblem("E-UNKNOWN-CALL", f"Rule '{rule.name}' calls unknown function '{c}'", c))
        return found

    @staticmethod
    def initial_memory(t: AgentType, decl: AgentDecl) -> dict[str, Any]:
        memory = t.machine.initial_memory()
        types = t.machine.memory_types()
        for fname, expr in decl.memory:
            v = expr.evaluate(EvalContext())
            if not conforms(v, types.get(fname, "")):
                raise MemoryTypeError(f"Field '{fname}' of '{t.name}' cannot hold {v!r}")
            memory[fname] = v
        return memory

    def environment(self) -> EnvironmentModel:
        env = EnvironmentModel(self.width, self.height, {}, self.globals)
        for x, y, ms in self.places:
            env = env.with_cell(x, y, env.at(x, y) + ms)
        return env


def _initializer_problems(t: AgentType, memory: tuple[tuple[str, Expr], ...], where: str) -> list[ModelProblem]:
    found = []
    types = t.machine.memory_types()
    for fname, expr in memory:
        if fname not in types:
            found.append(ModelProblem("E-UNKNOWN-FIELD", f"{where} sets unknown field '{fname}'", fname))
            continue
        try:
            v = expr.evaluate(EvalContext())
        except EvaluationError as e:
            found.append(ModelProblem("E-BAD-MEMORY", f"{where} field '{fname}': {e}", fname))
            continue
        if not conforms(v, types[fname]):
            found.append(ModelProblem("E-BAD-MEMORY", f"{where} field '{fname}' is not of type {types[fname]}", fname))
    return found


#
# runtime state
#


@dataclass(frozen=True)
class AgentInstance:
    id: int
    agent_type: str
    state: str
    memory: Mapping[str, Any]

    @property
    def position(self) -> tuple[int, int]:
        return self.memory["x"], self.memory["y"]


@dataclass(frozen=True)
class AgentActivity:
    agent_id: int
    fired: str | None = None
    idle: str | None = None
    output: Any = None


@dataclass(frozen=True)
class StepReport:
    """
    Mutation counts of one step. `removed` counts distinct agents removed, not the
    RemoveAgent actions that fired: two rules striking the same agent count once.
    """

    activities: tuple[AgentActivity, ...] = ()
    added: int = 0
    removed: int = 0
    connected: int = 0
    disconnected: int = 0
    warnings: tuple[str, ...] = ()

    def fired_count(self) -> int:
        return sum(1 for a in self.activities if a.fired is not None)

    def mutation_count(self) -> int:
        return self.added + self.removed + self.connected + self.disconnected


@dataclass(frozen=True)
class OperasSystem:
    """
    One state of an OPERAS_XC system: agents A, communication relation R, environment E,
    with the type registry S and the global rules O taken from the model.
    """

    model: OperasModel
    agents: tuple[AgentInstance, ...]
    comm_relation: frozenset[tuple[int, int]]
    environment: EnvironmentModel
    pending: Mapping[tuple[int, int], Any] = field(default_factory=dict)
    step_index: int = 0
    next_id: int = 1
    report: StepReport = StepReport()

    @staticmethod
    def from_model(model: OperasModel) -> "OperasSystem":
        problems = errors_only(model.problems())
        if problems:
            raise ValidationError(f"OPERAS model has {len(problems)} problem(s): {problems[0].message}", problems)
        agents = []
        for n, decl in enumerate(model.agents, start=1):
            t = model.agent_type(decl.agent_type)
            agents.append(AgentInstance(n, t.name, t.machine.initial_state, model.initial_memory(t, decl)))
        return OperasSystem(
            model=model,
            agents=tuple(agents),
            comm_relation=frozenset(bond(i, j) for i, j in model.links),
            environment=model.environment(),
            next_id=len(agents) + 1,
        )

    @property
    def reconfig_rules(self) -> tuple[ReconfigRule, ...]:
        return self.model.rules

    @property
    def type_registry(self) -> dict[str, AgentType]:
        return {t.name: t for t in self.model.agent_types}

    @property
    def percepts(self) -> frozenset[tuple[str, str]]:
        """
        P as the disjoint union of the per-type alphabets, tagged by type.
        """
        return frozenset((t.name, sym) for t in self.model.agent_types for sym in t.alphabet())

    def agent(self, agent_id: int) -> AgentInstance | None:
        for a in self.agents:
            if a.id == agent_id:
                return a
        return None

    def peers(self, agent_id: int) -> list[int]:
        out = []
        for i, j in self.comm_relation:
            if i == agent_id:
                out.append(j)
            elif j == agent_id:
                out.append(i)
        return sorted(out)

    def population(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for a in self.agents:
            out[a.agent_type] = out.get(a.agent_type, 0) + 1
        return dict(sorted(out.items()))

    def to_record(self) -> dict:
        by_id = {a.agent_id: a for a in self.report.activities}
        agents = []
        for a in self.agents:
            act = by_id.get(a.id, AgentActivity(a.id))
            rec = machine_record(a.id, a.state, a.memory, act.fired, act.idle, act.output)
            rec["type"] = a.agent_type
            agents.append(rec)
        return {
            "step": self.step_index,
            "agents": agents,
            "channels": [list(e) for e in sorted(self.comm_relation)],
            "pending": [
                {"from": s, "to": r, "value": value_to_json(v)} for (s, r), v in sorted(self.pending.items())
            ],
            "grid": self.environment.cells_record(),
            "globals": self.environment.globals.to_dict(),
            "env_digest": self.environment.digest(),
            "mutations": {
                "added": self.report.added,
                "removed": self.report.removed,
                "connected": self.report.connected,
                "disconnected": self.report.disconnected,
            },
            "warnings": list(self.report.warnings),
        }


#
# perception
#


def perceive(agent: AgentInstance, agent_type: AgentType, env: EnvironmentModel) -> list[str]:
    """
    Filtered percepts of the agent's cell and its 4-neighbourhood, one symbol per object copy,
    ordered by object name then by direction, followed by the tick percept.
    """
    x, y = agent.position
    if not env.in_bounds(x, y):
        raise OutOfBounds(f"Agent {agent.id} is at ({x},{y}), outside the {env.width}x{env.height} grid")
    out: list[str] = []
    for obj in sorted(agent_type.percepts):
        for direction, cx, cy in neighbourhood(x, y):
            if not env.in_bounds(cx, cy):
                continue
            out.extend([f"{obj}_{direction}"] * env.at(cx, cy).count(obj))
    out.append(TICK)
    return out


#
# behaviour phase
#


@dataclass(frozen=True)
class _Fire:
    fn: GuardedFunction
    next_state: str
    value: Any
    from_peer: int | None = None
    to_peer: int | None = None


def _writable_peer(system: OperasSystem, agent_id: int) -> int | None:
    for p in system.peers(agent_id):
        if (agent_id, p) not in system.pending:
            return p
    return None


def _unique(agent: AgentInstance, state: str, value: Any, enabled: list[_Fire]) -> _Fire | None:
    if len(enabled) > 1:
        names = [f.fn.name for f in enabled]
        raise NondeterminismError(f"Functions {', '.join(names)} are all applicable in state '{state}'", state, value, names)
    return enabled[0] if enabled else None


def _plan(system: OperasSystem, agent: AgentInstance, agent_type: AgentType) -> _Fire | str:
    machine = agent_type.machine
    arcs = machine.outgoing(agent.state)
    out_peer = _writable_peer(system, agent.id)
    blocked_write = False
    blocked_read = False

    def ready(fn: GuardedFunction) -> bool:
        return fn.target.kind is not PortKind.PEER or out_peer is not None

    peer_arcs = [(fn, nxt) for fn, nxt in arcs if fn.source.kind is PortKind.PEER]
    if peer_arcs:
        incoming = [p for p in system.peers(agent.id) if (p, agent.id) in system.pending]
        if not incoming:
            blocked_read = True
        for p in incoming:
            value = system.pending[(p, agent.id)]
            enabled = []
            for fn, nxt in peer_arcs:
                if guard_holds(fn, agent.memory, value):
                    if ready(fn):
                        enabled.append(_Fire(fn, nxt, value, from_peer=p, to_peer=out_peer if fn.target.kind is PortKind.PEER else None))
                    else:
                        blocked_write = True
            chosen = _unique(agent, agent.state, value, enabled)
            if chosen is not None:
                return chosen

    stream_arcs = [(fn, nxt) for fn, nxt in arcs if fn.source.kind is PortKind.STREAM]
    if stream_arcs:
        for percept in perceive(agent, agent_type, system.environment):
            if percept not in machine.inputs:
                continue
            enabled = []
            for fn, nxt in stream_arcs:
                if guard_holds(fn, agent.memory, percept):
                    if ready(fn):
                        enabled.append(_Fire(fn, nxt, percept, to_peer=out_peer if fn.target.kind is PortKind.PEER else None))
                    else:
                        blocked_write = True
            chosen = _unique(agent, agent.state, percept, enabled)
            if chosen is not None:
                return chosen

    if blocked_write:
        return IDLE_BLOCKED_WRITE
    if blocked_read and not stream_arcs:
        return IDLE_BLOCKED_READ
    return IDLE_NO_FUNCTION


def _environment_effect(env: EnvironmentModel, x: int, y: int, output: Any) -> EnvironmentModel | None:
    """
    Applies a take_/drop_ output at (x, y). Returns None when a take finds nothing to take.
    """
    if not isinstance(output, str):
        return env
    if output.startswith(TAKE_PREFIX):
        obj = output[len(TAKE_PREFIX):]
        here = env.at(x, y)
        if here.count(obj) == 0:
            return None
        return env.with_cell(x, y, here - Multiset({obj: 1}))
    if output.startswith(DROP_PREFIX):
        obj = output[len(DROP_PREFIX):]
        return env.with_cell(x, y, env.at(x, y) + Multiset({obj: 1}))
    return env


def behaviour_phase(system: OperasSystem) -> tuple[OperasSystem, list[AgentActivity], list[str]]:
    """
    Every agent performs one round against the pre-phase snapshot; effects are then
    committed in agent-id order.
    """
    registry = system.type_registry
    plans = []
    for agent in system.agents:
        try:
            plans.append(_plan(system, agent, registry[agent.agent_type]))
        except EngineError as e:
            raise AgentBehaviourError(agent.id, e)

    env = system.environment
    pending = dict(system.pending)
    agents = []
    activities = []
    warnings = []
    for agent, plan in zip(system.agents, plans):
        if isinstance(plan, str):
            agents.append(agent)
            activities.append(AgentActivity(agent.id, idle=plan))
            continue
        machine = registry[agent.agent_type].machine
        try:
            output, memory = apply_function(machine, plan.fn, agent.memory, plan.value)
        except EngineError as e:
            raise AgentBehaviourError(agent.id, e)
        x, y = agent.position
        new_env = _environment_effect(env, x, y, output) if plan.fn.target.kind is PortKind.STREAM else env
        if new_env is None:
            logging.warning("Agent %d: '%s' rolled back, nothing to take at (%d,%d)", agent.id, plan.fn.name, x, y)
            warnings.append(f"environment-contention: agent {agent.id} {plan.fn.name} at ({x},{y})")
            agents.append(agent)
            activities.append(AgentActivity(agent.id, idle=IDLE_CONTENTION))
            continue
        nx, ny = memory.get("x"), memory.get("y")
        if not env.in_bounds(nx, ny):
            raise AgentBehaviourError(agent.id, OutOfBounds(f"'{plan.fn.name}' moves the agent to ({nx},{ny})"))
        env = new_env
        if plan.from_peer is not None:
            del pending[(plan.from_peer, agent.id)]
        if plan.to_peer is not None:
            pending[(agent.id, plan.to_peer)] = output
        agents.append(replace(agent, state=plan.next_state, memory=memory))
        activities.append(AgentActivity(agent.id, fired=plan.fn.name, output=output))

    return replace(system, agents=tuple(agents), environment=env, pending=pending), activities, warnings


#
# mutation phase
#


def condition_context(system: OperasSystem, agent: AgentInstance) -> EvalContext:
    env = system.environment
    x, y = agent.position

    def local(sym):
        return env.at(x, y).count(sym)

    def nearby(sym):
        return sum(env.at(cx, cy).count(sym) for _, cx, cy in neighbourhood(x, y) if env.in_bounds(cx, cy))

    def global_count(sym):
        return env.globals.count(sym)

    variables = {**agent.memory, "state": agent.state, "peers": len(system.peers(agent.id))}
    return EvalContext(variables, {"local": local, "nearby": nearby, "global": global_count})


def _distance(a: AgentInstance, b: AgentInstance) -> int:
    (ax, ay), (bx, by) = a.position, b.position
    return abs(ax - bx) + abs(ay - by)


def resolve_selector(system: OperasSystem, agent: AgentInstance, selector: str) -> int | None:
    """
    Resolves a selector to at most one agent id; None when nothing matches.
    Ties between equally distant agents go to the lowest id.
    """
    if selector == "self":
        return agent.id
    peers = system.peers(agent.id)
    if selector == "peer":
        if len(peers) > 1:
            raise SelectorAmbiguous(f"Agent {agent.id} has {len(peers)} peers; 'peer' needs exactly one")
        return peers[0] if peers else None
    if selector == "nearest":
        pool = [a for a in system.agents if a.id != agent.id]
    elif selector in ("nearest_peer", "farthest_peer"):
        pool = [a for a in system.agents if a.id in peers]
    else:
        raise SelectorAmbiguous(f"Unknown selector '{selector}'")
    if not pool:
        return None
    if selector == "farthest_peer":
        return min(pool, key=lambda b: (-_distance(agent, b), b.id)).id
    return min(pool, key=lambda b: (_distance(agent, b), b.id)).id


def _evaluate_condition(rule: ReconfigRule, ctx: EvalContext) -> bool:
    unbound = free_variables(rule.condition) - set(ctx.variables)
    if unbound:
        # global rules only apply to agents whose memory has the fields they mention
        return False
    v = rule.condition.evaluate(ctx)
    if not isinstance(v, bool):
        raise EvaluationError(f"Condition of rule '{rule.name}' evaluated to {v!r}, not a boolean")
    return v


def mutation_phase(system: OperasSystem, rng: SeededRng) -> tuple[OperasSystem, dict[str, int], list[str]]:
    """
    Evaluates every agent's own rules then the global rules against the post-behaviour
    snapshot and applies the fired actions: removals, additions, channel removals,
    channel additions.
    """
    registry = system.type_registry
    removals: list[int] = []
    additions: list[tuple[AgentInstance, AddAgent, EvalContext]] = []
    disconnects: list[tuple[int, int]] = []
    connects: list[tuple[int, int]] = []
    warnings: list[str] = []

    for agent in system.agents:
        ctx = condition_context(system, agent)
        fired: list[ReconfigRule] = []
        try:
            for rule in registry[agent.agent_type].str_mut + system.model.rules:
                if _evaluate_condition(rule, ctx):
                    fired.append(rule)
        except EngineError as e:
            raise AgentBehaviourError(agent.id, e)

        structural = [r for r in fired if r.action.structural]
        if len(structural) > 1:
            winner = structural[rng.below(len(structural))]
            names = ", ".join(r.name for r in structural)
            logging.warning("Agent %d: structural rules %s conflict, '%s' fires", agent.id, names, winner.name)
            warnings.append(f"rule-conflict: agent {agent.id} rules {names}; fired {winner.name}")
            fired = [r for r in fired if not r.action.structural or r is winner]

        for rule in fired:
            action = rule.action
            if isinstance(action, AddAgent):
                additions.append((agent, action, ctx))
                continue
            try:
                target = resolve_selector(system, agent, action.target)
            except SelectorAmbiguous as e:
                raise AgentBehaviourError(agent.id, e)
            if target is None:
                continue
            if isinstance(action, RemoveAgent):
                if target not in removals:
                    removals.append(target)
            elif target != agent.id:
                edge = bond(agent.id, target)
                if isinstance(action, AddChannel):
                    connects.append(edge)
                else:
                    disconnects.append(edge)

    # removals, pruning the channels of removed agents
    removed = set(removals)
    agents = [a for a in system.agents if a.id not in removed]
    comm = set(system.comm_relation)
    pending = dict(system.pending)
    for edge in sorted(comm):
        if edge[0] in removed or edge[1] in removed:
            comm.discard(edge)
            for key in (edge, (edge[1], edge[0])):
                if key in pending:
                    logging.warning("Message %r on channel %d->%d dropped with its agent", pending[key], *key)
                    warnings.append(f"message-dropped: {key[0]}->{key[1]}")
                    del pending[key]

    # additions start at (q0, m0) with the initializer evaluated in the creator's context
    next_id = system.next_id
    for creator, action, ctx in additions:
        t = registry[action.agent_type]
        memory = t.machine.initial_memory()
        types = t.machine.memory_types()
        for fname, expr in action.initializer:
            try:
                v = expr.evaluate(ctx)
            except EngineError as e:
                raise AgentBehaviourError(creator.id, e)
            if not conforms(v, types[fname]):
                raise AgentBehaviourError(creator.id, MemoryTypeError(f"Initializer sets '{fname}' of '{t.name}' to {v!r}"))
            memory[fname] = v
        memory["x"], memory["y"] = creator.position
        agents.append(AgentInstance(next_id, t.name, t.machine.initial_state, memory))
        next_id += 1

    live = {a.id for a in agents}
    disconnected = 0
    for edge in sorted(set(disconnects)):
        if edge not in comm:
            continue
        if edge in pending or (edge[1], edge[0]) in pending:
            logging.warning("Channel %d-%d still holds a message, removal deferred", *edge)
            warnings.append(f"channel-busy: {edge[0]}-{edge[1]}")
            continue
        comm.discard(edge)
        disconnected += 1

    connected = 0
    for edge in sorted(set(connects)):
        if edge in comm or edge[0] not in live or edge[1] not in live:
            continue
        comm.add(edge)
        connected += 1

    counts = {"added": len(additions), "removed": len(removed), "connected": connected, "disconnected": disconnected}
    new_system = replace(
        system,
        agents=tuple(agents),
        comm_relation=frozenset(comm),
        pending=pending,
        next_id=next_id,
    )
    return new_system, counts, warnings


def operas_step(system: OperasSystem, rng: SeededRng) -> OperasSystem:
    """
    One step: the behaviour phase, then the mutation phase on its result.
    """
    after_behaviour, activities, warnings = behaviour_phase(system)
    after_mutation, counts, more_warnings = mutation_phase(after_behaviour, rng)
    report = StepReport(tuple(activities), warnings=tuple(warnings + more_warnings), **counts)
    return replace(after_mutation, step_index=system.step_index + 1, report=report)


def run(model: OperasModel, steps: int, seed: int, listener: Callable[[dict], None] | None = None) -> Trace:
    """
    Runs up to steps steps; halts when a step changes nothing or the population is empty.
    """
    rng = SeededRng(seed)
    system = OperasSystem.from_model(model)
    trace = Trace(make_header(kind="operas", model_digest=model_digest(model), seed=seed, steps=steps), listener)
    trace.add_snapshot(system.to_record())
    logging.info("Starting OPERAS run: %d agents, %d steps, seed %d", len(system.agents), steps, seed)
    for _ in range(steps):
        if not system.agents:
            logging.info("OPERAS run halted at step %d: population is empty", system.step_index)
            trace.halt(system.step_index)
            return trace
        nxt = operas_step(system, rng)
        if nxt.report.fired_count() == 0 and nxt.report.mutation_count() == 0:
            logging.info("OPERAS run halted at step %d: nothing fired", system.step_index)
            trace.halt(system.step_index)
            return trace
        system = nxt
        logging.debug(
            "Step %d: %d agents, %d channels, %d fired",
            system.step_index, len(system.agents), len(system.comm_relation), system.report.fired_count(),
        )
        trace.add_snapshot(system.to_record())
    trace.complete(system.step_index)
    return trace
