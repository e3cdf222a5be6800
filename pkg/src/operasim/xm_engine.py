"""
xm_engine.py
----------------
Deterministic stream X-machines: definitions, single steps and stream runs
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
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping, Sequence

from .errors import (
    EvaluationError,
    MemoryTypeError,
    NoApplicableFunction,
    NondeterminismError,
    ValidationError,
    XMachineError,
)
from .expressions import (
    BUILTINS,
    INPUT_VAR,
    EvalContext,
    Expr,
    TRUE,
    Var,
    called_functions,
    conforms,
    free_variables,
    value_to_json,
)
from .pps_model import ModelProblem
from .seeded_rng import SeededRng
from .trace import Trace, make_header, model_digest

Memory = Mapping[str, Any]


class PortKind(Enum):
    STREAM = "stream"
    CHANNEL = "channel"
    PEER = "peer"


@dataclass(frozen=True)
class Port:
    kind: PortKind = PortKind.STREAM
    channel: str | None = None

    def __str__(self) -> str:
        if self.kind is PortKind.CHANNEL:
            return f"channel {self.channel}"
        return self.kind.value


STREAM = Port()
PEER = Port(PortKind.PEER)


@dataclass(frozen=True)
class MemoryField:
    name: str
    type_name: str
    initial: Expr


@dataclass(frozen=True)
class GuardedFunction:
    """
    A partial function of (input, memory): defined where guard holds, producing
    the output expression and the simultaneous field updates.
    """

    name: str
    guard: Expr = TRUE
    output: Expr = Var(INPUT_VAR)
    updates: tuple[tuple[str, Expr], ...] = ()
    source: Port = STREAM
    target: Port = STREAM


@dataclass(frozen=True)
class Transition:
    state: str
    function: str
    next_state: str


@dataclass(frozen=True)
class XMachineDef:
    name: str
    inputs: frozenset[str]
    outputs: frozenset[str]
    states: frozenset[str]
    memory: tuple[MemoryField, ...]
    functions: tuple[GuardedFunction, ...]
    transitions: tuple[Transition, ...]
    initial_state: str

    def function(self, name: str) -> GuardedFunction | None:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None

    def memory_types(self) -> dict[str, str]:
        return {f.name: f.type_name for f in self.memory}

    def initial_memory(self) -> dict[str, Any]:
        ctx = EvalContext()
        return {f.name: f.initial.evaluate(ctx) for f in self.memory}

    def outgoing(self, state: str) -> list[tuple[GuardedFunction, str]]:
        """
        Functions labelling the arcs leaving state, in declaration order.
        """
        out = []
        for t in self.transitions:
            if t.state == state:
                fn = self.function(t.function)
                if fn is not None:
                    out.append((fn, t.next_state))
        return out

    def reachable_states(self) -> set[str]:
        seen = {self.initial_state}
        frontier = [self.initial_state]
        while frontier:
            s = frontier.pop()
            for t in self.transitions:
                if t.state == s and t.next_state not in seen:
                    seen.add(t.next_state)
                    frontier.append(t.next_state)
        return seen

    def problems(
        self,
        channels: set[str] | None = None,
        allow_peer: bool = False,
        extra_variables: Sequence[str] = (),
        extra_functions: Sequence[str] = (),
    ) -> list[ModelProblem]:
        """
        Returns the static defects of this machine.
        channels lists the channel names the machine may bind to (None for a standalone machine).
        """
        found: list[ModelProblem] = []
        if self.initial_state not in self.states:
            found.append(ModelProblem("E-BAD-INITIAL", f"Initial state '{self.initial_state}' is not declared", self.initial_state))

        types = self.memory_types()
        seen_fields: set[str] = set()
        for f in self.memory:
            if f.name in seen_fields:
                found.append(ModelProblem("E-DUPLICATE", f"Memory field '{f.name}' declared twice", f.name))
            seen_fields.add(f.name)
            if f.type_name not in ("int", "bool", "symbol", "tuple", "seq", "set"):
                found.append(ModelProblem("E-BAD-MEMORY", f"Unknown memory type '{f.type_name}'", f.type_name))
                continue
            try:
                v = f.initial.evaluate(EvalContext())
            except EvaluationError as e:
                found.append(ModelProblem("E-BAD-MEMORY", f"Initial value of '{f.name}' is not a constant: {e}", f.name))
                continue
            if not conforms(v, f.type_name):
                found.append(ModelProblem("E-BAD-MEMORY", f"Initial value of '{f.name}' is not of type {f.type_name}", f.name))

        variables = set(types) | {INPUT_VAR} | set(extra_variables)
        known_calls = set(BUILTINS) | set(extra_functions)
        seen_fns: set[str] = set()
        for fn in self.functions:
            if fn.name in seen_fns:
                found.append(ModelProblem("E-DUPLICATE", f"Function '{fn.name}' declared twice", fn.name))
            seen_fns.add(fn.name)
            exprs = [fn.guard, fn.output] + [e for _, e in fn.updates]
            for e in exprs:
                for v in sorted(free_variables(e) - variables):
                    found.append(ModelProblem("E-UNKNOWN-FIELD", f"Function '{fn.name}' refers to unknown name '{v}'", v))
                for c in sorted(called_functions(e) - known_calls):
                    found.append(ModelProblem("E-UNKNOWN-CALL", f"Function '{fn.name}' calls unknown function '{c}'", c))
            for target, _ in fn.updates:
                if target not in types:
                    found.append(ModelProblem("E-UNKNOWN-FIELD", f"Function '{fn.name}' updates unknown field '{target}'", target))
            for port in (fn.source, fn.target):
                if port.kind is PortKind.PEER and not allow_peer:
                    found.append(ModelProblem("E-BAD-PORT", f"Function '{fn.name}' binds to a peer outside an agent type", fn.name))
                if port.kind is PortKind.CHANNEL:
                    if channels is None:
                        found.append(ModelProblem("E-BAD-PORT", f"Function '{fn.name}' binds to a channel outside a communicating system", fn.name))
                    elif port.channel not in channels:
                        found.append(ModelProblem("E-UNDECLARED-CHANNEL", f"Channel '{port.channel}' is not declared", port.channel))

        seen_arcs: set[tuple[str, str]] = set()
        for t in self.transitions:
            for s in (t.state, t.next_state):
                if s not in self.states:
                    found.append(ModelProblem("E-UNDECLARED-STATE", f"State '{s}' is not declared", s))
            if t.function not in seen_fns:
                found.append(ModelProblem("E-UNDECLARED-FUNCTION", f"Function '{t.function}' is not declared", t.function))
            if (t.state, t.function) in seen_arcs:
                found.append(ModelProblem("E-DUPLICATE", f"Transition from '{t.state}' by '{t.function}' declared twice", t.function))
            seen_arcs.add((t.state, t.function))

        if not self.transitions:
            found.append(ModelProblem("W-NO-RULES", f"Machine '{self.name}' has no transitions", self.name))
        elif self.initial_state in self.states:
            for s in sorted(self.states - self.reachable_states()):
                found.append(ModelProblem("W-UNREACHABLE-STATE", f"State '{s}' is unreachable from '{self.initial_state}'", s))
        return found


def errors_only(problems: list[ModelProblem]) -> list[ModelProblem]:
    return [p for p in problems if not p.code.startswith("W-")]


#
# firing
#


def guard_holds(fn: GuardedFunction, memory: Memory, input_value: Any, ctx_extra: Mapping[str, Callable] | None = None) -> bool:
    ctx = EvalContext({**memory, INPUT_VAR: input_value}, ctx_extra)
    v = fn.guard.evaluate(ctx)
    if not isinstance(v, bool):
        raise EvaluationError(f"Guard of '{fn.name}' evaluated to {v!r}, not a boolean")
    return v


def apply_function(machine: XMachineDef, fn: GuardedFunction, memory: Memory, input_value: Any) -> tuple[Any, dict[str, Any]]:
    """
    Evaluates output and updates against the pre-step memory; returns (output, new memory).
    """
    ctx = EvalContext({**memory, INPUT_VAR: input_value})
    output = fn.output.evaluate(ctx)
    types = machine.memory_types()
    new_memory = dict(memory)
    for name, expr in fn.updates:
        v = expr.evaluate(ctx)
        if not conforms(v, types[name]):
            raise MemoryTypeError(f"Function '{fn.name}' assigns {v!r} to field '{name}' of type {types[name]}")
        new_memory[name] = v
    if fn.target.kind is PortKind.STREAM:
        if not isinstance(output, str) or output not in machine.outputs:
            raise EvaluationError(f"Function '{fn.name}' emitted {output!r}, which is not an output symbol")
    return output, new_memory


def select_single(
    machine: XMachineDef,
    state: str,
    memory: Memory,
    input_value: Any,
    candidates: list[tuple[GuardedFunction, str]],
) -> tuple[GuardedFunction, str] | None:
    """
    Returns the unique candidate whose guard holds, None if none does.
    Raises NondeterminismError when more than one guard holds.
    """
    enabled = [(fn, nxt) for fn, nxt in candidates if guard_holds(fn, memory, input_value)]
    if len(enabled) > 1:
        names = [fn.name for fn, _ in enabled]
        raise NondeterminismError(
            f"Functions {', '.join(names)} are all applicable in state '{state}' of machine '{machine.name}'",
            state,
            input_value,
            names,
        )
    return enabled[0] if enabled else None


def stream_fire(machine: XMachineDef, state: str, memory: Memory, input_value: str) -> tuple[str, str, dict[str, Any], Any]:
    """
    Applies the single stream function enabled on (state, input, memory).
    Returns (function name, next state, new memory, output).
    """
    if input_value not in machine.inputs:
        raise XMachineError(f"Input '{input_value}' is not in the input alphabet of '{machine.name}'", state, input_value)
    candidates = [(fn, nxt) for fn, nxt in machine.outgoing(state) if fn.source.kind is PortKind.STREAM and fn.target.kind is PortKind.STREAM]
    chosen = select_single(machine, state, memory, input_value, candidates)
    if chosen is None:
        raise NoApplicableFunction(f"No function of '{machine.name}' accepts '{input_value}' in state '{state}'", state, input_value)
    fn, nxt = chosen
    output, new_memory = apply_function(machine, fn, memory, input_value)
    return fn.name, nxt, new_memory, output


def xm_step(machine: XMachineDef, state: str, memory: Memory, input_value: str) -> tuple[str, dict[str, Any], Any]:
    """
    Returns (next state, new memory, output) of one stream step.
    """
    _, nxt, new_memory, output = stream_fire(machine, state, memory, input_value)
    return nxt, new_memory, output


def run_stream(machine: XMachineDef, inputs: Sequence[str]) -> list[Any]:
    """
    Folds xm_step over the inputs starting from (q0, m0).
    Errors carry the offending input index and the outputs produced before it.
    """
    state = machine.initial_state
    memory = machine.initial_memory()
    outputs: list[Any] = []
    for index, symbol in enumerate(inputs):
        try:
            state, memory, out = xm_step(machine, state, memory, symbol)
        except XMachineError as e:
            e.input_index = index
            e.partial_outputs = list(outputs)
            e.machine = machine.name
            raise
        outputs.append(out)
    return outputs


@dataclass(frozen=True)
class XmModel:
    """
    A standalone stream X-machine together with the input stream it consumes.
    """

    machine: XMachineDef
    stream: tuple[str, ...] = ()
    name: str | None = field(default=None, compare=False)

    def problems(self) -> list[ModelProblem]:
        found = self.machine.problems()
        for sym in self.stream:
            if sym not in self.machine.inputs:
                found.append(ModelProblem("E-UNDECLARED-SYMBOL", f"Stream symbol '{sym}' is not in the input alphabet", sym))
        return found


def machine_record(name: str, state: str, memory: Memory, fired: str | None, idle: str | None, output: Any = None) -> dict:
    rec = {
        "id": name,
        "state": state,
        "memory": {k: value_to_json(v) for k, v in sorted(memory.items())},
        "fired": fired,
        "idle": idle,
    }
    if output is not None:
        rec["output"] = value_to_json(output)
    return rec


def run_model(model: XmModel, steps: int, seed: int, listener: Callable[[dict], None] | None = None) -> Trace:
    """
    Runs a standalone machine over its stream, one input per step.
    A machine that rejects its input halts the run.
    """
    problems = errors_only(model.problems())
    if problems:
        raise ValidationError(f"X-machine model has {len(problems)} problem(s): {problems[0].message}", problems)
    SeededRng(seed)  # validates the seed; stream machines draw nothing
    machine = model.machine
    trace = Trace(make_header(kind="xm", model_digest=model_digest(model), seed=seed, steps=steps), listener)
    state, memory = machine.initial_state, machine.initial_memory()
    trace.add_snapshot({"step": 0, "machines": [machine_record(machine.name, state, memory, None, None)], "channels": []})
    logging.info("Starting X-machine run of '%s' over %d inputs", machine.name, len(model.stream))
    for step in range(1, steps + 1):
        if step > len(model.stream):
            trace.halt(step - 1)
            return trace
        symbol = model.stream[step - 1]
        try:
            fired, state, memory, out = stream_fire(machine, state, memory, symbol)
        except NoApplicableFunction:
            logging.info("Machine '%s' rejects input %d ('%s') in state '%s'", machine.name, step - 1, symbol, state)
            trace.halt(step - 1)
            return trace
        trace.add_snapshot({"step": step, "machines": [machine_record(machine.name, state, memory, fired, None, out)], "channels": []})
    trace.complete(steps)
    return trace
