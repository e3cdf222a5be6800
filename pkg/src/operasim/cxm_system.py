"""
cxm_system.py
----------------
Communicating X-machine systems with single-slot blocking channels
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
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping

from .errors import EvaluationError, NondeterminismError, ValidationError, XMachineError
from .expressions import EvalContext, Expr, conforms, value_to_json
from .pps_model import ModelProblem
from .seeded_rng import SeededRng
from .trace import Trace, make_header, model_digest
from .xm_engine import (
    GuardedFunction,
    PortKind,
    XMachineDef,
    apply_function,
    errors_only,
    guard_holds,
    machine_record,
)

IDLE_STREAM_EXHAUSTED = "stream-exhausted"
IDLE_BLOCKED_READ = "blocked-read"
IDLE_BLOCKED_WRITE = "blocked-write"
IDLE_NO_FUNCTION = "no-applicable-function"


@dataclass(frozen=True)
class MachineInstance:
    name: str
    machine: str
    memory: tuple[tuple[str, Expr], ...] = ()
    stream: tuple[str, ...] = ()
    initial_state: str | None = None


@dataclass(frozen=True)
class Channel:
    name: str
    sender: str
    receiver: str


@dataclass(frozen=True)
class CxmModel:
    machines: tuple[XMachineDef, ...]
    instances: tuple[MachineInstance, ...]
    channels: tuple[Channel, ...] = ()
    name: str | None = field(default=None, compare=False)

    def definition(self, name: str) -> XMachineDef | None:
        for m in self.machines:
            if m.name == name:
                return m
        return None

    def problems(self) -> list[ModelProblem]:
        found: list[ModelProblem] = []
        channel_names = {c.name for c in self.channels}
        seen: set[str] = set()
        for m in self.machines:
            if m.name in seen:
                found.append(ModelProblem("E-DUPLICATE", f"Machine '{m.name}' declared twice", m.name))
            seen.add(m.name)
            found.extend(m.problems(channels=channel_names))

        instance_names: set[str] = set()
        for inst in self.instances:
            if inst.name in instance_names:
                found.append(ModelProblem("E-DUPLICATE", f"Instance '{inst.name}' declared twice", inst.name))
            instance_names.add(inst.name)
            d = self.definition(inst.machine)
            if d is None:
                found.append(ModelProblem("E-UNDECLARED-MACHINE", f"Machine '{inst.machine}' is not declared", inst.machine))
                continue
            types = d.memory_types()
            for fname, expr in inst.memory:
                if fname not in types:
                    found.append(ModelProblem("E-UNKNOWN-FIELD", f"Instance '{inst.name}' sets unknown field '{fname}'", fname))
                    continue
                try:
                    v = expr.evaluate(EvalContext())
                except EvaluationError as e:
                    found.append(ModelProblem("E-BAD-MEMORY", f"Instance '{inst.name}' field '{fname}': {e}", fname))
                    continue
                if not conforms(v, types[fname]):
                    found.append(ModelProblem("E-BAD-MEMORY", f"Instance '{inst.name}' field '{fname}' is not of type {types[fname]}", fname))
            for sym in inst.stream:
                if sym not in d.inputs:
                    found.append(ModelProblem("E-UNDECLARED-SYMBOL", f"Stream symbol '{sym}' of '{inst.name}' is not an input of '{d.name}'", sym))
            if inst.initial_state is not None and inst.initial_state not in d.states:
                found.append(ModelProblem("E-BAD-INITIAL", f"Initial state '{inst.initial_state}' of '{inst.name}' is not declared", inst.initial_state))

        by_name: dict[str, Channel] = {}
        for ch in self.channels:
            if ch.name in by_name:
                found.append(ModelProblem("E-DUPLICATE", f"Channel '{ch.name}' declared twice", ch.name))
            by_name[ch.name] = ch
            for end in (ch.sender, ch.receiver):
                if end not in instance_names:
                    found.append(ModelProblem("E-UNDECLARED-MACHINE", f"Channel '{ch.name}' references unknown instance '{end}'", end))
            if ch.sender == ch.receiver:
                found.append(ModelProblem("E-BAD-PORT", f"Channel '{ch.name}' connects '{ch.sender}' to itself", ch.name))

        # every instance must be the proper end of the channels its machine binds to
        for inst in self.instances:
            d = self.definition(inst.machine)
            if d is None:
                continue
            for fn in d.functions:
                if fn.source.kind is PortKind.CHANNEL and fn.source.channel in by_name:
                    if by_name[fn.source.channel].receiver != inst.name:
                        found.append(ModelProblem("E-BAD-PORT", f"'{inst.name}' reads channel '{fn.source.channel}' but is not its receiver", fn.source.channel))
                if fn.target.kind is PortKind.CHANNEL and fn.target.channel in by_name:
                    if by_name[fn.target.channel].sender != inst.name:
                        found.append(ModelProblem("E-BAD-PORT", f"'{inst.name}' writes channel '{fn.target.channel}' but is not its sender", fn.target.channel))
        return found


#
# runtime state
#


@dataclass(frozen=True)
class MachineState:
    name: str
    definition: XMachineDef
    state: str
    memory: Mapping[str, Any]
    stream: tuple[str, ...] = ()
    position: int = 0

    def next_input(self) -> str | None:
        return self.stream[self.position] if self.position < len(self.stream) else None


@dataclass(frozen=True)
class ChannelState:
    name: str
    sender: str
    receiver: str
    buffer: Any = None

    def is_full(self) -> bool:
        return self.buffer is not None

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "from": self.sender,
            "to": self.receiver,
            "buffer": None if self.buffer is None else value_to_json(self.buffer),
        }


@dataclass(frozen=True)
class Activity:
    """
    What one machine did in a round: the fired function or the reason it idled.
    """

    machine: str
    fired: str | None = None
    idle: str | None = None
    output: Any = None


@dataclass(frozen=True)
class CxmSystem:
    machines: tuple[MachineState, ...]
    channels: tuple[ChannelState, ...]
    round_index: int = 0
    last_round: tuple[Activity, ...] = ()

    @staticmethod
    def from_model(model: CxmModel) -> "CxmSystem":
        problems = errors_only(model.problems())
        if problems:
            raise ValidationError(f"CXM model has {len(problems)} problem(s): {problems[0].message}", problems)
        machines = []
        for inst in model.instances:
            d = model.definition(inst.machine)
            memory = d.initial_memory()
            for fname, expr in inst.memory:
                memory[fname] = expr.evaluate(EvalContext())
            machines.append(MachineState(inst.name, d, inst.initial_state or d.initial_state, memory, inst.stream))
        channels = tuple(ChannelState(c.name, c.sender, c.receiver) for c in model.channels)
        return CxmSystem(tuple(machines), channels)

    def machine(self, name: str) -> MachineState:
        for m in self.machines:
            if m.name == name:
                return m
        raise KeyError(name)

    def channel(self, name: str) -> ChannelState:
        for c in self.channels:
            if c.name == name:
                return c
        raise KeyError(name)

    def fired_count(self) -> int:
        return sum(1 for a in self.last_round if a.fired is not None)

    def to_record(self) -> dict:
        by_name = {a.machine: a for a in self.last_round}
        machines = []
        for m in self.machines:
            a = by_name.get(m.name, Activity(m.name))
            machines.append(machine_record(m.name, m.state, m.memory, a.fired, a.idle, a.output))
        return {
            "step": self.round_index,
            "machines": machines,
            "channels": [c.to_record() for c in self.channels],
        }


def _port_ready(fn: GuardedFunction, buffers: Mapping[str, ChannelState]) -> bool:
    if fn.target.kind is PortKind.CHANNEL:
        return not buffers[fn.target.channel].is_full()
    return True


def _plan(m: MachineState, buffers: Mapping[str, ChannelState]) -> tuple[GuardedFunction, str, Any] | str:
    """
    Chooses the function a machine fires this round against the pre-round snapshot.
    Returns (function, next state, input) or the idle reason.
    Channel-bound and stream-bound functions compete on equal terms: more than one
    enabled function raises NondeterminismError.
    """
    d = m.definition
    arcs = d.outgoing(m.state)
    blocked_write = False
    blocked_read = False
    enabled: list[tuple[GuardedFunction, str, Any]] = []

    for fn, nxt in arcs:
        if fn.source.kind is not PortKind.CHANNEL:
            continue
        ch = buffers[fn.source.channel]
        if not ch.is_full():
            blocked_read = True
        elif guard_holds(fn, m.memory, ch.buffer):
            if _port_ready(fn, buffers):
                enabled.append((fn, nxt, ch.buffer))
            else:
                blocked_write = True

    stream_arcs = [(fn, nxt) for fn, nxt in arcs if fn.source.kind is PortKind.STREAM]
    symbol = m.next_input()
    if symbol is not None:
        for fn, nxt in stream_arcs:
            if not guard_holds(fn, m.memory, symbol):
                continue
            if _port_ready(fn, buffers):
                enabled.append((fn, nxt, symbol))
            else:
                blocked_write = True

    if len(enabled) > 1:
        names = [fn.name for fn, _, _ in enabled]
        raise NondeterminismError(
            f"Functions {', '.join(names)} are all applicable in state '{m.state}' of '{m.name}'",
            m.state,
            enabled[0][2],
            names,
        )
    if enabled:
        return enabled[0]

    if blocked_write:
        return IDLE_BLOCKED_WRITE
    if blocked_read:
        return IDLE_BLOCKED_READ
    if stream_arcs and symbol is None:
        return IDLE_STREAM_EXHAUSTED
    return IDLE_NO_FUNCTION


def cxm_step(system: CxmSystem, rng: SeededRng | None = None) -> CxmSystem:
    """
    One synchronous round. Every fire is computed against the pre-round state and
    the round is then committed atomically, in machine order.
    A message written in a round can only be read in a later round.
    """
    buffers = {c.name: c for c in system.channels}
    plans = []
    for m in system.machines:
        try:
            plans.append(_plan(m, buffers))
        except XMachineError as e:
            e.machine = m.name
            raise

    new_buffers = dict(buffers)
    machines = []
    activity = []
    for m, plan in zip(system.machines, plans):
        if isinstance(plan, str):
            machines.append(m)
            activity.append(Activity(m.name, idle=plan))
            continue
        fn, nxt, value = plan
        output, memory = apply_function(m.definition, fn, m.memory, value)
        position = m.position
        if fn.source.kind is PortKind.CHANNEL:
            new_buffers[fn.source.channel] = replace(new_buffers[fn.source.channel], buffer=None)
        else:
            position += 1
        if fn.target.kind is PortKind.CHANNEL:
            new_buffers[fn.target.channel] = replace(new_buffers[fn.target.channel], buffer=output)
        machines.append(replace(m, state=nxt, memory=memory, position=position))
        activity.append(Activity(m.name, fired=fn.name, output=output))

    return CxmSystem(
        machines=tuple(machines),
        channels=tuple(new_buffers[c.name] for c in system.channels),
        round_index=system.round_index + 1,
        last_round=tuple(activity),
    )


def run(model: CxmModel, steps: int, seed: int, listener: Callable[[dict], None] | None = None) -> Trace:
    """
    Runs up to steps rounds; halts as soon as a round fires nothing.
    """
    rng = SeededRng(seed)
    system = CxmSystem.from_model(model)
    trace = Trace(make_header(kind="cxm", model_digest=model_digest(model), seed=seed, steps=steps), listener)
    trace.add_snapshot(system.to_record())
    logging.info("Starting CXM run: %d machines, %d channels, %d rounds", len(system.machines), len(system.channels), steps)
    for _ in range(steps):
        nxt = cxm_step(system, rng)
        if nxt.fired_count() == 0:
            logging.info("CXM run halted at round %d: no machine can fire", system.round_index)
            trace.halt(system.round_index)
            return trace
        system = nxt
        logging.debug("Round %d: %d machine(s) fired", system.round_index, system.fired_count())
        trace.add_snapshot(system.to_record())
    trace.complete(system.round_index)
    return trace
