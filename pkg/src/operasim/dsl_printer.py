"""
dsl_printer.py
----------------
Canonical pretty-printer for .opml model documents
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

from typing import Any

from .cxm_system import CxmModel, MachineInstance
from .expressions import Expr, INPUT_VAR, TRUE, Var
from .multiset import Multiset
from .operas import AddAgent, AddChannel, AgentType, OperasModel, ReconfigRule, RemoveAgent, RemoveChannel, percept_alphabet
from .pps_model import CommEnter, CommExit, CommIn, Die, Differentiate, Divide, PpsModel, PpsRule, Transform
from .xm_engine import GuardedFunction, Port, PortKind, STREAM, XMachineDef, XmModel

INDENT = "    "


def _names(names) -> str:
    return " ".join(sorted(names))


def _symbols(ms: Multiset) -> str:
    return " ".join(ms.expand())


def _header(keyword: str, name: str | None) -> str:
    return f"{keyword} {name} {{" if name else f"{keyword} {{"


def _block(header: str, body: list[str], depth: int) -> list[str]:
    pad = INDENT * depth
    return [pad + header] + body + [pad + "}"]


#
# pps
#


def rule_to_source(rule: PpsRule) -> str:
    t = rule.cell_type
    if isinstance(rule, Transform):
        return f"transform {t}: {rule.consumed} -> {_symbols(rule.produced)}"
    if isinstance(rule, (CommIn, CommEnter)):
        keyword = "in" if isinstance(rule, CommIn) else "enter"
        when = f" when {rule.trigger}" if rule.trigger is not None else ""
        return f"{keyword} {t}: {rule.moved}{when}"
    if isinstance(rule, CommExit):
        return f"exit {t}: {rule.moved}"
    if isinstance(rule, Differentiate):
        return f"differentiate {t}: {rule.consumed} -> {_symbols(rule.produced)} as {rule.to_type}"
    if isinstance(rule, Divide):
        text = f"divide {t}: {rule.consumed} -> ({_symbols(rule.left_product)}) ({_symbols(rule.right_product)})"
        return text + (f" as {rule.right_type}" if rule.right_type is not None else "")
    if isinstance(rule, Die):
        return f"die {t}: {rule.consumed}"
    raise TypeError(f"Not a PPS rule: {rule!r}")


def _pps_lines(model: PpsModel) -> list[str]:
    pad = INDENT
    body = []
    if model.alphabet:
        body.append(f"{pad}alphabet {_names(model.alphabet)};")
    if model.cell_types:
        body.append(f"{pad}types {_names(model.cell_types)};")
    if model.env_init:
        body.append(f"{pad}environment {model.env_init};")
    for contents, cell_type in model.initial_cells:
        body.append(f"{pad}cell {cell_type} {contents};")
    for i, j in sorted(model.initial_graph):
        body.append(f"{pad}bond {i} {j};")
    for r in model.bond_rules:
        body.append(f"{pad}bondrule {r.left_type} {r.left_required} {r.right_required} {r.right_type};")
    for rule in model.rules:
        body.append(f"{pad}rule {rule_to_source(rule)};")
    return _block(_header("pps", model.name), body, 0)


#
# machines
#


def _port(port: Port) -> str:
    if port.kind is PortKind.CHANNEL:
        return f"channel {port.channel}"
    return "peer" if port.kind is PortKind.PEER else "stream"


def _function_lines(fn: GuardedFunction, depth: int) -> list[str]:
    pad = INDENT * (depth + 1)
    header = f"function {fn.name}"
    if fn.source != STREAM:
        header += f" from {_port(fn.source)}"
    if fn.target != STREAM:
        header += f" to {_port(fn.target)}"
    body = []
    if fn.guard != TRUE:
        body.append(f"{pad}guard {fn.guard.to_source()};")
    if fn.output != Var(INPUT_VAR):
        body.append(f"{pad}output {fn.output.to_source()};")
    for name, expr in fn.updates:
        body.append(f"{pad}update {name} = {expr.to_source()};")
    return _block(header + " {", body, depth)


def machine_body(machine: XMachineDef, depth: int, implied_inputs: frozenset[str] = frozenset()) -> list[str]:
    """
    Statements of a machine definition, indented to the given depth.
    """
    pad = INDENT * depth
    lines = []
    inputs = machine.inputs - implied_inputs
    if inputs:
        lines.append(f"{pad}inputs {_names(inputs)};")
    if machine.outputs:
        lines.append(f"{pad}outputs {_names(machine.outputs)};")
    if machine.states:
        lines.append(f"{pad}states {_names(machine.states)};")
    lines.append(f"{pad}initial {machine.initial_state};")
    for f in machine.memory:
        lines.append(f"{pad}memory {f.name} : {f.type_name} = {f.initial.to_source()};")
    for fn in machine.functions:
        lines.extend(_function_lines(fn, depth))
    for t in machine.transitions:
        lines.append(f"{pad}transition {t.state} {t.function} -> {t.next_state};")
    return lines


def _xm_lines(model: XmModel) -> list[str]:
    body = machine_body(model.machine, 1)
    if model.stream:
        body.append(f"{INDENT}stream {' '.join(model.stream)};")
    return _block(_header("xm", model.machine.name), body, 0)


def _instance_lines(inst: MachineInstance) -> list[str]:
    pad = INDENT * 2
    body = [f"{pad}memory {name} = {expr.to_source()};" for name, expr in inst.memory]
    if inst.stream:
        body.append(f"{pad}stream {' '.join(inst.stream)};")
    if inst.initial_state is not None:
        body.append(f"{pad}initial {inst.initial_state};")
    return _block(f"instance {inst.name} : {inst.machine} {{", body, 1)


def _cxm_lines(model: CxmModel) -> list[str]:
    body = []
    for m in model.machines:
        body.extend(_block(f"machine {m.name} {{", machine_body(m, 2), 1))
    for inst in model.instances:
        body.extend(_instance_lines(inst))
    for c in model.channels:
        body.append(f"{INDENT}channel {c.name} : {c.sender} -> {c.receiver};")
    return _block(_header("cxm", model.name), body, 0)


#
# operas
#


def _inits(inits: tuple[tuple[str, Expr], ...]) -> str:
    if not inits:
        return "{}"
    return "{ " + ", ".join(f"{name} = {expr.to_source()}" for name, expr in inits) + " }"


def action_to_source(action: Any) -> str:
    if isinstance(action, AddAgent):
        return f"add {action.agent_type} {_inits(action.initializer)}"
    if isinstance(action, RemoveAgent):
        return f"remove {action.target}"
    if isinstance(action, AddChannel):
        return f"connect {action.target}"
    if isinstance(action, RemoveChannel):
        return f"disconnect {action.target}"
    raise TypeError(f"Not a reconfiguration action: {action!r}")


def _reconfig(rule: ReconfigRule, depth: int) -> str:
    return f"{INDENT * depth}reconfig {rule.name}: when {rule.condition.to_source()} => {action_to_source(rule.action)};"


def _agent_type_lines(t: AgentType) -> list[str]:
    pad = INDENT * 2
    body = []
    if t.percepts:
        body.append(f"{pad}percepts {_names(t.percepts)};")
    implied = percept_alphabet(t.percepts)
    body.extend(_block("machine {", machine_body(t.machine, 3, implied), 2))
    body.extend(_reconfig(r, 2) for r in t.str_mut)
    return _block(f"agenttype {t.name} {{", body, 1)


def _operas_lines(model: OperasModel) -> list[str]:
    pad = INDENT
    body = [f"{pad}grid {model.width} {model.height};"]
    if model.globals:
        body.append(f"{pad}globals {model.globals};")
    for x, y, contents in model.places:
        body.append(f"{pad}place {x} {y} {contents};")
    for t in model.agent_types:
        body.extend(_agent_type_lines(t))
    for a in model.agents:
        body.append(f"{pad}agent {a.agent_type} {_inits(a.memory)};")
    for i, j in model.links:
        body.append(f"{pad}link {i} {j};")
    body.extend(_reconfig(r, 1) for r in model.rules)
    return _block(_header("operas", model.name), body, 0)


def print_body(body: PpsModel | XmModel | CxmModel | OperasModel) -> str:
    if isinstance(body, PpsModel):
        lines = _pps_lines(body)
    elif isinstance(body, XmModel):
        lines = _xm_lines(body)
    elif isinstance(body, CxmModel):
        lines = _cxm_lines(body)
    elif isinstance(body, OperasModel):
        lines = _operas_lines(body)
    else:
        raise TypeError(f"Cannot print {type(body).__name__}")
    return "\n".join(lines) + "\n"


def print_document(doc) -> str:
    """
    Prints a parsed document in canonical form; parsing the result yields an equal document.
    """
    return print_body(doc.body)
