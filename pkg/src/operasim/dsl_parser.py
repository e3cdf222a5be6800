"""
dsl_parser.py
----------------
Parser for the .opml model-definition language (pps, xm, cxm and operas blocks)
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
from functools import lru_cache
from typing import Any

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError

from .cxm_system import Channel, CxmModel, MachineInstance
from .errors import CountOverflowError
from .expressions import (
    BoolLit,
    Binary,
    Call,
    IfExpr,
    IntLit,
    SeqLit,
    SetLit,
    SymLit,
    TRUE,
    TupleLit,
    Unary,
    Var,
    INPUT_VAR,
)
from .multiset import Multiset
from .operas import (
    AddAgent,
    AddChannel,
    AgentDecl,
    AgentType,
    OperasModel,
    ReconfigRule,
    RemoveAgent,
    RemoveChannel,
    percept_alphabet,
)
from .pps_model import (
    BondMakingRule,
    CommEnter,
    CommExit,
    CommIn,
    Die,
    Differentiate,
    Divide,
    PpsModel,
    Transform,
    bond,
)
from .dsl_validator import Diagnostic, ERROR, has_errors, validate
from .xm_engine import (
    GuardedFunction,
    MemoryField,
    PEER,
    Port,
    PortKind,
    STREAM,
    Transition,
    XMachineDef,
    XmModel,
)

# deepest bracket nesting accepted before the tree builder would exhaust the stack
MAX_NESTING = 200

GRAMMAR = r"""
start: block?

?block: pps_block | xm_block | cxm_block | operas_block

// ---------------- population P systems

pps_block: "pps" [NAME] "{" pps_item* "}"

?pps_item: "alphabet" NAME* ";"                          -> alphabet
         | "types" NAME* ";"                             -> types
         | "environment" multiset ";"                    -> environment
         | "cell" NAME multiset ";"                      -> cell
         | "bond" INT INT ";"                            -> bond
         | "bondrule" NAME multiset multiset NAME ";"    -> bondrule
         | "rule" rule_body ";"

?rule_body: "transform" NAME ":" NAME "->" NAME+                      -> r_transform
          | "in" NAME ":" NAME ["when" NAME]                          -> r_in
          | "enter" NAME ":" NAME ["when" NAME]                       -> r_enter
          | "exit" NAME ":" NAME                                      -> r_exit
          | "differentiate" NAME ":" NAME "->" NAME+ "as" NAME        -> r_differentiate
          | "divide" NAME ":" NAME "->" product product ["as" NAME]   -> r_divide
          | "die" NAME ":" NAME                                       -> r_die

product: "(" NAME+ ")"

multiset: "{" [ms_entry ("," ms_entry)*] "}"
ms_entry: NAME [":" INT]

// ---------------- X-machines

xm_block: "xm" [NAME] "{" xm_item* "}"

?xm_item: machine_item
        | "stream" NAME* ";"                             -> stream

?machine_item: "inputs" NAME* ";"                        -> inputs
             | "outputs" NAME* ";"                       -> outputs
             | "states" NAME* ";"                        -> states
             | "initial" NAME ";"                        -> initial
             | "memory" NAME ":" NAME "=" expr ";"       -> memory
             | "function" NAME [from_port] [to_port] "{" fn_item* "}"  -> function
             | "transition" NAME NAME "->" NAME ";"      -> transition

from_port: "from" port
to_port: "to" port

?port: "stream"                                          -> port_stream
     | "channel" NAME                                    -> port_channel
     | "peer"                                            -> port_peer

?fn_item: "guard" expr ";"                               -> guard
        | "output" expr ";"                              -> output
        | "update" NAME "=" expr ";"                     -> update

// ---------------- communicating X-machine systems

cxm_block: "cxm" [NAME] "{" cxm_item* "}"

?cxm_item: "machine" NAME "{" machine_item* "}"          -> machine
         | "instance" NAME ":" NAME "{" inst_item* "}"   -> instance
         | "channel" NAME ":" NAME "->" NAME ";"         -> channel

?inst_item: "memory" NAME "=" expr ";"                   -> inst_memory
          | "stream" NAME* ";"                           -> inst_stream
          | "initial" NAME ";"                           -> inst_initial

// ---------------- OPERAS

operas_block: "operas" [NAME] "{" operas_item* "}"

?operas_item: "grid" INT INT ";"                         -> grid
            | "place" INT INT multiset ";"               -> place
            | "globals" multiset ";"                     -> globals
            | "agenttype" NAME "{" type_item* "}"        -> agenttype
            | "agent" NAME "{" [inits] "}" ";"           -> agent
            | "link" INT INT ";"                         -> link
            | reconfig

?type_item: "percepts" NAME* ";"                         -> percepts
          | "machine" "{" machine_item* "}"              -> type_machine
          | reconfig

reconfig: "reconfig" NAME ":" "when" expr "=>" action ";"

?action: "add" NAME "{" [inits] "}"                      -> act_add
       | "remove" NAME                                   -> act_remove
       | "connect" NAME                                  -> act_connect
       | "disconnect" NAME                               -> act_disconnect

inits: init ("," init)*
init: NAME "=" expr

// ---------------- expressions

?expr: "if" expr "then" expr "else" expr                 -> if_expr
     | or_expr

?or_expr: or_expr "or" and_expr                          -> or_op
        | and_expr

?and_expr: and_expr "and" not_expr                       -> and_op
         | not_expr

?not_expr: "not" not_expr                                -> not_op
         | comparison

?comparison: sum "==" sum                                -> eq
           | sum "!=" sum                                -> ne
           | sum "<" sum                                 -> lt
           | sum "<=" sum                                -> le
           | sum ">" sum                                 -> gt
           | sum ">=" sum                                -> ge
           | sum "in" sum                                -> in_op
           | sum

?sum: sum "+" term                                       -> add
    | sum "-" term                                       -> sub
    | term

?term: term "*" unary                                    -> mul
     | term "/" unary                                    -> div
     | term "%" unary                                    -> mod
     | unary

?unary: "-" unary                                        -> neg
      | atom

?atom: INT                                               -> int_lit
     | "true"                                            -> true_lit
     | "false"                                           -> false_lit
     | SYMLIT                                            -> sym_lit
     | NAME "(" [args] ")"                               -> call
     | NAME                                              -> var
     | "(" expr ")"
     | "(" ")"                                           -> tuple_lit
     | "(" expr "," [args] ")"                           -> tuple_lit
     | "[" [args] "]"                                    -> seq_lit
     | "{" [args] "}"                                    -> set_lit

args: expr ("," expr)*

NAME: /[A-Za-z_][A-Za-z0-9_]*/
SYMLIT: /'[A-Za-z_][A-Za-z0-9_]*'/
INT: /[0-9]+/
LINE_COMMENT: /\/\/[^\n]*/
BLOCK_COMMENT: /\/\*[\s\S]*?\*\//

%import common.WS
%ignore WS
%ignore LINE_COMMENT
%ignore BLOCK_COMMENT
"""


@dataclass(frozen=True)
class ModelDocument:
    """
    A parsed and validated model. Equality is structural on (kind, body).
    """

    kind: str
    body: Any
    source_map: dict[str, tuple[int, int]] = field(default_factory=dict, compare=False)
    warnings: tuple[Diagnostic, ...] = field(default=(), compare=False)


class DslBuildError(Exception):
    """
    A statically detectable defect found while building the model from the tree.
    """

    def __init__(self, code: str, message: str, token: Token | None = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.token = token

    def to_diagnostic(self) -> Diagnostic:
        line = getattr(self.token, "line", None) or 1
        column = getattr(self.token, "column", None) or 1
        return Diagnostic(ERROR, self.code, self.message, line, column)


def _names(tokens) -> list[str]:
    return [str(t) for t in tokens if t is not None]


def _once(found: dict, key: str, value: Any, token: Token, what: str):
    if key in found:
        raise DslBuildError("E-DUPLICATE", f"{what} declared more than once", token)
    found[key] = value


@v_args(inline=True)
class ModelBuilder(Transformer):
    """
    Transforms the lark tree into model values.
    """

    #
    # top level
    #

    def start(self, block=None):
        return block

    #
    # multisets
    #

    def ms_entry(self, name, count=None):
        return str(name), (1 if count is None else int(count)), name

    def multiset(self, *entries):
        counts: dict[str, int] = {}
        for entry in entries:
            if entry is None:
                continue
            sym, n, tok = entry
            counts[sym] = counts.get(sym, 0) + n
            if counts[sym] > Multiset.MAX_COUNT:
                raise DslBuildError("E-COUNT-OVERFLOW", f"Count of '{sym}' exceeds {Multiset.MAX_COUNT}", tok)
        try:
            return Multiset(counts)
        except CountOverflowError as e:
            raise DslBuildError("E-COUNT-OVERFLOW", str(e))

    #
    # pps
    #

    def alphabet(self, *names):
        return ("alphabet", _names(names), names[0] if names else None)

    def types(self, *names):
        return ("types", _names(names), names[0] if names else None)

    def environment(self, ms):
        return ("environment", ms, None)

    def cell(self, t, ms):
        return ("cell", (ms, str(t)), t)

    def bond(self, i, j):
        return ("bond", bond(int(i), int(j)), i)

    def bondrule(self, t, x1, x2, p):
        return ("bondrule", BondMakingRule(str(t), x1, x2, str(p)), t)

    def product(self, *names):
        return Multiset.from_symbols(_names(names))

    def r_transform(self, t, a, *produced):
        return ("rule", Transform(str(a), Multiset.from_symbols(_names(produced)), str(t)), t)

    def r_in(self, t, b, trigger=None):
        return ("rule", CommIn(None if trigger is None else str(trigger), str(b), str(t)), t)

    def r_enter(self, t, b, trigger=None):
        return ("rule", CommEnter(None if trigger is None else str(trigger), str(b), str(t)), t)

    def r_exit(self, t, b):
        return ("rule", CommExit(str(b), str(t)), t)

    def r_differentiate(self, t, a, *rest):
        *produced, p = rest
        return ("rule", Differentiate(str(a), Multiset.from_symbols(_names(produced)), str(t), str(p)), t)

    def r_divide(self, t, a, left, right, p=None):
        return ("rule", Divide(str(a), left, right, str(t), None if p is None else str(p)), t)

    def r_die(self, t, a):
        return ("rule", Die(str(a), str(t)), t)

    def pps_block(self, name, *items):
        alphabet: set[str] = set()
        cell_types: set[str] = set()
        found: dict[str, Any] = {}
        cells, bonds, bond_rules, rules = [], set(), [], []
        for tag, value, tok in items:
            if tag == "alphabet":
                alphabet.update(value)
            elif tag == "types":
                cell_types.update(value)
            elif tag == "environment":
                _once(found, "environment", value, tok or name, "environment")
            elif tag == "cell":
                cells.append(value)
            elif tag == "bond":
                bonds.add(value)
            elif tag == "bondrule":
                bond_rules.append(value)
            elif tag == "rule":
                rules.append(value)
        model = PpsModel(
            alphabet=frozenset(alphabet),
            cell_types=frozenset(cell_types),
            initial_cells=tuple(cells),
            rules=tuple(rules),
            bond_rules=tuple(bond_rules),
            initial_graph=frozenset(bonds),
            env_init=found.get("environment", Multiset()),
            name=None if name is None else str(name),
        )
        return "pps", model

    #
    # machines
    #

    def inputs(self, *names):
        return ("inputs", _names(names), names[0] if names else None)

    def outputs(self, *names):
        return ("outputs", _names(names), names[0] if names else None)

    def states(self, *names):
        return ("states", _names(names), names[0] if names else None)

    def initial(self, q):
        return ("initial", str(q), q)

    def memory(self, name, type_name, expr):
        return ("memory", MemoryField(str(name), str(type_name), expr), name)

    def transition(self, q, fn, q2):
        return ("transition", Transition(str(q), str(fn), str(q2)), fn)

    def stream(self, *names):
        return ("stream", tuple(_names(names)), names[0] if names else None)

    def port_stream(self):
        return STREAM

    def port_channel(self, name):
        return Port(PortKind.CHANNEL, str(name))

    def port_peer(self):
        return PEER

    def from_port(self, port):
        return port

    def to_port(self, port):
        return port

    def guard(self, expr):
        return ("guard", expr)

    def output(self, expr):
        return ("output", expr)

    def update(self, name, expr):
        return ("update", (str(name), expr))

    def function(self, name, source, target, *items):
        found: dict[str, Any] = {}
        updates = []
        for tag, value in items:
            if tag == "update":
                if any(u[0] == value[0] for u in updates):
                    raise DslBuildError("E-DUPLICATE", f"Field '{value[0]}' updated twice in '{name}'", name)
                updates.append(value)
            else:
                _once(found, tag, value, name, f"{tag} of '{name}'")
        fn = GuardedFunction(
            name=str(name),
            guard=found.get("guard", TRUE),
            output=found.get("output", Var(INPUT_VAR)),
            updates=tuple(updates),
            source=source or STREAM,
            target=target or STREAM,
        )
        return ("function", fn, name)

    def _machine(self, name: str, items, name_token: Token | None, derived_inputs: frozenset[str] | None = None) -> XMachineDef:
        sets = {"inputs": set(), "outputs": set(), "states": set()}
        found: dict[str, Any] = {}
        memory, functions, transitions = [], [], []
        for tag, value, tok in items:
            if tag in sets:
                sets[tag].update(value)
            elif tag == "initial":
                _once(found, "initial", value, tok, f"initial state of '{name}'")
            elif tag == "memory":
                memory.append(value)
            elif tag == "function":
                functions.append(value)
            elif tag == "transition":
                transitions.append(value)
            elif tag == "stream":
                raise DslBuildError("E-SYNTAX", "A stream can only be given to a standalone machine or an instance", tok)
        if "initial" not in found:
            raise DslBuildError("E-MISSING", f"Machine '{name}' has no initial state", name_token)
        inputs = sets["inputs"]
        if derived_inputs is not None:
            inputs = inputs | derived_inputs
        return XMachineDef(
            name=name,
            inputs=frozenset(inputs),
            outputs=frozenset(sets["outputs"]),
            states=frozenset(sets["states"]),
            memory=tuple(memory),
            functions=tuple(functions),
            transitions=tuple(transitions),
            initial_state=found["initial"],
        )

    def xm_block(self, name, *items):
        streams = [i for i in items if i[0] == "stream"]
        if len(streams) > 1:
            raise DslBuildError("E-DUPLICATE", "stream declared more than once", streams[1][2] or name)
        machine_name = "machine" if name is None else str(name)
        machine = self._machine(machine_name, [i for i in items if i[0] != "stream"], name)
        stream = streams[0][1] if streams else ()
        return "xm", XmModel(machine, stream, name=machine_name)

    #
    # cxm
    #

    def machine(self, name, *items):
        return ("machine", self._machine(str(name), items, name), name)

    def inst_memory(self, name, expr):
        return ("memory", (str(name), expr), name)

    def inst_stream(self, *names):
        return ("stream", tuple(_names(names)), names[0] if names else None)

    def inst_initial(self, q):
        return ("initial", str(q), q)

    def instance(self, name, machine_name, *items):
        found: dict[str, Any] = {}
        memory = []
        for tag, value, tok in items:
            if tag == "memory":
                if any(m[0] == value[0] for m in memory):
                    raise DslBuildError("E-DUPLICATE", f"Field '{value[0]}' set twice for '{name}'", tok)
                memory.append(value)
            else:
                _once(found, tag, value, tok or name, f"{tag} of '{name}'")
        inst = MachineInstance(
            name=str(name),
            machine=str(machine_name),
            memory=tuple(memory),
            stream=found.get("stream", ()),
            initial_state=found.get("initial"),
        )
        return ("instance", inst, name)

    def channel(self, name, sender, receiver):
        return ("channel", Channel(str(name), str(sender), str(receiver)), name)

    def cxm_block(self, name, *items):
        machines = tuple(v for tag, v, _ in items if tag == "machine")
        instances = tuple(v for tag, v, _ in items if tag == "instance")
        channels = tuple(v for tag, v, _ in items if tag == "channel")
        return "cxm", CxmModel(machines, instances, channels, name=None if name is None else str(name))

    #
    # operas
    #

    def grid(self, w, h):
        return ("grid", (int(w), int(h)), w)

    def place(self, x, y, ms):
        return ("place", (int(x), int(y), ms), x)

    def globals(self, ms):
        return ("globals", ms, None)

    def link(self, i, j):
        return ("link", (int(i), int(j)), i)

    def init(self, name, expr):
        return (str(name), expr)

    def inits(self, *items):
        return list(items)

    def agent(self, type_name, inits=None):
        return ("agent", AgentDecl(str(type_name), tuple(inits or ())), type_name)

    def act_add(self, type_name, inits=None):
        return AddAgent(str(type_name), tuple(inits or ()))

    def act_remove(self, selector):
        return RemoveAgent(str(selector))

    def act_connect(self, selector):
        return AddChannel(str(selector))

    def act_disconnect(self, selector):
        return RemoveChannel(str(selector))

    def reconfig(self, name, condition, action):
        return ("reconfig", ReconfigRule(str(name), condition, action), name)

    def percepts(self, *names):
        return ("percepts", _names(names), names[0] if names else None)

    def type_machine(self, *items):
        return ("type_machine", list(items), None)

    def agenttype(self, name, *items):
        percepts: set[str] = set()
        machines = []
        rules = []
        for tag, value, tok in items:
            if tag == "percepts":
                percepts.update(value)
            elif tag == "type_machine":
                machines.append(value)
            elif tag == "reconfig":
                rules.append(value)
        if not machines:
            raise DslBuildError("E-MISSING", f"Agent type '{name}' has no machine", name)
        if len(machines) > 1:
            raise DslBuildError("E-DUPLICATE", f"Agent type '{name}' declares more than one machine", name)
        alphabet = percept_alphabet(frozenset(percepts))
        machine = self._machine(str(name), machines[0], name, derived_inputs=alphabet)
        return ("agenttype", AgentType(str(name), frozenset(percepts), machine, tuple(rules)), name)

    def operas_block(self, name, *items):
        found: dict[str, Any] = {}
        types, agents, places, links, rules = [], [], [], [], []
        for tag, value, tok in items:
            if tag == "grid":
                _once(found, "grid", value, tok, "grid")
            elif tag == "globals":
                _once(found, "globals", value, tok or name, "globals")
            elif tag == "agenttype":
                types.append(value)
            elif tag == "agent":
                agents.append(value)
            elif tag == "place":
                places.append(value)
            elif tag == "link":
                links.append(value)
            elif tag == "reconfig":
                rules.append(value)
        if "grid" not in found:
            raise DslBuildError("E-MISSING", "OPERAS model has no grid declaration", name)
        width, height = found["grid"]
        model = OperasModel(
            width=width,
            height=height,
            agent_types=tuple(types),
            agents=tuple(agents),
            places=tuple(places),
            globals=found.get("globals", Multiset()),
            links=tuple(links),
            rules=tuple(rules),
            name=None if name is None else str(name),
        )
        return "operas", model

    #
    # expressions
    #

    def if_expr(self, c, t, e):
        return IfExpr(c, t, e)

    def or_op(self, a, b):
        return Binary("or", a, b)

    def and_op(self, a, b):
        return Binary("and", a, b)

    def not_op(self, a):
        return Unary("not", a)

    def eq(self, a, b):
        return Binary("==", a, b)

    def ne(self, a, b):
        return Binary("!=", a, b)

    def lt(self, a, b):
        return Binary("<", a, b)

    def le(self, a, b):
        return Binary("<=", a, b)

    def gt(self, a, b):
        return Binary(">", a, b)

    def ge(self, a, b):
        return Binary(">=", a, b)

    def in_op(self, a, b):
        return Binary("in", a, b)

    def add(self, a, b):
        return Binary("+", a, b)

    def sub(self, a, b):
        return Binary("-", a, b)

    def mul(self, a, b):
        return Binary("*", a, b)

    def div(self, a, b):
        return Binary("/", a, b)

    def mod(self, a, b):
        return Binary("%", a, b)

    def neg(self, a):
        return Unary("neg", a)

    def int_lit(self, tok):
        return IntLit(int(tok))

    def true_lit(self):
        return BoolLit(True)

    def false_lit(self):
        return BoolLit(False)

    def sym_lit(self, tok):
        return SymLit(str(tok)[1:-1])

    def var(self, name):
        return Var(str(name))

    def call(self, name, args=None):
        return Call(str(name), tuple(args or ()))

    def args(self, *exprs):
        return list(exprs)

    def tuple_lit(self, first=None, rest=None):
        items = [] if first is None else [first]
        items.extend(rest or ())
        return TupleLit(tuple(items))

    def seq_lit(self, args=None):
        return SeqLit(tuple(args or ()))

    def set_lit(self, args=None):
        return SetLit(tuple(args or ()))


@lru_cache(maxsize=1)
def get_parser() -> Lark:
    return Lark(GRAMMAR, start=["start", "expr"], parser="lalr", lexer="contextual", maybe_placeholders=True)


def _syntax_diagnostic(e: UnexpectedInput, source: str) -> Diagnostic:
    line, column = getattr(e, "line", -1), getattr(e, "column", -1)
    if line is None or line < 1:
        line = source.count("\n") + 1
        column = len(source) - source.rfind("\n")
    if isinstance(e, UnexpectedCharacters):
        message = f"unexpected character {source[e.pos_in_stream]!r}" if 0 <= e.pos_in_stream < len(source) else "unexpected character"
    elif isinstance(e, UnexpectedEOF):
        message = "unexpected end of input"
    elif isinstance(e, UnexpectedToken):
        expected = ", ".join(sorted(e.expected)[:8])
        message = f"unexpected {e.token!s:.40}, expected one of: {expected}"
    else:
        message = "syntax error"
    return Diagnostic(ERROR, "E-SYNTAX", message, line, max(column or 1, 1))


def _nesting_too_deep(source: str) -> tuple[int, int] | None:
    depth = 0
    line, column = 1, 0
    for ch in source:
        column += 1
        if ch == "\n":
            line, column = line + 1, 0
        elif ch in "([{":
            depth += 1
            if depth > MAX_NESTING:
                return line, column
        elif ch in ")]}":
            depth = max(depth - 1, 0)
    return None


def source_map_of(tree) -> dict[str, tuple[int, int]]:
    """
    Maps every identifier to the (line, column) of its first occurrence.
    """
    out: dict[str, tuple[int, int]] = {}
    for tok in tree.scan_values(lambda v: isinstance(v, Token) and v.type == "NAME"):
        pos = (tok.line, tok.column)
        key = str(tok)
        if key not in out or pos < out[key]:
            out[key] = pos
    return out


def _parse(source: str | bytes) -> ModelDocument | list[Diagnostic]:
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as e:
            return [Diagnostic(ERROR, "E-ENCODING", f"input is not valid UTF-8: {e.reason} at byte {e.start}")]

    deep = _nesting_too_deep(source)
    if deep is not None:
        return [Diagnostic(ERROR, "E-TOO-DEEP", f"brackets nested more than {MAX_NESTING} levels", *deep)]

    try:
        tree = get_parser().parse(source, start="start")
    except UnexpectedInput as e:
        return [_syntax_diagnostic(e, source)]

    if not tree.children:
        return [Diagnostic(ERROR, "E-EMPTY-DOCUMENT", "the document contains no model block")]

    try:
        kind, body = ModelBuilder().transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, DslBuildError):
            return [e.orig_exc.to_diagnostic()]
        raise e.orig_exc

    source_map = source_map_of(tree)
    diagnostics = validate(body, source_map)
    if has_errors(diagnostics):
        return diagnostics
    return ModelDocument(kind, body, source_map, tuple(diagnostics))


def parse(source: str | bytes) -> ModelDocument | list[Diagnostic]:
    """
    Parses and validates a model document.
    Never raises: every failure is reported as a list of diagnostics.
    """
    try:
        return _parse(source)
    except RecursionError:
        return [Diagnostic(ERROR, "E-TOO-DEEP", "the document is nested too deeply")]
    except Exception as e:
        logging.debug("Internal parser failure", exc_info=True)
        return [Diagnostic(ERROR, "E-INTERNAL", f"internal error while parsing: {type(e).__name__}: {e}")]


def parse_file(path: str) -> ModelDocument | list[Diagnostic]:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        return [Diagnostic(ERROR, "E-IO", f"cannot read '{path}': {e.strerror or e}")]
    return parse(data)


def parse_expression(text: str):
    """
    Parses a single guard/update expression. Raises lark's UnexpectedInput on bad syntax.
    """
    tree = get_parser().parse(text, start="expr")
    try:
        return ModelBuilder().transform(tree)
    except VisitError as e:
        raise e.orig_exc
