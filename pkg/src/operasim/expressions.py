"""
expressions.py
----------------
Closed expression language for X-machine guards/effects and OPERAS conditions
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

from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Mapping

from .errors import EvaluationError

# runtime values: int, bool, str (symbol), tuple (tuple and seq), frozenset (set)
Value = Any

MEMORY_TYPES = ("int", "bool", "symbol", "tuple", "seq", "set")

# variable bound to the consumed input inside guards/effects
INPUT_VAR = "input"


def conforms(value: Value, type_name: str) -> bool:
    """
    Returns True if the value belongs to the memory type named by type_name.
    """
    if type_name == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if type_name == "bool":
        return isinstance(value, bool)
    if type_name == "symbol":
        return isinstance(value, str)
    if type_name in ("tuple", "seq"):
        return isinstance(value, tuple)
    if type_name == "set":
        return isinstance(value, frozenset)
    return False


def _sort_key(v: Value) -> tuple:
    if isinstance(v, bool):
        return (0, int(v), "")
    if isinstance(v, int):
        return (1, v, "")
    if isinstance(v, str):
        return (2, 0, v)
    return (3, 0, value_to_source(v))


def sorted_values(values) -> list:
    return sorted(values, key=_sort_key)


def value_to_source(v: Value, type_name: str | None = None) -> str:
    """
    Renders a runtime value as a literal of the expression language.
    type_name disambiguates top-level tuples between tuple and seq literals.
    """
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return f"'{v}'"
    if isinstance(v, tuple):
        inner = [value_to_source(x) for x in v]
        if type_name == "seq":
            return "[" + ", ".join(inner) + "]"
        if len(inner) == 1:
            return "(" + inner[0] + ",)"
        return "(" + ", ".join(inner) + ")"
    if isinstance(v, frozenset):
        return "{" + ", ".join(value_to_source(x) for x in sorted_values(v)) + "}"
    raise EvaluationError(f"Value {v!r} has no literal form")


def value_to_json(v: Value) -> Any:
    """
    Converts a runtime value into a JSON-serializable, deterministic form.
    """
    if isinstance(v, (bool, int, str)):
        return v
    if isinstance(v, tuple):
        return [value_to_json(x) for x in v]
    if isinstance(v, frozenset):
        return [value_to_json(x) for x in sorted_values(v)]
    return str(v)


class EvalContext:
    """
    Variables and callables visible to an expression.
    """

    def __init__(
        self,
        variables: Mapping[str, Value] | None = None,
        functions: Mapping[str, Callable[..., Value]] | None = None,
    ):
        self.variables = dict(variables or {})
        self.functions = dict(BUILTINS)
        if functions:
            self.functions.update(functions)


#
# AST
#

# binding strength used by the printer; higher binds tighter
PRECEDENCE = {
    "if": 0,
    "or": 1,
    "and": 2,
    "not": 3,
    "==": 4,
    "!=": 4,
    "<": 4,
    "<=": 4,
    ">": 4,
    ">=": 4,
    "in": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
    "%": 6,
    "neg": 7,
    "atom": 8,
}

COMPARISONS = ("==", "!=", "<", "<=", ">", ">=", "in")


class Expr:
    def evaluate(self, ctx: EvalContext) -> Value:
        raise NotImplementedError

    def to_source(self) -> str:
        raise NotImplementedError

    def precedence(self) -> int:
        return PRECEDENCE["atom"]

    def children(self) -> tuple["Expr", ...]:
        return ()

    def walk(self) -> Iterator["Expr"]:
        yield self
        for c in self.children():
            yield from c.walk()


@dataclass(frozen=True)
class IntLit(Expr):
    value: int

    def evaluate(self, ctx: EvalContext) -> Value:
        return self.value

    def to_source(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool

    def evaluate(self, ctx: EvalContext) -> Value:
        return self.value

    def to_source(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class SymLit(Expr):
    name: str

    def evaluate(self, ctx: EvalContext) -> Value:
        return self.name

    def to_source(self) -> str:
        return f"'{self.name}'"


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def evaluate(self, ctx: EvalContext) -> Value:
        try:
            return ctx.variables[self.name]
        except KeyError:
            raise EvaluationError(f"Unknown name '{self.name}'")

    def to_source(self) -> str:
        return self.name


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple[Expr, ...] = ()

    def evaluate(self, ctx: EvalContext) -> Value:
        fn = ctx.functions.get(self.name)
        if fn is None:
            raise EvaluationError(f"Unknown function '{self.name}'")
        values = [a.evaluate(ctx) for a in self.args]
        try:
            return fn(*values)
        except EvaluationError:
            raise
        except Exception as e:
            raise EvaluationError(f"{self.name}() failed: {e}")

    def to_source(self) -> str:
        return f"{self.name}(" + ", ".join(a.to_source() for a in self.args) + ")"

    def children(self) -> tuple[Expr, ...]:
        return self.args


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "neg" or "not"
    operand: Expr

    def evaluate(self, ctx: EvalContext) -> Value:
        v = self.operand.evaluate(ctx)
        if self.op == "not":
            return not _as_bool(v, "not")
        return -_as_int(v, "-")

    def precedence(self) -> int:
        return PRECEDENCE[self.op]

    def to_source(self) -> str:
        inner = self.operand.to_source()
        if self.operand.precedence() < self.precedence():
            inner = f"({inner})"
        if self.op == "not":
            return f"not {inner}"
        return f"-{inner}"

    def children(self) -> tuple[Expr, ...]:
        return (self.operand,)


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def evaluate(self, ctx: EvalContext) -> Value:
        op = self.op
        if op == "and":
            return _as_bool(self.left.evaluate(ctx), op) and _as_bool(self.right.evaluate(ctx), op)
        if op == "or":
            return _as_bool(self.left.evaluate(ctx), op) or _as_bool(self.right.evaluate(ctx), op)
        a = self.left.evaluate(ctx)
        b = self.right.evaluate(ctx)
        return _apply_binary(op, a, b)

    def precedence(self) -> int:
        return PRECEDENCE[self.op]

    def to_source(self) -> str:
        p = self.precedence()
        left = self.left.to_source()
        right = self.right.to_source()
        if self.op in COMPARISONS:
            # comparisons do not chain
            if self.left.precedence() <= p:
                left = f"({left})"
        elif self.left.precedence() < p:
            left = f"({left})"
        if self.right.precedence() <= p:
            right = f"({right})"
        return f"{left} {self.op} {right}"

    def children(self) -> tuple[Expr, ...]:
        return (self.left, self.right)


@dataclass(frozen=True)
class IfExpr(Expr):
    cond: Expr
    then: Expr
    otherwise: Expr

    def evaluate(self, ctx: EvalContext) -> Value:
        if _as_bool(self.cond.evaluate(ctx), "if"):
            return self.then.evaluate(ctx)
        return self.otherwise.evaluate(ctx)

    def precedence(self) -> int:
        return PRECEDENCE["if"]

    def to_source(self) -> str:
        return f"if {self.cond.to_source()} then {self.then.to_source()} else {self.otherwise.to_source()}"

    def children(self) -> tuple[Expr, ...]:
        return (self.cond, self.then, self.otherwise)


@dataclass(frozen=True)
class TupleLit(Expr):
    items: tuple[Expr, ...] = ()

    def evaluate(self, ctx: EvalContext) -> Value:
        return tuple(i.evaluate(ctx) for i in self.items)

    def to_source(self) -> str:
        inner = [i.to_source() for i in self.items]
        if len(inner) == 1:
            return "(" + inner[0] + ",)"
        return "(" + ", ".join(inner) + ")"

    def children(self) -> tuple[Expr, ...]:
        return self.items


@dataclass(frozen=True)
class SeqLit(Expr):
    items: tuple[Expr, ...] = ()

    def evaluate(self, ctx: EvalContext) -> Value:
        return tuple(i.evaluate(ctx) for i in self.items)

    def to_source(self) -> str:
        return "[" + ", ".join(i.to_source() for i in self.items) + "]"

    def children(self) -> tuple[Expr, ...]:
        return self.items


@dataclass(frozen=True)
class SetLit(Expr):
    items: tuple[Expr, ...] = field(default=())

    def evaluate(self, ctx: EvalContext) -> Value:
        return frozenset(i.evaluate(ctx) for i in self.items)

    def to_source(self) -> str:
        return "{" + ", ".join(i.to_source() for i in self.items) + "}"

    def children(self) -> tuple[Expr, ...]:
        return self.items


TRUE = BoolLit(True)


def free_variables(expr: Expr) -> set[str]:
    return {e.name for e in expr.walk() if isinstance(e, Var)}


def called_functions(expr: Expr) -> set[str]:
    return {e.name for e in expr.walk() if isinstance(e, Call)}


def literal_from_value(v: Value, type_name: str | None = None) -> Expr:
    """
    Builds the literal expression denoting the given value.
    """
    if isinstance(v, bool):
        return BoolLit(v)
    if isinstance(v, int):
        if v < 0:
            return Unary("neg", IntLit(-v))
        return IntLit(v)
    if isinstance(v, str):
        return SymLit(v)
    if isinstance(v, tuple):
        items = tuple(literal_from_value(x) for x in v)
        return SeqLit(items) if type_name == "seq" else TupleLit(items)
    if isinstance(v, frozenset):
        return SetLit(tuple(literal_from_value(x) for x in sorted_values(v)))
    raise EvaluationError(f"Value {v!r} has no literal form")


#
# evaluation helpers
#


def _as_bool(v: Value, op: str) -> bool:
    if not isinstance(v, bool):
        raise EvaluationError(f"Operator '{op}' expects a boolean, got {v!r}")
    return v


def _as_int(v: Value, op: str) -> int:
    if not isinstance(v, int) or isinstance(v, bool):
        raise EvaluationError(f"Operator '{op}' expects an integer, got {v!r}")
    return v


def _apply_binary(op: str, a: Value, b: Value) -> Value:
    if op == "==":
        return type(a) is type(b) and a == b
    if op == "!=":
        return not (type(a) is type(b) and a == b)
    if op == "in":
        if not isinstance(b, (tuple, frozenset)):
            raise EvaluationError(f"Operator 'in' expects a tuple, sequence or set, got {b!r}")
        return any(type(a) is type(x) and a == x for x in b)
    if op in ("<", "<=", ">", ">="):
        if isinstance(a, str) and isinstance(b, str):
            pass
        else:
            _as_int(a, op)
            _as_int(b, op)
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        return a >= b
    if op == "+":
        if isinstance(a, tuple) and isinstance(b, tuple):
            return a + b
        if isinstance(a, frozenset) and isinstance(b, frozenset):
            return a | b
        return _as_int(a, op) + _as_int(b, op)
    if op == "-":
        if isinstance(a, frozenset) and isinstance(b, frozenset):
            return a - b
        return _as_int(a, op) - _as_int(b, op)
    if op == "*":
        return _as_int(a, op) * _as_int(b, op)
    if op in ("/", "%"):
        x = _as_int(a, op)
        y = _as_int(b, op)
        if y == 0:
            raise EvaluationError(f"Division by zero in '{op}'")
        return x // y if op == "/" else x % y
    raise EvaluationError(f"Unknown operator '{op}'")


def _builtin_len(v: Value) -> int:
    if not isinstance(v, (tuple, frozenset)):
        raise EvaluationError(f"len() expects a tuple, sequence or set, got {v!r}")
    return len(v)


def _builtin_append(seq: Value, v: Value) -> Value:
    if not isinstance(seq, tuple):
        raise EvaluationError(f"append() expects a sequence, got {seq!r}")
    return seq + (v,)


def _builtin_minmax(fn):
    def inner(*args: Value) -> int:
        if not args:
            raise EvaluationError(f"{fn.__name__}() needs at least one argument")
        return fn(_as_int(a, fn.__name__) for a in args)

    return inner


def _builtin_abs(v: Value) -> int:
    return abs(_as_int(v, "abs"))


def _builtin_at(seq: Value, index: Value) -> Value:
    if not isinstance(seq, tuple):
        raise EvaluationError(f"at() expects a tuple or sequence, got {seq!r}")
    i = _as_int(index, "at")
    if not 0 <= i < len(seq):
        raise EvaluationError(f"at(): index {i} out of range for length {len(seq)}")
    return seq[i]


BUILTINS: dict[str, Callable[..., Value]] = {
    "len": _builtin_len,
    "append": _builtin_append,
    "min": _builtin_minmax(min),
    "max": _builtin_minmax(max),
    "abs": _builtin_abs,
    "at": _builtin_at,
}
