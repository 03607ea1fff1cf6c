"""Small expression language for chart guards, assignments and triggers.

Grammar (lowest precedence first)::

    expr    := or
    or      := and (("or" | "||") and)*
    and     := not (("and" | "&&") not)*
    not     := ("not" | "!") not | compare
    compare := sum (("<" | "<=" | ">" | ">=" | "==" | "!=") sum)?
    sum     := product (("+" | "-") product)*
    product := unary (("*" | "/") unary)*
    unary   := "-" unary | atom
    atom    := number | string | "true" | "false" | name ("." name)* | "(" expr ")"

Names resolve through a caller-supplied lookup, so missing fields surface as
:class:`EvaluationError` rather than a silent false.
"""
from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from typing import Callable, Union

Scalar = Union[int, float, str, bool]


class ExpressionSyntaxError(ValueError):
    pass


class EvaluationError(RuntimeError):
    pass


_TOKEN = re.compile(r"""
    \s*(?:
      (?P<num>\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)
    | (?P<str>'[^']*'|"[^"]*")
    | (?P<op><=|>=|==|!=|&&|\|\||[<>!+\-*/().])
    | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    )""", re.VERBOSE)

_KEYWORDS = {"and", "or", "not", "true", "false"}


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionSyntaxError(f"unexpected character at {pos} in {text!r}")
        pos = m.end()
        kind = m.lastgroup
        value = m.group(kind)
        if kind == "name" and value in _KEYWORDS:
            kind = "kw"
        tokens.append((kind, value))
    return tokens


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    value: Scalar


@dataclass(frozen=True)
class Ref:
    parts: tuple[str, ...]

    @property
    def dotted(self) -> str:
        return ".".join(self.parts)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


Node = Union[Literal, Ref, Unary, Binary]


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self, *values: str) -> bool:
        kind, value = self.peek()
        if value in values and kind in ("op", "kw"):
            self.pos += 1
            return True
        return False

    def fail(self, what: str):
        kind, value = self.peek()
        found = "end of input" if kind is None else repr(value)
        raise ExpressionSyntaxError(f"{what}, found {found} in {self.text!r}")

    def parse(self) -> Node:
        if not self.tokens:
            raise ExpressionSyntaxError("empty expression")
        node = self.parse_or()
        if self.pos != len(self.tokens):
            self.fail("expected end of expression")
        return node

    def parse_or(self):
        node = self.parse_and()
        while self.take("or", "||"):
            node = Binary("or", node, self.parse_and())
        return node

    def parse_and(self):
        node = self.parse_not()
        while self.take("and", "&&"):
            node = Binary("and", node, self.parse_not())
        return node

    def parse_not(self):
        if self.take("not", "!"):
            return Unary("not", self.parse_not())
        return self.parse_compare()

    def parse_compare(self):
        node = self.parse_sum()
        kind, value = self.peek()
        if kind == "op" and value in _COMPARE:
            self.pos += 1
            node = Binary(value, node, self.parse_sum())
        return node

    def parse_sum(self):
        node = self.parse_product()
        while True:
            kind, value = self.peek()
            if kind == "op" and value in "+-":
                self.pos += 1
                node = Binary(value, node, self.parse_product())
            else:
                return node

    def parse_product(self):
        node = self.parse_unary()
        while True:
            kind, value = self.peek()
            if kind == "op" and value in ("*", "/"):
                self.pos += 1
                node = Binary(value, node, self.parse_unary())
            else:
                return node

    def parse_unary(self):
        if self.take("-"):
            return Unary("-", self.parse_unary())
        return self.parse_atom()

    def parse_atom(self):
        kind, value = self.peek()
        if kind == "num":
            self.pos += 1
            return Literal(float(value) if any(c in value for c in ".eE") else int(value))
        if kind == "str":
            self.pos += 1
            return Literal(value[1:-1])
        if kind == "kw" and value in ("true", "false"):
            self.pos += 1
            return Literal(value == "true")
        if kind == "name":
            self.pos += 1
            parts = [value]
            while self.take("."):
                k, v = self.peek()
                if k != "name":
                    self.fail("expected a name after '.'")
                self.pos += 1
                parts.append(v)
            return Ref(tuple(parts))
        if self.take("("):
            node = self.parse_or()
            if not self.take(")"):
                self.fail("expected ')'")
            return node
        self.fail("expected a value")


_COMPARE = {
    "<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge,
    "==": operator.eq, "!=": operator.ne,
}
_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul, "/": operator.truediv}


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


class Expression:
    """A parsed expression, callable against a name lookup."""

    def __init__(self, source: str):
        self.source = source
        self.ast = _Parser(source).parse()

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"

    def names(self) -> set[str]:
        out: set[str] = set()

        def visit(n):
            if isinstance(n, Ref):
                out.add(n.dotted)
            elif isinstance(n, Unary):
                visit(n.operand)
            elif isinstance(n, Binary):
                visit(n.left)
                visit(n.right)

        visit(self.ast)
        return out

    def evaluate(self, lookup: Callable[[tuple[str, ...]], Scalar]) -> Scalar:
        return self._eval(self.ast, lookup)

    def _eval(self, node, lookup):
        if isinstance(node, Literal):
            return node.value
        if isinstance(node, Ref):
            return lookup(node.parts)
        if isinstance(node, Unary):
            value = self._eval(node.operand, lookup)
            if node.op == "not":
                return not _truthy(value, self.source)
            if not _is_number(value):
                raise EvaluationError(f"cannot negate {value!r} in {self.source!r}")
            return -value
        op = node.op
        if op == "and":
            return _truthy(self._eval(node.left, lookup), self.source) and \
                _truthy(self._eval(node.right, lookup), self.source)
        if op == "or":
            return _truthy(self._eval(node.left, lookup), self.source) or \
                _truthy(self._eval(node.right, lookup), self.source)
        left = self._eval(node.left, lookup)
        right = self._eval(node.right, lookup)
        if op in ("==", "!="):
            if _is_number(left) != _is_number(right):
                return op == "!="
            return _COMPARE[op](left, right)
        if op in _COMPARE:
            if _is_number(left) and _is_number(right) or \
                    isinstance(left, str) and isinstance(right, str):
                return _COMPARE[op](left, right)
            raise EvaluationError(f"cannot compare {left!r} {op} {right!r} in {self.source!r}")
        if not (_is_number(left) and _is_number(right)):
            raise EvaluationError(f"arithmetic on non-numbers {left!r} {op} {right!r} in {self.source!r}")
        if op == "/" and right == 0:
            raise EvaluationError(f"division by zero in {self.source!r}")
        return _ARITH[op](left, right)


def _truthy(value, source) -> bool:
    if isinstance(value, bool):
        return value
    raise EvaluationError(f"expected a boolean, got {value!r} in {source!r}")


def parse_expression(source: str) -> Expression:
    return Expression(source)


def mapping_lookup(*scopes: dict) -> Callable[[tuple[str, ...]], Scalar]:
    """Lookup resolving a bare name through ``scopes`` in order."""

    def lookup(parts):
        name = ".".join(parts)
        for scope in scopes:
            if name in scope:
                return scope[name]
        raise EvaluationError(f"unknown name {name!r}")

    return lookup
