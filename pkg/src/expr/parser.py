"""
EXPRESSION PARSER
Purpose: Recursive-descent parser for expression source text
Grammar (left-associative, lowest to highest precedence):
    expression := term (("+" | "-") term)*
    term       := unary (("*" | "/") unary)*
    unary      := "-" unary | power
    power      := primary ("^" exponent)*
    exponent   := ["-"|"+"] INTEGER | "(" ["-"|"+"] INTEGER ")"
    primary    := NUMBER | NAME | NAME "(" expression ")" | "(" expression ")"
"""

import math
import re
from collections import namedtuple

from src.expr.expression import (
    INTRINSICS,
    Variable,
    add,
    as_expression,
    call,
    div,
    mul,
    neg,
    power,
    sub,
)
from src.utils.errors import ConfigError, ExpressionDomainError, ExpressionSyntaxError, UndeclaredVariableError

Token = namedtuple("Token", ["kind", "text", "offset"])

TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
    | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def tokenize(source):
    """Split source into tokens carrying UTF-8 byte offsets."""
    tokens = []
    pos = 0
    byte_offset = 0
    while pos < len(source):
        match = TOKEN_RE.match(source, pos)
        if match is None:
            raise ExpressionSyntaxError(byte_offset, f"unexpected character {source[pos]!r}", source)
        text = match.group(0)
        if match.lastgroup != "ws":
            tokens.append(Token(match.lastgroup, text, byte_offset))
        byte_offset += len(text.encode("utf-8"))
        pos = match.end()
    tokens.append(Token("end", "", byte_offset))
    return tokens


class Parser:
    def __init__(self, source, variables, field="expression"):
        self.source = source
        self.variables = tuple(variables)
        self.declared = set(self.variables)
        self.field = field
        self.tokens = tokenize(source)
        self.index = 0

    # --- token helpers -----------------------------------------------------

    def peek(self):
        return self.tokens[self.index]

    def advance(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def accept(self, text):
        if self.peek().kind == "op" and self.peek().text == text:
            return self.advance()
        return None

    def expect(self, text):
        token = self.accept(text)
        if token is None:
            self.fail(f"expected '{text}'")
        return token

    def fail(self, message, token=None):
        token = token or self.peek()
        found = "end of input" if token.kind == "end" else repr(token.text)
        raise ExpressionSyntaxError(token.offset, f"{message}, found {found}", self.source, self.field)

    # --- grammar -----------------------------------------------------------

    def parse(self):
        if self.peek().kind == "end":
            self.fail("empty expression")
        tree = self.parse_expression()
        if self.peek().kind != "end":
            self.fail("unexpected trailing input")
        return tree

    def parse_expression(self):
        left = self.parse_term()
        while True:
            if self.accept("+"):
                left = add(left, self.parse_term())
            elif self.accept("-"):
                left = sub(left, self.parse_term())
            else:
                return left

    def parse_term(self):
        left = self.parse_unary()
        while True:
            if self.accept("*"):
                left = mul(left, self.parse_unary())
            elif self.accept("/"):
                left = div(left, self.parse_unary())
            else:
                return left

    def parse_unary(self):
        if self.accept("-"):
            return neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self):
        base = self.parse_primary()
        while self.accept("^"):
            base = power(base, self.parse_exponent())
        return base

    def parse_exponent(self):
        closing = self.accept("(")
        sign = 1
        if self.accept("-"):
            sign = -1
        else:
            self.accept("+")
        token = self.peek()
        if token.kind != "number":
            self.fail("exponent must be an integer constant")
        value = float(token.text)
        if not value.is_integer():
            self.fail("exponent must be an integer constant")
        self.advance()
        if closing:
            self.expect(")")
        return sign * int(value)

    def parse_primary(self):
        token = self.peek()
        if token.kind == "number":
            self.advance()
            if token.text.isdigit():
                return as_expression(int(token.text))
            return as_expression(float(token.text))
        if token.kind == "name":
            self.advance()
            if self.peek().kind == "op" and self.peek().text == "(":
                if token.text not in INTRINSICS:
                    self.fail(f"unknown function '{token.text}'", token)
                self.advance()
                argument = self.parse_expression()
                self.expect(")")
                return call(token.text, argument)
            if token.text not in self.declared:
                raise UndeclaredVariableError(token.text, self.variables, field=self.field)
            return Variable(token.text)
        if self.accept("("):
            inner = self.parse_expression()
            self.expect(")")
            return inner
        self.fail("expected a number, variable, function call or '('")


def parse(source, variables, field="expression"):
    """Parse source text into an Expression over the declared variables."""
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ExpressionSyntaxError(e.start, "invalid UTF-8", None, field) from e
    if isinstance(source, (int, float)) and not isinstance(source, bool):
        if not math.isfinite(source):
            raise ConfigError(field, f"constant {source!r} is not finite")
        return as_expression(source)
    if not isinstance(source, str):
        raise ConfigError(field, f"expression must be text, got {type(source).__name__}")
    variables = list(variables)
    if len(set(variables)) != len(variables):
        raise ConfigError(field, "declared variables must be distinct")
    for name in variables:
        if not IDENTIFIER_RE.match(name):
            raise ConfigError(field, f"'{name}' is not an identifier")
    try:
        return Parser(source, variables, field).parse()
    except ExpressionDomainError as e:
        raise ConfigError(field, f"constant subexpression is undefined: {e}") from e
