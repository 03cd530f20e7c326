"""Recursive-descent parser for the expression grammar.

Grammar (whitespace insignificant)::

    equation := expr "=" expr
    expr     := term (("+" | "-") term)*
    term     := unary (("*" | "/") unary)*
    unary    := "-" unary | power
    power    := atom ("^" unary)?
    atom     := INT | "I" | "x" | "c" | "(" expr ")"

``-`` and ``/`` are sugar for Add/Mul with negated/inverted operands, and
runs of adjacent numeric literals fold exactly, so ``-1/5`` is a single
number and ``2-1*I`` folds to one complex literal.
"""

from __future__ import annotations

from .expr import (
    C,
    DomainError,
    Equation,
    Expr,
    Num,
    Number,
    X,
    add_exprs,
    div_exprs,
    mul_exprs,
    negate,
    pow_exprs,
)


class ParseError(ValueError):
    def __init__(self, message, position):
        self.position = position  # 1-based character position
        super().__init__(f"syntax error at position {position}: {message}")


_SINGLE = set("+-*/^()=")


def _tokenize(text):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(("int", text[i:j], i + 1))
            i = j
        elif ch in _SINGLE:
            tokens.append((ch, ch, i + 1))
            i += 1
        elif ch in ("x", "c", "I"):
            tokens.append((ch, ch, i + 1))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", i + 1)
    tokens.append(("end", "", n + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos][0]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}", tok[2])
        return tok

    def parse_expr(self):
        terms = [self.parse_term()]
        while self.peek() in ("+", "-"):
            op, _, _ = self.next()
            term = self.parse_term()
            terms.append(negate(term) if op == "-" else term)
        return add_exprs(terms)

    def parse_term(self):
        factors = [self.parse_unary()]
        while self.peek() in ("*", "/"):
            op, _, pos = self.next()
            factor = self.parse_unary()
            if op == "/":
                try:
                    factors = [div_exprs(mul_exprs(factors), factor)]
                except DomainError as exc:
                    raise ParseError(str(exc), pos) from exc
            else:
                factors.append(factor)
        return mul_exprs(factors)

    def parse_unary(self):
        if self.peek() == "-":
            self.next()
            return negate(self.parse_unary())
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.peek() == "^":
            _, _, pos = self.next()
            exp = self.parse_unary()
            try:
                return pow_exprs(base, exp)
            except DomainError as exc:
                raise ParseError(str(exc), pos) from exc
        return base

    def parse_atom(self):
        kind, text, pos = self.next()
        if kind == "int":
            return Num(Number(int(text)))
        if kind == "I":
            return Num(Number(0, 1))
        if kind == "x":
            return X
        if kind == "c":
            return C
        if kind == "(":
            inner = self.parse_expr()
            self.expect(")")
            return inner
        raise ParseError("expected a number, symbol or '('", pos)


def parse_expression(text: str) -> Expr:
    p = _Parser(text)
    e = p.parse_expr()
    p.expect("end")
    return e


def parse_equation(text: str) -> Equation:
    p = _Parser(text)
    lhs = p.parse_expr()
    p.expect("=")
    rhs = p.parse_expr()
    p.expect("end")
    return Equation(lhs, rhs)
