"""Exact symbolic expressions: complex-rational numbers and immutable term trees.

Terms are built from numbers, the unknown ``x``, the symbolic constant ``c``
and the operators ``+``, ``*``, ``^`` (n-ary Add/Mul, binary Pow).  All
arithmetic is exact; nothing here ever touches floating point.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple


class ExprError(ValueError):
    """Malformed operation on expressions or numbers."""


class DomainError(ExprError):
    """Arguments outside the supported domain (e.g. 0^-1, x^(1/2))."""


_ZERO = Fraction(0)
_ONE = Fraction(1)


class Number:
    """A complex number with exact rational real and imaginary parts.

    Backed by arbitrary-precision ``fractions.Fraction``, so values are always
    stored reduced with positive denominators.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)

    # -- predicates ------------------------------------------------------

    def is_zero(self):
        return self.re == 0 and self.im == 0

    def is_one(self):
        return self.re == 1 and self.im == 0

    def is_real(self):
        return self.im == 0

    def is_integer(self):
        return self.im == 0 and self.re.denominator == 1

    # -- arithmetic ------------------------------------------------------

    def add(self, other):
        return Number(self.re + other.re, self.im + other.im)

    def mul(self, other):
        return Number(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def neg(self):
        return Number(-self.re, -self.im)

    def inverse(self):
        if self.is_zero():
            raise DomainError("division by zero")
        d = self.re * self.re + self.im * self.im
        return Number(self.re / d, -self.im / d)

    def power_int(self, n):
        """Exact n-th power for nonzero integer n; base must be nonzero if n < 0."""
        if n == 0:
            raise DomainError("zeroth power not supported here")
        base = self if n > 0 else self.inverse()
        result = Number(1)
        k = abs(n)
        while k:
            if k & 1:
                result = result.mul(base)
            base = base.mul(base)
            k >>= 1
        return result

    # -- comparisons / hashing -------------------------------------------

    def __eq__(self, other):
        return isinstance(other, Number) and self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def key(self):
        return (
            self.re.numerator,
            self.re.denominator,
            self.im.numerator,
            self.im.denominator,
        )

    # -- rendering ---------------------------------------------------------

    def __str__(self):
        re, im = self.re, self.im
        if im == 0:
            return str(re)
        if re == 0:
            if im == 1:
                return "I"
            if im == -1:
                return "-I"
            return f"{im}*I"
        sign = " - " if im < 0 else " + "
        mag = abs(im)
        imtxt = "I" if mag == 1 else f"{mag}*I"
        return f"({re}{sign}{imtxt})"

    def __repr__(self):
        return f"Number({self.re!r}, {self.im!r})"


def combine_numbers(a: Number, b: Number, op: str) -> Number:
    """Apply one of the stack-calculator operators to two exact numbers.

    ``^`` requires a nonzero real-integer exponent and a nonzero base,
    mirroring the action-masking rules of the environment.
    """
    if op == "+":
        return a.add(b)
    if op == "*":
        return a.mul(b)
    if op == "^":
        if not b.is_integer() or b.is_zero():
            raise DomainError("exponent must be a nonzero real integer")
        if a.is_zero():
            raise DomainError("zero base not allowed for ^")
        return a.power_int(int(b.re))
    raise ExprError(f"unknown operator {op!r}")


# ---------------------------------------------------------------------------
# Expression nodes
# ---------------------------------------------------------------------------

_K_NUM, _K_SYM, _K_UNK, _K_ADD, _K_MUL, _K_POW = range(6)


class Expr:
    """Base class for immutable expression-tree nodes."""

    __slots__ = ("_hash", "_key")

    kind = -1

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return self._fields() == other._fields()

    def __hash__(self):
        h = getattr(self, "_hash", None)
        if h is None:
            h = hash((self.kind, self._fields()))
            self._hash = h
        return h

    def _fields(self):
        raise NotImplementedError

    def __repr__(self):
        from .units import render_infix

        return f"<{type(self).__name__} {render_infix(self)}>"


class Num(Expr):
    __slots__ = ("value",)
    kind = _K_NUM

    def __init__(self, value):
        self.value = value if isinstance(value, Number) else Number(value)

    def _fields(self):
        return (self.value,)


class Unknown(Expr):
    __slots__ = ()
    kind = _K_UNK

    def _fields(self):
        return ()


class SymConst(Expr):
    __slots__ = ()
    kind = _K_SYM

    def _fields(self):
        return ()


X = Unknown()
C = SymConst()


class Add(Expr):
    __slots__ = ("args",)
    kind = _K_ADD

    def __init__(self, *args):
        if len(args) < 2:
            raise ExprError("Add needs at least two operands")
        self.args = tuple(args)

    def _fields(self):
        return self.args


class Mul(Expr):
    __slots__ = ("args",)
    kind = _K_MUL

    def __init__(self, *args):
        if len(args) < 2:
            raise ExprError("Mul needs at least two operands")
        self.args = tuple(args)

    def _fields(self):
        return self.args


class Pow(Expr):
    __slots__ = ("base", "exp")
    kind = _K_POW

    def __init__(self, base, exp):
        self.base = base
        self.exp = exp

    def _fields(self):
        return (self.base, self.exp)


class Equation(NamedTuple):
    lhs: Expr
    rhs: Expr

    def __str__(self):
        from .units import render_infix

        return f"{render_infix(self.lhs)} = {render_infix(self.rhs)}"


# ---------------------------------------------------------------------------
# Structural helpers
# ---------------------------------------------------------------------------

def children(e: Expr):
    if isinstance(e, (Add, Mul)):
        return e.args
    if isinstance(e, Pow):
        return (e.base, e.exp)
    return ()


def walk(e: Expr):
    """Yield every node of the tree (pre-order)."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(children(node))


def contains(e: Expr, sym: Expr) -> bool:
    return any(n is sym or n == sym for n in walk(e))


def contains_unknown(e: Expr) -> bool:
    return any(n.kind == _K_UNK for n in walk(e))


def contains_symconst(e: Expr) -> bool:
    return any(n.kind == _K_SYM for n in walk(e))


def contains_variable(e: Expr) -> bool:
    return any(n.kind in (_K_UNK, _K_SYM) for n in walk(e))


def numbers_in(e: Expr):
    for n in walk(e):
        if isinstance(n, Num):
            yield n.value


def canonical_key(e: Expr):
    """Order-invariant sort key: equal for expressions that differ only in
    the order of commutative operands."""
    k = getattr(e, "_key", None)
    if k is not None:
        return k
    if isinstance(e, Num):
        k = (_K_NUM, e.value.key(), ())
    elif isinstance(e, (Unknown, SymConst)):
        k = (e.kind, (), ())
    elif isinstance(e, (Add, Mul)):
        k = (e.kind, (), tuple(sorted(canonical_key(a) for a in e.args)))
    else:
        k = (_K_POW, (), (canonical_key(e.base), canonical_key(e.exp)))
    e._key = k
    return k


def structurally_equal_mod_order(a: Expr, b: Expr) -> bool:
    return canonical_key(a) == canonical_key(b)


# ---------------------------------------------------------------------------
# Constructors with parse-level folding
# ---------------------------------------------------------------------------

def _flatten(cls, ops):
    out = []
    for o in ops:
        if isinstance(o, cls):
            out.extend(o.args)
        else:
            out.append(o)
    return out


def _fold_adjacent(ops, op_char):
    """Merge maximal runs of adjacent Num operands with exact arithmetic."""
    out = []
    for o in ops:
        if isinstance(o, Num) and out and isinstance(out[-1], Num):
            out[-1] = Num(combine_numbers(out[-1].value, o.value, op_char))
        else:
            out.append(o)
    return out


def add_exprs(ops) -> Expr:
    ops = _fold_adjacent(_flatten(Add, ops), "+")
    if not ops:
        return Num(0)
    if len(ops) == 1:
        return ops[0]
    return Add(*ops)


def mul_exprs(ops) -> Expr:
    ops = _fold_adjacent(_flatten(Mul, ops), "*")
    if not ops:
        return Num(1)
    if len(ops) == 1:
        return ops[0]
    return Mul(*ops)


def negate(e: Expr) -> Expr:
    """Unary minus, folded into a numeric literal where possible."""
    if isinstance(e, Num):
        return Num(e.value.neg())
    if isinstance(e, Mul) and isinstance(e.args[0], Num):
        head = Num(e.args[0].value.neg())
        rest = e.args[1:]
        if head.value.is_one():
            return rest[0] if len(rest) == 1 else Mul(*rest)
        return Mul(head, *rest)
    return Mul(Num(-1), e)


def pow_exprs(base: Expr, exp: Expr) -> Expr:
    """Pow constructor that folds safely combinable numeric literals."""
    if isinstance(base, Num) and isinstance(exp, Num):
        v = exp.value
        if v.is_integer() and not v.is_zero() and not base.value.is_zero():
            return Num(combine_numbers(base.value, v, "^"))
    return Pow(base, exp)


def div_exprs(num: Expr, den: Expr) -> Expr:
    if isinstance(den, Num):
        if den.value.is_zero():
            raise DomainError("division by zero")
        return mul_exprs([num, Num(den.value.inverse())])
    return mul_exprs([num, Pow(den, Num(-1))])
