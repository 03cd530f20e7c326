"""Automatic simplification applied by the environment after every state
change, plus solved-state and linearity classification.

The pipeline runs, in order: distributive expansion (complex/symbolic
configurations), rational-function cancellation (symbolic configurations),
collection of terms in the unknown, grouping/folding of numeric operands in
commutative nodes, and a seeded random shuffle of commutative operand order.
Heuristic whole-expression simplification is deliberately not performed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from . import poly
from .expr import (
    Add,
    Equation,
    Expr,
    Mul,
    Num,
    Number,
    Pow,
    Unknown,
    X,
    add_exprs,
    canonical_key,
    combine_numbers,
    contains_unknown,
    mul_exprs,
)


class BudgetExceeded(Exception):
    """Normalization walked more nodes than the configured budget allows.

    The environment maps this to its deterministic "timeout" terminal.
    """


class NormalizeError(Exception):
    """Mathematically invalid intermediate (e.g. inverse of a zero term)."""


class Budget:
    __slots__ = ("remaining",)

    def __init__(self, limit: int):
        self.remaining = limit

    def spend(self, n: int = 1):
        self.remaining -= n
        if self.remaining < 0:
            raise BudgetExceeded()


DEFAULT_BUDGET = 10_000

_NUM_ZERO = Number(0)
_NUM_ONE = Number(1)


def _int_exp(e: Expr):
    """The exponent as a Python int if it is a real-integer literal."""
    if isinstance(e, Num) and e.value.is_integer():
        return int(e.value.re)
    return None


# ---------------------------------------------------------------------------
# Stage: flatten + local folding ("automatic" rules)
# ---------------------------------------------------------------------------

def _fold_pow(base: Expr, exp: Expr, budget: Budget) -> Expr:
    budget.spend()
    n = _int_exp(exp)
    if n is None:
        return Pow(base, exp)
    if isinstance(base, Num):
        if base.value.is_zero():
            if n > 0:
                return Num(0)
            raise NormalizeError("inverse of zero")
        return Num(combine_numbers(base.value, Number(n), "^")) if n != 0 else Num(1)
    if n == 0:
        return Num(1)
    if n == 1:
        return base
    if isinstance(base, Pow):
        m = _int_exp(base.exp)
        if m is not None:
            return _fold_pow(base.base, Num(m * n), budget)
    if isinstance(base, Mul):
        return _fold_flat(mul_exprs([_fold_pow(f, Num(n), budget) for f in base.args]), budget)
    return Pow(base, Num(n))


def _fold_add(args: list, budget: Budget) -> Expr:
    budget.spend(len(args))
    # split each term into (numeric coefficient, residual) and merge like terms
    order: list = []
    groups: dict = {}
    numeric = _NUM_ZERO
    numeric_count = 0
    numeric_slot = None
    for t in args:
        if isinstance(t, Num):
            numeric = numeric.add(t.value)
            numeric_count += 1
            if numeric_slot is None:
                numeric_slot = len(order)
            continue
        if isinstance(t, Mul) and isinstance(t.args[0], Num):
            coeff, rest = t.args[0].value, t.args[1:]
            rest_e = rest[0] if len(rest) == 1 else Mul(*rest)
        else:
            coeff, rest_e = _NUM_ONE, t
        k = canonical_key(rest_e)
        if k in groups:
            prev_coeff, _ = groups[k]
            groups[k] = (prev_coeff.add(coeff), rest_e)
        else:
            groups[k] = (coeff, rest_e)
            order.append(k)
    terms = []
    for k in order:
        coeff, rest_e = groups[k]
        if coeff.is_zero():
            continue
        if coeff.is_one():
            terms.append(rest_e)
        elif isinstance(rest_e, Mul):
            terms.append(Mul(Num(coeff), *rest_e.args))
        else:
            terms.append(Mul(Num(coeff), rest_e))
    if numeric_count:
        if not numeric.is_zero() or not terms:
            # a single untouched numeric addend keeps its position; merged or
            # simplified numerics move to the front
            slot = min(numeric_slot, len(terms)) if numeric_count == 1 else 0
            terms.insert(slot, Num(numeric))
    if not terms:
        return Num(0)
    if len(terms) == 1:
        return terms[0]
    return Add(*terms)


def _fold_mul(args: list, budget: Budget) -> Expr:
    budget.spend(len(args))
    # merge equal-base integer powers, fold numerics to the front
    order: list = []
    groups: dict = {}
    numeric = _NUM_ONE
    for f in args:
        if isinstance(f, Num):
            numeric = numeric.mul(f.value)
            continue
        if isinstance(f, Pow):
            n = _int_exp(f.exp)
            base = f.base if n is not None else None
        else:
            n, base = 1, f
        if base is None:
            n, base = 1, f  # non-integer power: treated as an opaque factor
        k = canonical_key(base)
        if k in groups:
            prev_n, _ = groups[k]
            groups[k] = (prev_n + n, base)
        else:
            groups[k] = (n, base)
            order.append(k)
    if numeric.is_zero():
        return Num(0)
    factors = []
    for k in order:
        n, base = groups[k]
        if n == 0:
            continue
        factors.append(base if n == 1 else _fold_pow(base, Num(n), budget))
    factors = [f for f in factors if not (isinstance(f, Num) and f.value.is_one())]
    # refold: exponent merges may have produced new numerics
    extra = [f for f in factors if isinstance(f, Num)]
    if extra:
        for f in extra:
            numeric = numeric.mul(f.value)
        factors = [f for f in factors if not isinstance(f, Num)]
        if numeric.is_zero():
            return Num(0)
    if not factors:
        return Num(numeric)
    if not numeric.is_one():
        if len(factors) == 1 and isinstance(factors[0], Add):
            # distribute a numeric coefficient over a single sum
            spread = [_fold_flat(mul_exprs([Num(numeric), t]), budget) for t in factors[0].args]
            return _fold_add(_flatten_args(Add, spread), budget)
        factors.insert(0, Num(numeric))
    if len(factors) == 1:
        return factors[0]
    return Mul(*factors)


def _flatten_args(cls, args):
    out = []
    for a in args:
        if isinstance(a, cls):
            out.extend(a.args)
        else:
            out.append(a)
    return out


def _fold_flat(e: Expr, budget: Budget) -> Expr:
    """Bottom-up flattening plus the local rules sympy applies automatically:
    numeric folding, like-term and equal-base merging, 0/1 identities."""
    budget.spend()
    if isinstance(e, Pow):
        return _fold_pow(_fold_flat(e.base, budget), _fold_flat(e.exp, budget), budget)
    if isinstance(e, Add):
        args = _flatten_args(Add, [_fold_flat(a, budget) for a in e.args])
        return _fold_add(args, budget)
    if isinstance(e, Mul):
        args = _flatten_args(Mul, [_fold_flat(a, budget) for a in e.args])
        return _fold_mul(args, budget)
    return e


# ---------------------------------------------------------------------------
# Stage: expansion
# ---------------------------------------------------------------------------

def _expand(e: Expr, budget: Budget) -> Expr:
    budget.spend()
    if isinstance(e, Pow):
        base = _expand(e.base, budget)
        n = _int_exp(e.exp)
        if isinstance(base, Add) and n is not None and n > 1:
            out = base
            for _ in range(n - 1):
                out = _expand_product([out, base], budget)
            return out
        return _fold_pow(base, _expand(e.exp, budget), budget)
    if isinstance(e, Mul):
        return _expand_product([_expand(a, budget) for a in e.args], budget)
    if isinstance(e, Add):
        return _fold_add(_flatten_args(Add, [_expand(a, budget) for a in e.args]), budget)
    return e


def _expand_product(factors: list, budget: Budget) -> Expr:
    terms = [Num(1)]
    for f in factors:
        addends = f.args if isinstance(f, Add) else (f,)
        budget.spend(len(terms) * len(addends))
        terms = [mul_exprs([t, a]) for t in terms for a in addends]
    if len(terms) == 1:
        return _fold_flat(terms[0], budget)
    return _fold_flat(add_exprs(terms), budget)


# ---------------------------------------------------------------------------
# Stage: cancellation
# ---------------------------------------------------------------------------

def _has_negative_pow(e: Expr) -> bool:
    from .expr import walk

    for n in walk(e):
        if isinstance(n, Pow):
            k = _int_exp(n.exp)
            if k is not None and k < 0:
                return True
    return False


def _cancel(e: Expr, budget: Budget) -> Expr:
    if not _has_negative_pow(e):
        return e  # denominator is trivially 1: nothing to cancel
    try:
        num, den = poly.to_fraction(e, budget)
    except poly.NonRational:
        return e
    except ZeroDivisionError as exc:
        raise NormalizeError(str(exc)) from exc
    if poly.p_is_zero(den):
        raise NormalizeError("division by zero expression")
    budget.spend(len(num) + len(den))
    num, den = poly.cancel_fraction(num, den)
    return _fold_flat(poly.fraction_to_expr(num, den), budget)


# ---------------------------------------------------------------------------
# Stage: collect terms in the unknown
# ---------------------------------------------------------------------------

def _term_x_split(t: Expr):
    """Split an additive term into (x_degree, residual factors) when the term
    is a clean ``coeff * x^k`` product, else return None."""
    if isinstance(t, Unknown):
        return 1, []
    if isinstance(t, Pow):
        n = _int_exp(t.exp)
        if isinstance(t.base, Unknown) and n is not None and n > 0:
            return n, []
        return None
    if isinstance(t, Mul):
        k = 0
        rest = []
        for f in t.args:
            if isinstance(f, Unknown):
                k += 1
            elif isinstance(f, Pow) and isinstance(f.base, Unknown):
                n = _int_exp(f.exp)
                if n is None or n <= 0:
                    return None
                k += n
            elif contains_unknown(f):
                return None
            else:
                rest.append(f)
        return (k, rest) if k else None
    return None


def _collect_unknown(e: Expr, budget: Budget) -> Expr:
    if not isinstance(e, Add) or not contains_unknown(e):
        return e
    budget.spend(len(e.args))
    # each grouped x-power replaces the first term that contributed to it;
    # terms that are not clean coeff*x^k products pass through unchanged
    by_deg: dict[int, list] = {}
    slots: list = []
    for t in e.args:
        split = _term_x_split(t)
        if split is None:
            slots.append(t)
            continue
        k, rest = split
        if k not in by_deg:
            slots.append(k)
        by_deg.setdefault(k, []).append(mul_exprs(rest) if rest else Num(1))
    terms = []
    for slot in slots:
        if not isinstance(slot, int):
            terms.append(slot)
            continue
        k = slot
        coeff = _fold_flat(add_exprs(by_deg[k]), budget)
        xpow = X if k == 1 else Pow(X, Num(k))
        if isinstance(coeff, Num):
            if coeff.value.is_zero():
                continue
            term = xpow if coeff.value.is_one() else Mul(coeff, xpow)
        elif isinstance(coeff, Mul):
            term = Mul(*coeff.args, xpow)
        else:
            term = Mul(coeff, xpow)
        terms.append(term)
    if not terms:
        return Num(0)
    if len(terms) == 1:
        return terms[0]
    return Add(*terms)


# ---------------------------------------------------------------------------
# Stage: shuffle
# ---------------------------------------------------------------------------

def _shuffle(e: Expr, rng) -> Expr:
    if isinstance(e, (Add, Mul)):
        args = [_shuffle(a, rng) for a in e.args]
        idx = rng.permutation(len(args))
        return type(e)(*[args[i] for i in idx])
    if isinstance(e, Pow):
        return Pow(_shuffle(e.base, rng), _shuffle(e.exp, rng))
    return e


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def normalize(
    e: Expr,
    *,
    expand: bool = False,
    cancel: bool = False,
    budget: int = DEFAULT_BUDGET,
    rng=None,
    shuffle: bool = False,
) -> Expr:
    """Normalize a term.  Raises BudgetExceeded when the node budget runs out
    and NormalizeError on invalid intermediates; the result is always
    mathematically equal to the input."""
    b = Budget(budget)
    e = _fold_flat(e, b)
    if expand:
        e = _expand(e, b)
    if cancel:
        e = _cancel(e, b)
    e = _fold_flat(_collect_unknown(e, b), b)
    if shuffle:
        if rng is None:
            raise ValueError("shuffle requires an rng")
        e = _shuffle(e, rng)
    return e


class Solved(Enum):
    SOLVED = "solved"
    ELIMINATED = "eliminated"
    UNSOLVED = "unsolved"


@dataclass(frozen=True)
class SolvedStatus:
    state: Solved
    solution: Expr | None = None  # set only for SOLVED


def classify(eq: Equation) -> SolvedStatus:
    """Solved-form detection; symmetric in lhs/rhs."""
    lhs_x, rhs_x = contains_unknown(eq.lhs), contains_unknown(eq.rhs)
    if isinstance(eq.lhs, Unknown) and not rhs_x:
        return SolvedStatus(Solved.SOLVED, eq.rhs)
    if isinstance(eq.rhs, Unknown) and not lhs_x:
        return SolvedStatus(Solved.SOLVED, eq.lhs)
    if not lhs_x and not rhs_x:
        return SolvedStatus(Solved.ELIMINATED)
    return SolvedStatus(Solved.UNSOLVED)


def degree_in_unknown(e: Expr):
    """Polynomial degree in x, or None if not polynomial in x."""
    if isinstance(e, Unknown):
        return 1
    if isinstance(e, (Num,)) or not contains_unknown(e):
        return 0
    if isinstance(e, Add):
        degs = [degree_in_unknown(a) for a in e.args]
        return None if None in degs else max(degs)
    if isinstance(e, Mul):
        total = 0
        for a in e.args:
            d = degree_in_unknown(a)
            if d is None:
                return None
            total += d
        return total
    if isinstance(e, Pow):
        n = _int_exp(e.exp)
        if n is None or contains_unknown(e.exp):
            return None
        d = degree_in_unknown(e.base)
        if d is None or (d > 0 and n < 0):
            return None
        return d * n
    return None


def is_linear_in_unknown(eq: Equation) -> bool:
    """True iff both sides are polynomials of degree <= 1 in the unknown."""
    dl = degree_in_unknown(eq.lhs)
    if dl is None or dl > 1:
        return False
    dr = degree_in_unknown(eq.rhs)
    return dr is not None and dr <= 1
