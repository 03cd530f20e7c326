"""Canonical infix rendering and elementary-unit enumeration.

A term is decomposed into elementary units (numbers, variables, operators,
parentheses).  The unit list and the canonical infix string come from the
same emitter, so concatenating the unit texts always reproduces the rendered
string exactly.  Copy actions address units by their 1-based position.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .expr import Add, Expr, Mul, Num, Number, Pow, SymConst, Unknown

# Unit kinds
NUMBER = "number"
UNKNOWN = "unknown"
SYMCONST = "symconst"
OPERATOR = "operator"
LPAREN = "lparen"
RPAREN = "rparen"


@dataclass(frozen=True)
class Unit:
    kind: str
    text: str
    payload: object  # Number for number units, op char for operators, else None
    node: Expr  # the complete subterm this unit anchors


# Rendering contexts: where a subexpression appears in its parent.
_TOP = 0
_ADD_TERM = 1
_MUL_FIRST = 2
_MUL_REST = 3
_POW_BASE = 4
_POW_EXP = 5


def _num_text(v: Number, ctx: int) -> str:
    txt = str(v)
    if ctx == _MUL_REST and txt.startswith("-"):
        return f"({txt})"
    if ctx == _POW_BASE and not (v.is_integer() and v.re >= 0) and not txt.startswith("("):
        return f"({txt})"
    if ctx == _POW_EXP and not v.is_integer() and not txt.startswith("("):
        return f"({txt})"
    return txt


def _needs_parens(e: Expr, ctx: int) -> bool:
    if isinstance(e, Add):
        return ctx in (_MUL_FIRST, _MUL_REST, _POW_BASE, _POW_EXP, _ADD_TERM)
    if isinstance(e, Mul):
        return ctx in (_POW_BASE, _POW_EXP, _MUL_FIRST, _MUL_REST)
    if isinstance(e, Pow):
        return ctx == _POW_BASE
    return False


def _emit(e: Expr, ctx: int, out: list):
    if isinstance(e, Num):
        out.append(Unit(NUMBER, _num_text(e.value, ctx), e.value, e))
        return
    if isinstance(e, Unknown):
        out.append(Unit(UNKNOWN, "x", None, e))
        return
    if isinstance(e, SymConst):
        out.append(Unit(SYMCONST, "c", None, e))
        return

    if _needs_parens(e, ctx):
        out.append(Unit(LPAREN, "(", None, e))
        _emit(e, _TOP, out)
        out.append(Unit(RPAREN, ")", None, e))
        return

    if isinstance(e, Add):
        _emit(e.args[0], _ADD_TERM if isinstance(e.args[0], Add) else _TOP, out)
        for term in e.args[1:]:
            start = len(out)
            _emit(term, _ADD_TERM, out)
            first = out[start]
            if first.kind == NUMBER and first.text.startswith("-"):
                # fold the sign into the join: "x - 2" instead of "x + -2"
                out[start] = replace(first, text=first.text[1:])
                out.insert(start, Unit(OPERATOR, " - ", "+", e))
            else:
                out.insert(start, Unit(OPERATOR, " + ", "+", e))
        return

    if isinstance(e, Mul):
        _emit(e.args[0], _MUL_FIRST, out)
        for factor in e.args[1:]:
            out.append(Unit(OPERATOR, "*", "*", e))
            _emit(factor, _MUL_REST, out)
        return

    if isinstance(e, Pow):
        _emit(e.base, _POW_BASE, out)
        out.append(Unit(OPERATOR, "^", "^", e))
        _emit(e.exp, _POW_EXP, out)
        return

    raise TypeError(f"cannot render {e!r}")


def enumerate_units(e: Expr) -> list[Unit]:
    """Infix-order elementary units of a term."""
    out: list[Unit] = []
    _emit(e, _TOP, out)
    return out


def render_infix(e: Expr) -> str:
    """Deterministic canonical infix string; parses back to an equal tree."""
    return "".join(u.text for u in enumerate_units(e))


def subterm_at(e: Expr, n: int) -> Expr:
    """The complete subterm anchored at unit ``n`` (1-based).

    Leaf units return their leaf; operator and parenthesis units return the
    full node they belong to.
    """
    units = enumerate_units(e)
    if not 1 <= n <= len(units):
        raise IndexError(f"unit index {n} out of range 1..{len(units)}")
    return units[n - 1].node
