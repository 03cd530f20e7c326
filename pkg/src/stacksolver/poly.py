"""Bivariate polynomials and rational-function normal forms over exact
complex rationals, used for cancellation and linearity checks.

A polynomial is a dict mapping ``(deg_x, deg_c)`` to a nonzero ``Number``.
Degrees stay tiny in practice, so plain Euclid / primitive-PRS GCDs are fine.
"""

from __future__ import annotations

from .expr import (
    Add,
    Expr,
    Mul,
    Num,
    Number,
    Pow,
    SymConst,
    Unknown,
    mul_exprs,
)


class NonRational(ValueError):
    """Expression is not a rational function of x and c."""


Poly = dict  # {(dx, dc): Number}

P_ZERO: Poly = {}
P_ONE: Poly = {(0, 0): Number(1)}


def p_const(v: Number) -> Poly:
    return {} if v.is_zero() else {(0, 0): v}


def p_add(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for k, v in b.items():
        cur = out.get(k)
        s = v if cur is None else cur.add(v)
        if s.is_zero():
            out.pop(k, None)
        else:
            out[k] = s
    return out


def p_neg(a: Poly) -> Poly:
    return {k: v.neg() for k, v in a.items()}


def p_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for (xa, ca), va in a.items():
        for (xb, cb), vb in b.items():
            k = (xa + xb, ca + cb)
            prod = va.mul(vb)
            cur = out.get(k)
            s = prod if cur is None else cur.add(prod)
            if s.is_zero():
                out.pop(k, None)
            else:
                out[k] = s
    return out


def p_scale(a: Poly, v: Number) -> Poly:
    if v.is_zero():
        return {}
    return {k: c.mul(v) for k, c in a.items()}


def p_pow(a: Poly, n: int) -> Poly:
    out = P_ONE
    for _ in range(n):
        out = p_mul(out, a)
    return out


def p_is_zero(a: Poly) -> bool:
    return not a


def p_is_const(a: Poly) -> bool:
    return all(k == (0, 0) for k in a)


def p_lead_key(a: Poly):
    return max(a)  # lex order on (dx, dc)


def p_degree(a: Poly, var_index: int) -> int:
    return max((k[var_index] for k in a), default=0)


def p_divexact(a: Poly, b: Poly) -> Poly:
    """Exact multivariate division (raises if the remainder is nonzero)."""
    if p_is_zero(b):
        raise ZeroDivisionError("polynomial division by zero")
    quo: Poly = {}
    rem = dict(a)
    bk = p_lead_key(b)
    bv = b[bk]
    while rem:
        rk = p_lead_key(rem)
        dx, dc = rk[0] - bk[0], rk[1] - bk[1]
        if dx < 0 or dc < 0:
            raise ArithmeticError("inexact polynomial division")
        t = {(dx, dc): rem[rk].mul(bv.inverse())}
        quo = p_add(quo, t)
        rem = p_add(rem, p_neg(p_mul(t, b)))
    return quo


def _monic(a: Poly) -> Poly:
    if p_is_zero(a):
        return a
    return p_scale(a, a[p_lead_key(a)].inverse())


def _uni(a: Poly, var_index: int):
    """View a polynomial that only involves one variable as {deg: Number}."""
    return {k[var_index]: v for k, v in a.items()}


def _from_uni(u, var_index: int) -> Poly:
    return {((d, 0) if var_index == 0 else (0, d)): v for d, v in u.items() if not v.is_zero()}


def _uni_gcd(a, b):
    """Euclidean GCD for univariate polynomials over the Number field."""
    while b:
        db = max(b)
        lb = b[db]
        while a and max(a) >= db:
            da = max(a)
            factor = a[da].mul(lb.inverse())
            for d, v in list(b.items()):
                k = d + da - db
                cur = a.get(k, Number(0)).add(v.mul(factor).neg())
                if cur.is_zero():
                    a.pop(k, None)
                else:
                    a[k] = cur
        a, b = b, a
    if not a:
        return {}
    lead = a[max(a)]
    return {d: v.mul(lead.inverse()) for d, v in a.items()}


def _coeffs_in_x(a: Poly):
    """Split into {deg_x: univariate-in-c poly}."""
    out: dict[int, dict] = {}
    for (dx, dc), v in a.items():
        out.setdefault(dx, {})[dc] = v
    return out


def _content_x(a: Poly):
    """GCD (in c) of the x-coefficients."""
    g: dict = {}
    for coeff in _coeffs_in_x(a).values():
        g = _uni_gcd(dict(g), dict(coeff))
        if g == {0: Number(1)}:
            break
    return g


def _primitive_x(a: Poly):
    cont = _content_x(a)
    cont_p = _from_uni(cont, 1)
    return cont_p, p_divexact(a, cont_p)


def p_gcd(a: Poly, b: Poly) -> Poly:
    if p_is_zero(a):
        return _monic(b)
    if p_is_zero(b):
        return _monic(a)
    if p_is_const(a) or p_is_const(b):
        return dict(P_ONE)
    a_has_x, b_has_x = p_degree(a, 0) > 0, p_degree(b, 0) > 0
    a_has_c, b_has_c = p_degree(a, 1) > 0, p_degree(b, 1) > 0
    if not a_has_x and not b_has_x:
        return _from_uni(_uni_gcd(_uni(a, 1), _uni(b, 1)), 1)
    if not a_has_c and not b_has_c:
        return _from_uni(_uni_gcd(_uni(a, 0), _uni(b, 0)), 0)
    if not (a_has_x and b_has_x):
        # mixed: gcd must be free of x, i.e. the gcd of the x-free one with
        # the other's content in c
        cont_a = a if not a_has_x else _from_uni(_content_x(a), 1)
        cont_b = b if not b_has_x else _from_uni(_content_x(b), 1)
        return _from_uni(_uni_gcd(_uni(cont_a, 1), _uni(cont_b, 1)), 1)
    # primitive Euclid in x with coefficients in Q(i)[c]
    cont_a, pa = _primitive_x(a)
    cont_b, pb = _primitive_x(b)
    cont_gcd = _from_uni(_uni_gcd(_uni(cont_a, 1), _uni(cont_b, 1)), 1)
    while not p_is_zero(pb):
        pa = _pseudo_rem_x(pa, pb)
        if not p_is_zero(pa):
            _, pa = _primitive_x(pa)
        pa, pb = pb, pa
    return _monic(p_mul(cont_gcd, pa))


def _pseudo_rem_x(a: Poly, b: Poly) -> Poly:
    """Pseudo-remainder of a by b with respect to x."""
    db = p_degree(b, 0)
    lb = _from_uni(_coeffs_in_x(b)[db], 1)
    rem = dict(a)
    while not p_is_zero(rem) and p_degree(rem, 0) >= db:
        dr = p_degree(rem, 0)
        lr = _from_uni(_coeffs_in_x(rem)[dr], 1)
        shift = {(dr - db, 0): Number(1)}
        rem = p_add(p_mul(rem, lb), p_neg(p_mul(p_mul(lr, shift), b)))
    return rem


# ---------------------------------------------------------------------------
# Expr <-> polynomial fraction
# ---------------------------------------------------------------------------

def to_fraction(e: Expr, budget=None) -> tuple[Poly, Poly]:
    """Rational normal form (numerator, denominator) of an expression."""
    if budget is not None:
        budget.spend()
    if isinstance(e, Num):
        return p_const(e.value), dict(P_ONE)
    if isinstance(e, Unknown):
        return {(1, 0): Number(1)}, dict(P_ONE)
    if isinstance(e, SymConst):
        return {(0, 1): Number(1)}, dict(P_ONE)
    if isinstance(e, Add):
        num, den = p_const(Number(0)), dict(P_ONE)
        for t in e.args:
            tn, td = to_fraction(t, budget)
            num = p_add(p_mul(num, td), p_mul(tn, den))
            den = p_mul(den, td)
        return num, den
    if isinstance(e, Mul):
        num, den = dict(P_ONE), dict(P_ONE)
        for t in e.args:
            tn, td = to_fraction(t, budget)
            num = p_mul(num, tn)
            den = p_mul(den, td)
        return num, den
    if isinstance(e, Pow):
        if not isinstance(e.exp, Num) or not e.exp.value.is_integer():
            raise NonRational("non-integer exponent")
        n = int(e.exp.value.re)
        bn, bd = to_fraction(e.base, budget)
        if n == 0:
            return dict(P_ONE), dict(P_ONE)
        if n < 0:
            bn, bd = bd, bn
            n = -n
            if p_is_zero(bd):
                raise ZeroDivisionError("inverse of zero expression")
        return p_pow(bn, n), p_pow(bd, n)
    raise NonRational(f"unsupported node {type(e).__name__}")


def cancel_fraction(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    """Remove the polynomial GCD and normalize the denominator's leading
    coefficient to one."""
    if p_is_zero(num):
        return {}, dict(P_ONE)
    g = p_gcd(num, den)
    if not p_is_const(g):
        num, den = p_divexact(num, g), p_divexact(den, g)
    lead = den[p_lead_key(den)]
    if not lead.is_one():
        inv = lead.inverse()
        num, den = p_scale(num, inv), p_scale(den, inv)
    return num, den


def poly_to_expr(p: Poly) -> Expr:
    """Rebuild an expression, grouped by descending powers of x."""
    from .expr import X, C, add_exprs

    if p_is_zero(p):
        return Num(0)
    by_x: dict[int, list] = {}
    for (dx, dc), v in sorted(p.items(), reverse=True):
        by_x.setdefault(dx, []).append((dc, v))
    terms = []
    for dx in sorted(by_x, reverse=True):
        parts = []
        for dc, v in by_x[dx]:
            factors = []
            if not v.is_one() or dc == 0:
                factors.append(Num(v))
            if dc == 1:
                factors.append(C)
            elif dc > 1:
                factors.append(Pow(C, Num(dc)))
            parts.append(mul_exprs(factors))
        coeff = add_exprs(parts)
        if dx == 0:
            terms.append(coeff)
            continue
        xpow = X if dx == 1 else Pow(X, Num(dx))
        if isinstance(coeff, Num) and coeff.value.is_one():
            terms.append(xpow)
        else:
            terms.append(mul_exprs([coeff, xpow]))
    return add_exprs(terms)


def fraction_to_expr(num: Poly, den: Poly) -> Expr:
    num_e = poly_to_expr(num)
    if den == P_ONE or p_is_const(den) and den[(0, 0)].is_one():
        return num_e
    if p_is_const(den):
        return mul_exprs([Num(den[(0, 0)].inverse()), num_e])
    return mul_exprs([num_e, Pow(poly_to_expr(den), Num(-1))])
