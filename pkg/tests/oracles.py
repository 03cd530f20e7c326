"""Independent oracles used by the test suite.

Everything here is deliberately written against raw integers / Fractions and
its own tree recursion so it cannot share a bug with the library paths it
checks.
"""

from __future__ import annotations

import math
from fractions import Fraction

from stacksolver.expr import Add, Mul, Num, Pow, SymConst, Unknown

# ---------------------------------------------------------------------------
# Rational arithmetic on raw integer pairs (numerator, denominator)
# ---------------------------------------------------------------------------

def rat(n, d=1):
    if d == 0:
        raise ZeroDivisionError
    if d < 0:
        n, d = -n, -d
    g = math.gcd(abs(n), d)
    return (n // g, d // g) if g else (0, 1)


def rat_add(a, b):
    return rat(a[0] * b[1] + b[0] * a[1], a[1] * b[1])


def rat_mul(a, b):
    return rat(a[0] * b[0], a[1] * b[1])


def rat_neg(a):
    return (-a[0], a[1])


def rat_inv(a):
    if a[0] == 0:
        raise ZeroDivisionError
    return rat(a[1], a[0])


# complex rationals as ((re_n, re_d), (im_n, im_d))

def crat(re, im=(0, 1)):
    return (re, im)


def crat_add(a, b):
    return (rat_add(a[0], b[0]), rat_add(a[1], b[1]))


def crat_mul(a, b):
    re = rat_add(rat_mul(a[0], b[0]), rat_neg(rat_mul(a[1], b[1])))
    im = rat_add(rat_mul(a[0], b[1]), rat_mul(a[1], b[0]))
    return (re, im)


def crat_inv(a):
    denom = rat_add(rat_mul(a[0], a[0]), rat_mul(a[1], a[1]))
    if denom[0] == 0:
        raise ZeroDivisionError
    return (rat_mul(a[0], rat_inv(denom)), rat_neg(rat_mul(a[1], rat_inv(denom))))


def crat_pow(a, n):
    if n == 0:
        raise ValueError("oracle does not define a^0 here")
    base = a if n > 0 else crat_inv(a)
    out = crat((1, 1))
    for _ in range(abs(n)):
        out = crat_mul(out, base)
    return out


def crat_of_number(v):
    return ((v.re.numerator, v.re.denominator), (v.im.numerator, v.im.denominator))


# ---------------------------------------------------------------------------
# Exact expression evaluation (plain Fraction-pair recursion)
# ---------------------------------------------------------------------------

def eval_expr(e, x=None, c=None):
    """Evaluate to a complex pair (Fraction, Fraction).  Raises
    ZeroDivisionError at poles."""
    if isinstance(e, Num):
        return (e.value.re, e.value.im)
    if isinstance(e, Unknown):
        if x is None:
            raise ValueError("unbound x")
        return x
    if isinstance(e, SymConst):
        if c is None:
            raise ValueError("unbound c")
        return c
    if isinstance(e, Add):
        re, im = Fraction(0), Fraction(0)
        for t in e.args:
            tr, ti = eval_expr(t, x, c)
            re, im = re + tr, im + ti
        return (re, im)
    if isinstance(e, Mul):
        re, im = Fraction(1), Fraction(0)
        for t in e.args:
            tr, ti = eval_expr(t, x, c)
            re, im = re * tr - im * ti, re * ti + im * tr
        return (re, im)
    if isinstance(e, Pow):
        br, bi = eval_expr(e.base, x, c)
        er, ei = eval_expr(e.exp, x, c)
        if ei != 0 or er.denominator != 1:
            raise ValueError("oracle only evaluates integer exponents")
        n = int(er)
        if n == 0:
            return (Fraction(1), Fraction(0))
        if n < 0:
            d = br * br + bi * bi
            if d == 0:
                raise ZeroDivisionError
            br, bi = br / d, -bi / d
            n = -n
        rr, ri = Fraction(1), Fraction(0)
        for _ in range(n):
            rr, ri = rr * br - ri * bi, rr * bi + ri * br
        return (rr, ri)
    raise TypeError(f"cannot evaluate {e!r}")


def satisfies(eq, x, c=None) -> bool:
    """Exact check that x (a complex Fraction pair) solves the equation."""
    return eval_expr(eq.lhs, x, c) == eval_expr(eq.rhs, x, c)


# ---------------------------------------------------------------------------
# Two-point exact linear solve (numeric equations in x only)
# ---------------------------------------------------------------------------

ZERO = (Fraction(0), Fraction(0))
ONE = (Fraction(1), Fraction(0))


def linear_solve(eq, c=None):
    """('solved', (re, im)) | ('any',) | ('none',) for equations linear in x.

    Works by evaluating f(x) = lhs - rhs at x = 0 and x = 1: f is affine, so
    f(x) = f0 + (f1 - f0) x.
    """
    def f(at):
        lr, li = eval_expr(eq.lhs, at, c)
        rr, ri = eval_expr(eq.rhs, at, c)
        return (lr - rr, li - ri)

    f0 = f(ZERO)
    f1 = f(ONE)
    slope = (f1[0] - f0[0], f1[1] - f0[1])
    if slope == (0, 0):
        return ("any",) if f0 == (0, 0) else ("none",)
    d = slope[0] * slope[0] + slope[1] * slope[1]
    inv = (slope[0] / d, -slope[1] / d)
    neg_f0 = (-f0[0], -f0[1])
    return ("solved", (neg_f0[0] * inv[0] - neg_f0[1] * inv[1],
                       neg_f0[0] * inv[1] + neg_f0[1] * inv[0]))


# ---------------------------------------------------------------------------
# Naive network forward and finite differences
# ---------------------------------------------------------------------------

def naive_forward(weights, biases, x):
    """Scalar-loop MLP evaluation (ReLU hidden, linear output)."""
    a = list(x)
    for layer, (w, b) in enumerate(zip(weights, biases)):
        out = []
        for j in range(len(b)):
            s = b[j]
            for i, xi in enumerate(a):
                s += w[j][i] * xi
            if layer < len(weights) - 1 and s < 0.0:
                s = 0.0
            out.append(s)
        a = out
    return a


def batch_loss(params, inputs, actions, targets):
    """Mean squared selected-action residual, via the naive forward."""
    total = 0.0
    for x, a, t in zip(inputs, actions, targets):
        q = naive_forward([w.tolist() for w in params.weights],
                          [b.tolist() for b in params.biases], list(x))
        total += (q[a] - t) ** 2
    return total / len(inputs)


def finite_difference_grads(params, inputs, actions, targets, h=1e-6):
    """Central finite differences of the batch loss w.r.t. every parameter."""
    import numpy as np

    grads_w, grads_b = [], []
    for w in params.weights:
        g = np.zeros_like(w)
        flat = w.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = batch_loss(params, inputs, actions, targets)
            flat[i] = old - h
            down = batch_loss(params, inputs, actions, targets)
            flat[i] = old
            gf[i] = (up - down) / (2 * h)
        grads_w.append(g)
    for b in params.biases:
        g = np.zeros_like(b)
        for i in range(b.size):
            old = b[i]
            b[i] = old + h
            up = batch_loss(params, inputs, actions, targets)
            b[i] = old - h
            down = batch_loss(params, inputs, actions, targets)
            b[i] = old
            g[i] = (up - down) / (2 * h)
        grads_b.append(g)
    return grads_w, grads_b


# ---------------------------------------------------------------------------
# Tabular value iteration
# ---------------------------------------------------------------------------

def value_iteration(n_states, n_actions, transition, reward, terminal, gamma,
                    tol=1e-12):
    """Q* for a deterministic tabular MDP given as python functions."""
    import numpy as np

    q = np.zeros((n_states, n_actions))
    while True:
        q_new = np.zeros_like(q)
        for s in range(n_states):
            for a in range(n_actions):
                s2 = transition(s, a)
                r = reward(s, a)
                q_new[s, a] = r if terminal(s2) else r + gamma * q[s2].max()
        if np.abs(q_new - q).max() < tol:
            return q_new
        q = q_new
