"""Expression core: exact numbers, parsing, rendering, units, subterms."""

import numpy as np
import pytest

from oracles import crat_add, crat_mul, crat_of_number, crat_pow, rat
from random_exprs import random_expr, random_number
from stacksolver.expr import (
    Add,
    DomainError,
    Mul,
    Num,
    Number,
    Pow,
    SymConst,
    Unknown,
    X,
    canonical_key,
    combine_numbers,
)
from stacksolver.parser import ParseError, parse_equation, parse_expression
from stacksolver.units import enumerate_units, render_infix, subterm_at


class TestNumber:
    def test_reduction_and_positive_denominator(self):
        from fractions import Fraction

        v = Number(Fraction(4, 6))
        assert (v.re.numerator, v.re.denominator) == (2, 3)
        w = combine_numbers(Number(-1), Number(2), "*")
        assert (w.re.numerator, w.re.denominator) == (-2, 1)
        half = combine_numbers(Number(2), Number(4), "^").inverse()
        assert (half.re.numerator, half.re.denominator) == (1, 16)

    def test_combine_examples(self):
        from fractions import Fraction

        a = Number(Fraction(-1, 5))
        b = Number(Fraction(-5, 8))
        s = combine_numbers(a, b, "+")
        assert (s.re.numerator, s.re.denominator) == (-33, 40)
        p = combine_numbers(Number(2, -1), Number(0, 1), "*")
        assert (p.re, p.im) == (1, 2)
        base = Number(Fraction(7, 3), Fraction(-2, 5))
        assert combine_numbers(base, Number(1), "^") == base

    def test_pow_domain_errors(self):
        with pytest.raises(DomainError):
            combine_numbers(Number(0), Number(-1), "^")
        with pytest.raises(DomainError):
            combine_numbers(Number(0), Number(2), "^")  # zero base is masked
        with pytest.raises(DomainError):
            combine_numbers(Number(2), Number(0), "^")
        with pytest.raises(DomainError):
            from fractions import Fraction

            combine_numbers(Number(2), Number(Fraction(1, 2)), "^")

    def test_arithmetic_matches_independent_oracle(self):
        rng = np.random.default_rng(1234)
        ops = "+*^"
        for _ in range(10_000):
            a = random_number(rng)
            b = random_number(rng)
            op = ops[rng.integers(0, 3)]
            if op == "^":
                n = int(rng.integers(-4, 5))
                if n == 0 or a.is_zero():
                    continue
                b = Number(n)
                expected = crat_pow(crat_of_number(a), n)
            elif op == "+":
                expected = crat_add(crat_of_number(a), crat_of_number(b))
            else:
                expected = crat_mul(crat_of_number(a), crat_of_number(b))
            got = combine_numbers(a, b, op)
            assert crat_of_number(got) == expected
            # reduced-form invariant
            assert got.re.denominator >= 1 and got.im.denominator >= 1
            assert rat(got.re.numerator, got.re.denominator) == (
                got.re.numerator, got.re.denominator)


class TestParse:
    def test_unknown_identity(self):
        assert parse_expression("x") is X

    def test_fig_instance_shape(self):
        e = parse_expression("-1/5 + 3/4*x")
        assert isinstance(e, Add)
        first, second = e.args
        assert isinstance(first, Num)
        assert (first.value.re.numerator, first.value.re.denominator) == (-1, 5)
        assert isinstance(second, Mul)
        assert isinstance(second.args[0], Num) and second.args[1] is X

    def test_syntax_error_position(self):
        with pytest.raises(ParseError) as exc:
            parse_expression("2*x + (")
        assert exc.value.position == 8
        assert "position 8" in str(exc.value)

    def test_more_errors(self):
        for bad in [")x", "x 2", "", "x +", "1/0", "c c"]:
            with pytest.raises(ParseError):
                parse_expression(bad)

    def test_equation(self):
        eq = parse_equation("-1/5 + 3/4*x = 5/8 + 2*x")
        assert str(eq) == "-1/5 + 3/4*x = 5/8 + 2*x"
        with pytest.raises(ParseError):
            parse_equation("x + 1")
        with pytest.raises(ParseError):
            parse_equation("x = 1 = 2")

    def test_complex_literal_folds(self):
        e = parse_expression("2-1*I")
        assert isinstance(e, Num)
        assert (e.value.re, e.value.im) == (2, -1)
        assert render_infix(e) == "(2 - I)"

    def test_sugar_equivalences(self):
        assert parse_expression("x - 2") == parse_expression("x + -2")
        # "/" is sugar for multiplication by the inverse, order preserved
        assert parse_expression("x/2") == Mul(X, Num(Number(1, 0).mul(Number(2).inverse())))
        assert parse_expression("-x") == Mul(Num(-1), X)
        assert parse_expression("3/4") == Num(Number(3, 0).mul(Number(4).inverse()))


class TestRender:
    def test_trivial(self):
        assert render_infix(Num(5)) == "5"
        assert render_infix(Mul(Num(Number(3, 0).mul(Number(4).inverse())), X)) == "3/4*x"
        assert render_infix(Add(X, SymConst(), Num(1))) == "x + c + 1"

    def test_roundtrip_property(self):
        rng = np.random.default_rng(99)
        for _ in range(10_000):
            e = random_expr(rng, depth=3)
            text = render_infix(e)
            back = parse_expression(text)
            assert back == e, f"{text!r} reparsed differently"

    def test_precedence_corners(self):
        cases = [
            Pow(Add(X, Num(1)), Num(2)),
            Pow(X, Num(-1)),
            Mul(Num(-2), X),
            Mul(X, Num(-2)),
            Add(X, Num(-2)),
            Add(X, Mul(Num(-3), SymConst())),
            Mul(Add(Num(1), X), Add(Num(2), X)),
            Pow(Mul(Num(2), X), Num(3)),
            Add(Num(Number(0, 1)), X),
            Mul(Num(Number(2, -1)), X),
        ]
        for e in cases:
            assert parse_expression(render_infix(e)) == e


class TestUnits:
    def test_five_units(self):
        units = enumerate_units(parse_expression("2+4*x"))
        assert len(units) == 5
        assert [u.text for u in units] == ["2", " + ", "4", "*", "x"]

    def test_single_unit(self):
        assert len(enumerate_units(X)) == 1

    def test_parens_around_inner_sum(self):
        units = enumerate_units(parse_expression("5*x*(x+(2-1*I)*c)"))
        kinds = [u.kind for u in units]
        assert "lparen" in kinds and "rparen" in kinds
        # the complex literal is one number unit, not paren units
        numbers = [u for u in units if u.kind == "number"]
        assert any(u.payload == Number(2, -1) for u in numbers)

    def test_concatenation_reproduces_rendering(self):
        rng = np.random.default_rng(7)
        for _ in range(2_000):
            e = random_expr(rng, depth=3)
            units = enumerate_units(e)
            assert "".join(u.text for u in units) == render_infix(e)

    def test_subterm_examples(self):
        e = parse_expression("2+4*x")
        assert subterm_at(e, 1) == Num(2)
        assert subterm_at(e, 2) == e  # the "+" anchors the whole sum
        assert subterm_at(e, 4) == parse_expression("4*x")
        with pytest.raises(IndexError):
            subterm_at(e, 6)
        with pytest.raises(IndexError):
            subterm_at(e, 0)

    def test_subterm_substring_property(self):
        # render(subterm_at(e, n)) is a contiguous run of e's units, up to
        # parenthesization and the sign-into-join rendering of literals
        def skeleton(expr):
            return [(u.kind, u.text.strip().strip("()").lstrip("-"))
                    for u in enumerate_units(expr)
                    if u.kind not in ("lparen", "rparen")]

        def contains(hay, needle):
            for i in range(len(hay) - len(needle) + 1):
                if hay[i:i + len(needle)] == needle:
                    return True
            return False

        rng = np.random.default_rng(21)
        for _ in range(1_500):
            e = random_expr(rng, depth=3)
            hay = skeleton(e)
            for n in range(1, len(enumerate_units(e)) + 1):
                sub = skeleton(subterm_at(e, n))
                assert contains(hay, sub), (render_infix(e), n)


class TestCanonicalKey:
    def test_commutative_invariance(self):
        a = parse_expression("1 + 2*x + c")
        b = parse_expression("c + 1 + 2*x")
        assert canonical_key(a) == canonical_key(b)
        assert canonical_key(parse_expression("2*x")) != canonical_key(
            parse_expression("3*x"))

    def test_nested(self):
        a = parse_expression("(1 + c)*x")
        b = parse_expression("x*(c + 1)")
        assert canonical_key(a) == canonical_key(b)
