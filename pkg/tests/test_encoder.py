"""Feature-plane state encoding."""

from fractions import Fraction

import numpy as np

from stacksolver.encoder import EncoderConfig, encode_number, encode_state, encode_term
from stacksolver.environment import EnvConfig, reset
from stacksolver.expr import Number, X
from stacksolver.parser import parse_equation, parse_expression

R_ENC = EncoderConfig(stack_size=5, term_size=5, number_rows=1)  # C = 7


class TestEncodeNumber:
    def test_scaling_rule(self):
        assert encode_number(Number(5), R_ENC) == (0.05,)
        assert encode_number(Number(500), R_ENC) == (5.0,)  # boundary accepted
        assert encode_number(Number(501), R_ENC) is None
        assert encode_number(Number(-501), R_ENC) is None
        assert encode_number(Number(Fraction(-33, 40)), R_ENC) == (-33 / 40 / 100,)

    def test_complex_rows(self):
        enc = EncoderConfig(stack_size=5, term_size=5, number_rows=2)
        assert encode_number(Number(2, -1), enc) == (0.02, -0.01)
        assert encode_number(Number(0, 501), enc) is None
        # imaginary value unrepresentable in a real-only configuration
        assert encode_number(Number(0, 1), R_ENC) is None


class TestEncodeTerm:
    def test_single_unknown(self):
        plane = encode_term(X, R_ENC)
        assert plane.shape == (8, 5)
        expect = np.zeros((8, 5))
        expect[R_ENC.row_unknown, 0] = 1.0
        assert np.array_equal(plane, expect)

    def test_number_sets_indicator_and_value(self):
        plane = encode_term(parse_expression("5"), R_ENC)
        assert plane[R_ENC.row_const_indicator, 0] == 1.0
        assert plane[R_ENC.char_rows, 0] == 0.05
        assert plane.sum() == 1.0 + 0.05

    def test_too_long(self):
        e = parse_expression("1 + 2*x + 3*x")  # 9 units > 5
        assert encode_term(e, R_ENC) is None

    def test_operator_one_hot_order(self):
        plane = encode_term(parse_expression("2+4*x"), R_ENC)
        # columns: 2, +, 4, *, x
        assert plane[0, 1] == 1.0  # + row
        assert plane[1, 3] == 1.0  # * row
        assert plane[R_ENC.row_unknown, 4] == 1.0
        assert plane[R_ENC.row_const_indicator, 0] == 1.0
        assert plane[R_ENC.char_rows, 2] == 0.04
        # columns beyond the term are all zero
        assert plane[:, 5:].size == 0

    def test_symbol_and_paren_rows(self):
        enc = EncoderConfig(stack_size=5, term_size=17, number_rows=1, sym_rows=1)
        plane = encode_term(parse_expression("(x + c)*2"), enc)
        assert plane[enc.row_lparen, 0] == 1.0
        assert plane[enc.row_rparen, 4] == 1.0
        assert plane[enc.row_symconst, 3] == 1.0
        assert plane[enc.row_const_indicator, 3] == 1.0  # c is a constant
        assert plane[enc.row_const_indicator, 6] == 1.0  # the literal 2

    def test_symconst_without_row_unrepresentable(self):
        from stacksolver.expr import C

        assert encode_term(C, R_ENC) is None


class TestEncodeState:
    def test_plane_order_and_dims(self):
        cfg = EnvConfig()
        st = reset(parse_equation("2 + x = 5"), cfg, np.random.default_rng(0),
                   shuffle=False)
        tensor = encode_state(st, cfg.encoder)
        assert tensor.shape == (7, 8, 5)
        assert tensor[:5].sum() == 0.0  # empty stack slots all-zero
        assert tensor[5].sum() > 0 and tensor[6].sum() > 0  # LHS, RHS planes
        assert tensor.reshape(-1).shape == (280,)

    def test_preset_input_dims(self):
        cases = [
            (EncoderConfig(5, 5, 1), 280),
            (EncoderConfig(5, 5, 2, sym_rows=1), 350),
            (EncoderConfig(5, 17, 1, sym_rows=1), 1071),
            (EncoderConfig(5, 5, 2), 315),
            (EncoderConfig(4, 17, 2, sym_rows=1), 1020),
        ]
        for enc, want in cases:
            assert enc.input_dim == want

    def test_determinism(self):
        cfg = EnvConfig()
        st = reset(parse_equation("-1/5 + 3/4*x = 5/8 + 2*x"), cfg,
                   np.random.default_rng(3))
        a = encode_state(st, cfg.encoder)
        b = encode_state(st, cfg.encoder)
        assert np.array_equal(a, b)

    def test_injectivity_on_small_terms(self):
        # distinct normalized one-digit states yield distinct tensors
        from stacksolver.simplify import normalize
        from stacksolver.expr import Equation
        from stacksolver.environment import EnvState

        cfg = EnvConfig()
        seen = {}
        rng = np.random.default_rng(0)
        for a in range(-4, 5):
            for b in range(-4, 5):
                eq = parse_equation(f"x + {a} = {b}" if a >= 0 else f"x - {-a} = {b}")
                eq = Equation(normalize(eq.lhs), normalize(eq.rhs))
                st = EnvState(equation=eq)
                key = encode_state(st, cfg.encoder).tobytes()
                assert key not in seen, (str(eq), seen.get(key))
                seen[key] = str(eq)
