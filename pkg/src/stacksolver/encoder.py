"""Feature-plane encoding of environment states for the Q-network.

Every term maps to a (C + N) x T plane whose columns mirror its elementary
units: C binary character rows (operators, parentheses, unknown, symbol rows,
constant indicator) and N number rows holding scaled coefficient values.
A state is S + 2 planes (stack slots top-down, LHS, RHS); empty entries are
zero.  Values beyond the cap are unrepresentable and surface as ``None``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .expr import Expr, Number, numbers_in
from .units import LPAREN, NUMBER, OPERATOR, RPAREN, SYMCONST, UNKNOWN, enumerate_units

_OP_ORDER = {"+": 0, "*": 1, "^": 2}


@dataclass(frozen=True)
class EncoderConfig:
    stack_size: int  # S
    term_size: int  # T
    number_rows: int  # N: 1 real, 2 complex
    sym_rows: int = 0  # character rows reserved for symbolic constants
    cap: Fraction = Fraction(500)
    scale: int = 100

    @property
    def char_rows(self) -> int:  # C
        return 3 + 2 + 1 + self.sym_rows + 1

    @property
    def plane_shape(self):
        return (self.char_rows + self.number_rows, self.term_size)

    @property
    def tensor_shape(self):
        return (self.stack_size + 2,) + self.plane_shape

    @property
    def input_dim(self) -> int:
        s, c, t = self.tensor_shape
        return s * c * t

    # row indices
    @property
    def row_lparen(self):
        return 3

    @property
    def row_rparen(self):
        return 4

    @property
    def row_unknown(self):
        return 5

    @property
    def row_symconst(self):
        return 6  # first symbol row, present only if sym_rows >= 1

    @property
    def row_const_indicator(self):
        return self.char_rows - 1


def encode_number(a: Number, cfg: EncoderConfig):
    """Scaled (re, im) floats, or None on numerical overflow."""
    if abs(a.re) > cfg.cap or abs(a.im) > cfg.cap:
        return None
    if cfg.number_rows == 1:
        if a.im != 0:
            return None
        return (float(a.re) / cfg.scale,)
    return (float(a.re) / cfg.scale, float(a.im) / cfg.scale)


def encode_term(e: Expr, cfg: EncoderConfig, out: np.ndarray | None = None):
    """(C+N) x T plane for one term, or None if too long / overflowing."""
    units = enumerate_units(e)
    if len(units) > cfg.term_size:
        return None
    if out is None:
        out = np.zeros(cfg.plane_shape)
    for col, u in enumerate(units):
        if u.kind == OPERATOR:
            out[_OP_ORDER[u.payload], col] = 1.0
        elif u.kind == LPAREN:
            out[cfg.row_lparen, col] = 1.0
        elif u.kind == RPAREN:
            out[cfg.row_rparen, col] = 1.0
        elif u.kind == UNKNOWN:
            out[cfg.row_unknown, col] = 1.0
        elif u.kind == SYMCONST:
            if cfg.sym_rows < 1:
                return None
            out[cfg.row_symconst, col] = 1.0
            out[cfg.row_const_indicator, col] = 1.0
        elif u.kind == NUMBER:
            vals = encode_number(u.payload, cfg)
            if vals is None:
                return None
            out[cfg.row_const_indicator, col] = 1.0
            for i, v in enumerate(vals):
                out[cfg.char_rows + i, col] = v
    return out


def encode_state(state, cfg: EncoderConfig):
    """(S+2) x (C+N) x T tensor for a live state (stack top-down, LHS, RHS),
    or None if any term is unrepresentable."""
    tensor = np.zeros(cfg.tensor_shape)
    for i, term in enumerate(state.stack[: cfg.stack_size]):
        if encode_term(term, cfg, out=tensor[i]) is None:
            return None
    if encode_term(state.equation.lhs, cfg, out=tensor[cfg.stack_size]) is None:
        return None
    if encode_term(state.equation.rhs, cfg, out=tensor[cfg.stack_size + 1]) is None:
        return None
    return tensor


def term_representable(e: Expr, cfg: EncoderConfig) -> bool:
    """Cheap check used by the environment's bad-state detection."""
    if len(enumerate_units(e)) > cfg.term_size:
        return False
    for v in numbers_in(e):
        if abs(v.re) > cfg.cap or abs(v.im) > cfg.cap:
            return False
        if cfg.number_rows == 1 and v.im != 0:
            return False
    return True
