"""Fixed-distribution sampling of training equations and dataset file IO.

Coefficient distributions: integers uniform on [-10, 10]; rationals p/q with
p uniform on [-50, 50] and q uniform on {1..10}; complex variants draw real
and imaginary parts independently.  Symbolic-part coefficients are zeroed
with probability p0.  Equations are assembled un-normalized in their raw
template shape; degenerate draws (vanishing leading coefficients) are kept.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .expr import C, Equation, Expr, Mul, Num, Number, X, Add
from .parser import ParseError, parse_equation
from .units import render_infix

FIELDS = ("Z", "Q", "Zi", "Qi")
KINDS = ("numeric", "symbolic", "symbolic_restricted", "offset")


@dataclass(frozen=True)
class SamplerConfig:
    field: str = "Z"
    kind: str = "numeric"
    p0: float = 0.0  # probability of a vanishing symbolic-part coefficient
    int_bound: int = 10  # n for the uniform integer distribution U^Z_n
    rat_num_bound: int = 50
    rat_den_bound: int = 10

    def __post_init__(self):
        if self.field not in FIELDS:
            raise ValueError(f"field must be one of {FIELDS}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")


def _draw_rational(cfg, rng) -> Fraction:
    p = int(rng.integers(-cfg.rat_num_bound, cfg.rat_num_bound + 1))
    q = int(rng.integers(1, cfg.rat_den_bound + 1))
    return Fraction(p, q)


def _draw_part(cfg, rng) -> Fraction:
    if cfg.field in ("Z", "Zi"):
        return Fraction(int(rng.integers(-cfg.int_bound, cfg.int_bound + 1)))
    return _draw_rational(cfg, rng)


def sample_coeff(cfg: SamplerConfig, rng) -> Number:
    re = _draw_part(cfg, rng)
    im = _draw_part(cfg, rng) if cfg.field in ("Zi", "Qi") else Fraction(0)
    return Number(re, im)


def _sym_coeff(cfg, rng) -> Number:
    if rng.random() < cfg.p0:
        return Number(0)
    return sample_coeff(cfg, rng)


def _numeric_side(a0: Number, a1: Number) -> Expr:
    return Add(Num(a0), Mul(Num(a1), X))


def _symbolic_affine(a: Number, b: Number) -> Expr:
    # a + b*c, kept in raw template shape
    return Add(Num(a), Mul(Num(b), C))


def _symbolic_side(a0, b0, a1, b1) -> Expr:
    # a0 + b0*c + (a1 + b1*c)*x as one flat sum, the raw template shape
    return Add(Num(a0), Mul(Num(b0), C), Mul(_symbolic_affine(a1, b1), X))


def sample_equation(cfg: SamplerConfig, rng) -> Equation:
    if cfg.kind == "offset":
        # x + a = b with both draws from the integer distribution
        a = Number(int(rng.integers(-cfg.int_bound, cfg.int_bound + 1)))
        b = Number(int(rng.integers(-cfg.int_bound, cfg.int_bound + 1)))
        return Equation(Add(X, Num(a)), Num(b))
    if cfg.kind == "numeric":
        a0, a1 = sample_coeff(cfg, rng), sample_coeff(cfg, rng)
        a2, a3 = sample_coeff(cfg, rng), sample_coeff(cfg, rng)
        return Equation(_numeric_side(a0, a1), _numeric_side(a2, a3))
    if cfg.kind == "symbolic":
        a0, b0 = sample_coeff(cfg, rng), _sym_coeff(cfg, rng)
        a1, b1 = sample_coeff(cfg, rng), _sym_coeff(cfg, rng)
        a2, b2 = sample_coeff(cfg, rng), _sym_coeff(cfg, rng)
        a3, b3 = sample_coeff(cfg, rng), _sym_coeff(cfg, rng)
        return Equation(_symbolic_side(a0, b0, a1, b1),
                        _symbolic_side(a2, b2, a3, b3))
    # restricted symbolic: one side purely affine in c, the other c-affine * x
    a, b = sample_coeff(cfg, rng), _sym_coeff(cfg, rng)
    a2, b2 = sample_coeff(cfg, rng), _sym_coeff(cfg, rng)
    affine = _symbolic_affine(a, b)
    linear = Mul(_symbolic_affine(a2, b2), X)
    if rng.random() < 0.5:
        return Equation(linear, affine)
    return Equation(affine, linear)


# ---------------------------------------------------------------------------
# Dataset files: UTF-8 text, "#" comments, one "LHS = RHS" per line
# ---------------------------------------------------------------------------

class DatasetError(ValueError):
    pass


def save_dataset(equations, path, header: str | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for eq in equations:
            fh.write(f"{render_infix(eq.lhs)} = {render_infix(eq.rhs)}\n")


def load_dataset(path) -> list[Equation]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                out.append(parse_equation(text))
            except ParseError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from exc
    return out
