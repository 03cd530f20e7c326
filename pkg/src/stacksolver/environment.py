"""The symbolic stack-calculator RL environment.

State: an equation (LHS, RHS), a bounded stack of terms, recorded nonzero
assumptions, and step counters.  Four action families: copy a (sub)term from
either side to the stack, push a predefined constant, apply a stack operation,
or apply an equivalence transformation to both sides.  Transitions are purely
functional: ``step`` returns a new state plus an outcome.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .encoder import EncoderConfig, term_representable
from .expr import (
    Equation,
    Expr,
    Num,
    Number,
    add_exprs,
    canonical_key,
    contains_symconst,
    contains_variable,
    mul_exprs,
    numbers_in,
    pow_exprs,
)
from .simplify import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    NormalizeError,
    Solved,
    classify,
    is_linear_in_unknown,
    normalize,
)
from .units import enumerate_units, render_infix

# terminal / event labels
SOLVED = "solved"
ELIMINATED = "eliminated"
TIMEOUT = "timeout"
BAD = "bad"
STEP_LIMIT = "step_limit"
SUBMITTED = "submitted"  # generator episodes only
NORMAL = "normal"
STACK_OVERFLOW = "stack_overflow"

SUCCESS_TERMINALS = (SOLVED, ELIMINATED)


class EnvError(ValueError):
    pass


@dataclass(frozen=True)
class EnvConfig:
    stack_size: int = 5  # S
    term_size: int = 5  # T
    constants: tuple = (Number(0), Number(1), Number(-1))  # pushable, C_num of them
    eq_ops: tuple = ("+", "*")  # O_eq
    symbolic: bool = False
    complex_coeffs: bool = False
    t_max: int = 100
    r_slv: float = 3.0
    r_so: float = -0.25
    p_st: float = 1.0
    p_as: float = 0.25
    simplify_budget: int = DEFAULT_BUDGET
    encoder: EncoderConfig = None

    def __post_init__(self):
        if self.encoder is None:
            enc = EncoderConfig(
                stack_size=self.stack_size,
                term_size=self.term_size,
                number_rows=2 if self.complex_coeffs else 1,
                sym_rows=1 if self.symbolic else 0,
            )
            object.__setattr__(self, "encoder", enc)

    @property
    def n_actions(self) -> int:
        # A = 2T + O_eq + C_num + O_st
        return 2 * self.term_size + len(self.eq_ops) + len(self.constants) + 3


# Action-space layout: copy LHS 1..T, copy RHS 1..T, equation ops, constant
# pushes, stack ops (+, *, ^).  The generator's submit action, when present,
# sits at index A.

COPY_LHS = "copy_lhs"
COPY_RHS = "copy_rhs"
EQ_OP = "eq_op"
PUSH_CONST = "push"
STACK_OP = "stack_op"
SUBMIT = "submit"


@dataclass(frozen=True)
class Action:
    family: str
    arg: object = None

    def name(self) -> str:
        if self.family in (COPY_LHS, COPY_RHS):
            return f"{self.family}_{self.arg}"
        if self.family == EQ_OP:
            return f"eq_{self.arg}"
        if self.family == PUSH_CONST:
            return f"push_{self.arg}"
        if self.family == STACK_OP:
            return f"stack_{self.arg}"
        return SUBMIT


def action_table(cfg: EnvConfig, with_submit: bool = False) -> list[Action]:
    acts = [Action(COPY_LHS, n) for n in range(1, cfg.term_size + 1)]
    acts += [Action(COPY_RHS, n) for n in range(1, cfg.term_size + 1)]
    acts += [Action(EQ_OP, op) for op in cfg.eq_ops]
    acts += [Action(PUSH_CONST, str(v)) for v in cfg.constants]
    acts += [Action(STACK_OP, op) for op in ("+", "*", "^")]
    if with_submit:
        acts.append(Action(SUBMIT))
    return acts


@dataclass(frozen=True)
class EnvState:
    equation: Equation
    stack: tuple = ()  # index 0 = top
    assumptions: tuple = ()  # nonzero conditions, insertion order, deduplicated
    steps_taken: int = 0
    digit_streak: bool = False  # top of stack built by uninterrupted 0/1 pushes
    terminal: str | None = None
    solution: Expr | None = None

    @property
    def n_st(self):
        return len(self.stack)

    @property
    def n_as(self):
        return len(self.assumptions)


@dataclass(frozen=True)
class StepOutcome:
    reward: float
    terminal: str | None
    event: str


def final_reward(n_st: int, n_as: int, cfg: EnvConfig) -> float:
    return cfg.r_slv - (n_st / cfg.stack_size) * cfg.p_st - n_as * cfg.p_as


def _normalize_side(e: Expr, cfg: EnvConfig, rng, shuffle=True) -> Expr:
    return normalize(
        e,
        expand=cfg.complex_coeffs or cfg.symbolic,
        cancel=cfg.symbolic,
        budget=cfg.simplify_budget,
        rng=rng,
        shuffle=shuffle,
    )


def _check_config(eq: Equation, cfg: EnvConfig):
    for side in eq:
        if not cfg.symbolic and contains_symconst(side):
            raise EnvError("equation contains the symbolic constant but the "
                           "configuration is not symbolic")
        if not cfg.complex_coeffs and any(v.im != 0 for v in numbers_in(side)):
            raise EnvError("equation contains complex coefficients but the "
                           "configuration is real-only")


def _classify_terminal(state: EnvState) -> EnvState:
    status = classify(state.equation)
    if status.state is Solved.SOLVED:
        return replace(state, terminal=SOLVED, solution=status.solution)
    if status.state is Solved.ELIMINATED:
        return replace(state, terminal=ELIMINATED)
    return state


def _representable(state: EnvState, cfg: EnvConfig) -> bool:
    terms = list(state.stack) + [state.equation.lhs, state.equation.rhs]
    return all(term_representable(t, cfg.encoder) for t in terms)


def reset(eq: Equation, cfg: EnvConfig, rng, shuffle=True) -> EnvState:
    """Normalize and classify a fresh task; may terminate immediately."""
    _check_config(eq, cfg)
    try:
        lhs = _normalize_side(eq.lhs, cfg, rng, shuffle)
        rhs = _normalize_side(eq.rhs, cfg, rng, shuffle)
    except (BudgetExceeded, NormalizeError):
        return EnvState(equation=eq, terminal=TIMEOUT)
    state = EnvState(equation=Equation(lhs, rhs))
    state = _classify_terminal(state)
    if state.terminal is None and not _representable(state, cfg):
        state = replace(state, terminal=BAD)
    return state


def valid_actions(state: EnvState, cfg: EnvConfig, with_submit=False) -> np.ndarray:
    """Boolean mask over the action table; at least one action is valid."""
    if state.terminal is not None:
        raise EnvError("valid_actions called on a terminal state")
    mask = np.zeros(cfg.n_actions + (1 if with_submit else 0), dtype=bool)
    t = cfg.term_size
    n_lhs = len(enumerate_units(state.equation.lhs))
    n_rhs = len(enumerate_units(state.equation.rhs))
    mask[0:min(n_lhs, t)] = True
    mask[t:t + min(n_rhs, t)] = True
    i = 2 * t
    top = state.stack[0] if state.stack else None
    top_num = top.value if isinstance(top, Num) else None
    for op in cfg.eq_ops:
        ok = top is not None
        if ok and op == "*":
            ok = not (top_num is not None and top_num.is_zero())
        if ok and op == "^":
            ok = _valid_exponent(top_num) and (
                int(top_num.re) > 0
                or not any(_is_zero_term(s) for s in state.equation)
            )
        mask[i] = ok
        i += 1
    for _ in cfg.constants:
        mask[i] = True  # pushes are always valid (overflow discards the bottom)
        i += 1
    binary_ok = len(state.stack) >= 2
    mask[i] = binary_ok  # stack +
    mask[i + 1] = binary_ok  # stack *
    pow_ok = binary_ok and not _is_zero_term(state.stack[1]) and _valid_exponent(top_num)
    mask[i + 2] = pow_ok  # stack ^
    if with_submit:
        mask[cfg.n_actions] = is_linear_in_unknown(state.equation)
    assert mask.any(), "mask must never be empty on a live state"
    return mask


def _valid_exponent(v: Number | None) -> bool:
    return v is not None and v.is_integer() and not v.is_zero()


def _is_zero_term(e: Expr) -> bool:
    return isinstance(e, Num) and e.value.is_zero()


def _push(stack: tuple, term: Expr, cfg: EnvConfig):
    """Push with overflow handling: at capacity the bottom entry is discarded
    first, then the new term goes on top."""
    overflow = len(stack) >= cfg.stack_size
    if overflow:
        stack = stack[:-1]
    return (term,) + stack, overflow


def _vanishable_parts(g: Expr) -> list:
    """The variable-bearing factors of ``g`` that can actually vanish: the
    nonzero conditions an inversion or equation-multiplication relies on.
    Inverse factors reduce to their base (multiplying by c^-1 needs c != 0,
    which deduplicates against the assumption recorded when the inverse was
    built)."""
    from .expr import Mul as _Mul, Pow as _Pow

    if not contains_variable(g):
        return []
    if isinstance(g, _Mul):
        out = []
        for f in g.args:
            out.extend(_vanishable_parts(f))
        return out
    if isinstance(g, _Pow) and isinstance(g.exp, Num) and g.exp.value.is_integer():
        return _vanishable_parts(g.base)
    return [g]


def _add_assumptions(state_assumptions: tuple, operand: Expr) -> tuple:
    for term in _vanishable_parts(operand):
        key = canonical_key(term)
        if not any(canonical_key(a) == key for a in state_assumptions):
            state_assumptions = state_assumptions + (term,)
    return state_assumptions


def step(state: EnvState, action_index: int, cfg: EnvConfig, rng,
         shuffle=True, goal_terminals=True) -> tuple[EnvState, StepOutcome]:
    """Apply one action.  The action must be valid per ``valid_actions``.

    ``goal_terminals=False`` disables solved/eliminated detection (generator
    episodes start from a solved form and must keep transforming it).
    """
    if state.terminal is not None:
        raise EnvError("step called on a terminal state")
    acts = action_table(cfg)
    if not 0 <= action_index < len(acts):
        raise EnvError(f"action index {action_index} out of range")
    act = acts[action_index]

    reward = 0.0
    event = NORMAL
    stack = state.stack
    assumptions = state.assumptions
    equation = state.equation
    digit_streak = False
    eq_changed = False

    try:
        if act.family in (COPY_LHS, COPY_RHS):
            side = equation.lhs if act.family == COPY_LHS else equation.rhs
            term = _subterm(side, act.arg)
            stack, overflow = _push(stack, term, cfg)
            if overflow:
                reward += cfg.r_so
                event = STACK_OVERFLOW
        elif act.family == PUSH_CONST:
            value = cfg.constants[_const_index(cfg, act.arg)]
            is_digit = value.is_integer() and int(value.re) in (0, 1)
            if is_digit and state.digit_streak and isinstance(stack[0], Num):
                folded = Number(2 * int(stack[0].value.re) + int(value.re))
                stack = (Num(folded),) + stack[1:]
                digit_streak = True
            else:
                stack, overflow = _push(stack, Num(value), cfg)
                if overflow:
                    reward += cfg.r_so
                    event = STACK_OVERFLOW
                digit_streak = is_digit
        elif act.family == STACK_OP:
            right, left = stack[0], stack[1]  # top is the right/exponent operand
            stack = stack[2:]
            if act.arg == "^" and _neg_int_exp(right):
                assumptions = _add_assumptions(assumptions, left)
            result = _normalize_side(_apply_op(act.arg, left, right), cfg, rng, shuffle)
            stack, _ = _push(stack, result, cfg)  # net stack change is -1
        elif act.family == EQ_OP:
            operand = stack[0]
            stack = stack[1:]
            if act.arg == "*":
                assumptions = _add_assumptions(assumptions, operand)
            if act.arg == "^" and _neg_int_exp(operand):
                for side in equation:
                    assumptions = _add_assumptions(assumptions, side)
            equation = Equation(
                _normalize_side(_apply_op(act.arg, equation.lhs, operand), cfg, rng, shuffle),
                _normalize_side(_apply_op(act.arg, equation.rhs, operand), cfg, rng, shuffle),
            )
            eq_changed = True
        else:
            raise EnvError(f"unsupported action {act}")
    except (BudgetExceeded, NormalizeError):
        new = replace(state, steps_taken=state.steps_taken + 1,
                      digit_streak=False, terminal=TIMEOUT)
        return new, StepOutcome(0.0, TIMEOUT, TIMEOUT)

    new = EnvState(
        equation=equation,
        stack=stack,
        assumptions=assumptions,
        steps_taken=state.steps_taken + 1,
        digit_streak=digit_streak,
        terminal=None,
        solution=state.solution,
    )

    if eq_changed and goal_terminals:
        new = _classify_terminal(new)
        if new.terminal in SUCCESS_TERMINALS:
            reward += final_reward(new.n_st, new.n_as, cfg)
            return new, StepOutcome(reward, new.terminal, new.terminal)
    if not _representable(new, cfg):
        new = replace(new, terminal=BAD)
        return new, StepOutcome(reward, BAD, BAD)
    if new.steps_taken >= cfg.t_max:
        new = replace(new, terminal=STEP_LIMIT)
        return new, StepOutcome(reward, STEP_LIMIT, STEP_LIMIT)
    return new, StepOutcome(reward, None, event)


def _apply_op(op: str, left: Expr, right: Expr) -> Expr:
    if op == "+":
        return add_exprs([left, right])
    if op == "*":
        return mul_exprs([left, right])
    return pow_exprs(left, right)


def _neg_int_exp(e: Expr) -> bool:
    return isinstance(e, Num) and e.value.is_integer() and e.value.re < 0


def _const_index(cfg: EnvConfig, name: str) -> int:
    for i, v in enumerate(cfg.constants):
        if str(v) == name:
            return i
    raise EnvError(f"unknown constant {name}")


def _subterm(side: Expr, n: int) -> Expr:
    from .units import subterm_at

    return subterm_at(side, n)


# ---------------------------------------------------------------------------
# Episode traces (one step per line, structured text)
# ---------------------------------------------------------------------------

@dataclass
class TraceStep:
    step: int
    action: str
    lhs: str
    rhs: str
    stack: list
    assumptions: list
    reward: float
    terminal: str | None


@dataclass
class Trace:
    steps: list = field(default_factory=list)

    def append_state(self, step_no, action_name, state: EnvState, reward):
        self.steps.append(TraceStep(
            step=step_no,
            action=action_name,
            lhs=render_infix(state.equation.lhs),
            rhs=render_infix(state.equation.rhs),
            stack=[render_infix(t) for t in state.stack],
            assumptions=[f"{render_infix(a)} != 0" for a in state.assumptions],
            reward=reward,
            terminal=state.terminal,
        ))

    @property
    def terminal(self):
        return self.steps[-1].terminal if self.steps else None

    @property
    def n_actions(self):
        return max((s.step for s in self.steps), default=0)


_FIELD_SEP = "\t"
_LIST_SEP = " ; "


def write_trace(trace: Trace, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# step\taction\tlhs\trhs\tstack\tassumptions\treward\tterminal\n")
        for s in trace.steps:
            fh.write(_FIELD_SEP.join([
                str(s.step),
                s.action,
                s.lhs,
                s.rhs,
                _LIST_SEP.join(s.stack),
                _LIST_SEP.join(s.assumptions),
                repr(s.reward),
                s.terminal or "-",
            ]) + "\n")


def read_trace(path) -> Trace:
    trace = Trace()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split(_FIELD_SEP)
            if len(parts) != 8:
                raise EnvError(f"malformed trace line: {line!r}")
            step_no, action, lhs, rhs, stack, assumptions, reward, terminal = parts
            trace.steps.append(TraceStep(
                step=int(step_no),
                action=action,
                lhs=lhs,
                rhs=rhs,
                stack=stack.split(_LIST_SEP) if stack else [],
                assumptions=assumptions.split(_LIST_SEP) if assumptions else [],
                reward=float(reward),
                terminal=None if terminal == "-" else terminal,
            ))
    return trace
