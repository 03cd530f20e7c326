"""A hand-scripted reference policy that solves linear equations with
numerical coefficients through the environment's own actions.

Used as an exact baseline: evaluation harnesses, generator stress tests and
step-by-step demonstration traces.  The plan is recomputed from the current
state every step, so it tolerates the environment's operand shuffling.
"""

from __future__ import annotations

from .environment import EnvConfig, EnvState, action_table
from .expr import Add, Expr, Mul, Num, Pow, Unknown, contains_unknown
from .units import enumerate_units


class ScriptedLinearPolicy:
    """Pick the next action of a four-phase recipe: clear the x-term from the
    off side, clear the constant term from the x side, then divide by the
    coefficient."""

    def __init__(self, env_cfg: EnvConfig):
        self.cfg = env_cfg
        acts = action_table(env_cfg)
        self.index = {a.name(): i for i, a in enumerate(acts)}
        self.pending: list[int] = []

    def __call__(self, obs, mask, state: EnvState) -> int:
        if self.pending:
            a = self.pending.pop(0)
            if mask[a]:
                return a
            self.pending.clear()  # plan went stale; fall through and re-plan
        a = self._plan(state)
        if a is None or not mask[a]:
            # no scripted move applies: bail out with the first valid action
            import numpy as np

            return int(np.flatnonzero(mask)[0])
        return a

    def _act(self, name):
        return self.index[name]

    def _queue(self, names):
        ids = [self._act(n) for n in names]
        self.pending = ids[1:]
        return ids[0]

    def _plan(self, state: EnvState):
        lhs, rhs = state.equation
        lx, rx = contains_unknown(lhs), contains_unknown(rhs)
        if not lx and not rx:
            return None
        primary_is_lhs = lx
        # 1) remove the x-term from the non-primary side if both sides have x
        if lx and rx:
            side, prefix = (rhs, "copy_rhs") if primary_is_lhs else (lhs, "copy_lhs")
            n = _unit_of(side, _x_term(side))
            return self._queue([f"{prefix}_{n}", "push_-1", "stack_*", "eq_+"])
        side, prefix = (lhs, "copy_lhs") if primary_is_lhs else (rhs, "copy_rhs")
        # 2) remove constant addends from the x side
        if isinstance(side, Add):
            const = next(t for t in side.args if not contains_unknown(t))
            n = _unit_of(side, const)
            return self._queue([f"{prefix}_{n}", "push_-1", "stack_*", "eq_+"])
        # 3) divide by the x coefficient
        if isinstance(side, Mul):
            coeff = next(t for t in side.args if not contains_unknown(t))
            n = _unit_of(side, coeff)
            return self._queue([f"{prefix}_{n}", "push_-1", "stack_^", "eq_*"])
        if isinstance(side, Pow):
            return None  # nonlinear; out of scope for the script
        return None  # side is bare x: already solved


def _x_term(side: Expr) -> Expr:
    if isinstance(side, Add):
        return next(t for t in side.args if contains_unknown(t))
    return side


def _unit_of(side: Expr, node: Expr) -> int:
    """1-based unit index whose anchored subterm is exactly ``node``."""
    for i, u in enumerate(side_units := enumerate_units(side), start=1):
        if u.node is node:
            return i
    # identity miss (e.g. the node is the whole side): fall back to equality
    for i, u in enumerate(side_units, start=1):
        if u.node == node:
            return i
    raise LookupError("node not found among units")
