"""Strategy analysis: superstate classification, transition graphs, trace
rendering and metrics aggregation.

States are grouped into superstates by equation shape: numeric atoms become
``N``, commutative operands take a canonical order, and the two sides are
ordered canonically, so the pattern ignores left-right symmetry, operand
shuffling and the stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .environment import BAD, ELIMINATED, SOLVED, STEP_LIMIT, TIMEOUT, Trace
from .expr import Add, Equation, Expr, Mul, Num, Pow, SymConst, Unknown
from .parser import parse_equation

SPECIAL_LABELS = (SOLVED, TIMEOUT, BAD, STEP_LIMIT)

# Operand order inside commutative patterns: numerics first, then the symbolic
# constant, then x-terms.  Sides are ordered longest/most-x-ish first, which
# reproduces the expected node labels (N*x=N, N+x=N, x=N).
_RANK = {"N": 0, "c": 1, "x": 2, "(": 3, ")": 4, "^": 5, "*": 6, "+": 7}


def _rank_seq(pattern: str):
    return tuple(_RANK.get(ch, 8) for ch in pattern)


def _pattern(e: Expr, parent: str = "top") -> str:
    if isinstance(e, Num):
        return "N"
    if isinstance(e, Unknown):
        return "x"
    if isinstance(e, SymConst):
        return "c"
    if isinstance(e, Add):
        parts = sorted((_pattern(a, "add") for a in e.args), key=_rank_seq)
        body = "+".join(parts)
        return f"({body})" if parent in ("mul", "pow") else body
    if isinstance(e, Mul):
        parts = sorted((_pattern(a, "mul") for a in e.args), key=_rank_seq)
        body = "*".join(parts)
        return f"({body})" if parent == "pow" else body
    if isinstance(e, Pow):
        return f"{_pattern(e.base, 'pow')}^{_pattern(e.exp, 'pow')}"
    raise TypeError(f"cannot pattern {e!r}")


def superstate_of(eq: Equation) -> str:
    sides = [_pattern(eq.lhs), _pattern(eq.rhs)]
    sides.sort(key=lambda p: (-len(p), tuple(-r for r in _rank_seq(p))))
    return f"{sides[0]}={sides[1]}"


def trace_superstates(trace: Trace) -> list[str]:
    """Superstate sequence of a trace: one entry per recorded state, with
    non-goal terminals mapped to their special labels."""
    out = []
    for s in trace.steps:
        if s.terminal in (TIMEOUT, BAD, STEP_LIMIT):
            out.append(s.terminal)
        else:
            out.append(superstate_of(parse_equation(f"{s.lhs} = {s.rhs}")))
    return out


# ---------------------------------------------------------------------------
# Transition graphs
# ---------------------------------------------------------------------------

@dataclass
class TransitionGraph:
    node_weights: dict = field(default_factory=dict)  # fraction of steps spent
    edge_weights: dict = field(default_factory=dict)  # out-edge frequencies
    step_counts: dict = field(default_factory=dict)
    edge_counts: dict = field(default_factory=dict)
    total_steps: int = 0


def transition_graph(traces) -> TransitionGraph:
    """Node weight: fraction of all elementary steps spent in a superstate
    (counted on the pre-state of each step).  Edge weight: frequency among
    all transitions out of the edge's source."""
    g = TransitionGraph()
    for trace in traces:
        states = trace_superstates(trace)
        for a, b in zip(states, states[1:]):
            g.step_counts[a] = g.step_counts.get(a, 0) + 1
            g.edge_counts[(a, b)] = g.edge_counts.get((a, b), 0) + 1
            g.total_steps += 1
            g.step_counts.setdefault(b, 0)
    if g.total_steps:
        g.node_weights = {n: c / g.total_steps for n, c in g.step_counts.items()}
    out_totals: dict = {}
    for (a, _b), c in g.edge_counts.items():
        out_totals[a] = out_totals.get(a, 0) + c
    g.edge_weights = {e: c / out_totals[e[0]] for e, c in g.edge_counts.items()}
    return g


def to_dot(g: TransitionGraph, min_percent: float = 1.0) -> str:
    """DOT export; nodes and edges below ``min_percent`` are suppressed."""
    ids = {}
    lines = ["digraph strategy {", "  rankdir=TB;", '  node [shape=ellipse];']
    threshold = min_percent / 100.0
    for node, w in sorted(g.node_weights.items(), key=lambda kv: -kv[1]):
        if w < threshold and node not in SPECIAL_LABELS:
            continue
        ids[node] = f"n{len(ids)}"
        label = f"{node}\\n{100.0 * w:.1f}%"
        lines.append(f'  {ids[node]} [label="{label}"];')
    for (a, b), w in sorted(g.edge_weights.items(), key=lambda kv: -kv[1]):
        if w < threshold or a not in ids or b not in ids:
            continue
        lines.append(f'  {ids[a]} -> {ids[b]} [label="{100.0 * w:.1f}%"];')
    lines.append("}")
    return "\n".join(lines)


def graph_csv(g: TransitionGraph) -> str:
    lines = ["kind,source,target,weight,count"]
    for node, w in sorted(g.node_weights.items(), key=lambda kv: -kv[1]):
        lines.append(f"node,{node},,{w!r},{g.step_counts.get(node, 0)}")
    for (a, b), w in sorted(g.edge_weights.items()):
        lines.append(f"edge,{a},{b},{w!r},{g.edge_counts[(a, b)]}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Trace rendering and metrics
# ---------------------------------------------------------------------------

def render_trace(trace: Trace) -> str:
    """Human-readable step listing: action, resulting equation, stack,
    assumptions and cumulative reward."""
    lines = ["step  action        equation                      stack | assumptions | cum.reward"]
    cum = 0.0
    for s in trace.steps:
        cum += s.reward
        eqtxt = f"{s.lhs} = {s.rhs}"
        stack = ", ".join(s.stack) if s.stack else "-"
        assum = ", ".join(s.assumptions) if s.assumptions else "-"
        lines.append(f"{s.step:>4}  {s.action:<12}  {eqtxt:<28}  [{stack}] | {assum} | {cum:g}")
        if s.terminal:
            lines.append(f"      terminal: {s.terminal}")
    return "\n".join(lines)


def trace_metrics(traces) -> dict:
    traces = list(traces)
    counts = {SOLVED: 0, ELIMINATED: 0, TIMEOUT: 0, BAD: 0, STEP_LIMIT: 0, "unsolved": 0}
    steps_on_success = []
    total_steps = 0
    for t in traces:
        term = t.terminal or "unsolved"
        counts[term] = counts.get(term, 0) + 1
        total_steps += t.n_actions
        if term in (SOLVED, ELIMINATED):
            steps_on_success.append(t.n_actions)
    n = len(traces)
    success = (counts[SOLVED] + counts[ELIMINATED]) / n if n else 0.0
    avg = sum(steps_on_success) / len(steps_on_success) if steps_on_success else None
    return {
        "episodes": n,
        "success_rate": success,
        "avg_steps_success": avg,
        "total_steps": total_steps,
        **{f"n_{k}": v for k, v in counts.items()},
    }


def metrics_csv(metrics: dict) -> str:
    cols = list(metrics)
    row = ",".join("" if metrics[c] is None else str(metrics[c]) for c in cols)
    return ",".join(cols) + "\n" + row + "\n"
