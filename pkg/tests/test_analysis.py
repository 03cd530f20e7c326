"""Superstates, transition graphs, DOT/CSV export, trace rendering."""

import numpy as np
import pytest

from stacksolver.analysis import (
    graph_csv,
    metrics_csv,
    render_trace,
    superstate_of,
    to_dot,
    trace_metrics,
    trace_superstates,
    transition_graph,
)
from stacksolver.environment import EnvConfig, Trace, TraceStep
from stacksolver.expr import Equation
from stacksolver.parser import parse_equation
from stacksolver.simplify import normalize


def sstate(text):
    eq = parse_equation(text)
    return superstate_of(Equation(normalize(eq.lhs), normalize(eq.rhs)))


class TestSuperstate:
    def test_node_labels_from_strategy_graph(self):
        assert sstate("-1/5 + 3/4*x = 5/8 + 2*x") == "N+N*x=N+N*x"
        assert sstate("x = -33/50") == "x=N"
        assert sstate("3*x = 7") == "N*x=N"
        assert sstate("2 + x = 7") == "N+x=N"

    def test_swap_invariance(self):
        assert sstate("7 = 3*x") == sstate("3*x = 7")
        assert sstate("x = 5") == sstate("5 = x") == "x=N"

    def test_shuffle_invariance(self):
        rng = np.random.default_rng(0)
        eq = parse_equation("1 + 2*x + 3*c = 4*c*x + 5")
        base = None
        for k in range(10):
            lhs = normalize(eq.lhs, rng=np.random.default_rng(k), shuffle=True)
            rhs = normalize(eq.rhs, rng=np.random.default_rng(100 + k), shuffle=True)
            pat = superstate_of(Equation(lhs, rhs))
            if base is None:
                base = pat
            assert pat == base
        del rng

    def test_symbolic_and_power_patterns(self):
        assert "c" in sstate("c*x = 3")
        assert "^" in sstate("x^2 = 4")
        assert sstate("0 = 0") == "N=N"


def make_trace(rows):
    t = Trace()
    for i, (action, lhs, rhs, reward, terminal) in enumerate(rows):
        t.steps.append(TraceStep(step=i, action=action, lhs=lhs, rhs=rhs,
                                 stack=[], assumptions=[], reward=reward,
                                 terminal=terminal))
    return t


class TestTransitionGraph:
    def two_step_trace(self):
        return make_trace([
            ("reset", "2 + x", "7", 0.0, None),       # A = N+x=N
            ("eq_+", "3*x", "7", 0.0, None),          # hmm: stays for clarity
            ("eq_*", "x", "5", 3.0, "solved"),        # x=N
        ])

    def test_single_trace_edges(self):
        g = transition_graph([self.two_step_trace()])
        assert g.total_steps == 2
        a = "N+x=N"
        b = "N*x=N"
        c = "x=N"
        assert g.edge_weights[(a, b)] == 1.0
        assert g.edge_weights[(b, c)] == 1.0
        assert g.node_weights[a] == 0.5
        assert g.node_weights[b] == 0.5
        assert g.node_weights[c] == 0.0  # terminal states accrue no step time

    def test_weight_normalization(self):
        traces = [self.two_step_trace() for _ in range(3)]
        traces.append(make_trace([
            ("reset", "2 + x", "7", 0.0, None),
            ("push_1", "2 + x", "7", 0.0, None),
            ("eq_+", "3 + x", "8", 0.0, "step_limit"),
        ]))
        g = transition_graph(traces)
        assert sum(g.node_weights.values()) == pytest.approx(1.0, abs=1e-12)
        by_source = {}
        for (a, _b), w in g.edge_weights.items():
            by_source[a] = by_source.get(a, 0.0) + w
        for total in by_source.values():
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_special_terminal_nodes(self):
        t = make_trace([
            ("reset", "2 + x", "7", 0.0, None),
            ("copy_lhs_1", "2 + x", "7", 0.0, "timeout"),
        ])
        g = transition_graph([t])
        assert ("N+x=N", "timeout") in g.edge_weights

    def test_dot_export(self):
        g = transition_graph([self.two_step_trace()])
        dot = to_dot(g, min_percent=1.0)
        assert dot.startswith("digraph")
        assert "N+x=N" in dot and "x=N" in dot
        assert "50.0%" in dot and "100.0%" in dot
        csv = graph_csv(g)
        assert csv.splitlines()[0] == "kind,source,target,weight,count"
        assert any(line.startswith("edge,N*x=N,x=N") for line in csv.splitlines())

    def test_min_percent_suppression(self):
        traces = [self.two_step_trace() for _ in range(200)]
        traces.append(make_trace([
            ("reset", "c*x = 1".split(" = ")[0], "1", 0.0, None),
            ("eq_+", "x", "9", 3.0, "solved"),
        ]))
        g = transition_graph(traces)
        dot = to_dot(g, min_percent=1.0)
        assert "c" not in dot.replace("digraph", "")  # rare node suppressed


class TestTraceSuperstates:
    def test_terminal_mapping(self):
        t = make_trace([
            ("reset", "2 + x", "7", 0.0, None),
            ("eq_+", "x", "5", 3.0, "solved"),
        ])
        assert trace_superstates(t) == ["N+x=N", "x=N"]
        t2 = make_trace([
            ("reset", "2 + x", "7", 0.0, None),
            ("copy_lhs_1", "2 + x", "7", 0.0, "bad"),
        ])
        assert trace_superstates(t2) == ["N+x=N", "bad"]


class TestRenderTrace:
    def test_solved_listing(self):
        t = make_trace([
            ("reset", "-1/5 + 3/4*x", "5/8 + 2*x", 0.0, None),
            ("eq_*", "x", "-33/50", 3.0, "solved"),
        ])
        text = render_trace(t)
        assert "x = -33/50" in text
        assert "terminal: solved" in text
        assert "eq_*" in text

    def test_empty_trace_header_only(self):
        text = render_trace(Trace())
        assert len(text.splitlines()) == 1

    def test_aborted_episode_labelled(self):
        t = make_trace([
            ("reset", "2 + x", "7", 0.0, None),
            ("push_1", "2 + x", "7", 0.0, "step_limit"),
        ])
        assert "terminal: step_limit" in render_trace(t)


class TestMetrics:
    def test_aggregation(self):
        t_ok = make_trace([
            ("reset", "2 + x", "7", 0.0, None),
            ("eq_+", "x", "5", 3.0, "solved"),
        ])
        t_fail = make_trace([
            ("reset", "2 + x", "7", 0.0, None),
            ("push_1", "2 + x", "7", 0.0, "step_limit"),
        ])
        m = trace_metrics([t_ok, t_ok, t_fail])
        assert m["episodes"] == 3
        assert m["success_rate"] == pytest.approx(2 / 3)
        assert m["avg_steps_success"] == 1.0
        assert m["n_solved"] == 2 and m["n_step_limit"] == 1
        csv = metrics_csv(m)
        assert csv.count("\n") == 2
