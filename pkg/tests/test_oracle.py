from fractions import Fraction

import numpy as np
import pytest

from richardson.engine import Graph
from richardson.errors import CapacityError, GraphParseError, InvalidInputError
from richardson.oracle import (
    ExactModel, capture_probability, exact_capture, exact_vs_engine, format_graph,
    parse_graph, shipped_graphs,
)
from richardson.timefield import StubField

LAMS = (0.5, 1.0, 2.0, 3.0)


def _model(name, lam, exact=False):
    g, t1, t2 = shipped_graphs()[name]
    return ExactModel.from_sets(g, t1, t2, lam=Fraction(lam) if exact else lam)


@pytest.mark.parametrize("lam", [Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3)])
def test_path_rational(lam):
    res = exact_capture(_model("path3", lam, exact=True), exact=True)
    assert res.capture2 == [0, lam / (1 + lam), 1]
    assert res.capture1[1] == 1 / (1 + lam)
    # one race, then nothing left: mean holding time 1 / (1 + lam)
    assert res.expected_completion_time == 1 / (1 + lam)


def test_cycle_symmetric():
    res = exact_capture(_model("cycle4", 1, exact=True), exact=True)
    assert res.capture2 == [0, Fraction(1, 2), 1, Fraction(1, 2)]


def test_single_edge_one_type():
    for lam in (0.5, 2.0):
        m = ExactModel(Graph.path(2), (1, 0), rate1=lam)
        assert exact_capture(m).expected_completion_time == pytest.approx(1 / lam, abs=1e-15)


def test_grid_corner_exchange_symmetry():
    # 3x3 grid is too big for rational mode, so check float values against
    # themselves under the corner-exchanging automorphism instead
    g, t1, t2 = shipped_graphs()["grid3x3"]
    res = exact_capture(ExactModel.from_sets(g, t1, t2, lam=1.0))
    flip = [8 - v for v in range(9)]      # rotation by 180 degrees swaps corners 0 and 8
    for v in range(9):
        assert res.capture2[v] == pytest.approx(res.capture1[flip[v]], abs=1e-14)
    assert res.capture2[4] == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("name", list(shipped_graphs()))
@pytest.mark.parametrize("lam", LAMS)
def test_probability_conservation(name, lam):
    res = exact_capture(_model(name, lam))
    assert all(abs(m - 1) < 1e-12 for m in res.layer_mass)
    for v in range(len(res.capture1)):
        assert 0 <= res.capture2[v] <= 1
        assert res.capture1[v] + res.capture2[v] == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("name", list(shipped_graphs()))
def test_initial_vertices_pinned(name):
    m = _model(name, 2.0)
    res = exact_capture(m)
    for v, ty in enumerate(m.initial):
        if ty == 1:
            assert (res.capture1[v], res.capture2[v]) == (1.0, 0.0)
        elif ty == 2:
            assert (res.capture1[v], res.capture2[v]) == (0.0, 1.0)


@pytest.mark.parametrize("name", list(shipped_graphs()))
def test_lambda_to_zero_monotone(name):
    lams = [1.0, 0.5, 0.1, 0.01, 0.001]
    caps = [exact_capture(_model(name, lam)).capture2 for lam in lams]
    m = _model(name, 1.0)
    for v, ty in enumerate(m.initial):
        if ty:
            continue
        seq = [c[v] for c in caps]
        assert all(b < a for a, b in zip(seq, seq[1:]))
        assert seq[-1] < 0.01


def test_terminal_distribution():
    m = _model("cycle4", 1.0)
    res = exact_capture(m, keep_terminal=True)
    assert sum(res.terminal.values()) == pytest.approx(1, abs=1e-14)
    assert capture_probability(m, [1, 3], ty=1) == pytest.approx(0.25)


def test_capacity():
    with pytest.raises(CapacityError):
        exact_capture(ExactModel.from_sets(Graph.path(13), [0], [12]))
    with pytest.raises(CapacityError):
        exact_capture(ExactModel.from_sets(Graph.path(7), [0], [6]), exact=True)


def test_model_validation():
    with pytest.raises(InvalidInputError):
        ExactModel(Graph.path(3), (0, 0, 0))
    with pytest.raises(InvalidInputError):
        ExactModel(Graph.path(3), (1, 0))


def test_engine_agreement_path():
    rep = exact_vs_engine(_model("path3", 2.0), replicas=100_000, seed=5)
    assert rep.passed
    assert abs(rep.estimate[1] - 2 / 3) <= 3 * rep.se[1]


def test_engine_agreement_grid():
    rep = exact_vs_engine(_model("grid3x3", 1.0), replicas=100_000, seed=6)
    assert rep.passed
    free = [v for v in range(9) if v not in (0, 8)]
    assert all(rep.flags[v] == "ok" for v in free)
    assert abs(rep.completion_estimate - rep.completion_exact) < 4 * rep.completion_se


def test_stub_replicas_zero_variance_flags():
    m = _model("path3", 1.0)
    rep = exact_vs_engine(m, replicas=100, field_=StubField({0: 1.0, 1: 0.5}))
    assert rep.flags[0] == rep.flags[2] == "zero-variance"
    assert rep.estimate[1] == 1.0            # the stub always hands vertex 1 to type 2
    assert rep.flags[1] == "deviates" and not rep.passed


def test_parse_graph_roundtrip():
    g = Graph.grid(2, 3)
    assert parse_graph(format_graph(g)) == g
    g2 = parse_graph("# comment\n3 2\n0 1   # first\n\n1 2\n")
    assert g2 == Graph.path(3)


@pytest.mark.parametrize("text,line", [
    ("", 1), ("3\n0 1\n", 1), ("3 2\n0 1\n1 x\n", 3), ("3 2\n0 1\n", 2),
    ("3 1\n0 5\n", 2), ("3 1\n1 1\n", 2),
])
def test_parse_graph_errors(text, line):
    with pytest.raises(GraphParseError) as exc:
        parse_graph(text)
    assert exc.value.lineno == line
    assert str(exc.value).startswith(f"line {line}:")


def test_exchange_symmetry_exact():
    # cycle automorphism v -> v + 2 swaps the two initial vertices at lam = 1
    g, t1, t2 = shipped_graphs()["cycle4"]
    a = exact_capture(ExactModel.from_sets(g, t1, t2, lam=Fraction(1)), exact=True)
    b = exact_capture(ExactModel.from_sets(g, t2, t1, lam=Fraction(1)), exact=True)
    for v in range(4):
        assert a.capture2[v] == b.capture1[v]
        assert a.capture2[v] == a.capture1[(v + 2) % 4]


GRID = [0.25, 0.5, 0.75, 1.0]


@pytest.mark.parametrize("name", list(shipped_graphs()))
def test_type1_capture_monotone_in_lambda(name):
    g, t1, t2 = shipped_graphs()[name]
    free = [v for v in range(g.n) if v not in t1 and v not in t2]
    targets = [[v] for v in free] + [free]
    for target in targets:
        p = [capture_probability(ExactModel.from_sets(g, t1, t2, lam=lam), target)
             for lam in GRID]
        assert all(b <= a + 1e-10 for a, b in zip(p, p[1:])), (target, p)


def test_capture_float_matches_rational():
    m_f = _model("path3", 3.0)
    m_q = _model("path3", 3, exact=True)
    f = exact_capture(m_f)
    q = exact_capture(m_q, exact=True)
    assert np.allclose([float(x) for x in q.capture2], f.capture2, atol=1e-15)
