"""Exact two-type dynamics on tiny graphs via the embedded jump chain.

Each jump infects one vertex, so states split into layers by the number of
infected vertices and probability mass only moves forward. A single sweep
over the layers gives exact terminal distributions and the expected time
to absorption, with no linear solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .engine import Graph, graph_init, run_graph_batch
from .errors import CapacityError, GraphParseError, InvalidInputError
from .timefield import Channel, graph_values_batch, derive_seed

MAX_VERTICES = 12
MAX_RATIONAL_VERTICES = 6
MAX_TERMINAL_VERTICES = 8


@dataclass(frozen=True)
class ExactModel:
    graph: Graph
    initial: tuple          # per-vertex type 0, 1, 2
    lam: float = 1.0        # type-2 rate
    rate1: float = 1.0

    @classmethod
    def from_sets(cls, graph: Graph, type1: Sequence[int], type2: Sequence[int] = (),
                  lam=1.0, rate1=1.0) -> "ExactModel":
        return cls(graph, tuple(int(t) for t in graph_init(graph, type1, type2)), lam, rate1)

    def __post_init__(self):
        if len(self.initial) != self.graph.n:
            raise InvalidInputError("initial configuration length != vertex count")
        if not any(self.initial):
            raise InvalidInputError("at least one vertex must be infected")


@dataclass
class ExactResult:
    capture1: list
    capture2: list
    expected_completion_time: float
    layer_mass: list = field(repr=False)
    terminal: dict | None = field(default=None, repr=False)

    def event_probability(self, predicate) -> float:
        if self.terminal is None:
            raise InvalidInputError("terminal distribution was not kept")
        return sum(p for s, p in self.terminal.items() if predicate(s))


def _rates(model, exact):
    if exact:
        return Fraction(model.rate1), Fraction(model.lam)
    return float(model.rate1), float(model.lam)


def exact_capture(model: ExactModel, exact: bool = False, keep_terminal: bool | None = None
                  ) -> ExactResult:
    """Exact per-vertex capture probabilities and expected completion time.

    With ``exact=True`` all arithmetic is rational (``Fraction``), for graphs
    with at most six vertices.
    """
    g = model.graph
    if g.n > MAX_VERTICES:
        raise CapacityError(f"{g.n} vertices exceeds the exact limit of {MAX_VERTICES}")
    if exact and g.n > MAX_RATIONAL_VERTICES:
        raise CapacityError(f"rational mode is limited to {MAX_RATIONAL_VERTICES} vertices")
    if keep_terminal is None:
        keep_terminal = g.n <= MAX_TERMINAL_VERTICES
    r1, r2 = _rates(model, exact)
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    adj = [[] for _ in range(g.n)]
    for u, v in g.edges:
        adj[u].append(v)
        adj[v].append(u)

    layer = {tuple(model.initial): one}
    terminal: dict = {}
    c1 = [zero] * g.n
    c2 = [zero] * g.n
    etime = zero
    masses = []
    while layer:
        masses.append(sum(layer.values(), zero))
        nxt: dict = {}
        for s, p in layer.items():
            moves = []
            total = zero
            for v in range(g.n):
                if s[v]:
                    continue
                n1 = sum(1 for u in adj[v] if s[u] == 1)
                n2 = sum(1 for u in adj[v] if s[u] == 2)
                if n1:
                    moves.append((v, 1, r1 * n1))
                    total += r1 * n1
                if n2:
                    moves.append((v, 2, r2 * n2))
                    total += r2 * n2
            if not moves:
                for v in range(g.n):
                    if s[v] == 1:
                        c1[v] += p
                    elif s[v] == 2:
                        c2[v] += p
                if keep_terminal:
                    terminal[s] = terminal.get(s, zero) + p
                continue
            etime += p / total
            for v, ty, rate in moves:
                t = s[:v] + (ty,) + s[v + 1:]
                nxt[t] = nxt.get(t, zero) + p * rate / total
        layer = nxt
    for v, ty in enumerate(model.initial):
        if ty:
            c1[v], c2[v] = (one, zero) if ty == 1 else (zero, one)
    return ExactResult(c1, c2, etime, masses, terminal if keep_terminal else None)


def capture_probability(model: ExactModel, target: Sequence[int], ty: int = 1) -> float:
    """P(every vertex of `target` ends with type `ty`)."""
    res = exact_capture(model, keep_terminal=True)
    target = list(target)
    return res.event_probability(lambda s: all(s[v] == ty for v in target))


# --- engine comparison ---------------------------------------------------------------

@dataclass
class ComparisonReport:
    lam: float
    replicas: int
    seed: int
    exact: list
    estimate: list
    se: list
    z: list
    flags: list              # "ok", "deviates", "zero-variance", "zero-variance-mismatch"
    completion_exact: float
    completion_estimate: float
    completion_se: float

    @property
    def passed(self) -> bool:
        return all(f in ("ok", "zero-variance") for f in self.flags)

    def rows(self) -> list:
        return [(v, self.exact[v], self.estimate[v], self.se[v], self.z[v], self.flags[v])
                for v in range(len(self.exact))]


def engine_capture(model: ExactModel, replicas: int, seed: int = 0, field_=None):
    """Graph-mode engine replicas; returns (occupancy matrix, completion times)."""
    g = model.graph
    m = len(g.edges)
    if field_ is None:
        seeds = [derive_seed(seed, r) for r in range(replicas)]
        b1 = graph_values_batch(seeds, Channel.CH1, m)
        b2 = graph_values_batch(seeds, Channel.CH2, m)
    else:
        b1 = np.tile(field_.graph_values(m, Channel.CH1), (replicas, 1))
        b2 = np.tile(field_.graph_values(m, Channel.CH2), (replicas, 1))
    return run_graph_batch(g, b1 / float(model.rate1), b2 / float(model.lam),
                           np.array(model.initial, dtype=np.int8))


def exact_vs_engine(model: ExactModel, replicas: int = 100_000, seed: int = 0,
                    field_=None, threshold: float = 3.0) -> ComparisonReport:
    """Compare engine type-2 capture frequencies with exact probabilities, per vertex."""
    exact = exact_capture(model)
    occ, tmax = engine_capture(model, replicas, seed, field_)
    est = (occ == 2).mean(axis=0)
    p = np.clip([float(x) for x in exact.capture2], 0.0, 1.0)
    se = np.sqrt(p * (1 - p) / replicas)
    z, flags = [], []
    for v in range(model.graph.n):
        if se[v] == 0:
            z.append(0.0 if est[v] == p[v] else math.inf)
            flags.append("zero-variance" if est[v] == p[v] else "zero-variance-mismatch")
        else:
            z.append(float(abs(est[v] - p[v]) / se[v]))
            flags.append("ok" if z[-1] <= threshold else "deviates")
    tse = float(tmax.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    return ComparisonReport(float(model.lam), replicas, seed, p.tolist(), est.tolist(),
                            se.tolist(), z, flags, float(exact.expected_completion_time),
                            float(tmax.mean()), tse)


# --- graph files ------------------------------------------------------------------------

def parse_graph(text: str) -> Graph:
    """Parse the edge-list format ``"V E\\nu v\\n..."`` (blank lines and # comments allowed)."""
    lines = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines:
        raise GraphParseError("empty graph file", 1)
    lineno, head = lines[0]
    try:
        n, m = (int(x) for x in head.split())
    except ValueError:
        raise GraphParseError(f"expected 'V E', got {head!r}", lineno) from None
    if n < 1 or m < 0:
        raise GraphParseError(f"invalid sizes V={n} E={m}", lineno)
    if len(lines) - 1 != m:
        raise GraphParseError(f"header declares {m} edges, found {len(lines) - 1}",
                              lines[-1][0] if len(lines) > 1 else lineno)
    edges = []
    for lineno, ln in lines[1:]:
        try:
            u, v = (int(x) for x in ln.split())
        except ValueError:
            raise GraphParseError(f"expected 'u v', got {ln!r}", lineno) from None
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise GraphParseError(f"invalid edge ({u}, {v})", lineno)
        edges.append((u, v))
    return Graph(n, tuple(edges))


def format_graph(graph: Graph) -> str:
    return "\n".join([f"{graph.n} {len(graph.edges)}"] + [f"{u} {v}" for u, v in graph.edges]) + "\n"


def read_graph(path) -> Graph:
    with open(path) as fh:
        return parse_graph(fh.read())


def shipped_graphs() -> dict:
    """The validation suite: (graph, type-1 vertices, type-2 vertices)."""
    return {
        "path3": (Graph.path(3), [0], [2]),
        "cycle4": (Graph.cycle(4), [0], [2]),
        "grid3x3": (Graph.grid(3, 3), [0], [8]),
    }
