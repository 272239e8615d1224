"""Event-driven one-type and two-type growth inside a finite box.

Passage times are read from a field (`FieldSpec` or `StubField`) once per
run; the growth itself is a competitive Dijkstra expansion in
`richardson._kernels`. The same kernel runs on explicit edge lists
("graph mode"), which is how the exact oracle validates it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .errors import InvalidConfigError, InvalidInputError
from .lattice import Box, check_dimension, is_fertile, origin, site_set, unit
from .timefield import Channel, _check_rate


class StopRule(enum.Enum):
    FIRST_BOUNDARY_CONTACT = "first_boundary_contact"
    FILL_BOX = "fill_box"


class Discipline(enum.Enum):
    SHARED = "shared"
    INDEPENDENT = "independent"


class Classification(enum.Enum):
    TYPE1_STRANGLED = "type1_strangled"
    TYPE2_STRANGLED = "type2_strangled"
    BOTH_REACHED_BOUNDARY = "both_reached_boundary"
    BOX_FILLED = "box_filled"


@dataclass
class GrowthState:
    """Occupancy, infection times and parent links of one run.

    Arrays are indexed by the box's linear (lexicographic) site index.
    `parent` is -1 on initial and uninfected sites; `order` lists infected
    sites in the order they were fixed, initial sites first.
    """

    box: Box
    occupancy: np.ndarray
    infection_time: np.ndarray
    parent: np.ndarray
    order: np.ndarray
    first_boundary_time: tuple = (np.inf, np.inf)
    n_events: int = 0
    stop: int = 0

    def type_at(self, x) -> int:
        return int(self.occupancy[self.box.index(x)])

    def time_at(self, x) -> float:
        return float(self.infection_time[self.box.index(x)])

    def parent_of(self, x):
        p = self.parent[self.box.index(x)]
        return None if p < 0 else self.box.site(p)

    @property
    def infected(self) -> np.ndarray:
        return self.occupancy != 0

    def counts(self) -> tuple:
        return int((self.occupancy == 1).sum()), int((self.occupancy == 2).sum())

    def boundary_counts(self) -> tuple:
        occ = self.occupancy[self.box.boundary_mask]
        return int((occ == 1).sum()), int((occ == 2).sum())

    def level_counts(self, ty: int = 2, axis: int = 0) -> np.ndarray:
        """Number of type-`ty` sites at each level x_axis = lo..hi."""
        lvl = self.box.coords[:, axis] - self.box.lo[axis]
        return np.bincount(lvl[self.occupancy == ty], minlength=self.box.shape[axis])

    def shell_presence(self) -> tuple:
        """Boolean arrays p1, p2 with p_i[R] true iff type i occupies a site at L-inf radius R."""
        shell = self.box.shell_index()
        m = int(shell.max()) + 1
        p1 = np.bincount(shell[self.occupancy == 1], minlength=m) > 0
        p2 = np.bincount(shell[self.occupancy == 2], minlength=m) > 0
        return p1, p2


# --- initial configurations ----------------------------------------------------

class InitialConfiguration:
    """Base class: `array(box)` returns per-site initial types (0, 1, 2)."""

    def array(self, box: Box) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class FinitePair(InitialConfiguration):
    xi_1: frozenset
    xi_2: frozenset

    def __init__(self, xi_1, xi_2):
        object.__setattr__(self, "xi_1", site_set(xi_1))
        object.__setattr__(self, "xi_2", site_set(xi_2))
        if self.xi_1 & self.xi_2:
            raise InvalidInputError("initial sets overlap")

    @classmethod
    def standard(cls, d: int = 2) -> "FinitePair":
        """Type 1 at the origin, type 2 at (1, 0, ..., 0)."""
        return cls({origin(d)}, {unit(d)})

    def fertile(self) -> bool:
        return is_fertile(self.xi_1, self.xi_2)

    def array(self, box):
        init = np.zeros(box.n_sites, dtype=np.int8)
        for ty, xs in ((1, self.xi_1), (2, self.xi_2)):
            for x in xs:
                init[box.index(x)] = ty
        return init


class _TypeTwoAtOrigin(InitialConfiguration):
    def _type1_mask(self, c: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def array(self, box):
        c = box.coords
        init = np.zeros(box.n_sites, dtype=np.int8)
        init[self._type1_mask(c)] = 1
        init[box.index(origin(box.d))] = 2
        return init


@dataclass(frozen=True)
class Hyperplane(_TypeTwoAtOrigin):
    """Type 1 on {x_1 = 0} minus the origin."""

    def _type1_mask(self, c):
        return c[:, 0] == 0


@dataclass(frozen=True)
class HalfLine(_TypeTwoAtOrigin):
    """Type 1 on {x_1 <= 0, x_i = 0 for i >= 2} minus the origin."""

    def _type1_mask(self, c):
        return (c[:, 0] <= 0) & np.all(c[:, 1:] == 0, axis=1)


@dataclass(frozen=True)
class Cone(_TypeTwoAtOrigin):
    """Type 1 on {x_1 <= 0, max_{i>=2} |x_i| <= alpha |x_1|} minus the origin."""

    alpha: float = 0.0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise InvalidInputError(f"cone slope must be nonnegative, got {self.alpha}")

    def _type1_mask(self, c):
        lateral = np.abs(c[:, 1:]).max(axis=1)
        return (c[:, 0] <= 0) & (lateral <= self.alpha * np.abs(c[:, 0]))


@dataclass(frozen=True)
class HalfSpace(_TypeTwoAtOrigin):
    """Type 1 on {x_1 <= 0} minus the origin."""

    def _type1_mask(self, c):
        return c[:, 0] <= 0


@dataclass(frozen=True)
class TwoTypeConfig:
    lam: float
    initial: InitialConfiguration
    box: Box
    discipline: Discipline = Discipline.INDEPENDENT
    stop_rule: StopRule = StopRule.FILL_BOX

    def __post_init__(self):
        _check_rate(self.lam)
        if self.discipline is Discipline.SHARED and self.lam != 1.0:
            raise InvalidConfigError(f"SHARED discipline requires lam = 1, got {self.lam}")


@dataclass
class Outcome:
    classification: Classification
    boundary_hit_time: float | None
    first_boundary_time: tuple
    counts: tuple
    boundary_counts: tuple
    level_type2: np.ndarray
    state: GrowthState = field(repr=False)

    @property
    def both_on_boundary(self) -> bool:
        return self.boundary_counts[0] > 0 and self.boundary_counts[1] > 0


# --- runs ------------------------------------------------------------------------

def _weights(field_, box, ch, rate):
    w = field_.box_values(box, ch)
    return w if rate == 1.0 else w / rate


def _run(box, w1, w2, init, mode, target=-1, marks=None) -> GrowthState:
    nbr, eid = box.adjacency()
    marks = box.boundary_mask if marks is None else marks
    occ, time, parent, order, fb, stop, npop = K.grow(
        nbr, eid, w1, w2, init, marks, mode, target)
    return GrowthState(box, occ, time, parent, order, (fb[1], fb[2]), int(npop), int(stop))


def _stop_mode(stop_rule, two_type):
    if StopRule(stop_rule) is StopRule.FILL_BOX:
        return K.MODE_FILL
    return K.MODE_DECIDE if two_type else K.MODE_FIRST_CONTACT


def _default_channel(field_):
    return field_.channels[0]


def run_one_type(field_, rate: float, sources, box: Box,
                 stop_rule=StopRule.FILL_BOX, channel=None) -> GrowthState:
    """Infection times T(sources, x) for every site reached.

    Passage times come from `channel` (the field's first channel by
    default) divided by `rate`. All infected sites carry type 1.
    """
    rate = _check_rate(rate)
    check_dimension(box.d)
    sources = site_set(sources)
    if not sources:
        raise InvalidInputError("sources must be nonempty")
    init = np.zeros(box.n_sites, dtype=np.int8)
    for x in sources:
        if not box.contains(x):
            raise InvalidInputError(f"source {x} outside box")
        init[box.index(x)] = 1
    ch = _default_channel(field_) if channel is None else channel
    w = _weights(field_, box, ch, rate)
    return _run(box, w, w, init, _stop_mode(stop_rule, False))


def first_passage_time(field_, rate: float, x, y, box: Box, channel=None) -> float:
    """T(x, y) over paths inside `box`; stops as soon as `y` is fixed."""
    rate = _check_rate(rate)
    x, y = tuple(x), tuple(y)
    if not (box.contains(x) and box.contains(y)):
        raise InvalidInputError(f"{x} or {y} outside box")
    init = np.zeros(box.n_sites, dtype=np.int8)
    init[box.index(x)] = 1
    ch = _default_channel(field_) if channel is None else channel
    w = _weights(field_, box, ch, rate)
    state = _run(box, w, w, init, K.MODE_TARGET, box.index(y))
    t = state.infection_time[box.index(y)]
    if not np.isfinite(t):
        raise RuntimeError(f"{y} unreachable from {x}")
    return float(t)


def passage_times_from(field_, rate, sources_and_targets, box, channel=None,
                       weights=None) -> dict:
    """T(s, t) for several (source, targets) groups on one realization.

    One run per source, stopped once all its targets are infected; the
    field is read once. Returns {(s, t): T}.
    """
    rate = _check_rate(rate)
    if weights is None:
        ch = _default_channel(field_) if channel is None else channel
        weights = _weights(field_, box, ch, rate)
    out = {}
    for s, targets in sources_and_targets:
        s = tuple(s)
        init = np.zeros(box.n_sites, dtype=np.int8)
        init[box.index(s)] = 1
        idx = np.array([box.index(t) for t in targets], dtype=np.int64)
        marks = np.zeros(box.n_sites, dtype=np.bool_)
        marks[idx] = True
        state = _run(box, weights, weights, init, K.MODE_ALL_MARKED, marks=marks)
        for t, i in zip(targets, idx):
            out[(s, tuple(t))] = float(state.infection_time[i])
    return out


def two_type_weights(field_, config: TwoTypeConfig):
    """Per-type passage-time arrays for a two-type run."""
    if config.discipline is Discipline.SHARED:
        w = field_.box_values(config.box, Channel.SHARED)
        return w, w
    w1 = field_.box_values(config.box, Channel.CH1)
    w2 = _weights(field_, config.box, Channel.CH2, float(config.lam))
    return w1, w2


def run_two_type(field_, config: TwoTypeConfig, weights=None) -> Outcome:
    """Competitive growth of types 1 (rate 1) and 2 (rate `config.lam`).

    `weights` may pass precomputed ``(w1, w2)`` arrays (used by the coupling
    to rescale a single set of base samples).
    """
    box = config.box
    check_dimension(box.d)
    init = config.initial.array(box)
    if not ((init == 1).any() and (init == 2).any()):
        raise InvalidInputError("both types need at least one initial site")
    w1, w2 = two_type_weights(field_, config) if weights is None else weights
    state = _run(box, w1, w2, init, _stop_mode(config.stop_rule, True))
    return classify(state, config.stop_rule)


def classify(state: GrowthState, stop_rule) -> Outcome:
    stop = state.stop
    fb = state.first_boundary_time
    if StopRule(stop_rule) is StopRule.FILL_BOX:
        cls = Classification.BOX_FILLED
    elif stop == K.STOP_BOTH:
        cls = Classification.BOTH_REACHED_BOUNDARY
    elif stop == K.STOP_STRANGLED_1:
        cls = Classification.TYPE1_STRANGLED
    elif stop == K.STOP_STRANGLED_2:
        cls = Classification.TYPE2_STRANGLED
    else:
        raise RuntimeError(f"unexpected stop code {stop}")
    hit = min(fb)
    return Outcome(
        classification=cls,
        boundary_hit_time=float(hit) if np.isfinite(hit) else None,
        first_boundary_time=tuple(float(t) for t in fb),
        counts=state.counts(),
        boundary_counts=state.boundary_counts(),
        level_type2=state.level_counts(2),
        state=state,
    )


# --- geodesic tree -----------------------------------------------------------------

@dataclass
class GeodesicTree:
    """Parent links of a single-source run restricted to its infected sites."""

    box: Box
    root: int
    parent: np.ndarray
    order: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.order)

    @property
    def n_edges(self) -> int:
        return int((self.parent[self.order] >= 0).sum())

    def as_dict(self) -> dict:
        return {self.box.site(v): self.box.site(self.parent[v])
                for v in self.order if self.parent[v] >= 0}

    def path_to_root(self, x) -> list:
        v = self.box.index(x)
        if v != self.root and self.parent[v] < 0:
            raise InvalidInputError(f"{x} is not in the tree")
        path = [v]
        while self.parent[v] >= 0:
            v = self.parent[v]
            path.append(v)
        return [self.box.site(u) for u in path]

    def branch_labels(self) -> np.ndarray:
        """For each site, the child of the root whose subtree contains it (-1 if none)."""
        lab = np.full(len(self.parent), -1, dtype=np.int64)
        for v in self.order:
            p = self.parent[v]
            if p < 0:
                continue
            lab[v] = v if p == self.root else lab[p]
        return lab


def geodesic_tree(state: GrowthState) -> GeodesicTree:
    roots = np.flatnonzero((state.parent < 0) & state.infected)
    if len(roots) != 1:
        raise InvalidInputError(f"geodesic tree needs a single-source run, got {len(roots)} roots")
    return GeodesicTree(state.box, int(roots[0]), state.parent.copy(), state.order.copy())


# --- graph mode ---------------------------------------------------------------------

@dataclass(frozen=True)
class Graph:
    """Undirected graph on vertices 0..n-1 with an ordered edge list."""

    n: int
    edges: tuple

    def __post_init__(self):
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n) or u == v:
                raise InvalidInputError(f"bad edge ({u}, {v}) for {self.n} vertices")

    def adjacency(self) -> tuple:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        k = max(int(deg.max()) if self.n else 0, 1)
        nbr = np.full((self.n, k), -1, dtype=np.int64)
        eid = np.full((self.n, k), -1, dtype=np.int64)
        fill = np.zeros(self.n, dtype=np.int64)
        for e, (u, v) in enumerate(self.edges):
            nbr[u, fill[u]], eid[u, fill[u]] = v, e
            fill[u] += 1
            nbr[v, fill[v]], eid[v, fill[v]] = u, e
            fill[v] += 1
        return nbr, eid

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls(n, tuple((i, i + 1) for i in range(n - 1)))

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls(n, tuple((i, (i + 1) % n) for i in range(n)))

    @classmethod
    def grid(cls, rows: int, cols: int) -> "Graph":
        edges = []
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    edges.append((v, v + 1))
                if r + 1 < rows:
                    edges.append((v, v + cols))
        return cls(rows * cols, tuple(edges))


def graph_init(graph: Graph, type1: Sequence[int], type2: Sequence[int]) -> np.ndarray:
    init = np.zeros(graph.n, dtype=np.int8)
    for ty, vs in ((1, type1), (2, type2)):
        for v in vs:
            if init[v]:
                raise InvalidInputError(f"vertex {v} assigned twice")
            init[v] = ty
    return init


def run_graph(graph: Graph, w1, w2, init) -> GrowthState:
    """Fill run on an explicit edge list; `w1`/`w2` are per-edge passage times."""
    nbr, eid = graph.adjacency()
    bnd = np.zeros(graph.n, dtype=np.bool_)
    occ, time, parent, order, fb, stop, npop = K.grow(
        nbr, eid, np.asarray(w1, float), np.asarray(w2, float), np.asarray(init, np.int8),
        bnd, K.MODE_FILL, -1)
    box = Box((0, 0), (graph.n - 1, 0))
    return GrowthState(box, occ, time, parent, order, (np.inf, np.inf), int(npop))


def run_graph_two_type(field_, graph: Graph, lam: float, type1, type2) -> GrowthState:
    lam = _check_rate(lam)
    init = graph_init(graph, type1, type2)
    m = len(graph.edges)
    w1 = field_.graph_values(m, Channel.CH1)
    w2 = field_.graph_values(m, Channel.CH2) / lam
    return run_graph(graph, w1, w2, init)


def run_graph_batch(graph: Graph, w1, w2, init) -> tuple:
    """Many fill runs; rows of `w1`/`w2` are replicas. Returns (occupancy, completion time)."""
    nbr, eid = graph.adjacency()
    bnd = np.zeros(graph.n, dtype=np.bool_)
    return K.grow_batch(nbr, eid, np.ascontiguousarray(w1, float),
                        np.ascontiguousarray(w2, float), np.asarray(init, np.int8), bnd)
