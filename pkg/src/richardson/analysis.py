"""Estimators for time constants, shapes, geodesic ends and two-type diagnostics.

Every estimator is a deterministic function of its parameters and a master
seed: replica ``r`` uses the field seeded by ``derive_seed(seed, r)``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from .engine import (
    Classification, FinitePair, Hyperplane, StopRule, TwoTypeConfig,
    geodesic_tree, passage_times_from, run_one_type, run_two_type,
)
from .errors import InvalidInputError
from .lattice import Box, check_dimension, origin, unit
from .parallel import map_replicas
from .stats import MeanCI, equal_means_test, mean_ci, wilson_ci
from .timefield import FieldSpec, derive_seed

MIN_CONDITIONING_EVENTS = 50


# --- time constant -------------------------------------------------------------

@dataclass
class TimeConstantEstimate:
    n: int
    replicas: int
    lam: float
    mean_T_over_n: float
    ci95: tuple
    se: float
    values: np.ndarray = field(repr=False)
    warnings: list = field(default_factory=list)

    @property
    def half_width(self) -> float:
        return (self.ci95[1] - self.ci95[0]) / 2


def _axis_box(d, n, margin):
    return Box.ball(n + margin, d)


def axis_passage_time(seed: int, d: int, lam: float, n: int, margin: int) -> float:
    """T(0, n e_1) on the field seeded by `seed`, restricted to the ball of radius n + margin."""
    box = _axis_box(d, n, margin)
    return passage_times_from(FieldSpec.shared(seed, d), lam, [(origin(d), [unit(d, 0, n)])],
                              box)[(origin(d), unit(d, 0, n))]


def _tc_replica(r, seed, d, lam, n, margin):
    return axis_passage_time(derive_seed(seed, r), d, lam, n, margin)


def estimate_time_constant(d: int = 2, lam: float = 1.0, n: int = 64, replicas: int = 200,
                           seed: int = 0, margin: int | None = None,
                           workers: int = 1) -> TimeConstantEstimate:
    """Mean of T(0, n e_1) / n over replicas, with a normal 95% interval."""
    check_dimension(d)
    if n < 1:
        raise InvalidInputError(f"n must be positive, got {n}")
    notes = []
    if margin is None:
        margin = max(1, n // 2)
    elif margin < n // 2:
        notes.append(f"margin {margin} < n/2 = {n // 2}: box restriction may bias T upward")
        warnings.warn(notes[-1])
    t = np.array(map_replicas(_tc_replica, replicas, (seed, d, lam, n, margin), workers))
    ci = mean_ci(t / n)
    return TimeConstantEstimate(n, replicas, lam, ci.mean, (ci.lo, ci.hi), ci.se, t / n, notes)


# --- passage-time increments -------------------------------------------------------

@dataclass
class IncrementTable:
    n: int
    m: int
    k_max: int
    increments: list          # MeanCI of T(0,(k+1)n) - T(0,kn), k = 0..k_max
    cumulative: list          # MeanCI of T(0,kn), k = 1..k_max+1
    back_difference: MeanCI   # T(n,-m) - T(0,-m)
    forward_time: MeanCI      # T(n,0)
    per_replica: np.ndarray = field(repr=False)
    telescoping_violations: int = 0
    triangle_violations: int = 0


def gm_box(d, n, k_max, m, margin=None) -> Box:
    far = (k_max + 1) * n
    if margin is None:
        margin = max(n, m // 2)
    return Box((-m - margin,) + (-margin,) * (d - 1), (far + margin,) + (margin,) * (d - 1))


def gm_replica_times(seed, d, n, k_max, m, margin=None) -> np.ndarray:
    """[T(0,n), ..., T(0,(k_max+1)n), T(0,-m), T(n,-m), T(n,0)] on one realization."""
    box = gm_box(d, n, k_max, m, margin)
    f = FieldSpec.shared(seed, d)
    o, e_n, back = origin(d), unit(d, 0, n), unit(d, 0, -m)
    fwd = [unit(d, 0, k * n) for k in range(1, k_max + 2)]
    t = passage_times_from(f, 1.0, [(o, fwd + [back]), (e_n, [back, o])], box)
    return np.array([t[(o, x)] for x in fwd] + [t[(o, back)], t[(e_n, back)], t[(e_n, o)]])


def _gm_replica(r, seed, d, n, k_max, m, margin):
    return gm_replica_times(derive_seed(seed, r), d, n, k_max, m, margin)


def telescoping_ok(row, k_max) -> bool:
    """Partial sums of the increments reproduce T(0,kn) exactly, for every k."""
    t = np.concatenate([[0.0], row[:k_max + 1]])
    inc = np.diff(t)
    return bool(np.all(np.cumsum(inc) == t[1:]))


def gm_increments(d: int = 2, n: int = 16, k_max: int = 4, m: int = 64, replicas: int = 100,
                  seed: int = 0, margin: int | None = None, workers: int = 1) -> IncrementTable:
    """Increments E[T(0,(k+1)n) - T(0,kn)] and E[T(n,-m) - T(0,-m)] on shared realizations."""
    check_dimension(d)
    rows = np.array(map_replicas(_gm_replica, replicas, (seed, d, n, k_max, m, margin), workers))
    t = np.concatenate([np.zeros((replicas, 1)), rows[:, :k_max + 1]], axis=1)
    inc = np.diff(t, axis=1)
    back = rows[:, k_max + 2] - rows[:, k_max + 1]
    fwd = rows[:, k_max + 3]
    tele = sum(not telescoping_ok(r, k_max) for r in rows)
    tri = int((back > fwd).sum())
    return IncrementTable(
        n, m, k_max,
        [mean_ci(inc[:, k]) for k in range(k_max + 1)],
        [mean_ci(t[:, k]) for k in range(1, k_max + 2)],
        mean_ci(back), mean_ci(fwd), rows, int(tele), tri)


# --- asymptotic shape -------------------------------------------------------------

def direction_grid(d: int = 2, n_angles: int = 16) -> np.ndarray:
    """Unit directions including all axis and diagonal directions.

    d = 2: `n_angles` equally spaced angles (a multiple of 8 keeps the grid
    closed under the lattice symmetries). d >= 3: all nonzero vectors of
    {-1, 0, 1}^d, normalized.
    """
    check_dimension(d)
    if d == 2:
        if n_angles % 8:
            raise InvalidInputError("n_angles must be a multiple of 8")
        a = 2 * np.pi * np.arange(n_angles) / n_angles
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    v = np.array([p for p in itertools.product((-1, 0, 1), repeat=d) if any(p)], dtype=float)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def direction_targets(directions, R: int) -> np.ndarray:
    """Lattice point nearest R*u for each direction (rounding is symmetric under sign flips)."""
    t = np.round(np.asarray(directions) * R).astype(np.int64)
    return t


def symmetry_orbits(targets) -> list:
    """Group target indices by their orbit under coordinate permutations and reflections."""
    orbits: dict = {}
    for i, t in enumerate(targets):
        key = tuple(sorted(abs(int(c)) for c in t))
        orbits.setdefault(key, []).append(i)
    return [orbits[k] for k in sorted(orbits)]


@dataclass
class ShapeEstimate:
    R: int
    lam: float
    directions: np.ndarray
    targets: np.ndarray
    speed: list                     # MeanCI per direction
    orbits: list                    # per orbit: dict(members, defect, p_value, consistent)
    symmetry_defect: float
    convexity_defect: float
    speeds: np.ndarray = field(repr=False)   # replicas x directions
    times: np.ndarray = field(repr=False)    # replicas x directions, T(0, target)

    @property
    def speed_means(self) -> np.ndarray:
        return np.array([s.mean for s in self.speed])

    def axis_vs_diagonal(self) -> MeanCI | None:
        """Mean axis speed minus mean diagonal speed (d = 2), per-replica paired."""
        t = np.abs(self.targets)
        axis = np.flatnonzero(np.sum(t != 0, axis=1) == 1)
        diag = np.flatnonzero((t[:, 0] == t[:, 1]) & (t[:, 0] != 0)) if self.targets.shape[1] == 2 \
            else np.array([], dtype=int)
        if len(axis) == 0 or len(diag) == 0:
            return None
        return mean_ci(self.speeds[:, axis].mean(axis=1) - self.speeds[:, diag].mean(axis=1))


def target_times(seed, d, lam, targets, box) -> np.ndarray:
    f = FieldSpec.shared(seed, d)
    o = origin(d)
    tt = [tuple(int(c) for c in t) for t in targets]
    res = passage_times_from(f, lam, [(o, tt)], box)
    return np.array([res[(o, t)] for t in tt])


def _shape_replica(r, seed, d, lam, targets, box):
    return target_times(derive_seed(seed, r), d, lam, targets, box)


def convexity_defect(points) -> float:
    """Largest relative shortfall of a radial point below the convex hull boundary."""
    pts = np.asarray(points, dtype=float)
    hull = ConvexHull(pts)
    normals, offsets = hull.equations[:, :-1], hull.equations[:, -1]
    worst = 0.0
    for p in pts:
        r = np.linalg.norm(p)
        u = p / r
        dots = normals @ u
        pos = dots > 1e-12
        r_hull = np.min(-offsets[pos] / dots[pos])
        worst = max(worst, 1.0 - r / r_hull)
    return float(worst)


def estimate_shape(d: int = 2, lam: float = 1.0, R: int = 64, replicas: int = 100,
                   directions=None, seed: int = 0, margin: int | None = None,
                   workers: int = 1, alpha: float = 0.05) -> ShapeEstimate:
    """Radial speeds |x_u| / T(0, x_u) per direction, with symmetry and convexity checks."""
    check_dimension(d)
    directions = direction_grid(d) if directions is None else np.asarray(directions, float)
    targets = direction_targets(directions, R)
    margin = max(1, R // 2) if margin is None else margin
    box = Box.ball(R + margin, d)
    times = np.array(map_replicas(_shape_replica, replicas, (seed, d, lam, targets, box), workers))
    speeds = np.linalg.norm(targets, axis=1)[None, :] / times
    speed = [mean_ci(speeds[:, j]) for j in range(len(targets))]
    means = np.array([s.mean for s in speed])
    orbits = []
    for members in symmetry_orbits(targets):
        m = means[members]
        p = equal_means_test(speeds[:, members]) if len(members) > 1 else 1.0
        orbits.append({"members": members, "defect": float((m.max() - m.min()) / m.mean()),
                       "p_value": p, "consistent": bool(p >= alpha)})
    u = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    cdef = convexity_defect(means[:, None] * u) if len(u) > d else 0.0
    return ShapeEstimate(R, lam, directions, targets, speed, orbits,
                         max(o["defect"] for o in orbits), cdef, speeds, times)


# --- ends of the geodesic tree ------------------------------------------------------

def ends_counts(seed, d, R_list, channel=None) -> list:
    """Number of root branches of the geodesic tree touching each shell |x|_inf = R."""
    rmax = max(R_list)
    box = Box.ball(rmax, d)
    state = run_one_type(FieldSpec.shared(seed, d), 1.0, {origin(d)}, box)
    lab = geodesic_tree(state).branch_labels()
    shell = box.shell_index()
    return [len(np.unique(lab[(shell == R) & (lab >= 0)])) for R in R_list]


def _ends_replica(r, seed, d, R_list):
    return ends_counts(derive_seed(seed, r), d, R_list)


def ends_proxy_scan(d: int = 2, R_list=(32, 64, 128), replicas: int = 100, seed: int = 0,
                    workers: int = 1) -> dict:
    """Per R: array of branch counts over replicas and the fraction with at least two."""
    check_dimension(d)
    R_list = list(R_list)
    counts = np.array(map_replicas(_ends_replica, replicas, (seed, d, R_list), workers))
    return {R: {"counts": counts[:, i],
                "distribution": np.bincount(counts[:, i], minlength=2 * d + 1)[:2 * d + 1],
                "at_least_two": wilson_ci(int((counts[:, i] >= 2).sum()), replicas)}
            for i, R in enumerate(R_list)}


# --- two-type diagnostics --------------------------------------------------------------

@dataclass
class WeakSpeedReport:
    lam: float
    R: int
    replicas: int
    events: int
    v1: float
    ratio: MeanCI | None
    low_confidence: bool
    type2_ratio: MeanCI | None = None
    classifications: dict = field(default_factory=dict)


def _weak_replica(r, seed, d, lam, R):
    box = Box.ball(R, d)
    cfg = TwoTypeConfig(lam, FinitePair.standard(d), box,
                        stop_rule=StopRule.FIRST_BOUNDARY_CONTACT)
    out = run_two_type(FieldSpec.independent(derive_seed(seed, r), d), cfg)
    return out.classification.value, out.boundary_hit_time, out.first_boundary_time[1]


def axis_speed(d: int, R: int, replicas: int, seed: int, workers: int = 1) -> MeanCI:
    """Radial speed of a rate-1 one-type process along the axes, at distance R."""
    axes = np.concatenate([np.eye(d), -np.eye(d)])
    est = estimate_shape(d, 1.0, R, replicas, axes, seed=seed, workers=workers)
    return mean_ci(est.speeds.mean(axis=1))


def weak_type_speed_diagnostic(d: int = 2, lam: float = 0.5, R: int = 128,
                               replicas: int = 1000, seed: int = 0,
                               speed_replicas: int = 200, v1: float | None = None,
                               workers: int = 1) -> WeakSpeedReport:
    """Boundary hit time * lam * v1 / R conditional on both types reaching the boundary."""
    check_dimension(d)
    if not 0 < lam <= 1:
        raise InvalidInputError(f"weak type needs 0 < lam <= 1, got {lam}")
    if v1 is None:
        v1 = axis_speed(d, R, speed_replicas, derive_seed(seed, 1 << 40), workers).mean
    res = map_replicas(_weak_replica, replicas, (seed, d, lam, R), workers)
    cls = {}
    for c, _, _ in res:
        cls[c] = cls.get(c, 0) + 1
    both = [(h, h2) for c, h, h2 in res if c == Classification.BOTH_REACHED_BOUNDARY.value]
    events = len(both)
    ratio = mean_ci([h * lam * v1 / R for h, _ in both]) if events else None
    ratio2 = mean_ci([h2 * lam * v1 / R for _, h2 in both]) if events else None
    return WeakSpeedReport(lam, R, replicas, events, float(v1), ratio,
                           events < MIN_CONDITIONING_EVENTS, ratio2, cls)


def _strong_replica(r, seed, d, lam, R_list):
    rmax = max(R_list)
    box = Box.ball(rmax, d)
    out = run_two_type(FieldSpec.independent(derive_seed(seed, r), d),
                       TwoTypeConfig(lam, FinitePair.standard(d), box))
    occ = out.state.occupancy
    shell = box.shell_index()
    p1, p2 = out.state.shell_presence()
    res = []
    for R in R_list:
        inside = shell <= R
        strong = 2 if lam >= 1 else 1
        frac = float((occ[inside] == strong).sum() / (occ[inside] != 0).sum())
        res.append((bool(p1[R] and p2[R]), frac))
    return res


def strong_fraction_diagnostic(d: int = 2, lam: float = 4.0, R_list=(16, 32, 64),
                               replicas: int = 1000, seed: int = 0, workers: int = 1) -> dict:
    """Mean strong-type share of B_R, conditional on both types on the shell |x|_inf = R."""
    check_dimension(d)
    R_list = list(R_list)
    res = map_replicas(_strong_replica, replicas, (seed, d, lam, R_list), workers)
    table = {}
    for i, R in enumerate(R_list):
        fr = [row[i][1] for row in res if row[i][0]]
        table[R] = {"events": len(fr), "fraction": mean_ci(fr) if fr else None,
                    "low_confidence": len(fr) < MIN_CONDITIONING_EVENTS}
    return table


@dataclass
class LevelProfile:
    lam: float
    W: int
    L: int
    replicas: int
    counts: np.ndarray = field(repr=False)    # replicas x (L + 1), type-2 sites at x_1 = l

    @property
    def mean(self) -> list:
        return [mean_ci(self.counts[:, l]) for l in range(self.L + 1)]

    @property
    def survival(self) -> list:
        alive = self.counts > 0
        return [wilson_ci(int(alive[:, l].sum()), self.replicas) for l in range(self.L + 1)]


def level_counts_run(seed, d, lam, initial, W, L) -> np.ndarray:
    box = Box.slab(L, W, d)
    out = run_two_type(FieldSpec.independent(seed, d), TwoTypeConfig(lam, initial, box))
    return out.level_type2[L:]   # levels x_1 = 0..L


def _level_replica(r, seed, d, lam, initial, W, L):
    return level_counts_run(derive_seed(seed, r), d, lam, initial, W, L)


def level_occupancy(d: int = 2, lam: float = 1.0, W: int = 64, L: int = 64,
                    replicas: int = 200, seed: int = 0, initial=None,
                    workers: int = 1) -> LevelProfile:
    """Type-2 site counts per level x_1 = l in a slab (default start: hyperplane)."""
    check_dimension(d)
    initial = Hyperplane() if initial is None else initial
    counts = np.array(map_replicas(_level_replica, replicas, (seed, d, lam, initial, W, L),
                                   workers))
    return LevelProfile(lam, W, L, replicas, counts)
