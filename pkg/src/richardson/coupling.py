"""Coupled two-type runs across a grid of type-2 rates.

All levels of the grid read the same base samples; level ``lam`` uses the
type-1 values unchanged and the type-2 values divided by ``lam``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import FinitePair, Outcome, StopRule, TwoTypeConfig, run_two_type
from .errors import InvalidConfigError
from .lattice import Box, check_dimension
from .parallel import map_replicas
from .stats import wilson_ci
from .timefield import Channel, FieldSpec, derive_seed


@dataclass(frozen=True)
class LambdaGrid:
    values: tuple

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        object.__setattr__(self, "values", v)
        if not v:
            raise InvalidConfigError("empty lambda grid")
        if any(not 0 < x <= 1 for x in v):
            raise InvalidConfigError(f"grid values must lie in (0, 1], got {v}")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise InvalidConfigError(f"grid must be strictly increasing, got {v}")

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


@dataclass
class CoupledOutcome:
    grid: LambdaGrid
    outcomes: list = field(repr=False)
    ever1: list = field(repr=False)    # boolean masks over the box
    ever2: list = field(repr=False)

    def shell_presence(self) -> list:
        return [o.state.shell_presence() for o in self.outcomes]

    def monotonicity_violations(self) -> dict:
        """Adjacent grid pairs where boundary presence or the type-1 set moves the wrong way."""
        b1 = [o.boundary_counts[0] > 0 for o in self.outcomes]
        b2 = [o.boundary_counts[1] > 0 for o in self.outcomes]
        v = {"type1_boundary": 0, "type2_boundary": 0, "type1_set": 0, "type2_set": 0}
        for i in range(len(self.grid) - 1):
            v["type1_boundary"] += int(b1[i + 1] and not b1[i])
            v["type2_boundary"] += int(b2[i] and not b2[i + 1])
            v["type1_set"] += int(np.any(self.ever1[i + 1] & ~self.ever1[i]))
            v["type2_set"] += int(np.any(self.ever2[i] & ~self.ever2[i + 1]))
        return v


def coupled_grid_run(field_, grid: LambdaGrid, initial, box: Box,
                     stop_rule=StopRule.FILL_BOX) -> CoupledOutcome:
    """One engine run per grid level on shared base samples."""
    base1 = field_.box_values(box, Channel.CH1)
    base2 = field_.box_values(box, Channel.CH2)
    outs, e1, e2 = [], [], []
    for lam in grid:
        cfg = TwoTypeConfig(lam, initial, box, stop_rule=stop_rule)
        w2 = base2 if lam == 1.0 else base2 / lam
        o = run_two_type(field_, cfg, weights=(base1, w2))
        outs.append(o)
        e1.append(o.state.occupancy == 1)
        e2.append(o.state.occupancy == 2)
    return CoupledOutcome(grid, outs, e1, e2)


def shell_rows(outcome: Outcome, R_list) -> list:
    """Per R: (type 1 on shell R, type 2 on shell R, both, n1 and n2 inside B_R)."""
    st = outcome.state
    p1, p2 = st.shell_presence()
    shell = st.box.shell_index()
    occ = st.occupancy
    rows = []
    for R in R_list:
        inside = occ[shell <= R]
        rows.append((bool(p1[R]), bool(p2[R]), bool(p1[R] and p2[R]),
                     int((inside == 1).sum()), int((inside == 2).sum())))
    return rows


def _level_outcomes(seed, d, lams, box, initial):
    f = FieldSpec.independent(seed, d)
    base1 = f.box_values(box, Channel.CH1)
    base2 = f.box_values(box, Channel.CH2)
    for lam in lams:
        w2 = base2 if lam == 1.0 else base2 / lam
        yield float(lam), run_two_type(f, TwoTypeConfig(float(lam), initial, box),
                                       weights=(base1, w2))


def coexistence_rows(seed, d, lams, R_list, initial=None) -> list:
    """Rows (lam, R, t1, t2, both, n1, n2) for one replica, coupled across `lams`."""
    return coupled_rows(seed, d, lams, R_list, initial)[0]


def coupled_rows(seed, d, lams, R_list, initial=None) -> tuple:
    """Like `coexistence_rows`, plus per-R setwise monotonicity violations.

    The second item maps R to the number of adjacent grid pairs where the
    type-1 set inside B_R grows with lam or the type-2 set shrinks.
    """
    initial = FinitePair.standard(d) if initial is None else initial
    box = Box.ball(max(R_list), d)
    shell = box.shell_index()
    rows, viol = [], {int(R): 0 for R in R_list}
    prev = None
    for lam, o in _level_outcomes(seed, d, lams, box, initial):
        occ = o.state.occupancy
        for R, r in zip(R_list, shell_rows(o, R_list)):
            rows.append((lam, int(R)) + r)
            if prev is not None:
                inside = shell <= R
                grew1 = np.any((occ == 1) & (prev != 1) & inside)
                lost2 = np.any((prev == 2) & (occ != 2) & inside)
                viol[int(R)] += int(grew1 or lost2)
        prev = occ
    return rows, viol


def _scan_replica(r, seed, d, lams, R_list, initial):
    return coexistence_rows(derive_seed(seed, r), d, lams, R_list, initial)


def coexistence_window_scan(grid, d: int = 2, R_list=(16, 32, 64), replicas: int = 1000,
                            seed: int = 0, initial=None, workers: int = 1) -> dict:
    """P(both types on the shell |x|_inf = R) per (lam, R), with Wilson intervals.

    Shells are snapshots of a single fill of the largest box, so the
    events are nested in R on every realization.
    """
    check_dimension(d)
    lams = list(grid.values if isinstance(grid, LambdaGrid) else grid)
    R_list = sorted(R_list)
    per = map_replicas(_scan_replica, replicas, (seed, d, lams, R_list, initial), workers)
    hits = {(lam, R): 0 for lam in lams for R in R_list}
    nest_violations = 0
    for rows in per:
        both = {}
        for lam, R, t1, t2, b, n1, n2 in rows:
            hits[(lam, R)] += int(b)
            both[(lam, R)] = b
        for lam in lams:
            for Ra, Rb in zip(R_list, R_list[1:]):
                nest_violations += int(both[(lam, Rb)] and not both[(lam, Ra)])
    return {"estimates": {k: wilson_ci(v, replicas) for k, v in hits.items()},
            "nesting_violations": nest_violations, "rows": per}
