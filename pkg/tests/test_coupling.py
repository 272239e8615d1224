import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from richardson.coupling import (
    LambdaGrid, coexistence_rows, coexistence_window_scan, coupled_grid_run, coupled_rows,
)
from richardson.engine import FinitePair, StopRule, TwoTypeConfig, run_two_type
from richardson.errors import InvalidConfigError
from richardson.lattice import Box
from richardson.timefield import FieldSpec, derive_seed


@pytest.mark.parametrize("bad", [(), (0.5, 0.5), (0.75, 0.5), (0.0, 1.0), (0.5, 1.5), (-1,)])
def test_grid_validation(bad):
    with pytest.raises(InvalidConfigError):
        LambdaGrid(bad)


def test_single_level_grid_equals_engine_run():
    f = FieldSpec.independent(3)
    box = Box.ball(12)
    co = coupled_grid_run(f, LambdaGrid([1.0]), FinitePair.standard(), box)
    direct = run_two_type(f, TwoTypeConfig(1.0, FinitePair.standard(), box)).state
    assert co.outcomes[0].state.occupancy.tobytes() == direct.occupancy.tobytes()
    assert co.outcomes[0].state.infection_time.tobytes() == direct.infection_time.tobytes()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 64 - 1),
       st.sampled_from([StopRule.FILL_BOX, StopRule.FIRST_BOUNDARY_CONTACT]))
def test_marginal_equality_bit_exact(seed, rule):
    f = FieldSpec.independent(seed)
    box = Box.ball(10)
    grid = LambdaGrid([0.25, 0.5, 0.75, 1.0])
    co = coupled_grid_run(f, grid, FinitePair.standard(), box, rule)
    for lam, o in zip(grid, co.outcomes):
        d = run_two_type(f, TwoTypeConfig(lam, FinitePair.standard(), box, stop_rule=rule))
        assert o.state.occupancy.tobytes() == d.state.occupancy.tobytes()
        assert o.state.infection_time.tobytes() == d.state.infection_time.tobytes()
        assert o.classification is d.classification


def test_violation_diagnostic_shape():
    f = FieldSpec.independent(0)
    co = coupled_grid_run(f, LambdaGrid([0.25, 0.5, 1.0]), FinitePair.standard(), Box.ball(8))
    v = co.monotonicity_violations()
    assert set(v) == {"type1_boundary", "type2_boundary", "type1_set", "type2_set"}
    assert all(0 <= x <= 2 for x in v.values())
    assert len(co.shell_presence()) == 3


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 64 - 1))
def test_nesting_per_seed(seed):
    rows = coexistence_rows(seed, 2, [0.5, 1.0], [4, 8, 12])
    by = {(lam, R): both for lam, R, _, _, both, _, _ in rows}
    for lam in (0.5, 1.0):
        assert by[(lam, 12)] <= by[(lam, 8)] <= by[(lam, 4)]


def test_rows_lambda_one_column_reproducible():
    a = coexistence_rows(17, 2, [1.0], [8, 16])
    b = [r for r in coexistence_rows(17, 2, [0.25, 0.5, 1.0], [8, 16]) if r[0] == 1.0]
    assert a == b


def test_coupled_rows_set_violations_counted():
    rows, viol = coupled_rows(5, 2, [0.25, 0.5, 1.0], [8, 16])
    assert len(rows) == 6
    assert set(viol) == {8, 16}
    assert all(0 <= v <= 2 for v in viol.values())


def test_window_scan():
    res = coexistence_window_scan([0.25, 1.0], 2, (8, 16), 200, seed=0)
    assert res["nesting_violations"] == 0
    est = res["estimates"]
    for R in (8, 16):
        assert est[(1.0, R)].mean >= est[(0.25, R)].mean
    assert est[(1.0, 8)].mean >= est[(1.0, 16)].mean


def test_window_scan_deterministic_and_worker_independent():
    a = coexistence_window_scan(LambdaGrid([0.5, 1.0]), 2, (6,), 12, seed=4)
    b = coexistence_window_scan(LambdaGrid([0.5, 1.0]), 2, (6,), 12, seed=4, workers=2)
    assert a["rows"] == b["rows"]


def test_window_rows_match_single_replica():
    res = coexistence_window_scan([1.0], 2, (8,), 3, seed=7)
    for r in range(3):
        assert res["rows"][r] == coexistence_rows(derive_seed(7, r), 2, [1.0], [8])
