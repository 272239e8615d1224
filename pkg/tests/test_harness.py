import json
import logging

import numpy as np
import pytest

from richardson import cli
from richardson.errors import InvalidConfigError
from richardson.harness import (
    COMMANDS, EXPERIMENT_KEYS, OUTPUT_ENV, RunConfig, load_schema, parse_config_text,
    read_rows, run_experiment,
)
from richardson.stats import two_proportion_test

# P(both types on the shell |x|_inf = 16), d = 2, lam = 1, standard pair,
# 10^4 replicas, master seed 0 (repo baseline)
COEX_R16_BASELINE = 8693


def cfg(experiment, **kw):
    kw.setdefault("seed", 0)
    return RunConfig.build(experiment, {k: v for k, v in kw.items()})


def rows_of(rec):
    return rec.rows_csv()


# --- configuration ---------------------------------------------------------------------

def test_parse_config_text():
    text = "# comment\nseed = 5\n\nlam=0.5   # trailing\nR_list = 8 16\n"
    assert parse_config_text(text) == {"seed": "5", "lam": "0.5", "R_list": "8 16"}
    with pytest.raises(InvalidConfigError, match="line 2"):
        parse_config_text("seed = 1\njunk\n")


def test_unknown_key_named():
    with pytest.raises(InvalidConfigError, match="'radius'"):
        RunConfig.build("shape", {"radius": "3"})


def test_bad_value_names_key():
    with pytest.raises(InvalidConfigError, match="'replicas'"):
        RunConfig.build("shape", {"replicas": "-3"})
    with pytest.raises(InvalidConfigError, match="'d'"):
        RunConfig.build("shape", {"d": "1"})


def test_missing_seed_defaults_with_warning(caplog):
    with caplog.at_level(logging.WARNING, logger="richardson"):
        c = RunConfig.build("ends", {})
    assert c.seed == 0 and c.seed_defaulted
    assert any("seed" in r.message for r in caplog.records)


def test_output_dir_from_env(monkeypatch, tmp_path):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env-out"))
    assert RunConfig.build("ends", {"seed": 1}).output_dir == str(tmp_path / "env-out")
    assert RunConfig.build("ends", {"seed": 1, "output_dir": "x"}).output_dir == "x"


def test_load_file_with_overrides(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("seed = 3\nreplicas = 7\nR = 8\n")
    c = RunConfig.load("shape", p, {"replicas": "9"})
    assert (c.seed, c.replicas, c["R"]) == (3, 9, 8)


def test_every_experiment_has_schema():
    schema = load_schema()
    for name in COMMANDS:
        assert name.replace("-", "_") in schema
    assert set(COMMANDS) == set(EXPERIMENT_KEYS)


# --- persistence and determinism ------------------------------------------------------

def test_files_embed_version_config_seed(tmp_path):
    rec = run_experiment(cfg("ends", replicas=3, R_list="4 8", seed=11,
                             output_dir=str(tmp_path)))
    text = (tmp_path / "ends.csv").read_text().splitlines()
    assert text[0] == "# schema_version: 1"
    conf = json.loads(text[1][len("# config: "):])
    assert conf["seed"] == 11 and conf["R_list"] == [4, 8] and conf["experiment"] == "ends"
    assert text[2] == "# seed: 11"
    assert text[3] == "replica,seed,R,ends"
    doc = json.loads((tmp_path / "ends.json").read_text())
    assert doc["schema_version"] == 1 and doc["seed"] == 11
    assert doc["config"] == conf
    assert "wall_clock_seconds" in doc
    assert len(rec.rows) == 6


def test_same_config_twice_identical_bytes(tmp_path):
    c = cfg("time-constant", replicas=4, n="8", output_dir=str(tmp_path / "a"))
    a, _ = run_experiment(c).write()
    first = a.read_bytes()
    run_experiment(c)
    assert a.read_bytes() == first


def test_rows_independent_of_workers():
    a = run_experiment(cfg("coexistence", replicas=10, R_list="6 8", workers=1), write=False)
    b = run_experiment(cfg("coexistence", replicas=10, R_list="6 8", workers=3), write=False)
    assert rows_of(a) == rows_of(b)


def test_single_replica_summary_equals_row():
    rec = run_experiment(cfg("time-constant", replicas=1, n="8"), write=False)
    est = rec.summary["estimates"]["8"]
    assert est["mean_T_over_n"] == rec.rows[0][4]
    assert est["ci95"] == [rec.rows[0][4], rec.rows[0][4]]


# --- experiments ------------------------------------------------------------------------

def test_time_constant_rows():
    rec = run_experiment(cfg("time-constant", replicas=3, n="8 16", lam=2.0), write=False)
    assert len(rec.rows) == 6
    assert all(r[3] / r[2] == r[4] for r in rec.rows)
    assert "consecutive_difference" in rec.summary


def test_shape_rows_and_summary():
    rec = run_experiment(cfg("shape", replicas=5, R=8), write=False)
    assert len(rec.rows) == 5 * 16
    assert {"orbits", "convexity_defect", "symmetry_defect"} <= set(rec.summary)


def test_gm_rows():
    rec = run_experiment(cfg("gm", replicas=2, n=4, k_max=1, m=8), write=False)
    assert [r[2] for r in rec.rows[:5]] == ["T(0,1n)", "T(0,2n)", "T(0,-m)", "T(n,-m)",
                                           "T(n,0)"]
    assert rec.summary["telescoping_violations"] == 0


def test_coexistence_strangled_pair_rejected():
    c = cfg("coexistence", xi_1="(1,0) (-1,0) (0,1) (0,-1)", xi_2="(0,0)", replicas=2)
    with pytest.raises(InvalidConfigError, match="neither of the sets strangles the other"):
        run_experiment(c, write=False)


def test_coexistence_baseline_R16():
    rec = run_experiment(cfg("coexistence", replicas=10_000, R_list="16"), write=False)
    hits = sum(r[6] for r in rec.rows)
    assert hits == COEX_R16_BASELINE
    est = rec.summary["both_on_shell"]["16"]
    assert est.lo > 0 and rec.summary["table"] == "persistence"


def test_coexistence_type_exchange_symmetry():
    n = 3000
    a = run_experiment(cfg("coexistence", replicas=n, R_list="12", xi_1="(0,0)",
                           xi_2="(1,0)", seed=1), write=False)
    b = run_experiment(cfg("coexistence", replicas=n, R_list="12", xi_1="(1,0)",
                           xi_2="(0,0)", seed=2), write=False)
    ka, kb = sum(r[6] for r in a.rows), sum(r[6] for r in b.rows)
    p = min(two_proportion_test(ka, n, kb, n), two_proportion_test(kb, n, ka, n))
    assert 2 * p > 0.01


def test_decay_table_label():
    rec = run_experiment(cfg("coexistence", replicas=20, R_list="8", lam=0.5), write=False)
    assert rec.summary["table"] == "decay"


def test_config_irrelevance_single_pair_reduces_to_coexistence():
    a = run_experiment(cfg("config-irrelevance", replicas=8, R_list="8",
                           pairs="(0,0) | (1,0)"), write=False)
    b = run_experiment(cfg("coexistence", replicas=8, R_list="8"), write=False)
    assert [r[1:] for r in a.rows] == b.rows


def test_config_irrelevance_infertile_rejected_before_simulation(monkeypatch):
    import richardson.harness as h
    monkeypatch.setattr(h, "map_replicas", lambda *a, **k: pytest.fail("simulated"))
    c = cfg("config-irrelevance", pairs="(0,0) | (1,0) ; (1,0) (-1,0) (0,1) (0,-1) | (0,0)")
    with pytest.raises(InvalidConfigError, match=r"pairs\[1\]"):
        run_experiment(c, write=False)


def test_config_irrelevance_both_positive_R64():
    rec = run_experiment(cfg("config-irrelevance", replicas=500, R_list="64"), write=False)
    for p in rec.summary["pairs"]:
        assert p["both_on_shell"]["64"].lo > 0
    assert rec.summary["jointly_bounded_away_from_zero"]


def test_unbounded_cone_zero_equals_halfline():
    a = run_experiment(cfg("unbounded", replicas=4, W=16, L=8, initial="cone", alpha="0"),
                       write=False)
    b = run_experiment(cfg("unbounded", replicas=4, W=16, L=8, initial="halfline"),
                       write=False)
    assert [r[2:] for r in a.rows] == [r[2:] for r in b.rows]


def test_unbounded_negative_alpha_invalid():
    with pytest.raises(InvalidConfigError, match="alpha"):
        cfg("unbounded", initial="cone", alpha="0.5 -1")


def test_unbounded_directions():
    h = run_experiment(cfg("unbounded", replicas=300, W=32, L=24), write=False)
    surv = [c.mean for c in h.summary["curves"][0]["survival"]]
    assert surv[24] < surv[4]
    ln = run_experiment(cfg("unbounded", replicas=300, W=32, L=24, initial="halfline"),
                        write=False)
    assert ln.summary["curves"][0]["survival_at_L"].lo > 0


def test_halfspace_like_hyperplane():
    n = 400
    h = run_experiment(cfg("unbounded", replicas=n, W=32, L=16, seed=1), write=False)
    s = run_experiment(cfg("unbounded", replicas=n, W=32, L=16, initial="halfspace", seed=2),
                       write=False)
    kh = round(h.summary["curves"][0]["survival"][8].mean * n)
    ks = round(s.summary["curves"][0]["survival"][8].mean * n)
    p = min(two_proportion_test(kh, n, ks, n), two_proportion_test(ks, n, kh, n))
    assert 2 * p > 0.01


def test_coupled_scan_lambda_one_column_equals_coexistence():
    a = run_experiment(cfg("coupled-scan", replicas=6, R_list="8 12", grid="0.5 1.0"),
                       write=False)
    b = run_experiment(cfg("coexistence", replicas=6, R_list="8 12"), write=False)
    assert [r for r in a.rows if r[2] == 1.0] == b.rows
    c = run_experiment(cfg("coupled-scan", replicas=6, R_list="8 12", grid="1.0"),
                       write=False)
    assert rows_of(c) == rows_of(b)


def test_coupled_scan_grid_validation():
    for g in ("0.5 1.5", "0 1", "0.5 0.25"):
        with pytest.raises(InvalidConfigError, match="grid"):
            cfg("coupled-scan", grid=g)


@pytest.mark.slow
def test_coupled_scan_full_diagnostic():
    grid = " ".join(str(x) for x in np.linspace(0.125, 1.0, 8))
    rec = run_experiment(cfg("coupled-scan", replicas=1000, R_list="32 64", grid=grid),
                         write=False)
    rates = rec.summary["monotonicity_violation_rates"]
    assert set(rates) == {"32", "64"}
    for r in rates.values():
        assert all(0 <= v <= 1 for v in r.values())
    assert rec.summary["nesting_violations"] == 0


# --- oracle check and CLI ---------------------------------------------------------------

def test_oracle_check_path(tmp_path):
    for lam, p in ((1.0, 0.5), (3.0, 0.75)):
        rec = run_experiment(cfg("oracle-check", lam=lam, replicas=50_000), write=False)
        assert rec.exit_code == 0
        assert rec.rows[1][1] == pytest.approx(p, abs=1e-15)


def test_oracle_check_grid_passes():
    rec = run_experiment(cfg("oracle-check", graph="grid3x3", replicas=100_000), write=False)
    assert rec.exit_code == 0 and rec.summary["passed"]


def test_oracle_check_file_default_sets(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("4 3\n0 1\n1 2\n2 3\n")
    rec = run_experiment(cfg("oracle-check", graph=str(p), replicas=1000), write=False)
    assert rec.summary["type1"] == [0] and rec.summary["type2"] == [3]


def _cli(args, tmp_path):
    return cli.main(list(args) + ["--output_dir", str(tmp_path)])


def test_cli_exit_codes(tmp_path, capsys):
    assert _cli(["ends", "--replicas", "2", "--R_list", "4", "--seed", "1"], tmp_path) == 0
    assert (tmp_path / "ends.csv").exists()
    assert _cli(["ends", "--bogus", "1"], tmp_path) == 1
    assert _cli(["shape", "--d", "1"], tmp_path) == 1
    big = tmp_path / "big.txt"
    big.write_text("13 12\n" + "".join(f"{i} {i + 1}\n" for i in range(12)))
    assert _cli(["oracle-check", "--graph", str(big)], tmp_path) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("3 2\n0 1\n1 x\n")
    assert _cli(["oracle-check", "--graph", str(bad)], tmp_path) == 1
    assert _cli(["oracle-check", "--replicas", "1000", "--threshold", "1e-9"], tmp_path) == 3
    with pytest.raises(SystemExit) as exc:
        cli.main(["no-such-command"])
    assert exc.value.code == 1


def test_cli_unknown_key_message(tmp_path, caplog):
    with caplog.at_level(logging.ERROR, logger="richardson"):
        assert _cli(["gm", "--radius", "3"], tmp_path) == 1
    assert any("'radius'" in r.message for r in caplog.records)


def test_cli_parse_error_has_line(tmp_path, caplog):
    bad = tmp_path / "bad.txt"
    bad.write_text("3 2\n0 1\n1 x\n")
    with caplog.at_level(logging.ERROR, logger="richardson"):
        _cli(["oracle-check", "--graph", str(bad)], tmp_path)
    assert any("line 3" in r.message for r in caplog.records)


def test_cli_config_file(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("seed = 2\nreplicas = 3\nn = 4\nk_max = 1\nm = 8\ntag = demo\n")
    assert cli.main(["gm", "--config", str(conf), "--output_dir", str(tmp_path)]) == 0
    assert "replica,seed,quantity,value" in read_rows(tmp_path / "gm-demo.csv")
