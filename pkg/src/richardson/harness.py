"""Experiment recipes: configuration, seeding, replica fan-out and persistence.

A run is described by a flat ``key = value`` file plus command-line
overrides. Every experiment writes two files into the output directory:

``<name>.csv``
    ``#`` header lines with the schema version, the full configuration and
    the master seed, then one row per replica (or per replica and
    parameter). Rows depend only on the configuration, never on the worker
    count or wall-clock time.
``<name>.json``
    The same echo plus summary statistics with 95% intervals and the
    wall-clock time.

Replica ``r`` always uses ``derive_seed(seed, r)``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import analysis, coupling, oracle
from .engine import Cone, FinitePair, HalfLine, HalfSpace, Hyperplane
from .errors import InvalidConfigError, InvalidInputError
from .lattice import format_sites, parse_sites
from .parallel import map_replicas
from .stats import mean_ci, two_proportion_test, wilson_ci
from .timefield import derive_seed

log = logging.getLogger("richardson")

SCHEMA_VERSION = 1
OUTPUT_ENV = "RICHARDSON_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "richardson-output"
DEFAULT_SEED = 0


# --- value parsers -------------------------------------------------------------------

def _int(text) -> int:
    return int(str(text).strip())


def _nonneg_int(text) -> int:
    v = _int(text)
    if v < 0:
        raise ValueError("must be >= 0")
    return v


def _pos_int(text) -> int:
    v = _int(text)
    if v < 1:
        raise ValueError("must be >= 1")
    return v


def _seed(text) -> int:
    v = _int(text)
    if not 0 <= v < 2 ** 64:
        raise ValueError("must lie in [0, 2^64)")
    return v


def _dim(text) -> int:
    v = _int(text)
    if v < 2:
        raise ValueError("dimension must be >= 2")
    return v


def _float(text) -> float:
    return float(str(text).strip())


def _rate(text) -> float:
    v = _float(text)
    if not (v > 0 and math.isfinite(v)):
        raise ValueError("must be a positive finite number")
    return v


def _split(text) -> list:
    if isinstance(text, (list, tuple)):
        return list(text)
    return str(text).replace(",", " ").split()


def _int_list(text) -> list:
    v = [_pos_int(x) for x in _split(text)]
    if not v:
        raise ValueError("empty list")
    return v


def _float_list(text) -> list:
    v = [_float(x) for x in _split(text)]
    if not v:
        raise ValueError("empty list")
    return v


def _opt_int(text):
    if text is None or str(text).strip().lower() in ("", "auto", "none"):
        return None
    return _nonneg_int(text)


def _text(text) -> str:
    return str(text).strip()


def _sites(text) -> str:
    if text is None:
        return None
    if str(text).strip().lower() in ("", "auto", "default"):
        return None
    return format_sites(parse_sites(str(text)))


def _pairs(text) -> str:
    out = []
    for chunk in str(text).split(";"):
        parts = chunk.split("|")
        if len(parts) != 2:
            raise ValueError(f"expected 'xi_1 | xi_2', got {chunk.strip()!r}")
        out.append(" | ".join(format_sites(parse_sites(p)) for p in parts))
    return " ; ".join(out)


_INITIALS = ("hyperplane", "halfline", "cone", "halfspace")


def _initial_name(text) -> str:
    v = str(text).strip().lower().replace("_", "").replace("-", "")
    if v not in _INITIALS:
        raise ValueError(f"expected one of {', '.join(_INITIALS)}")
    return v


def _alphas(text) -> list:
    v = _float_list(text)
    if any(not a >= 0 for a in v):
        raise ValueError("cone slope must be >= 0")
    return v


def _grid(text) -> list:
    v = _float_list(text)
    coupling.LambdaGrid(v)      # raises InvalidConfigError on bad grids
    return v


def _vertices(text):
    if text is None or str(text).strip().lower() in ("", "auto", "default"):
        return None
    return [_nonneg_int(x) for x in _split(text)]


# --- configuration ---------------------------------------------------------------------

COMMON_KEYS = {
    "seed": (_seed, None),
    "workers": (_pos_int, 1),
    "output_dir": (_text, None),
    "tag": (_text, ""),
    "d": (_dim, 2),
}

EXPERIMENT_KEYS = {
    "time-constant": {"replicas": (_pos_int, 400), "lam": (_rate, 1.0),
                      "n": (_int_list, [16, 32, 64]), "margin": (_opt_int, None)},
    "shape": {"replicas": (_pos_int, 100), "lam": (_rate, 1.0), "R": (_pos_int, 64),
              "n_angles": (_pos_int, 16), "margin": (_opt_int, None),
              "alpha": (_float, 0.05)},
    "ends": {"replicas": (_pos_int, 100), "R_list": (_int_list, [32, 64, 128])},
    "gm": {"replicas": (_pos_int, 100), "n": (_pos_int, 16), "k_max": (_nonneg_int, 4),
           "m": (_pos_int, 64), "margin": (_opt_int, None)},
    "coexistence": {"replicas": (_pos_int, 1000), "lam": (_rate, 1.0),
                    "R_list": (_int_list, [16, 32, 64]),
                    "xi_1": (_sites, None), "xi_2": (_sites, None)},
    "config-irrelevance": {"replicas": (_pos_int, 1000), "lam": (_rate, 1.0),
                           "R_list": (_int_list, [16, 32, 64]),
                           "pairs": (_pairs, "(0,0) | (1,0) ; (0,0) | (3,0)")},
    "unbounded": {"replicas": (_pos_int, 200), "lam": (_rate, 1.0),
                  "initial": (_initial_name, "hyperplane"), "alpha": (_alphas, [0.0]),
                  "W": (_pos_int, 64), "L": (_pos_int, 64)},
    "coupled-scan": {"replicas": (_pos_int, 1000), "grid": (_grid, [0.25, 0.5, 0.75, 1.0]),
                     "R_list": (_int_list, [32, 64]),
                     "xi_1": (_sites, None), "xi_2": (_sites, None)},
    "oracle-check": {"replicas": (_pos_int, 100_000), "lam": (_rate, 1.0),
                     "graph": (_text, "path3"), "type1": (_vertices, None),
                     "type2": (_vertices, None), "threshold": (_rate, 3.0)},
}


def allowed_keys(experiment: str) -> dict:
    if experiment not in EXPERIMENT_KEYS:
        raise InvalidConfigError(f"unknown experiment {experiment!r}")
    return {**COMMON_KEYS, **EXPERIMENT_KEYS[experiment]}


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise InvalidConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated experiment parameters.

    `params` holds every experiment-specific key in canonical form (ints,
    floats, lists, normalized site strings); `echo()` is what goes into
    output files.
    """

    experiment: str
    d: int
    replicas: int
    seed: int
    workers: int
    output_dir: str
    tag: str = ""
    params: dict = field(default_factory=dict)
    seed_defaulted: bool = False

    @classmethod
    def build(cls, experiment: str, values: dict | None = None) -> "RunConfig":
        """Validate raw values (strings or Python values) against the experiment's keys."""
        keys = allowed_keys(experiment)
        values = dict(values or {})
        for k in values:
            if k not in keys:
                raise InvalidConfigError(f"unknown key {k!r} for {experiment}")
        parsed = {}
        for k, (parse, default) in keys.items():
            if k in values and values[k] is not None:
                try:
                    parsed[k] = parse(values[k])
                except (ValueError, InvalidInputError, InvalidConfigError) as exc:
                    raise InvalidConfigError(f"invalid value for key {k!r}: {exc}") from None
            else:
                parsed[k] = default
        defaulted = parsed["seed"] is None
        if defaulted:
            log.warning("no seed given; using the default seed %d", DEFAULT_SEED)
            parsed["seed"] = DEFAULT_SEED
        if parsed["output_dir"] is None:
            parsed["output_dir"] = os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT_DIR
        common = {k: parsed.pop(k) for k in ("d", "replicas", "seed", "workers",
                                             "output_dir", "tag")}
        return cls(experiment, params=parsed, seed_defaulted=defaulted, **common)

    @classmethod
    def load(cls, experiment: str, path=None, overrides: dict | None = None) -> "RunConfig":
        values = {}
        if path is not None:
            try:
                text = Path(path).read_text()
            except OSError as exc:
                raise InvalidConfigError(f"cannot read config file {path}: {exc}") from None
            values.update(parse_config_text(text))
        values.update(overrides or {})
        return cls.build(experiment, values)

    def __getitem__(self, key):
        return self.params[key]

    def echo(self) -> dict:
        out = {"experiment": self.experiment, "d": self.d, "replicas": self.replicas,
               "seed": self.seed, "workers": self.workers, "output_dir": self.output_dir,
               "tag": self.tag}
        out.update(self.params)
        return dict(sorted(out.items()))

    @property
    def stem(self) -> str:
        name = self.experiment.replace("-", "_")
        return f"{name}-{self.tag}" if self.tag else name


# --- results ---------------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if hasattr(v, "as_dict"):
        return _jsonable(v.as_dict())
    return v


def load_schema() -> dict:
    """The shipped CSV column schema."""
    return json.loads(resources.files("richardson").joinpath("csv_schema.json").read_text())


@dataclass
class ResultRecord:
    config: RunConfig
    columns: list
    rows: list
    summary: dict
    wall_time: float = 0.0
    exit_code: int = 0
    schema_version: int = SCHEMA_VERSION

    def header_lines(self) -> list:
        return [f"# schema_version: {self.schema_version}",
                f"# config: {json.dumps(_jsonable(self.config.echo()), sort_keys=True)}",
                f"# seed: {self.config.seed}"]

    def rows_csv(self) -> str:
        """Column header plus rows, without the comment header."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def csv_text(self) -> str:
        return "\n".join(self.header_lines()) + "\n" + self.rows_csv()

    def summary_json(self) -> str:
        doc = {"schema_version": self.schema_version, "config": self.config.echo(),
               "seed": self.config.seed, "n_rows": len(self.rows),
               "summary": self.summary, "wall_clock_seconds": self.wall_time}
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"

    def write(self, output_dir=None) -> tuple:
        out = Path(output_dir or self.config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.config.stem}.csv"
        json_path = out / f"{self.config.stem}.json"
        csv_path.write_text(self.csv_text())
        json_path.write_text(self.summary_json())
        return csv_path, json_path


def read_rows(path) -> str:
    """The per-replica part of a CSV written by `ResultRecord.write` (header lines stripped)."""
    text = Path(path).read_text()
    return "".join(ln for ln in text.splitlines(keepends=True) if not ln.startswith("#"))


def _record(cfg, columns, rows, summary, t0, exit_code=0) -> ResultRecord:
    schema = load_schema()[cfg.experiment.replace("-", "_")]
    if [c["name"] for c in schema["columns"]] != list(columns):
        raise AssertionError(f"columns for {cfg.experiment} disagree with the shipped schema")
    return ResultRecord(cfg, list(columns), rows, summary, time.perf_counter() - t0, exit_code)


def _seeds(cfg) -> list:
    return [derive_seed(cfg.seed, r) for r in range(cfg.replicas)]


# --- experiments -------------------------------------------------------------------------

def cmd_time_constant(cfg: RunConfig) -> ResultRecord:
    """T(0, n e_1) / n per replica for each n, with the rate-lam scaling check."""
    t0 = time.perf_counter()
    seeds = _seeds(cfg)
    rows, summary = [], {"lam": cfg["lam"], "estimates": {}}
    for n in cfg["n"]:
        est = analysis.estimate_time_constant(cfg.d, cfg["lam"], n, cfg.replicas, cfg.seed,
                                              cfg["margin"], cfg.workers)
        for r, v in enumerate(est.values):
            rows.append((r, seeds[r], n, float(v * n), float(v)))
        summary["estimates"][str(n)] = {
            "mean_T_over_n": est.mean_T_over_n, "ci95": list(est.ci95), "se": est.se,
            "relative_ci_width": (est.ci95[1] - est.ci95[0]) / est.mean_T_over_n
            if est.mean_T_over_n else None,
            "warnings": est.warnings}
    ns = cfg["n"]
    if len(ns) >= 2:
        a, b = summary["estimates"][str(ns[-2])], summary["estimates"][str(ns[-1])]
        joint = math.hypot(a["ci95"][1] - a["mean_T_over_n"], b["ci95"][1] - b["mean_T_over_n"])
        summary["consecutive_difference"] = {
            "n_pair": [ns[-2], ns[-1]],
            "difference": b["mean_T_over_n"] - a["mean_T_over_n"],
            "joint_half_width": joint}
    return _record(cfg, ["replica", "seed", "n", "T", "T_over_n"], rows, summary, t0)


def cmd_shape(cfg: RunConfig) -> ResultRecord:
    t0 = time.perf_counter()
    dirs = analysis.direction_grid(cfg.d, cfg["n_angles"])
    est = analysis.estimate_shape(cfg.d, cfg["lam"], cfg["R"], cfg.replicas, dirs, cfg.seed,
                                  cfg["margin"], cfg.workers, cfg["alpha"])
    seeds = _seeds(cfg)
    targets = ["(" + ",".join(str(int(c)) for c in t) + ")" for t in est.targets]
    rows = [(r, seeds[r], j, targets[j], float(est.times[r, j]), float(est.speeds[r, j]))
            for r in range(cfg.replicas) for j in range(len(targets))]
    avd = est.axis_vs_diagonal()
    summary = {
        "R": est.R, "lam": est.lam,
        "directions": [{"index": j, "unit": dirs[j].tolist(), "target": targets[j],
                        "speed": est.speed[j]} for j in range(len(targets))],
        "orbits": [{"members": o["members"], "defect": o["defect"], "p_value": o["p_value"],
                    "consistent_with_symmetry": o["consistent"]} for o in est.orbits],
        "all_orbits_consistent": all(o["consistent"] for o in est.orbits),
        "symmetry_defect": est.symmetry_defect,
        "convexity_defect": est.convexity_defect,
        "axis_minus_diagonal_speed": avd,
    }
    return _record(cfg, ["replica", "seed", "direction", "target", "T", "speed"], rows,
                   summary, t0)


def cmd_ends(cfg: RunConfig) -> ResultRecord:
    t0 = time.perf_counter()
    R_list = sorted(cfg["R_list"])
    res = analysis.ends_proxy_scan(cfg.d, R_list, cfg.replicas, cfg.seed, cfg.workers)
    seeds = _seeds(cfg)
    rows = [(r, seeds[r], R, int(res[R]["counts"][r]))
            for r in range(cfg.replicas) for R in R_list]
    summary = {str(R): {"mean_ends": mean_ci(res[R]["counts"]),
                        "distribution": res[R]["distribution"],
                        "at_least_two": res[R]["at_least_two"]} for R in R_list}
    return _record(cfg, ["replica", "seed", "R", "ends"], rows, {"per_R": summary}, t0)


def gm_quantities(k_max: int) -> list:
    return ([f"T(0,{k}n)" for k in range(1, k_max + 2)]
            + ["T(0,-m)", "T(n,-m)", "T(n,0)"])


def cmd_gm(cfg: RunConfig) -> ResultRecord:
    """Passage times behind the increment identities, in long format."""
    t0 = time.perf_counter()
    k_max = cfg["k_max"]
    tab = analysis.gm_increments(cfg.d, cfg["n"], k_max, cfg["m"], cfg.replicas, cfg.seed,
                                 cfg["margin"], cfg.workers)
    seeds = _seeds(cfg)
    names = gm_quantities(k_max)
    rows = [(r, seeds[r], q, float(tab.per_replica[r, i]))
            for r in range(cfg.replicas) for i, q in enumerate(names)]
    summary = {"n": tab.n, "m": tab.m, "k_max": k_max,
               "increments": {f"T(0,{k + 1}n)-T(0,{k}n)": tab.increments[k]
                              for k in range(k_max + 1)},
               "cumulative": {names[k]: tab.cumulative[k] for k in range(k_max + 1)},
               "back_difference": tab.back_difference, "forward_time": tab.forward_time,
               "telescoping_violations": tab.telescoping_violations,
               "triangle_violations": tab.triangle_violations}
    return _record(cfg, ["replica", "seed", "quantity", "value"], rows, summary, t0)


SHELL_COLUMNS = ["replica", "seed", "lam", "R", "type1_on_shell", "type2_on_shell", "both",
                 "n1", "n2"]

FERTILITY_MESSAGE = "neither of the sets strangles the other"


def _finite_pair(d, xi_1, xi_2, key="initial pair") -> FinitePair:
    if xi_1 is None and xi_2 is None:
        return FinitePair.standard(d)
    if xi_1 is None or xi_2 is None:
        raise InvalidConfigError("xi_1 and xi_2 must be given together")
    try:
        pair = FinitePair(parse_sites(xi_1), parse_sites(xi_2))
    except InvalidInputError as exc:
        raise InvalidConfigError(f"{key}: {exc}") from None
    if any(len(s) != d for s in pair.xi_1 | pair.xi_2):
        raise InvalidConfigError(f"{key}: sites must have dimension d = {d}")
    if not pair.xi_1 or not pair.xi_2:
        raise InvalidConfigError(f"{key}: both initial sets must be nonempty")
    if not pair.fertile():
        raise InvalidConfigError(
            f"{key} ({format_sites(pair.xi_1)} | {format_sites(pair.xi_2)}) is not fertile: "
            f"the fertility check requires that {FERTILITY_MESSAGE}")
    return pair


def _check_pair_fits(pair, R_list, key):
    rmin = min(R_list)
    if any(max(abs(c) for c in s) >= rmin for s in pair.xi_1 | pair.xi_2):
        raise InvalidConfigError(f"{key}: initial sites must lie strictly inside B_{rmin}")


def _coexist_replica(r, seed, d, lams, R_list, pair):
    return coupling.coupled_rows(derive_seed(seed, r), d, lams, R_list, pair)


def _shell_scan(cfg, lams, pair):
    R_list = sorted(cfg["R_list"])
    per = map_replicas(_coexist_replica, cfg.replicas, (cfg.seed, cfg.d, lams, R_list, pair),
                       cfg.workers)
    seeds = _seeds(cfg)
    rows = [(r, seeds[r]) + row for r, (rr, _) in enumerate(per) for row in rr]
    return R_list, per, rows


def _shell_estimates(rows, lams, R_list, n):
    hits = {(lam, R): 0 for lam in lams for R in R_list}
    nest = 0
    by_rep: dict = {}
    for r, _, lam, R, t1, t2, both, n1, n2 in rows:
        hits[(lam, R)] += int(both)
        by_rep[(r, lam, R)] = both
    for (r, lam, R), b in by_rep.items():
        i = R_list.index(R)
        if i > 0 and b and not by_rep[(r, lam, R_list[i - 1])]:
            nest += 1
    est = {(lam, R): wilson_ci(hits[(lam, R)], n) for lam in lams for R in R_list}
    return est, hits, nest


def cmd_coexistence(cfg: RunConfig) -> ResultRecord:
    """P(both types on the shell |x|_inf = R) across an R sweep at one lam."""
    t0 = time.perf_counter()
    pair = _finite_pair(cfg.d, cfg["xi_1"], cfg["xi_2"])
    _check_pair_fits(pair, cfg["R_list"], "initial pair")
    lam = cfg["lam"]
    R_list, _, rows = _shell_scan(cfg, [lam], pair)
    est, hits, nest = _shell_estimates(rows, [lam], R_list, cfg.replicas)
    table = "persistence" if lam == 1.0 else "decay"
    summary = {"lam": lam, "table": table,
               "initial": {"xi_1": format_sites(pair.xi_1), "xi_2": format_sites(pair.xi_2)},
               "both_on_shell": {str(R): est[(lam, R)] for R in R_list},
               "ci_excludes_zero": {str(R): est[(lam, R)].lo > 0 for R in R_list},
               "nesting_violations": nest}
    return _record(cfg, SHELL_COLUMNS, rows, summary, t0)


def parse_pairs(text: str, d: int) -> list:
    pairs = []
    for i, chunk in enumerate(text.split(";")):
        a, b = chunk.split("|")
        pairs.append(_finite_pair(d, a, b, key=f"pairs[{i}]"))
    return pairs


def cmd_config_irrelevance(cfg: RunConfig) -> ResultRecord:
    """Coexistence estimates for several fertile pairs on common random numbers."""
    t0 = time.perf_counter()
    pairs = parse_pairs(cfg["pairs"], cfg.d)      # all checked before any simulation
    for i, p in enumerate(pairs):
        _check_pair_fits(p, cfg["R_list"], f"pairs[{i}]")
    lam = cfg["lam"]
    rows, per_pair = [], []
    for i, pair in enumerate(pairs):
        R_list, _, prow = _shell_scan(cfg, [lam], pair)
        est, _, nest = _shell_estimates(prow, [lam], R_list, cfg.replicas)
        rows.extend((i,) + row for row in prow)
        per_pair.append({"pair": i, "xi_1": format_sites(pair.xi_1),
                         "xi_2": format_sites(pair.xi_2),
                         "both_on_shell": {str(R): est[(lam, R)] for R in R_list},
                         "nesting_violations": nest})
    rmin, rmax = str(R_list[0]), str(R_list[-1])
    positive = all(p["both_on_shell"][rmax].lo > 0 for p in per_pair)
    decaying = all(p["both_on_shell"][rmax].hi < p["both_on_shell"][rmin].lo
                   for p in per_pair) if len(R_list) > 1 else False
    summary = {"lam": lam, "pairs": per_pair, "jointly_bounded_away_from_zero": positive,
               "jointly_decaying": decaying}
    return _record(cfg, ["pair"] + SHELL_COLUMNS, rows, summary, t0)


def make_initial(name: str, alpha: float = 0.0):
    if name == "hyperplane":
        return Hyperplane()
    if name == "halfline":
        return HalfLine()
    if name == "halfspace":
        return HalfSpace()
    if name == "cone":
        try:
            return Cone(alpha)
        except InvalidInputError as exc:
            raise InvalidConfigError(f"alpha: {exc}") from None
    raise InvalidConfigError(f"unknown initial configuration {name!r}")


def cmd_unbounded(cfg: RunConfig) -> ResultRecord:
    """Type-2 counts per level x_1 = l in a slab, for one unbounded configuration."""
    t0 = time.perf_counter()
    name, L = cfg["initial"], cfg["L"]
    alphas = cfg["alpha"] if name == "cone" else [None]
    seeds = _seeds(cfg)
    rows, curves = [], []
    for a in alphas:
        init = make_initial(name, a or 0.0)
        prof = analysis.level_occupancy(cfg.d, cfg["lam"], cfg["W"], L, cfg.replicas,
                                        cfg.seed, init, cfg.workers)
        for r in range(cfg.replicas):
            for lev in range(L + 1):
                rows.append((name, "" if a is None else float(a), r, seeds[r], lev,
                             int(prof.counts[r, lev])))
        surv = prof.survival
        curves.append({"alpha": a, "survival": surv, "mean_count": prof.mean,
                       "survival_at_L": surv[L]})
    summary = {"initial": name, "lam": cfg["lam"], "W": cfg["W"], "L": L, "curves": curves}
    return _record(cfg, ["initial", "alpha", "replica", "seed", "level", "type2_count"], rows,
                   summary, t0)


def cmd_coupled_scan(cfg: RunConfig) -> ResultRecord:
    """Shell rows for every grid level on shared samples, with monotonicity diagnostics."""
    t0 = time.perf_counter()
    grid = coupling.LambdaGrid(cfg["grid"])
    pair = _finite_pair(cfg.d, cfg["xi_1"], cfg["xi_2"])
    _check_pair_fits(pair, cfg["R_list"], "initial pair")
    lams = list(grid.values)
    R_list, per, rows = _shell_scan(cfg, lams, pair)
    est, _, nest = _shell_estimates(rows, lams, R_list, cfg.replicas)
    # per-seed presence on the shell should be monotone in lam: type 1 down, type 2 up
    pres = {(r, lam, R): (t1, t2) for r, _, lam, R, t1, t2, *_ in rows}
    viol = {str(R): {"type1_shell": 0, "type2_shell": 0, "type1_count": 0, "sets": 0}
            for R in R_list}
    counts = {(r, lam, R): (n1, n2) for r, _, lam, R, _, _, _, n1, n2 in rows}
    for r in range(cfg.replicas):
        for R in R_list:
            v = viol[str(R)]
            for a, b in zip(lams, lams[1:]):
                v["type1_shell"] += int(pres[(r, b, R)][0] and not pres[(r, a, R)][0])
                v["type2_shell"] += int(pres[(r, a, R)][1] and not pres[(r, b, R)][1])
                v["type1_count"] += int(counts[(r, b, R)][0] > counts[(r, a, R)][0])
            v["sets"] += per[r][1][R]
    pairs = cfg.replicas * max(len(lams) - 1, 1)
    summary = {"grid": lams,
               "both_on_shell": {f"{lam!r}@{R}": est[(lam, R)] for lam in lams for R in R_list},
               "nesting_violations": nest,
               "monotonicity_violations": viol,
               "monotonicity_violation_rates": {
                   R: {k: c / pairs for k, c in v.items()} for R, v in viol.items()}}
    return _record(cfg, SHELL_COLUMNS, rows, summary, t0)


def resolve_graph(spec: str):
    """A shipped graph name or a path to an edge-list file; returns (graph, type1, type2)."""
    shipped = oracle.shipped_graphs()
    if spec in shipped:
        return shipped[spec]
    g = oracle.read_graph(spec) if Path(spec).exists() else None
    if g is None:
        raise InvalidConfigError(
            f"graph: {spec!r} is neither a shipped graph ({', '.join(shipped)}) nor a file")
    return g, [0], [g.n - 1]


def cmd_oracle_check(cfg: RunConfig) -> ResultRecord:
    """Engine frequencies against exact capture probabilities; exit code 3 on mismatch."""
    t0 = time.perf_counter()
    g, t1, t2 = resolve_graph(cfg["graph"])
    t1 = cfg["type1"] if cfg["type1"] is not None else t1
    t2 = cfg["type2"] if cfg["type2"] is not None else t2
    try:
        model = oracle.ExactModel.from_sets(g, t1, t2, lam=cfg["lam"])
    except InvalidInputError as exc:
        raise InvalidConfigError(f"type1/type2: {exc}") from None
    rep = oracle.exact_vs_engine(model, cfg.replicas, cfg.seed, threshold=cfg["threshold"])
    rows = [tuple(row) for row in rep.rows()]
    summary = {"graph": cfg["graph"], "vertices": g.n, "edges": len(g.edges),
               "type1": list(t1), "type2": list(t2), "lam": rep.lam, "passed": rep.passed,
               "max_z": max((z for z in rep.z if math.isfinite(z)), default=0.0),
               "completion_time": {"exact": rep.completion_exact,
                                   "estimate": rep.completion_estimate,
                                   "se": rep.completion_se}}
    return _record(cfg, ["vertex", "exact", "estimate", "se", "z", "flag"], rows, summary, t0,
                   exit_code=0 if rep.passed else 3)


COMMANDS = {
    "time-constant": cmd_time_constant,
    "shape": cmd_shape,
    "ends": cmd_ends,
    "gm": cmd_gm,
    "coexistence": cmd_coexistence,
    "config-irrelevance": cmd_config_irrelevance,
    "unbounded": cmd_unbounded,
    "coupled-scan": cmd_coupled_scan,
    "oracle-check": cmd_oracle_check,
}


def run_experiment(cfg: RunConfig, write: bool = True) -> ResultRecord:
    rec = COMMANDS[cfg.experiment](cfg)
    if write:
        rec.write()
    return rec
