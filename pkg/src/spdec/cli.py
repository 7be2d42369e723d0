"""Command-line front end.

Subcommands: generate, solve, sweep, diagnose, covers, quasirandom.  Settings
come from an optional ``key = value`` config file (``--config``) overridden by
flags.  Every command echoes its effective configuration and a short hash of
it into its outputs, and writes a ``manifest.json`` listing the files it
produced with their SHA-256 digests.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .bias import BiasSchedule, certificate_sets, edge_biases, typical_sequence
from .covers import COVER_CAP, compare_sp_to_covers
from .decimation import (
    SUCCESS_COLUMNS,
    DecimationPolicy,
    DecimationTrace,
    run_decimation,
    snapshot,
    wilson,
)
from .errors import Contradiction, SpdecError
from .factor_graph import FactorGraph
from .formula import (
    BRUTEFORCE_CAP,
    CnfFormula,
    RandomModel,
    count_satisfying_bruteforce,
    generate,
    random_tree_formula,
    read_dimacs,
    to_dimacs,
)
from .message_passing import IterationPolicy, default_omega, iterate, sp_marginals
from .quasirandom import PROPERTIES, check_all
from .rng import stream

SCHEMA_VERSION = "1"
COMMANDS = ("generate", "solve", "sweep", "diagnose", "covers", "quasirandom")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    k: int = 3
    n: int = 100
    m: int | None = None
    r: float | None = None
    r_grid: tuple[float, ...] | None = None
    model: str = "uniform"
    engine: str = "sp"
    order: str = "natural"
    omega: int | None = None
    tol: float = 1e-9
    c: float = 0.1
    trials: int = 1
    seed: int = 0
    out: str | None = None
    input: str | None = None
    cap_bruteforce: int = BRUTEFORCE_CAP
    strict: bool = False
    t: int = 0
    levels: int = 5
    budget: int = 5000
    mode: str = "auto"
    warm_start: bool = False
    trees: int = 0
    traces: bool = False
    jobs: int = 1

    # settings that change where or how fast results are written, not what
    _UNHASHED = ("out", "jobs")

    def __post_init__(self):
        checks = [
            (self.command in COMMANDS, f"command must be one of {COMMANDS}"),
            (self.k >= 2, "k must be at least 2"),
            (self.n >= 0, "n must be non-negative"),
            (self.m is None or self.m >= 0, "m must be non-negative"),
            (self.r is None or self.r >= 0, "r must be non-negative"),
            (self.model in ("uniform", "binomial"), "model must be uniform or binomial"),
            (self.engine in ("sp", "bp", "coin"), "engine must be sp, bp or coin"),
            (self.order in ("natural", "perm"), "order must be natural or perm"),
            (self.omega is None or self.omega >= 0, "omega must be non-negative"),
            (self.tol >= 0, "tol must be non-negative"),
            (self.c > 0, "c must be positive"),
            (self.trials >= 1, "trials must be at least 1"),
            (self.seed >= 0, "seed must be non-negative"),
            (self.t >= 0, "t must be non-negative"),
            (self.levels >= 0, "levels must be non-negative"),
            (self.budget >= 1, "budget must be positive"),
            (self.mode in ("auto", "exhaustive", "sampled"), "mode must be auto, exhaustive or sampled"),
            (self.jobs >= 1, "jobs must be at least 1"),
            (self.trees >= 0, "trees must be non-negative"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        if self.r_grid is not None and (not self.r_grid or any(r < 0 for r in self.r_grid)):
            raise ConfigError("r_grid must be a non-empty list of non-negative densities")

    # ------------------------------------------------------------ derived
    def effective(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        if out["r_grid"] is not None:
            out["r_grid"] = list(out["r_grid"])
        return out

    def hash(self) -> str:
        body = {k: v for k, v in self.effective().items() if k not in self._UNHASHED}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def clause_count(self, r: float | None = None) -> int:
        if r is None and self.m is not None:
            return self.m
        density = self.r if r is None else r
        if density is None:
            raise ConfigError("either m or r is required")
        return int(round(density * self.n))

    def iteration(self, n: int) -> IterationPolicy:
        return IterationPolicy(self.omega if self.omega is not None else default_omega(n), self.tol)

    def policy(self, engine: str | None = None) -> DecimationPolicy:
        return DecimationPolicy(engine or self.engine, self.order, self.iteration(self.n), self.seed, self.warm_start)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, raw: Any) -> Any:
    if key not in _FIELD_TYPES or key == "command":
        raise ConfigError(f"unknown setting {key!r}")
    if raw is None or not isinstance(raw, str):
        return raw
    text = raw.strip()
    kind = str(_FIELD_TYPES[key])
    if text.lower() in ("none", "") and "None" in kind:
        return None
    try:
        if key == "r_grid":
            return tuple(float(v) for v in text.replace(",", " ").split())
        if kind.startswith("bool"):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return text


def parse_config_text(text: str) -> dict[str, Any]:
    """``key = value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    out: dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        out[key] = _coerce(key, value)
    return out


def make_config(command: str, settings: dict[str, Any]) -> ExperimentConfig:
    clean = {k.replace("-", "_"): _coerce(k.replace("-", "_"), v) for k, v in settings.items()}
    return ExperimentConfig(command=command, **clean)


# ------------------------------------------------------------ outputs


class RunRecord:
    """Collects output files and writes the manifest."""

    def __init__(self, cfg: ExperimentConfig, root: Path):
        self.cfg = cfg
        self.root = root
        self.started = time.time()
        self.outputs: list[Path] = []

    def add(self, path: Path) -> Path:
        self.outputs.append(path)
        return path

    def manifest(self) -> dict:
        entries = []
        for p in self.outputs:
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            try:
                name = str(p.relative_to(self.root))
            except ValueError:
                name = str(p)
            entries.append({"path": name, "sha256": digest})
        return {
            "schema": SCHEMA_VERSION,
            "version": __version__,
            "command": self.cfg.command,
            "config": self.cfg.effective(),
            "config_hash": self.cfg.hash(),
            "seconds": round(time.time() - self.started, 3),
            "outputs": entries,
        }

    def write(self, name: str = "manifest.json") -> Path:
        path = self.root / name
        path.write_text(json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n")
        return path


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[dict]) -> Path:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(header), lineterminator="\r\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(buf.getvalue(), newline="")
    os.replace(tmp, path)
    return path


def _fmt(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (bool, np.bool_)):
        return int(bool(value))
    return value


def _out_dir(cfg: ExperimentConfig, default: str) -> Path:
    path = Path(cfg.out or default)
    path.mkdir(parents=True, exist_ok=True)
    return path


def load_formula(cfg: ExperimentConfig) -> CnfFormula:
    if cfg.input:
        return read_dimacs(cfg.input)
    return generate(RandomModel(cfg.model, cfg.k, cfg.clause_count()), cfg.n, cfg.seed)


def _density(cfg: ExperimentConfig, f: CnfFormula) -> float:
    if cfg.r is not None:
        return cfg.r
    return f.m / f.n if f.n else 0.0


# ------------------------------------------------------------ commands


def cmd_generate(cfg: ExperimentConfig) -> dict:
    f = generate(RandomModel(cfg.model, cfg.k, cfg.clause_count()), cfg.n, cfg.seed)
    path = Path(cfg.out or "formula.cnf")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(to_dimacs(f).encode("ascii"))
    sidecar = path.with_name(path.name + ".json")
    body = {"provenance": f.provenance.as_dict(), "config": cfg.effective(), "config_hash": cfg.hash(),
            "version": __version__}
    sidecar.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    return {"formula": str(path), "sidecar": str(sidecar), "n": f.n, "m": f.m}


def cmd_solve(cfg: ExperimentConfig) -> dict:
    f = load_formula(cfg)
    root = _out_dir(cfg, "solve_out")
    record = RunRecord(cfg, root)
    policy = cfg.policy()
    lines, results = [], []
    for trial in range(cfg.trials):
        try:
            trace = run_decimation(f, policy, trial, strict=cfg.strict)
            results.append({"trial": trial, "satisfied": trace.satisfied, "contradiction": None})
            lines.append(trace.to_jsonl())
        except Contradiction as exc:
            results.append({"trial": trial, "satisfied": False, "contradiction": str(exc)})
    traces = record.add(root / "traces.jsonl")
    traces.write_text("".join(lines))
    summary: dict[str, Any] = {"n": f.n, "m": f.m, "results": results, "config_hash": cfg.hash(),
                               "config": cfg.effective()}
    wins = sum(r["satisfied"] for r in results)
    est = wilson(wins, cfg.trials)
    summary.update(successes=wins, trials=cfg.trials, lo=est.lo, hi=est.hi)
    if f.n <= cfg.cap_bruteforce:
        summary["solutions"] = count_satisfying_bruteforce(f, cap=cfg.cap_bruteforce)
    out = record.add(root / "summary.json")
    out.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    record.write()
    return summary


def _formula_seed(seed: int, grid_index: int, trial: int) -> int:
    return int(stream(seed, "generation", grid_index, trial).integers(0, 2**62))


def sweep_trial(cfg: ExperimentConfig, grid_index: int, r: float, trial: int,
                engines: Sequence[str], keep_traces: bool = False) -> dict[str, DecimationTrace | bool]:
    """One fresh formula at density r, solved by each engine with the same trial index."""
    f = generate(RandomModel(cfg.model, cfg.k, int(round(r * cfg.n))), cfg.n, _formula_seed(cfg.seed, grid_index, trial))
    out: dict[str, DecimationTrace | bool] = {}
    deltas = None
    if keep_traces and cfg.n > 0 and r > 0:
        deltas = BiasSchedule(cfg.k, r, cfg.n, cfg.c).deltas()
    for engine in engines:
        trace = run_decimation(f, cfg.policy(engine), trial, balance_deltas=deltas if engine != "coin" else None)
        out[engine] = trace if keep_traces else trace.satisfied
    return out


def _sweep_job(args):
    return sweep_trial(*args)


def _sweep_engines(cfg: ExperimentConfig) -> list[str]:
    return [cfg.engine] + ([] if cfg.engine == "coin" else ["coin"])


def sweep_point(cfg: ExperimentConfig, grid_index: int, r: float, keep_traces: bool = False):
    engines = _sweep_engines(cfg)
    jobs = [(cfg, grid_index, r, trial, engines, keep_traces) for trial in range(cfg.trials)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            outcomes = list(pool.map(_sweep_job, jobs))
    else:
        outcomes = [_sweep_job(j) for j in jobs]
    rows, traces = [], {e: [] for e in engines}
    for engine in engines:
        wins = 0
        for outcome in outcomes:
            value = outcome[engine]
            wins += value.satisfied if isinstance(value, DecimationTrace) else bool(value)
            if keep_traces:
                traces[engine].append(value)
        est = wilson(wins, cfg.trials)
        rows.append({"k": cfg.k, "n": cfg.n, "r": r, "engine": engine, "order": cfg.order, "trials": cfg.trials,
                     "successes": wins, "estimate": est.estimate, "lo": est.lo, "hi": est.hi, "seed": cfg.seed,
                     "config_hash": cfg.hash()})
    return rows, traces


def _read_rows(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def cmd_sweep(cfg: ExperimentConfig) -> dict:
    grid = cfg.r_grid or ((cfg.r,) if cfg.r is not None else None)
    if not grid:
        raise ConfigError("sweep needs r_grid")
    root = _out_dir(cfg, "sweep_out")
    record = RunRecord(cfg, root)
    path = root / "success.csv"
    rows: list[dict] = []
    if path.exists():
        existing = _read_rows(path)
        if existing and all(row["config_hash"] == cfg.hash() for row in existing):
            rows = existing
    done = {float(row["r"]) for row in rows}
    trace_path = root / "traces.jsonl"
    if cfg.traces and not done:
        trace_path.write_text("")
    for index, r in enumerate(grid):
        if r in done:
            continue
        new_rows, traces = sweep_point(cfg, index, r, keep_traces=cfg.traces)
        rows.extend(new_rows)
        if cfg.traces:
            with open(trace_path, "a") as fh:
                for engine_traces in traces.values():
                    for trace in engine_traces:
                        fh.write(trace.to_jsonl())
        # checkpoint after each grid point
        _write_csv(path, SUCCESS_COLUMNS, rows)
    if not path.exists():
        _write_csv(path, SUCCESS_COLUMNS, rows)
    record.add(path)
    if cfg.traces:
        record.add(trace_path)
    record.write()
    return {"csv": str(path), "rows": len(rows)}


BIAS_COLUMNS = ["var", "mu_minus", "mu_zero", "mu_plus", "bias", "biased", "config_hash"]
TRACE_COLUMNS = ["level", "pi", "Pi", "tau", "log_gap", "band_checked", "config_hash"]
LEVEL_COLUMNS = ["level", "pi", "Pi", "tau", "B", "B_weighted", "T", "T_prime", "B_in_T", "Bw_in_Tp",
                 "T_small", "Tp_small", "config_hash"]


def cmd_diagnose(cfg: ExperimentConfig) -> dict:
    f0 = load_formula(cfg)
    root = _out_dir(cfg, "diagnose_out")
    record = RunRecord(cfg, root)
    h = cfg.hash()
    if cfg.t > f0.n:
        raise ConfigError("t exceeds n")
    f, active = snapshot(f0, cfg.policy(), cfg.t) if cfg.t else (f0, np.ones(f0.n, dtype=bool))
    g = FactorGraph.build(f)
    density = _density(cfg, f0)
    if density <= 0 or f0.n == 0:
        raise ConfigError("diagnose needs a positive density: pass r for clause-free formulas")
    sched = BiasSchedule(cfg.k, density, f0.n, cfg.c)
    t = min(cfg.t, f0.n - 1)
    occurring = (g.degrees > 0) & active

    result = iterate(g, cfg.iteration(f0.n), "sp", keep_history=True)
    tri = sp_marginals(g, result.state).triples
    delta = sched.delta(t)
    bias = np.abs(tri[:, 2] - 0.5 * (1.0 - tri[:, 1]))
    rows = [{"var": x + 1, "mu_minus": tri[x, 0], "mu_zero": tri[x, 1], "mu_plus": tri[x, 2], "bias": bias[x],
             "biased": bool(bias[x] > delta), "config_hash": h} for x in np.flatnonzero(occurring)]
    record.add(_write_csv(root / "biases.csv", BIAS_COLUMNS, rows))
    biased = sum(r["biased"] for r in rows)

    seq = typical_sequence(sched, t, 0.0, cfg.levels)
    trace_rows = [{"level": i, "pi": seq.pi[i], "Pi": seq.Pi[i], "tau": seq.tau[i], "log_gap": seq.log_gap[i],
                   "band_checked": seq.band_checked[i], "config_hash": h} for i in range(len(seq.pi))]
    record.add(_write_csv(root / "pi_trace.csv", TRACE_COLUMNS, trace_rows))

    history = list(result.history)
    levels = min(cfg.levels, len(history) - 1)
    cs = certificate_sets(g, history, sched, t, L=levels, active=occurring)
    level_rows = [{**row, "config_hash": h} for row in cs.rows()]
    record.add(_write_csv(root / "certificates.csv", LEVEL_COLUMNS, level_rows))

    report = check_all(g, sched, t, cfg.budget, cfg.mode, cfg.seed, occurring)
    body = json.loads(report.to_json())
    body["config_hash"] = h
    qpath = root / "qreport.json"
    qpath.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    record.add(qpath)
    summary = {
        "config_hash": h, "t": t, "delta": delta, "biased": biased,
        "balanced": biased <= delta * (f0.n - t),
        "B_in_T": all(lv.B_in_T for lv in cs.levels), "Bw_in_Tp": all(lv.Bw_in_Tp for lv in cs.levels),
        "band_violations": list(seq.band_violations),
        "q": {name: entry.verdict for name, entry in report.entries.items()},
        "q_modes": {name: entry.mode for name, entry in report.entries.items()},
    }
    spath = root / "summary.json"
    spath.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    record.add(spath)
    record.write()
    return summary


COVER_COLUMNS = ["instance", "var", "covers", "dev_minus", "dev_zero", "dev_plus", "config_hash"]


def cmd_covers(cfg: ExperimentConfig) -> dict:
    root = _out_dir(cfg, "covers_out")
    record = RunRecord(cfg, root)
    h = cfg.hash()
    policy = IterationPolicy(cfg.omega if cfg.omega is not None else 1000, min(cfg.tol, 1e-12))
    if cfg.trees:
        rng = stream(cfg.seed, "generation", 0)
        formulas = [random_tree_formula(int(rng.integers(1, min(cfg.n, 12) + 1)) if cfg.n else 1, rng)
                    for _ in range(cfg.trees)]
    else:
        formulas = [load_formula(cfg)]
    rows, summary_rows = [], []
    for index, f in enumerate(formulas):
        cmp = compare_sp_to_covers(f, policy, cap=COVER_CAP)
        for x in range(f.n):
            dev = cmp.deviations[x]
            rows.append({"instance": index, "var": x + 1, "covers": cmp.cover_count, "dev_minus": dev[0],
                         "dev_zero": dev[1], "dev_plus": dev[2], "config_hash": h})
        summary_rows.append({"instance": index, "n": f.n, "m": f.m, "covers": cmp.cover_count,
                             "max_deviation": None if math.isnan(cmp.max_deviation) else cmp.max_deviation,
                             "residual": cmp.residual})
    record.add(_write_csv(root / "deviations.csv", COVER_COLUMNS, rows))
    finite = [s["max_deviation"] for s in summary_rows if s["max_deviation"] is not None]
    summary = {"config_hash": h, "instances": summary_rows,
               "max_deviation": max(finite) if finite else None}
    spath = root / "summary.json"
    spath.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    record.add(spath)
    record.write()
    return summary


def cmd_quasirandom(cfg: ExperimentConfig) -> dict:
    f0 = load_formula(cfg)
    root = _out_dir(cfg, "quasirandom_out")
    record = RunRecord(cfg, root)
    f, active = snapshot(f0, cfg.policy(), cfg.t) if cfg.t else (f0, np.ones(f0.n, dtype=bool))
    g = FactorGraph.build(f)
    density = _density(cfg, f0)
    if density <= 0 or f0.n == 0:
        raise ConfigError("quasirandom needs a positive density: pass r for clause-free formulas")
    sched = BiasSchedule(cfg.k, density, f0.n, cfg.c)
    t = min(cfg.t, f0.n - 1)
    report = check_all(g, sched, t, cfg.budget, cfg.mode, cfg.seed, (g.degrees > 0) & active, PROPERTIES)
    body = json.loads(report.to_json())
    body["config_hash"] = cfg.hash()
    path = root / "qreport.json"
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    record.add(path)
    record.write()
    return {name: {"verdict": e.verdict, "mode": e.mode} for name, e in report.entries.items()}


HANDLERS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "diagnose": cmd_diagnose,
    "covers": cmd_covers,
    "quasirandom": cmd_quasirandom,
}


# ------------------------------------------------------------ argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spdec", description="Survey-propagation guided decimation experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value settings file; flags override it")
        p.add_argument("--k", type=int)
        p.add_argument("--n", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--r", type=float)
        p.add_argument("--r-grid", dest="r_grid", help="comma or space separated densities")
        p.add_argument("--model", choices=["uniform", "binomial"])
        p.add_argument("--engine", choices=["sp", "bp", "coin"])
        p.add_argument("--order", choices=["natural", "perm"])
        p.add_argument("--omega", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--c", type=float)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--input", help="DIMACS file instead of generating")
        p.add_argument("--cap-bruteforce", dest="cap_bruteforce", type=int)
        p.add_argument("--strict", action="store_true", default=None)
        p.add_argument("--t", type=int)
        p.add_argument("--levels", type=int)
        p.add_argument("--budget", type=int)
        p.add_argument("--mode", choices=["auto", "exhaustive", "sampled"])
        p.add_argument("--warm-start", dest="warm_start", action="store_true", default=None)
        p.add_argument("--trees", type=int, help="covers: number of random tree instances")
        p.add_argument("--traces", action="store_true", default=None, help="sweep: also write JSON-lines traces")
        p.add_argument("--jobs", type=int)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    settings: dict[str, Any] = {}
    if args.config:
        settings.update(parse_config_text(Path(args.config).read_text()))
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        settings[key] = value
    return make_config(args.command, settings)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        result = HANDLERS[cfg.command](cfg)
    except (ConfigError, SpdecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return 0
