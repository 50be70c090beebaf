"""Command-line front end: config parsing, condition sweeps and reports.

Config files are INI documents::

    [scenario.anchor]
    a = 0
    b = inf
    p = 2
    q = 2
    v = power c=1 alpha=0
    w = power c=1 alpha=-2
    conditions = all

    [grid]
    n = 4096
    spacing = auto
    trunc_lo = 1e-6
    trunc_hi = 1e6

    [epsilons]
    values = default            ; or a comma list: 0.25, 1, 4

    [estimator]
    max_iters = 2000
    restarts = 8
    step_init = 1.0
    tol = 1e-10
    rng_seed = 0

    [output]
    path = report.csv           ; omit for stdout
    format = csv                ; or jsonl

Weights are ``power c=.. alpha=..``, ``piecewise breaks=x1,x2 values=y0,y1,y2``
or ``tabulated nodes=x0,x1 values=y0,y1``.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import conditions as cond
from .estimator import OptimizerOptions, estimate_best_constant, witness_lower_bound
from .quadrature import SPACINGS, Grid, make_grid
from .weights import Exponents, Interval, PiecewiseConstant, Power, Tabulated, Weight

EXIT_OK, EXIT_CONFIG, EXIT_FAILURE = 0, 2, 3
MIN_NODES = 16
HEADER = ("scenario_id", "p", "q", "epsilon", "A_eps", "B1_eps", "B2_eps", "A_PS",
          "muckenhoupt", "mazya_rosin", "C_hat", "witness_lb", "residual_b1b2", "grid_n")
CONDITION_NAMES = ("a_eps", "b1_eps", "b2_eps", "a_ps", "muckenhoupt", "mazya_rosin",
                   "c_hat", "witness_lb", "residual_b1b2")
# request name -> report column
COLUMN = {"a_eps": "A_eps", "b1_eps": "B1_eps", "b2_eps": "B2_eps", "a_ps": "A_PS",
          "muckenhoupt": "muckenhoupt", "mazya_rosin": "mazya_rosin", "c_hat": "C_hat",
          "witness_lb": "witness_lb", "residual_b1b2": "residual_b1b2"}
FAILED = "failed"


class ConfigError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    interval: Interval
    v: Weight
    w: Weight
    exp: Exponents
    conditions: tuple

    def scenario(self) -> cond.Scenario:
        return cond.Scenario(self.interval, self.v, self.w, self.exp)


@dataclass(frozen=True)
class GridSpec:
    n: int = 2048
    spacing: str = "auto"
    trunc_lo: float | None = None
    trunc_hi: float | None = None

    def build(self, interval: Interval) -> Grid:
        return make_grid(interval, self.n, self.spacing, self.trunc_lo, self.trunc_hi)


@dataclass(frozen=True)
class OutputSpec:
    path: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    scenarios: tuple
    grid: GridSpec = GridSpec()
    epsilons: object = "default"
    estimator: OptimizerOptions = OptimizerOptions()
    output: OutputSpec = OutputSpec()

    def epsilons_for(self, exp: Exponents) -> list[float]:
        if self.epsilons == "default":
            return cond.default_epsilons(exp)
        return sorted(set(self.epsilons))


def applicable(exp: Exponents) -> tuple:
    """Condition names defined for the exponent regime."""
    if exp.convex:
        names = ["a_eps", "muckenhoupt", "c_hat", "witness_lb"]
    else:
        names = ["b1_eps", "b2_eps", "residual_b1b2", "c_hat"]
        if exp.p > 1:
            names.append("witness_lb")
            if exp.q >= 1:
                names.append("mazya_rosin")
    if exp.p > 1:
        names.append("a_ps")
    return tuple(n for n in CONDITION_NAMES if n in names)


# ---------------------------------------------------------------- parsing

def _line_index(text: str) -> dict:
    """(section, key) -> line number; (section, None) -> header line."""
    index, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            index[(section, None)] = no
        elif section is not None and ("=" in line or ":" in line):
            key = line.split("=", 1)[0].split(":", 1)[0].strip().lower()
            index.setdefault((section, key), no)
    return index


def _float(text: str, where) -> float:
    try:
        x = float(text)
    except ValueError:
        raise ConfigError(f"malformed number {text!r}", where) from None
    if math.isnan(x):
        raise ConfigError("nan is not a valid number", where)
    return x


def _int(text: str, where) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"malformed integer {text!r}", where) from None


def _float_list(text: str, where) -> tuple:
    return tuple(_float(x, where) for x in text.replace(",", " ").split())


def parse_weight(text: str, where=None) -> Weight:
    parts = text.split()
    if not parts:
        raise ConfigError("empty weight specification", where)
    kind, args = parts[0].lower(), {}
    for item in parts[1:]:
        if "=" not in item:
            raise ConfigError(f"expected key=value in weight, got {item!r}", where)
        k, val = item.split("=", 1)
        args[k.lower()] = val
    allowed = {"power": {"c", "alpha"}, "piecewise": {"breaks", "values"},
               "tabulated": {"nodes", "values"}}
    if kind not in allowed:
        raise ConfigError(f"unknown weight kind {kind!r}", where)
    unknown = set(args) - allowed[kind]
    if unknown:
        raise ConfigError(f"unknown {kind} weight parameter(s) {sorted(unknown)}", where)
    try:
        if kind == "power":
            return Power(_float(args.get("c", "1"), where), _float(args.get("alpha", "0"), where))
        if kind == "piecewise":
            return PiecewiseConstant(_float_list(args.get("breaks", ""), where),
                                     _float_list(args.get("values", ""), where))
        return Tabulated(_float_list(args.get("nodes", ""), where),
                         _float_list(args.get("values", ""), where))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), where) from None


def render_weight(w: Weight) -> str:
    if isinstance(w, Power):
        return f"power c={w.c!r} alpha={w.alpha!r}"
    if isinstance(w, PiecewiseConstant):
        return f"piecewise breaks={','.join(map(repr, w.breakpoints))} values={','.join(map(repr, w.values))}"
    if isinstance(w, Tabulated):
        return f"tabulated nodes={','.join(map(repr, w.nodes))} values={','.join(map(repr, w.values))}"
    raise TypeError(f"cannot render {type(w).__name__}")


_SECTION_KEYS = {
    "grid": {"n", "spacing", "trunc_lo", "trunc_hi"},
    "epsilons": {"values"},
    "estimator": {"max_iters", "restarts", "step_init", "tol", "rng_seed"},
    "output": {"path", "format"},
}
_SCENARIO_KEYS = {"a", "b", "p", "q", "v", "w", "conditions"}
_SCENARIO_REQUIRED = ("a", "b", "p", "q", "v", "w")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config document; raises ConfigError."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None
    lines = _line_index(text)

    def at(section, key=None):
        return lines.get((section, key)) or lines.get((section, None))

    for section in parser.sections():
        if section.startswith("scenario."):
            keys = _SCENARIO_KEYS
        elif section in _SECTION_KEYS:
            keys = _SECTION_KEYS[section]
        else:
            raise ConfigError(f"unknown section [{section}]", at(section))
        for key in parser[section]:
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{section}]", at(section, key))

    grid = _parse_grid(parser, at)
    scenarios = []
    for section in parser.sections():
        if section.startswith("scenario."):
            scenarios.append(_parse_scenario(section, parser[section], at, grid))
    if not scenarios:
        raise ConfigError("at least one [scenario.<name>] section is required")

    epsilons = "default"
    if parser.has_section("epsilons") and "values" in parser["epsilons"]:
        raw = parser["epsilons"]["values"].strip()
        where = at("epsilons", "values")
        if raw.lower() != "default":
            vals = _float_list(raw.strip("[]"), where)
            if not vals:
                raise ConfigError("the epsilon list must not be empty", where)
            if any(not (e > 0 and math.isfinite(e)) for e in vals):
                raise ConfigError("every epsilon must be positive and finite", where)
            epsilons = vals

    est = OptimizerOptions()
    if parser.has_section("estimator"):
        sec, kw = parser["estimator"], {}
        for key in ("max_iters", "restarts", "rng_seed"):
            if key in sec:
                kw[key] = _int(sec[key], at("estimator", key))
        for key in ("step_init", "tol"):
            if key in sec:
                kw[key] = _float(sec[key], at("estimator", key))
        try:
            est = OptimizerOptions(**kw)
        except ValueError as exc:
            raise ConfigError(str(exc), at("estimator")) from None

    out = OutputSpec()
    if parser.has_section("output"):
        sec = parser["output"]
        fmt = sec.get("format", "csv").strip().lower()
        if fmt not in ("csv", "jsonl"):
            raise ConfigError(f"unknown output format {fmt!r}", at("output", "format"))
        out = OutputSpec(sec.get("path") or None, fmt)

    return RunConfig(tuple(scenarios), grid, epsilons, est, out)


def _parse_grid(parser, at) -> GridSpec:
    if not parser.has_section("grid"):
        return GridSpec()
    sec, kw = parser["grid"], {}
    if "n" in sec:
        kw["n"] = _int(sec["n"], at("grid", "n"))
        if kw["n"] < MIN_NODES:
            raise ConfigError(f"grid needs at least {MIN_NODES} nodes", at("grid", "n"))
    if "spacing" in sec:
        sp = sec["spacing"].strip().lower()
        if sp != "auto" and sp not in SPACINGS:
            raise ConfigError(f"unknown spacing {sp!r}", at("grid", "spacing"))
        kw["spacing"] = sp
    for key in ("trunc_lo", "trunc_hi"):
        if key in sec:
            kw[key] = _float(sec[key], at("grid", key))
    return GridSpec(**kw)


def _parse_scenario(section, sec, at, grid: GridSpec) -> ScenarioSpec:
    name = section.split(".", 1)[1].strip()
    if not name:
        raise ConfigError("scenario sections need a name: [scenario.<name>]", at(section))
    for key in _SCENARIO_REQUIRED:
        if key not in sec:
            raise ConfigError(f"missing required key {key!r}", at(section))
    a, b = _float(sec["a"], at(section, "a")), _float(sec["b"], at(section, "b"))
    try:
        interval = Interval(a, b)
    except ValueError as exc:
        raise ConfigError(str(exc), at(section, "a")) from None
    p, q = _float(sec["p"], at(section, "p")), _float(sec["q"], at(section, "q"))
    try:
        exp = Exponents(p, q)
    except ValueError as exc:
        raise ConfigError(str(exc), at(section, "p")) from None
    v = parse_weight(sec["v"], at(section, "v"))
    w = parse_weight(sec["w"], at(section, "w"))
    for key, wt in (("v", v), ("w", w)):
        try:
            wt.check_domain(a, b)
        except ValueError as exc:
            raise ConfigError(str(exc), at(section, key)) from None
    ok = applicable(exp)
    raw = sec.get("conditions", "all").strip().lower()
    if raw == "all":
        requested = ok
    else:
        requested = tuple(x for x in raw.replace(",", " ").split())
        where = at(section, "conditions")
        for nm in requested:
            if nm not in CONDITION_NAMES:
                raise ConfigError(f"unknown condition {nm!r}", where)
            if nm not in ok:
                regime = "convex (p <= q)" if exp.convex else "non-convex (q < p)"
                raise ConfigError(f"{nm} does not apply to p={p!r}, q={q!r}: {regime} regime", where)
        if not requested:
            raise ConfigError("the conditions list must not be empty", where)
        requested = tuple(n for n in CONDITION_NAMES if n in requested)
    try:
        grid.build(interval)
    except ValueError as exc:
        raise ConfigError(f"grid does not fit scenario {name!r}: {exc}", at("grid") or at(section)) from None
    return ScenarioSpec(name, interval, v, w, exp, requested)


def render_config(cfg: RunConfig) -> str:
    """Write a config document that parse_config reads back to ``cfg``."""
    out = []
    for sc in cfg.scenarios:
        out += [f"[scenario.{sc.name}]",
                f"a = {sc.interval.a!r}", f"b = {sc.interval.b!r}",
                f"p = {sc.exp.p!r}", f"q = {sc.exp.q!r}",
                f"v = {render_weight(sc.v)}", f"w = {render_weight(sc.w)}",
                f"conditions = {', '.join(sc.conditions)}", ""]
    g = cfg.grid
    out += ["[grid]", f"n = {g.n}", f"spacing = {g.spacing}"]
    out += [f"{k} = {getattr(g, k)!r}" for k in ("trunc_lo", "trunc_hi") if getattr(g, k) is not None]
    eps = "default" if cfg.epsilons == "default" else ", ".join(map(repr, cfg.epsilons))
    e = cfg.estimator
    out += ["", "[epsilons]", f"values = {eps}", "",
            "[estimator]", f"max_iters = {e.max_iters}", f"restarts = {e.restarts}",
            f"step_init = {e.step_init!r}", f"tol = {e.tol!r}", f"rng_seed = {e.rng_seed}", "",
            "[output]"]
    if cfg.output.path:
        out.append(f"path = {cfg.output.path}")
    out.append(f"format = {cfg.output.format}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- evaluation

def _guard(fn):
    try:
        val = fn()
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError):
        return FAILED
    if isinstance(val, float) and math.isnan(val):
        return FAILED
    return val


def _scenario_cells(sc: ScenarioSpec, grid: Grid, cfg: RunConfig) -> dict:
    s, want = sc.scenario(), set(sc.conditions)
    cells = {}
    if "a_ps" in want:
        cells["A_PS"] = _guard(lambda: cond.a_ps(s, grid).value)
    if "muckenhoupt" in want:
        cells["muckenhoupt"] = _guard(lambda: cond.muckenhoupt(s, grid).value)
    if "mazya_rosin" in want:
        cells["mazya_rosin"] = _guard(lambda: cond.mazya_rosin(s, grid).value)
    if "c_hat" in want:
        eps = cfg.epsilons_for(s.exp)
        cells["C_hat"] = _guard(lambda: estimate_best_constant(s, grid, cfg.estimator, eps).value)
    return cells


def _eps_cells(sc: ScenarioSpec, grid: Grid, eps: float) -> dict:
    s, want = sc.scenario(), set(sc.conditions)
    cells = {}
    if "a_eps" in want:
        cells["A_eps"] = _guard(lambda: cond.a_eps(s, eps, grid).value)
    if "b1_eps" in want:
        cells["B1_eps"] = _guard(lambda: cond.b1_eps(s, eps, grid).value)
    if "b2_eps" in want:
        cells["B2_eps"] = _guard(lambda: cond.b2_eps(s, eps, grid).value)
    if "residual_b1b2" in want:
        cells["residual_b1b2"] = _guard(lambda: cond.b1_b2_identity_residual(s, eps, grid))
    if "witness_lb" in want:
        cells["witness_lb"] = _guard(lambda: witness_lower_bound(s, eps, grid))
    return cells


def thread_count() -> int:
    raw = os.environ.get("HARDY_GAUGE_THREADS")
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"HARDY_GAUGE_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"HARDY_GAUGE_THREADS must be a positive integer, got {raw!r}")
    return n


def run_analyze(cfg: RunConfig, threads: int | None = None) -> list[dict]:
    """One row per scenario and epsilon, sorted by (scenario_id, epsilon)."""
    threads = threads or thread_count()
    jobs = []
    for sc in cfg.scenarios:
        grid = cfg.grid.build(sc.interval)
        jobs.append((sc, grid, cfg.epsilons_for(sc.exp)))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = []
        for sc, grid, eps_list in jobs:
            head = pool.submit(_scenario_cells, sc, grid, cfg)
            per_eps = [pool.submit(_eps_cells, sc, grid, e) for e in eps_list]
            futures.append((sc, grid, eps_list, head, per_eps))
        rows = []
        for sc, grid, eps_list, head, per_eps in futures:
            shared = head.result()
            for e, fut in zip(eps_list, per_eps):
                row = dict.fromkeys(HEADER)
                row.update(scenario_id=sc.name, p=sc.exp.p, q=sc.exp.q, epsilon=e, grid_n=grid.n)
                row.update(shared)
                row.update(fut.result())
                rows.append(row)
    rows.sort(key=lambda r: (r["scenario_id"], r["epsilon"]))
    return rows


def has_failures(rows) -> bool:
    return any(val == FAILED for row in rows for val in row.values())


def _cell(val) -> str:
    if val is None:
        return ""
    if isinstance(val, str):
        return val
    if isinstance(val, (int, np.integer)) and not isinstance(val, bool):
        return str(int(val))
    x = float(val)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _json_cell(val):
    if val is None or isinstance(val, str):
        return val
    if isinstance(val, (int, np.integer)):
        return int(val)
    x = float(val)
    return _cell(x) if math.isinf(x) else x


def format_report(rows, fmt: str = "csv") -> str:
    buf = io.StringIO()
    if fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(HEADER)
        for row in rows:
            writer.writerow([_cell(row[k]) for k in HEADER])
    elif fmt == "jsonl":
        for row in rows:
            buf.write(json.dumps({k: _json_cell(row[k]) for k in HEADER}) + "\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return buf.getvalue()


def emit_report(rows, fmt: str = "csv", path: str | None = None):
    """Write rows as CSV or JSON lines to ``path`` (stdout when None)."""
    if not rows:
        raise ValueError("no rows to report")
    text = format_report(rows, fmt)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------- entry point

def _load(path: str) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hardy-gauge", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    an = sub.add_parser("analyze", help="evaluate every applicable condition over the epsilon sweep")
    an.add_argument("--config", required=True)
    an.add_argument("--out")
    an.add_argument("--format", choices=("csv", "jsonl"))
    sw = sub.add_parser("sweep-eps", help="analyze over a geometric epsilon grid")
    sw.add_argument("--config", required=True)
    sw.add_argument("--eps-min", type=float, required=True)
    sw.add_argument("--eps-max", type=float, required=True)
    sw.add_argument("--eps-steps", type=int, required=True)
    sw.add_argument("--out")
    sw.add_argument("--format", choices=("csv", "jsonl"))
    es = sub.add_parser("estimate", help="best-constant estimate for one scenario")
    es.add_argument("--config", required=True)
    es.add_argument("--scenario", required=True)
    return ap


def _sweep_values(lo: float, hi: float, steps: int) -> tuple:
    if not (0 < lo <= hi and math.isfinite(hi)) or steps < 1:
        raise ConfigError("need 0 < eps-min <= eps-max < inf and eps-steps >= 1")
    if steps == 1:
        return (lo,)
    return tuple(float(x) for x in np.geomspace(lo, hi, steps))


def _estimate(cfg: RunConfig, name: str) -> dict:
    match = [sc for sc in cfg.scenarios if sc.name == name]
    if not match:
        raise ConfigError(f"no scenario named {name!r}")
    sc = match[0]
    s, grid = sc.scenario(), cfg.grid.build(sc.interval)
    est = estimate_best_constant(s, grid, cfg.estimator, cfg.epsilons_for(s.exp))
    return {"scenario_id": name, "p": s.exp.p, "q": s.exp.q, "grid_n": grid.n,
            "C_hat": _json_cell(est.value), "spectral_crosscheck": est.spectral_crosscheck,
            "witness_lb": _json_cell(est.witness_lb), "iterations": est.iterations,
            "restarts_used": est.restarts_used, "residual": _json_cell(est.residual),
            "converged": est.converged}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args.config)
        if args.command == "estimate":
            print(json.dumps(_estimate(cfg, args.scenario)))
            return EXIT_OK
        if args.command == "sweep-eps":
            cfg = replace(cfg, epsilons=_sweep_values(args.eps_min, args.eps_max, args.eps_steps))
        fmt = args.format or cfg.output.format
        path = args.out or cfg.output.path
        rows = run_analyze(cfg)
        emit_report(rows, fmt, path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if has_failures(rows):
        print("some cells failed; see 'failed' entries in the report", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
