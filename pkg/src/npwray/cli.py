"""Batch front-end: ``npwray <subcommand> --config FILE``.

Configuration is an INI file. A ``[scenario]`` section holds the shared
settings (frequency, grid, methods) and each subcommand reads its own
section. ``npwray run FILE`` runs the subcommand named by ``command`` in
``[scenario]``. All relative paths in a config resolve against the config
file's directory; outputs go to ``--out`` (default: current directory).

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O or input-format error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import gc
import json
import math
import os
import platform
import statistics
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import raytracer, solver
from .errors import ConfigError, GridFormatError, NPWError, NumericalFailure
from .field import (
    ComplexRefractivity,
    RefractivityGrid2D,
    SCENARIOS,
    build_from_weather,
    default_coefficients_path,
    grid_from_stations,
    load_coefficients,
    load_grid,
    read_station_csv,
    read_weather_csv,
    save_grid,
    synthetic_scenario,
)
from .raytracer import ALL_METHODS, MethodKind

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

SINGLE_HEADER = ["theta_deg", "kappa2", "method", "N2", "K2", "alpha_t_deg",
                 "K2cos_alpha", "ratio_to_kappa2"]
LINK_HEADER = ["theta_inc_deg", "method", "loss_db", "boresight_deg", "iterations", "error"]
TRACE_HEADER = ["seg", "x0_km", "h0_km", "x1_km", "h1_km", "N", "K", "theta_deg",
                "psi_deg", "seg_loss_db"]
KAPPA_HEADER = ["i", "j", "x0_km", "x1_km", "h0_km", "h1_km", "n", "kappa"]

# solver names accepted by the single-interface sweep
INTERFACE_METHODS = ("stable", "naive", "naive_extended", "oracle")

BENCH_WARMUP = 100
BENCH_REPS = 1000


def fmt(v) -> str:
    """Shortest round-trip text for floats; plain ``str`` otherwise."""
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def parse_float_list(text: str) -> List[float]:
    """Parse ``"0, 30, 60"``, ``"linspace:a:b:n"`` or ``"logspace:a:b:n"``.

    ``logspace`` bounds are the values themselves, not exponents. An empty
    string gives an empty list.
    """
    text = text.strip()
    if not text:
        return []
    if text.startswith(("linspace:", "logspace:")):
        kind, *parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"{kind} needs start:stop:count")
        a, b, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 0:
            raise ValueError("count must be >= 0")
        if kind == "linspace":
            return [float(v) for v in np.linspace(a, b, count)]
        if a <= 0 or b <= 0:
            raise ValueError("logspace bounds must be positive")
        return [float(v) for v in np.geomspace(a, b, count)]
    return [float(t) for t in text.replace(",", " ").split()]


class Section:
    """Typed accessor over one INI section with field-level error messages."""

    def __init__(self, parser: configparser.ConfigParser, name: str, source: str):
        self.name = name
        self.source = source
        self._sec = parser[name] if parser.has_section(name) else {}

    def _fail(self, key, msg):
        raise ConfigError(f"{self.source}: [{self.name}] {key}: {msg}")

    def raw(self, key, default=None):
        v = self._sec.get(key)
        if v is None:
            if default is None:
                self._fail(key, "missing required key")
            return default
        return v

    def has(self, key) -> bool:
        return key in self._sec

    def float(self, key, default=None) -> float:
        v = self.raw(key, None if default is None else repr(default))
        try:
            out = float(v)
        except ValueError:
            self._fail(key, f"not a number: {v!r}")
        if not math.isfinite(out):
            self._fail(key, f"not finite: {v!r}")
        return out

    def int(self, key, default=None) -> int:
        v = self.raw(key, None if default is None else str(default))
        try:
            return int(v)
        except ValueError:
            self._fail(key, f"not an integer: {v!r}")

    def bool(self, key, default: bool) -> bool:
        v = self.raw(key, "yes" if default else "no").strip().lower()
        if v in ("1", "yes", "true", "on"):
            return True
        if v in ("0", "no", "false", "off"):
            return False
        self._fail(key, f"not a boolean: {v!r}")

    def floats(self, key, default=None) -> List[float]:
        v = self.raw(key, default)
        try:
            return parse_float_list(v)
        except ValueError as exc:
            self._fail(key, str(exc))


@dataclass
class ScenarioConfig:
    """Shared scenario settings plus access to per-command sections."""

    path: Path
    parser: configparser.ConfigParser
    frequency: float = raytracer.DEFAULT_FREQ
    grid_spec: str = ""
    methods: List[MethodKind] = field(default_factory=lambda: list(ALL_METHODS))
    command: Optional[str] = None

    @property
    def base(self) -> Path:
        return self.path.parent

    def section(self, name: str) -> Section:
        return Section(self.parser, name, str(self.path))

    def resolve(self, p: str) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base / p

    def grid(self) -> RefractivityGrid2D:
        """Load or synthesize the scenario grid.

        ``grid = synthetic:<kind>`` builds a fixture, with keyword parameters
        taken from a ``[grid]`` section; anything else is a grid file path.
        """
        spec = self.grid_spec
        if not spec:
            raise ConfigError(f"{self.path}: [scenario] grid: missing required key")
        if spec.startswith("synthetic:"):
            kind = spec.split(":", 1)[1].strip()
            if kind not in SCENARIOS:
                raise ConfigError(f"{self.path}: [scenario] grid: unknown synthetic "
                                  f"scenario {kind!r}")
            params = {}
            if self.parser.has_section("grid"):
                sec = self.section("grid")
                for key in self.parser["grid"]:
                    vals = sec.floats(key)
                    params[key] = vals[0] if len(vals) == 1 else tuple(vals)
            try:
                return synthetic_scenario(kind, **params)
            except ValueError as exc:
                raise ConfigError(f"{self.path}: [grid]: {exc}") from None
        return load_grid(self.resolve(spec))


def load_config(path, methods_override: Optional[str] = None) -> ScenarioConfig:
    """Parse an INI scenario file into a :class:`ScenarioConfig`."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = ScenarioConfig(path, parser)
    sec = cfg.section("scenario")
    cfg.frequency = sec.float("frequency_ghz", raytracer.DEFAULT_FREQ / 1e9) * 1e9
    if cfg.frequency <= 0:
        raise ConfigError(f"{path}: [scenario] frequency_ghz: must be > 0")
    cfg.grid_spec = sec.raw("grid", "").strip()
    cfg.command = sec.raw("command", "").strip() or None
    text = methods_override or sec.raw("methods", "")
    if text.strip():
        try:
            cfg.methods = [MethodKind.parse(t.strip()) for t in text.split(",") if t.strip()]
        except ValueError as exc:
            raise ConfigError(f"{path}: methods: {exc}") from None
    return cfg


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def write_csv(path: Path, header: Sequence[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# single-interface
# ---------------------------------------------------------------------------


def _incident(method: str, m1: ComplexRefractivity, theta: float, psi: float):
    if method == "stable":
        return solver.medium1_apparent(m1, theta, psi)
    if method == "naive":
        return solver.medium1_apparent_naive(m1, theta, psi, "working")
    if method == "naive_extended":
        return solver.medium1_apparent_naive(m1, theta, psi, "extended")
    return solver.medium1_oracle_hp(m1, theta, psi)


def single_interface_rows(m1: ComplexRefractivity, n2: float, kappa2s: Sequence[float],
                          thetas_deg: Sequence[float], alpha_deg: float,
                          methods: Sequence[str]):
    """Transmitted-wave rows for every (theta, kappa2, method).

    Failed evaluations produce ``nan`` fields so the sweep stays rectangular.
    """
    alpha = math.radians(alpha_deg)
    for th_deg in thetas_deg:
        theta = math.radians(th_deg)
        for k2 in kappa2s:
            m2 = ComplexRefractivity(n2, k2)
            for method in methods:
                try:
                    inc = _incident(method, m1, theta, theta - alpha)
                    t = solver.SOLVERS[method](inc.Ns, inc.Ks, m2)
                    keff = solver.effective_attenuation(t)
                    vals = (t.N, t.K, math.degrees(t.alpha), keff,
                            keff / k2 if k2 > 0 else math.nan)
                except (NumericalFailure, ValueError, ZeroDivisionError):
                    vals = (math.nan,) * 5
                yield (th_deg, k2, method) + vals


def cmd_single_interface(cfg: ScenarioConfig, out: Path, threads: int = 1) -> Dict[str, Path]:
    sec = cfg.section("single-interface")
    m1 = ComplexRefractivity(sec.float("n1"), sec.float("kappa1"))
    n2 = sec.float("n2")
    kappa2s = sec.floats("kappa2")
    thetas = sec.floats("theta_deg")
    alpha = sec.float("alpha_deg", 0.0)
    methods = [m.strip() for m in sec.raw("solvers", ",".join(INTERFACE_METHODS)).split(",")
               if m.strip()]
    bad = [m for m in methods if m not in INTERFACE_METHODS]
    if bad:
        raise ConfigError(f"{cfg.path}: [single-interface] solvers: unknown {bad}; "
                          f"choose from {list(INTERFACE_METHODS)}")
    if any(k < 0 for k in kappa2s):
        raise ConfigError(f"{cfg.path}: [single-interface] kappa2: must be >= 0")
    rows = single_interface_rows(m1, n2, kappa2s, thetas, alpha, methods)
    name = sec.raw("output", "single_interface.csv")
    return {"csv": write_csv(out / name, SINGLE_HEADER, rows)}


# ---------------------------------------------------------------------------
# link
# ---------------------------------------------------------------------------


def link_summary(results: Sequence[raytracer.LinkResult]) -> dict:
    """Max loss (relative) and boresight (deg) deviations between methods."""
    by_theta: Dict[float, Dict[str, raytracer.LinkResult]] = {}
    for r in results:
        if r.ok:
            by_theta.setdefault(r.theta_inc, {})[r.method.value] = r
    pairs = {}
    names = sorted({r.method.value for r in results})
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            dl, db = [], []
            for group in by_theta.values():
                if a in group and b in group:
                    la, lb = group[a].total_loss_db, group[b].total_loss_db
                    dl.append(abs(la - lb) / max(abs(la), abs(lb), 1e-300))
                    db.append(abs(group[a].boresight_error - group[b].boresight_error))
            pairs[f"{a}-{b}"] = {
                "compared": len(dl),
                "max_loss_rel_dev": max(dl) if dl else None,
                "max_boresight_dev_deg": max(db) if db else None,
            }
    return {
        "rows": len(results),
        "failures": sum(1 for r in results if not r.ok),
        "pairs": pairs,
    }


def cmd_link(cfg: ScenarioConfig, out: Path, threads: int = 1) -> Dict[str, Path]:
    sec = cfg.section("link")
    grid = cfg.grid()
    thetas = sec.floats("theta_deg")
    mode = sec.raw("boresight_mode", "launch").strip()
    if mode not in ("launch", "arrival"):
        raise ConfigError(f"{cfg.path}: [link] boresight_mode: must be launch or arrival")
    results = raytracer.link_sweep(
        grid, (sec.float("receiver_x_km", 0.0), 0.0), cfg.frequency, thetas, cfg.methods,
        sat_h=sec.float("satellite_h_km", float(grid.h_edges[-1])),
        tol_m=sec.float("tol_m", 1.0), mode=mode,
        include_tau=sec.bool("include_tau", True), threads=threads,
    )
    rows = [(r.theta_inc, r.method.value, r.total_loss_db, r.boresight_error,
             r.iterations, r.error or "") for r in results]
    stem = sec.raw("output", "link")
    paths = {
        "csv": write_csv(out / f"{stem}.csv", LINK_HEADER, rows),
        "json": write_json(out / f"{stem}_summary.json", link_summary(results)),
    }
    if results and not any(r.ok for r in results):
        raise NumericalFailure("every link evaluation failed; see the error column")
    return paths


# ---------------------------------------------------------------------------
# trace
# ---------------------------------------------------------------------------


def path_rows(path: raytracer.RayPath):
    for k, s in enumerate(path.segments):
        yield (k, s.start[0], s.start[1], s.end[0], s.end[1], s.wave.N, s.wave.K,
               math.degrees(s.wave.theta), math.degrees(s.wave.psi), s.segment_loss_db)


def kappa_rows(grid: RefractivityGrid2D):
    xe, he = grid.x_edges, grid.h_edges
    for i in range(grid.shape[0]):
        for j in range(grid.shape[1]):
            yield (i, j, float(xe[i]), float(xe[i + 1]), float(he[j]), float(he[j + 1]),
                   float(grid.n[i, j]), float(grid.kappa[i, j]))


def cmd_trace(cfg: ScenarioConfig, out: Path, threads: int = 1) -> Dict[str, Path]:
    """One CSV per (method, launch angle) plus a dump of the cell field."""
    sec = cfg.section("trace")
    grid = cfg.grid()
    start = (sec.float("satellite_x_km", 0.0),
             sec.float("satellite_h_km", float(grid.h_edges[-1])))
    thetas = sec.floats("launch_deg")
    include_tau = sec.bool("include_tau", True)
    stem = sec.raw("output", "trace")
    paths = {"kappa": write_csv(out / f"{stem}_field.csv", KAPPA_HEADER, kappa_rows(grid))}
    for method in cfg.methods:
        for k, th in enumerate(thetas):
            p = raytracer.trace_ray(grid, start, math.radians(th), cfg.frequency, method,
                                    include_tau=include_tau)
            name = f"{stem}_{method.value}_{k:03d}.csv"
            paths[name] = write_csv(out / name, TRACE_HEADER, path_rows(p))
    return paths


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def cpu_model() -> str:
    try:
        with open("/proc/cpuinfo", encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("model name"):
                    return line.split(":", 1)[1].strip()
    except OSError:
        pass
    return platform.processor() or platform.machine() or "unknown"


def _time_traces(grid, start, theta, f, methods, reps, warmup):
    """Per-rep wall times (ns) for each method, interleaved rep by rep.

    Interleaving spreads slow drift of a shared CPU evenly over the methods,
    so their ratio stays meaningful.
    """
    run = raytracer.trace_ray
    for m in methods:
        for _ in range(warmup):
            run(grid, start, theta, f, m)
    samples = {m: [] for m in methods}
    clock = time.perf_counter_ns
    # as timeit does: collector pauses would land on whichever method runs then
    gc_was_on = gc.isenabled()
    gc.disable()
    try:
        for _ in range(reps):
            for m in methods:
                t0 = clock()
                run(grid, start, theta, f, m)
                samples[m].append(clock() - t0)
    finally:
        if gc_was_on:
            gc.enable()
    return samples


def bench_method(grid, start, theta, f, method, samples_ns):
    """Summarise the timing samples of one method."""
    ms = [s * 1e-6 for s in samples_ns]
    reps = len(ms)
    path = raytracer.trace_ray(grid, start, theta, f, method)
    n_if = sum(1 for s in path.segments if s.interface_tau_db != 0.0)
    mean = math.fsum(ms) / reps
    return {
        "mean_ms": mean,
        "stddev_ms": statistics.stdev(ms) if reps > 1 else 0.0,
        "repetitions": reps,
        "breakdown": {
            "segments": len(path.segments),
            "interfaces": n_if,
            "mean_ms_per_segment": mean / len(path.segments),
        },
    }


def run_bench(grid, start, theta, f, methods, reps=BENCH_REPS, warmup=BENCH_WARMUP) -> dict:
    """Build a timing report for ``methods`` on one identical ray workload."""
    if reps < 100:
        raise ConfigError("bench repetitions must be >= 100")
    report = {"cpu": cpu_model(), "python": platform.python_version(),
              "warmup": warmup, "repetitions": reps, "methods": {}, "warnings": []}
    samples = _time_traces(grid, start, theta, f, methods, reps, warmup)
    for m in methods:
        r = bench_method(grid, start, theta, f, m, samples[m])
        report["methods"][m.value] = r
        if r["mean_ms"] < 1e-4:
            report["warnings"].append(f"{m.value}: mean below 100 ns, clock resolution "
                                      "may dominate")
    t = report["methods"]
    ratios = {}
    if MethodKind.STABLE.value in t and MethodKind.UNIFORM.value in t:
        ratios["stable_over_uniform"] = (t[MethodKind.STABLE.value]["mean_ms"]
                                         / t[MethodKind.UNIFORM.value]["mean_ms"])
    if MethodKind.NAIVE_EXTENDED.value in t and MethodKind.STABLE.value in t:
        ratios["extended_over_stable"] = (t[MethodKind.NAIVE_EXTENDED.value]["mean_ms"]
                                          / t[MethodKind.STABLE.value]["mean_ms"])
    report["ratios"] = ratios
    return report


def bench_table(report: dict) -> str:
    lines = [f"{'method':<14} {'mean_ms':>10} {'stddev_ms':>10} {'reps':>6}"]
    for name, r in report["methods"].items():
        lines.append(f"{name:<14} {r['mean_ms']:>10.4f} {r['stddev_ms']:>10.4f} "
                     f"{r['repetitions']:>6d}")
    for k, v in report["ratios"].items():
        lines.append(f"{k}: {v:.3f}")
    lines.append(f"cpu: {report['cpu']}")
    lines.extend(f"warning: {w}" for w in report["warnings"])
    return "\n".join(lines)


def cmd_bench(cfg: ScenarioConfig, out: Path, threads: int = 1) -> Dict[str, Path]:
    sec = cfg.section("bench")
    grid = cfg.grid()
    start = (sec.float("satellite_x_km", 0.0),
             sec.float("satellite_h_km", float(grid.h_edges[-1])))
    reps = sec.int("repetitions", BENCH_REPS)
    if reps < 100:
        raise ConfigError(f"{cfg.path}: [bench] repetitions: must be >= 100")
    report = run_bench(grid, start, math.radians(sec.float("launch_deg", 60.0)),
                       cfg.frequency, cfg.methods, reps, sec.int("warmup", BENCH_WARMUP))
    print(bench_table(report))
    return {"json": write_json(out / sec.raw("output", "bench.json"), report)}


# ---------------------------------------------------------------------------
# field build / inspect
# ---------------------------------------------------------------------------


def build_field(cfg: ScenarioConfig) -> RefractivityGrid2D:
    sec = cfg.section("field")
    source = sec.raw("source").strip()
    x_edges = sec.floats("x_edges_km")
    h_edges = sec.floats("h_edges_km")
    data = cfg.resolve(sec.raw("input"))
    try:
        if source == "weather":
            coeff_path = sec.raw("coefficients", "")
            coeffs = load_coefficients(cfg.resolve(coeff_path) if coeff_path
                                       else default_coefficients_path())
            rain_h = sec.float("rain_height_km") if sec.has("rain_height_km") else None
            return build_from_weather(read_weather_csv(data), coeffs, h_edges, x_edges,
                                      cfg.frequency, rain_h)
        if source == "stations":
            return grid_from_stations(read_station_csv(data), x_edges, h_edges,
                                      sec.float("idw_power", 2.0))
    except GridFormatError:
        raise
    except ValueError as exc:
        raise GridFormatError(f"{data}: {exc}") from None
    raise ConfigError(f"{cfg.path}: [field] source: must be weather or stations")


def field_stats(grid: RefractivityGrid2D, bins: int = 10) -> dict:
    """Range and histogram of ``n`` and ``kappa`` (kappa binned in log10)."""
    out = {"shape": list(grid.shape)}
    for name, arr in (("n", grid.n), ("kappa", grid.kappa)):
        vals = np.asarray(arr, float).ravel()
        entry = {"min": float(vals.min()), "max": float(vals.max())}
        if name == "kappa":
            pos = vals[vals > 0]
            entry["zero_cells"] = int(vals.size - pos.size)
            data = np.log10(pos) if pos.size else pos
            entry["histogram_scale"] = "log10"
        else:
            data = vals
        if data.size:
            counts, edges = np.histogram(data, bins=bins)
            entry["histogram"] = {"edges": [float(e) for e in edges],
                                  "counts": [int(c) for c in counts]}
        out[name] = entry
    return out


def stats_text(stats: dict) -> str:
    lines = [f"cells: {stats['shape'][0]} x {stats['shape'][1]}"]
    for name in ("n", "kappa"):
        s = stats[name]
        lines.append(f"{name}: min {s['min']!r} max {s['max']!r}")
        h = s.get("histogram")
        if h:
            label = "log10 " if name == "kappa" else ""
            for lo, hi, c in zip(h["edges"], h["edges"][1:], h["counts"]):
                lines.append(f"  {label}[{lo:.6g}, {hi:.6g}) {c}")
    return "\n".join(lines)


def cmd_field_build(cfg: ScenarioConfig, out: Path, threads: int = 1) -> Dict[str, Path]:
    grid = build_field(cfg)
    path = out / cfg.section("field").raw("output", "field.npwgrid")
    path.parent.mkdir(parents=True, exist_ok=True)
    save_grid(grid, path)
    return {"grid": path}


def cmd_field_inspect(cfg: ScenarioConfig, out: Path, threads: int = 1) -> Dict[str, Path]:
    sec = cfg.section("field")
    grid = load_grid(cfg.resolve(sec.raw("grid"))) if sec.has("grid") else cfg.grid()
    stats = field_stats(grid, sec.int("bins", 10))
    print(stats_text(stats))
    return {"json": write_json(out / sec.raw("stats_output", "field_stats.json"), stats)}


COMMANDS = {
    "single-interface": cmd_single_interface,
    "link": cmd_link,
    "trace": cmd_trace,
    "bench": cmd_bench,
    "field build": cmd_field_build,
    "field inspect": cmd_field_inspect,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the flags with suppressed defaults so values given
    # before the subcommand are not overwritten
    def d(v):
        return argparse.SUPPRESS if suppress else v

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=d(None), help="scenario INI file")
    common.add_argument("--out", type=Path, default=d(Path(".")), help="output directory")
    common.add_argument("--threads", type=int, default=d(1),
                        help="worker threads for sweeps")
    common.add_argument("--method", default=d(None),
                        help="comma-separated methods, overrides the config")
    common.add_argument("--seed", type=int, default=d(0),
                        help="seed for randomized sweeps (unused by fixed sweeps)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    p = argparse.ArgumentParser(prog="npwray", parents=[_global_flags(suppress=False)],
                                description="Non-uniform plane wave ray tracing.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("single-interface", "link", "trace", "bench"):
        sub.add_parser(name, parents=[common])
    fld = sub.add_parser("field", parents=[common])
    fld.add_argument("action", choices=["build", "inspect"])
    run = sub.add_parser("run", parents=[common],
                         help="run the command named in the config's [scenario] section")
    run.add_argument("run_config", type=Path)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.command == "run":
            cfg = load_config(args.run_config, args.method)
            name = cfg.command
            if name not in COMMANDS:
                raise ConfigError(f"{cfg.path}: [scenario] command: expected one of "
                                  f"{sorted(COMMANDS)}, got {name!r}")
        else:
            if args.config is None:
                raise ConfigError("--config is required")
            cfg = load_config(args.config, args.method)
            name = args.command if args.command != "field" else f"field {args.action}"
        paths = COMMANDS[name](cfg, args.out, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, GridFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NPWError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for key in sorted(paths):
        print(f"wrote {os.fspath(paths[key])}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
