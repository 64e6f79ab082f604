"""Sweep orchestration and file outputs.

Sweep files are TOML.  Scalar ``SystemConfig`` fields and the sweep options
(``replicates``, ``base_seed``, ``out``, ``workers``) sit at the top level;
``topology`` and ``policy`` are either a kind string or a table with a
``kind`` key plus parameters; an optional ``[axes]`` table lists values to
sweep.  Example::

    N = 100
    T = 5000
    replicates = 20
    base_seed = 7

    [topology]
    kind = "watts_strogatz"
    k = 4
    beta = 0.1

    [axes]
    N = [10, 100, 1000]
    policy = ["baseline", "signal"]

Sweep points are the cross product of the axes, enumerated with ``N``
outermost, then ``topology``, ``policy``, ``p_err`` and ``lambda_min``.
Replicate r of every point runs with seed ``derive_seed(base_seed, r)``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
import logging
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .config import (
    ConfigError,
    SystemConfig,
    config_to_dict,
    make_policy,
    make_topology,
    validate_config,
)
from .engine import run
from .metrics import summarize
from .rng import derive_seed
from .state import Trace

__all__ = [
    "SweepSpec",
    "SweepResult",
    "AXIS_ORDER",
    "parse_config",
    "parse_config_text",
    "run_sweep",
    "run_replicate",
    "export_timeseries",
    "load_timeseries",
    "export_summary",
    "export_state_raster",
    "read_ppm",
    "provenance",
]

log = logging.getLogger(__name__)

AXIS_ORDER = ("N", "topology", "policy", "p_err", "lambda_min")
SWEEP_KEYS = {"replicates": 1, "base_seed": 0, "out": None, "workers": 1}
METRICS = ("c_avg", "P_util", "fairness", "n_mean", "n_std", "n_cv")
POINT_COLUMNS = ("N", "topology", "policy", "p_err", "lambda_min")

_SCALAR_FIELDS = {f.name for f in dataclasses.fields(SystemConfig)} - {"topology", "policy", "seed"}


@dataclass(frozen=True)
class SweepSpec:
    base: SystemConfig
    axes: dict = field(default_factory=dict)
    replicates: int = 1
    base_seed: int = 0
    out: Path | None = None
    workers: int = 1

    def points(self) -> list:
        """Configs of every sweep point, in enumeration order."""
        keys = [k for k in AXIS_ORDER if k in self.axes]
        values = [self.axes[k] for k in keys]
        return [self.base.replace(**dict(zip(keys, combo))) for combo in itertools.product(*values)]

    def seeds(self) -> list:
        return [derive_seed(self.base_seed, r) for r in range(self.replicates)]

    def describe(self) -> dict:
        return {
            "base": config_to_dict(self.base),
            "axes": {k: [_axis_label(v) for v in vs] for k, vs in self.axes.items()},
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "seeds": self.seeds(),
            "version": __version__,
        }


def _axis_label(value):
    if dataclasses.is_dataclass(value):
        return {"kind": value.name, **dataclasses.asdict(value)}
    return value


def _line_of(text: str, key: str) -> str:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=", re.MULTILINE)
    m = pattern.search(text)
    if not m:
        return ""
    return f" (line {text.count(chr(10), 0, m.start()) + 1})"


def _build_component(value, base, factory, what: str, text: str):
    if isinstance(value, str):
        if base is not None and base.name == value:
            return base
        return factory(value)
    if isinstance(value, dict):
        value = dict(value)
        kind = value.pop("kind", None)
        if kind is None:
            raise ConfigError(f"{what} table needs a 'kind' key{_line_of(text, what)}")
        return factory(kind, **value)
    raise ConfigError(f"{what} must be a string or table, got {value!r}{_line_of(text, what)}")


def parse_config_text(text: str, source: str = "<string>") -> SweepSpec:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: parse error: {exc}") from None

    errors = []
    sweep_opts = dict(SWEEP_KEYS)
    scalars = {}
    for key, value in data.items():
        if key in SWEEP_KEYS:
            sweep_opts[key] = value
        elif key in _SCALAR_FIELDS:
            scalars[key] = value
        elif key == "seed":
            sweep_opts["base_seed"] = value
        elif key not in ("topology", "policy", "axes"):
            errors.append(f"{source}: unknown key {key!r}{_line_of(text, key)}")
    axes_raw = data.get("axes", {})
    if not isinstance(axes_raw, dict):
        errors.append(f"{source}: 'axes' must be a table")
        axes_raw = {}
    for key in axes_raw:
        if key not in AXIS_ORDER:
            errors.append(f"{source}: unknown axis {key!r}{_line_of(text, key)} (allowed: {', '.join(AXIS_ORDER)})")
    if errors:
        raise ConfigError(errors)

    try:
        topology = _build_component(data.get("topology", "watts_strogatz"), None, make_topology, "topology", text)
        policy = _build_component(data.get("policy", "baseline"), None, make_policy, "policy", text)
        base = SystemConfig(topology=topology, policy=policy, **scalars)
        axes = {}
        for key in AXIS_ORDER:
            if key not in axes_raw:
                continue
            values = axes_raw[key]
            if not isinstance(values, list) or not values:
                raise ConfigError(f"{source}: axis {key!r} must be a non-empty list{_line_of(text, key)}")
            if key == "topology":
                values = [_build_component(v, topology, make_topology, "topology", text) for v in values]
            elif key == "policy":
                values = [_build_component(v, policy, make_policy, "policy", text) for v in values]
            axes[key] = list(values)
    except ConfigError as exc:
        raise ConfigError([m if m.startswith(source) else f"{source}: {m}" for m in exc.errors]) from None

    reps = sweep_opts["replicates"]
    if not isinstance(reps, int) or reps < 1:
        errors.append(f"{source}: replicates must be a positive integer, got {reps!r}")
    seed = sweep_opts["base_seed"]
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        errors.append(f"{source}: base_seed must be an unsigned 64-bit integer, got {seed!r}")
    workers = sweep_opts["workers"]
    if not isinstance(workers, int) or workers < 1:
        errors.append(f"{source}: workers must be a positive integer, got {workers!r}")
    spec = SweepSpec(
        base=base,
        axes=axes,
        replicates=reps,
        base_seed=seed,
        out=Path(sweep_opts["out"]) if sweep_opts["out"] else None,
        workers=workers,
    )
    if not errors:
        for i, cfg in enumerate(spec.points()):
            for msg in validate_config(cfg).errors:
                errors.append(f"{source}: sweep point {i}: {msg}")
    if errors:
        raise ConfigError(errors)
    return spec


def parse_config(path) -> SweepSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found") from None
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc}") from None
    return parse_config_text(text, str(path))


def _point_fields(cfg: SystemConfig) -> dict:
    return {
        "N": cfg.N,
        "topology": cfg.topology.name,
        "policy": cfg.policy.name,
        "p_err": cfg.p_err,
        "lambda_min": cfg.lambda_min,
    }


def run_replicate(cfg: SystemConfig) -> dict:
    """Run one configuration and reduce it to a summary row."""
    return summarize(run(cfg)).as_row()


def _task(args):
    point, rep, cfg = args
    try:
        return point, rep, run_replicate(cfg), None
    except Exception as exc:  # recorded per point; the sweep continues
        return point, rep, None, f"{type(exc).__name__}: {exc}"


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list
    aggregates: list
    failures: list

    @property
    def exit_code(self) -> int:
        return 2 if self.failures else 0


def _aggregate(spec: SweepSpec, rows: list) -> list:
    out = []
    for i, cfg in enumerate(spec.points()):
        mine = [r for r in rows if r["point"] == i]
        agg = {"point": i, **_point_fields(cfg), "replicates": len(mine)}
        for m in METRICS:
            vals = np.array([r[m] for r in mine], dtype=float)
            agg[f"{m}_mean"] = float(vals.mean()) if vals.size else float("nan")
            agg[f"{m}_std"] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        out.append(agg)
    return out


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Run every point x replicate; results are ordered by (point, replicate)."""
    workers = workers or spec.workers
    seeds = spec.seeds()
    tasks = [(i, r, cfg.replace(seed=seeds[r])) for i, cfg in enumerate(spec.points()) for r in range(spec.replicates)]
    started = datetime.now(timezone.utc)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]
    results.sort(key=lambda x: (x[0], x[1]))

    points = spec.points()
    rows, failures = [], []
    for point, rep, row, err in results:
        cfg = points[point]
        if err is not None:
            failures.append({"point": point, "replicate": rep, "error": err})
            log.error("point %d replicate %d failed: %s", point, rep, err)
            continue
        rows.append({"point": point, "replicate": rep, "seed": seeds[rep], **_point_fields(cfg), **row})
    result = SweepResult(spec, rows, _aggregate(spec, rows), failures)
    if spec.out is not None:
        _write_sweep(result, Path(spec.out), started)
    return result


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def _csv_text(rows: list, columns: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def provenance(config: SystemConfig | None = None, **extra) -> dict:
    meta = {"version": __version__}
    if config is not None:
        meta["config"] = config_to_dict(config)
        meta["seed"] = config.seed
    meta.update(extra)
    return meta


def _sidecar(path: Path) -> Path:
    return path.with_name(path.stem + ".meta.json")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_sweep(result: SweepResult, out: Path, started: datetime) -> None:
    out.mkdir(parents=True, exist_ok=True)
    summary_cols = ["point", "replicate", "seed", *POINT_COLUMNS, *METRICS]
    (out / "summary.csv").write_text(_csv_text(result.rows, summary_cols))
    agg_cols = ["point", *POINT_COLUMNS, "replicates"] + [f"{m}_{s}" for m in METRICS for s in ("mean", "std")]
    (out / "aggregate.csv").write_text(_csv_text(result.aggregates, agg_cols))
    _write_json(out / "sweep.json", {**result.spec.describe(), "failures": result.failures})
    finished = datetime.now(timezone.utc)
    with open(out / "sweep.log", "a") as fh:
        fh.write(
            f"{started.isoformat()} start; {finished.isoformat()} done; "
            f"{len(result.rows)} rows, {len(result.failures)} failures\n"
        )


def export_summary(rows: list, path, meta: dict) -> None:
    """Write summary rows as CSV with a ``<stem>.meta.json`` provenance sidecar."""
    path = Path(path)
    columns = list(rows[0].keys()) if rows else []
    path.write_text(_csv_text(rows, columns))
    _write_json(_sidecar(path), meta)


def export_timeseries(trace: Trace, path, per_agent: bool = False) -> None:
    """Columns t, n, P_all, signal, price; optionally S_i, a_i and P_i blocks."""
    path = Path(path)
    N = trace.N
    columns = ["t", "n", "P_all", "signal", "price"]
    if per_agent:
        columns += [f"S_{i}" for i in range(N)] + [f"a_{i}" for i in range(N)] + [f"P_{i}" for i in range(N)]
    P_all = trace.P_all
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for t in range(len(trace)):
        row = [t, int(trace.n[t]), repr(float(P_all[t])), int(trace.signal[t]), repr(float(trace.price[t]))]
        if per_agent:
            row += trace.S[t].tolist() + trace.a[t].tolist() + [repr(x) for x in trace.P[t].tolist()]
        writer.writerow(row)
    path.write_text(buf.getvalue())
    _write_json(_sidecar(path), provenance(trace.config))


def load_timeseries(path) -> dict:
    """Read an exported time series back into numpy arrays keyed by column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    cols = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        if name in ("P_all", "price") or name.startswith("P_"):
            cols[name] = np.array([float(x) for x in raw])
        else:
            cols[name] = np.array([int(x) for x in raw], dtype=np.int64)
    return cols


RASTER_COLORS = {1: (255, 0, 0), -1: (255, 255, 255), 0: (0, 0, 0)}


def state_raster_pixels(S: np.ndarray) -> np.ndarray:
    """RGB image of a (rows, N) state matrix: defect red, cooperate white, ignore black."""
    img = np.zeros(S.shape + (3,), dtype=np.uint8)
    for state, rgb in RASTER_COLORS.items():
        img[S == state] = rgb
    return img


def export_state_raster(trace: Trace, path) -> None:
    """Plain (P3) PPM with one row per round t = 1..T and one column per agent."""
    S = trace.S[1:]
    img = state_raster_pixels(S)
    meta = json.dumps(provenance(trace.config), sort_keys=True)
    lines = ["P3", f"# {meta}", f"{S.shape[1]} {S.shape[0]}", "255"]
    flat = img.reshape(S.shape[0], -1)
    lines += [" ".join(map(str, row)) for row in flat.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_ppm(path) -> np.ndarray:
    """Parse a plain PPM written by :func:`export_state_raster`; returns (H, W, 3) uint8."""
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    if not tokens or tokens[0] != "P3":
        raise ValueError(f"{path}: not a plain PPM")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array(tokens[4:], dtype=np.int64)
    if data.size != w * h * 3:
        raise ValueError(f"{path}: expected {w * h * 3} samples, found {data.size}")
    return data.reshape(h, w, 3).astype(np.uint8 if maxval < 256 else np.uint16)

