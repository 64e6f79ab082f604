"""Command line interface: ``mgsim run|sweep|raster|graph``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.  The
default output directory is taken from ``$MGSIM_OUT`` (falling back to
``./mgsim-out``).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, SystemConfig, make_policy, make_topology, validate_config
from .engine import run, topology_for
from .experiments import (
    METRICS,
    export_state_raster,
    export_summary,
    export_timeseries,
    parse_config,
    provenance,
    run_sweep,
)
from .metrics import summarize
from .network import write_edge_list
from .rng import derive_seed
from .state import Trace

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
OUT_ENV = "MGSIM_OUT"

log = logging.getLogger("mgsim")


def default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "mgsim-out"))


def _system_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("system")
    g.add_argument("--config", type=Path, help="TOML file with base parameters")
    g.add_argument("--N", type=int)
    g.add_argument("--V", type=float)
    g.add_argument("--R-V", dest="R_V", type=float)
    g.add_argument("--R-0", dest="R_0", type=float)
    g.add_argument("--lambda-min", dest="lambda_min", type=float)
    g.add_argument("--p-err", dest="p_err", type=float)
    g.add_argument("--topology", choices=["ring", "watts_strogatz"])
    g.add_argument("--k", type=int, help="Watts-Strogatz mean degree")
    g.add_argument("--beta", type=float, help="Watts-Strogatz rewiring probability")
    g.add_argument("--policy", choices=["baseline", "signal", "pricing"])
    g.add_argument("--alpha", type=float)
    g.add_argument("--omega-center", dest="omega_center", type=float)
    g.add_argument("--omega-halfwidth", dest="omega_halfwidth", type=float)
    g.add_argument("--p1", type=float)
    g.add_argument("--p2", type=float)
    g.add_argument("--gain-eps", dest="gain_eps", type=float)
    g.add_argument(
        "--scale-voltage", dest="scale_voltage_with_sqrt_N", action=argparse.BooleanOptionalAction, default=None
    )
    g.add_argument(
        "--price-uses-previous-n", dest="price_uses_previous_n", action=argparse.BooleanOptionalAction, default=None
    )
    g.add_argument("--T", type=int)
    g.add_argument("--burn-in", dest="burn_in", type=int)
    g.add_argument("--seed", type=int)
    return p


def config_from_args(args) -> SystemConfig:
    """Base config (defaults or ``--config``) overlaid with explicit flags."""
    cfg = SystemConfig()
    if args.config is not None:
        spec = parse_config(args.config)
        cfg = spec.base.replace(seed=spec.base_seed)
    scalar = {}
    for name in ("N", "V", "R_V", "R_0", "lambda_min", "p_err", "T", "burn_in", "seed",
                 "scale_voltage_with_sqrt_N", "price_uses_previous_n"):
        value = getattr(args, name, None)
        if value is not None:
            scalar[name] = value
    if "T" in scalar and "burn_in" not in scalar and cfg.burn_in >= scalar["T"]:
        scalar["burn_in"] = scalar["T"] // 5
    cfg = cfg.replace(**scalar)

    topo_kind = args.topology or cfg.topology.name
    topo_params = {k: getattr(args, k) for k in ("k", "beta") if getattr(args, k) is not None}
    if topo_kind == cfg.topology.name:
        base = dataclasses.asdict(cfg.topology)
        topo_params = {**base, **topo_params} if topo_kind == "watts_strogatz" else topo_params
    if topo_kind == "ring" and topo_params:
        raise ConfigError("--k/--beta only apply to the watts_strogatz topology")
    cfg = cfg.replace(topology=make_topology(topo_kind, **topo_params))

    pol_kind = args.policy or cfg.policy.name
    pol_names = ("alpha", "omega_center", "omega_halfwidth", "p1", "p2", "gain_eps")
    pol_params = {k: getattr(args, k) for k in pol_names if getattr(args, k) is not None}
    if pol_kind == cfg.policy.name and pol_kind == "pricing":
        pol_params = {**dataclasses.asdict(cfg.policy), **pol_params}
    if pol_kind != "pricing" and pol_params:
        raise ConfigError("pricing flags require --policy pricing")
    cfg = cfg.replace(policy=make_policy(pol_kind, **pol_params))
    validate_config(cfg).raise_if_invalid()
    return cfg


def _print_rows(rows, columns) -> None:
    print(",".join(columns))
    for r in rows:
        print(",".join(repr(r[c]) if isinstance(r[c], float) else str(r[c]) for c in columns))


def _export_run(trace: Trace, out: Path, per_agent: bool, plot: bool) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    trace.save(out / "trace.npz")
    export_timeseries(trace, out / "timeseries.csv", per_agent=per_agent)
    export_state_raster(trace, out / "raster.ppm")
    row = {"seed": trace.seed, **summarize(trace).as_row()}
    export_summary([row], out / "summary.csv", provenance(trace.config))
    if plot:
        from . import plotting

        plotting.plot_state_raster(trace, out / "raster.png")
        plotting.plot_timeseries(trace, out / "timeseries.png")
    return row


def cmd_run(args) -> int:
    cfg = config_from_args(args)
    out = args.out or default_out()
    rows = []
    if args.replicates == 1:
        rows.append(_export_run(run(cfg), out, args.per_agent, args.plot))
    else:
        for r in range(args.replicates):
            rep_cfg = cfg.replace(seed=derive_seed(cfg.seed, r))
            row = _export_run(run(rep_cfg), out / f"rep_{r:03d}", args.per_agent, args.plot)
            rows.append({"replicate": r, **row})
        export_summary(rows, out / "summary.csv", provenance(cfg, replicates=args.replicates))
    _print_rows(rows, list(rows[0].keys()))
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = parse_config(args.spec)
    changes = {}
    if args.replicates is not None:
        changes["replicates"] = args.replicates
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    changes["out"] = args.out or spec.out or default_out()
    spec = dataclasses.replace(spec, **changes)
    result = run_sweep(spec)
    cols = ["point", "N", "topology", "policy", "p_err", "lambda_min", "replicates"]
    cols += [f"{m}_mean" for m in METRICS]
    _print_rows(result.aggregates, cols)
    if args.plot and result.aggregates:
        from . import plotting

        for metric in ("P_util", "c_avg", "fairness"):
            plotting.plot_sweep(result.aggregates, Path(spec.out) / f"{metric}.png", metric)
    for f in result.failures:
        print(f"FAILED point {f['point']} replicate {f['replicate']}: {f['error']}", file=sys.stderr)
    return result.exit_code


def cmd_raster(args) -> int:
    trace = Trace.load(args.trace)
    out = args.output or Path(args.trace).with_suffix(".ppm")
    export_state_raster(trace, out)
    if args.png:
        from . import plotting

        plotting.plot_state_raster(trace, args.png)
    print(out)
    return EXIT_OK


def cmd_graph(args) -> int:
    cfg = config_from_args(args)
    topo = topology_for(cfg)
    if args.output is None:
        for i, j in topo.edges():
            print(i, j)
    else:
        write_edge_list(topo, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgsim", description="DC micro-grid demand-side management simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    system = _system_flags()

    p = sub.add_parser("run", parents=[system], help="simulate one configuration and export its trace")
    p.add_argument("--out", type=Path)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--per-agent", action="store_true", help="include per-agent columns in timeseries.csv")
    p.add_argument("--plot", action="store_true", help="also render PNG figures")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a sweep described by a TOML file")
    p.add_argument("spec", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("raster", help="render a saved trace's agent states as a PPM image")
    p.add_argument("trace", type=Path)
    p.add_argument("-o", "--output", type=Path)
    p.add_argument("--png", type=Path, help="also write a PNG via matplotlib")
    p.set_defaults(func=cmd_raster)

    p = sub.add_parser("graph", parents=[system], help="emit the run's topology as an edge list")
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=cmd_graph)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
