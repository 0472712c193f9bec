"""Command-line front end: ``cdcp {moments,bcurve,simulate,price,sweep,validate}``.

Every file written embeds the tool version and the fully resolved config,
so a run can be reproduced from its output alone.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import config as config_mod
from .errors import CDCPError, ConfigInvalid
from .esscher import solve_K
from .moments import moment_report
from .pricing import (
    CSV_COLUMNS,
    estimate_rows,
    premium_table,
    rows_to_csv,
    sensitivity_sweep,
    sweep_rows,
)
from .simulate import simulate_paths
from .validation import run_all

OUT_ENV = "CDCP_OUT_DIR"
DEFAULT_OUT = "cdcp_out"


class Writer:
    def __init__(self, cfg, out_dir: Path, fmt: str):
        self.cfg, self.out_dir, self.fmt = cfg, out_dir, fmt
        out_dir.mkdir(parents=True, exist_ok=True)

    def header(self) -> list[str]:
        return [f"cdcp {__version__}", f"config {self.cfg.to_json()}"]

    def write(self, stem: str, rows: list[dict], columns) -> Path:
        if self.fmt == "json":
            path = self.out_dir / f"{stem}.json"
            doc = {"tool": "cdcp", "version": __version__, "config": self.cfg.raw, "rows": rows}
            path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
        else:
            path = self.out_dir / f"{stem}.csv"
            path.write_text(rows_to_csv(rows, columns, self.header()))
        print(path)
        return path


def _moments(cfg, w: Writer, args) -> int:
    rows = [moment_report(cfg.t, cfg.model).to_dict(), moment_report(cfg.t, cfg.tilted()).to_dict()]
    w.write("moments", rows, ("t", "measure", "method", "mean_lambda", "mean_N", "mean_C"))
    return 0


def _bcurve(cfg, w: Writer, args) -> int:
    tm = cfg.tilted()
    kc = solve_K(cfg.model, cfg.esscher, tm.bcurve)
    rows = [{"t": t, "B": B, "K": K} for t, B, K in zip(tm.bcurve.grid, tm.bcurve.values, kc.values)]
    w.write("bcurve", rows, ("t", "B", "K"))
    return 0


def _simulate(cfg, w: Writer, args) -> int:
    n = cfg.n_trajectories
    grid = np.linspace(0.0, cfg.t, 201)
    events, traj = [], []
    for measure, model in (("P", cfg.model), ("Pstar", cfg.tilted())):
        for i, p in enumerate(simulate_paths(model, cfg.t, n, cfg.seed, cfg.dt_max)):
            for pid, kind, t, x in p.event_rows(i):
                events.append({"measure": measure, "path_id": pid, "event_type": kind, "time": t, "mark": x})
            lam, C = p.trajectory(grid)
            for t, l, c in zip(grid, lam, C):
                traj.append({"measure": measure, "path_id": i, "t": float(t), "lambda": float(l), "C": float(c)})
    w.write("paths_events", events, ("measure", "path_id", "event_type", "time", "mark"))
    w.write("paths_trajectories", traj, ("measure", "path_id", "t", "lambda", "C"))
    return 0


def _price(cfg, w: Writer, args) -> int:
    rows = []
    for model in (cfg.model, cfg.tilted()):
        est = premium_table(model, cfg.retentions, cfg.t, cfg.n_paths, cfg.seed, cfg.dt_max, args.threads)
        rows += estimate_rows(est)
    w.write("premiums", rows, CSV_COLUMNS)
    return 0


def _sweep_one(cfg, w: Writer, args, param, values, retention, stem) -> None:
    rows = sensitivity_sweep(
        cfg.model, cfg.esscher, param, values, cfg.t, cfg.n_paths, cfg.seed, retention,
        cfg.dt_max, cfg.representation, cfg.n_grid, args.threads,
    )
    for r in rows:
        if r.skipped:
            print(f"skipped {param}={r.value:g}: {r.skipped}", file=sys.stderr)
    w.write(stem, sweep_rows(rows), CSV_COLUMNS)


def _sweep(cfg, w: Writer, args) -> int:
    if args.paper_tables:
        _price(cfg, w, args)
        for param, stem in (("theta", "sweep_theta"), ("psi", "sweep_psi"), ("nu", "sweep_nu")):
            _sweep_one(cfg, w, args, param, config_mod.REFERENCE_SWEEPS[param], 25.0, stem)
        return 0
    sw = cfg.sweep
    _sweep_one(cfg, w, args, sw["param"], sw["values"], float(sw.get("retention", 25.0)), f"sweep_{sw['param']}")
    return 0


def _validate(cfg, w: Writer, args) -> int:
    checks = run_all(cfg, args.threads)
    for c in checks:
        print(c.line())
    w.write("validate", [c.to_dict() for c in checks], ("name", "passed", "value", "target", "tolerance", "detail"))
    return 0 if all(c.passed for c in checks) else 1


COMMANDS = {
    "moments": _moments,
    "bcurve": _bcurve,
    "simulate": _simulate,
    "price": _price,
    "sweep": _sweep,
    "validate": _validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config (defaults: the reference parameter set)")
    common.add_argument("--seed", type=int, help="master seed, overrides the config")
    common.add_argument("--paths", type=int, help="Monte Carlo paths, overrides the config")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker processes")
    common.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--format", choices=("csv", "json"), help="output format, overrides the config")
    common.add_argument("--paper-tables", action="store_true",
                        help="with price or sweep: emit the retention table and all three parameter tables")

    parser = argparse.ArgumentParser(prog="cdcp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cdcp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "moments": "analytic means of lambda, N and C under both measures",
        "bcurve": "B(t) and K(t) on the solver grid",
        "simulate": "event logs and sampled trajectories under both measures",
        "price": "stop-loss premiums over the configured retentions",
        "sweep": "premiums as one Esscher parameter (or the retention) varies",
        "validate": "run the self-check bundle; exit 1 if any check fails",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigInvalid("--threads must be >= 1")
        cfg = config_mod.load(args.config)
        cfg = cfg.with_overrides(seed=args.seed, n_paths=args.paths, format=args.format)
        out = Path(args.out or cfg.out_dir or os.environ.get(OUT_ENV) or DEFAULT_OUT)
        writer = Writer(cfg, out, cfg.fmt)
        if args.paper_tables and args.command == "price":
            return _sweep(cfg, writer, args)
        return COMMANDS[args.command](cfg, writer, args)
    except CDCPError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
