"""Command-line front end: ``solve``, ``propagate`` and ``table``.

Outputs are plain CSV/JSON meant for external plotting; floats are written
with ``repr`` so they read back bit-exact.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from eclipse_transfer import _kernels as K
from eclipse_transfer.config import DAY, REFERENCE_KEYS, ScenarioConfig, load_config
from eclipse_transfer.dynamics import sun_angle
from eclipse_transfer.errors import (
    ConfigError, InvalidAngleError, TransferError, UnboundOrbitError)
from eclipse_transfer.orbital import elements_from_state
from eclipse_transfer.solver import SolveResult, TransferProblem, evaluate, solve

log = logging.getLogger("eclipse_transfer")

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2

TRAJECTORY_COLUMNS = (
    "t_s", "x_m", "y_m", "vx_ms", "vy_ms", "m_kg", "px", "py", "pvx", "pvy", "pm", "eps",
    "alpha_sun_rad", "apogee_alt_m", "perigee_alt_m", "thrust_angle_to_velocity_rad",
)
EVENT_COLUMNS = ("t_s", "kind", "mu_mult", "dpx", "dpy")
SUMMARY_KEYS = (
    "theta_v_deg", "theta_n_deg", "t_f_days", "m_f_kg", "delta_v_ms", "revolutions",
    "eclipse_hours", "objective_m2", "evaluations", "stop_kind",
)
# table column -> (reference key, SolveResult accessor)
TABLE_QUANTITIES = {
    "final_mass_kg": ("final_mass_kg", lambda r: r.m_f),
    "final_time_days": ("final_time_days", lambda r: r.t_f / DAY),
    "delta_v_ms": ("delta_v_ms", lambda r: r.delta_v),
    "revolutions": ("revolutions", lambda r: r.revolutions),
    "eclipse_hours": ("eclipse_hours", lambda r: r.eclipse_time / 3600.0),
}
TABLE_COLUMNS = (
    ("scenario", "thrust_n", "perigee_local_time_h", "eclipses", "status")
    + tuple(TABLE_QUANTITIES)
    + ("apogee_miss_km",)
    + tuple(f"ref_{k}" for k in REFERENCE_KEYS)
    + tuple(f"dev_{k}_pct" for k in REFERENCE_KEYS)
)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def trajectory_rows(problem: TransferProblem, result: SolveResult):
    traj = result.trajectory
    env = problem.env
    for t, s, eps in zip(traj.times, traj.states, traj.eps):
        x, y, vx, vy = s[K.X], s[K.Y], s[K.VX], s[K.VY]
        try:
            el = elements_from_state(env, x, y, vx, vy)
            apo, peri = el.apogee_alt, el.perigee_alt
        except UnboundOrbitError:
            apo, peri = math.inf, math.nan
        pvx, pvy = s[K.PVX], s[K.PVY]
        angle = math.atan2(vx * pvy - vy * pvx, vx * pvx + vy * pvy)
        yield (float(t), *(float(v) for v in s), int(eps), sun_angle(env, float(t)),
               apo, peri, angle)


def summary_dict(result: SolveResult) -> dict:
    return {
        "theta_v_deg": math.degrees(result.theta_v),
        "theta_n_deg": math.degrees(result.theta_n),
        "t_f_days": result.t_f / DAY,
        "m_f_kg": result.m_f,
        "delta_v_ms": result.delta_v,
        "revolutions": result.revolutions,
        "eclipse_hours": result.eclipse_time / 3600.0,
        "objective_m2": result.objective,
        "evaluations": result.evaluations,
        "stop_kind": result.stop.kind,
    }


def write_outputs(out_dir: Path, problem: TransferProblem, result: SolveResult) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_atomic(out_dir / "summary.json", json.dumps(summary_dict(result), indent=2) + "\n")
    _write_atomic(out_dir / "trajectory.csv",
                  _csv_text(TRAJECTORY_COLUMNS, trajectory_rows(problem, result)))
    events = ((e.t_d, e.kind, e.mu_mult, e.dpx, e.dpy) for e in result.trajectory.events)
    _write_atomic(out_dir / "events.csv", _csv_text(EVENT_COLUMNS, events))


def _load_problem(config_path) -> tuple[ScenarioConfig, TransferProblem]:
    cfg = load_config(config_path)
    try:
        return cfg, cfg.to_problem()
    except ValueError as exc:
        raise ConfigError(f"{config_path}: {exc}") from exc


def run_solve(config_path, out_dir, workers: int | None = None) -> int:
    try:
        cfg, problem = _load_problem(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = solve(problem, workers=workers or cfg.workers)
    except TransferError as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    write_outputs(Path(out_dir), problem, result)
    log.info("%s: t_f %.3f d, m_f %.2f kg, %d evaluations",
             cfg.name, result.t_f / DAY, result.m_f, result.evaluations)
    return EXIT_OK


def run_propagate(config_path, theta_v_deg: float, theta_n_deg: float, out_dir) -> int:
    try:
        _, problem = _load_problem(config_path)
        result = evaluate(problem, math.radians(theta_v_deg), math.radians(theta_n_deg))
    except (ConfigError, InvalidAngleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TransferError as exc:
        print(f"error: propagation failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    write_outputs(Path(out_dir), problem, result)
    if result.stop.kind == "error":
        print(f"warning: propagation stopped on error: {result.stop.detail}", file=sys.stderr)
    return EXIT_OK


def _table_row(path: Path, out_dir: Path, workers: int | None) -> dict:
    row = {"scenario": path.stem}
    try:
        cfg, problem = _load_problem(path)
    except ConfigError as exc:
        row["status"] = f"config error: {exc}"
        return row
    row.update(scenario=cfg.name, thrust_n=cfg.thrust_n,
               perigee_local_time_h=cfg.perigee_local_time_h, eclipses=cfg.eclipses)
    try:
        result = solve(problem, workers=workers or cfg.workers)
    except TransferError as exc:
        row["status"] = f"solver error: {exc}"
        return row
    write_outputs(out_dir / path.stem, problem, result)
    row["status"] = "ok"
    for col, (ref_key, get) in TABLE_QUANTITIES.items():
        value = get(result)
        row[col] = value
        ref = cfg.reference.get(ref_key)
        if ref is not None:
            row[f"ref_{ref_key}"] = ref
            row[f"dev_{ref_key}_pct"] = 100.0 * (value - ref) / ref
    row["apogee_miss_km"] = math.sqrt(result.objective) / 1e3
    return row


def run_table(config_dir, out_dir, jobs: int = 1, workers: int | None = None) -> int:
    """Solve every ``*.ini`` in ``config_dir``; failures become table rows."""
    config_dir, out_dir = Path(config_dir), Path(out_dir)
    if not config_dir.is_dir():
        print(f"error: {config_dir} is not a directory", file=sys.stderr)
        return EXIT_CONFIG
    paths = sorted(config_dir.glob("*.ini"))
    out_dir.mkdir(parents=True, exist_ok=True)
    if jobs > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda p: _table_row(p, out_dir, workers), paths))
    else:
        rows = [_table_row(p, out_dir, workers) for p in paths]
    _write_atomic(out_dir / "table.csv",
                  _csv_text(TABLE_COLUMNS, ([r.get(c) for c in TABLE_COLUMNS] for r in rows)))
    masses = [r["final_mass_kg"] for r in rows if r.get("status") == "ok"]
    if len(masses) > 1:
        print(f"final-mass spread: {max(masses) - min(masses):.2f} kg over {len(masses)} rows")
    failed = [r for r in rows if r.get("status") != "ok"]
    for r in failed:
        print(f"error: {r['scenario']}: {r['status']}", file=sys.stderr)
    return EXIT_SOLVER if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eclipse-transfer",
        description="Planar low-thrust transfers with Earth-shadow costate jumps.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimize the two costate angles for one scenario")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--workers", type=int, default=None,
                   help="threads for objective evaluations (overrides the config)")

    p = sub.add_parser("propagate", help="propagate one extremal at fixed angles")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--theta-v-deg", type=float, required=True)
    p.add_argument("--theta-n-deg", type=float, required=True)

    p = sub.add_parser("table", help="solve a directory of scenarios into table.csv")
    p.add_argument("--config", required=True, type=Path, help="directory of *.ini scenarios")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--jobs", type=int, default=1, help="scenarios solved concurrently")
    p.add_argument("--workers", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "solve":
        return run_solve(args.config, args.out, args.workers)
    if args.command == "propagate":
        return run_propagate(args.config, args.theta_v_deg, args.theta_n_deg, args.out)
    return run_table(args.config, args.out, args.jobs, args.workers)


if __name__ == "__main__":
    sys.exit(main())
