"""Command line interface: run, check-compat, gen-data, sweep, limit-study.

Exit codes: 0 success, 2 configuration or input error, 3 run ended by the
blow-up criterion, 4 compatibility check failed.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from itertools import product
from pathlib import Path
from typing import List, Optional

import jsonschema
import numpy as np

from . import __version__
from .compat import DEFAULT_ORDER, check_approx, check_exact, default_M, exact_ladder, taylor_ladder
from .core_types import GridSpec, ObstacleProfile, Parameters, State
from .diagnostics import EnergyRecord
from .errors import BfloatError, ConfigError, TraceOrderError
from .scenarios import ALL_KINDS, make_scenario
from .timestepper import BLOWUP, RunConfig, RunResult, run

log = logging.getLogger("bfloat")

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_INCOMPATIBLE = 0, 2, 3, 4

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["scenario", "params", "grid"],
    "properties": {
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(ALL_KINDS)},
                "options": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "amplitude": _num, "center_offset": _num, "width": _pos, "margin": _nonneg,
                        "direction": _num, "discharge": _num, "seed": {"type": "integer"},
                    },
                },
            },
        },
        "params": {
            "type": "object",
            "additionalProperties": False,
            "required": ["epsilon"],
            "properties": {
                "epsilon": _nonneg, "mu": _nonneg, "delta": _nonneg, "R": _pos,
                "h_min": _pos, "c0": _nonneg,
                "obstacle": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"enum": ["flat", "poly", "table"]},
                        "value": _num,
                        "coeffs": {"type": "array", "items": _num},
                        "x": {"type": "array", "items": _num},
                        "values": {"type": "array", "items": _num},
                    },
                },
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["L"],
            "properties": {
                "L": _pos,
                "n_per_side": {"type": "integer", "minimum": 4},
                "dx": _pos,
                "dx_over_delta": _pos,
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_final": _pos, "dt": _pos, "tau": _pos, "cfl": _pos,
                "snapshot_stride": {"type": "integer", "minimum": 0},
                "monitor_ceiling": _pos, "monitor_growth": {"type": "number", "exclusiveMinimum": 1},
                "mode": {"enum": ["dispersive", "hyperbolic"]},
                "allow_coarse": {"type": "boolean"},
                "hyperbolic_boundary_order": {"enum": [1, 2]},
            },
        },
        "compat": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["exact", "approx", "both", "skip"]},
                "n": {"type": "integer", "minimum": 1},
                "M": _pos,
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "deltas": {"type": "array", "items": _nonneg, "minItems": 1},
                "epsilons": {"type": "array", "items": _nonneg, "minItems": 1},
                "layer_time": _pos,
            },
        },
        "limit_study": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "deltas": {"type": "array", "items": _pos, "minItems": 1},
                "t_star": _pos,
                "exclusion": _pos,
            },
        },
        "output_dir": {"type": "string"},
    },
}


# ---------------------------------------------------------------------------
# configuration


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(doc) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def _key_path(err: jsonschema.ValidationError) -> str:
    path = "/".join(str(p) for p in err.absolute_path)
    return path or "<root>"


def validate_config(doc) -> None:
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise ConfigError(f"invalid config at '{_key_path(e)}': {e.message}")
    p = doc["params"]
    if "mu" not in p and "delta" not in p:
        raise ConfigError("invalid config at 'params': give 'mu' or 'delta'")
    g = doc["grid"]
    given = [k for k in ("n_per_side", "dx", "dx_over_delta") if k in g]
    if len(given) != 1:
        raise ConfigError("invalid config at 'grid': give exactly one of 'n_per_side', 'dx', 'dx_over_delta'")


def load_config(path: str, seed: Optional[int] = None) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    validate_config(doc)
    if seed is not None:
        doc.setdefault("scenario", {}).setdefault("options", {})["seed"] = int(seed)
    return doc


def build_params(doc: dict, delta: Optional[float] = None, epsilon: Optional[float] = None) -> Parameters:
    p = doc["params"]
    obstacle = ObstacleProfile.from_dict(p["obstacle"]) if "obstacle" in p else ObstacleProfile()
    kw = dict(R=p.get("R", 1.0), zeta_w=obstacle, h_min=p.get("h_min", 0.1), c0=p.get("c0", 0.05))
    eps = p["epsilon"] if epsilon is None else epsilon
    if delta is not None:
        return Parameters(eps, delta=delta, **kw)
    return Parameters(eps, mu=p.get("mu"), delta=p.get("delta"), **kw)


def build_grid(doc: dict, params: Parameters) -> GridSpec:
    g = doc["grid"]
    R = params.R
    if "n_per_side" in g:
        return GridSpec(R, g["L"], g["n_per_side"])
    if "dx" in g:
        return GridSpec.with_spacing(R, g["L"], g["dx"])
    if not params.delta > 0:
        raise ConfigError("invalid config at 'grid/dx_over_delta': delta = 0 needs 'dx' or 'n_per_side'")
    return GridSpec.with_spacing(R, g["L"], g["dx_over_delta"] * params.delta)


def build_state(doc: dict, params: Parameters, grid: GridSpec) -> State:
    sc = doc["scenario"]
    return make_scenario(sc["kind"], params, **sc.get("options", {})).state(grid)


def build_run_config(doc: dict, params: Parameters, grid: GridSpec, **override) -> RunConfig:
    r = dict(doc.get("run", {}))
    r.update(override)
    if not params.delta > 0:
        r["mode"] = "hyperbolic"
    return RunConfig(params, grid, **r)


def output_dir(args, doc: dict) -> Path:
    out = os.environ.get("BFLOAT_OUT") or args.out or doc.get("output_dir") or "bfloat_out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# writers


def _fmt(v) -> str:
    return repr(float(v))


def write_state_csv(path: Path, U: State, eps: float) -> None:
    x = U.grid.x
    th, q = U.theta.concat(), U.q.concat()
    with np.errstate(invalid="ignore"):
        h = np.sqrt(np.maximum(1.0 + 2.0 * eps * th, 0.0))
        zeta = np.where(1.0 + 2.0 * eps * th >= 0, 2.0 * th / (1.0 + h), np.nan)
    with open(path, "w", newline="") as fh:
        fh.write("x,theta,q,zeta\n")
        for row in zip(x, th, q, zeta):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_energies(path: Path, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(EnergyRecord.header() + "\n")
        for rec in result.records:
            fh.write(rec.csv_row() + "\n")


def write_transmission(path: Path, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,jump_q,transmission_2\n")
        for row in result.transmission:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path: Path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


# ---------------------------------------------------------------------------
# commands


def cmd_run(args) -> int:
    doc = load_config(args.config, args.seed)
    params = build_params(doc)
    grid = build_grid(doc, params)
    rc = build_run_config(doc, params, grid)
    U = build_state(doc, params, grid)
    out = output_dir(args, doc)
    result = run(rc, U)

    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    snaps = []
    for i, S in enumerate(result.snapshots):
        name = f"snapshot_{i:05d}.csv"
        write_state_csv(snap_dir / name, S, params.epsilon)
        snaps.append({"file": f"snapshots/{name}", "t": S.t})
    write_energies(out / "energies.csv", result)
    write_transmission(out / "transmission.csv", result)
    manifest = {
        "version": __version__,
        "command": "run",
        "config": doc,
        "config_hash": config_hash(doc),
        "status": result.status,
        "message": result.message,
        "t_end": result.t_end,
        "steps": result.steps,
        "dt": result.dt,
        "alpha": params.alpha,
        "delta": params.delta,
        "mu": params.mu,
        "grid": {"R": grid.R, "L": grid.L, "n_per_side": grid.n_per_side, "dx": grid.dx},
        "snapshots": snaps,
        "files": ["energies.csv", "transmission.csv"],
    }
    write_json(out / "manifest.json", manifest)
    if result.status == BLOWUP:
        print(f"blow-up: {result.message}", file=sys.stderr)
        return EXIT_BLOWUP
    print(result.message)
    return EXIT_OK


def compat_reports(doc: dict, params: Parameters, grid: GridSpec) -> List:
    c = doc.get("compat", {})
    mode = c.get("mode", "both")
    n = c.get("n", DEFAULT_ORDER)
    U = build_state(doc, params, grid)
    M = c.get("M", default_M(U, n))
    reports = []
    if mode == "skip":
        return reports
    if mode in ("exact", "both"):
        if params.delta > 0:
            reports.append(check_exact(exact_ladder(U, n, params), M, n, params))
        elif mode == "exact":
            raise ConfigError("invalid config at 'compat/mode': the exact checker needs delta > 0")
    if mode in ("approx", "both"):
        reports.append(check_approx(taylor_ladder(U, n, params), M, n, params))
    return reports


def cmd_check_compat(args) -> int:
    doc = load_config(args.config, args.seed)
    params = build_params(doc)
    grid = build_grid(doc, params)
    out = output_dir(args, doc)
    reports = compat_reports(doc, params, grid)
    ok = all(r.passed for r in reports)
    write_json(out / "compat_report.json", {
        "config_hash": config_hash(doc),
        "pass": ok,
        "reports": [r.to_dict() for r in reports],
    })
    for r in reports:
        line = f"{r.mode}: {'pass' if r.passed else 'FAIL'}"
        if not r.passed:
            line += f" (failing rows j = {', '.join(map(str, r.failing_rows()))})"
        print(line)
    return EXIT_OK if ok else EXIT_INCOMPATIBLE


def cmd_gen_data(args) -> int:
    doc = load_config(args.config, args.seed)
    params = build_params(doc)
    grid = build_grid(doc, params)
    out = output_dir(args, doc)
    U = build_state(doc, params, grid)
    write_state_csv(out / "initial_data.csv", U, params.epsilon)
    write_json(out / "manifest.json", {"version": __version__, "command": "gen-data", "config": doc,
                                        "config_hash": config_hash(doc), "files": ["initial_data.csv"]})
    return EXIT_OK


SWEEP_FIELDS = ["delta", "epsilon", "status", "t_end", "steps", "energy_drift", "m0_final",
                "layer_width", "compat_max_residual"]


def _sweep_member(task):
    doc, delta, eps = task
    row = {"delta": delta, "epsilon": eps}
    try:
        params = build_params(doc, delta=delta, epsilon=eps)
        grid = build_grid(doc, params)
        rc = build_run_config(doc, params, grid)
        U = build_state(doc, params, grid)
        n = doc.get("compat", {}).get("n", DEFAULT_ORDER)
        res = check_approx(taylor_ladder(U, n, params), 1.0, n, params)
        row["compat_rows"] = [max(r.r1, r.r2) for r in res.rows]
        row["compat_max_residual"] = max(row["compat_rows"])
        result = run(rc, U)
        e0, e1 = result.records[0].e_tot, result.records[-1].e_tot
        row["status"] = result.status
        row["t_end"] = result.t_end
        row["steps"] = result.steps
        row["energy_drift"] = abs(e1 - e0) / e0 if e0 > 0 else abs(e1 - e0)
        row["m0_final"] = result.records[-1].m0
        t_layer = doc.get("sweep", {}).get("layer_time")
        lw = float("nan")
        if t_layer is not None:
            for rec in result.records:
                if rec.t >= t_layer - 1e-12:
                    lw = rec.layer_width
                    break
        row["layer_width"] = lw
    except (BfloatError, ValueError) as exc:
        row["status"] = f"error: {exc}"
    return row


def fit_slope(xs, ys) -> Optional[float]:
    """Least-squares slope of log y against log x over the finite positive pairs (None if fewer than 2)."""
    pts = [(math.log(x), math.log(y)) for x, y in zip(xs, ys)
           if x is not None and y is not None and x > 0 and math.isfinite(y) and y > 0]
    if len(pts) < 2:
        return None
    a = np.array(pts)
    return float(np.polyfit(a[:, 0], a[:, 1], 1)[0])


def cmd_sweep(args) -> int:
    doc = load_config(args.config, args.seed)
    sw = doc.get("sweep", {})
    base = build_params(doc)
    deltas = sw.get("deltas", [base.delta])
    epsilons = sw.get("epsilons", [base.epsilon])
    out = output_dir(args, doc)
    tasks = [(doc, float(d), float(e)) for d, e in product(deltas, epsilons)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_sweep_member, tasks))
    else:
        rows = [_sweep_member(t) for t in tasks]

    n_rows = max((len(r.get("compat_rows", [])) for r in rows), default=0)
    fields = SWEEP_FIELDS + [f"compat_residual_j{j}" for j in range(n_rows)]
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            vals = []
            for f in fields:
                if f.startswith("compat_residual_j"):
                    j = int(f.rsplit("j", 1)[1])
                    v = r.get("compat_rows", [])[j] if j < len(r.get("compat_rows", [])) else float("nan")
                else:
                    v = r.get(f, float("nan"))
                vals.append(v if isinstance(v, str) else (_fmt(v) if isinstance(v, float) else v))
            w.writerow(vals)

    slopes = {"layer_width": {}, "compat_residual": {}}
    for e in epsilons:
        sub = [r for r in rows if r["epsilon"] == float(e)]
        ds = [r["delta"] for r in sub]
        slopes["layer_width"][repr(float(e))] = fit_slope(ds, [r.get("layer_width") for r in sub])
        slopes["compat_residual"][repr(float(e))] = {
            f"j{j}": fit_slope(ds, [r.get("compat_rows", [None] * n_rows)[j] if r.get("compat_rows") else None
                                    for r in sub])
            for j in range(n_rows)
        }
    write_json(out / "slopes.json", slopes)
    write_json(out / "manifest.json", {"version": __version__, "command": "sweep", "config": doc,
                                        "config_hash": config_hash(doc), "files": ["sweep.csv", "slopes.json"]})
    failed = [r for r in rows if r.get("status") != "completed"]
    for r in failed:
        print(f"delta={r['delta']} epsilon={r['epsilon']}: {r.get('status')}", file=sys.stderr)
    return EXIT_OK


def _limit_member(task):
    doc, delta, t_star = task
    params = build_params(doc, delta=delta)
    grid = build_grid(doc, params)
    rc = build_run_config(doc, params, grid, t_final=t_star)
    return run(rc, build_state(doc, params, grid))


def cmd_limit_study(args) -> int:
    doc = load_config(args.config, args.seed)
    ls = doc.get("limit_study", {})
    base = build_params(doc)
    deltas = [float(d) for d in ls.get("deltas", [0.2, 0.1, 0.05])]
    t_star = float(ls.get("t_star", 1.0))
    excl = float(ls.get("exclusion", 5.0))
    if "dx_over_delta" in doc["grid"]:
        raise ConfigError("invalid config at 'grid/dx_over_delta': the limit study needs one common grid")
    out = output_dir(args, doc)
    tasks = [(doc, 0.0, t_star)] + [(doc, d, t_star) for d in deltas]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_limit_member, tasks))
    else:
        results = [_limit_member(t) for t in tasks]
    ref = results[0]
    grid = build_grid(doc, base)
    x = np.abs(grid.x)
    rows = []
    for d, res in zip(deltas, results[1:]):
        if res.status != "completed" or ref.status != "completed":
            rows.append((d, float("nan"), res.status))
            continue
        mask = x > base.R + excl * d
        diff = np.concatenate([(res.final.theta - ref.final.theta).concat()[mask],
                               (res.final.q - ref.final.q).concat()[mask]])
        rows.append((d, float(np.sqrt(np.sum(diff * diff) * grid.dx)), res.status))
    with open(out / "limit_study.csv", "w", newline="") as fh:
        fh.write("delta,l2_difference,status\n")
        for d, v, s in rows:
            fh.write(f"{_fmt(d)},{_fmt(v)},{s}\n")
    order = sorted(rows, key=lambda r: -r[0])
    vals = [r[1] for r in order]
    monotone = all(math.isfinite(v) for v in vals) and all(b < a for a, b in zip(vals, vals[1:]))
    write_json(out / "limit_study.json", {
        "t_star": t_star, "exclusion": excl, "reference_status": ref.status,
        "rows": [{"delta": d, "l2_difference": _jsonable(v), "status": s} for d, v, s in rows],
        "monotone_decreasing": monotone,
        "slope": fit_slope([r[0] for r in rows], [r[1] for r in rows]),
    })
    write_json(out / "manifest.json", {"version": __version__, "command": "limit-study", "config": doc,
                                        "config_hash": config_hash(doc),
                                        "files": ["limit_study.csv", "limit_study.json"]})
    print(f"monotone decrease: {monotone}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "check-compat": cmd_check_compat,
    "gen-data": cmd_gen_data,
    "sweep": cmd_sweep,
    "limit-study": cmd_limit_study,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bfloat", description="Boussinesq waves around a fixed floating obstacle.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", default=None, help="output directory (BFLOAT_OUT overrides)")
        sp.add_argument("--jobs", type=int, default=1, help="parallel sweep members")
        sp.add_argument("--seed", type=int, default=None, help="seed for randomized scenarios")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TraceOrderError as exc:
        print(f"trace order error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BfloatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
