"""Command line runner.

One positional argument: a TOML or JSON run configuration whose ``task`` key
selects what to do (jet, curvature, verify, solve, reconstruct, scan).  The
report goes to stdout (or --out) as JSON or CSV; CSV numbers are printed with
17 significant digits so repeated runs are byte-identical.

Exit codes: 0 success, 1 a check failed or a computation could not finish,
2 malformed configuration or usage.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .config import TASKS, field_from_config, load_config, require, weights_from_config
from .curvature import curvature_bundle
from .errors import (
    ConfigError,
    HessianLabError,
    MaxIterationsExceeded,
    NonConvexIterate,
    RefinedFormMismatch,
    SingularLinearSystem,
)
from .gridfield import write_grid_file
from .masolver import MAProblem, max_nodal_error, solve_dirichlet
from .potential import sample_box_points
from .rigidity import liouville_scan, mean_curvature_bound_check, radial_scan
from .soliton import SolitonDiagnostics, diagnose, sigma
from .toric import assemble_sample, darboux_check, flat_model_check

#: errors that mean "the computation ran and the mathematics said no"
_CHECK_ERRORS = (
    RefinedFormMismatch,
    NonConvexIterate,
    MaxIterationsExceeded,
    SingularLinearSystem,
)


def _clean(obj):
    """Recursively convert reports to plain JSON-serializable values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: _clean(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
        }
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.17g" % float(x)


def _csv(headers: List[str], rows: List[list]) -> str:
    lines = [",".join(headers)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _points_from(cfg: dict, where: str, rng, field) -> np.ndarray:
    """Explicit [[...]] points, or seeded samples from a box."""
    if "points" in cfg:
        pts = np.asarray(cfg["points"], dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return pts
    if "box" in cfg:
        count = int(cfg.get("count", 20))
        margin = float(cfg.get("margin", 0.0))
        return sample_box_points(cfg["box"], count, rng, margin=margin)
    raise ConfigError(f"[{where}] needs either 'points' or 'box'")


# --------------------------------------------------------------------- tasks


def _task_jet(cfg, field, weights, rng):
    sub = cfg.get("jet", {})
    point = np.asarray(require(sub, "point", "jet"), dtype=float)
    order = int(sub.get("order", 2))
    jet = field.jet(point, order)
    report = {
        "task": "jet",
        "point": jet.point,
        "order": order,
        "value": jet.value,
        "gradient": jet.grad,
        "hessian": jet.hess,
        "log_det": jet.log_det,
        "exact": jet.exact,
    }
    if order >= 3:
        report["third"] = jet.third
    headers = [f"x{i+1}" for i in range(point.size)] + ["value", "log_det"]
    rows = [list(jet.point) + [jet.value, jet.log_det]]
    return report, (headers, rows), True


def _task_curvature(cfg, field, weights, rng):
    sub = cfg.get("curvature", {})
    pts = _points_from(sub, "curvature", rng, field)
    entries = []
    rows = []
    for p in pts:
        jet = field.jet(p, 3)
        bundle = curvature_bundle(jet)
        entries.append(
            {
                "point": p,
                "scalar_curvature": bundle.scalar,
                "sigma": sigma(jet),
                "christoffel": bundle.christoffel,
                "ricci": bundle.ricci,
            }
        )
        rows.append(list(p) + [bundle.scalar, sigma(jet)])
    headers = [f"x{i+1}" for i in range(pts.shape[1])] + [
        "scalar_curvature",
        "sigma",
    ]
    return {"task": "curvature", "points": entries}, (headers, rows), True


def _task_verify(cfg, field, weights, rng):
    sub = cfg.get("verify", {})
    pts = _points_from(sub, "verify", rng, field)
    order = 5 if sub.get("bochner", False) else 3
    ma_tol = float(sub.get("ma_tol", 1e-9))
    identity_tol = float(sub.get("identity_tol", 1e-9))
    ric_floor = float(sub.get("ric_floor", -1e-8))
    slack_floor = float(sub.get("slack_floor", -1e-7))
    entries, rows, all_ok = [], [], True
    for p in pts:
        diag = diagnose(field.jet(p, order), weights)
        identity_norm = float(np.max(np.abs(diag.identity_residual)))
        ok = (
            abs(diag.ma_residual) <= ma_tol
            and identity_norm <= identity_tol
            and diag.min_eig_ric_phi >= ric_floor
            and (diag.bochner_slack is None or diag.bochner_slack >= slack_floor)
        )
        all_ok = all_ok and ok
        entries.append(
            {
                "point": p,
                "ma_residual": diag.ma_residual,
                "identity_residual": identity_norm,
                "phi": diag.phi,
                "sigma": diag.sigma,
                "min_eig_ric_phi": diag.min_eig_ric_phi,
                "bakry_emery_gap": diag.bakry_emery_gap,
                "bochner_slack": diag.bochner_slack,
                "passed": ok,
            }
        )
        rows.append(diag.row() + [ok])
    headers = (
        [f"x{i+1}" for i in range(pts.shape[1])]
        + list(SolitonDiagnostics.CSV_FIELDS)
        + ["passed"]
    )
    report = {
        "task": "verify",
        "count": len(entries),
        "all_passed": all_ok,
        "points": entries,
    }
    return report, (headers, rows), all_ok


def _task_solve(cfg, field, weights, rng, base_dir: Optional[Path] = None):
    sub = cfg.get("solve", {})
    problem = MAProblem(
        bounds=require(sub, "bounds", "solve"),
        spacing=require(sub, "spacing", "solve"),
        weights=weights,
        boundary=field,
        tol=float(sub.get("tol", 1e-10)),
        max_iter=int(sub.get("max_iter", 25)),
    )
    sol = solve_dirichlet(problem)
    err = max_nodal_error(sol, field)
    if "save" in sub:
        path = Path(sub["save"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        write_grid_file(str(path), sol.grid_potential())
    report = {
        "task": "solve",
        "converged": sol.converged,
        "iterations": sol.iterations,
        "residual_norm": sol.residual_norm,
        "max_error_vs_field": err,
        "shape": list(problem.shape),
        "steps": [dataclasses.asdict(s) for s in sol.steps],
    }
    headers = ["iteration", "residual_norm", "damping"]
    rows = [[s.iteration, s.residual_norm, s.damping] for s in sol.steps]
    return report, (headers, rows), sol.converged


def _task_reconstruct(cfg, field, weights, rng):
    sub = cfg.get("reconstruct", {})
    pts = _points_from(sub, "reconstruct", rng, field)
    theta = sub.get("theta")
    darboux_tol = float(sub.get("darboux_tol", 1e-12))
    residual_tol = float(sub.get("residual_tol", 1e-8))
    entries, rows, all_ok = [], [], True
    for p in pts:
        jet = field.jet(p, 3)
        samp = assemble_sample(jet, weights=weights, theta=theta)
        rep = darboux_check(samp, tol=darboux_tol)
        res = float(np.max(np.abs(samp.soliton_residual)))
        ok = rep.passed and res <= residual_tol
        all_ok = all_ok and ok
        entries.append(
            {
                "point": p,
                "moment": samp.moment,
                "holomorphy_potential": samp.holomorphy_potential,
                "soliton_residual": res,
                "darboux": rep,
                "passed": ok,
            }
        )
        rows.append(
            list(p)
            + [res, rep.j_squared_deviation, rep.compatibility_deviation, ok]
        )
    flat = None
    if field.certified_weights is not None:
        flat = flat_model_check(field, pts, tol=float(sub.get("flat_tol", 1e-10)))
    headers = [f"x{i+1}" for i in range(pts.shape[1])] + [
        "soliton_residual",
        "j_squared_deviation",
        "compatibility_deviation",
        "passed",
    ]
    report = {
        "task": "reconstruct",
        "all_passed": all_ok,
        "points": entries,
        "flat_model": flat,
        "flat_model_verdict": flat.verdict if flat is not None else None,
    }
    return report, (headers, rows), all_ok


def _task_scan(cfg, field, weights, rng):
    sub = cfg.get("scan", {})
    base = np.asarray(require(sub, "base", "scan"), dtype=float)
    target = float(require(sub, "target", "scan"))
    step = float(sub.get("step", 1e-3))
    record_every = int(sub.get("record_every", 10))
    include_bochner = bool(sub.get("bochner", False))
    if "directions" in sub:
        dirs = np.asarray(sub["directions"], dtype=float)
    else:
        count = int(sub.get("count", 4))
        dirs = rng.standard_normal((count, base.size))
    slack = float(sub.get("slack", 10.0 * step**2))
    entries, rows, all_ok = [], [], True
    for k, d in enumerate(dirs):
        rep = radial_scan(
            field,
            base,
            d,
            target_radius=target,
            weights=weights,
            step=step,
            record_every=record_every,
            include_bochner=include_bochner,
        )
        bound = mean_curvature_bound_check(rep, slack=slack)
        monotone = rep.is_monotone(slack)
        ok = monotone and bound.holds
        all_ok = all_ok and ok
        entries.append(
            {
                "direction": rep.direction,
                "stop_reason": rep.stop_reason,
                "max_radius": rep.max_radius,
                "monotone": monotone,
                "monotonicity_violation": rep.max_monotonicity_violation(),
                "bound_holds": bound.holds,
                "bound_max_ratio": bound.max_ratio,
                "samples": len(rep.samples),
            }
        )
        for s in rep.samples:
            rows.append(
                [k, s.r]
                + list(s.position)
                + [s.mean_curvature, s.weighted_mean_curvature, s.sigma, s.phi]
            )
    report = {
        "task": "scan",
        "base": base,
        "all_passed": all_ok,
        "rays": entries,
    }
    if "liouville_radii" in sub:
        lrep = liouville_scan(
            field, base, sub["liouville_radii"], weights=weights, step=step
        )
        report["liouville"] = lrep
    headers = (
        ["ray", "r"]
        + [f"x{i+1}" for i in range(base.size)]
        + ["mean_curvature", "weighted_mean_curvature", "sigma", "phi"]
    )
    return report, (headers, rows), all_ok


_HANDLERS = {
    "jet": _task_jet,
    "curvature": _task_curvature,
    "verify": _task_verify,
    "reconstruct": _task_reconstruct,
    "scan": _task_scan,
}


def _run(cfg: dict, seed: int, base_dir: Optional[Path]):
    task = require(cfg, "task", "config")
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}; expected one of {TASKS}")
    rng = np.random.default_rng(seed)
    field = field_from_config(require(cfg, "field", "config"), base_dir)
    needs_weights = task in ("verify", "solve", "reconstruct", "scan")
    weights = (
        weights_from_config(cfg.get("weights"), field) if needs_weights else None
    )
    if task == "solve":
        return _task_solve(cfg, field, weights, rng, base_dir)
    return _HANDLERS[task](cfg, field, weights, rng)


def _emit(payload: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(payload)
    else:
        Path(out).write_text(payload, encoding="utf-8")


def _error_envelope(exc: HessianLabError, operation: str, source: str) -> str:
    return json.dumps(
        {
            "error": {
                "type": type(exc).__name__,
                "module": type(exc).__module__,
                "operation": operation,
                "message": str(exc),
                "input": source,
            }
        },
        sort_keys=True,
        indent=2,
    ) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hessianlab",
        description="Weighted Hessian-geometry laboratory runner",
    )
    parser.add_argument("config", help="TOML or JSON run configuration")
    parser.add_argument(
        "--out", help="write the report here instead of stdout (overrides config)"
    )
    parser.add_argument(
        "--seed", type=int, help="sampling seed (overrides config; default 0)"
    )
    parser.add_argument(
        "--format", choices=("json", "csv"), dest="fmt",
        help="report format (overrides config; default json)",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    args = parser.parse_args(argv)

    task = "config"
    out = args.out
    try:
        cfg = load_config(args.config)
        task = cfg.get("task", "config")
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        fmt = args.fmt if args.fmt is not None else cfg.get("format", "json")
        if fmt not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {fmt!r}")
        if out is None:
            out = cfg.get("out")
        report, (headers, rows), ok = _run(
            cfg, seed, Path(args.config).resolve().parent
        )
        report["seed"] = seed
        if fmt == "csv":
            payload = _csv(headers, rows)
        else:
            payload = json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"
        _emit(payload, out)
        return 0 if ok else 1
    except _CHECK_ERRORS as exc:
        _emit(_error_envelope(exc, task, args.config), out)
        return 1
    except HessianLabError as exc:
        _emit(_error_envelope(exc, task, args.config), out)
        return 2


if __name__ == "__main__":
    sys.exit(main())
