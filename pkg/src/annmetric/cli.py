"""Command-line front end: ingest spaces and instances, run checks, emit JSON.

Exit codes: 0 = all checks passed / no violation found; 1 = violation or
refusal found, with the certificate in the report; 2 = input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import lebedeva
from .barycenter import pi_prop_slack, variance_identity_residual
from .inequalities import check_boxtimes
from .lebedeva import ConditionError
from .reports import digest_bytes, digest_obj, envelope, render_json
from .sampling import random_ann_plan, random_cloud, rng_from_seed
from .search import (
    SearchConfig,
    TooManyPointsError,
    certify_embeddable_upto5,
    search_violation,
)
from .spaces import (
    PointCloud,
    SemimetricError,
    SemimetricSpace,
    check_triangle,
    from_points,
    mirror_upper,
    validate_semimetric,
)

BOXTIMES_TOL = 1e-9
SEARCH_TOL = 1e-7


class InputError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


def _read_file(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError("parse_error", f"cannot read {path}: {exc}") from exc


def _load_json(raw: bytes, path: str):
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InputError("parse_error", f"{path} is not valid JSON: {exc}") from exc


def load_space(path: str, mirror: bool = False) -> tuple[np.ndarray, str]:
    """Load a distance matrix; returns (matrix, digest).

    Accepts JSON {"n": ..., "d": [[...]]}, point-cloud JSON
    {"dim": ..., "points": [[...]]} (converted to Euclidean distances), or a
    CSV of matrix rows.
    """
    raw = _read_file(path)
    dig = digest_bytes(raw)
    if path.endswith(".csv"):
        try:
            matrix = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
        except ValueError as exc:
            raise InputError("parse_error", f"{path}: bad CSV: {exc}") from exc
    else:
        doc = _load_json(raw, path)
        if isinstance(doc, dict) and "points" in doc:
            try:
                cloud = PointCloud(points=np.asarray(doc["points"], dtype=float))
            except (TypeError, ValueError) as exc:
                raise InputError("schema_mismatch", f"{path}: bad point cloud: {exc}") from exc
            if "dim" in doc and cloud.dim != doc["dim"]:
                raise InputError(
                    "schema_mismatch",
                    f"{path}: points have dimension {cloud.dim}, but dim = {doc['dim']}",
                )
            matrix = from_points(cloud).d
        elif isinstance(doc, dict) and "d" in doc:
            try:
                matrix = np.asarray(doc["d"], dtype=float)
            except (TypeError, ValueError) as exc:
                raise InputError("schema_mismatch", f"{path}: d is not a numeric matrix") from exc
            if "n" in doc and matrix.shape != (doc["n"], doc["n"]):
                raise InputError(
                    "schema_mismatch",
                    f"{path}: d has shape {matrix.shape}, but n = {doc['n']}",
                )
        else:
            raise InputError(
                "schema_mismatch",
                f'{path}: expected {{"n", "d"}} or {{"dim", "points"}}',
            )
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InputError("schema_mismatch", f"{path}: matrix is not square: {matrix.shape}")
    if mirror:
        matrix = mirror_upper(matrix)
    return matrix, dig


def load_instance(path: str, gamma_flag: float | None):
    raw = _read_file(path)
    dig = digest_bytes(raw)
    doc = _load_json(raw, path)
    if not isinstance(doc, dict) or "points" not in doc:
        raise InputError("schema_mismatch", f'{path}: expected {{"points": [[x,y,z] x 6], "gamma": ...}}')
    pts = np.asarray(doc["points"], dtype=float)
    if pts.shape != (6, 3):
        raise InputError("schema_mismatch", f"{path}: points must be 6x3, got {pts.shape}")
    gamma = gamma_flag if gamma_flag is not None else float(doc.get("gamma", 1.0))
    return pts, gamma, dig


def _space_json(space: SemimetricSpace) -> dict:
    return {"n": space.n, "d": space.d}


def _plan_json(plan) -> dict:
    return {"p": plan.p, "q": plan.q, "pi": plan.pi}


def _instance_json(inst: lebedeva.LebedevaInstance) -> dict:
    return {
        "points": inst.points,
        "gamma": inst.gamma,
        "h": inst.h,
        "H": inst.H,
        "theta": inst.theta,
        "delta": inst.delta,
        "c": inst.c,
        "C": inst.C,
        "y0": inst.y0,
        "crossing": inst.crossing,
    }


def cmd_check_metric(args) -> tuple[int, dict]:
    matrix, dig = load_space(args.space, mirror=args.mirror_upper)
    witnesses = []
    try:
        space = validate_semimetric(matrix)
    except SemimetricError as exc:
        if ("non_square",) in exc.violations:
            raise InputError("schema_mismatch", str(exc)) from exc
        witnesses = [
            {"kind": "semimetric", "violation": [str(v[0])] + [int(x) for x in v[1:]]}
            for v in exc.violations
        ]
        results = {"semimetric": False, "metric": False}
        report = envelope("check-metric", dig, results, witnesses, {"triples_checked": 0})
        return 1, report
    triangle = check_triangle(space)
    for i, j, k, slack in triangle:
        witnesses.append({"kind": "triangle", "triple": [i, j, k], "slack": slack})
    results = {
        "semimetric": True,
        "metric": len(triangle) == 0,
        "n": space.n,
        "triangle_violations": len(triangle),
    }
    report = envelope(
        "check-metric", dig, results, witnesses, {"triples_checked": space.n ** 3}
    )
    return (0 if not triangle else 1), report


def cmd_check_boxtimes(args) -> tuple[int, dict]:
    matrix, dig = load_space(args.space)
    space = validate_semimetric(matrix)
    rep = check_boxtimes(space)
    holds = rep.holds(args.tol)
    witnesses = []
    if not holds:
        witnesses.append(
            {
                "kind": "boxtimes",
                "quadruple": list(rep.quadruple),
                "s": rep.s,
                "t": rep.t,
                "gap": rep.min_gap,
            }
        )
    results = {"holds": holds, "min_gap": rep.min_gap, "tol": args.tol}
    report = envelope(
        "check-boxtimes",
        dig,
        results,
        witnesses,
        {"quadruples_checked": rep.quadruples_checked},
    )
    return (0 if holds else 1), report


def cmd_search(args) -> tuple[int, dict]:
    matrix, dig = load_space(args.space)
    space = validate_semimetric(matrix)
    cfg = SearchConfig(restarts=args.restarts, seed=args.seed, tol=args.tol)
    rep = search_violation(space, cfg)
    violated = rep.best_gap < -args.tol
    witnesses = []
    if violated:
        witnesses.append(
            {
                "kind": "ann_plan",
                "plan": _plan_json(rep.best_plan),
                "assignment": list(rep.best_assignment),
                "gap": rep.best_gap,
            }
        )
    results = {
        "violation_found": violated,
        "best_gap": rep.best_gap,
        "plan": _plan_json(rep.best_plan),
        "assignment": list(rep.best_assignment),
        "evaluations": rep.evaluations,
        "seed": rep.seed,
        "tol": args.tol,
    }
    report = envelope(
        "search-ann-violation",
        dig,
        results,
        witnesses,
        {"evaluations": rep.evaluations, "converged_restarts": rep.converged_restarts},
    )
    return (1 if violated else 0), report


def _make_instance(args):
    if args.instance is not None:
        pts, gamma, dig = load_instance(args.instance, getattr(args, "gamma", None))
    else:
        pts = lebedeva.DEFAULT_POINTS
        gamma = args.gamma if getattr(args, "gamma", None) is not None else 1.0
        dig = digest_obj({"points": pts, "gamma": gamma})
    return pts, gamma, dig


def cmd_build_lebedeva(args) -> tuple[int, dict]:
    pts, gamma, dig = _make_instance(args)
    grid_results = None
    if args.gamma_grid:
        inst, pairs = lebedeva.best_gamma_instance(pts)
        grid_results = [{"gamma": g, "C": c} for g, c in pairs]
    else:
        inst = lebedeva.build_instance(pts, gamma=gamma)
    results = {"instance": _instance_json(inst), "x5x6": inst.x5x6}
    if grid_results is not None:
        results["gamma_grid"] = grid_results
    built = len(grid_results) if grid_results is not None else 1
    report = envelope("build-lebedeva", dig, results, [], {"instances_built": built})
    return 0, report


def cmd_verify_lebedeva(args) -> tuple[int, dict]:
    pts, gamma, dig = _make_instance(args)
    inst = lebedeva.build_instance(pts, gamma=gamma)
    if args.epsilon_absolute is not None:
        eps = args.epsilon_absolute
    else:
        if not (0.0 < args.epsilon_fraction <= 1.0):
            raise InputError(
                "schema_mismatch",
                f"--epsilon-fraction must lie in (0, 1], got {args.epsilon_fraction}",
            )
        eps = args.epsilon_fraction * inst.C
    space = lebedeva.build_metric(inst.points, eps)
    triangle = check_triangle(space)
    box = check_boxtimes(space)
    cfg = SearchConfig(restarts=args.restarts, seed=args.seed, tol=SEARCH_TOL)
    rep = search_violation(space, cfg)
    ok = (
        len(triangle) == 0
        and box.min_gap >= -BOXTIMES_TOL
        and rep.best_gap >= -SEARCH_TOL
    )
    witnesses = []
    for i, j, k, slack in triangle:
        witnesses.append({"kind": "triangle", "triple": [i, j, k], "slack": slack})
    if box.min_gap < -BOXTIMES_TOL:
        witnesses.append(
            {
                "kind": "boxtimes",
                "quadruple": list(box.quadruple),
                "s": box.s,
                "t": box.t,
                "gap": box.min_gap,
            }
        )
    if rep.best_gap < -SEARCH_TOL:
        witnesses.append(
            {
                "kind": "ann_plan",
                "plan": _plan_json(rep.best_plan),
                "assignment": list(rep.best_assignment),
                "gap": rep.best_gap,
            }
        )
    results = {
        "instance": _instance_json(inst),
        "epsilon": eps,
        "checks": {
            "triangle_ok": len(triangle) == 0,
            "boxtimes_min_gap": box.min_gap,
            "boxtimes_ok": box.min_gap >= -BOXTIMES_TOL,
            "search_best_gap": rep.best_gap,
            "search_ok": rep.best_gap >= -SEARCH_TOL,
            "search_seed": rep.seed,
            "search_restarts": args.restarts,
        },
        "all_ok": ok,
        "non_embeddability": {
            "status": "cited_not_verified",
            "note": (
                "That this perturbed six-point space admits no isometric "
                "embedding into any CAT(0) space is a known result taken on "
                "citation; this report verifies the metric axioms and the "
                "inequality family only."
            ),
        },
    }
    timing = {
        "triples_checked": space.n ** 3,
        "quadruples_checked": box.quadruples_checked,
        "search_evaluations": rep.evaluations,
        "converged_restarts": rep.converged_restarts,
    }
    report = envelope("verify-lebedeva", dig, results, witnesses, timing)
    return (0 if ok else 1), report


def cmd_certify(args) -> tuple[int, dict]:
    matrix, dig = load_space(args.space)
    space = validate_semimetric(matrix)
    try:
        cert = certify_embeddable_upto5(space, tol=args.tol)
    except TooManyPointsError as exc:
        raise InputError("schema_mismatch", str(exc)) from exc
    witnesses = []
    if cert.status == "NOT_EMBEDDABLE":
        witnesses.append(
            {
                "kind": "boxtimes",
                "quadruple": list(cert.quadruple),
                "s": cert.s,
                "t": cert.t,
                "gap": cert.min_gap,
            }
        )
    results = {
        "status": cert.status,
        "min_gap": cert.min_gap,
        "tol": cert.tol,
        "triangle_violations": cert.triangle_violations,
    }
    report = envelope(
        "certify-upto5", dig, results, witnesses, {"quadruples_checked": space.n ** 4}
    )
    return (0 if cert.status == "EMBEDDABLE" else 1), report


def cmd_verify_euclidean(args) -> tuple[int, dict]:
    options = {"count": args.count, "dim": args.dim, "seed": args.seed}
    dig = digest_obj(options)
    rng = rng_from_seed(args.seed)
    worst_residual = None
    worst_slack = None
    for _ in range(args.count):
        m = int(rng.integers(2, 9))
        dim = int(rng.integers(1, args.dim + 1))
        cloud = random_cloud(rng, m, dim)
        weights = rng.dirichlet(np.ones(m))
        w_point = rng.uniform(-1.0, 1.0, size=dim)
        res = variance_identity_residual(cloud, weights, w_point)
        worst_residual = res if worst_residual is None else max(worst_residual, res)
        plan = random_ann_plan(rng, m)
        for use_q in (False, True):
            slack, _ = pi_prop_slack(cloud, plan, use_q=use_q)
            worst_slack = slack if worst_slack is None else min(worst_slack, slack)
    ok = (worst_residual is None or worst_residual < 1e-9) and (
        worst_slack is None or worst_slack >= -1e-9
    )
    results = {
        "instances": args.count,
        "worst_variance_residual": worst_residual,
        "worst_coupling_slack": worst_slack,
        "all_ok": ok,
    }
    report = envelope(
        "verify-euclidean", dig, results, [], {"instances": args.count}
    )
    return (0 if ok else 1), report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annmetric",
        description="Check and search ANN-type quadratic metric inequalities "
        "on finite semimetric spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(sp):
        sp.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("check-metric", help="validate semimetric axioms and audit triangles")
    p.add_argument("space")
    p.add_argument("--mirror-upper", action="store_true",
                   help="mirror the upper triangle onto the lower one before validating")
    add_out(p)
    p.set_defaults(handler=cmd_check_metric)

    p = sub.add_parser("check-boxtimes", help="minimize the quadruple inequality over all quadruples")
    p.add_argument("space")
    p.add_argument("--tol", type=float, default=BOXTIMES_TOL)
    add_out(p)
    p.set_defaults(handler=cmd_check_boxtimes)

    p = sub.add_parser("search-ann-violation", help="multistart search for a violating plan")
    p.add_argument("space")
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=SEARCH_TOL)
    add_out(p)
    p.set_defaults(handler=cmd_search)

    p = sub.add_parser("build-lebedeva", help="derive the six-point constants and bound")
    p.add_argument("--instance", help="instance JSON; defaults to the bundled configuration")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=float, default=None)
    g.add_argument("--gamma-grid", action="store_true",
                   help="maximize the bound over gamma in {2^k : -6 <= k <= 6}")
    add_out(p)
    p.set_defaults(handler=cmd_build_lebedeva)

    p = sub.add_parser("verify-lebedeva", help="triangle + quadruple + search verification at epsilon")
    p.add_argument("--instance")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--epsilon-fraction", type=float, default=1.0,
                   help="epsilon as a fraction of the computed bound (default 1.0)")
    p.add_argument("--epsilon-absolute", type=float, default=None,
                   help="absolute epsilon, bypassing the certified regime")
    p.add_argument("--restarts", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    add_out(p)
    p.set_defaults(handler=cmd_verify_lebedeva)

    p = sub.add_parser("certify-upto5", help="embeddability certificate for spaces of at most 5 points")
    p.add_argument("space")
    p.add_argument("--tol", type=float, default=SEARCH_TOL)
    add_out(p)
    p.set_defaults(handler=cmd_certify)

    p = sub.add_parser("verify-euclidean", help="random-instance verification of the barycenter facts")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--seed", type=int, default=1)
    add_out(p)
    p.set_defaults(handler=cmd_verify_euclidean)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code, report = args.handler(args)
    except InputError as exc:
        report = envelope(
            args.command,
            "",
            {"ok": False, "error": {"code": exc.code, "message": str(exc)}},
            [],
            {},
        )
        code = 2
    except ConditionError as exc:
        report = envelope(
            args.command,
            "",
            {
                "ok": False,
                "error": {"code": exc.code, "message": str(exc), "detail": exc.detail},
            },
            [],
            {},
        )
        code = 2
    except (SemimetricError, ValueError) as exc:
        report = envelope(
            args.command,
            "",
            {"ok": False, "error": {"code": "invalid_input", "message": str(exc)}},
            [],
            {},
        )
        code = 2
    text = render_json(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
