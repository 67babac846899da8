"""Batch command line: fixture generation, verification, recovery and
point conversion. All inputs and outputs are JSON documents (see ``io``).

Exit codes: 0 ok/unique, 1 usage or I/O error, 2 validation failure,
3 inconsistent/rejected, 4 underdetermined.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import fixtures, io
from .cone import ConformalityError, cone_contains, cone_convert, cone_lift, cone_project, extract_conformal_factor
from .cone import quadric_residual, verify_isometric_immersion, verify_lemma1
from .conformal import Status, conformal_to_lorentz
from .lorentz import DEFAULT_TOL
from .rigidity import CorrespondenceSet, extend_cone_isometry, locality_check, recover_tau, verify_rigidity

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_INCONSISTENT, EXIT_UNDERDETERMINED = 0, 1, 2, 3, 4
STATUS_EXIT = {
    Status.UNIQUE: EXIT_OK,
    Status.INCONSISTENT: EXIT_INCONSISTENT,
    Status.UNDERDETERMINED: EXIT_UNDERDETERMINED,
}
FIXTURES = ("circle-n2", "sphere-identity", "tau-pair", "cone-selfmap", "nonconformal-pair", "single-ray")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for validation failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> float:
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError("tolerances must be positive")
    return val


def default_tol() -> float:
    env = os.environ.get("CONELIFT_TOL")
    if env is None:
        return DEFAULT_TOL
    try:
        return _positive(env)
    except (ValueError, argparse.ArgumentTypeError):
        raise UsageError(f"CONELIFT_TOL={env!r} is not a positive number") from None


def _emit(doc, out: str | None) -> None:
    text = io.dumps(doc)
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load(path: str):
    try:
        return io.read_json(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _load_metric(path: str | None, chart):
    if path is None:
        return None
    return io.metric_from_json(_load(path), chart)


def metric_to_json(chart) -> dict:
    return {"m": chart.m, "shape": list(chart.shape), "metric": chart.metric.reshape(-1, chart.m ** 2).tolist()}


# -- commands ----------------------------------------------------------------


def cmd_gen(args) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, dict] = {}
    name, n, seed, k = args.fixture, args.n, args.seed, args.k

    if name == "circle-n2":
        phi1, phi2 = fixtures.circle_charts(args.nodes or 512)
        files["circle_phi1.json"] = io.chart_to_json(phi1)
        files["circle_phi2.json"] = io.chart_to_json(phi2)
        files["circle_metric.json"] = metric_to_json(phi1)
        files["circle_pairs.json"] = io.correspondence_to_json(fixtures.circle_pairs(16))
    elif name == "sphere-identity":
        files["sphere_identity.json"] = io.chart_to_json(fixtures.sphere_identity(n or 3, k=k))
    elif name == "tau-pair":
        n = n or 3
        chart1, chart2, tau0 = fixtures.tau_pair(seed, n, k=k)
        files["tau_chart1.json"] = io.chart_to_json(chart1)
        files["tau_chart2.json"] = io.chart_to_json(chart2)
        pairs, _ = fixtures.tau_pair_points(seed, n)
        if k != 0:
            pairs = CorrespondenceSet(k, cone_convert(pairs.source, 0, k), cone_convert(pairs.target, 0, k, tol=None))
        files["tau_pairs.json"] = io.correspondence_to_json(pairs)
        files["tau0.json"] = io.matrix_to_json(tau0)
    elif name == "cone-selfmap":
        samples, tau0 = fixtures.cone_selfmap(seed, n or 3, args.variant)
        files["selfmap.json"] = io.selfmap_to_json(samples)
        files["selfmap_tau0.json"] = io.matrix_to_json(tau0)
    elif name == "nonconformal-pair":
        z, zt = fixtures.nonconformal_pairs(seed, n or 3)
        files["nonconformal_pairs.json"] = io.sphere_pairs_to_json(z, zt)
    elif name == "single-ray":
        files["single_ray_pairs.json"] = io.correspondence_to_json(fixtures.single_ray_pairs(n or 3))
    else:  # argparse restricts choices; kept for direct callers
        raise UsageError(f"unknown fixture {name!r}")

    for fname, doc in files.items():
        io.write_json(doc, out / fname)
    print(json.dumps({"fixture": name, "files": sorted(str(out / f) for f in files)}))
    return EXIT_OK


def cmd_verify(args) -> int:
    chart = io.chart_from_json(_load(args.chart))
    if chart.target != "cone":
        raise UsageError("verify expects a cone chart")
    g = _load_metric(args.metric, chart)
    if g is None and chart.metric is None:
        raise UsageError("no metric: the chart has none and --metric was not given")
    try:
        rep = verify_isometric_immersion(chart, g, args.fd_tol)
        lemma = verify_lemma1(chart, g)
    except ValueError as exc:
        _emit({"pass": False, "error": str(exc)}, args.out)
        return EXIT_INVALID
    passed = rep.passed and lemma <= args.fd_tol
    doc = {"immersion": rep.to_json(), "lemma1_residual": f"{lemma:.17g}", "pass": passed}
    _emit(doc, args.out)
    return EXIT_OK if passed else EXIT_INVALID


def cmd_recover(args) -> int:
    inputs = args.inputs
    if len(inputs) == 1:
        doc = _load(inputs[0])
        if "k" in doc:
            c = io.correspondence_from_json(doc)
            try:
                rep = recover_tau(c, args.tol, polish=args.polish)
            except ValueError as exc:
                _emit({"status": "invalid", "error": str(exc)}, args.out)
                return EXIT_INVALID
            _emit(rep.to_json(), args.out)
            return STATUS_EXIT[rep.status]
        z, zt = io.sphere_pairs_from_json(doc)
        fit = conformal_to_lorentz(z, zt, args.tol)
        _emit(fit.to_json(), args.out)
        return STATUS_EXIT[fit.status]
    if len(inputs) not in (2, 3):
        raise UsageError("recover takes a pair file, or chart1 chart2 [metric]")
    chart1 = io.chart_from_json(_load(inputs[0]))
    chart2 = io.chart_from_json(_load(inputs[1]))
    g = _load_metric(inputs[2] if len(inputs) == 3 else None, chart1)
    try:
        rig = verify_rigidity(chart1, chart2, g, args.tol, args.fd_tol)
    except ValueError as exc:
        _emit({"status": "invalid", "error": str(exc)}, args.out)
        return EXIT_INVALID
    doc = rig.to_json()
    if args.locality and rig.recovery is not None:
        doc["locality"] = locality_check(chart1, chart2, tol=args.tol).to_json()
    _emit(doc, args.out)
    if rig.recovery is None:
        return EXIT_INVALID
    return STATUS_EXIT[rig.recovery.status]


def cmd_extend(args) -> int:
    samples = io.selfmap_from_json(_load(args.selfmap))
    try:
        rep = extend_cone_isometry(samples, args.tol, args.fd_tol)
    except ValueError as exc:
        _emit({"status": "invalid", "error": str(exc)}, args.out)
        return EXIT_INVALID
    _emit(rep.to_json(), args.out)
    return STATUS_EXIT[rep.status]


def _invalid_points(points: np.ndarray, k: int, tol: float, out: str | None) -> int | None:
    mem = cone_contains(points, k, tol)
    if mem.all_passed:
        return None
    bad = mem.failures().tolist()
    _emit({"error": "points not on the cone", "k": k, "invalid_indices": bad}, out)
    print(f"invalid points at indices {bad}", file=sys.stderr)
    return EXIT_INVALID


def cmd_embed(args) -> int:
    points, k_from, n = io.points_from_json(_load(args.points))
    if k_from is None:
        raise UsageError("embed expects cone points (a document with a 'k' field)")
    failed = _invalid_points(points, k_from, args.cone_tol, args.out)
    if failed is not None:
        return failed
    converted = cone_convert(points, k_from, args.to, tol=None)
    doc = io.points_to_json(converted, args.to, n)
    doc["quadric_residuals"] = [f"{r:.17g}" for r in quadric_residual(converted, args.to)]
    _emit(doc, args.out)
    return EXIT_OK


def cmd_project(args) -> int:
    points, k, n = io.points_from_json(_load(args.points))
    if k is None:
        raise UsageError("project expects cone points (a document with a 'k' field)")
    failed = _invalid_points(points, k, args.cone_tol, args.out)
    if failed is not None:
        return failed
    _emit(io.points_to_json(cone_project(points, k, tol=None), None, n), args.out)
    return EXIT_OK


def cmd_lift(args) -> int:
    psi = io.chart_from_json(_load(args.chart))
    if psi.target != "sphere":
        raise UsageError("lift expects a sphere chart")
    g = _load_metric(args.metric, psi)
    g = psi.metric if g is None else g
    if g is None:
        raise UsageError("no metric: the chart has none and --metric was not given")
    try:
        lam, residual = extract_conformal_factor(psi, g, args.fd_tol)
    except ConformalityError as exc:
        _emit({"pass": False, "error": str(exc), "residual": f"{exc.residual:.17g}"}, args.out)
        return EXIT_INVALID
    chart = cone_lift(psi, lam, args.k)
    chart.metric = g
    _emit(io.chart_to_json(chart), args.out)
    return EXIT_OK


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    tol = argparse.ArgumentParser(add_help=False)
    tol.add_argument("--tol", type=_positive, default=None, help="solver tolerance (default: $CONELIFT_TOL or 1e-9)")
    tol.add_argument("--fd-tol", type=_positive, default=1e-3, help="finite-difference tolerance (default 1e-3)")
    tol.add_argument("--out", default=None, help="output file (default: stdout)")

    p = _Parser(prog="conelift", description="Isometric immersions into light cones and Lorentz rigidity.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write fixture files")
    g.add_argument("fixture", choices=FIXTURES)
    g.add_argument("--n", type=int, default=None, help="sphere dimension + 1 (default 3)")
    g.add_argument("--k", type=int, choices=(0, 1, -1), default=0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--nodes", type=int, default=None, help="circle nodes (default 512)")
    g.add_argument("--variant", choices=("tau", "identity", "twisted"), default="tau")
    g.add_argument("--out", default=None, help="output directory (default: current)")
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("verify", parents=[tol], help="check an isometric cone immersion")
    v.add_argument("chart")
    v.add_argument("--metric", default=None)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("recover", parents=[tol], help="recover the Lorentz transformation")
    r.add_argument("inputs", nargs="+", help="pair file, or chart1 chart2 [metric]")
    r.add_argument("--polish", action="store_true", help="one Newton step towards the Lorentz group")
    r.add_argument("--locality", action="store_true", help="also run the per-window constancy check")
    r.set_defaults(func=cmd_recover)

    e = sub.add_parser("extend", parents=[tol], help="extend a sampled cone self-map")
    e.add_argument("selfmap")
    e.set_defaults(func=cmd_extend)

    for name, func, helptext in (
        ("embed", cmd_embed, "convert cone points between spacetimes"),
        ("project", cmd_project, "project cone points to the sphere"),
    ):
        c = sub.add_parser(name, parents=[tol], help=helptext)
        c.add_argument("points")
        c.add_argument("--cone-tol", type=_positive, default=1e-10, help="cone membership tolerance")
        c.set_defaults(func=func)
        if name == "embed":
            c.add_argument("--to", "--k", dest="to", type=int, choices=(0, 1, -1), required=True)

    lf = sub.add_parser("lift", parents=[tol], help="lift a conformal sphere chart to the cone")
    lf.add_argument("chart")
    lf.add_argument("--metric", default=None)
    lf.add_argument("--k", type=int, choices=(0, 1, -1), default=0)
    lf.set_defaults(func=cmd_lift)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "tol", None) is None and hasattr(args, "fd_tol"):
            args.tol = default_tol()
        return args.func(args)
    except (UsageError, io.SchemaError) as exc:
        print(f"conelift: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())
