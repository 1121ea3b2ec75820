"""Command-line interface.

One binary with subcommands per module; machine-readable output first.
Functional results serialize as JSON objects with keys value, center, scale,
refinement_gap, diagnostics; table-producing subcommands emit CSV.  Exit
codes: 0 success, 2 validation error, 3 numeric failure (non-convergence or
tail-bound violation).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import acceptance, flow, functionals, heatlab, manifold, weights

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


class NumericFailure(RuntimeError):
    pass


def _parse_catalog(spec: str) -> manifold.ChartSpec:
    name, _, rest = spec.partition(":")
    params = [float(p) for p in rest.split(",") if p] if rest else []
    return manifold.catalog_make(name, params)


def _parse_int_list(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(p) for p in text.split(",") if p]


def _parse_float_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p]


def _resolution(args, chart) -> tuple[int, ...]:
    if args.resolution:
        res = _parse_int_list(args.resolution)
        return tuple(res) if len(res) > 1 else (res[0],) * chart.intrinsic_dim
    return manifold.default_resolution(chart)


def _optimizer_config(args) -> functionals.OptimizerConfig:
    threads = args.threads or int(os.environ.get("SHRINKERLAB_THREADS", "1"))
    return functionals.OptimizerConfig(seed=args.seed, threads=threads)


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_result(args, result: functionals.FunctionalResult, extra: dict | None = None) -> None:
    payload = result.as_dict()
    if extra:
        payload.update(extra)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["value", "center", "scale", "refinement_gap", "converged", "n_starts"])
        w.writerow(
            [
                repr(result.value),
                " ".join(repr(c) for c in payload["center"]),
                repr(result.scale),
                repr(result.refinement_gap),
                result.converged,
                result.n_starts,
            ]
        )
        _emit(args, buf.getvalue())
    else:
        _emit(args, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    if not result.converged:
        raise NumericFailure("supremum search did not converge; value is a lower bound only")


def _scan_dump(args, sampled, kind: str, cfg) -> None:
    if not args.scan_csv:
        return
    scales = cfg.scale_grid()
    centers = functionals._center_probes(sampled, cfg)
    n = sampled.intrinsic_dim
    with open(args.scan_csv, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"c{i}" for i in range(sampled.ambient_dim)] + ["scale", "value"])
        for c in centers:
            for s in scales:
                if kind == "CM":
                    v = functionals.gaussian_density_at(sampled, c, float(s))
                else:
                    v = functionals.conformal_integral(sampled, n, float(s), c) / weights.sphere_area(n)
                w.writerow([repr(x) for x in c] + [repr(float(s)), repr(v)])


def _cmd_entropy(args) -> None:
    chart = _parse_catalog(args.catalog)
    cfg = _optimizer_config(args)
    res = _resolution(args, chart)
    fun = functionals.cm_entropy if args.cmd == "entropy" else functionals.ly_confvol
    if args.no_refine:
        result = fun(manifold.build_samples(chart, res), cfg)
    else:
        result = functionals.refined(chart, res, fun, cfg)
    _scan_dump(args, manifold.build_samples(chart, res), "CM" if args.cmd == "entropy" else "LY", cfg)
    _emit_result(args, result, {"catalog": manifold.chart_manifest(chart, res)})


def _cmd_stable(args) -> None:
    chart = _parse_catalog(args.catalog)
    cfg = _optimizer_config(args)
    res = _resolution(args, chart)
    sampled = manifold.build_samples(chart, res)
    report = functionals.stable_confvol_estimate(sampled, _parse_int_list(args.m_list), cfg)
    payload = {
        "m_list": report.m_list,
        "values": [r.value for r in report.results],
        "monotone": report.monotone,
        "max_decrease": report.max_decrease,
        "estimate": report.estimate,
        "results": [r.as_dict() for r in report.results],
    }
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["m", "value", "scale"])
        for m, r in zip(report.m_list, report.results):
            w.writerow([m, repr(r.value), repr(r.scale)])
        _emit(args, buf.getvalue())
    else:
        _emit(args, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    if not report.monotone:
        raise NumericFailure(f"stabilized sequence decreased by {report.max_decrease:.2e}")


def _cmd_vtbound(args) -> None:
    chart = _parse_catalog(args.catalog)
    res = _resolution(args, chart)
    sampled = manifold.build_samples(chart, res)
    center = (
        np.array(_parse_float_list(args.center))
        if args.center
        else np.zeros(sampled.ambient_dim)
    )
    value = functionals.vt_lower_bound(sampled, args.m, args.rho, center)
    payload = {
        "value": value,
        "center": [float(c) for c in center],
        "scale": args.rho,
        "m": args.m,
        "catalog": manifold.chart_manifest(chart, res),
    }
    _emit(args, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _cmd_constants(args) -> None:
    ms = _parse_int_list(args.m)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["n", "m", "c_const", "c_hat", "alpha_mass"])
    for m in ms:
        w.writerow(
            [
                args.n,
                m,
                repr(weights.c_const(args.n, m)),
                repr(weights.c_hat(args.n, m)),
                repr(weights.alpha_mass(args.n, m, args.n)),
            ]
        )
    _emit(args, buf.getvalue())


def _parse_density(args) -> heatlab.GridDensity:
    kind, _, rest = args.density.partition(":")
    params = [float(p) for p in rest.split(",") if p] if rest else []
    if kind == "gaussian":
        t0 = params[0] if params else 1.0
        return heatlab.gaussian_density(args.N, t0, args.L, args.h)
    if kind == "what":
        if len(params) != 2:
            raise ValueError("density what:m,rho needs two parameters")
        return heatlab.density_from_weight(
            args.N, int(params[0]), params[1], args.L, args.h, tail_tol=args.tail_tol
        )
    if kind == "bump":
        radius = params[0] if params else 1.0
        return heatlab.bump_density(args.N, args.L, args.h, radius)
    raise ValueError(f"unknown density kind {kind!r}")


def _cmd_heat(args) -> None:
    u0 = _parse_density(args)
    x0 = heatlab.grid_mean(u0)
    T0 = -heatlab.grid_second_moment(u0) / (2.0 * args.N)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["t", "mass", "tau", "harnack_margin", "l1_to_gaussian"])
    for t in _parse_float_list(args.times):
        u = heatlab.heat_at(u0, t)
        est = heatlab.estimate_virtual_time(u)
        margin = est.min_eigenvalue + 1.0 / (2.0 * t)
        l1, _ = heatlab.gaussian_distance(u, t, T0, x0)
        w.writerow([repr(t), repr(u.mass), repr(est.tau), repr(margin), repr(l1)])
    _emit(args, buf.getvalue())


def _cmd_flow(args) -> None:
    kind, _, rest = args.curve.partition(":")
    params = [float(p) for p in rest.split(",") if p] if rest else []
    if kind == "circle":
        curve = flow.circle_curve(params[0] if params else 1.0, args.points)
    elif kind == "ellipse":
        if len(params) != 2:
            raise ValueError("curve ellipse:a,b needs two parameters")
        curve = flow.ellipse_curve(params[0], params[1], args.points)
    else:
        raise ValueError(f"unknown curve kind {kind!r}")
    cfg = flow.FlowConfig(
        dt_factor=args.dt_factor,
        checkpoints=args.checkpoints,
        entropy_cfg=_optimizer_config(args),
    )
    trace = flow.run_flow(curve, args.T, cfg)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["t", "length", "entropy", "residual"])
    for t, L, e, r in zip(trace.times, trace.lengths, trace.entropies, trace.residuals):
        w.writerow([repr(t), repr(L), repr(e.value), repr(r)])
    _emit(args, buf.getvalue())


def _cmd_verify(args) -> None:
    ids = acceptance.ALL_IDS if args.suite == "all" else _parse_int_list(args.suite)
    results = acceptance.run_suite(ids)
    if not all(r.passed for r in results):
        raise NumericFailure("acceptance criteria failed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shrinkerlab",
        description="Gaussian-density entropy and conformal-volume functionals on catalog submanifolds",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--output", help="write output to this path instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized starts")
        p.add_argument("--threads", type=int, default=0, help="refinement workers (env SHRINKERLAB_THREADS)")

    for name, help_text in (
        ("entropy", "Gaussian-density entropy of a catalog manifold"),
        ("confvol", "normalized conformal volume of a catalog manifold"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--catalog", required=True, help="entry as name:p1,p2 (e.g. sphere:2,2)")
        p.add_argument("--resolution", help="per-axis node counts, comma separated")
        p.add_argument("--no-refine", action="store_true", help="skip the halved-resolution check")
        p.add_argument("--scan-csv", help="dump the coarse (center, scale) scan to this CSV")
        common(p)
        p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("stable", help="stabilized conformal volumes along increasing m")
    p.add_argument("--catalog", required=True)
    p.add_argument("--resolution")
    p.add_argument("--m-list", default="0,1,2,5")
    common(p)
    p.set_defaults(func=_cmd_stable)

    p = sub.add_parser("vtbound", help="virtual-entropy lower bound from one explicit density")
    p.add_argument("--catalog", required=True)
    p.add_argument("--resolution")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--center", help="comma-separated ambient coordinates (default origin)")
    common(p)
    p.set_defaults(func=_cmd_vtbound)

    p = sub.add_parser("constants", help="C, Chat, alpha tables as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", default="0..5", help="range lo..hi or comma list")
    common(p)
    p.set_defaults(func=_cmd_constants)

    p = sub.add_parser("heat", help="heat-kernel evolution diagnostics as CSV")
    p.add_argument("--N", type=int, default=1, choices=(1, 2))
    p.add_argument("--L", type=float, default=100.0)
    p.add_argument("--h", type=float, default=0.05)
    p.add_argument("--density", default="gaussian:1", help="gaussian:t | what:m,rho | bump:radius")
    p.add_argument("--times", default="0.5,1,2,4")
    p.add_argument("--tail-tol", type=float, default=1e-3, help="allowed continuum mass outside the grid")
    common(p)
    p.set_defaults(func=_cmd_heat)

    p = sub.add_parser("flow", help="curve-shortening flow trace as CSV")
    p.add_argument("--curve", default="ellipse:2,1", help="circle:R | ellipse:a,b")
    p.add_argument("--T", type=float, default=0.8)
    p.add_argument("--dt-factor", type=float, default=flow.CFL_FACTOR)
    p.add_argument("--checkpoints", type=int, default=10)
    p.add_argument("--points", type=int, default=384)
    common(p)
    p.set_defaults(func=_cmd_flow)

    p = sub.add_parser("verify", help="run acceptance criteria")
    p.add_argument("--suite", default="all", help="'all' or comma list of criterion ids")
    common(p)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    try:
        args.func(args)
    except (manifold.CatalogError, heatlab.GridError, ValueError) as exc:
        if isinstance(exc, heatlab.TailMassError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericFailure, flow.FlowCollapseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
