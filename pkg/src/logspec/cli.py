"""Command line front end.

Every subcommand builds the same request payload the HTTP service accepts,
then either calls the service handlers in process (the default) or posts the
payload to a running server given with --server. Exit codes follow the
certificate convention: 0 when everything passes, 1 when any certificate
fails, 2 for usage errors.
"""

import argparse
import json
import sys
from pathlib import Path

from pydantic import ValidationError

from . import __version__
from .experiments import KNOWN_SUITES


class UsageError(Exception):
    pass


def _parse_center(text):
    if text is None:
        return None
    return [float(part) for part in text.split(",")]


def _parse_point(text):
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise UsageError("bad point %r; write coordinates comma-separated" % text)


def _domain_payload(args):
    payload = {"kind": args.domain}
    if args.domain in ("interval", "box"):
        payload["a"] = args.a
        payload["b"] = args.b
    else:
        if args.center is None or args.radius is None:
            raise UsageError("disk domains need --center and --radius")
        payload["center"] = _parse_center(args.center)
        payload["radius"] = args.radius
    return payload


def _call(args, path, payload):
    """Dispatch one request, either over HTTP or straight into the service."""
    if getattr(args, "server", None):
        import httpx

        url = args.server.rstrip("/") + path
        try:
            resp = httpx.post(url, json=payload, timeout=600.0)
        except httpx.HTTPError as exc:
            raise UsageError("cannot reach %s: %s" % (url, exc))
        if resp.status_code == 422:
            raise UsageError(json.dumps(resp.json().get("detail")))
        resp.raise_for_status()
        return resp.json()

    from fastapi import HTTPException

    from . import service
    from .schemas import (
        BoundsRequest,
        CoeffsRequest,
        DemoCompositionRequest,
        EvalOpRequest,
        ReportRequest,
        SpectrumRequest,
    )

    routes = {
        "/coeffs": (service.coeffs, CoeffsRequest),
        "/spectrum": (service.spectrum, SpectrumRequest),
        "/eval-op": (service.eval_op, EvalOpRequest),
        "/bounds": (service.bounds, BoundsRequest),
        "/report": (service.report, ReportRequest),
        "/demo-composition": (service.demo_composition, DemoCompositionRequest),
    }
    handler, request_cls = routes[path]
    try:
        request = request_cls(**payload)
    except ValidationError as exc:
        raise UsageError(str(exc))
    try:
        result = handler(request)
    except HTTPException as exc:
        detail = exc.detail
        raise UsageError(
            detail if isinstance(detail, str) else json.dumps(detail)
        )
    return result if isinstance(result, dict) else result.model_dump()


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_coeffs(args):
    payload = {
        "operator": {"N": args.N, "m": args.m},
        "taylor_order": args.taylor_order,
    }
    data = _call(args, "/coeffs", payload)
    if args.json:
        _emit(json.dumps(data, indent=2) + "\n", args.out)
        return 0
    lines = ["operator order m=%d, dimension N=%d" % (args.m, args.N)]
    for j, value in enumerate(data["alphas"]):
        lines.append("  alpha_%d = %.17g" % (j, value))
    lines.append("  kappa_1 derivatives at 0: %s" % _fmt_list(data["kappa1_taylor"]))
    lines.append("  kappa_2 derivatives at 0: %s" % _fmt_list(data["kappa2_taylor"]))
    for key, value in data["structural"].items():
        if key == "A":
            continue
        lines.append("  %s = %.17g" % (key, value))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _fmt_list(values):
    return "[" + ", ".join("%.12g" % v for v in values) + "]"


def cmd_eval_op(args):
    points = [_parse_point(p) for p in args.points]
    payload = {
        "operator": {"N": args.N, "m": args.m},
        "profile": args.profile,
        "sigma": args.sigma,
        "radius": args.radius,
        "center": _parse_center(args.center),
        "points": points,
        "route": args.route,
    }
    data = _call(args, "/eval-op", payload)
    lines = ["x,kernel_value,fourier_value,abs_diff"]
    for row in data["rows"]:
        coords = " ".join("%.17g" % c for c in row["x"])
        lines.append(
            "%s,%s,%s,%s"
            % (
                coords,
                _fmt_opt(row["kernel_value"]),
                _fmt_opt(row["fourier_value"]),
                _fmt_opt(row["abs_diff"]),
            )
        )
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _fmt_opt(value):
    return "" if value is None else "%.17g" % value


def cmd_spectrum(args):
    payload = {
        "operator": {"N": args.N, "m": args.m},
        "domain": _domain_payload(args),
        "h": args.h,
        "k": args.k,
        "method": args.method,
        "padding": args.padding,
        "tol": args.tol,
        "use_cache": not args.no_cache,
    }
    data = _call(args, "/spectrum", payload)
    _emit(json.dumps(data, indent=2) + "\n", args.out)
    return 0


def cmd_bounds(args):
    suites = [s.strip() for s in args.suites.split(",") if s.strip()]
    payload = {
        "suites": suites,
        "formulas_only": args.formulas_only,
        "lambda_m1": args.lambda_m1,
        "volume": args.volume,
        "r0": args.r0,
    }
    if args.formulas_only:
        if args.N is None or args.m is None:
            raise UsageError("--formulas-only needs --N and --m")
        payload["operator"] = {"N": args.N, "m": args.m}
    else:
        if args.spectrum is None:
            raise UsageError("bounds needs --spectrum FILE or --formulas-only")
        try:
            payload["spectrum"] = json.loads(Path(args.spectrum).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError("cannot read spectrum file: %s" % exc)
    data = _call(args, "/bounds", payload)
    _emit(json.dumps(data["certificates"], indent=2) + "\n", args.out)
    failed = [c for c in data["certificates"] if c["verdict"] == "fail"]
    if failed:
        print("%d certificate(s) failed" % len(failed), file=sys.stderr)
        return 1
    return 0


def cmd_report(args):
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError("cannot read config file: %s" % exc)
    if args.output_dir:
        config["output_dir"] = args.output_dir
    data = _call(args, "/report", {"config": config})
    verdicts = [c["verdict"] for c in data["certificates"]]
    print("report written to %s" % data["config"]["output_dir"])
    print(
        "spectra: %d  certificates: %d pass, %d fail, %d not applicable"
        % (
            len(data["spectra"]),
            sum(1 for v in verdicts if v == "pass"),
            sum(1 for v in verdicts if v == "fail"),
            sum(1 for v in verdicts if v == "not-applicable"),
        )
    )
    if not data["all_pass"]:
        print("certificate failures present", file=sys.stderr)
        return 1
    return 0


def cmd_demo_composition(args):
    payload = {
        "domain": _domain_payload(args),
        "h": args.h,
        "k": args.k,
        "use_cache": not args.no_cache,
    }
    data = _call(args, "/demo-composition", payload)
    lines = ["k,lambda1,lambda1_squared,lambda2,difference"]
    for row in data["rows"]:
        lines.append(
            "%d,%.17g,%.17g,%.17g,%.17g"
            % (
                row["k"],
                row["lambda1"],
                row["lambda1_squared"],
                row["lambda2"],
                row["difference"],
            )
        )
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_serve(args):
    import uvicorn

    uvicorn.run("logspec.service:app", host=args.host, port=args.port)
    return 0


def _add_operator_args(sub, required=True):
    sub.add_argument("--N", type=int, required=required, help="dimension, 1 or 2")
    sub.add_argument("--m", type=int, required=required, help="operator order")


def _add_domain_args(sub):
    sub.add_argument(
        "--domain", choices=("interval", "box", "disk"), default="interval"
    )
    sub.add_argument("--a", type=float, default=0.0, help="left endpoint")
    sub.add_argument("--b", type=float, default=1.0, help="right endpoint")
    sub.add_argument("--center", help="disk center as x,y")
    sub.add_argument("--radius", type=float, help="disk radius")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="logspec",
        description="Spectral toolkit for powers of the logarithmic Laplacian.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--server",
        help="base URL of a running service; without it commands run in process",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("coeffs", help="kernel weights and Taylor data")
    _add_operator_args(sub)
    sub.add_argument("--taylor-order", type=int, default=6)
    sub.add_argument("--json", action="store_true", help="emit raw JSON")
    sub.add_argument("--out", help="write to a file instead of stdout")
    sub.set_defaults(handler=cmd_coeffs)

    sub = commands.add_parser(
        "eval-op", help="evaluate the operator pointwise along both routes"
    )
    _add_operator_args(sub)
    sub.add_argument("--profile", choices=("gaussian", "bump"), default="gaussian")
    sub.add_argument("--sigma", type=float, default=1.0)
    sub.add_argument("--radius", type=float, default=1.0)
    sub.add_argument("--center", help="profile center as comma-separated floats")
    sub.add_argument(
        "--route", choices=("kernel", "fourier", "both"), default="both"
    )
    sub.add_argument(
        "--points",
        nargs="+",
        required=True,
        help="evaluation points, each as comma-separated coordinates",
    )
    sub.add_argument("--out", help="write CSV to a file instead of stdout")
    sub.set_defaults(handler=cmd_eval_op)

    sub = commands.add_parser("spectrum", help="Dirichlet eigenvalues on a lattice")
    _add_operator_args(sub)
    _add_domain_args(sub)
    sub.add_argument("--h", type=float, required=True, help="lattice spacing")
    sub.add_argument("--k", type=int, required=True, help="eigenvalue count")
    sub.add_argument(
        "--method", choices=("dense", "krylov", "torus"), default="dense"
    )
    sub.add_argument("--padding", type=int, default=4)
    sub.add_argument("--tol", type=float, default=1e-9)
    sub.add_argument("--no-cache", action="store_true")
    sub.add_argument("--out", help="write spectrum JSON to a file")
    sub.set_defaults(handler=cmd_spectrum)

    sub = commands.add_parser(
        "bounds", help="certificate batch over a spectrum file or closed forms"
    )
    sub.add_argument("--spectrum", help="spectrum JSON produced by the spectrum command")
    sub.add_argument(
        "--suites",
        default="berezin,counting,sandwich,eig-lower",
        help="comma-separated suite names (%s)" % ", ".join(KNOWN_SUITES),
    )
    sub.add_argument(
        "--formulas-only",
        action="store_true",
        help="evaluate closed-form certificates without a spectrum",
    )
    _add_operator_args(sub, required=False)
    sub.add_argument("--lambda-m1", type=float, dest="lambda_m1")
    sub.add_argument("--volume", type=float)
    sub.add_argument("--r0", type=float, help="ball radius for the ball suite")
    sub.add_argument("--out", help="write certificate JSON to a file")
    sub.set_defaults(handler=cmd_bounds)

    sub = commands.add_parser("report", help="run a full experiment config")
    sub.add_argument("--config", required=True, help="experiment config JSON file")
    sub.add_argument("--output-dir", help="override the config output directory")
    sub.set_defaults(handler=cmd_report)

    sub = commands.add_parser(
        "demo-composition",
        help="contrast squared order-1 eigenvalues with order-2 ones",
    )
    _add_domain_args(sub)
    sub.add_argument("--h", type=float, required=True)
    sub.add_argument("--k", type=int, default=20)
    sub.add_argument("--no-cache", action="store_true")
    sub.add_argument("--out", help="write CSV to a file instead of stdout")
    sub.set_defaults(handler=cmd_demo_composition)

    sub = commands.add_parser("serve", help="run the HTTP service")
    sub.add_argument("--host", default="127.0.0.1")
    sub.add_argument("--port", type=int, default=8000)
    sub.set_defaults(handler=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
