"""Command line interface: ``mg1cr <command> MODEL.json [options]``.

Reports go to standard output; failures print one ``kind: message`` line to
standard error and exit with the code of the error class (2 validation,
3 no convergence, 4 numerical breakdown, 5 precondition).
"""

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone

from . import __version__
from .exceptions import MG1Error
from .modelfile import load_model
from .model import DEFAULT_VALIDATION_TOL
from .runs import (
    RunConfig,
    run_emulate,
    run_ergodicity,
    run_estimate,
    run_metrics,
    run_solve,
    run_stationary,
)

COMMANDS = {
    "solve": run_solve,
    "stationary": run_stationary,
    "metrics": run_metrics,
    "ergodicity": run_ergodicity,
    "emulate": run_emulate,
    "estimate": run_estimate,
}


def _parse_u(text):
    if text is None or text == "uniform":
        return None
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--u expects 'uniform' or a comma list, got {text!r}")


def build_parser():
    p = argparse.ArgumentParser(prog="mg1cr", description="Cyclic reduction for M/G/1-type chains.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("model", help="model file (JSON)")
        s.add_argument("--eps", type=float, default=1e-10)
        s.add_argument("--max-iter", type=int, default=64)
        s.add_argument("--shift", action="store_true", help="use the shifted solver")
        s.add_argument("--u", type=_parse_u, default=None, help="'uniform' or comma-separated vector")
        s.add_argument("--levels", type=int, default=10_000, help="maximum number of levels")
        s.add_argument("--tail-tol", type=float, default=1e-12)
        s.add_argument("--samples", type=int, default=None, help="circulant order for emulate")
        s.add_argument("--format", choices=("json", "csv", "text"), default="json")
        s.add_argument("--no-timestamp", action="store_true")
        s.add_argument("--validation-tol", type=float, default=DEFAULT_VALIDATION_TOL)
        s.add_argument("--mu", type=float, default=1.0)
        s.add_argument("--tau-load", type=float, default=1.0)
        s.add_argument("--tau-oracle", type=float, default=1.0)
        s.add_argument("--tau-readout", type=float, default=1.0)
        s.add_argument("--d-max", type=int, default=None)
    return p


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else k)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _scalar(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_report(report, fmt):
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"
    rows = [(k, _scalar(v)) for k, v in _flatten(report)]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(rows)
        return buf.getvalue()
    return "".join(f"{k}: {v}\n" for k, v in rows)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        model = load_model(args.model, tol=args.validation_tol)
        cfg = RunConfig(
            eps=args.eps, max_iter=args.max_iter, shift=args.shift, u=args.u,
            tail_tol=args.tail_tol, k_max=args.levels, n_samples=args.samples,
            fmt=args.format, mu=args.mu, tau_load=args.tau_load,
            tau_oracle=args.tau_oracle, tau_readout=args.tau_readout, d_max=args.d_max)
        report = COMMANDS[args.command](model, cfg)
    except MG1Error as exc:
        print(f"{exc.kind}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"io-error: {exc}", file=sys.stderr)
        return 2
    if not args.no_timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    sys.stdout.write(format_report(report, args.format))
    return 0


if __name__ == "__main__":
    sys.exit(main())
