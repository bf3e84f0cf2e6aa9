"""Batch command-line front end.

Commands: constant, table, bounds, extremal, step, step-value, simulate.
Output is JSON by default (CSV via --format csv), floats are printed with 12
significant digits, and identical flags (including the seed) produce
byte-identical output.  Exit codes: 0 success, 2 invalid arguments,
3 computation error; failures emit a machine-readable error object on
stderr with the error class name in the payload.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import laguerre, oracle, remez, switching
from .errors import BernmarkError
from .quasipoly import ExpSpectrum


def thread_cap() -> int:
    """Parallelism cap: BERNMARK_THREADS if set, else the machine's cores."""
    raw = os.environ.get("BERNMARK_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"BERNMARK_THREADS must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError("BERNMARK_THREADS must be >= 1")
    return value


def _fmt(value: float) -> float:
    """Round a float to 12 significant digits for printing."""
    if not math.isfinite(value):
        return value
    return float(f"{value:.12g}")


def _json_ready(obj):
    """Recursively convert payloads to JSON types with 12-digit floats."""
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_json_ready(v) for v in obj.tolist()]
    return obj


def _parse_h(raw: str) -> ExpSpectrum:
    try:
        values = [float(tok) for tok in raw.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"--h must be comma-separated reals, got {raw!r}") from exc
    if not values:
        raise ValueError("--h must contain at least one exponent")
    return ExpSpectrum.from_values(values)


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_payload(payload: dict, fmt: str, output: str | None,
                  csv_text: str | None = None) -> None:
    if fmt == "csv":
        if csv_text is None:
            raise ValueError("this command has no CSV form")
        _emit(csv_text, output)
    else:
        _emit(json.dumps(_json_ready(payload), indent=2) + "\n", output)


# -- commands ----------------------------------------------------------------


def _cmd_constant(args) -> None:
    spec = _parse_h(args.h)
    mc = remez.markov_constant(spec, args.ell, args.tol)
    payload = {
        "command": "constant",
        "h": [float(v) for v in spec.expanded()],
        "ell": args.ell,
        "value": mc.value,
        "method": mc.method,
    }
    h_cell = " ".join(f"{v:.12g}" for v in spec.expanded())
    csv_text = f"h,ell,value\n{h_cell},{args.ell},{mc.value:.12g}\n"
    _emit_payload(payload, args.format, args.output, csv_text)


def _cmd_table(args) -> None:
    report = laguerre.table(args.ell, args.n_max, args.tol,
                            max_workers=thread_cap())
    payload = {"command": "table", **report.to_dict()}
    _emit_payload(payload, args.format, args.output, report.to_csv())


def _cmd_bounds(args) -> None:
    report = laguerre.bounds_report(args.ell, args.n, args.tol)
    m3 = laguerre.markov3_bounds(args.ell, args.n)
    payload = {
        "command": "bounds",
        **report.to_dict(),
        "m_lower_exact": m3.lower,
        "m_upper_exact": m3.upper,
    }
    _emit_payload(payload, args.format, args.output)


def _cmd_extremal(args) -> None:
    if args.samples < 2:
        raise ValueError("--samples must be >= 2")
    spec = _parse_h(args.h)
    cert = remez.chebyshev_polynomial(spec, args.tol)
    t_end = 1.5 * float(cert.alternance[-1]) if len(cert.alternance) > 1 else 1.5
    ts = np.linspace(0.0, t_end, args.samples)
    vals = cert.polynomial.values(ts)
    payload = {
        "command": "extremal",
        "h": [float(v) for v in spec.expanded()],
        "alternance": [float(t) for t in cert.alternance],
        "signs": [int(s) for s in cert.signs],
        "residual": cert.equioscillation_residual,
        "samples": [[float(t), float(v)] for t, v in zip(ts, vals)],
    }
    lines = ["kind,t,value"]
    for t, v in zip(ts, vals):
        lines.append(f"sample,{t:.12g},{v:.12g}")
    for t, s in zip(cert.alternance, cert.signs):
        lines.append(f"alternance,{t:.12g},{s}")
    _emit_payload(payload, args.format, args.output, "\n".join(lines) + "\n")


def _load_family(path: str) -> switching.MatrixFamily:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read family file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"family file {path!r} is not valid JSON: {exc}") from exc
    try:
        return switching.MatrixFamily.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"family file {path!r} has the wrong shape: {exc}") from exc


def _cmd_step(args) -> None:
    family = _load_family(args.input)
    estimate = switching.step_bound(family, args.eps, args.tol)
    payload = {"command": "step", **estimate.to_dict()}
    _emit_payload(payload, args.format, args.output, estimate.to_csv())


def _cmd_step_value(args) -> None:
    spec = _parse_h(args.h)
    result = oracle.step_value(spec, args.eps, level=args.level)
    payload = {
        "command": "step-value",
        "h": [float(v) for v in spec.expanded()],
        "eps": args.eps,
        "value": result.value,
        "bisection_gap": result.bisection_gap,
        "level": result.level,
        "witness_coeffs": [float(c) for c in result.witness.coeffs],
    }
    _emit_payload(payload, args.format, args.output)


def _cmd_simulate(args) -> None:
    family = _load_family(args.input)
    stats = switching.simulate(family, args.tau, args.steps, args.trials,
                               seed=args.seed)
    payload = {"command": "simulate", **stats.to_dict()}
    _emit_payload(payload, args.format, args.output)


# -- parser / dispatch ---------------------------------------------------------


def _positive_float(raw: str) -> float:
    value = float(raw)
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"expected a positive real, got {raw}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bernmark",
        description="Sharp Markov-Bernstein constants for exponential "
                    "polynomials and certified Euler steps for switching systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("json", "csv"), default="json",
                       help="output format (default: json)")
        p.add_argument("--output", default=None, help="write to file instead of stdout")
        p.add_argument("--tol", type=_positive_float, default=1e-9,
                       help="computation tolerance (default: 1e-9)")

    p = sub.add_parser("constant", help="sharp constant for a spectrum")
    p.add_argument("--h", required=True, help="comma-separated exponents, e.g. 1,1")
    p.add_argument("--ell", type=int, required=True, help="derivative order (>= 1)")
    common(p)
    p.set_defaults(func=_cmd_constant)

    p = sub.add_parser("table", help="uniform constants and bounds for n = 2..n_max")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True, dest="n_max")
    common(p)
    p.set_defaults(func=_cmd_table)

    p = sub.add_parser("bounds", help="closed-form bounds for one (ell, n)")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    common(p)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("extremal", help="sample the extremal polynomial")
    p.add_argument("--h", required=True)
    p.add_argument("--samples", type=int, default=256)
    common(p)
    p.set_defaults(func=_cmd_extremal)

    p = sub.add_parser("step", help="certified discretization step for a family")
    p.add_argument("--input", required=True, help="matrix family JSON file")
    p.add_argument("--eps", type=_positive_float, required=True)
    common(p)
    p.set_defaults(func=_cmd_step)

    p = sub.add_parser("step-value", help="oracle value of the step problem")
    p.add_argument("--h", required=True)
    p.add_argument("--eps", type=_positive_float, required=True)
    p.add_argument("--level", type=int, choices=(0, 1, 2), default=2)
    common(p)
    p.set_defaults(func=_cmd_step_value)

    p = sub.add_parser("simulate", help="seeded random-switching simulation")
    p.add_argument("--input", required=True, help="matrix family JSON file")
    p.add_argument("--tau", type=_positive_float, required=True)
    p.add_argument("--steps", type=int, default=10000)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=_cmd_simulate)

    return parser


def _error_json(name: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": name, "message": message}) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (ValueError, OverflowError) as exc:
        _error_json("InvalidArguments", str(exc))
        return 2
    except BernmarkError as exc:
        _error_json(type(exc).__name__, str(exc))
        return 3
    return 0


def entrypoint() -> None:
    sys.exit(main())
