"""Command line interface.

Subcommands:

  orbit     backward orbit of 0: points, digits, classification
  lambda    decay rate for a single a, or a CSV sweep over a grid of a
  cdf       quasi-stationary distribution function on a z grid
  lumped    finite lumped-chain matrix dump plus state labels
  validate  cross-check the series root against the matrix and Monte Carlo
  report    run the pieces above and render figures next to the data files

Exit codes: 0 on success, 2 for argument or domain errors, 3 when a
computation cannot be certified (bracket failure, divergent series, no
convergence, degenerate estimates).

Every file written through --out gets a sidecar <out>.manifest.json with
the parameters, the command line, and a sha256 of the output bytes, so
reruns can be checked byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .model import ModelParams, NumericFailure
from .dynamics import InsufficientOrbitError, orbit_of_zero
from .lumped import InfiniteOrbitError, NoConvergenceError, build_lumped, \
    leading_eigen, persistence_via_matrix
from .montecarlo import MCConfig, estimate_decay_rate, estimate_persistence
from .spectral import CURVE_COLUMNS, decay_rate_curve, eval_harmonic, \
    exponent_bounds, qsd_survival_grid, solve_lambda


# ---------------------------------------------------------------------------
# argument parsing helpers

def _parse_a(text: str, inexact: bool):
    """a is taken exactly from 'num/den' or integer form.  Decimal text is
    refused unless --inexact was passed, because 0.667 silently standing in
    for 2/3 is the classic way to fall off a plateau."""
    if inexact:
        return float(text)
    try:
        if "." in text or "e" in text.lower():
            raise ValueError
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(
            f"could not read a = {text!r} exactly; write it as num/den "
            "(e.g. 2/3), or pass --inexact to use the float value as is")


def _parse_p(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"could not read p = {text!r}; use num/den or a decimal")


def _parse_grid(text: str, what: str):
    """'lo:hi:count' -> exact list of Fractions, endpoints included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"{what} must look like lo:hi:count, got {text!r}")
    try:
        lo, hi, count = Fraction(parts[0]), Fraction(parts[1]), int(parts[2])
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"could not read {what} {text!r}")
    if count < 1:
        raise ValueError(f"{what} count must be >= 1")
    if hi < lo:
        raise ValueError(f"{what} needs lo <= hi")
    if count == 1:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + k * step for k in range(count)]


def _number_str(value) -> str:
    return str(value) if isinstance(value, Fraction) else repr(float(value))


# ---------------------------------------------------------------------------
# output helpers

def _json_default(obj):
    """Let numpy scalars and Fractions pass through json.dump."""
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True,
                      default=_json_default) + "\n"


def _sha256_of(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _write_manifest(out_path: str, argv, params: ModelParams | None,
                    extra: dict | None = None) -> None:
    manifest = {
        "tool": "ar1persist",
        "version": __version__,
        "argv": list(argv),
        "output": os.path.basename(out_path),
        "sha256": _sha256_of(out_path),
    }
    if params is not None:
        manifest["params"] = params.to_json()
    if extra:
        manifest.update(extra)
    with open(out_path + ".manifest.json", "w") as fh:
        fh.write(_json_text(manifest))


def _emit_json(payload: dict, out: str | None, argv,
               params: ModelParams | None, extra: dict | None = None) -> None:
    text = _json_text(payload)
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w") as fh:
        fh.write(text)
    _write_manifest(out, argv, params, extra)


def _emit_csv(header, rows, out: str | None, argv,
              params: ModelParams | None, extra: dict | None = None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", newline="") as fh:
        fh.write(text)
    _write_manifest(out, argv, params, extra)


# ---------------------------------------------------------------------------
# subcommands

def _orbit_payload(params: ModelParams, max_iter: int) -> dict:
    orbit = orbit_of_zero(params, max_iter=max_iter)
    return {
        "a": _number_str(params.a),
        "ceiling": float(params.ceiling),
        "hole": {
            "lo": float(params.hole_lo),
            "hi": 1.0,
            "empty": bool(params.hole_lo >= 1),
        },
        "orbit": orbit.to_json(),
    }


def cmd_orbit(args, argv) -> int:
    a = _parse_a(args.a, args.inexact)
    params = ModelParams(a, Fraction(1, 2), experimental=args.experimental)
    payload = _orbit_payload(params, args.max_iter)
    _emit_json(payload, args.out, argv, params)
    return 0


def cmd_lambda(args, argv) -> int:
    p = _parse_p(args.p)
    if args.a_grid is not None:
        a_values = _parse_grid(args.a_grid, "--a-grid")
        rows = decay_rate_curve(a_values, p, experimental=args.experimental)
        _emit_csv(CURVE_COLUMNS, [r.to_csv_row() for r in rows],
                  args.out, argv, None,
                  extra={"p": str(p), "points": len(rows)})
        return 0
    a = _parse_a(args.a, args.inexact)
    params = ModelParams(a, p, experimental=args.experimental)
    sol = solve_lambda(params, tail_target=args.tail_target)
    payload = {
        "solution": sol.to_json(),
        "bounds": exponent_bounds(params, sol).to_json(),
    }
    _emit_json(payload, args.out, argv, params)
    return 0


def cmd_cdf(args, argv) -> int:
    a = _parse_a(args.a, args.inexact)
    params = ModelParams(a, _parse_p(args.p), experimental=args.experimental)
    sol = solve_lambda(params)
    if args.grid is not None:
        zs = [float(z) for z in _parse_grid(args.grid, "--grid")]
    else:
        zs = list(np.linspace(0.0, float(params.ceiling), 201))
    surv, tails = qsd_survival_grid(params, sol, zs)
    rows = [[repr(float(z)), repr(float(1.0 - s)), repr(float(s)), repr(float(t))]
            for z, s, t in zip(zs, surv, tails)]
    _emit_csv(["z", "cdf", "survival", "tail_bound"], rows, args.out, argv,
              params, extra={"lambda": sol.lam})
    return 0


def cmd_lumped(args, argv) -> int:
    a = _parse_a(args.a, args.inexact)
    params = ModelParams(a, _parse_p(args.p), experimental=args.experimental)
    chain = build_lumped(params)
    rate, _, _, iterations = leading_eigen(chain.transient_block)
    matrix_rows = [[repr(float(x)) for x in row] for row in chain.matrix]
    labels_payload = {
        "params": params.to_json(),
        "dim": chain.dim,
        "labels": {str(k): v for k, v in chain.labels.items()},
        "exact_entries": ([[str(x) for x in row] for row in chain.matrix_exact]
                          if chain.matrix_exact is not None else None),
        "leading_rate": rate,
        "power_iterations": iterations,
    }
    if args.out is None:
        _emit_csv([f"to_{j}" for j in range(chain.dim)], matrix_rows,
                  None, argv, None)
        _emit_json(labels_payload, None, argv, None)
        return 0
    _emit_csv([f"to_{j}" for j in range(chain.dim)], matrix_rows,
              args.out, argv, params, extra={"leading_rate": rate})
    labels_path = os.path.splitext(args.out)[0] + ".labels.json"
    with open(labels_path, "w") as fh:
        fh.write(_json_text(labels_payload))
    _write_manifest(labels_path, argv, params)
    return 0


def _validate_payload(params: ModelParams, n: int, reps: int, seed: int,
                      x0: float) -> dict:
    sol = solve_lambda(params)
    out = {
        "params": params.to_json(),
        "n": n,
        "x0": x0,
        "solver": sol.to_json(),
    }

    matrix_section: dict = {}
    exact_persistence = None
    try:
        chain = build_lumped(params)
        rate, _, _, iterations = leading_eigen(chain.transient_block)
        matrix_section = {
            "dim": chain.dim,
            "lambda": rate,
            "power_iterations": iterations,
            "abs_diff_vs_solver": abs(rate - sol.lam),
        }
        if x0 == 0.0:
            exact_persistence = persistence_via_matrix(chain, n)
            matrix_section["persistence_at_n"] = float(exact_persistence)
            matrix_section["persistence_exact"] = (
                str(exact_persistence) if isinstance(exact_persistence, Fraction)
                else None)
    except InfiniteOrbitError as exc:
        matrix_section = {"skipped": str(exc)}
    except NoConvergenceError as exc:
        matrix_section = {"skipped": f"power iteration: {exc}"}
    out["matrix"] = matrix_section

    cfg = MCConfig(seed=seed, reps=reps)
    n_lo = max(1, n // 2)
    rate_est = estimate_decay_rate(params, x0, n_lo, n, cfg)
    pers_est = estimate_persistence(params, x0, n, cfg)
    out["montecarlo"] = {
        "config": cfg.to_json(),
        "config_hash": cfg.config_hash(),
        "n_lo": n_lo,
        "rate": rate_est.to_json(),
        "persistence": pers_est.to_json(),
    }

    v0 = eval_harmonic(params, sol, x0)
    asymptote = sol.c * v0 * sol.lam**n
    agreement: dict = {
        "asymptote_c_v_lambda_n": asymptote,
        "mc_over_asymptote": (pers_est.value / asymptote if asymptote > 0
                              else None),
    }
    if "lambda" in matrix_section:
        agreement["solver_matrix_abs_diff"] = matrix_section["abs_diff_vs_solver"]
        agreement["solver_matrix_ok"] = matrix_section["abs_diff_vs_solver"] < 1e-10
    if rate_est.stderr > 0:
        z = (rate_est.value - sol.lam) / rate_est.stderr
        agreement["mc_rate_z"] = z
        agreement["mc_rate_ok"] = abs(z) <= 4.0
    if exact_persistence is not None and pers_est.stderr > 0:
        zp = (pers_est.value - float(exact_persistence)) / pers_est.stderr
        agreement["mc_persistence_z"] = zp
        agreement["mc_persistence_ok"] = abs(zp) <= 4.0
    out["agreement"] = agreement
    return out


def cmd_validate(args, argv) -> int:
    a = _parse_a(args.a, args.inexact)
    params = ModelParams(a, _parse_p(args.p), experimental=args.experimental)
    x0 = float(Fraction(args.x0))
    payload = _validate_payload(params, args.n, args.reps, args.seed, x0)
    _emit_json(payload, args.out, argv, params,
               extra={"config_hash": payload["montecarlo"]["config_hash"]})
    return 0


def cmd_report(args, argv) -> int:
    from . import report as figs

    a = _parse_a(args.a, args.inexact)
    params = ModelParams(a, _parse_p(args.p), experimental=args.experimental)
    os.makedirs(args.out_dir, exist_ok=True)

    def path(name: str) -> str:
        return os.path.join(args.out_dir, name)

    written = []

    payload = _orbit_payload(params, 10000)
    with open(path("orbit.json"), "w") as fh:
        fh.write(_json_text(payload))
    written.append("orbit.json")

    sol = solve_lambda(params)
    with open(path("solution.json"), "w") as fh:
        fh.write(_json_text({"solution": sol.to_json(),
                             "bounds": exponent_bounds(params, sol).to_json()}))
    written.append("solution.json")

    grid_text = args.a_grid if args.a_grid is not None else "101/200:2/3:40"
    a_values = _parse_grid(grid_text, "--a-grid")
    rows = decay_rate_curve(a_values, params.p,
                            experimental=args.experimental)
    with open(path("curve.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_COLUMNS)
        writer.writerows(r.to_csv_row() for r in rows)
    written.append("curve.csv")
    figs.fig_decay_curve(rows, path("curve.png"))
    written.append("curve.png")

    zs = np.linspace(0.0, float(params.ceiling), 241)
    surv, tails = qsd_survival_grid(params, sol, zs)
    cdf = 1.0 - surv
    with open(path("cdf.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["z", "cdf", "survival", "tail_bound"])
        for z, c_val, s_val, t_val in zip(zs, cdf, surv, tails):
            writer.writerow([repr(float(z)), repr(float(c_val)),
                             repr(float(s_val)), repr(float(t_val))])
    written.append("cdf.csv")
    figs.fig_cdf(zs, cdf, tails, path("cdf.png"))
    written.append("cdf.png")

    xs = np.linspace(0.0, float(params.ceiling), 241)
    vs = np.array([eval_harmonic(params, sol, float(x)) for x in xs])
    with open(path("harmonic.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "V"])
        for x, v in zip(xs, vs):
            writer.writerow([repr(float(x)), repr(float(v))])
    written.append("harmonic.csv")
    figs.fig_harmonic(xs, vs, path("harmonic.png"))
    written.append("harmonic.png")

    x0 = float(Fraction(args.x0))
    validation = _validate_payload(params, args.n, args.reps, args.seed, x0)
    with open(path("validate.json"), "w") as fh:
        fh.write(_json_text(validation))
    written.append("validate.json")
    figs.fig_validation(validation, path("validation.png"))
    written.append("validation.png")

    manifest = {
        "tool": "ar1persist",
        "version": __version__,
        "argv": list(argv),
        "params": params.to_json(),
        "files": {name: _sha256_of(path(name)) for name in written},
    }
    with open(path("manifest.json"), "w") as fh:
        fh.write(_json_text(manifest))
    sys.stdout.write(f"report written to {args.out_dir} "
                     f"({len(written)} files + manifest)\n")
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_common(sub, with_p: bool = True, a_required: bool = True,
                with_out: bool = True):
    sub.add_argument("--a", required=a_required,
                     help="contraction factor, as num/den (e.g. 2/3)")
    sub.add_argument("--inexact", action="store_true",
                     help="accept a decimal --a and use the float value as is")
    sub.add_argument("--experimental", action="store_true",
                     help="allow a in (2/3, 1); outputs there are exploratory")
    if with_p:
        sub.add_argument("--p", required=True,
                         help="probability of the +1 innovation (num/den or decimal)")
    if with_out:
        sub.add_argument("--out", help="write here instead of stdout; a "
                         "<out>.manifest.json sidecar records params and sha256")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ar1persist",
        description="Exact persistence decay rate, harmonic function and "
                    "quasi-stationary law of the two-point AR(1) chain, "
                    "with matrix and Monte Carlo cross-checks.")
    parser.add_argument("--version", action="version",
                        version=f"ar1persist {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("orbit", help="backward orbit of 0")
    _add_common(s, with_p=False)
    s.add_argument("--max-iter", type=int, default=10000)
    s.set_defaults(func=cmd_orbit)

    s = subs.add_parser("lambda", help="decay rate (single a or a sweep)")
    _add_common(s, a_required=False)
    s.add_argument("--a-grid", help="sweep lo:hi:count instead of --a; "
                   "emits CSV with one row per grid point")
    s.add_argument("--tail-target", type=float, default=1e-13)
    s.set_defaults(func=cmd_lambda)

    s = subs.add_parser("cdf", help="quasi-stationary distribution function")
    _add_common(s)
    s.add_argument("--grid", help="z grid lo:hi:count (default 0:ceiling:201)")
    s.set_defaults(func=cmd_cdf)

    s = subs.add_parser("lumped", help="finite lumped-chain matrix")
    _add_common(s)
    s.set_defaults(func=cmd_lumped)

    s = subs.add_parser("validate",
                        help="cross-check series root vs matrix vs Monte Carlo")
    _add_common(s)
    s.add_argument("--n", type=int, default=30, help="survival horizon")
    s.add_argument("--reps", type=int, default=200000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--x0", default="0", help="start point (num/den or decimal)")
    s.set_defaults(func=cmd_validate)

    s = subs.add_parser("report", help="data files plus rendered figures")
    _add_common(s, with_out=False)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--a-grid", help="sweep for the curve figure "
                   "(default 101/200:2/3:40)")
    s.add_argument("--n", type=int, default=24)
    s.add_argument("--reps", type=int, default=200000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--x0", default="0")
    s.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    raw = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(raw)
    if args.command == "lambda" and args.a is None and args.a_grid is None:
        parser.error("lambda needs --a or --a-grid")
    try:
        return args.func(args, raw)
    except (NumericFailure, InsufficientOrbitError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
