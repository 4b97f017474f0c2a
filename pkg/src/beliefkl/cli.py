"""Command-line entry point.

Exit status: 0 on success, 1 on invalid input, 2 on numerical failure
(no usable fit, or a verification suite that does not pass).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, specfile
from .approximators import FitError, ParametricFamily, figure1_demo, fit
from .axiom_lab import SUITES, run_suite
from .densities import Categorical
from .estimators import estimate
from .scoring import cross_entropy_m, kl
from .specfile import SpecError, dumps, format_float

log = logging.getLogger("beliefkl")

LN2 = math.log(2.0)


class NumericalFailure(RuntimeError):
    pass


def _units(value, bits):
    return value / LN2 if bits else value


def _window(args):
    if args.window is None:
        return None
    lo, hi, n = args.window
    if not lo < hi:
        raise ValueError("window: lo must be below hi")
    if n != int(n) or n < 16:
        raise ValueError("window: n must be an integer >= 16")
    return (lo, hi, int(n))


def cmd_divergence(args):
    p, q = specfile.load(args.p), specfile.load(args.q)
    w = _window(args)
    out = {
        "kl_pq": _units(kl(p, q, w), args.bits),
        "kl_qp": _units(kl(q, p, w), args.bits),
        "cross_entropy": _units(cross_entropy_m(p, q, window=w), args.bits),
        "units": "bits" if args.bits else "nats",
    }
    print(dumps(out))


def cmd_estimate(args):
    p = specfile.load(args.spec)
    print(format_float(float(estimate(p, args.loss))))


def cmd_fit(args):
    p = specfile.load(args.target)
    if args.family == "gaussian":
        family = ParametricFamily.gaussian()
    else:
        if not isinstance(p, Categorical):
            raise ValueError("family: categorical needs a categorical target")
        family = ParametricFamily.simplex(p.size)
    init = None
    if args.init is not None:
        if args.family == "gaussian":
            if len(args.init) != 2 or not args.init[1] > 0:
                raise ValueError("init: gaussian needs MEAN VARIANCE with VARIANCE > 0")
            init = [args.init[0], math.log(args.init[1])]
        else:
            init = family.parameters(Categorical.normalized(args.init))
    report = fit(p, family, args.direction, init)
    out = report.to_dict()
    out["divergence_value"] = _units(report.divergence_value, args.bits)
    for r in out["multistart_results"]:
        r["value"] = _units(r["value"], args.bits)
    out["units"] = "bits" if args.bits else "nats"
    print(dumps(out))


def cmd_verify(args):
    rows = run_suite(args.suite)
    for r in rows:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.suite:<11} {r.check}")
    passed = all(r.passed for r in rows)
    print(f"{sum(r.passed for r in rows)}/{len(rows)} checks passed")
    report = {"suite": args.suite, "passed": passed,
              "checks": [{"suite": r.suite, "check": r.check, "passed": r.passed,
                          "detail": _plain(r.detail)} for r in rows]}
    Path(args.report).write_text(dumps(report) + "\n")
    if not passed:
        raise NumericalFailure("verification failed")


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if obj is None or isinstance(obj, (bool, str, int, float, np.number, np.bool_)):
        return obj
    return str(obj)


def cmd_figure1(args):
    res = figure1_demo(args.separation, args.variance)
    out = Path(args.out)
    lines = ["s,p,q_approx,q_infer"]
    for row in zip(res.s, res.p, res.q_approx, res.q_infer):
        lines.append(",".join(format_float(float(v)) for v in row))
    out.write_text("\n".join(lines) + "\n")
    sidecar = out.with_suffix(".json")
    sidecar.write_text(dumps(res.parameters()) + "\n")
    print(dumps({"csv": str(out), "parameters": str(sidecar)}))


def build_parser():
    parser = argparse.ArgumentParser(prog="beliefkl", description=(
        "Approximate beliefs by minimizing KL(p, q) and check the axioms behind it."))
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("divergence", help="KL in both directions and the cross entropy")
    d.add_argument("--p", required=True, help="spec file of the true belief")
    d.add_argument("--q", required=True, help="spec file of the approximation")
    d.add_argument("--bits", action="store_true", help="report bits instead of nats")
    d.add_argument("--window", nargs=3, type=float, metavar=("LO", "HI", "N"),
                   help="quadrature window for continuous pairs")
    d.set_defaults(func=cmd_divergence)

    e = sub.add_parser("estimate", help="point estimate from a belief")
    e.add_argument("spec", help="distribution spec file")
    e.add_argument("--loss", required=True, choices=["mode", "median", "mean"])
    e.set_defaults(func=cmd_estimate)

    f = sub.add_parser("fit", help="fit an approximation in either KL direction")
    f.add_argument("--target", required=True, help="spec file of the target belief")
    f.add_argument("--family", default="gaussian", choices=["gaussian", "categorical"])
    f.add_argument("--direction", default="approx", choices=["approx", "infer"])
    f.add_argument("--init", nargs="+", type=float,
                   help="gaussian: MEAN VARIANCE; categorical: starting probabilities")
    f.add_argument("--bits", action="store_true", help="report bits instead of nats")
    f.set_defaults(func=cmd_fit)

    v = sub.add_parser("verify", help="run the axiom checks")
    v.add_argument("--suite", default="all", choices=sorted(SUITES) + ["all"])
    v.add_argument("--report", default="verify_report.json", help="JSON report path")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("figure1", help="bimodal target fitted in both KL directions")
    g.add_argument("--separation", type=float, default=3.0)
    g.add_argument("--variance", type=float, default=1.0)
    g.add_argument("--out", required=True, help="CSV path; parameters go to the .json sidecar")
    g.set_defaults(func=cmd_figure1)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are input errors here
        return 0 if exc.code == 0 else 1
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s %(name)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    log.propagate = False
    try:
        log.info("version=%s command=%s", __version__, args.command)
        args.func(args)
    except (FitError, NumericalFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SpecError, ValueError, TypeError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        log.removeHandler(handler)
    return 0


def main():
    sys.exit(run())
