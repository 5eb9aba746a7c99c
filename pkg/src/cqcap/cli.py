"""Command-line front end: ``cqcap <verb> [options]``.

Exit status: 0 on success, 1 when a contract check fails or a budget is
exceeded (the failing stage is printed to stderr), 2 on input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys

import numpy as np

from . import checks
from .capacity import averaged_capacity, compound_capacity
from .channels import AveragedChannelSpec
from .coding import compound_direct_pipeline
from .converse import fano_holevo_bound, averaged_weak_converse_check, markov_good_set, strong_converse_rate_bound
from .errors import BudgetExceededError, ContractViolation, CqcapError
from .hypothesis_testing import nagaoka_chain_bound, universal_pvm, universal_test_set
from .numerics import reset
from .quantum_core import DensityOperator
from .serialization import (
    _read,
    apply_numerics,
    code_to_json,
    dumps,
    load_channels,
    load_code,
    matrix_from_json,
)


class InputError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12g}"
    return str(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None


# -------------------------------------------------------------------- verbs


def cmd_capacity(args) -> str:
    spec = load_channels(args.input)
    if args.mode == "averaged":
        if not isinstance(spec, AveragedChannelSpec):
            raise InputError("averaged mode needs a weight on every channel")
        res = averaged_capacity(spec, args.tol)
    else:
        compound = spec.compound if isinstance(spec, AveragedChannelSpec) else spec
        res = compound_capacity(compound, args.tol)
    out = res.to_dict()
    out["mode"] = args.mode
    return dumps(out)


def cmd_code(args) -> str:
    spec = load_channels(args.input)
    compound = spec.compound if isinstance(spec, AveragedChannelSpec) else spec
    res = compound_direct_pipeline(compound, args.n, args.theta, seed=args.seed, trials=args.trials,
                                   threads=args.threads)
    if args.csv:
        errs = res.stages.get("one_shot", {}).get("trial_errors", [])
        _emit(_csv_text(["trial", "avg_error"], enumerate(errs)), args.csv)
    if args.code_output:
        _emit(dumps(code_to_json(res.code)), args.code_output)
    return dumps(res.to_dict())


def cmd_hypothesis(args) -> str:
    rows = []
    if args.mode == "types":
        if not args.omega or not args.r:
            raise InputError("types mode needs --omega and --r")
        omega = [_floats(q) for q in args.omega.split(";")]
        r = _floats(args.r)
        for k in _ints(args.k):
            for delta in _floats(args.delta):
                ts = universal_test_set(omega, r, k, delta)
                for i, mass in enumerate(ts.omega_masses):
                    rows.append([k, delta, f"omega{i}", "first_kind", mass, ts.first_kind_bound,
                                 mass - ts.first_kind_bound])
                rows.append([k, delta, "r", "second_kind", ts.r_mass, ts.second_kind_bound,
                             ts.second_kind_bound - ts.r_mass])
        return _csv_text(["k", "delta", "member", "kind", "mass", "bound", "slack"], rows)
    if not args.input:
        raise InputError("pvm mode needs --input with omega and sigma")
    obj = _read(args.input)
    apply_numerics(obj)
    try:
        omega = [DensityOperator(matrix_from_json(m)) for m in obj["omega"]]
        sigma = DensityOperator(matrix_from_json(obj["sigma"]))
    except KeyError as exc:
        raise InputError(f"missing field {exc}") from None
    for l in _ints(args.l):
        u = universal_pvm(omega, sigma, l)
        for i, rho in enumerate(omega):
            chain = nagaoka_chain_bound(rho, sigma, u, l, u.relative_entropy)
            target = u.relative_entropy - u.schedule.zeta
            rows.append([l, u.schedule.delta, f"omega{i}", u.omega_masses[i], u.first_kind_bound,
                         chain.s_m / l, target, chain.s_m / l - target])
        rows.append([l, u.schedule.delta, "sigma", u.sigma_mass, u.second_kind_bound, "", "", ""])
    return _csv_text(["l", "delta", "member", "mass", "bound", "measured_rate", "target_rate", "slack"], rows)


def cmd_converse(args) -> str:
    code = load_code(args.input)
    spec = load_channels(args.channels)
    compound = spec.compound if isinstance(spec, AveragedChannelSpec) else spec
    out = {
        "n": code.n,
        "size": code.size,
        "fano_holevo": {w.id: fano_holevo_bound(code, w, allow_duplicates=args.allow_duplicates).to_dict()
                        for w in compound},
        "strong_converse": strong_converse_rate_bound(code.n, code, compound, args.kprime).to_dict(),
    }
    if isinstance(spec, AveragedChannelSpec):
        good, mass = markov_good_set(code, spec)
        out["good_set"] = {"ids": good, "mass": mass}
        out["weak_converse"] = averaged_weak_converse_check([code], spec).to_dict()
    return dumps(out)


def cmd_check(args) -> str:
    res = checks.run_suite(args.suite, args.trials, args.seed)
    args._failed = not res.passed
    return dumps(res.to_dict())


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="worker cap (env CQCAP_THREADS)")
    common.add_argument("--config", help="JSON file with a 'numerics' section of tolerance overrides")

    parser = argparse.ArgumentParser(prog="cqcap", description="Compound and averaged cq-channel capacity toolkit")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("capacity", parents=[common], help="max-min Holevo capacity")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--mode", choices=("compound", "averaged"), default="compound")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("code", parents=[common], help="run the direct-part coding pipeline")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--trials", type=int, default=32)
    p.add_argument("--csv", help="write per-trial average errors here")
    p.add_argument("--code-output", help="write the codebook (with decoders) here")
    p.set_defaults(func=cmd_code)

    p = sub.add_parser("hypothesis", parents=[common], help="universal test masses and bounds as CSV")
    p.add_argument("--mode", choices=("types", "pvm"), default="types")
    p.add_argument("--omega", help="types mode: distributions separated by ';', entries by ','")
    p.add_argument("--r", help="types mode: reference distribution")
    p.add_argument("--k", default="6,8,10,12")
    p.add_argument("--delta", default="0.1,0.2,0.3")
    p.add_argument("--input", "-i", help="pvm mode: JSON with 'omega' (list of matrices) and 'sigma'")
    p.add_argument("--l", default="4,8")
    p.set_defaults(func=cmd_hypothesis)

    p = sub.add_parser("converse", parents=[common], help="converse bounds for a stored code")
    p.add_argument("--input", "-i", required=True, help="code JSON")
    p.add_argument("--channels", required=True, help="channel-set JSON")
    p.add_argument("--kprime", type=float, required=True)
    p.add_argument("--allow-duplicates", action="store_true")
    p.set_defaults(func=cmd_converse)

    p = sub.add_parser("check", parents=[common], help="randomized inequality suites")
    p.add_argument("--suite", choices=checks.SUITES, required=True)
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    if args.threads is None:
        try:
            args.threads = int(os.environ.get("CQCAP_THREADS", "1"))
        except ValueError:
            print("error: CQCAP_THREADS must be an integer", file=sys.stderr)
            return 2
    args.threads = max(1, args.threads)
    args._failed = False
    reset()
    try:
        if args.config:
            apply_numerics(_read(args.config))
        if getattr(args, "input", None) and args.verb in ("capacity", "code"):
            apply_numerics(_read(args.input))
        text = args.func(args)
    except ContractViolation as exc:
        print(f"contract failure in stage '{exc.stage}': {exc}", file=sys.stderr)
        return 1
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 1
    except (InputError, CqcapError, OSError, ValueError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    finally:
        reset()
    _emit(text, args.output)
    return 1 if args._failed else 0


if __name__ == "__main__":
    sys.exit(main())
