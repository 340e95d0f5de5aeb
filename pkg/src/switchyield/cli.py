"""Command-line interface: ``switchyield <command> ...``.

Exit codes: 0 success or affirmative verdict, 1 negative verdict, 2 usage
error, 3 I/O error, 4 undetermined.
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

from . import bounds
from .embedding import Embeddability, embeddability_check
from .gibbs_maps import ConstraintError, load_matrix
from .markov import ctm_reachable
from .thermo import INFINITY, PhotoisomerInstance, ThermalSystem, parse_energy, populations

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_UNDETERMINED = 4

WORKERS_ENV = "SWITCHYIELD_WORKERS"


class UsageError(Exception):
    pass


def _energy(text: str) -> float:
    try:
        return parse_energy(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _q_list(text: str) -> list:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _fmt(x) -> str:
    if x is None:
        return ""
    if x == INFINITY:
        return "inf"
    return repr(float(x))


def _jsonable(d: dict) -> dict:
    return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in d.items()}


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc.msg})") from None


# ---------------------------------------------------------------------------


def cmd_bounds(args) -> int:
    try:
        inst = PhotoisomerInstance(args.delta, args.w, args.q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep = bounds.report(inst)
    d = _jsonable(rep.to_dict())
    if args.format == "json":
        print(json.dumps(d, indent=2))
    else:
        width = max(len(k) for k in d)
        for k, v in d.items():
            shown = "-" if v is None else (f"{v:.9g}" if isinstance(v, float) else str(v))
            print(f"{k:<{width}}  {shown}")
    return EXIT_OK


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(bounds.SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in bounds.SWEEP_COLUMNS])
    return buf.getvalue()


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def cmd_sweep(args) -> int:
    outputs = tuple(args.outputs.split(",")) if args.outputs else None
    if outputs is None:
        outputs = bounds.BOUND_NAMES if args.w == INFINITY else tuple(
            b for b in bounds.BOUND_NAMES if b != "gamma_embed")
    unknown = set(outputs) - set(bounds.BOUND_NAMES)
    if unknown:
        raise UsageError(f"unknown outputs: {', '.join(sorted(unknown))}")
    if "gamma_embed" in outputs and args.w != INFINITY:
        raise UsageError("gamma_embed needs --w inf")
    if any(not 0 <= q <= 1 for q in args.q):
        raise UsageError("every q must lie in [0, 1]")
    if not args.q:
        raise UsageError("--q needs at least one value")
    try:
        rows = bounds.sweep_table(args.delta_min, args.delta_max, args.steps, args.q, args.w,
                                  outputs, args.embed_grid, _workers())
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = sweep_csv(rows)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {args.out}: {exc.strerror}") from None
        print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_check_embeddable(args) -> int:
    doc = _read_json(args.matrix_file)
    try:
        g = load_matrix(doc)
        verdict = embeddability_check(g)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{args.matrix_file}: {exc}") from None
    shown = [str(v) if isinstance(v, complex) else v for v in verdict.spectrum]
    print(json.dumps({
        "verdict": verdict.status.value,
        "clause": verdict.clause,
        "reason": verdict.reason,
        "spectrum": shown,
        "f": verdict.f_value,
    }, indent=2))
    return {
        Embeddability.EMBEDDABLE: EXIT_OK,
        Embeddability.NOT_EMBEDDABLE: EXIT_NEGATIVE,
        Embeddability.UNDETERMINED: EXIT_UNDETERMINED,
    }[verdict.status]


def _load_state(path: str):
    doc = _read_json(path)
    try:
        system = ThermalSystem(tuple(parse_energy(e) for e in doc["energies"]))
        p = populations(np.asarray(doc["populations"], dtype=float), system)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None
    return system, p


def cmd_check_ctm(args) -> int:
    sys0, p0 = _load_state(args.initial)
    sys1, target = _load_state(args.target)
    if sys0.energies != sys1.energies:
        raise UsageError("initial and target states use different energies")
    if args.yield_level is not None and not 0 <= args.yield_level < sys0.n:
        raise UsageError(f"--yield-level must be a level index below {sys0.n}")
    if args.max_steps < 1 or not 0 < args.lambda_step <= 1:
        raise UsageError("need --max-steps >= 1 and 0 < --lambda-step <= 1")
    res = ctm_reachable(p0, target, sys0, max_steps=args.max_steps, lambda_step=args.lambda_step,
                        yield_level=args.yield_level)
    print(json.dumps(res.to_dict(), indent=2))
    if not res.reachable:
        print(res.message, file=sys.stderr)
        return EXIT_NEGATIVE
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suite

    if args.suite not in (*SUITES, "all"):
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join([*SUITES, 'all'])}")
    results = run_suite(args.suite)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_NEGATIVE


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="switchyield", description="Photoisomerization yield bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="all yield bounds for one (delta, w, q)")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--w", type=_energy, required=True, help="excited-level energy or 'inf'")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sweep", help="bounds over a delta grid and list of q, as CSV")
    p.add_argument("--delta-min", type=float, required=True)
    p.add_argument("--delta-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--q", type=_q_list, required=True, help="comma-separated, e.g. 0,0.4,0.7,1")
    p.add_argument("--w", type=_energy, required=True)
    p.add_argument("--outputs", default=None,
                   help="comma-separated subset of " + ",".join(bounds.BOUND_NAMES))
    p.add_argument("--embed-grid", type=int, default=400)
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check-embeddable", help="classify a 3x3 Gibbs-stochastic matrix")
    p.add_argument("matrix_file")
    p.set_defaults(func=cmd_check_embeddable)

    p = sub.add_parser("check-ctm", help="search a thermalization sequence from initial to target")
    p.add_argument("--initial", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--max-steps", type=int, default=6)
    p.add_argument("--lambda-step", type=float, default=0.01)
    p.add_argument("--yield-level", type=int, default=None,
                   help="only require at least the target population on this level")
    p.set_defaults(func=cmd_check_ctm)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", help="gs3, gs4, markov, embed, curves or all")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConstraintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
