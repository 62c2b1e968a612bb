"""Command line front end: ``sidedbets <verb> [options]``.

Exit status is 0 on success, 1 on a domain or file error (reported as JSON
on stderr) and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from decimal import Decimal
from fractions import Fraction

from . import adversary as adv
from . import constructions as con
from . import serialize as ser
from .core import (
    ONE,
    ZERO,
    MartingaleTable,
    StageSequence,
    StrategyRule,
    evaluate,
    format_rational,
    growth_exponent,
    log2_decimal,
    parse_rational,
    validate_martingale,
)
from .errors import MartingaleError, UnknownStrategy
from .generators import biased_bits

fmt = format_rational


class ConstantRule(StrategyRule):
    def __init__(self, c):
        self.c = Fraction(c)

    def start(self):
        return None

    def advance(self, state, prefix, bit):
        return None

    def capital(self, state):
        return self.c


def _prediction(text: str):
    if text in ("0", "constant-0"):
        return ZERO
    if text in ("1", "constant-1"):
        return ONE
    raise UnknownStrategy(f"prediction must be 0 or 1, got {text!r}")


def parse_strategy(spec: str) -> StrategyRule:
    """``name[:key=value,...]``, e.g. ``hoeffding:q=3/4,f=0`` or ``frequency:I=8``."""
    name, _, rest = spec.partition(":")
    opts = dict(item.split("=", 1) for item in rest.split(",") if item)
    try:
        if name == "hoeffding":
            return con.hoeffding_rule(parse_rational(opts.get("q", "3/4")), _prediction(opts.get("f", "0")))
        if name == "frequency":
            return con.frequency_mixture_rule(int(opts.get("I", "8")), _prediction(opts.get("f", "0")))
        if name == "constant":
            return ConstantRule(parse_rational(opts.get("c", "1")))
        if name == "ville":
            k = opts.get("k")
            return con.VilleRule(None if k is None else int(k), int(opts.get("t", "0")),
                                 parse_rational(opts.get("initial", "1")))
        if name == "villemix":
            return con.ville_mixture(int(opts.get("pairs", "16")))
    except (KeyError, ValueError) as exc:
        raise UnknownStrategy(f"bad parameters in {spec!r}: {exc}") from exc
    raise UnknownStrategy(f"unknown strategy {name!r}")


def _emit(args, doc) -> None:
    text = ser.dumps(doc)
    if getattr(args, "out", None):
        ser.write_json(args.out, doc)
    else:
        sys.stdout.write(text)


def _dec(x: Fraction, places: int = 12) -> str:
    return str(round(Decimal(x.numerator) / Decimal(x.denominator), places))


# ---------------------------------------------------------------------------
# verbs


def cmd_validate(args) -> int:
    report = validate_martingale(ser.load_table(args.table))
    if report.ok:
        print("ok")
        return 0
    doc = {"ok": False,
           "violations": [{"sigma": v.sigma, "lhs": fmt(v.lhs), "rhs": fmt(v.rhs)} for v in report.violations],
           "negatives": list(report.negatives)}
    sys.stdout.write(ser.dumps(doc))
    return 1


def _path_arg(args) -> str:
    if args.bits is not None:
        return ser.read_bits(args.bits)
    return args.x or ""


def cmd_eval(args) -> int:
    source = ser.load_table(args.table) if args.table else parse_strategy(args.strategy)
    traj = evaluate(source, _path_arg(args))
    for n, c in traj.points:
        row = f"{n} {fmt(c)}"
        if args.report_decimals:
            row += f" {_dec(c)}"
        print(row)
    return 0


def cmd_decompose(args) -> int:
    n, t = con.product_decompose(ser.load_table(args.table))
    ser.save_table(args.out_n, n)
    ser.save_table(args.out_t, t)
    return 0


def cmd_hoeffding(args) -> int:
    _emit(args, ser.table_to_doc(con.hoeffding(parse_rational(args.q), _prediction(args.f), args.depth)))
    return 0


def cmd_tailcount(args) -> int:
    tc = con.hoeffding_tail_count(args.n, parse_rational(args.q), _prediction(args.f))
    doc = {"n": tc.n, "q": fmt(tc.q), "count": tc.count, "bound_ok": tc.bound_ok,
           "exact_power": None if tc.exact_power is None else fmt(tc.exact_power)}
    sys.stdout.write(ser.dumps(doc))
    return 0 if tc.bound_ok else 1


def cmd_mixture(args) -> int:
    table = con.frequency_mixture(args.depth, args.truncation)
    _emit(args, ser.table_to_doc(table))
    if args.report_decimals:
        bound = con.frequency_mixture_tail_bound(args.depth, args.truncation)
        print(f"tail bound {fmt(bound)}", file=sys.stderr)
    return 0


def cmd_dimstrategy(args) -> int:
    test = ser.stest_from_doc(ser.read_json(args.test))
    _emit(args, ser.table_to_doc(con.dim_strategy(test, parse_rational(args.eps), args.depth)))
    return 0


def cmd_specialext(args) -> int:
    table = ser.load_table(args.table)
    tau = adv.find_special_extension(args.sigma, args.gap, parse_rational(args.eps), table,
                                     max_gap=args.max_gap, window=args.window)
    if tau is None:
        print("not found")
        return 1
    print(tau)
    return 0


def _relaxed(args) -> adv.Relaxed:
    gaps = tuple(int(g) for g in args.gaps.split(",")) if args.gaps else None
    return adv.Relaxed(parse_rational(args.eps), parse_rational(args.q), gaps)


def _schedule(args) -> adv.Schedule:
    profile = "paper" if args.profile == "paper" else _relaxed(args)
    return adv.schedule(args.n_max, profile, budget_exponent=args.budget_exponent)


def cmd_schedule(args) -> int:
    _emit(args, ser.schedule_to_doc(_schedule(args)))
    return 0


def cmd_adversary(args) -> int:
    sched = _schedule(args)
    if args.zero or args.one:
        zero = [ser.load_table(p) for p in args.zero]
        one = [ser.load_table(p) for p in args.one]
        opponent = StageSequence.separable(zero, one)
    else:
        depth = sched.s(sched.n_max)
        c = parse_rational(args.constant)
        opponent = StageSequence.separable([MartingaleTable.constant(depth, c)],
                                           [MartingaleTable.constant(depth, 0)])
    trace = adv.run_construction(opponent, sched, args.max_stage, max_gap=args.max_gap)
    _emit(args, ser.trace_to_doc(trace))
    return 0 if all(trace.invariants().values()) else 1


def cmd_report(args) -> int:
    rule = parse_strategy(args.strategy)
    if args.gen_biased:
        p, seed, length = args.gen_biased
        bits = biased_bits(parse_rational(p), int(seed), int(length))
    elif args.bits:
        bits = ser.read_bits(args.bits)
    else:
        raise MartingaleError("report needs --bits or --gen-biased")
    traj = evaluate(rule, bits)
    rows = []
    for n, c in traj.points:
        exponent = "" if n == 0 else str(round(log2_decimal(c) / n, 12)) if c > 0 else "-inf"
        rows.append({"n": n, "capital": fmt(c), "exponent": exponent})
    if args.format == "json":
        summary = growth_exponent(traj)
        text = ser.dumps({"rows": rows, "final_exponent": str(round(summary.final, 12)),
                          "best_exponent": str(round(summary.best, 12)), "best_n": summary.best_n})
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["n", "capital", "exponent"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sidedbets", description="Exact finite-depth betting strategies.")
    p.add_argument("--report-decimals", action="store_true", help="add decimal approximations to reports")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report-decimals", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="verb", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    s = add("validate", help="check fairness and non-negativity of a table")
    s.add_argument("--table", required=True)
    s.set_defaults(run=cmd_validate)

    s = add("eval", help="capital along a path")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--table")
    src.add_argument("--strategy")
    s.add_argument("--bits")
    s.add_argument("--x", help="path given inline")
    s.set_defaults(run=cmd_eval)

    s = add("decompose", help="split a table into 0-sided times 1-sided factors")
    s.add_argument("--table", required=True)
    s.add_argument("--out-n", required=True)
    s.add_argument("--out-t", required=True)
    s.set_defaults(run=cmd_decompose)

    s = add("hoeffding", help="exponential strategy table")
    s.add_argument("--q", required=True)
    s.add_argument("--f", default="0")
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(run=cmd_hoeffding)

    s = add("tailcount", help="exhaustive tail count against the exponential bound")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--q", required=True)
    s.add_argument("--f", default="0")
    s.set_defaults(run=cmd_tailcount)

    s = add("mixture", help="truncated frequency mixture table")
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--truncation", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(run=cmd_mixture)

    s = add("dimstrategy", help="strategy from an s-test")
    s.add_argument("--test", required=True)
    s.add_argument("--eps", required=True)
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(run=cmd_dimstrategy)

    s = add("specialext", help="leftmost special extension")
    s.add_argument("--table", required=True)
    s.add_argument("--sigma", default="")
    s.add_argument("--gap", type=int, required=True)
    s.add_argument("--eps", required=True)
    s.add_argument("--window", choices=["open", "closed"], default="open")
    s.add_argument("--max-gap", type=int, default=24)
    s.set_defaults(run=cmd_specialext)

    for verb, fn, text in (("schedule", cmd_schedule, "exact schedule parameters"),
                           ("adversary", cmd_adversary, "run the staged construction")):
        s = add(verb, help=text)
        s.add_argument("--n-max", type=int, required=True)
        s.add_argument("--profile", choices=["paper", "relaxed"], default="relaxed")
        s.add_argument("--eps", default="1/4")
        s.add_argument("--q", default="7/8")
        s.add_argument("--gaps", help="comma-separated gaps for the relaxed profile")
        s.add_argument("--budget-exponent", type=int)
        s.add_argument("--out")
        s.set_defaults(run=fn)
        if verb == "adversary":
            s.add_argument("--max-stage", type=int, default=20)
            s.add_argument("--max-gap", type=int, default=24)
            s.add_argument("--zero", nargs="*", default=[], help="0-side stage tables")
            s.add_argument("--one", nargs="*", default=[], help="1-side stage tables")
            s.add_argument("--constant", default="1/4", help="no-bet opponent capital")

    s = add("report", help="capital and exponent per prefix")
    s.add_argument("--strategy", required=True)
    s.add_argument("--bits")
    s.add_argument("--gen-biased", nargs=3, metavar=("P", "SEED", "LEN"))
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--out")
    s.set_defaults(run=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (MartingaleError, ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
