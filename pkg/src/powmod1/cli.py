"""Command line driver: densify | construct | verify | dimension | discrepancy.

Exit codes: 0 all certifications passed, 1 a certified check failed,
2 precision or feasibility error, 3 usage error.  Outputs are byte-stable
for a fixed configuration and seed (no timestamps are written).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from gmpy2 import mpq

from . import analysis, construct, sequences
from .errors import PowmodError, UsageError
from .interval import (
    PrecisionPolicy,
    RInterval,
    decimal_enclosure,
    default_precision,
    parse_decimal,
)

FEASIBILITY_EXIT = 2
USAGE_EXIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_sequence_args(p, count_flag="--count"):
    p.add_argument("--family", default="nsq",
                   help="nsq | npow:K | quad:A,B,C | geo:B | lin | file:PATH")
    p.add_argument("--target", default="zero", help="zero | const:K | file:PATH")
    p.add_argument(count_flag, type=int, default=None,
                   help="sequence prefix length")


def _add_common(p):
    p.add_argument("--config", default=None,
                   help="flat key=value file mirroring the flags; flags win")
    p.add_argument("--precision-bits", type=int, default=None,
                   help="initial working precision override")
    p.add_argument("--max-doublings", type=int, default=8,
                   help="precision escalation budget")
    p.add_argument("--out", default=None, help="output file (default stdout)")


def build_parser() -> _Parser:
    parser = _Parser(prog="powmod1", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("densify", help="insert terms until the ratio bound holds")
    _add_sequence_args(p)
    p.add_argument("--epsilon", default=None, help="ratio slack (required)")
    p.add_argument("--fill", default="zero", help="zero | const:K | copy-next")
    _add_common(p)

    p = sub.add_parser("construct", help="descend to a certified alpha")
    _add_sequence_args(p)
    p.add_argument("--lambda", dest="window_lo", default=None,
                   help="window left endpoint (> 1, required)")
    p.add_argument("--delta", dest="window_width", default=None,
                   help="window width (> 0, required)")
    p.add_argument("--eta", dest="branch_exponent", default=None,
                   help="branch exponent in (0, 1) (required)")
    p.add_argument("--epsilon", default="0.5", help="densification ratio slack")
    p.add_argument("--fill", default="zero")
    p.add_argument("--depth", type=int, default=None,
                   help="final original-sequence index to certify (required)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--branch", default="leftmost",
                   choices=sorted(construct.BRANCH_POLICIES))
    p.add_argument("--digits", type=int, default=50,
                   help="decimal digits of alpha to print")
    p.add_argument("--tree-out", default=None, help="also export the level tree")
    p.add_argument("--max-nodes", type=int, default=20000)
    _add_common(p)

    p = sub.add_parser("verify", help="re-certify an alpha against a sequence")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--alpha", default=None, help="decimal value > 1")
    group.add_argument("--certificate", default=None, help="certificate file")
    _add_sequence_args(p, count_flag="--to")
    p.add_argument("--from", dest="start", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("dimension", help="dimension lower bound from a tree export")
    p.add_argument("--tree", default=None, help="tree export file (required)")
    p.add_argument("--lambda", dest="window_lo", default=None)
    p.add_argument("--delta", dest="window_width", default=None)
    p.add_argument("--eta", dest="branch_exponent", default=None)
    p.add_argument("--epsilon", default=None)
    _add_common(p)

    p = sub.add_parser("discrepancy", help="star discrepancy of fractional parts")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--points", default=None, help="file of values in [0,1)")
    group.add_argument("--alpha", default=None)
    group.add_argument("--certificate", default=None)
    _add_sequence_args(p, count_flag="--to")
    _add_common(p)
    return parser


_INT_KEYS = {"count", "to", "depth", "seed", "digits", "max_nodes",
             "precision_bits", "max_doublings", "start"}
_RENAME = {"lambda": "window_lo", "delta": "window_width",
           "eta": "branch_exponent", "from": "start"}


def _load_config(path) -> dict:
    overrides = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            dest = _RENAME.get(key, key.replace("-", "_"))
            overrides[dest] = int(value) if dest in _INT_KEYS else value
    return overrides


def _parse(argv) -> argparse.Namespace:
    """Parse argv; a --config file supplies defaults, flags override it."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        defaults = _load_config(args.config)
        fresh = build_parser()
        known = {act.dest for act in fresh._actions}
        for sp in fresh._subparsers._group_actions[0].choices.values():
            known.update(act.dest for act in sp._actions)
        unknown = set(defaults) - known
        if unknown:
            raise UsageError(f"{args.config}: unknown config keys {sorted(unknown)}")
        fresh.set_defaults(**defaults)
        args = fresh.parse_args(argv)
    return args


def _policy(args, q_max=None, base=None) -> PrecisionPolicy:
    if args.precision_bits:
        return PrecisionPolicy(initial=args.precision_bits,
                               max_doublings=args.max_doublings)
    if q_max is not None and base is not None and mpq(base) > 1:
        return PrecisionPolicy(initial=default_precision(q_max, base),
                               max_doublings=args.max_doublings)
    return PrecisionPolicy(max_doublings=args.max_doublings)


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _build_pair(args, count):
    if count is None or count < 2:
        raise UsageError("need --count/--to of at least 2")
    return sequences.gen_exponents(args.family, count, target=args.target,
                                   strict=False)


# ------------------------------------------------------------- subcommands


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            flag = {v: k for k, v in _RENAME.items()}.get(name, name)
            raise UsageError(f"--{flag.replace('_', '-')} is required")


def _cmd_densify(args) -> int:
    _require(args, "epsilon")
    count = args.count or 16
    sp = _build_pair(args, count)
    dp = sequences.densify(sp, parse_decimal(args.epsilon), fill=args.fill)
    lines = []
    one_plus = 1 + dp.ratio_slack
    ratio_ok = all(b <= one_plus * a for a, b in zip(dp.q, dp.q[1:]))
    round_trip = dp.originals().q == sp.q and dp.originals().r == sp.r
    summary = {
        "input_terms": len(sp.q),
        "densified_terms": len(dp.q),
        "inserted": len(dp.q) - len(sp.q),
        "ratio_bound_certified": ratio_ok,
        "origin_roundtrip_exact": round_trip,
        "first_gap": sequences.render_rational(dp.q[1] - dp.q[0]),
        "last_gap": sequences.render_rational(dp.q[-1] - dp.q[-2]),
    }
    if args.out:
        sequences.write_sequence_file(args.out, dp)
    else:
        for qv, rv in zip(dp.q, dp.r):
            lines.append(f"{sequences.render_rational(qv)}\t"
                         f"{sequences.render_rational(rv)}")
        sys.stdout.write("\n".join(lines) + "\n")
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    if not (ratio_ok and round_trip):
        return 1
    return 0


def _make_config(args) -> construct.ConstructionConfig:
    return construct.ConstructionConfig(
        window_lo=parse_decimal(args.window_lo),
        window_width=parse_decimal(args.window_width),
        branch_exponent=parse_decimal(args.branch_exponent),
        ratio_slack=parse_decimal(args.epsilon),
        depth=args.depth,
        branch_policy=args.branch,
        seed=args.seed,
        max_tree_nodes=args.max_nodes,
    )


def _cmd_construct(args) -> int:
    _require(args, "window_lo", "window_width", "branch_exponent", "depth")
    count = args.count or args.depth + 1
    if count < args.depth + 1:
        raise UsageError("--count must exceed --depth")
    sp = _build_pair(args, count)
    dp = sequences.densify(sp, parse_decimal(args.epsilon), fill=args.fill)
    # --depth names an index of the original sequence; map it into the
    # densified one (identity when no terms were inserted)
    densified_depth = dp.origin_map[args.depth - 1] + 1
    cfg = dataclasses.replace(_make_config(args), depth=densified_depth)
    sched = sequences.default_schedule(dp)
    policy = _policy(args, q_max=dp.q[cfg.depth - 1], base=cfg.window_hi)
    cert = construct.descend(cfg, dp, sched, policy)
    text, digits = decimal_enclosure(cert.alpha, digits=args.digits)
    cert = dataclasses.replace(cert, alpha_decimal=text,
                               guaranteed_digits=min(digits, args.digits))
    _emit(args, construct.certificate_to_text(cert))
    if args.tree_out:
        tree = construct.enumerate_tree(cfg, dp, sched, policy)
        construct.write_tree_file(tree, args.tree_out)
    print(json.dumps({"alpha": cert.alpha_decimal,
                      "start_level": cert.start_level,
                      "depth": cert.depth,
                      "levels_certified": len(cert.levels),
                      "precision_bits": cert.precision_bits},
                     sort_keys=True), file=sys.stderr)
    return 0


def _cmd_verify(args) -> int:
    if not (args.alpha or args.certificate):
        raise UsageError("verify needs --alpha or --certificate")
    if args.certificate:
        with open(args.certificate) as fh:
            cert = construct.certificate_from_text(fh.read())
        policy = _policy(args)
        if args.precision_bits is None:
            policy = PrecisionPolicy(initial=max(cert.precision_bits, 192),
                                     max_doublings=args.max_doublings)
        report = construct.recheck(cert, policy)
    else:
        to = args.to or 10
        sp = _build_pair(args, to + 1)
        sched = sequences.default_schedule(sp)
        value = parse_decimal(args.alpha)
        if value <= 1:
            raise UsageError("--alpha must exceed 1")
        policy = _policy(args, q_max=sp.q[-1], base=value + 1)
        alpha = RInterval.enclose(value, policy.initial)
        report = analysis.verify(alpha, sp, schedule=sched, start=args.start,
                                 stop=to, policy=policy)
    _emit(args, report.to_csv())
    print(json.dumps(report.summary(), sort_keys=True), file=sys.stderr)
    return 0 if report.all_passed else 1


def _stats_from_tree_file(path):
    levels, headers = construct.read_tree_file(path)
    order = sorted(levels)
    if not order:
        raise UsageError(f"{path}: no interval lines")
    stats = []
    for n in order:
        head = headers.get(n, {})
        head_child = headers.get(n + 1, {})
        count = int(head.get("count", len(levels[n])))
        complete = head.get("complete", True) and head_child.get("complete", True)
        child_rows = levels.get(n + 1)
        if not child_rows:
            continue
        branch = head_child.get("branch_in")
        if branch is None:
            child_count = int(head_child.get("count", len(child_rows)))
            if child_count % count:
                raise UsageError(f"{path}: level {n + 1} count does not divide")
            branch = child_count // count
        gaps = [lo2 - hi1 for (_, _, hi1), (_, lo2, _) in
                zip(child_rows, child_rows[1:]) if lo2 > hi1]
        child_gap = min(gaps) if gaps else None
        if child_gap is None and "min_gap" in head_child:
            child_gap = parse_decimal(head_child["min_gap"])
        stats.append(analysis.LevelStat(level=n, count=count, branch=int(branch),
                                        child_gap=child_gap, complete=complete))
    return stats


def _cmd_dimension(args) -> int:
    _require(args, "tree")
    stats = _stats_from_tree_file(args.tree)
    report = analysis.falconer_bound(stats)
    have_params = all(getattr(args, name) is not None for name in
                      ("window_lo", "window_width", "branch_exponent", "epsilon"))
    if have_params:
        report = analysis.with_closed_forms(
            report, parse_decimal(args.window_lo), parse_decimal(args.window_width),
            parse_decimal(args.epsilon), parse_decimal(args.branch_exponent))
    _emit(args, report.to_csv())
    print(json.dumps(report.summary(), sort_keys=True), file=sys.stderr)
    return 0


def _cmd_discrepancy(args) -> int:
    if not (args.points or args.alpha or args.certificate):
        raise UsageError("discrepancy needs --points, --alpha, or --certificate")
    if args.points:
        points = []
        with open(args.points) as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if line:
                    points.append(parse_decimal(line))
    else:
        to = args.to or 10
        if args.certificate:
            with open(args.certificate) as fh:
                cert = construct.certificate_from_text(fh.read())
            report = construct.recheck(cert)
        else:
            sp = _build_pair(args, to + 1)
            value = parse_decimal(args.alpha)
            if value <= 1:
                raise UsageError("--alpha must exceed 1")
            policy = _policy(args, q_max=sp.q[-1], base=value + 1)
            alpha = RInterval.enclose(value, policy.initial)
            report = analysis.verify(alpha, sp, schedule=None, policy=policy,
                                     stop=to)
        # wrapped fractional parts sit within the distance bound of an
        # integer; they contribute the point 0
        points = [mpq(0) if row.frac is None else mpq(row.frac.mid(64))
                  for row in report.rows]
        points = [p - (p >= 1) for p in points]
    value = analysis.star_discrepancy(points)
    out = {"points": len(points), "star_discrepancy": float(value),
           "star_discrepancy_exact": str(value)}
    _emit(args, json.dumps(out, sort_keys=True) + "\n")
    return 0


_COMMANDS = {
    "densify": _cmd_densify,
    "construct": _cmd_construct,
    "verify": _cmd_verify,
    "dimension": _cmd_dimension,
    "discrepancy": _cmd_discrepancy,
}


def main(argv=None) -> int:
    try:
        args = _parse(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (ValueError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except PowmodError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return FEASIBILITY_EXIT


if __name__ == "__main__":
    sys.exit(main())
