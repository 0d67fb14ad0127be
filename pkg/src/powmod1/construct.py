"""Nested-interval construction of certified members of the target set.

Starting from a level N where the window [lo, lo+width] raised to the
exponent q_N spans enough integers, each integer label h carries the
interval

    I(n, h) = [(h + a_n)^(1/q_n), (h + b_n)^(1/q_n)],
    a_n = r_n - eps_n,  b_n = r_n + eps_n,

whose points x all satisfy dist(x**q_n - r_n, Z) <= eps_n.  Refining maps a
label's bracket [h+a_n, h+b_n] through t -> t**(q_{n+1}/q_n), certifies that
the image holds at least m_n + 2 consecutive integers (m_n the branch count
ceil(lam**(eta*gap))), drops the first and last, and keeps m_n children.
Descending one branch to the requested depth yields a certificate for a
single alpha; enumerating levels yields the tree used for dimension bounds.

All constructed intervals are rounded inward (certified subsets of the
exact ones), so every certificate claim survives independent outward
re-verification.  Label bookkeeping is exact integer/rational arithmetic.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Sequence

from gmpy2 import mpq

from .analysis import LevelStat, verify
from .errors import (
    CertificationFailure,
    CountShortfall,
    NoValidStart,
    Uncertain,
)
from .interval import (
    PrecisionPolicy,
    RInterval,
    _decimal_digits,
    certainly_less_equal,
    decide,
    decimal_enclosure,
    default_precision,
    escalate,
    exact_ceil,
    exact_floor,
    iv_ceil,
    iv_mul,
    iv_pow,
    iv_sub,
    parse_decimal,
    sci_upper,
)
from .sequences import (
    DensifiedPair,
    SequencePair,
    ToleranceSchedule,
    level_condition,
    render_rational,
    validate_schedule,
)

BRANCH_POLICIES = ("leftmost", "midmost", "random")


@dataclass(frozen=True)
class ConstructionConfig:
    """Window, branching and refinement parameters for one construction."""

    window_lo: mpq            # left endpoint of the target window, > 1
    window_width: mpq         # window width, > 0
    branch_exponent: mpq      # eta in (0, 1): children per parent ~ lam**(eta*gap)
    ratio_slack: mpq          # densification slack eps
    depth: int                # final sequence index to certify
    branch_policy: str = "leftmost"
    seed: int | None = None
    max_tree_nodes: int = 20000
    sample_parents: int = 2
    sample_children: int = 4
    precision: PrecisionPolicy | None = None

    def __post_init__(self):
        object.__setattr__(self, "window_lo", mpq(self.window_lo))
        object.__setattr__(self, "window_width", mpq(self.window_width))
        object.__setattr__(self, "branch_exponent", mpq(self.branch_exponent))
        object.__setattr__(self, "ratio_slack", mpq(self.ratio_slack))
        if self.window_lo <= 1:
            raise ValueError("window must start above 1")
        if self.window_width <= 0:
            raise ValueError("window width must be positive")
        if not (0 < self.branch_exponent < 1):
            raise ValueError("branch exponent must lie in (0, 1)")
        if self.depth < 1:
            raise ValueError("depth must be positive")
        if self.branch_policy not in BRANCH_POLICIES:
            raise ValueError(f"branch policy must be one of {BRANCH_POLICIES}")
        if self.branch_policy == "random" and self.seed is None:
            raise ValueError("random branch policy needs a seed")

    @property
    def window_hi(self) -> mpq:
        return self.window_lo + self.window_width

    def policy_for(self, dp: DensifiedPair | SequencePair) -> PrecisionPolicy:
        if self.precision is not None:
            return self.precision
        q_max = dp.q[min(self.depth, len(dp.q)) - 1]
        return PrecisionPolicy(initial=default_precision(q_max, self.window_hi))


@dataclass(frozen=True)
class CantorInterval:
    """One labeled certified interval of a construction level."""

    level: int
    label: int
    cert: RInterval
    parent_label: int | None = None


@dataclass(frozen=True)
class CantorLevel:
    """Materialized (possibly sampled) slice of one level of the tree."""

    index: int
    intervals: tuple[CantorInterval, ...]
    count: int                   # exact number of intervals in the full level
    complete: bool               # True when `intervals` is the whole level
    branch_in: int | None = None  # children per parent used to create this level
    min_gap: mpq | None = None   # measured lower bound on sibling gaps here


@dataclass(frozen=True)
class CantorTree:
    """Levels start_level..depth of one construction run."""

    config: ConstructionConfig
    start_level: int
    depth: int
    levels: tuple[CantorLevel, ...]

    def leaves(self) -> tuple[CantorInterval, ...]:
        return self.levels[-1].intervals

    def level_stats(self) -> list[LevelStat]:
        """Per-level rows for dimension bounds.

        Row n pairs the exact interval count of level n with the branch
        count into level n+1 and the measured gap between those children,
        so it follows the mass-distribution bound's pairing.
        """
        rows = []
        for lvl, child in zip(self.levels, self.levels[1:]):
            rows.append(LevelStat(
                level=lvl.index,
                count=lvl.count,
                branch=child.branch_in,
                child_gap=child.min_gap,
                complete=lvl.complete and child.complete,
            ))
        return rows


@dataclass(frozen=True)
class LevelRecord:
    """Per-level data recorded in a certificate."""

    index: int
    q: mpq
    r: mpq
    eps: mpq
    label: int
    origin_index: int | None
    dist_hi: str        # certified decimal upper bound on dist(alpha**q - r, Z)


@dataclass(frozen=True)
class Certificate:
    """Machine-checkable record of one constructed alpha."""

    alpha: RInterval
    alpha_decimal: str
    guaranteed_digits: int
    start_level: int
    depth: int
    levels: tuple[LevelRecord, ...]
    meta: dict
    precision_bits: int


# ------------------------------------------------------------ primitives


def _window_integer_span(cfg: ConstructionConfig, q: mpq, prec: int) -> tuple[int, int]:
    """Certified first/last integers inside [lo**q, hi**q] (inner counting)."""
    lo_pow = iv_pow(RInterval.enclose(cfg.window_lo, prec),
                    RInterval.enclose(q, prec), prec)
    hi_pow = iv_pow(RInterval.enclose(cfg.window_hi, prec),
                    RInterval.enclose(q, prec), prec)
    first = exact_ceil(mpq(lo_pow.hi))
    last = exact_floor(mpq(hi_pow.lo))
    if last - first + 1 < 4:
        raise Uncertain("window integer count below 4; tighten enclosures")
    return int(first), int(last)


def _branch_count(cfg: ConstructionConfig, gap: mpq, prec: int) -> int:
    """Certified branch count ceil(lam**(eta*gap)); at least 2."""
    power = iv_pow(RInterval.enclose(cfg.window_lo, prec),
                   RInterval.enclose(cfg.branch_exponent * gap, prec), prec)
    m = iv_ceil(power).expect()
    if m < 2:
        raise CertificationFailure(f"branch count {m} below 2 at gap {gap}")
    return m


def _bracket(dp, schedule: ToleranceSchedule, n: int) -> tuple[mpq, mpq]:
    return schedule.bracket(dp.r[n - 1], n)


def _level_interval(cfg, dp, schedule, n: int, h: int, prec: int) -> RInterval:
    """Inward-certified interval [(h+a_n)^(1/q_n), (h+b_n)^(1/q_n)]."""
    a, b = _bracket(dp, schedule, n)
    base = RInterval.bounds(h + a, h + b, prec, inward=True)
    root = RInterval.enclose(1 / dp.q[n - 1], prec)
    cert = iv_pow(base, root, prec, inward=True)
    if not (cert.lo >= cfg.window_lo and cert.hi <= cfg.window_hi):
        raise Uncertain(f"level {n} interval not certified inside the window")
    return cert


def _inner_image(dp, schedule, n: int, h: int, prec: int) -> RInterval:
    """Inward image of [h+a_n, h+b_n] under t -> t**(q_{n+1}/q_n)."""
    a, b = _bracket(dp, schedule, n)
    ratio = dp.q[n] / dp.q[n - 1]
    base = RInterval.bounds(h + a, h + b, prec, inward=True)
    return iv_pow(base, RInterval.enclose(ratio, prec), prec, inward=True)


def _child_span(dp, schedule, n: int, h: int, prec: int) -> tuple[int, int]:
    """Certified first/last integers inside the image of label h at level n."""
    image = _inner_image(dp, schedule, n, h, prec)
    return int(exact_ceil(mpq(image.lo))), int(exact_floor(mpq(image.hi)))


def image_length_check(cfg, dp, schedule, n: int, h: int, prec: int) -> bool | None:
    """Certified check that the image length is >= 2 eps_n lam**gap.

    This is the growth-chain inequality behind the integer count; the count
    itself is the hard gate, so a None (undecided) answer is tolerable.
    """
    image = _inner_image(dp, schedule, n, h, prec)
    length = mpq(image.hi) - mpq(image.lo)   # exact lower bound on the true length
    gap = dp.q[n] - dp.q[n - 1]
    rhs = iv_mul(2 * schedule.at(n),
                 iv_pow(RInterval.enclose(cfg.window_lo, prec),
                        RInterval.enclose(gap, prec), prec), prec)
    return certainly_less_equal(rhs, length)


def _pick(start: int, count: int, policy: str, rng: random.Random | None) -> int:
    if policy == "leftmost":
        return start
    if policy == "midmost":
        return start + (count - 1) // 2
    return start + rng.randrange(count)


def _min_sibling_gap(children: Sequence[CantorInterval]) -> mpq | None:
    """Exact lower bound on gaps between adjacent same-parent labels."""
    best = None
    for prev, cur in zip(children, children[1:]):
        if prev.parent_label != cur.parent_label or cur.label != prev.label + 1:
            continue
        gap = mpq(cur.cert.lo) - mpq(prev.cert.hi)
        if gap <= 0:
            raise CertificationFailure(
                f"sibling intervals overlap at level {cur.level}, label {cur.label}")
        best = gap if best is None else min(best, gap)
    return best


# ------------------------------------------------------------ operations


def find_start_level(cfg: ConstructionConfig, dp: DensifiedPair | SequencePair,
                     schedule: ToleranceSchedule,
                     policy: PrecisionPolicy | None = None) -> int:
    """Smallest index N from which every construction precondition holds.

    (a) the level condition 2 eps_n lam**g_n >= ceil(lam**(eta g_n)) + 2
        holds from N through the end of the prefix;
    (b) hi**q_N - lo**q_N >= 4 (certified);
    (c) eps_n < 1/2 from N on (exact);
    (d) the brackets a_n, b_n stay inside (-1, 1) from N on (exact).
    """
    policy = policy or cfg.policy_for(dp)
    try:
        start_a, _ = validate_schedule(dp, schedule, cfg.window_lo,
                                       cfg.branch_exponent, policy)
    except Exception as exc:
        raise NoValidStart(f"level condition never satisfied: {exc}") from exc

    start_cd = 1
    for i in range(len(schedule)):
        e, r = schedule.eps[i], dp.r[i]
        if not (e < mpq(1, 2) and -1 < r - e and r + e < 1):
            start_cd = i + 2
    if start_cd > len(schedule):
        raise NoValidStart("tolerances never drop below 1/2 on this prefix")

    def window_ok(n: int) -> bool:
        def attempt(prec):
            lo_pow = iv_pow(RInterval.enclose(cfg.window_lo, prec),
                            RInterval.enclose(dp.q[n - 1], prec), prec)
            hi_pow = iv_pow(RInterval.enclose(cfg.window_hi, prec),
                            RInterval.enclose(dp.q[n - 1], prec), prec)
            return decide(certainly_less_equal(4, iv_sub(hi_pow, lo_pow, prec)))
        return escalate(policy, attempt)

    for n in range(max(start_a, start_cd), len(schedule) + 1):
        if window_ok(n):
            return n
    raise NoValidStart("window never spans 4 integer translates on this prefix")


def initial_level(cfg: ConstructionConfig, dp, schedule, start: int,
                  policy: PrecisionPolicy | None = None) -> CantorLevel:
    """Level E_N: integer translates of the start window, first/last dropped."""
    policy = policy or cfg.policy_for(dp)
    first, last = escalate(
        policy, lambda prec: _window_integer_span(cfg, dp.q[start - 1], prec))
    count = last - first - 1             # labels first+1 .. last-1
    complete = count <= cfg.max_tree_nodes
    take = count if complete else min(count, max(cfg.sample_children + 1, 2))
    # sampled levels keep the rightmost labels: gaps shrink with the label,
    # so the window containing the level's true minimal gap stays measured
    intervals = []
    for h in range(last - take, last):
        cert = escalate(policy,
                        lambda prec, h=h: _level_interval(cfg, dp, schedule, start, h, prec))
        intervals.append(CantorInterval(level=start, label=h, cert=cert))
    return CantorLevel(index=start, intervals=tuple(intervals), count=count,
                       complete=complete, branch_in=None,
                       min_gap=_min_sibling_gap_all(intervals))


def _min_sibling_gap_all(intervals: Sequence[CantorInterval]) -> mpq | None:
    """Gap floor over adjacent labels regardless of parent (start level)."""
    best = None
    for prev, cur in zip(intervals, intervals[1:]):
        if cur.label != prev.label + 1:
            continue
        gap = mpq(cur.cert.lo) - mpq(prev.cert.hi)
        if gap <= 0:
            raise CertificationFailure(
                f"adjacent intervals overlap at level {cur.level}")
        best = gap if best is None else min(best, gap)
    return best


def refine_level(cfg: ConstructionConfig, dp, schedule, level: CantorLevel,
                 policy: PrecisionPolicy | None = None) -> CantorLevel:
    """Children of every materialized parent, exactly m_n per parent."""
    policy = policy or cfg.policy_for(dp)
    n = level.index
    if n >= len(schedule):
        raise ValueError(f"no schedule entry to refine past index {n}")
    gap = dp.q[n] - dp.q[n - 1]
    if not escalate(policy, lambda prec: level_condition(
            gap, schedule.at(n), cfg.window_lo, cfg.branch_exponent, prec)):
        raise CountShortfall(
            f"level condition fails at index {n}; construction hypothesis broken",
            level=n)
    m = escalate(policy, lambda prec: _branch_count(cfg, gap, prec))
    count_next = level.count * m
    complete = level.complete and count_next <= cfg.max_tree_nodes
    parents = level.intervals if complete else level.intervals[-cfg.sample_parents:]
    per_parent = m if complete else min(m, cfg.sample_children)

    children: list[CantorInterval] = []
    for k, parent in enumerate(parents):
        first, last = escalate(
            policy, lambda prec, h=parent.label: _child_span(dp, schedule, n, h, prec))
        available = last - first + 1
        if available < m + 2:
            raise CountShortfall(
                f"image of label {parent.label} at level {n} certifies only "
                f"{available} integers, need {m + 2}", level=n)
        if k == 0 and image_length_check(
                cfg, dp, schedule, n, parent.label, policy.initial) is False:
            raise CountShortfall(
                f"image length below 2*eps*lam**gap at level {n}", level=n)
        # children labels are first+1 .. first+m; keep the rightmost window
        # when sampling (the parent's minimal sibling gap sits there)
        for h in range(first + 1 + m - per_parent, first + 1 + m):
            cert = escalate(policy, lambda prec, h=h: _level_interval(
                cfg, dp, schedule, n + 1, h, prec))
            if not parent.cert.contains_interval(cert):
                raise CertificationFailure(
                    f"child {h} at level {n + 1} not inside parent {parent.label}")
            children.append(CantorInterval(level=n + 1, label=h, cert=cert,
                                           parent_label=parent.label))
    return CantorLevel(index=n + 1, intervals=tuple(children), count=count_next,
                       complete=complete, branch_in=m,
                       min_gap=_min_sibling_gap(children))


def enumerate_tree(cfg: ConstructionConfig, dp, schedule,
                   policy: PrecisionPolicy | None = None) -> CantorTree:
    """Levels N..depth, full while the node budget allows, sampled after."""
    policy = policy or cfg.policy_for(dp)
    _check_depth(cfg, dp)
    start = find_start_level(cfg, dp, schedule, policy)
    if start > cfg.depth:
        raise NoValidStart(f"start level {start} exceeds requested depth {cfg.depth}")
    levels = [initial_level(cfg, dp, schedule, start, policy)]
    for _ in range(start, cfg.depth):
        levels.append(refine_level(cfg, dp, schedule, levels[-1], policy))
    return CantorTree(config=cfg, start_level=start, depth=cfg.depth,
                      levels=tuple(levels))


def _check_depth(cfg, dp):
    if cfg.depth > len(dp.q) - 1:
        raise ValueError(
            f"depth {cfg.depth} needs sequence index {cfg.depth + 1}; "
            f"prefix has {len(dp.q)} terms")


def descend(cfg: ConstructionConfig, dp: DensifiedPair | SequencePair,
            schedule: ToleranceSchedule,
            policy: PrecisionPolicy | None = None) -> Certificate:
    """Follow one branch to ``cfg.depth`` and certify the resulting alpha.

    The per-level distance bounds recorded in the certificate are computed
    by the independent verifier over the final enclosure, not copied from
    the construction.
    """
    policy = policy or cfg.policy_for(dp)
    _check_depth(cfg, dp)
    start = find_start_level(cfg, dp, schedule, policy)
    if start > cfg.depth:
        raise NoValidStart(f"start level {start} exceeds requested depth {cfg.depth}")
    rng = random.Random(cfg.seed) if cfg.branch_policy == "random" else None

    first, last = escalate(
        policy, lambda prec: _window_integer_span(cfg, dp.q[start - 1], prec))
    label = _pick(first + 1, last - first - 1, cfg.branch_policy, rng)
    cert = escalate(policy, lambda prec: _level_interval(
        cfg, dp, schedule, start, label, prec))
    path = [(start, label)]

    for n in range(start, cfg.depth):
        gap = dp.q[n] - dp.q[n - 1]
        if not escalate(policy, lambda prec, g=gap, i=n: level_condition(
                g, schedule.at(i), cfg.window_lo, cfg.branch_exponent, prec)):
            raise CountShortfall(f"level condition fails at index {n}", level=n)
        m = escalate(policy, lambda prec, g=gap: _branch_count(cfg, g, prec))
        cfirst, clast = escalate(
            policy, lambda prec, h=label, i=n: _child_span(dp, schedule, i, h, prec))
        if clast - cfirst + 1 < m + 2:
            raise CountShortfall(
                f"image of label {label} at level {n} certifies only "
                f"{clast - cfirst + 1} integers, need {m + 2}", level=n)
        label = _pick(cfirst + 1, m, cfg.branch_policy, rng)
        child = escalate(policy, lambda prec, h=label, i=n: _level_interval(
            cfg, dp, schedule, i + 1, h, prec))
        if not cert.contains_interval(child):
            raise CertificationFailure(
                f"descent broke nesting at level {n + 1} (label {label})")
        cert = child
        path.append((n + 1, label))

    report = verify(cert, dp, schedule=schedule, start=start, stop=cfg.depth,
                    policy=policy)
    if not report.all_passed:
        raise CertificationFailure(
            "independent verification rejected the constructed enclosure: "
            + ", ".join(str(i) for i in report.failed_indices()))

    origin_of = {}
    if isinstance(dp, DensifiedPair):
        origin_of = {pos + 1: k + 1 for k, pos in enumerate(dp.origin_map)}
    dist_by_index = {row.index: row for row in report.rows}
    records = tuple(
        LevelRecord(
            index=n,
            q=dp.q[n - 1],
            r=dp.r[n - 1],
            eps=schedule.at(n),
            label=h,
            origin_index=origin_of.get(n),
            dist_hi=sci_upper(mpq(dist_by_index[n].dist.hi), 30),
        )
        for n, h in path)
    text, digits = decimal_enclosure(cert, digits=80)
    return Certificate(
        alpha=cert,
        alpha_decimal=text,
        guaranteed_digits=digits,
        start_level=start,
        depth=cfg.depth,
        levels=records,
        meta=_meta_snapshot(cfg, dp, schedule),
        precision_bits=report.precision_bits,
    )


def _meta_snapshot(cfg, dp, schedule) -> dict:
    return {
        "window_lo": render_rational(cfg.window_lo),
        "window_width": render_rational(cfg.window_width),
        "branch_exponent": render_rational(cfg.branch_exponent),
        "ratio_slack": render_rational(cfg.ratio_slack),
        "depth": str(cfg.depth),
        "branch_policy": cfg.branch_policy,
        "seed": "" if cfg.seed is None else str(cfg.seed),
        "family": getattr(dp, "family", "user"),
        "schedule": schedule.kind,
    }


# ------------------------------------------------------------ serialization


def certificate_to_text(cert: Certificate) -> str:
    doc = {
        "format": "powmod1-certificate/1",
        "meta": cert.meta,
        "start_level": cert.start_level,
        "depth": cert.depth,
        "precision_bits": cert.precision_bits,
        "alpha": {
            "lo": str(mpq(cert.alpha.lo)),
            "hi": str(mpq(cert.alpha.hi)),
            "decimal": cert.alpha_decimal,
            "guaranteed_digits": cert.guaranteed_digits,
        },
        "levels": [
            {
                "index": rec.index,
                "q": str(rec.q),
                "r": str(rec.r),
                "eps": str(rec.eps),
                "label": str(rec.label),
                "origin_index": rec.origin_index,
                "dist_hi": rec.dist_hi,
            }
            for rec in cert.levels
        ],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _mpq_to_big(q: mpq) -> RInterval:
    from .interval import to_big

    bits = max(int(q.numerator.bit_length()), 2)
    x = to_big(q, bits + 8)
    if mpq(x) != q:
        raise ValueError(f"endpoint {q} not exactly representable")
    return x


def certificate_from_text(text: str) -> Certificate:
    doc = json.loads(text)
    if doc.get("format") != "powmod1-certificate/1":
        raise ValueError("not a powmod1 certificate")
    lo = _mpq_to_big(mpq(doc["alpha"]["lo"]))
    hi = _mpq_to_big(mpq(doc["alpha"]["hi"]))
    levels = tuple(
        LevelRecord(
            index=int(rec["index"]),
            q=mpq(rec["q"]),
            r=mpq(rec["r"]),
            eps=mpq(rec["eps"]),
            label=int(rec["label"]),
            origin_index=rec.get("origin_index"),
            dist_hi=rec.get("dist_hi", ""),
        )
        for rec in doc["levels"])
    return Certificate(
        alpha=RInterval(lo, hi),
        alpha_decimal=doc["alpha"]["decimal"],
        guaranteed_digits=int(doc["alpha"]["guaranteed_digits"]),
        start_level=int(doc["start_level"]),
        depth=int(doc["depth"]),
        levels=levels,
        meta=dict(doc.get("meta", {})),
        precision_bits=int(doc.get("precision_bits", 0)),
    )


def recheck(cert: Certificate, policy: PrecisionPolicy | None = None,
            precision_bits: int | None = None):
    """Re-certify a parsed certificate from its own recorded data alone."""
    qs = [rec.q for rec in cert.levels]
    rs = [rec.r for rec in cert.levels]
    thresholds = [rec.eps for rec in cert.levels]
    indices = [rec.index for rec in cert.levels]
    if policy is None:
        initial = precision_bits or max(cert.precision_bits, 192)
        policy = PrecisionPolicy(initial=initial)
    return verify(cert.alpha, (qs, rs), thresholds=thresholds, indices=indices,
                  policy=policy)


# ------------------------------------------------------------ tree export


def _fixed_decimal(q: mpq, digits: int, round_up: bool) -> str:
    sign = ""
    if q < 0:
        sign, q = "-", -q
        round_up = not round_up
    return sign + _decimal_digits(q, digits, round_up)


def write_tree_file(tree: CantorTree, path: str, digits: int = 40) -> None:
    """One interval per line: 'level label lo hi' (outward decimals)."""
    with open(path, "w") as fh:
        fh.write("# powmod1-tree/1\n")
        for key, value in sorted(tree.config.__dict__.items()):
            if key in ("precision",):
                continue
            fh.write(f"# config {key} {value}\n")
        fh.write(f"# start_level {tree.start_level}\n")
        for lvl in tree.levels:
            state = "complete" if lvl.complete else "sampled"
            extra = ""
            if lvl.branch_in is not None:
                extra += f" branch_in {lvl.branch_in}"
            if lvl.min_gap is not None:
                extra += f" min_gap {sci_upper(lvl.min_gap, 20)}"
            fh.write(f"# level {lvl.index} count {lvl.count} {state}{extra}\n")
        for lvl in tree.levels:
            for node in lvl.intervals:
                lo = _fixed_decimal(mpq(node.cert.lo), digits, round_up=False)
                hi = _fixed_decimal(mpq(node.cert.hi), digits, round_up=True)
                fh.write(f"{lvl.index} {node.label} {lo} {hi}\n")


def read_tree_file(path: str):
    """Parse a tree export into ({level: [(label, lo, hi)]}, {level: header})."""
    levels: dict[int, list[tuple[int, mpq, mpq]]] = {}
    headers: dict[int, dict] = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["level"]:
                    idx = int(parts[1])
                    entry: dict = {}
                    rest = parts[2:]
                    i = 0
                    while i < len(rest):
                        if rest[i] in ("complete", "sampled"):
                            entry["complete"] = rest[i] == "complete"
                            i += 1
                        else:
                            entry[rest[i]] = rest[i + 1]
                            i += 2
                    headers[idx] = entry
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"bad tree line: {raw!r}")
            idx, label = int(parts[0]), int(parts[1])
            levels.setdefault(idx, []).append(
                (label, parse_decimal(parts[2]), parse_decimal(parts[3])))
    for rows in levels.values():
        rows.sort(key=lambda t: (t[1], t[0]))
    return levels, headers
