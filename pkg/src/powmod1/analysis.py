"""Independent verification, dimension lower bounds, and diagnostics.

``verify`` re-derives every membership claim from an alpha enclosure alone,
with outward rounding: for each index it encloses alpha**q_n, the distance
of that power to the target modulo 1, and compares against the tolerance
with certified interval comparisons.  Nothing is reused from construction.

``falconer_bound`` turns per-level branch counts and measured sibling gaps
into the mass-distribution lower bound on Hausdorff dimension

    dim >= liminf_n  log(count_n) / -log(branch_n * gap_{n+1}),

reported per level together with a conservative running-minimum liminf
estimate and a least-squares limit estimate (the partial bounds of
self-similar data are affine in 1/-log(branch*gap), so fitting against that
abscissa removes the O(1/n) lag of the raw partials).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from gmpy2 import mpq

from .errors import InsufficientDepth, PrecisionExhausted, Uncertain
from .interval import (
    WRAPPED,
    PrecisionPolicy,
    RInterval,
    Scalar,
    dist_nearest_int,
    exact_floor,
    frac_part,
    iv_add,
    iv_div,
    iv_log,
    iv_mul,
    iv_pow,
    iv_sub,
    log_float,
    sci_upper,
)
from .sequences import DensifiedPair, SequencePair, ToleranceSchedule

# ---------------------------------------------------------------- verify


@dataclass(frozen=True)
class VerifyRow:
    index: int
    q: mpq
    frac: RInterval | None          # None means WRAPPED
    dist: RInterval
    threshold: mpq | None
    passed: bool | None

    @property
    def frac_text(self) -> str:
        if self.frac is None:
            return "WRAPPED"
        return f"[{self.frac.lo}, {self.frac.hi}]"


@dataclass(frozen=True)
class VerificationReport:
    rows: tuple[VerifyRow, ...]
    precision_bits: int

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows if r.passed is not None) and \
            any(r.passed is not None for r in self.rows)

    def failed_indices(self) -> list[int]:
        return [r.index for r in self.rows if r.passed is False]

    def max_distance_tail(self, tail: int = 3) -> mpq:
        take = self.rows[-tail:] if tail < len(self.rows) else self.rows
        return max(mpq(r.dist.hi) for r in take)

    def distances_monotone(self) -> bool:
        highs = [mpq(r.dist.hi) for r in self.rows]
        return all(b <= a for a, b in zip(highs, highs[1:]))

    def to_csv(self) -> str:
        lines = ["index,q,frac_lo,frac_hi,dist_lo,dist_hi,threshold,passed"]
        for r in self.rows:
            frac_lo = "WRAPPED" if r.frac is None else sci_upper(abs(mpq(r.frac.lo)), 20)
            frac_hi = "WRAPPED" if r.frac is None else sci_upper(mpq(r.frac.hi), 20)
            thr = "" if r.threshold is None else str(r.threshold)
            ok = "" if r.passed is None else str(r.passed).lower()
            lines.append(
                f"{r.index},{r.q},{frac_lo},{frac_hi},"
                f"{sci_upper(mpq(r.dist.lo), 20)},{sci_upper(mpq(r.dist.hi), 20)},"
                f"{thr},{ok}")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "rows": len(self.rows),
            "all_passed": self.all_passed,
            "failed_indices": self.failed_indices(),
            "max_distance_tail": sci_upper(self.max_distance_tail(), 15),
            "distances_monotone": self.distances_monotone(),
            "precision_bits": self.precision_bits,
        }


def _seq_values(seq) -> tuple[Sequence[mpq], Sequence[mpq]]:
    if isinstance(seq, (SequencePair, DensifiedPair)):
        return seq.q, seq.r
    q, r = seq
    return [mpq(v) for v in q], [mpq(v) for v in r]


def verify(alpha: RInterval, seq, *, schedule: ToleranceSchedule | None = None,
           thresholds: Sequence | None = None, indices: Sequence[int] | None = None,
           start: int = 1, stop: int | None = None,
           policy: PrecisionPolicy | None = None) -> VerificationReport:
    """Certify dist(alpha**q_n - r_n, Z) against per-level tolerances.

    ``seq`` is a SequencePair/DensifiedPair or a plain ``(q_list, r_list)``.
    With explicit ``indices``, the value lists and ``thresholds`` align
    positionally with them; otherwise rows run start..stop (1-based) into
    the full sequence, with tolerances from ``schedule``.  A row
    passes when the certified distance upper bound is below its tolerance,
    fails when the lower bound certifiably reaches it, and forces precision
    escalation in between.  Rows without a tolerance are informational.

    Raises PrecisionExhausted naming the first index that could not be
    decided (e.g. the alpha enclosure is too wide for the largest exponent).
    """
    if alpha.lo <= 1:
        raise ValueError("alpha enclosure must lie strictly above 1")
    qs, rs = _seq_values(seq)
    aligned = indices is not None
    if indices is None:
        stop = stop if stop is not None else (len(qs) if schedule is None
                                              else len(qs) - 1)
        indices = list(range(start, stop + 1))
        if thresholds is None and schedule is not None:
            thresholds = [schedule.at(n) for n in indices]
    elif len(qs) != len(indices):
        raise ValueError("explicit indices must align with the value lists")
    if thresholds is not None and len(thresholds) != len(indices):
        raise ValueError("thresholds must align with verified indices")

    policy = policy or PrecisionPolicy()
    rows = []
    max_prec = 0
    for pos, n in enumerate(indices):
        q = mpq(qs[pos] if aligned else qs[n - 1])
        r = mpq(rs[pos] if aligned else rs[n - 1])
        thr = mpq(thresholds[pos]) if thresholds is not None else None
        row = None
        last_exc: Exception | None = None
        for prec in policy.ladder():
            power = iv_pow(alpha, RInterval.enclose(q, prec), prec)
            dist = dist_nearest_int(iv_sub(power, RInterval.enclose(r, prec), prec),
                                    prec)
            frac = frac_part(power, prec)
            frac_iv = None if frac is WRAPPED else frac
            if thr is None:
                row = VerifyRow(n, q, frac_iv, dist, None, None)
            elif mpq(dist.hi) < thr:
                row = VerifyRow(n, q, frac_iv, dist, thr, True)
            elif mpq(dist.lo) >= thr:
                row = VerifyRow(n, q, frac_iv, dist, thr, False)
            else:
                last_exc = Uncertain(
                    f"distance enclosure straddles tolerance at index {n}")
                continue
            max_prec = max(max_prec, prec)
            break
        if row is None:
            raise PrecisionExhausted(
                f"could not certify index {n} at up to {policy.cap} bits: {last_exc}")
        rows.append(row)
    return VerificationReport(rows=tuple(rows), precision_bits=max_prec)


# ---------------------------------------------------------------- dimension


@dataclass(frozen=True)
class LevelStat:
    """One row of tree data: count at this level, branching out of it, and
    the measured minimal gap among those children."""

    level: int
    count: int
    branch: int | None
    child_gap: Scalar | None
    complete: bool = True


@dataclass(frozen=True)
class DimensionRow:
    level: int
    count_log: float
    branch: int
    gap_log: float
    partial: float
    clamped: bool
    complete: bool


@dataclass(frozen=True)
class DimensionReport:
    rows: tuple[DimensionRow, ...]
    liminf_estimate: float        # running minimum over the tail third
    limit_estimate: float         # least-squares extrapolation of the lag
    monotone_gaps: bool
    closed_form: float | None = None
    limit_form: float | None = None

    def to_csv(self) -> str:
        lines = ["level,log_count,branch,log_gap,partial_bound,clamped,complete"]
        for r in self.rows:
            lines.append(f"{r.level},{r.count_log:.6f},{r.branch},{r.gap_log:.6f},"
                         f"{r.partial:.6f},{str(r.clamped).lower()},"
                         f"{str(r.complete).lower()}")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        out = {
            "levels": len(self.rows),
            "liminf_estimate": round(self.liminf_estimate, 6),
            "limit_estimate": round(self.limit_estimate, 6),
            "monotone_gaps": self.monotone_gaps,
        }
        if self.closed_form is not None:
            out["closed_form_bound"] = round(self.closed_form, 6)
        if self.limit_form is not None:
            out["limit_bound"] = round(self.limit_form, 6)
        return out


def falconer_bound(tree_or_stats, tail_fraction: float = 1 / 3) -> DimensionReport:
    """Mass-distribution dimension lower bound from per-level tree data.

    Accepts a CantorTree (via its ``level_stats``) or an iterable of
    LevelStat.  Gaps must be positive; when they fail to decrease, the
    running minimum is substituted (this only weakens the bound) and the
    report flags it.  Partial bounds outside [0, 1] are clamped and
    flagged.  The liminf estimate never claims a limit: it is the minimum
    over the last third of levels; the limit estimate is the intercept of
    the least-squares fit of partial ~ A - B / (-log(branch*gap)).
    """
    stats = tree_or_stats.level_stats() if hasattr(tree_or_stats, "level_stats") \
        else list(tree_or_stats)
    usable = [s for s in stats if s.branch is not None and s.child_gap is not None]
    if len(usable) < 3:
        raise InsufficientDepth(
            f"need at least 3 levels with branch/gap data, have {len(usable)}")

    monotone = True
    running = None
    rows = []
    for s in usable:
        gap = mpq(s.child_gap)
        if gap <= 0:
            raise InsufficientDepth(f"level {s.level} gap is not positive")
        if running is not None and gap >= running:
            monotone = False
        running = gap if running is None else min(running, gap)
        count_log = log_float(mpq(s.count))
        denom = -(math.log(s.branch) + log_float(running))
        if denom <= 0:
            raise InsufficientDepth(
                f"level {s.level}: branch*gap is not below 1; no box shrinkage")
        partial = count_log / denom
        clamped = not (0.0 <= partial <= 1.0)
        rows.append(DimensionRow(
            level=s.level, count_log=count_log, branch=s.branch,
            gap_log=log_float(running), partial=min(max(partial, 0.0), 1.0),
            clamped=clamped, complete=s.complete))

    tail = max(3, int(math.ceil(len(rows) * tail_fraction)))
    tail_rows = rows[-tail:]
    liminf_estimate = min(r.partial for r in tail_rows)
    xs = np.array([1.0 / (-(math.log(r.branch) + r.gap_log)) for r in tail_rows])
    ys = np.array([r.partial for r in tail_rows])
    if len(tail_rows) >= 2 and np.ptp(xs) > 0:
        slope, intercept = np.polyfit(xs, ys, 1)
        limit_estimate = float(intercept)
    else:
        limit_estimate = liminf_estimate
    return DimensionReport(rows=tuple(rows), liminf_estimate=liminf_estimate,
                           limit_estimate=limit_estimate, monotone_gaps=monotone)


def with_closed_forms(report: DimensionReport, lam, width, slack, eta,
                      prec: int = 192) -> DimensionReport:
    cf = closed_form_bound(lam, width, slack, eta, prec)
    lf = limit_bound(lam, width, prec)
    return DimensionReport(rows=report.rows,
                           liminf_estimate=report.liminf_estimate,
                           limit_estimate=report.limit_estimate,
                           monotone_gaps=report.monotone_gaps,
                           closed_form=float(cf.mid(64)),
                           limit_form=float(lf.mid(64)))


def closed_form_bound(lam, width, slack, eta, prec: int = 192) -> RInterval:
    """Certified enclosure of eta log(lam) / (eta slack log(lam) + log(lam+width))."""
    lam, width, slack, eta = mpq(lam), mpq(width), mpq(slack), mpq(eta)
    if lam <= 1 or width <= 0 or slack <= 0 or not (0 < eta <= 1):
        raise ValueError("need lam > 1, width > 0, slack > 0, eta in (0, 1]")
    log_lam = iv_log(RInterval.enclose(lam, prec), prec)
    log_hi = iv_log(RInterval.enclose(lam + width, prec), prec)
    numerator = iv_mul(eta, log_lam, prec)
    denominator = iv_add(iv_mul(eta * slack, log_lam, prec), log_hi, prec)
    return iv_div(numerator, denominator, prec)


def limit_bound(lam, width, prec: int = 192) -> RInterval:
    """Certified enclosure of log(lam) / log(lam+width)."""
    lam, width = mpq(lam), mpq(width)
    if lam <= 1 or width <= 0:
        raise ValueError("need lam > 1 and width > 0")
    return iv_div(iv_log(RInterval.enclose(lam, prec), prec),
                  iv_log(RInterval.enclose(lam + width, prec), prec), prec)


# ---------------------------------------------------------------- synthetic


def middle_third_stats(levels: int) -> list[LevelStat]:
    """Exact per-level data of the middle-thirds construction on [0, 1]."""
    return [
        LevelStat(level=k, count=2 ** k, branch=2, child_gap=mpq(1, 3 ** (k + 1)))
        for k in range(1, levels + 1)
    ]


def binary_quarter_gap_stats(levels: int) -> list[LevelStat]:
    """Branching 2 with gaps 4**-(k+1): a family of dimension 1/2."""
    return [
        LevelStat(level=k, count=2 ** k, branch=2, child_gap=mpq(1, 4 ** (k + 1)))
        for k in range(1, levels + 1)
    ]


def middle_third_leaves(depth: int) -> list[tuple[mpq, mpq]]:
    """Exact leaf intervals of the middle-thirds set at a given depth."""
    leaves = [(mpq(0), mpq(1))]
    for _ in range(depth):
        third = []
        for lo, hi in leaves:
            w = (hi - lo) / 3
            third.append((lo, lo + w))
            third.append((hi - w, hi))
        leaves = third
    return leaves


# ---------------------------------------------------------------- box count


@dataclass(frozen=True)
class BoxCountResult:
    scales: tuple[mpq, ...]
    counts: tuple[int, ...]
    slope: float
    residual: float


def box_count(leaves, scales: Sequence) -> BoxCountResult:
    """Box-counting slope over grid-aligned boxes covering the leaf intervals.

    ``leaves`` is an iterable of interval-like items: (lo, hi) pairs,
    CantorInterval, or RInterval.  Exact integer box indexing; the slope is
    the least-squares fit of log N(s) against log (1/s).
    """
    pairs = sorted(_as_pair(leaf) for leaf in leaves)
    if not pairs:
        raise InsufficientDepth("no leaf intervals")
    scales = [mpq(s) for s in scales]
    if len(scales) < 3:
        raise InsufficientDepth("need at least 3 scales")
    if any(s <= 0 for s in scales):
        raise ValueError("scales must be positive")
    max_width = max(hi - lo for lo, hi in pairs)
    span = max(s for s in scales) / min(s for s in scales)
    if span < 100:
        raise InsufficientDepth("scales must span at least two decades")
    if min(scales) < max_width:
        raise InsufficientDepth("smallest scale is below the leaf width")

    counts = []
    for s in scales:
        total = 0
        last_box = None
        for lo, hi in pairs:
            first = exact_floor(lo / s)
            ratio = hi / s
            final = exact_floor(ratio)
            if ratio == final:
                final -= 1   # leaf ending on a grid line fits the closing box
            if final < first:
                final = first
            if last_box is not None and first <= last_box:
                first = last_box + 1
            if final >= first:
                total += int(final - first + 1)
                last_box = final
        counts.append(total)

    xs = np.array([-log_float(s) for s in scales])
    ys = np.array([math.log(c) for c in counts])
    slope, intercept = np.polyfit(xs, ys, 1)
    fitted = slope * xs + intercept
    residual = float(np.sqrt(np.mean((ys - fitted) ** 2)))
    return BoxCountResult(scales=tuple(scales), counts=tuple(counts),
                          slope=float(slope), residual=residual)


def _as_pair(leaf) -> tuple[mpq, mpq]:
    if isinstance(leaf, tuple):
        return mpq(leaf[0]), mpq(leaf[1])
    if isinstance(leaf, RInterval):
        return mpq(leaf.lo), mpq(leaf.hi)
    cert = getattr(leaf, "cert", None)
    if cert is not None:
        return mpq(cert.lo), mpq(cert.hi)
    raise TypeError(f"cannot interpret {leaf!r} as an interval")


# ---------------------------------------------------------------- discrepancy


def star_discrepancy(points: Iterable) -> mpq:
    """Exact star discrepancy D_N* of points in [0, 1).

    D_N* = max over sorted positions i of max(i/N - x_(i), x_(i) - (i-1)/N);
    always within [1/(2N), 1].
    """
    xs = sorted(mpq(p) for p in points)
    if not xs:
        raise ValueError("need at least one point")
    if xs[0] < 0 or xs[-1] >= 1:
        raise ValueError("points must lie in [0, 1)")
    n = len(xs)
    best = mpq(0)
    for i, x in enumerate(xs, start=1):
        best = max(best, mpq(i, n) - x, x - mpq(i - 1, n))
    return best
