"""Exponent/target sequences and the gap-preserving densification pass.

Sequence data is held as exact rationals (decimal inputs parse exactly), so
densification, tolerance schedules and the bracketing values a_n, b_n are
computed with no rounding at all; interval arithmetic only enters where a
transcendental power has to be evaluated (``validate_schedule``).

Densifying a sequence inserts evenly spaced terms into every gap that
violates the ratio bound q_{n+1} <= (1+eps) q_n, stepping by eps*q_N/2 from
the left endpoint until the window [q_{N+1} - eps*q_N, q_{N+1}] is reached.
Original terms keep their positions and targets, so membership statements
about the densified pair imply the same statements about the original one.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from gmpy2 import mpq, mpz

from .errors import GapConditionSuspect, InsertionInfeasible, NoValidIndex
from .interval import (
    PrecisionPolicy,
    RInterval,
    Scalar,
    certainly_less_equal,
    decide,
    escalate,
    exact_ceil,
    iv_ceil,
    iv_mul,
    iv_pow,
    parse_decimal,
    round_half_up,
)


def _as_mpq(value) -> mpq:
    if isinstance(value, str):
        return parse_decimal(value)
    return mpq(value)


def reduce_target(r) -> mpq:
    """Map a target into [-1/2, 1/2) by subtracting the nearest integer."""
    q = _as_mpq(r)
    return q - round_half_up(q)


@dataclass(frozen=True)
class SequencePair:
    """Strictly increasing positive exponents with reduced targets."""

    q: tuple[mpq, ...]
    r: tuple[mpq, ...]
    family: str = "user"

    def __post_init__(self):
        if len(self.q) != len(self.r):
            raise ValueError("exponents and targets must have equal length")
        if len(self.q) < 2:
            raise ValueError("need at least two sequence terms")
        if self.q[0] <= 0:
            raise ValueError("exponents must be positive")
        for a, b in zip(self.q, self.q[1:]):
            if b <= a:
                raise ValueError(f"exponents must increase strictly ({a} !< {b})")
        for r in self.r:
            if not (mpq(-1, 2) <= r < mpq(1, 2)):
                raise ValueError(f"target {r} outside [-1/2, 1/2)")

    def __len__(self):
        return len(self.q)

    def gaps(self) -> tuple[mpq, ...]:
        return tuple(b - a for a, b in zip(self.q, self.q[1:]))


@dataclass(frozen=True)
class DensifiedPair:
    """Densified sequences plus the positions of the original terms."""

    q: tuple[mpq, ...]
    r: tuple[mpq, ...]
    ratio_slack: mpq
    origin_map: tuple[int, ...]
    family: str = "user"

    def __len__(self):
        return len(self.q)

    def gaps(self) -> tuple[mpq, ...]:
        return tuple(b - a for a, b in zip(self.q, self.q[1:]))

    def originals(self) -> SequencePair:
        """Extract the original pair back out of the densified one."""
        return SequencePair(
            q=tuple(self.q[i] for i in self.origin_map),
            r=tuple(self.r[i] for i in self.origin_map),
            family=self.family,
        )

    def check_ratio_bound(self) -> None:
        one_plus = 1 + self.ratio_slack
        for i, (a, b) in enumerate(zip(self.q, self.q[1:])):
            if b > one_plus * a:
                raise InsertionInfeasible(
                    f"ratio bound violated at index {i + 1}: {b} > (1+eps)*{a}")


@dataclass(frozen=True)
class ToleranceSchedule:
    """Per-level tolerances eps_n; entry n bounds level n (n = 1..len-1)."""

    eps: tuple[mpq, ...]
    kind: str = "default"

    def __post_init__(self):
        for e in self.eps:
            if e <= 0:
                raise ValueError("tolerances must be positive")

    def __len__(self):
        return len(self.eps)

    def at(self, index: int) -> mpq:
        """Tolerance for 1-based sequence index ``index``."""
        return self.eps[index - 1]

    def bracket(self, r: mpq, index: int) -> tuple[mpq, mpq]:
        """The level bracket (a, b) = (r - eps, r + eps) around a target."""
        e = self.at(index)
        return r - e, r + e


# ---------------------------------------------------------------- families


_FAMILY_HELP = "nsq | npow:K | quad:A,B,C | geo:B | lin | file:PATH"


def _family_terms(family: str, count: int) -> tuple[list[mpq], str]:
    name, _, arg = family.partition(":")
    n = range(1, count + 1)
    if name == "nsq":
        return [mpq(i * i) for i in n], "nsq"
    if name == "npow":
        k = int(arg)
        if k < 2:
            raise ValueError("npow exponent must be an integer >= 2")
        return [mpq(i) ** k for i in n], family
    if name == "quad":
        try:
            a, b, c = (parse_decimal(t) for t in arg.split(","))
        except Exception as exc:
            raise ValueError(f"quad needs A,B,C coefficients: {arg!r}") from exc
        if a <= 0:
            raise ValueError("quad leading coefficient must be positive")
        return [a * i * i + b * i + c for i in n], family
    if name == "geo":
        base = parse_decimal(arg) if arg else mpq(2)
        if base <= 1:
            raise ValueError("geo base must exceed 1")
        return [base ** i for i in n], f"geo:{base}"
    if name == "lin":
        return [mpq(i) for i in n], "lin"
    raise ValueError(f"unknown family {family!r} (expected {_FAMILY_HELP})")


def _target_terms(target: str | Scalar, count: int) -> list[mpq]:
    if isinstance(target, str):
        name, _, arg = target.partition(":")
        if name == "zero":
            return [mpq(0)] * count
        if name == "const":
            return [reduce_target(parse_decimal(arg))] * count
        raise ValueError(f"unknown target {target!r} (expected zero | const:K | file:PATH)")
    return [reduce_target(target)] * count


def check_gap_growth(q: Sequence[mpq], strict: bool, what: str = "sequence") -> None:
    """Finite-prefix screen for the divergent-gap hypothesis.

    Requires the final gap to exceed the first and the gaps to be
    nondecreasing over the tail half of the prefix; anything else raises (or
    warns, when not strict) GapConditionSuspect.  This checks a prefix, not
    a limit.
    """
    gaps = [b - a for a, b in zip(q, q[1:])]
    suspect = gaps[-1] <= gaps[0]
    tail = gaps[len(gaps) // 2:]
    if any(b < a for a, b in zip(tail, tail[1:])):
        suspect = True
    if suspect:
        message = (f"{what} gaps do not look divergent on this prefix "
                   f"(first {gaps[0]}, last {gaps[-1]})")
        if strict:
            raise GapConditionSuspect(message)
        warnings.warn(message, stacklevel=3)


def gen_exponents(family: str, count: int, target: str | Scalar = "zero",
                  strict: bool = True) -> SequencePair:
    """Built-in exponent families with constant or file-based targets."""
    if count < 2:
        raise ValueError("count must be at least 2")
    if family.startswith("file:"):
        pair = read_sequence_file(family[5:])
        if len(pair) < count:
            raise ValueError(f"sequence file has {len(pair)} terms, need {count}")
        q, r = list(pair.q[:count]), list(pair.r[:count])
        fam = pair.family
        if isinstance(target, str) and target.startswith("file:"):
            r = [reduce_target(t) for t in _read_column(target[5:])][:count]
    else:
        q, fam = _family_terms(family, count)
        if isinstance(target, str) and target.startswith("file:"):
            r = [reduce_target(t) for t in _read_column(target[5:])][:count]
            if len(r) < count:
                raise ValueError("target file shorter than requested count")
        else:
            r = _target_terms(target, count)
    check_gap_growth(q, strict, what=f"family {fam}")
    return SequencePair(q=tuple(q), r=tuple(r), family=fam)


# ---------------------------------------------------------------- densify


def _fill_value(fill, next_r: mpq) -> mpq:
    if fill == "zero":
        return mpq(0)
    if fill == "copy-next":
        return next_r
    if isinstance(fill, tuple) and len(fill) == 2 and fill[0] == "const":
        return reduce_target(fill[1])
    if isinstance(fill, str) and fill.startswith("const:"):
        return reduce_target(parse_decimal(fill[6:]))
    raise ValueError(f"unknown fill policy {fill!r}")


def densify(sp: SequencePair | DensifiedPair, eps, fill="zero") -> DensifiedPair:
    """Insert terms until consecutive exponents satisfy q_{n+1} <= (1+eps) q_n.

    One left-to-right pass: inserted runs between q_N and q_{N+1} step by
    eps*q_N/2, ending at the smallest multiple that lands in
    [q_{N+1} - eps*q_N, q_{N+1}].  Inserted targets come from ``fill``.
    Pairs already satisfying the bound are untouched, so the pass is
    idempotent.  All arithmetic is exact.
    """
    eps = _as_mpq(eps)
    if eps <= 0:
        raise ValueError("densification slack must be positive")
    base_q, base_r, family = sp.q, sp.r, sp.family
    if isinstance(sp, DensifiedPair):
        origin_positions = sp.origin_map
    else:
        origin_positions = tuple(range(len(sp.q)))

    one_plus = 1 + eps
    out_q: list[mpq] = [base_q[0]]
    out_r: list[mpq] = [base_r[0]]
    new_pos = {0: 0}
    for i in range(len(base_q) - 1):
        q1, q2 = base_q[i], base_q[i + 1]
        if q2 > one_plus * q1:
            step = eps * q1 / 2
            window_lo = q2 - eps * q1
            m = exact_ceil((window_lo - q1) / step)
            if m < 1:
                m = mpz(1)
            landing = q1 + m * step
            if not (window_lo <= landing <= q2):
                raise InsertionInfeasible(
                    f"no insertion count lands in [{window_lo}, {q2}] from {q1} "
                    f"stepping {step}")
            if landing >= q2:
                # cannot happen for a strictly increasing input: the previous
                # multiple would already sit inside the window
                raise InsertionInfeasible(
                    f"smallest landing hit the right endpoint {q2}")
            for j in range(1, int(m) + 1):
                out_q.append(q1 + j * step)
                out_r.append(_fill_value(fill, base_r[i + 1]))
        new_pos[i + 1] = len(out_q)
        out_q.append(q2)
        out_r.append(base_r[i + 1])

    dp = DensifiedPair(
        q=tuple(out_q),
        r=tuple(out_r),
        ratio_slack=eps,
        origin_map=tuple(new_pos[p] for p in origin_positions),
        family=family,
    )
    dp.check_ratio_bound()
    return dp


# ---------------------------------------------------------------- schedules


def default_schedule(dp: DensifiedPair | SequencePair) -> ToleranceSchedule:
    """Default tolerances eps_n = 1 / (2 (q_{n+1} - q_n)), exactly."""
    if len(dp.q) < 2:
        raise ValueError("need at least two terms for a schedule")
    return ToleranceSchedule(eps=tuple(1 / (2 * g) for g in dp.gaps()), kind="default")


def custom_schedule(values: Iterable) -> ToleranceSchedule:
    return ToleranceSchedule(eps=tuple(_as_mpq(v) for v in values), kind="custom")


def level_condition(gap: mpq, eps_n: mpq, lam: mpq, eta: mpq, prec: int) -> bool:
    """Certified check of 2 eps_n lam**gap >= ceil(lam**(eta*gap)) + 2.

    Raises Uncertain when the inequality cannot be decided at ``prec``.
    """
    lam_iv = RInterval.enclose(lam, prec)
    lhs = iv_mul(2 * eps_n, iv_pow(lam_iv, RInterval.enclose(gap, prec), prec), prec)
    ceil_term = iv_ceil(iv_pow(lam_iv, RInterval.enclose(eta * gap, prec), prec))
    rhs = mpq(ceil_term.expect()) + 2
    return decide(certainly_less_equal(rhs, lhs))


def validate_schedule(dp: DensifiedPair | SequencePair, schedule: ToleranceSchedule,
                      lam, eta, policy: PrecisionPolicy | None = None,
                      ) -> tuple[int, list[bool]]:
    """Per-index truth of the level condition, and the first index from which
    it holds through the end of the prefix.

    Returns (start_index, flags) with 1-based start_index; raises
    NoValidIndex when even the last index fails.
    """
    lam, eta = _as_mpq(lam), _as_mpq(eta)
    if lam <= 1:
        raise ValueError("window base must exceed 1")
    if not (0 < eta < 1):
        raise ValueError("branch exponent must lie in (0, 1)")
    policy = policy or PrecisionPolicy()
    gaps = dp.gaps()
    if len(schedule) != len(gaps):
        raise ValueError("schedule length must equal gap count")
    flags = [
        escalate(policy, lambda prec, g=g, e=e: level_condition(g, e, lam, eta, prec))
        for g, e in zip(gaps, schedule.eps)
    ]
    start = None
    for i in range(len(flags) - 1, -1, -1):
        if not flags[i]:
            break
        start = i + 1
    if start is None:
        raise NoValidIndex("level condition fails at the final prefix index")
    return start, flags


# ---------------------------------------------------------------- files


def _read_column(path: str) -> list[mpq]:
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                vals.append(parse_decimal(line.split()[0]))
    return vals


def read_sequence_file(path: str) -> SequencePair:
    """Read 'q<TAB>r' decimal pairs, one per line, '#' comments allowed."""
    q, r = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'q r', got {raw!r}")
            q.append(parse_decimal(parts[0]))
            r.append(reduce_target(parts[1]))
    return SequencePair(q=tuple(q), r=tuple(r), family=f"file:{path}")


def render_rational(x: mpq) -> str:
    """Exact decimal when the denominator is 2^a 5^b, else exact 'num/den'."""
    x = mpq(x)
    if x.denominator == 1:
        return str(x.numerator)
    den = x.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{x.numerator}/{x.denominator}"
    digits = max(twos, fives)
    scaled = x.numerator * (mpz(10) ** digits) // x.denominator
    sign = "-" if scaled < 0 else ""
    s = str(abs(scaled)).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


def write_sequence_file(path: str, pair: SequencePair | DensifiedPair) -> None:
    with open(path, "w") as fh:
        fh.write(f"# powmod1 sequence, family {pair.family}\n")
        if isinstance(pair, DensifiedPair):
            fh.write(f"# densified, ratio slack {render_rational(pair.ratio_slack)}\n")
            fh.write("# origin positions: "
                     + " ".join(str(i) for i in pair.origin_map) + "\n")
        for qv, rv in zip(pair.q, pair.r):
            fh.write(f"{render_rational(qv)}\t{render_rational(rv)}\n")
