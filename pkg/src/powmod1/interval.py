"""Directed-rounding arbitrary-precision scalars and certified intervals.

Scalars are gmpy2 ``mpfr`` values (arbitrary-precision binary floats, exposed
here as ``BigReal``) together with exact rationals (``mpq``).  Every mpfr is
an exact dyadic rational; rounding direction is a property of an operation,
never of a value.  MPFR guarantees correctly rounded results in the requested
direction, which is stronger than the 1-ulp contract we need.

``RInterval`` is the truth carrier: a closed interval [lo, hi] of exact
dyadic endpoints.  Operations come in two modes:

* outward  -- the exact result set is contained in the returned interval;
* inward   -- the returned interval is contained in the exact result set
              (used when *constructing* intervals whose every point must
              satisfy a bound).

For ``iv_pow`` with an interval exponent the inward result is contained in
the image of the base interval for every exponent in the given enclosure,
so an outward exponent enclosure is always safe to pass.
"""

from __future__ import annotations

import decimal
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, TypeVar, Union

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from .errors import InwardCollapse, NonPositiveBase, PrecisionExhausted, Uncertain

BigReal = mpfr
Rational = mpq
Scalar = Union[int, mpz, mpq, mpfr]

#: Rounding direction tags (aliases of the gmpy2 modes).
TO_NEG = gmpy2.RoundDown
TO_POS = gmpy2.RoundUp
NEAREST = gmpy2.RoundToNearest

_T = TypeVar("_T")

ENV_PRECISION_CAP = "POWMOD1_PRECISION_CAP"
DEFAULT_GUARD_BITS = 96
_FALLBACK_CAP_BITS = 1 << 22


def _ctx(prec: int, rounding) -> gmpy2.context:
    return gmpy2.context(precision=prec, round=rounding)


def to_big(value: Scalar | str | float, prec: int, rounding=NEAREST) -> mpfr:
    """Convert to an mpfr at ``prec`` bits, rounded in ``rounding`` direction."""
    if isinstance(value, str):
        value = parse_decimal(value)
    if isinstance(value, float):
        value = mpq(Fraction(value))
    return gmpy2.mpfr(value, prec, context=_ctx(prec, rounding))


def parse_decimal(text: str) -> mpq:
    """Parse a decimal string (optionally exponent-form) to an exact rational."""
    s = text.strip()
    if "/" in s:
        return mpq(s)
    try:
        return mpq(Fraction(decimal.Decimal(s)))
    except decimal.InvalidOperation as exc:
        raise ValueError(f"not a decimal number: {text!r}") from exc


def exact_mpq(x: Scalar) -> mpq:
    """Exact rational value of a scalar (mpfr conversion is always exact)."""
    return mpq(x)


def exact_floor(x: Scalar) -> mpz:
    q = mpq(x)
    return q.numerator // q.denominator


def exact_ceil(x: Scalar) -> mpz:
    q = mpq(x)
    return -((-q.numerator) // q.denominator)


def round_half_up(x: Scalar) -> mpz:
    """Nearest integer to ``x``; halves round up.  Exact."""
    q = mpq(x)
    return exact_floor(q + mpq(1, 2))


@dataclass(frozen=True)
class IntCount:
    """A certified integer, or an AMBIGUOUS marker with the straddled candidate."""

    value: int
    certified: bool

    def expect(self) -> int:
        if not self.certified:
            raise Uncertain(f"integer straddle near {self.value}")
        return self.value

    def __repr__(self):
        return f"IntCount({self.value})" if self.certified else f"AMBIGUOUS({self.value})"


class _Wrapped:
    """Marker: a fractional part wrapped around an integer boundary."""

    __slots__ = ()

    def __repr__(self):
        return "WRAPPED"


WRAPPED = _Wrapped()


@dataclass(frozen=True)
class RInterval:
    """Closed interval with exact dyadic endpoints, lo <= hi."""

    lo: mpfr
    hi: mpfr

    def __post_init__(self):
        if not (gmpy2.is_finite(self.lo) and gmpy2.is_finite(self.hi)):
            raise ValueError("interval endpoints must be finite")
        if self.lo > self.hi:
            raise ValueError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    # -- constructors ----------------------------------------------------

    @classmethod
    def point(cls, value: Scalar, prec: int = 64) -> "RInterval":
        """Degenerate interval at an exactly representable value."""
        x = to_big(value, prec, NEAREST)
        if mpq(x) != mpq(value):
            raise ValueError(f"{value} is not exactly representable at {prec} bits")
        return cls(x, x)

    @classmethod
    def enclose(cls, value: Scalar | str, prec: int) -> "RInterval":
        """Outward enclosure of an exact scalar (point when representable)."""
        if isinstance(value, str):
            value = parse_decimal(value)
        return cls(to_big(value, prec, TO_NEG), to_big(value, prec, TO_POS))

    @classmethod
    def bounds(cls, lo: Scalar, hi: Scalar, prec: int, inward: bool = False) -> "RInterval":
        """Interval from exact rational bounds, rounded outward or inward."""
        if inward:
            a, b = to_big(lo, prec, TO_POS), to_big(hi, prec, TO_NEG)
            if a > b:
                raise InwardCollapse(f"inward endpoints crossed: [{lo}, {hi}]")
            return cls(a, b)
        return cls(to_big(lo, prec, TO_NEG), to_big(hi, prec, TO_POS))

    # -- inspection ------------------------------------------------------

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def width(self) -> mpq:
        return mpq(self.hi) - mpq(self.lo)

    def mid(self, prec: int = 64) -> mpfr:
        return to_big((mpq(self.lo) + mpq(self.hi)) / 2, prec, NEAREST)

    def contains(self, value: Scalar) -> bool:
        return bool(self.lo <= value <= self.hi)

    def contains_interval(self, other: "RInterval") -> bool:
        return bool(self.lo <= other.lo and other.hi <= self.hi)

    def intersects(self, other: "RInterval") -> bool:
        return bool(self.lo <= other.hi and other.lo <= self.hi)

    def __repr__(self):
        return f"RInterval({self.lo!r}, {self.hi!r})"


def as_interval(value: Scalar | RInterval, prec: int) -> RInterval:
    """Coerce a scalar to its outward enclosure; pass intervals through."""
    if isinstance(value, RInterval):
        return value
    return RInterval.enclose(value, prec)


# -- certified comparisons ----------------------------------------------


def _lo_of(v) -> Scalar:
    return v.lo if isinstance(v, RInterval) else v


def _hi_of(v) -> Scalar:
    return v.hi if isinstance(v, RInterval) else v


def certainly_less(a, b) -> bool | None:
    """True if every a < every b, False if every a >= every b, else None."""
    if _hi_of(a) < _lo_of(b):
        return True
    if _lo_of(a) >= _hi_of(b):
        return False
    return None


def certainly_less_equal(a, b) -> bool | None:
    if _hi_of(a) <= _lo_of(b):
        return True
    if _lo_of(a) > _hi_of(b):
        return False
    return None


def decide(maybe: bool | None) -> bool:
    """Turn a certified three-valued answer into a bool or an Uncertain raise."""
    if maybe is None:
        raise Uncertain("comparison not decidable at current precision")
    return maybe


# -- arithmetic (outward) -----------------------------------------------


def iv_add(a, b, prec: int) -> RInterval:
    a, b = as_interval(a, prec), as_interval(b, prec)
    dn, up = _ctx(prec, TO_NEG), _ctx(prec, TO_POS)
    return RInterval(dn.add(a.lo, b.lo), up.add(a.hi, b.hi))


def iv_sub(a, b, prec: int) -> RInterval:
    a, b = as_interval(a, prec), as_interval(b, prec)
    dn, up = _ctx(prec, TO_NEG), _ctx(prec, TO_POS)
    return RInterval(dn.sub(a.lo, b.hi), up.sub(a.hi, b.lo))


def iv_neg(a: RInterval) -> RInterval:
    return RInterval(-a.hi, -a.lo)


def iv_mul(a, b, prec: int) -> RInterval:
    a, b = as_interval(a, prec), as_interval(b, prec)
    dn, up = _ctx(prec, TO_NEG), _ctx(prec, TO_POS)
    pairs = [(a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi)]
    return RInterval(min(dn.mul(x, y) for x, y in pairs),
                     max(up.mul(x, y) for x, y in pairs))


def iv_div(a, b, prec: int) -> RInterval:
    a, b = as_interval(a, prec), as_interval(b, prec)
    if b.lo <= 0 <= b.hi:
        raise ZeroDivisionError("interval division by interval containing 0")
    dn, up = _ctx(prec, TO_NEG), _ctx(prec, TO_POS)
    pairs = [(a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi)]
    return RInterval(min(dn.div(x, y) for x, y in pairs),
                     max(up.div(x, y) for x, y in pairs))


def iv_log(a, prec: int) -> RInterval:
    a = as_interval(a, prec)
    if a.lo <= 0:
        raise NonPositiveBase(f"log over non-positive interval [{a.lo}, {a.hi}]")
    return RInterval(_ctx(prec, TO_NEG).log(a.lo), _ctx(prec, TO_POS).log(a.hi))


def iv_exp(a, prec: int) -> RInterval:
    a = as_interval(a, prec)
    return RInterval(_ctx(prec, TO_NEG).exp(a.lo), _ctx(prec, TO_POS).exp(a.hi))


def iv_sqrt(a, prec: int) -> RInterval:
    a = as_interval(a, prec)
    if a.lo < 0:
        raise NonPositiveBase("sqrt over negative interval")
    return RInterval(_ctx(prec, TO_NEG).sqrt(a.lo), _ctx(prec, TO_POS).sqrt(a.hi))


# -- powers ---------------------------------------------------------------


def iv_pow(base, exponent, prec: int, inward: bool = False) -> RInterval:
    """Directed enclosure of ``{x**y : x in base, y in exponent}``.

    Outward: the returned interval contains the exact image for the exact
    base and exponent sets (scalar arguments are coerced to outward
    enclosures, which only widens the result).

    Inward: the returned interval is contained in the image of
    ``[base.lo, base.hi]`` under ``x -> x**y`` for *every* y in the exponent
    enclosure.  The base endpoints are taken as exact, so callers must pass
    a base interval that is itself inside the exact one; exponent enclosures
    may be outward.  Endpoints are nudged one ulp into the interior when
    that does not cross them.

    Computed via MPFR's correctly rounded pow (internally exp(y log x));
    extrema of x**y over a box sit at its corners because the function is
    monotone along every edge.
    """
    base = as_interval(base, prec)
    exponent = as_interval(exponent, prec)
    if base.lo <= 0:
        raise NonPositiveBase(f"power base must be positive, got [{base.lo}, {base.hi}]")
    dn, up = _ctx(prec, TO_NEG), _ctx(prec, TO_POS)

    if not inward:
        corners = [(base.lo, exponent.lo), (base.lo, exponent.hi),
                   (base.hi, exponent.lo), (base.hi, exponent.hi)]
        return RInterval(min(dn.pow(x, y) for x, y in corners),
                         max(up.pow(x, y) for x, y in corners))

    # Image over the base interval at fixed y is [min_x, max_x]; intersect
    # over the exponent corners (monotone in y), rounding each bound into
    # the interior.
    def min_x(y):
        return base.lo if y >= 0 else base.hi

    def max_x(y):
        return base.hi if y >= 0 else base.lo

    ys = {exponent.lo, exponent.hi}
    lo = max(up.pow(min_x(y), y) for y in ys)
    hi = min(dn.pow(max_x(y), y) for y in ys)
    if lo > hi:
        raise InwardCollapse("inward power endpoints crossed; raise precision")
    lo2, hi2 = gmpy2.next_above(lo), gmpy2.next_below(hi)
    if lo2 <= hi2:
        return RInterval(lo2, hi2)
    return RInterval(lo, hi)


# -- integer-related operations ------------------------------------------


def iv_floor(x: RInterval) -> IntCount:
    """Certified floor if every point of ``x`` shares it, else AMBIGUOUS.

    Endpoints are exact dyadics, so this decision itself is exact; ambiguity
    means the interval genuinely straddles an integer and the caller should
    recompute ``x`` at higher precision.
    """
    flo, fhi = exact_floor(x.lo), exact_floor(x.hi)
    if flo == fhi:
        return IntCount(int(flo), True)
    return IntCount(int(flo + 1), False)


def iv_ceil(x: RInterval) -> IntCount:
    clo, chi = exact_ceil(x.lo), exact_ceil(x.hi)
    if clo == chi:
        return IntCount(int(clo), True)
    return IntCount(int(clo), False)


def nearest_int(x: RInterval) -> IntCount:
    """Certified nearest integer (halves round up) when it is unique."""
    nlo, nhi = round_half_up(x.lo), round_half_up(x.hi)
    if nlo == nhi:
        return IntCount(int(nlo), True)
    return IntCount(int(nlo), False)


def _dist_to_nearest(t: mpq) -> mpq:
    return abs(t - mpq(round_half_up(t)))


def _contains_integer(lo: mpq, hi: mpq) -> bool:
    return exact_floor(hi) >= exact_ceil(lo)


def dist_nearest_int(x: RInterval, prec: int) -> RInterval:
    """Outward enclosure of ``{dist(t, Z) : t in x}``; always within [0, 1/2].

    The range is computed exactly over the rationals (the distance function
    is piecewise linear with breakpoints at half-integers), then rounded
    outward.  0 and 1/2 are dyadic, so the [0, 1/2] bound is never violated
    by rounding.
    """
    lo, hi = mpq(x.lo), mpq(x.hi)
    if hi - lo >= 1:
        return RInterval(to_big(0, prec), to_big(mpq(1, 2), prec))
    dlo, dhi = _dist_to_nearest(lo), _dist_to_nearest(hi)
    d_min = mpq(0) if _contains_integer(lo, hi) else min(dlo, dhi)
    half = mpq(1, 2)
    d_max = half if _contains_integer(lo - half, hi - half) else max(dlo, dhi)
    return RInterval(to_big(d_min, prec, TO_NEG), to_big(min(d_max, half), prec, TO_POS))


def frac_part(x: RInterval, prec: int):
    """Outward enclosure of ``{t - floor(t) : t in x}``, or WRAPPED.

    WRAPPED is returned when the interval straddles an integer, in which
    case the fractional part is not a single interval; callers either
    report the marker or recompute ``x`` tighter.
    """
    flo, fhi = exact_floor(x.lo), exact_floor(x.hi)
    if flo != fhi:
        return WRAPPED
    return RInterval(to_big(mpq(x.lo) - flo, prec, TO_NEG),
                     to_big(mpq(x.hi) - flo, prec, TO_POS))


# -- precision policy ------------------------------------------------------


def default_precision(q_max: Scalar, base_hi: Scalar, guard: int = DEFAULT_GUARD_BITS) -> int:
    """Working precision for exponents up to ``q_max`` over bases up to ``base_hi``.

    Endpoints of constructed intervals separate integers at the scale
    base_hi**q_max, so we budget ceil(q_max * log2(base_hi)) bits plus guard.
    """
    if mpq(base_hi) <= 1 or mpq(q_max) <= 0:
        return max(guard, 128)
    lg = _ctx(64, TO_POS).log2(to_big(base_hi, 64, TO_POS))
    bits = int(exact_ceil(mpq(q_max) * mpq(lg)))
    return max(bits + guard, 128)


def _env_cap() -> int:
    raw = os.environ.get(ENV_PRECISION_CAP)
    if raw:
        try:
            return max(int(raw), 128)
        except ValueError:
            pass
    return _FALLBACK_CAP_BITS


@dataclass(frozen=True)
class PrecisionPolicy:
    """Initial precision plus an escalation ladder of doublings."""

    initial: int = 192
    max_doublings: int = 8
    cap_bits: int | None = None

    def __post_init__(self):
        if self.initial < 2:
            raise ValueError("initial precision must be at least 2 bits")

    @property
    def cap(self) -> int:
        return self.cap_bits if self.cap_bits is not None else _env_cap()

    def ladder(self) -> Iterator[int]:
        prec = min(self.initial, self.cap)
        yield prec
        for _ in range(self.max_doublings):
            if prec >= self.cap:
                return
            prec = min(prec * 2, self.cap)
            yield prec


def escalate(policy: PrecisionPolicy, attempt: Callable[[int], _T]) -> _T:
    """Run ``attempt(prec)`` up the ladder until it stops raising Uncertain."""
    last: Exception | None = None
    for prec in policy.ladder():
        try:
            return attempt(prec)
        except (Uncertain, InwardCollapse) as exc:
            last = exc
    raise PrecisionExhausted(
        f"no certified result up to {policy.cap} bits "
        f"({policy.max_doublings} doublings from {policy.initial}): {last}")


# -- decimal printing ------------------------------------------------------


def _decimal_digits(q: mpq, digits: int, round_up: bool) -> str:
    """Fixed-point decimal of a nonnegative rational, directed rounding."""
    scale = mpz(10) ** digits
    num, den = q.numerator * scale, q.denominator
    quo, rem = divmod(num, den)
    if round_up and rem != 0:
        quo += 1
    s = str(quo).rjust(digits + 1, "0")
    ip, fp = s[:-digits], s[-digits:]
    return f"{ip}.{fp}" if digits else ip


def decimal_enclosure(iv: RInterval, digits: int = 50) -> tuple[str, int]:
    """Decimal rendering of an enclosure with its guaranteed digit count.

    Every point of the interval begins with the decimal characters shared by
    the outward-rounded fixed-point expansions of the two endpoints.  Returns
    that shared prefix (truncated to ``digits`` fractional digits) and the
    number of significant digits in it.  When not even the integer part is
    pinned down, the explicit bracket ``[lo, hi]`` is returned with 0.
    """
    sign = "-" if iv.hi < 0 else ""
    lo, hi = mpq(iv.lo), mpq(iv.hi)
    if sign:
        lo, hi = -hi, -lo
    work = digits + 8
    if lo < 0 <= hi:
        s_lo = "-" + _decimal_digits(-lo, work, round_up=True)
        s_hi = _decimal_digits(hi, work, round_up=True)
        return f"[{s_lo}, {s_hi}]", 0
    s_lo = _decimal_digits(lo, work, round_up=False)
    s_hi = _decimal_digits(hi, work, round_up=True)
    bracket = f"[{sign}{s_lo}, {sign}{s_hi}]"
    if len(s_lo) != len(s_hi):
        return bracket, 0
    shared = 0
    for a, b in zip(s_lo, s_hi):
        if a != b:
            break
        shared += 1
    point = s_lo.index(".")
    if shared < point:
        return bracket, 0
    shared = min(shared, point + 1 + digits)
    text = (sign + s_lo[:shared]).rstrip(".")
    guaranteed = shared - (1 if shared > point else 0)
    return text, guaranteed


def sci_upper(x: Scalar, sig: int = 40) -> str:
    """Upper-rounded scientific decimal of a nonnegative scalar (exact input)."""
    q = mpq(x)
    if q < 0:
        raise ValueError("sci_upper takes nonnegative values")
    if q == 0:
        return "0"
    e = len(str(q.numerator)) - len(str(q.denominator))
    while mpq(10) ** e > q:
        e -= 1
    while mpq(10) ** (e + 1) <= q:
        e += 1
    mant = exact_ceil(q / mpq(10) ** (e - sig + 1))
    if len(str(mant)) > sig:
        e += 1
        mant = exact_ceil(q / mpq(10) ** (e - sig + 1))
    s = str(mant)
    return f"{s[0]}.{s[1:]}e{e}" if sig > 1 else f"{s}e{e}"


def log2_float(x: Scalar) -> float:
    """Rough float log2 of a positive scalar of any magnitude."""
    q = mpq(x)
    if q <= 0:
        raise NonPositiveBase("log2 of non-positive value")
    return float(_ctx(64, NEAREST).log2(to_big(q, 128, NEAREST)))


def log_float(x: Scalar) -> float:
    """Float natural log of a positive scalar, safe for huge/tiny magnitudes."""
    return log2_float(x) * math.log(2.0)
