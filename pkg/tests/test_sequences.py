"""Sequence generation, densification, and tolerance schedule tests."""

import math
from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from powmod1.errors import GapConditionSuspect, NoValidIndex
from powmod1.interval import PrecisionPolicy
from powmod1.sequences import (
    DensifiedPair,
    SequencePair,
    custom_schedule,
    default_schedule,
    densify,
    gen_exponents,
    read_sequence_file,
    reduce_target,
    render_rational,
    validate_schedule,
    write_sequence_file,
)


def densify_oracle(q, eps):
    """Independent reimplementation: exhaustive search for the smallest
    insertion count whose landing falls in [q2 - eps*q1, q2]."""
    q = [Fraction(x.numerator, x.denominator) if isinstance(x, mpq) else Fraction(x)
         for x in map(mpq, q)]
    eps = Fraction(mpq(eps).numerator, mpq(eps).denominator)
    out = [q[0]]
    for q1, q2 in zip(q, q[1:]):
        if q2 > (1 + eps) * q1:
            step = eps * q1 / 2
            m = 1
            while not (q2 - eps * q1 <= q1 + m * step <= q2):
                m += 1
            out.extend(q1 + j * step for j in range(1, m + 1))
        out.append(q2)
    return [mpq(f.numerator, f.denominator) for f in out]


# ---------------------------------------------------------------- families


def test_nsq_family():
    sp = gen_exponents("nsq", 5)
    assert list(sp.q) == [1, 4, 9, 16, 25]
    assert all(r == 0 for r in sp.r)


def test_constant_target_and_reduction():
    sp = gen_exponents("nsq", 3, target="const:0.3")
    assert list(sp.r) == [mpq(3, 10)] * 3
    assert reduce_target("0.75") == mpq(-1, 4)
    assert reduce_target("0.5") == mpq(-1, 2)
    assert reduce_target("-0.5") == mpq(-1, 2)


def test_linear_family_flagged():
    with pytest.raises(GapConditionSuspect):
        gen_exponents("lin", 10)
    with pytest.warns(UserWarning):
        sp = gen_exponents("lin", 10, strict=False)
    assert list(sp.q) == list(range(1, 11))


def test_geo_and_npow_families():
    assert list(gen_exponents("geo:2", 5).q) == [2, 4, 8, 16, 32]
    assert list(gen_exponents("npow:3", 4).q) == [1, 8, 27, 64]
    assert list(gen_exponents("quad:1,1,0", 4).q) == [2, 6, 12, 20]


def test_pair_validation():
    with pytest.raises(ValueError):
        SequencePair(q=(mpq(2), mpq(2)), r=(mpq(0), mpq(0)))
    with pytest.raises(ValueError):
        SequencePair(q=(mpq(1), mpq(2)), r=(mpq(0), mpq(1, 2)))  # 1/2 not allowed


# ---------------------------------------------------------------- densify


def test_densify_against_oracle():
    sp = SequencePair(q=(mpq(2), mpq(4), mpq(8)), r=(mpq(0), mpq(0), mpq(0)))
    dp = densify(sp, "0.5")
    assert list(dp.q) == densify_oracle([2, 4, 8], mpq(1, 2))
    # paper rule: step eps*q/2, smallest landing inside [q2 - eps*q1, q2]
    assert [float(x) for x in dp.q] == [2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0]


def test_densify_identity_when_ratio_holds():
    sp = SequencePair(q=(mpq(1), mpq("1.05"), mpq("1.1")),
                      r=(mpq(0), mpq(0), mpq(0)))
    dp = densify(sp, "0.1")
    assert dp.q == sp.q and dp.r == sp.r
    assert dp.origin_map == (0, 1, 2)


def test_origin_map_carries_targets():
    sp = SequencePair(q=(mpq(2), mpq(4), mpq(8)),
                      r=(mpq(1, 10), mpq(2, 10), mpq(3, 10)))
    dp = densify(sp, mpq(1, 2), fill="zero")
    assert dp.originals().q == sp.q
    assert dp.originals().r == sp.r
    assert dp.q[dp.origin_map[1]] == 4 and dp.r[dp.origin_map[1]] == mpq(2, 10)
    inserted = set(range(len(dp.q))) - set(dp.origin_map)
    assert all(dp.r[i] == 0 for i in inserted)


def test_fill_policies():
    sp = SequencePair(q=(mpq(2), mpq(4)), r=(mpq(0), mpq(1, 5)))
    dp_c = densify(sp, mpq(1, 2), fill="const:0.25")
    inserted = set(range(len(dp_c.q))) - set(dp_c.origin_map)
    assert all(dp_c.r[i] == mpq(1, 4) for i in inserted)
    dp_n = densify(sp, mpq(1, 2), fill="copy-next")
    assert all(dp_n.r[i] == mpq(1, 5) for i in inserted)


def test_densify_idempotent():
    sp = gen_exponents("geo:2", 10)
    dp = densify(sp, mpq(1, 2))
    again = densify(dp, mpq(1, 2))
    assert again.q == dp.q and again.r == dp.r
    assert again.origin_map == dp.origin_map


def test_densified_invariants_exact():
    sp = gen_exponents("geo:2", 12)
    eps = mpq(1, 2)
    dp = densify(sp, eps)
    one_plus = 1 + eps
    for a, b in zip(dp.q, dp.q[1:]):
        assert b <= one_plus * a
    # inserted runs step exactly eps*q_N/2
    originals = set(dp.origin_map)
    for i in range(len(dp.q) - 1):
        if i + 1 not in originals:
            q_n = dp.q[max(j for j in dp.origin_map if j <= i)]
            assert dp.q[i + 1] - dp.q[i] == eps * q_n / 2


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 400), min_size=2, max_size=12, unique=True),
       st.sampled_from([Fraction(1, 2), Fraction(1, 4), Fraction(3, 10), Fraction(1)]))
def test_densify_matches_oracle_random(qs, eps):
    qs = sorted(qs)
    sp = SequencePair(q=tuple(mpq(x) for x in qs), r=(mpq(0),) * len(qs))
    e = mpq(eps.numerator, eps.denominator)
    dp = densify(sp, e)
    assert list(dp.q) == densify_oracle(qs, e)
    assert [dp.q[i] for i in dp.origin_map] == [mpq(x) for x in qs]
    one_plus = 1 + e
    assert all(b <= one_plus * a for a, b in zip(dp.q, dp.q[1:]))


# ---------------------------------------------------------------- schedules


def test_default_schedule_exact():
    dp = DensifiedPair(q=(mpq(0), mpq(3), mpq(8), mpq(15)),
                       r=(mpq(0),) * 4, ratio_slack=mpq(1),
                       origin_map=(0, 1, 2, 3))
    # gaps 3, 5, 7 -> eps 1/6, 1/10, 1/14
    sched = default_schedule(dp)
    assert list(sched.eps) == [mpq(1, 6), mpq(1, 10), mpq(1, 14)]


def test_default_schedule_nsq_gap_formula():
    sp = gen_exponents("nsq", 12)
    sched = default_schedule(sp)
    assert sched.at(10) == mpq(1, 42)  # gap at n=10 is 21
    # divergent gaps force eps downward on the prefix
    assert sched.eps[-1] < sched.eps[0]


def test_validate_schedule_direct_eval_oracle():
    # direct evaluation: 2 eps lam**g vs ceil(lam**(eta g)) + 2
    sp = gen_exponents("nsq", 8)
    sched = default_schedule(sp)
    start, flags = validate_schedule(sp, sched, 3, "0.5")
    oracle = []
    for g, e in zip([b - a for a, b in zip(sp.q, sp.q[1:])], sched.eps):
        lhs = 2 * float(e) * 3.0 ** float(g)
        rhs = math.ceil(3.0 ** (0.5 * float(g))) + 2
        oracle.append(lhs >= rhs)
    assert flags == oracle
    assert flags[2] is True   # n=3, gap 7: 3^7/7 = 312.4 >= 49
    assert start == min(i + 1 for i in range(len(flags))
                        if all(flags[i:]))


def test_validate_schedule_eta_09_false_at_small_gap():
    sp = gen_exponents("nsq", 20)
    sched = default_schedule(sp)
    start, flags = validate_schedule(sp, sched, 3, "0.9")
    # n=2 (gap 5): 3^5/5 = 48.6 < ceil(3^4.5)+2 = 143
    assert flags[1] is False
    # oracle: direct evaluation per gap
    gaps = [b - a for a, b in zip(sp.q, sp.q[1:])]
    oracle = [2 * float(e) * 3.0 ** float(g) >= math.ceil(3.0 ** (0.9 * float(g))) + 2
              for g, e in zip(gaps, sched.eps)]
    assert flags == oracle
    assert start == 16  # first suffix start: gap 33 is the first that holds through


def test_validate_constant_half_schedule():
    # eps_n = 1/2, lam = 2: condition is 2**g >= ceil(2**(eta g)) + 2
    sp = SequencePair(q=tuple(mpq(v) for v in (1, 3, 6, 10, 15, 21, 28)),
                      r=(mpq(0),) * 7)
    sched = custom_schedule([mpq(1, 2)] * 6)
    _, flags = validate_schedule(sp, sched, 2, "0.5")
    gaps = [2, 3, 4, 5, 6, 7]
    oracle = [2.0 ** g >= math.ceil(2.0 ** (0.5 * g)) + 2 for g in gaps]
    assert flags == oracle
    assert all(flags)  # at eta = 1/2 the condition holds from gap 2 on
    _, flags09 = validate_schedule(sp, sched, 2, "0.9")
    oracle09 = [2.0 ** g >= math.ceil(2.0 ** (0.9 * g)) + 2 for g in gaps]
    assert flags09 == oracle09
    assert flags09[0] is False and flags09[2] is True  # g=2 fails, g=4 holds


def test_validate_no_valid_index():
    sp = SequencePair(q=(mpq(1), mpq(2), mpq(3)), r=(mpq(0),) * 3)
    sched = custom_schedule([mpq(1, 1000), mpq(1, 1000)])
    with pytest.raises(NoValidIndex):
        validate_schedule(sp, sched, mpq(101, 100), "0.5",
                          PrecisionPolicy(initial=64, max_doublings=2))


def test_schedule_positive_required():
    with pytest.raises(ValueError):
        custom_schedule([mpq(0)])


# ---------------------------------------------------------------- files


def test_sequence_file_roundtrip(tmp_path):
    sp = gen_exponents("nsq", 6, target="const:0.3")
    path = tmp_path / "seq.tsv"
    write_sequence_file(str(path), sp)
    back = read_sequence_file(str(path))
    assert back.q == sp.q and back.r == sp.r


def test_densified_file_roundtrip(tmp_path):
    dp = densify(gen_exponents("geo:2", 8), mpq(1, 2))
    path = tmp_path / "dense.tsv"
    write_sequence_file(str(path), dp)
    back = read_sequence_file(str(path))
    assert back.q == dp.q and back.r == dp.r


def test_render_rational():
    assert render_rational(mpq(5, 2)) == "2.5"
    assert render_rational(mpq(-5, 4)) == "-1.25"
    assert render_rational(mpq(7)) == "7"
    assert render_rational(mpq(1, 6)) == "1/6"
    assert render_rational(mpq(3, 10)) == "0.3"


def test_file_comments_and_errors(tmp_path):
    p = tmp_path / "seq.txt"
    p.write_text("# comment\n1\t0.1\n4\t0.2\n\n9\t0.3\n")
    sp = read_sequence_file(str(p))
    assert list(sp.q) == [1, 4, 9]
    p.write_text("1\n")
    with pytest.raises(ValueError):
        read_sequence_file(str(p))
