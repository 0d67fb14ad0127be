"""powmod1: certified construction of reals whose powers track targets mod 1.

Given a strictly increasing exponent sequence q_n with divergent gaps and
targets r_n, this package constructs real numbers alpha inside a requested
window [lo, lo+width] such that the distance from alpha**q_n to r_n modulo 1
is certifiably below an explicit per-level tolerance, via a nested-interval
(Cantor-type) refinement carried out in directed-rounding interval
arithmetic.  Analysis tools give Hausdorff-dimension lower bounds of the
constructed family from branch counts and measured gaps, plus box-counting
and star-discrepancy diagnostics.
"""

from .errors import (
    CertificationFailure,
    CountShortfall,
    GapConditionSuspect,
    InsertionInfeasible,
    InsufficientDepth,
    InwardCollapse,
    NonPositiveBase,
    NoValidIndex,
    NoValidStart,
    PowmodError,
    PrecisionExhausted,
    Uncertain,
    UsageError,
)
from .interval import (
    NEAREST,
    TO_NEG,
    TO_POS,
    WRAPPED,
    BigReal,
    IntCount,
    PrecisionPolicy,
    RInterval,
    certainly_less,
    certainly_less_equal,
    decimal_enclosure,
    default_precision,
    dist_nearest_int,
    escalate,
    frac_part,
    iv_add,
    iv_div,
    iv_exp,
    iv_floor,
    iv_ceil,
    iv_log,
    iv_mul,
    iv_pow,
    iv_sqrt,
    iv_sub,
    nearest_int,
    parse_decimal,
    to_big,
)
from .sequences import (
    DensifiedPair,
    SequencePair,
    ToleranceSchedule,
    default_schedule,
    densify,
    gen_exponents,
    read_sequence_file,
    validate_schedule,
    write_sequence_file,
)
from .construct import (
    CantorInterval,
    CantorLevel,
    CantorTree,
    Certificate,
    ConstructionConfig,
    certificate_from_text,
    certificate_to_text,
    descend,
    enumerate_tree,
    find_start_level,
    initial_level,
    refine_level,
    read_tree_file,
    write_tree_file,
)
from .analysis import (
    DimensionReport,
    LevelStat,
    VerificationReport,
    box_count,
    closed_form_bound,
    falconer_bound,
    limit_bound,
    middle_third_stats,
    star_discrepancy,
    verify,
)

__version__ = "0.1.0"
