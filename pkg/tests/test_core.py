from decimal import Decimal
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sidedbets import (
    ONE,
    ZERO,
    CapitalTrajectory,
    DepthExceeded,
    DepthMismatch,
    MartingaleTable,
    MissingEntry,
    NotPrefixFree,
    PredictionFunction,
    StageSequence,
    ZeroInitialCapital,
    ceil_pow2,
    compare_pow2,
    evaluate,
    format_rational,
    growth_exponent,
    guess_counts,
    is_f_sided,
    is_separable_witness,
    is_zero_sided,
    mix,
    parse_rational,
    running_max,
    strings,
    strings_upto,
    validate_martingale,
    ville_sum,
    wager,
)
from sidedbets.constructions import hoeffding, hoeffding_rule
from sidedbets.core import FunctionRule

from conftest import sided_pair_strategy, table_strategy

SMALL = {"": 1, "0": F(3, 2), "1": F(1, 2)}


def table(mapping):
    return MartingaleTable.from_mapping(mapping)


# validate_martingale

def test_fair_table_is_ok():
    assert validate_martingale(SMALL).ok


def test_unfair_root_reported():
    report = validate_martingale({"": 1, "0": F(3, 2), "1": F(3, 4)})
    assert not report.ok
    (v,) = report.violations
    assert (v.sigma, v.lhs, v.rhs) == ("", 2, F(9, 4))


def test_constant_table_ok():
    assert validate_martingale(MartingaleTable.constant(4, F(5, 7))).ok


def test_negative_value_rejected():
    report = validate_martingale({"": 0, "0": 1, "1": -1})
    assert not report.ok and report.negatives == ("1",)


def test_missing_entry():
    with pytest.raises(MissingEntry):
        MartingaleTable.from_mapping({"": 1, "0": 1})


def test_depth_zero_table():
    t = MartingaleTable.constant(0, 3)
    assert validate_martingale(t).ok and t[""] == 3


# wager and running max

def test_wager_examples():
    assert wager(table(SMALL), "") == F(-1, 2)
    assert wager(MartingaleTable.constant(3, 2), "01") == 0
    assert wager(table({"": 2, "0": 1, "1": 3}), "") == 1


def test_wager_too_deep():
    with pytest.raises(DepthExceeded):
        wager(table(SMALL), "0")


def test_running_max_examples():
    t = table(SMALL)
    assert running_max(t, "1") == 1
    assert running_max(t, "0") == F(3, 2)
    assert running_max(MartingaleTable.constant(3, F(2, 3)), "010") == F(2, 3)
    with pytest.raises(DepthExceeded):
        running_max(t, "00")


# sidedness

def test_sided_examples():
    t = table(SMALL)
    assert is_zero_sided(t) and is_zero_sided(t, strict=True)
    c = MartingaleTable.constant(3, 1)
    assert is_f_sided(c, ONE) and not is_f_sided(c, ONE, strict=True)
    assert not is_zero_sided(table({"": 1, "0": F(1, 2), "1": F(3, 2)}))


def test_table_prediction_function():
    f = PredictionFunction.from_table({"": 1, "0": 0, "1": 0})
    t = table({"": 1, "0": F(1, 2), "1": F(3, 2), "00": 1, "01": 0, "10": 2, "11": 1})
    assert is_f_sided(t, f)
    assert not is_f_sided(t, f.complement())
    with pytest.raises(MissingEntry):
        f("000")


def test_guess_counts():
    f = PredictionFunction.from_rule(lambda s: len(s) % 2)
    # guesses 0,1,0,1 against 0,0,1,1
    assert guess_counts("0011", f) == (2, 2)
    assert guess_counts("0000", ZERO) == (4, 0)


def test_separable_witness_examples():
    n = table({"": 1, "0": F(3, 2), "1": F(1, 2)})
    t = table({"": 1, "0": F(1, 2), "1": F(3, 2)})
    assert is_separable_witness(n + t, n, t)
    c1, c2 = MartingaleTable.constant(2, 1), MartingaleTable.constant(2, 3)
    assert is_separable_witness(c1 + c2, c1, c2)
    assert not is_separable_witness(n + t, t, n)
    with pytest.raises(DepthMismatch):
        is_separable_witness(c1, c1, MartingaleTable.constant(1, 0))


# Kolmogorov-Ville sums

def test_ville_sum_full_level():
    total, ok = ville_sum(MartingaleTable.constant(2, 1), strings(2))
    assert total == 1 and ok


def test_ville_sum_single():
    assert ville_sum(table(SMALL), ["0"]) == (F(3, 4), True)


def test_ville_sum_hoeffding_level():
    t = hoeffding(F(3, 4), ZERO, 3)
    oracle = sum(F(2) ** 3 * F(3, 4) ** s.count("0") * F(1, 4) ** s.count("1") / 8 for s in strings(3))
    assert oracle == 1
    assert ville_sum(t, strings(3)) == (1, True)


def test_ville_sum_rejects_prefix_pair():
    with pytest.raises(NotPrefixFree) as err:
        ville_sum(MartingaleTable.constant(3, 1), ["0", "01", "1"])
    assert err.value.pair == ("0", "01")


# evaluate and exponents

def test_evaluate_double_on_zero():
    rule = FunctionRule(lambda s: F(2) ** len(s) if "1" not in s else 0)
    assert evaluate(rule, "0" * 10).final == 2**10


def test_evaluate_constant_flat():
    assert set(evaluate(MartingaleTable.constant(5, 3), "01101").capitals) == {3}


def test_evaluate_hoeffding_rule_closed_form():
    traj = evaluate(hoeffding_rule(F(3, 4), ZERO), "0" * 30)
    assert traj.capitals == [F(3, 2) ** n for n in range(31)]


def test_evaluate_depth_guard():
    with pytest.raises(DepthExceeded):
        evaluate(MartingaleTable.constant(2, 1), "000")


def test_growth_exponent_examples():
    doubling = CapitalTrajectory(tuple((n, F(2) ** n) for n in range(12)))
    assert growth_exponent(doubling).final == 1
    flat = CapitalTrajectory(tuple((n, F(1)) for n in range(5)))
    assert growth_exponent(flat).best == 0
    three_halves = growth_exponent(CapitalTrajectory(tuple((n, F(3, 2) ** n) for n in range(9))))
    with mpmath.workdps(50):
        oracle = Decimal(str(mpmath.log(mpmath.mpf(3) / 2, 2)))
    assert abs(three_halves.final - oracle) < Decimal("1e-25")


def test_growth_exponent_zero_start():
    with pytest.raises(ZeroInitialCapital):
        growth_exponent(CapitalTrajectory(((0, F(0)), (1, F(0)))))


# mixtures

def test_mix_examples():
    t = table(SMALL)
    assert mix([(1, t)]) == t
    a, b = MartingaleTable.constant(3, 2), MartingaleTable.constant(3, F(1, 3))
    assert mix([(1, a), (1, b)]) == MartingaleTable.constant(3, F(7, 3))
    n = table({"": 1, "0": F(3, 2), "1": F(1, 2)})
    tt = table({"": 1, "0": 0, "1": 2})
    m = mix([(F(1, 2), n), (F(1, 2), tt)])
    assert is_separable_witness(m, n * F(1, 2), tt * F(1, 2))


def test_mix_depth_mismatch():
    with pytest.raises(DepthMismatch):
        mix([(1, MartingaleTable.constant(1, 1)), (1, MartingaleTable.constant(2, 1))])


# exact powers of two

@pytest.mark.parametrize("x, e, expected", [
    (F(1, 2), -1, 0), (F(1, 3), -1, -1), (4, 2, 0), (3, F(3, 2), 1), (2, F(3, 2), -1),
    (F(27, 16), F(3, 4), 1),
])
def test_compare_pow2(x, e, expected):
    assert compare_pow2(x, e) == expected


@given(st.fractions(min_value=-20, max_value=20, max_denominator=12), st.integers(0, 30))
def test_ceil_pow2_is_tight_upper_bound(e, bits):
    u = ceil_pow2(e, bits)
    assert compare_pow2(u, e) >= 0
    assert compare_pow2(u - F(1, 2**bits), e) < 0 or u - F(1, 2**bits) <= 0


def test_rational_text_round_trip():
    for x in [F(0), F(5), F(-3, 7), F(22, 6)]:
        assert parse_rational(format_rational(x)) == x
    assert format_rational(F(4, 2)) == "2"


# properties

@settings(max_examples=60)
@given(table_strategy())
def test_generated_tables_are_valid(t):
    assert validate_martingale(t).ok


@settings(max_examples=60)
@given(table_strategy(min_depth=1))
def test_wager_antisymmetry(t):
    for sigma in strings_upto(t.depth - 1):
        assert t[sigma + "0"] - t[sigma] == -wager(t, sigma)


@settings(max_examples=40)
@given(table_strategy(max_depth=5), st.integers(0, 2**16))
def test_ville_sum_on_maximal_antichain(t, seed):
    # cut every branch at a seeded depth: a maximal prefix-free cover
    import random

    rng = random.Random(seed)
    cover, frontier = [], [""]
    while frontier:
        s = frontier.pop()
        if len(s) == t.depth or rng.random() < 0.3:
            cover.append(s)
        else:
            frontier += [s + "0", s + "1"]
    assert ville_sum(t, cover) == (t[""], True)


@settings(max_examples=40)
@given(sided_pair_strategy(), st.fractions(min_value=F(1, 9), max_value=9),
       st.fractions(min_value=F(1, 9), max_value=9))
def test_sidedness_closed_under_mixture(triple, a, b):
    f, t1, t2 = triple
    assert is_f_sided(t1, f) and is_f_sided(t2, f)
    assert is_f_sided(mix([(a, t1), (b, t2)]), f)


@settings(max_examples=40)
@given(table_strategy())
def test_running_max_monotone_along_prefixes(t):
    for sigma in strings_upto(t.depth - 1):
        assert running_max(t, sigma) <= running_max(t, sigma + "0")
        assert running_max(t, sigma) <= running_max(t, sigma + "1")


@settings(max_examples=40)
@given(table_strategy(), st.integers(0, 2**16))
def test_evaluate_agrees_with_table(t, seed):
    x = format(seed, "b").zfill(16)[: t.depth]
    assert evaluate(t, x).capitals == [t[x[:n]] for n in range(len(x) + 1)]


# stage sequences

def test_stage_sequence_canonical():
    n0 = MartingaleTable.constant(2, F(1, 4))
    n1 = n0 + table({"": F(1, 8), "0": F(1, 4), "1": 0, "00": F(1, 2), "01": 0, "10": 0, "11": 0})
    t0 = MartingaleTable.constant(2, 0)
    seq = StageSequence.separable([n0, n1], [t0, t0])
    assert seq.is_nondecreasing()
    assert seq.is_canonical()
    bad = StageSequence.separable([n0, n0], [t0, table({"": F(1, 8), "0": F(1, 4), "1": 0,
                                                          "00": F(1, 4), "01": F(1, 4), "10": 0, "11": 0})])
    assert "1-sided" in bad.canonical_violation() or "constant-1" in bad.canonical_violation()
