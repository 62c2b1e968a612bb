import random
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sidedbets import (
    ONE,
    ZERO,
    InvalidCheckpoint,
    MartingaleTable,
    NotFSided,
    PreconditionViolated,
    QOutOfRange,
    StageSequence,
    TestExhausted,
    EnumerationTooLarge,
    evaluate,
    is_f_sided,
    is_one_sided,
    is_zero_sided,
    running_max,
    strings,
    strings_upto,
    validate_martingale,
)
from sidedbets.constructions import (
    STest,
    dim_certificate,
    dim_strategy,
    frequency_mixture,
    frequency_mixture_rule,
    frequency_mixture_sides,
    frequency_mixture_tail_bound,
    hoeffding,
    hoeffding_rule,
    hoeffding_tail_count,
    k_epsilon,
    lce_to_mixture,
    mixture_is_valid,
    n_sigma,
    product_decompose,
    r_of_q,
    r_power_at_most,
    savings_states,
    savings_transform,
    strictify,
    unpair,
    ville_mixture,
    ville_strategy,
)
from sidedbets.generators import random_prediction, random_sided_table, random_table

from conftest import table_strategy


def table(mapping):
    return MartingaleTable.from_mapping(mapping)


# product decomposition

def test_decompose_constant():
    n, t = product_decompose(MartingaleTable.constant(3, F(2, 5)))
    assert n == MartingaleTable.constant(3, F(2, 5)) and t == MartingaleTable.constant(3, 1)


def test_decompose_single_bet_on_one():
    n, t = product_decompose(table({"": 1, "1": F(3, 2), "0": F(1, 2)}))
    assert n == MartingaleTable.constant(1, 1)
    assert t == table({"": 1, "1": F(3, 2), "0": F(1, 2)})


def test_decompose_two_levels():
    m = table({"": 1, "0": F(3, 2), "1": F(1, 2), "00": 1, "01": 2, "10": F(1, 2), "11": F(1, 2)})
    n, t = product_decompose(m)
    assert (n["0"], n["00"], n["01"]) == (F(3, 2), F(3, 2), F(3, 2))
    assert (t["0"], t["01"], t["00"]) == (1, F(4, 3), F(2, 3))
    assert n["01"] * t["01"] == 2 and n["00"] * t["00"] == 1


def test_decompose_bankrupt_branch():
    m = table({"": 1, "0": 2, "1": 0, "00": 4, "01": 0, "10": 0, "11": 0})
    n, t = product_decompose(m)
    assert all(n[s] * t[s] == m[s] for s in strings_upto(2))


@settings(max_examples=80)
@given(table_strategy(max_depth=7))
def test_decompose_properties(m):
    n, t = product_decompose(m)
    assert all(n[s] * t[s] == m[s] for s in strings_upto(m.depth))
    assert is_zero_sided(n) and is_one_sided(t)
    assert validate_martingale(n).ok and validate_martingale(t).ok


# strictification

def test_strictify_examples():
    r = strictify(MartingaleTable.constant(1, 1), ZERO)
    assert r == table({"": 2, "0": F(5, 2), "1": F(3, 2)})
    assert strictify(MartingaleTable.constant(2, 1), ZERO)["00"] == 1 + F(9, 4)
    half = strictify(MartingaleTable.constant(2, 0), ONE)
    assert half == table({"": 1, "0": F(1, 2), "1": F(3, 2), "00": F(1, 4), "01": F(3, 4),
                          "10": F(3, 4), "11": F(9, 4)})


def test_strictify_rejects_unsided():
    with pytest.raises(NotFSided):
        strictify(table({"": 1, "0": F(1, 2), "1": F(3, 2)}), ZERO)


@settings(max_examples=40)
@given(st.integers(1, 6), st.integers(0, 2**32))
def test_strictify_is_strict_and_dominates(depth, seed):
    rng = random.Random(seed)
    f = random_prediction(depth, rng)
    m = random_sided_table(depth, f, rng)
    r = strictify(m, f)
    assert is_f_sided(r, f, strict=True) and validate_martingale(r).ok
    assert all(r[s] >= m[s] for s in strings_upto(depth))


# savings

def test_savings_constant():
    m = MartingaleTable.constant(4, 1)
    assert savings_transform(m, 2) == m


def test_savings_reserve_after_first_doubling():
    m = MartingaleTable.from_function(4, lambda s: 2 ** len(s) if "1" not in s else 0)
    active, bank = savings_states(m, 2)
    assert bank[""] == 0 and bank["0"] > 0
    assert [bank["0" * n] for n in range(5)] == [0, 1, 2, 3, 4]


def test_savings_checkpoint_must_exceed_root():
    with pytest.raises(InvalidCheckpoint):
        savings_transform(MartingaleTable.constant(2, 3), 3)


@settings(max_examples=60)
@given(table_strategy(max_depth=7), st.integers(1, 4))
def test_savings_valid_and_banks(m, mult):
    c = m[""] * (mult + 1) if m[""] else F(1)
    result = savings_transform(m, c)
    bank = savings_states(m, c)[1]
    assert validate_martingale(result).ok
    for x in strings(m.depth):
        top = running_max(m, x)
        if top < c:
            continue
        k = 0
        while top >= c * 2 ** (k + 1):
            k += 1
        # checkpoints c, 2c, ..., 2^k c crossed: one deposit of c/2 each
        assert bank[x] >= (k + 1) * c / 2
        assert result[x] >= k * c / 2


# Hoeffding strategies

def test_hoeffding_examples():
    t = hoeffding(F(3, 4), ZERO, 3)
    assert t["000"] == F(27, 8) and t["111"] == F(1, 8) and t[""] == 1


def test_hoeffding_bad_q():
    for q in (0, 1, F(3, 2)):
        with pytest.raises(QOutOfRange):
            hoeffding(q, ZERO, 2)


@settings(max_examples=40)
@given(st.fractions(min_value=F(1, 50), max_value=F(49, 50), max_denominator=50),
       st.integers(1, 8), st.integers(0, 2**32))
def test_hoeffding_valid_and_sided(q, depth, seed):
    f = random_prediction(depth, random.Random(seed))
    t = hoeffding(q, f, depth)
    assert validate_martingale(t).ok
    for s in strings(depth):
        z = sum(1 for i in range(depth) if f(s[:i]) == int(s[i]))
        assert t[s] == F(2) ** depth * q**z * (1 - q) ** (depth - z)
    if q > F(1, 2):
        assert is_f_sided(t, f, strict=True)
    elif q < F(1, 2):
        assert is_f_sided(t, f.complement(), strict=True)


def test_r_of_q_enclosure():
    enc = r_of_q(F(3, 4), 4)
    assert enc.power == F(27, 16)
    assert enc.width <= F(1, 2**40) and enc.lower > 1
    with mpmath.workdps(60):
        q = mpmath.mpf(3) / 4
        oracle = 2 * q**q * (1 - q) ** (1 - q)
        assert enc.lower <= F(str(oracle)) + F(1, 10**55) and F(str(oracle)) - F(1, 10**55) <= enc.upper
    assert abs(float(enc.lower) - 1.1398) < 1e-4


def test_r_of_q_near_half():
    enc = r_of_q(F(1, 2) + F(1, 10**6))
    assert 1 < enc.lower and enc.upper < 1 + F(1, 10**10)
    with pytest.raises(QOutOfRange):
        r_of_q(F(1, 2))


def test_tail_count_examples():
    tc = hoeffding_tail_count(4, F(3, 4), ZERO)
    assert tc.count == 1 and tc.bound_ok and tc.exact_power == F(27, 16)
    tc1 = hoeffding_tail_count(1, F(3, 4), ZERO)
    assert tc1.count == 1 and tc1.bound_ok


def test_tail_count_guard():
    with pytest.raises(EnumerationTooLarge):
        hoeffding_tail_count(25, F(3, 4), ZERO)


@pytest.mark.parametrize("n", [3, 6, 9])
def test_tail_count_invariant_under_f(n):
    f = random_prediction(n, random.Random(n))
    assert hoeffding_tail_count(n, F(2, 3), f).count == hoeffding_tail_count(n, F(2, 3), ZERO).count


def test_r_power_at_most_matches_high_precision():
    for count, q, n in [(1, F(3, 4), 4), (37, F(5, 8), 11), (3, F(7, 8), 7)]:
        with mpmath.workdps(80):
            qq = mpmath.mpf(q.numerator) / q.denominator
            lhs = count * (2 * qq**qq * (1 - qq) ** (1 - qq)) ** n
        for bound in (F(2) ** n, F(int(lhs)), F(int(lhs) + 1)):
            assert r_power_at_most(count, q, n, bound) == (lhs <= bound.numerator)


# frequency mixture

def test_frequency_mixture_root():
    assert frequency_mixture(3, 1)[""] == 1
    assert frequency_mixture(2, 4)[""] == 2 - F(2, 2**4)


def test_frequency_mixture_growth_factor():
    for i, q in ((1, F(3, 4)), (2, F(5, 8))):
        assert evaluate(hoeffding_rule(q, ZERO), "0" * 6).final == (2 * q) ** 6


def test_frequency_mixture_separable():
    high, low = frequency_mixture_sides(5, 4)
    assert is_zero_sided(high) and is_one_sided(low)
    assert validate_martingale(high + low).ok


def test_frequency_mixture_rule_matches_table():
    t = frequency_mixture(6, 3)
    rule = frequency_mixture_rule(3)
    for x in ("000000", "010110", "111000"):
        assert evaluate(rule, x).capitals == evaluate(t, x).capitals


def test_frequency_tail_bound():
    assert frequency_mixture_tail_bound(10, 8) == 8


# Ville strategies

def test_ville_unbounded_gap_gain_is_gap():
    v = ville_strategy("unbounded-gap", initial=10)
    x = "0010001101000"
    for n, c in evaluate(v, x).points:
        assert c == 10 + x[:n].count("0") - x[:n].count("1")


def test_ville_bounded_gap_trace():
    v = ville_strategy("bounded-gap", 0, 0)
    state = v.start()
    assert v.bet(state, 0) == (1, 1)
    traj = evaluate(v, "10").capitals
    assert traj == [1, 2, 2]  # wins at position 0, then the gap is -1 and no bet is placed


def test_ville_unbounded_gap_bankrupt():
    caps = evaluate(ville_strategy("unbounded-gap", initial=3), "1" * 6).capitals
    assert caps[3] == 0 and caps[-1] == 0


def test_unpair_diagonal():
    seen = {unpair(s) for s in range(55)}
    assert seen == {(k, t) for k in range(10) for t in range(10) if k + t < 10}


def test_ville_mixture_weights():
    mix = ville_mixture(6)
    assert mix.value("") == F(1, 2) + sum(F(1, 2 ** (s + 2)) for s in range(6))


# N_sigma and the dimension strategy

def test_n_sigma_example():
    t = n_sigma("010", F(1, 3), 3)
    assert t[""] == F(1, 2) and t["010"] == 2
    assert t["00"] == 1  # leaves σ where σ has a 1: no bet, value frozen
    assert t["011"] == 0 and t["1"] == 0  # leaves σ at a 0 of σ: the all-in bet is lost
    assert validate_martingale(t).ok and is_zero_sided(t)


def test_n_sigma_frozen_after_sigma():
    t = n_sigma("0100", F(1, 2), 7)
    assert {t["0100" + s] for s in strings(3)} == {F(2) ** (3 - 2)}


def test_n_sigma_empty():
    assert n_sigma("", F(1, 3), 3) == MartingaleTable.constant(3, 1)


def test_k_epsilon():
    assert k_epsilon(F(1, 2)) == 3
    assert k_epsilon(1) == 2


def test_dim_strategy_arithmetic():
    test = STest(F(1, 3), ((), (), (), ("000",)))
    assert not test.is_valid()
    m = dim_strategy(test, F(1, 2), 5, check=False)
    assert m[""] == F(1, 2)
    assert all(m["000" + s] >= 4 for s in strings(2))


def test_dim_strategy_empty_test():
    test = STest(F(1, 2), ((), (), (), ()))
    assert dim_strategy(test, F(1, 2), 3) == MartingaleTable.constant(3, 0)


def test_dim_strategy_exhausted():
    with pytest.raises(TestExhausted):
        dim_strategy(STest(F(1, 2), ((),)), F(1, 2), 3)


def test_stest_validity_irrational_weights():
    # 2^(-|σ|/3) is irrational for |σ| = 4; the dyadic upper bound still certifies
    ok = STest(F(1, 3), ((), ("0000",)))
    assert ok.is_valid()
    heavy = STest(F(1, 3), ((), ("0000", "0001")))
    assert not heavy.is_valid()


def test_dim_strategy_lower_bound_property():
    test = STest(F(3, 4), ((), (), (), (), ("00000000", "11110000"), ("0000000000", "0101010101")))
    assert test.is_valid()
    m = dim_strategy(test, F(1, 4), 10)
    assert m[""] < F(1, 4)
    for k in (4, 5):
        for sigma in test.levels[k]:
            assert dim_certificate(m, sigma, test.s)


# lce_to_mixture

def test_lce_repeated_stage():
    m = hoeffding(F(3, 4), ZERO, 3)
    n0, n1 = lce_to_mixture(StageSequence([m, m]))
    assert n0 == m and n1 == MartingaleTable.constant(3, 0)


def test_lce_root_growth_without_bets():
    comps = lce_to_mixture(StageSequence([MartingaleTable.constant(2, F(1, 2)), MartingaleTable.constant(2, 1)]))
    assert comps == [MartingaleTable.constant(2, F(1, 2))] * 2


def test_lce_rejects_decreasing():
    with pytest.raises(PreconditionViolated) as err:
        lce_to_mixture(StageSequence([MartingaleTable.constant(2, 1), MartingaleTable.constant(2, F(1, 2))]))
    assert err.value.clause == "nondecreasing"


def _stack(depth, n_stages, rng, f=None):
    acc = MartingaleTable.constant(depth, 0)
    stages = []
    for _ in range(n_stages):
        inc = random_table(depth, rng) if f is None else random_sided_table(depth, f, rng)
        acc = acc + inc * F(1, rng.randint(1, 4))
        stages.append(acc)
    return stages


@settings(max_examples=30)
@given(st.integers(1, 5), st.integers(1, 4), st.integers(0, 2**32))
def test_lce_plain_round_trip(depth, n_stages, seed):
    stages = _stack(depth, n_stages, random.Random(seed))
    comps = lce_to_mixture(StageSequence(stages))
    assert mixture_is_valid(comps)
    total = comps[0]
    for c in comps[1:]:
        total = total + c
    assert total[""] == stages[-1][""]
    assert all(total[s] <= stages[-1][s] for s in strings_upto(depth))


@settings(max_examples=30)
@given(st.integers(1, 5), st.integers(1, 4), st.integers(0, 2**32))
def test_lce_zero_sided_partial_sums(depth, n_stages, seed):
    rng = random.Random(seed)
    stages = _stack(depth, n_stages, rng, ZERO)
    stages = [s + strictify(MartingaleTable.constant(depth, 0), ZERO) for s in stages]
    comps = lce_to_mixture(StageSequence(stages), "zero-sided")
    partial = MartingaleTable.constant(depth, 0)
    for c in comps:
        partial = partial + c
        assert validate_martingale(c).ok and is_zero_sided(partial)
    assert partial[""] == stages[-1][""]


@settings(max_examples=30)
@given(st.integers(1, 5), st.integers(1, 4), st.integers(0, 2**32))
def test_lce_strongly_sided_components(depth, n_stages, seed):
    rng = random.Random(seed)
    f = random_prediction(depth, rng)
    stages = _stack(depth, n_stages, rng, f)
    comps = lce_to_mixture(StageSequence(stages), "strongly-sided", f)
    assert all(validate_martingale(c).ok and is_f_sided(c, f) for c in comps)
    assert sum(c[""] for c in comps) == stages[-1][""]


def test_lce_strongly_sided_rejects_unsided_increment():
    a = MartingaleTable.constant(1, 1)
    b = table({"": 2, "0": 1, "1": 3})
    with pytest.raises(PreconditionViolated) as err:
        lce_to_mixture(StageSequence([a, b]), "strongly-sided", ZERO)
    assert err.value.clause == "nondecreasing wager gaps"
