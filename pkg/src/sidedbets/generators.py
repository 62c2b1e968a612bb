"""Seeded random inputs: tables, prediction functions, canonical stacks, biased bit strings."""
from __future__ import annotations

import math
import random
from fractions import Fraction

from .core import (
    ZERO,
    ONE,
    MartingaleTable,
    PredictionFunction,
    StageSequence,
    StrategyRule,
    as_fraction,
    strings_upto,
    sum_martingales,
)

MASK64 = (1 << 64) - 1


def _integer_tree(depth: int, root: Fraction, grain: int, split) -> MartingaleTable:
    """Heap-ordered table from integer numerators over ``root.denominator * grain^level``.

    ``split(index, v)`` returns the numerators of both children of node
    ``index`` given its numerator ``v``, already scaled by ``grain``.
    """
    nums = [root.numerator]
    for level in range(depth):
        for i in range((1 << level) - 1, (2 << level) - 1):
            nums.extend(split(i, nums[i]))
    values = []
    for level in range(depth + 1):
        scale = root.denominator * grain**level
        values.extend(Fraction(n, scale) for n in nums[(1 << level) - 1:(2 << level) - 1])
    return MartingaleTable(depth, values)


def random_table(depth: int, rng: random.Random, root=None, grain: int = 8) -> MartingaleTable:
    """Fair table whose split at every node is ``M(σ1) = 2M(σ)·k/grain``."""
    root = as_fraction(root) if root is not None else Fraction(rng.randint(1, grain), grain)

    def split(i, v):
        one = 2 * v * rng.randint(0, grain)
        return 2 * v * grain - one, one

    return _integer_tree(depth, root, grain, split)


def random_sided_table(depth: int, f: PredictionFunction, rng: random.Random, root=None,
                       grain: int = 4) -> MartingaleTable:
    """Fair table that only ever bets a fraction ``k/grain`` of its capital on ``f``."""
    root = as_fraction(root) if root is not None else Fraction(rng.randint(1, grain), grain)
    names = list(strings_upto(depth - 1))

    def split(i, v):
        b = rng.randint(0, grain)
        up, down = v * (grain + b), v * (grain - b)
        return (up, down) if f(names[i]) == 0 else (down, up)

    return _integer_tree(depth, root, grain, split)


def random_prediction(depth: int, rng: random.Random) -> PredictionFunction:
    return PredictionFunction.from_table({s: rng.randint(0, 1) for s in strings_upto(depth)}, "random")


def _unit_sided_numerators(depth: int, f: PredictionFunction, rng: random.Random, grain: int,
                           names: list[str]) -> list[int]:
    """Sided table with root 1, as numerators over ``grain**depth``."""
    nums = [grain**depth]
    for level in range(depth):
        for i in range((1 << level) - 1, (2 << level) - 1):
            b = rng.randint(0, grain)
            v = nums[i] // grain
            up, down = v * (grain + b), v * (grain - b)
            nums.extend((up, down) if f(names[i]) == 0 else (down, up))
    return nums


def random_canonical_stack(depth: int, n_stages: int, rng: random.Random,
                           scale=Fraction(1, 4), grain: int = 4) -> StageSequence:
    """Separable stack whose per-stage increments are random 0- and 1-sided tables.

    Built on integer numerators over one common denominator; each distinct
    stage table is converted to fractions once.
    """
    scale = as_fraction(scale)
    names = list(strings_upto(depth - 1))
    plans = []
    for f in (ZERO, ONE):
        plan = []
        for s in range(n_stages):
            if s == 0 or rng.random() < 0.7:
                root = Fraction(rng.randint(1, 4), 4) * scale / 2 ** rng.randint(0, 3)
                plan.append((root, _unit_sided_numerators(depth, f, rng, grain, names)))
            else:
                plan.append(None)
        plans.append(plan)
    den = math.lcm(*(inc[0].denominator for plan in plans for inc in plan if inc))
    size = (2 << depth) - 1

    def table(nums):
        return MartingaleTable(depth, [Fraction(n, den * grain**depth) for n in nums])

    sides, side_ints = [], []
    for plan in plans:
        acc, ints, seq = [0] * size, [], []
        for inc in plan:
            if inc is not None:
                root, nums = inc
                c = root.numerator * (den // root.denominator)
                acc = [a + c * n for a, n in zip(acc, nums)]
                seq.append(table(acc))
            else:
                seq.append(seq[-1])
            ints.append(acc)
        sides.append(seq)
        side_ints.append(ints)
    stages = [table([a + b for a, b in zip(x, y)]) for x, y in zip(*side_ints)]
    return StageSequence(tuple(stages), (ZERO, ONE), tuple(sides))


def splitmix64(seed: int):
    """Infinite stream of 64-bit outputs of the splitmix64 generator."""
    state = seed & MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        yield z ^ (z >> 31)


def biased_bits(p, seed: int, length: int) -> str:
    """Bit string whose symbols are ``'0'`` with probability ``p``.

    Output ``u`` becomes ``'0'`` iff ``u / 2^64 < p``, decided exactly.
    """
    p = as_fraction(p)
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    gen = splitmix64(seed)
    num, den = p.numerator, p.denominator
    return "".join("0" if next(gen) * den < num << 64 else "1" for _ in range(length))


# ---------------------------------------------------------------------------
# scripted opponents


class PumpRule(StrategyRule):
    """Bets everything on ``bit`` at each position where ``target`` has ``bit``.

    One-sided by construction; worth ``root * 2^hits`` along ``target`` and
    nothing once a path leaves it at a betting position.
    """

    def __init__(self, target: str, bit: str, root):
        self.target, self.bit, self.root = target, bit, as_fraction(root)

    def start(self):
        return self.root

    def advance(self, state, prefix, bit):
        i = len(prefix)
        if i < len(self.target) and self.target[i] == self.bit:
            return 2 * state if bit == self.bit else Fraction(0)
        return state

    def capital(self, state):
        return state


def _pow2_above(x: Fraction) -> Fraction:
    """Least power of two strictly above ``x > 0``."""
    k = x.numerator.bit_length() - x.denominator.bit_length() - 1
    while Fraction(2) ** k <= x:
        k += 1
    return Fraction(2) ** k


def _cumulative(incs):
    out, live = [], []
    for inc in incs:
        if inc.root or not out:
            live.append(inc)
            out.append(sum_martingales(live))
        else:
            out.append(out[-1])
    return out


def _stack(zero_incs, one_incs) -> StageSequence:
    return StageSequence.separable(_cumulative(zero_incs), _cumulative(one_incs))


def pumping_opponent(sched, rounds: int, base=Fraction(1, 8), settle: int | None = None,
                     **run_kw) -> StageSequence:
    """Canonical separable stack that repeatedly inflates the deepest current prefix.

    Between pumps the stack repeats its last stage for ``settle`` stages so
    the construction can react.  Pumping stops once the root would reach 1/2.
    """
    from .adversary import capital_bound, run_construction

    settle = settle or sched.n_max + 2
    idle = PumpRule("", "0", 0)
    zero_incs = [PumpRule("", "0", base)] + [idle] * settle
    one_incs = [idle] * (settle + 1)
    root = as_fraction(base)
    for _ in range(rounds):
        opp = _stack(zero_incs, one_incs)
        trace = run_construction(opp, sched, len(zero_incs) - 1, check_canonical=False, **run_kw)
        if len(trace.final_prefixes) < 2:
            break
        n = len(trace.final_prefixes) - 1
        target = trace.final_prefixes[-1]
        bit = "0" if target.count("0") >= target.count("1") else "1"
        hits = target.count(bit)
        excess = capital_bound(n) - opp.final[target]
        c = _pow2_above(excess) / 2 ** hits
        if root + c >= Fraction(1, 2):
            break
        root += c
        pump = PumpRule(target, bit, c)
        zero_incs.append(pump if bit == "0" else idle)
        one_incs.append(pump if bit == "1" else idle)
        zero_incs += [idle] * settle
        one_incs += [idle] * settle
    return _stack(zero_incs, one_incs)
