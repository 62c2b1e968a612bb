"""Constructive transformations and families of betting strategies."""
from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from mpmath import iv

from .core import (
    ROOT,
    ZERO,
    MartingaleTable,
    MixtureRule,
    PredictionFunction,
    StageSequence,
    StrategyRule,
    as_fraction,
    ceil_pow2,
    compare_pow2,
    is_f_sided,
    mix,
    strings,
    strings_upto,
    validate_martingale,
)
from .errors import (
    DepthExceeded,
    EnumerationTooLarge,
    InvalidCheckpoint,
    NotFSided,
    PreconditionViolated,
    QOutOfRange,
    TestExhausted,
)


def _grow(depth: int, root: Fraction, split: Callable[[str, Fraction], tuple[Fraction, Fraction]]) -> MartingaleTable:
    """Build a table top-down; ``split(sigma, value)`` gives the two children."""
    vals = [Fraction(0)] * ((2 << depth) - 1)
    vals[0] = root
    for i, sigma in enumerate(strings_upto(depth - 1)):
        vals[2 * i + 1], vals[2 * i + 2] = split(sigma, vals[i])
    return MartingaleTable(depth, vals)


# ---------------------------------------------------------------------------
# product decomposition, strictification, savings


def product_decompose(m: MartingaleTable) -> tuple[MartingaleTable, MartingaleTable]:
    """Factor ``m`` as ``N * T`` with ``N`` 0-sided and ``T`` 1-sided.

    The root is split as ``N(λ) = M(λ)``, ``T(λ) = 1``.
    """
    size = (2 << m.depth) - 1
    mv = m.values
    n = [Fraction(0)] * size
    t = [Fraction(0)] * size
    n[0], t[0] = mv[0], Fraction(1)
    for i in range((1 << m.depth) - 1):
        w = mv[2 * i + 2] - mv[i]
        wn = wt = 0
        if w < 0 and t[i] > 0:
            wn = w / t[i]
        elif w > 0 and n[i] > 0:
            wt = w / n[i]
        n[2 * i + 1], n[2 * i + 2] = n[i] - wn, n[i] + wn
        t[2 * i + 1], t[2 * i + 2] = t[i] - wt, t[i] + wt
    return MartingaleTable(m.depth, n), MartingaleTable(m.depth, t)


def half_bettor(depth: int, f: PredictionFunction, root=1) -> MartingaleTable:
    """Starts with ``root`` and bets half its capital on ``f`` everywhere."""
    def split(sigma, v):
        win, lose = v * Fraction(3, 2), v / 2
        return (win, lose) if f(sigma) == 0 else (lose, win)
    return _grow(depth, as_fraction(root), split)


def strictify(m: MartingaleTable, f: PredictionFunction) -> MartingaleTable:
    if not is_f_sided(m, f):
        raise NotFSided(f"table is not {f.name}-sided")
    return m + half_bettor(m.depth, f)


def savings_states(m: MartingaleTable, checkpoint) -> tuple[MartingaleTable, MartingaleTable]:
    """Active and banked capital of the savings transform."""
    c = as_fraction(checkpoint)
    if c <= m[ROOT]:
        raise InvalidCheckpoint(f"checkpoint {c} must exceed the initial capital {m[ROOT]}")
    size = (2 << m.depth) - 1
    mv = m.values
    active = [Fraction(0)] * size
    bank = [Fraction(0)] * size
    active[0] = mv[0]
    for i in range((1 << m.depth) - 1):
        for j in (2 * i + 1, 2 * i + 2):
            a = active[i] * mv[j] / mv[i] if mv[i] else Fraction(0)
            r = bank[i]
            if a >= c:
                a /= 2
                r += a
            active[j], bank[j] = a, r
    return MartingaleTable(m.depth, active), MartingaleTable(m.depth, bank)


def savings_transform(m: MartingaleTable, checkpoint) -> MartingaleTable:
    """Bank half of the active capital each time it reaches ``checkpoint``.

    Active capital follows ``m`` proportionally, so it stays below the
    checkpoint after every step and ``k + 1`` deposits of at least
    ``checkpoint / 2`` happen once ``m`` has reached ``checkpoint * 2**k``.
    """
    active, bank = savings_states(m, checkpoint)
    return active + bank


# ---------------------------------------------------------------------------
# Hoeffding strategies


def _check_q(q, lo_open=Fraction(0)) -> Fraction:
    q = as_fraction(q)
    if not lo_open < q < 1:
        raise QOutOfRange(f"q = {q} outside ({lo_open}, 1)")
    return q


def hoeffding(q, f: PredictionFunction, depth: int) -> MartingaleTable:
    """``T_q(σ) = 2^|σ| q^z (1-q)^o`` with z/o the correct/false f-guesses."""
    q = _check_q(q)
    hit, miss = 2 * q, 2 * (1 - q)

    def split(sigma, v):
        return (v * hit, v * miss) if f(sigma) == 0 else (v * miss, v * hit)
    return _grow(depth, Fraction(1), split)


class HoeffdingRule(StrategyRule):
    def __init__(self, q, f: PredictionFunction):
        self.q = _check_q(q)
        self.f = f

    def start(self):
        return Fraction(1)

    def advance(self, state, prefix, bit):
        hit = self.f(prefix) == int(bit)
        return state * 2 * (self.q if hit else 1 - self.q)

    def capital(self, state):
        return state


def hoeffding_rule(q, f: PredictionFunction) -> HoeffdingRule:
    return HoeffdingRule(q, f)


@dataclass(frozen=True)
class REnclosure:
    """Rigorous rational bounds ``lower <= r_q <= upper``."""

    q: Fraction
    lower: Fraction
    upper: Fraction
    n: int | None = None
    power: Fraction | None = None  # exact r_q ** n when it is rational

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower


@contextmanager
def iv_precision(bits: int):
    """Temporarily set the working precision of mpmath's interval context."""
    saved = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = saved


def _interval_bounds(x) -> tuple[Fraction, Fraction]:
    from mpmath.libmp import to_rational
    lo, hi = x._mpi_
    return Fraction(*map(int, to_rational(lo))), Fraction(*map(int, to_rational(hi)))


def _log_r_interval(q: Fraction, prec: int = 160):
    with iv_precision(prec):
        qq = iv.mpf(q.numerator) / q.denominator
        pp = iv.mpf(q.denominator - q.numerator) / q.denominator
        return iv.log(2) + qq * iv.log(qq) + pp * iv.log(pp)


def r_power_exact(q, n: int) -> Fraction | None:
    """``r_q ** n = 2^n q^(qn) (1-q)^((1-q)n)`` when both exponents are integers."""
    q = as_fraction(q)
    zn = q * n
    if zn.denominator != 1:
        return None
    zn = int(zn)
    return Fraction(2) ** n * q ** zn * (1 - q) ** (n - zn)


def r_of_q(q, n: int | None = None, prec: int = 160) -> REnclosure:
    q = _check_q(q, Fraction(1, 2))
    with iv_precision(prec):
        r = iv.exp(_log_r_interval(q, prec))
        lo, hi = _interval_bounds(r)
    power = r_power_exact(q, n) if n is not None else None
    return REnclosure(q, lo, hi, n, power)


def r_power_at_most(count: int, q, n: int, bound: Fraction) -> bool:
    """Exact test of ``count * r_q**n <= bound`` for rational ``q``.

    With ``q = a/b`` both sides are raised to the ``b``-th power, which turns
    the fractional exponents into integers.
    """
    q = as_fraction(q)
    a, b = q.numerator, q.denominator
    if count <= 0:
        return True
    lhs = Fraction(count) ** b * Fraction(2) ** (n * b) * q ** (a * n) * (1 - q) ** ((b - a) * n)
    return lhs <= Fraction(bound) ** b


@dataclass(frozen=True)
class TailCount:
    n: int
    q: Fraction
    count: int
    bound_ok: bool
    exact_power: Fraction | None


def hoeffding_tail_count(n: int, q, f: PredictionFunction, max_n: int = 24) -> TailCount:
    """Count strings of length ``n`` with more than ``q*n`` correct f-guesses."""
    q = _check_q(q, Fraction(1, 2))
    if n > max_n:
        raise EnumerationTooLarge(f"2^{n} strings is beyond the enumeration guard 2^{max_n}")
    threshold = q * n
    level = [("", 0)]
    for _ in range(n):
        nxt = []
        for sigma, z in level:
            g = f(sigma)
            nxt.append((sigma + "0", z + (g == 0)))
            nxt.append((sigma + "1", z + (g == 1)))
        level = nxt
    count = sum(1 for _, z in level if z > threshold)
    ok = r_power_at_most(count, q, n, Fraction(2) ** n)
    return TailCount(n, q, count, ok, r_power_exact(q, n))


# ---------------------------------------------------------------------------
# frequency and Ville mixtures


def frequency_weights(truncation: int) -> list[tuple[Fraction, Fraction, Fraction]]:
    """``(2^-i, q_i, p_i)`` for ``i = 1..truncation``."""
    out = []
    for i in range(1, truncation + 1):
        h = Fraction(1, 2 ** (i + 1))
        out.append((Fraction(1, 2 ** i), Fraction(1, 2) + h, Fraction(1, 2) - h))
    return out


def frequency_mixture_sides(depth: int, truncation: int, f: PredictionFunction = ZERO):
    """The above-half and below-half partial mixtures as separate tables."""
    if truncation < 1:
        raise ValueError("truncation index must be at least 1")
    ws = frequency_weights(truncation)
    high = [(w, hoeffding(q, f, depth)) for w, q, _ in ws]
    low = [(w, hoeffding(p, f, depth)) for w, _, p in ws]
    return mix(high), mix(low)


def frequency_mixture(depth: int, truncation: int, f: PredictionFunction = ZERO) -> MartingaleTable:
    high, low = frequency_mixture_sides(depth, truncation, f)
    return high + low


def frequency_mixture_tail_bound(depth: int, truncation: int) -> Fraction:
    """Upper bound on the capital dropped by truncating the mixture at depth ``depth``."""
    return Fraction(2) ** (depth - truncation + 1)


def frequency_mixture_rule(truncation: int, f: PredictionFunction = ZERO) -> MixtureRule:
    comps = []
    for w, q, p in frequency_weights(truncation):
        comps.append((w, HoeffdingRule(q, f)))
        comps.append((w, HoeffdingRule(p, f)))
    return MixtureRule(comps)


class VilleRule(StrategyRule):
    """Strategies exploiting a sequence whose 0-count never falls behind.

    ``k is None``: bet one unit on 0 at every step.  Otherwise bet one unit
    on 1 at every position ``n >= t`` where the running gap ``z_n - o_n``
    equals ``k``.  Wagers are capped by the current capital.
    """

    def __init__(self, k: int | None = None, t: int = 0, initial=1):
        if k is not None and (k < 0 or t < 0):
            raise ValueError("bounded-gap case needs k >= 0 and t >= 0")
        self.k, self.t = k, t
        self.initial = as_fraction(initial)

    def start(self):
        return (self.initial, 0)

    def bet(self, state, n: int) -> tuple[int, Fraction]:
        """(favoured outcome, wager) at position ``n``."""
        cap, gap = state
        stake = min(Fraction(1), cap)
        if self.k is None:
            return 0, stake
        if n >= self.t and gap == self.k:
            return 1, stake
        return 1, Fraction(0)

    def advance(self, state, prefix, bit):
        cap, gap = state
        side, stake = self.bet(state, len(prefix))
        cap = cap + stake if int(bit) == side else cap - stake
        return cap, gap + (1 if bit == "0" else -1)

    def capital(self, state):
        return state[0]


def ville_strategy(case: str, k: int | None = None, t: int = 0, initial=1) -> VilleRule:
    if case == "unbounded-gap":
        return VilleRule(None, initial=initial)
    if case == "bounded-gap":
        if k is None:
            raise ValueError("bounded-gap case needs k")
        return VilleRule(k, t, initial)
    raise ValueError(f"unknown case {case!r}")


def unpair(s: int) -> tuple[int, int]:
    """Inverse of the diagonal pairing ``(k, t) -> (k+t)(k+t+1)/2 + t``."""
    w = (math.isqrt(8 * s + 1) - 1) // 2
    t = s - w * (w + 1) // 2
    return w - t, t


def ville_mixture(n_pairs: int) -> MixtureRule:
    """Half on the unbounded-gap bettor, ``2^-(s+2)`` on the s-th (k, t) bettor."""
    comps = [(Fraction(1, 2), VilleRule(None))]
    for s in range(n_pairs):
        k, t = unpair(s)
        comps.append((Fraction(1, 2 ** (s + 2)), VilleRule(k, t)))
    return MixtureRule(comps)


# ---------------------------------------------------------------------------
# s-tests and the dimension strategy


def initial_exponent(sigma: str, q) -> int:
    """``ceil(q|σ|)``; the start capital of ``N_σ`` is ``2**-initial_exponent``."""
    return math.ceil(as_fraction(q) * len(sigma))


def n_sigma(sigma: str, q, depth: int) -> MartingaleTable:
    """Bets everything on each 0 of ``sigma`` and nothing anywhere else.

    The start capital is ``2^(-q|σ|)`` when ``q|σ|`` is an integer and the
    power-of-two lower bound ``2^(-ceil(q|σ|))`` otherwise.
    """
    if len(sigma) > depth:
        raise DepthExceeded(f"|{sigma}| > depth {depth}")
    root = Fraction(1, 2 ** initial_exponent(sigma, q))
    zero = Fraction(0)

    def split(rho, v):
        if len(rho) < len(sigma) and sigma.startswith(rho) and sigma[len(rho)] == "0":
            return 2 * v, zero
        return v, v
    return _grow(depth, root, split)


def n_sigma_exponent(sigma: str, q) -> int:
    """Exponent ``e`` with ``N_σ(ρ) = 2^e`` for every extension ``ρ`` of ``σ``."""
    return sigma.count("0") - initial_exponent(sigma, q)


GRID_BITS = 40


def pow2_upper(e) -> Fraction:
    """``2**e`` exactly if ``e`` is an integer, else a dyadic upper bound on a 2^-40 grid."""
    e = as_fraction(e)
    if e.denominator == 1:
        return Fraction(2) ** int(e)
    return ceil_pow2(e, GRID_BITS)


@dataclass(frozen=True)
class STest:
    s: Fraction
    levels: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "s", as_fraction(self.s))
        object.__setattr__(self, "levels", tuple(tuple(sorted(set(v))) for v in self.levels))

    def level_weight(self, k: int) -> Fraction:
        """Exact (or dyadic upper bound) of ``Σ 2^(-s|σ|)`` over level ``k``."""
        return sum((pow2_upper(-self.s * len(sig)) for sig in self.levels[k]), Fraction(0))

    def violations(self) -> list[str]:
        out = []
        if not 0 < self.s < 1:
            out.append(f"s = {self.s} outside (0, 1)")
        for k, level in enumerate(self.levels):
            short = [sig for sig in level if len(sig) <= k]
            if short:
                out.append(f"level {k} has strings of length <= {k}: {short}")
            if not self.level_weight(k) < Fraction(1, 2 ** k):
                out.append(f"level {k} weight {self.level_weight(k)} is not < 2^-{k}")
        return out

    def is_valid(self) -> bool:
        return not self.violations()


def k_epsilon(eps) -> int:
    """Least ``k`` with ``2^-k < eps/2``."""
    eps = as_fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    k = 0
    while not Fraction(1, 2 ** k) < eps / 2:
        k += 1
    return k


def dim_strategy(test: STest, eps, depth: int, check: bool = True) -> MartingaleTable:
    """Sum of ``N_σ`` over every level ``k_eps + i`` of the test."""
    if check and not test.is_valid():
        raise PreconditionViolated("invalid s-test", "; ".join(test.violations()))
    k0 = k_epsilon(eps)
    if k0 >= len(test.levels):
        raise TestExhausted(f"test has {len(test.levels)} levels, need level {k0}")
    total = MartingaleTable.constant(depth, 0)
    for k in range(k0, len(test.levels)):
        for sigma in test.levels[k]:
            total = total + n_sigma(sigma, test.s, depth)
    return total


def dim_certificate(table: MartingaleTable, sigma: str, q) -> bool:
    """Every extension of ``sigma`` inside the table carries at least ``2^(z - q|σ|)``."""
    e = n_sigma_exponent(sigma, q)
    for n in range(len(sigma), table.depth + 1):
        for tail in strings(n - len(sigma)):
            if compare_pow2(table[sigma + tail], e) < 0:
                return False
    return True


# ---------------------------------------------------------------------------
# finite stage sequences as mixtures


_MODES = ("plain", "zero-sided", "strongly-sided")


def lce_to_mixture(stages: StageSequence, mode: str = "plain",
                   f: PredictionFunction | None = None) -> list[MartingaleTable]:
    """Split a nondecreasing stage sequence into components summing up to it.

    Component ``k`` starts with the root growth between stages ``k-1`` and
    ``k``.  Its two children at each node are chosen by the clamp rule
    ``N(σ1) = clamp(2N(σ) - h0, 0, min(2N(σ), h1))``, with headrooms
    ``h_i = M_s(σi) - S_k(σi)``.  The stage pointer ``s`` only moves forward
    until the split also meets the mode's sidedness clauses.
    """
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}")
    tabs = list(stages.stages)
    if not all(isinstance(m, MartingaleTable) for m in tabs):
        raise PreconditionViolated("dense stages", "stage sequence must hold tables")
    depth = tabs[0].depth
    if any(m.depth != depth for m in tabs):
        raise PreconditionViolated("equal depth", "stages differ in depth")
    if not stages.is_nondecreasing():
        raise PreconditionViolated("nondecreasing", "stages are not pointwise nondecreasing")
    if mode == "zero-sided":
        f = ZERO
        if not is_f_sided(tabs[-1], ZERO, strict=True):
            raise PreconditionViolated("strictly 0-sided", "final stage is not strictly 0-sided")
    elif mode == "strongly-sided":
        if f is None:
            raise ValueError("strongly-sided mode needs a prediction function")
        for s in range(1, len(tabs)):
            if not is_f_sided(tabs[s] - tabs[s - 1], f):
                raise PreconditionViolated("nondecreasing wager gaps",
                                           f"stage {s} increment is not {f.name}-sided")

    size = (2 << depth) - 1
    internal = (1 << depth) - 1
    labels = list(strings_upto(depth - 1))
    partial = [Fraction(0)] * size
    components = []
    for k in range(len(tabs)):
        comp = [Fraction(0)] * size
        at = [k] * size
        comp[0] = tabs[k].values[0] - partial[0]
        for i in range(internal):
            c0, c1 = 2 * i + 1, 2 * i + 2
            two_n = 2 * comp[i]
            guess = f(labels[i]) if f is not None else None
            chosen = None
            for s in range(at[i], len(tabs)):
                mv = tabs[s].values
                h0, h1 = mv[c0] - partial[c0], mv[c1] - partial[c1]
                if h0 < 0 or h1 < 0 or h0 + h1 < two_n:
                    continue
                lo, hi = max(Fraction(0), two_n - h0), min(two_n, h1)
                if mode != "plain":
                    # clause (c): the new partial sum still favours the guess
                    mid = (two_n + partial[c0] - partial[c1]) / 2
                    if guess == 0:
                        hi = min(hi, mid)
                    else:
                        lo = max(lo, mid)
                if mode == "strongly-sided":
                    # clause (d): the component itself favours the guess
                    if guess == 0:
                        hi = min(hi, comp[i])
                    else:
                        lo = max(lo, comp[i])
                if lo <= hi:
                    chosen = (s, lo)
                    break
            if chosen is None:
                clause = "(d) component sided" if mode == "strongly-sided" else (
                    "(c) partial sums sided" if mode == "zero-sided" else "(b) headroom")
                raise PreconditionViolated(clause, f"no stage admits a split at {labels[i]!r} in component {k}")
            s, x = chosen
            comp[c1], comp[c0] = x, two_n - x
            at[c0] = at[c1] = s
        components.append(MartingaleTable(depth, comp))
        partial = [a + b for a, b in zip(partial, comp)]
    return components


def mixture_is_valid(components: Sequence[MartingaleTable]) -> bool:
    return all(validate_martingale(c).ok for c in components)


__all__ = [
    "product_decompose", "half_bettor", "strictify", "savings_states", "savings_transform",
    "hoeffding", "hoeffding_rule", "HoeffdingRule", "REnclosure", "r_of_q", "r_power_exact",
    "r_power_at_most", "TailCount", "hoeffding_tail_count", "frequency_weights",
    "frequency_mixture", "frequency_mixture_sides", "frequency_mixture_tail_bound",
    "frequency_mixture_rule", "VilleRule", "ville_strategy", "ville_mixture", "unpair",
    "initial_exponent", "n_sigma", "n_sigma_exponent", "pow2_upper", "STest", "k_epsilon",
    "dim_strategy", "dim_certificate", "lce_to_mixture", "mixture_is_valid",
]
