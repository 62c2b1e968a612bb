"""Exact finite-depth martingales, prediction functions and structural predicates.

Bit strings are plain ``str`` objects over ``'0'``/``'1'``; the empty string is
the root.  Capitals are :class:`fractions.Fraction` values throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import (
    DepthExceeded,
    DepthMismatch,
    MissingEntry,
    NotPrefixFree,
    PreconditionViolated,
    ZeroInitialCapital,
)

ROOT = ""


# ---------------------------------------------------------------------------
# bit strings


def check_bits(sigma: str) -> str:
    if any(c not in "01" for c in sigma):
        raise ValueError(f"not a bit string: {sigma!r}")
    return sigma


def strings(n: int) -> Iterator[str]:
    """All bit strings of length ``n`` in lexicographic order."""
    if n == 0:
        yield ""
        return
    for bits in product("01", repeat=n):
        yield "".join(bits)


def strings_upto(depth: int) -> Iterator[str]:
    for n in range(depth + 1):
        yield from strings(n)


def node_index(sigma: str) -> int:
    """Position of ``sigma`` in breadth-first (heap) order."""
    n = len(sigma)
    return (1 << n) - 1 + (int(sigma, 2) if n else 0)


def _node_name(i: int) -> str:
    """Inverse of :func:`node_index`."""
    n = (i + 1).bit_length() - 1
    return format(i + 1 - (1 << n), "b").zfill(n) if n else ""


def is_prefix(rho: str, sigma: str) -> bool:
    return sigma.startswith(rho)


def prefixes(sigma: str) -> Iterator[str]:
    for n in range(len(sigma) + 1):
        yield sigma[:n]


def guess_counts(sigma: str, f: "PredictionFunction", start: int = 0) -> tuple[int, int]:
    """(correct, false) f-guesses at positions ``start <= i < len(sigma)``."""
    z = 0
    for i in range(start, len(sigma)):
        if f(sigma[:i]) == int(sigma[i]):
            z += 1
    return z, len(sigma) - start - z


# ---------------------------------------------------------------------------
# exact powers of two with rational exponent


def as_fraction(x) -> Fraction:
    if type(x) is Fraction:
        return x
    if isinstance(x, str):
        return parse_rational(x)
    return Fraction(x)


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    if "/" in text:
        p, q = text.split("/")
        return Fraction(int(p), int(q))
    return Fraction(int(text))


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def compare_pow2(x, e) -> int:
    """Sign of ``x - 2**e`` for rational ``x`` and rational exponent ``e``, exactly."""
    x, e = as_fraction(x), as_fraction(e)
    if x <= 0:
        return -1
    a, b = e.numerator, e.denominator
    lhs = x.numerator ** b
    rhs = x.denominator ** b
    if a >= 0:
        rhs <<= a
    else:
        lhs <<= -a
    return (lhs > rhs) - (lhs < rhs)


def ceil_pow2(e, bits: int = 0) -> Fraction:
    """Least multiple of ``2**-bits`` that is >= ``2**e``."""
    x = as_fraction(e) + bits
    a, b = x.numerator, x.denominator
    if a <= 0:
        m = 1
    elif b == 1:
        m = 1 << a
    else:
        m = _iroot(1 << a, b)
        if m ** b < (1 << a):
            m += 1
    return Fraction(m, 1 << bits)


def _iroot(x: int, k: int) -> int:
    """floor(x ** (1/k)) for non-negative integers."""
    if x < 2:
        return x
    hi = 1 << ((x.bit_length() + k - 1) // k)
    lo = 0
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid ** k <= x:
            lo = mid
        else:
            hi = mid - 1
    return lo


# ---------------------------------------------------------------------------
# prediction functions


@dataclass(frozen=True)
class PredictionFunction:
    """Total map from bit strings to {0, 1}."""

    kind: str
    table: Mapping[str, int] | None = field(default=None, compare=False, repr=False)
    rule: Callable[[str], int] | None = field(default=None, compare=False, repr=False)
    name: str = ""

    @classmethod
    def constant(cls, bit: int) -> "PredictionFunction":
        if bit not in (0, 1):
            raise ValueError("constant prediction must be 0 or 1")
        return cls(kind=f"constant-{bit}", name=f"constant-{bit}")

    @classmethod
    def from_table(cls, mapping: Mapping[str, int], name: str = "table") -> "PredictionFunction":
        return cls(kind="table", table=dict(mapping), name=name)

    @classmethod
    def from_rule(cls, fn: Callable[[str], int], name: str = "rule") -> "PredictionFunction":
        return cls(kind="rule", rule=fn, name=name)

    def __call__(self, sigma: str) -> int:
        if self.kind == "constant-0":
            return 0
        if self.kind == "constant-1":
            return 1
        if self.kind == "table":
            try:
                return self.table[sigma]
            except KeyError:
                raise MissingEntry(f"prediction table has no entry for {sigma!r}") from None
        return int(self.rule(sigma))

    def complement(self) -> "PredictionFunction":
        if self.kind == "constant-0":
            return ONE
        if self.kind == "constant-1":
            return ZERO
        return PredictionFunction.from_rule(lambda s: 1 - self(s), name=f"not-{self.name}")


ZERO = PredictionFunction.constant(0)
ONE = PredictionFunction.constant(1)


# ---------------------------------------------------------------------------
# martingales


class MartingaleTable:
    """Capital assignment on every bit string of length at most ``depth``.

    Values are kept in breadth-first order.  Fairness is not enforced on
    construction; see :func:`validate_martingale`.
    """

    __slots__ = ("depth", "_values")

    def __init__(self, depth: int, values: Iterable):
        vals = tuple(v if type(v) is Fraction else Fraction(v) for v in values)
        if depth < 0 or len(vals) != (2 << depth) - 1:
            raise MissingEntry(f"expected {(2 << depth) - 1} values for depth {depth}, got {len(vals)}")
        self.depth = depth
        self._values = vals

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, object], depth: int | None = None) -> "MartingaleTable":
        if depth is None:
            depth = max((len(k) for k in mapping), default=0)
        vals = []
        for sigma in strings_upto(depth):
            try:
                vals.append(as_fraction(mapping[sigma]))
            except KeyError:
                raise MissingEntry(f"no value for {sigma!r}") from None
        return cls(depth, vals)

    @classmethod
    def from_function(cls, depth: int, fn: Callable[[str], object]) -> "MartingaleTable":
        return cls(depth, (fn(s) for s in strings_upto(depth)))

    @classmethod
    def constant(cls, depth: int, c=1) -> "MartingaleTable":
        c = as_fraction(c)
        return cls(depth, [c] * ((2 << depth) - 1))

    def __getitem__(self, sigma: str) -> Fraction:
        if len(sigma) > self.depth:
            raise DepthExceeded(f"|{sigma}| = {len(sigma)} > depth {self.depth}")
        return self._values[node_index(sigma)]

    value = __getitem__

    @property
    def values(self) -> tuple[Fraction, ...]:
        return self._values

    def items(self) -> Iterator[tuple[str, Fraction]]:
        return zip(strings_upto(self.depth), self._values)

    def to_mapping(self) -> dict[str, Fraction]:
        return dict(self.items())

    def level(self, n: int) -> tuple[Fraction, ...]:
        return self._values[(1 << n) - 1:(2 << n) - 1]

    def _same_depth(self, other: "MartingaleTable") -> None:
        if not isinstance(other, MartingaleTable) or other.depth != self.depth:
            raise DepthMismatch("tables must have equal depth")

    def __add__(self, other: "MartingaleTable") -> "MartingaleTable":
        self._same_depth(other)
        return MartingaleTable(self.depth, [a + b for a, b in zip(self._values, other._values)])

    def __sub__(self, other: "MartingaleTable") -> "MartingaleTable":
        self._same_depth(other)
        return MartingaleTable(self.depth, [a - b for a, b in zip(self._values, other._values)])

    def __mul__(self, c) -> "MartingaleTable":
        c = as_fraction(c)
        return MartingaleTable(self.depth, [c * v for v in self._values])

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, MartingaleTable) and self.depth == other.depth and self._values == other._values

    def __hash__(self):
        return hash((self.depth, self._values))

    def __repr__(self) -> str:
        head = ", ".join(f"{s or 'λ'}:{format_rational(v)}" for s, v in list(self.items())[:7])
        return f"MartingaleTable(depth={self.depth}, {{{head}{', ...' if len(self._values) > 7 else ''}}})"

    def restrict(self, depth: int) -> "MartingaleTable":
        if depth > self.depth:
            raise DepthExceeded("cannot extend a table by restriction")
        return MartingaleTable(depth, self._values[:(2 << depth) - 1])


class StrategyRule:
    """A strategy that produces capital lazily along a single path.

    Subclasses implement :meth:`start`, :meth:`advance` and :meth:`capital`.
    """

    depth = None

    def start(self):
        raise NotImplementedError

    def advance(self, state, prefix: str, bit: str):
        raise NotImplementedError

    def capital(self, state) -> Fraction:
        raise NotImplementedError

    def value(self, sigma: str) -> Fraction:
        state = self.start()
        for i, b in enumerate(sigma):
            state = self.advance(state, sigma[:i], b)
        return self.capital(state)

    __getitem__ = value

    def walk(self, x: str) -> Iterator[Fraction]:
        state = self.start()
        yield self.capital(state)
        for i, b in enumerate(x):
            state = self.advance(state, x[:i], b)
            yield self.capital(state)


class FunctionRule(StrategyRule):
    """Wrap a closed-form capital function ``sigma -> value``."""

    def __init__(self, fn: Callable[[str], object], name: str = "function"):
        self.fn = fn
        self.name = name

    def start(self):
        return ""

    def advance(self, state, prefix, bit):
        return state + bit

    def capital(self, state):
        return as_fraction(self.fn(state))


class TableRule(StrategyRule):
    """View a table as a rule (capital lookups along a path)."""

    def __init__(self, table: MartingaleTable):
        self.table = table

    def start(self):
        return ""

    def advance(self, state, prefix, bit):
        return state + bit

    def capital(self, state):
        return self.table[state]


class MixtureRule(StrategyRule):
    """Weighted sum of rules (or tables), advanced in lock step."""

    def __init__(self, components: Sequence[tuple[object, object]]):
        self.components = [(as_fraction(w), c if isinstance(c, StrategyRule) else TableRule(c))
                           for w, c in components]

    def start(self):
        return tuple(c.start() for _, c in self.components)

    def advance(self, state, prefix, bit):
        return tuple(c.advance(s, prefix, bit) for s, (_, c) in zip(state, self.components))

    def capital(self, state):
        return sum((w * c.capital(s) for s, (w, c) in zip(state, self.components)), Fraction(0))


def capital_at(m, sigma: str) -> Fraction:
    """Value of a table or rule at ``sigma``."""
    return m[sigma]


def sum_martingales(items: Sequence) -> object:
    """Pointwise sum of tables (a table) or of anything else (a rule)."""
    if all(isinstance(m, MartingaleTable) for m in items):
        out = items[0]
        for m in items[1:]:
            out = out + m
        return out
    return MixtureRule([(1, m) for m in items])


def tabulate(m, depth: int) -> MartingaleTable:
    if isinstance(m, MartingaleTable):
        return m if m.depth == depth else m.restrict(depth)
    return MartingaleTable.from_function(depth, m.value)


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class Violation:
    sigma: str
    lhs: Fraction  # 2 * M(sigma)
    rhs: Fraction  # M(sigma0) + M(sigma1)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...] = ()
    negatives: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class CapitalTrajectory:
    points: tuple[tuple[int, Fraction], ...]

    @property
    def capitals(self) -> list[Fraction]:
        return [c for _, c in self.points]

    @property
    def final(self) -> Fraction:
        return self.points[-1][1]


@dataclass(frozen=True)
class GrowthReport:
    best: Decimal
    best_n: int
    final: Decimal
    exponents: tuple[tuple[int, Decimal], ...]


# ---------------------------------------------------------------------------
# operations


def validate_martingale(t) -> ValidationReport:
    if not isinstance(t, MartingaleTable):
        t = MartingaleTable.from_mapping(t)
    vals = t.values
    violations = []
    for i in range(len(vals) // 2):
        lhs = 2 * vals[i]
        rhs = vals[2 * i + 1] + vals[2 * i + 2]
        if lhs != rhs:
            violations.append(Violation(_node_name(i), lhs, rhs))
    negatives = tuple(_node_name(i) for i, v in enumerate(vals) if v < 0)
    return ValidationReport(not violations and not negatives, tuple(violations), negatives)


def wager(t, sigma: str) -> Fraction:
    depth = t.depth
    if depth is not None and len(sigma) >= depth:
        raise DepthExceeded(f"no wager at depth {len(sigma)} of a depth-{depth} table")
    return t[sigma + "1"] - t[sigma]


def running_max(t, sigma: str) -> Fraction:
    if isinstance(t, MartingaleTable):
        if len(sigma) > t.depth:
            raise DepthExceeded(f"|{sigma}| > depth {t.depth}")
        return max(t[sigma[:n]] for n in range(len(sigma) + 1))
    return max(t.walk(sigma))


def is_f_sided(t: MartingaleTable, f: PredictionFunction, strict: bool = False) -> bool:
    vals = t.values
    for i, sigma in enumerate(strings_upto(t.depth - 1)):
        here, c0, c1 = vals[i], vals[2 * i + 1], vals[2 * i + 2]
        if c0 == c1:
            if strict:
                return False
            if c0 == here:
                continue
        guess = f(sigma)
        for i, c in ((0, c0), (1, c1)):
            if c > here and guess != i:
                return False
            if c < here and guess != 1 - i:
                return False
    return True


def is_zero_sided(t: MartingaleTable, strict: bool = False) -> bool:
    return is_f_sided(t, ZERO, strict)


def is_one_sided(t: MartingaleTable, strict: bool = False) -> bool:
    return is_f_sided(t, ONE, strict)


def is_separable_witness(m: MartingaleTable, n: MartingaleTable, t: MartingaleTable) -> bool:
    if not (m.depth == n.depth == t.depth):
        raise DepthMismatch("witness tables must share a depth")
    return is_zero_sided(n) and is_one_sided(t) and (n + t) == m


def check_prefix_free(sigmas: Iterable[str]) -> list[str]:
    ordered = sorted(set(sigmas))
    for a, b in zip(ordered, ordered[1:]):
        if b.startswith(a):
            raise NotPrefixFree(a, b)
    return ordered


def ville_sum(t, sigmas: Iterable[str]) -> tuple[Fraction, bool]:
    """Kolmogorov-Ville sum over a prefix-free set and whether it is <= the root."""
    ordered = check_prefix_free(sigmas)
    total = sum((t[s] / (1 << len(s)) for s in ordered), Fraction(0))
    return total, total <= t[ROOT]


def evaluate(t, x: str) -> CapitalTrajectory:
    if isinstance(t, MartingaleTable):
        if len(x) > t.depth:
            raise DepthExceeded(f"path of length {len(x)} exceeds depth {t.depth}")
        return CapitalTrajectory(tuple((n, t[x[:n]]) for n in range(len(x) + 1)))
    return CapitalTrajectory(tuple(enumerate(t.walk(x))))


def log2_decimal(x: Fraction, prec: int = 40) -> Decimal:
    if x <= 0:
        return Decimal("-Infinity")
    with localcontext() as ctx:
        ctx.prec = prec
        ln2 = Decimal(2).ln()
        return (Decimal(x.numerator).ln() - Decimal(x.denominator).ln()) / ln2


def growth_exponent(traj: CapitalTrajectory, prec: int = 40) -> GrowthReport:
    if not traj.points:
        raise PreconditionViolated("empty trajectory")
    if traj.points[0][1] <= 0:
        raise ZeroInitialCapital("initial capital must be positive")
    exps = []
    with localcontext() as ctx:
        ctx.prec = prec
        for n, c in traj.points:
            if n >= 1:
                exps.append((n, log2_decimal(c, prec) / n))
    if not exps:
        zero = Decimal(0)
        return GrowthReport(zero, 0, zero, ())
    best_n, best = max(exps, key=lambda p: p[1])
    return GrowthReport(best, best_n, exps[-1][1], tuple(exps))


def mix(components: Sequence[tuple[object, MartingaleTable]]) -> MartingaleTable:
    if not components:
        raise ValueError("mixture needs at least one component")
    depth = components[0][1].depth
    acc = [Fraction(0)] * ((2 << depth) - 1)
    for w, t in components:
        w = as_fraction(w)
        if w <= 0:
            raise ValueError("mixture weights must be positive")
        if t.depth != depth:
            raise DepthMismatch("mixture components must share a depth")
        acc = [a + w * v for a, v in zip(acc, t.values)]
    return MartingaleTable(depth, acc)


# ---------------------------------------------------------------------------
# stage sequences


def _common_denominator(tables) -> int:
    dens = {v.denominator for t in tables for v in t.values}
    return math.lcm(*dens) if dens else 1


def _scaled(t: MartingaleTable, scale: int) -> list[int]:
    return [v.numerator * (scale // v.denominator) for v in t.values]


def _fair_ints(vals: list[int]) -> bool:
    half = len(vals) // 2
    return all(vals[2 * i + 1] + vals[2 * i + 2] == 2 * vals[i] for i in range(half)) and min(vals) >= 0


def _sided_ints(vals: list[int], f: PredictionFunction) -> bool:
    """Sidedness on integer-scaled values; the prediction is only consulted where a bet is placed."""
    for i in range(len(vals) // 2):
        c0 = vals[2 * i + 1]
        if c0 == vals[i]:
            continue
        if (c0 > vals[i]) != (f(_node_name(i)) == 0):
            return False
    return True


@dataclass(frozen=True)
class StageSequence:
    """Finite nondecreasing approximation ``M_0 <= M_1 <= ...`` of a martingale.

    ``canonical_for`` names the prediction function of each side; ``parts``
    then holds one stage list per side whose pointwise sums are ``stages``.
    """

    stages: tuple
    canonical_for: tuple[PredictionFunction, ...] | None = None
    parts: tuple[tuple, ...] | None = None

    def __post_init__(self):
        if not self.stages:
            raise ValueError("a stage sequence needs at least one stage")
        object.__setattr__(self, "stages", tuple(self.stages))
        if self.canonical_for is not None:
            object.__setattr__(self, "canonical_for", tuple(self.canonical_for))
        if self.parts is not None:
            object.__setattr__(self, "parts", tuple(tuple(p) for p in self.parts))
        object.__setattr__(self, "_verdicts", {})

    @classmethod
    def separable(cls, zero_side: Sequence, one_side: Sequence) -> "StageSequence":
        if len(zero_side) != len(one_side):
            raise ValueError("both sides need the same number of stages")
        stages = [sum_martingales([a, b]) for a, b in zip(zero_side, one_side)]
        return cls(tuple(stages), (ZERO, ONE), (tuple(zero_side), tuple(one_side)))

    @classmethod
    def sided(cls, stages: Sequence, f: PredictionFunction) -> "StageSequence":
        return cls(tuple(stages), (f,), (tuple(stages),))

    def __len__(self) -> int:
        return len(self.stages)

    def stage(self, s: int):
        """Stage ``s``, clamped to the last available stage."""
        return self.stages[min(s, len(self.stages) - 1)]

    @property
    def final(self):
        return self.stages[-1]

    @property
    def depth(self):
        ds = [m.depth for m in self.stages if m.depth is not None]
        return min(ds) if ds else None

    def _tables(self, seq, depth):
        return [tabulate(m, depth) for m in seq]

    def is_nondecreasing(self, depth: int | None = None) -> bool:
        depth = self.depth if depth is None else depth
        tabs = self._tables(self.stages, depth)
        return all(a <= b for x, y in zip(tabs, tabs[1:]) for a, b in zip(x.values, y.values))

    def canonical_violation(self, depth: int | None = None) -> str | None:
        """Reason the sequence fails to be canonical, or ``None``.  Memoised per depth."""
        depth = self.depth if depth is None else depth
        if depth not in self._verdicts:
            self._verdicts[depth] = self._canonical_violation(depth)
        return self._verdicts[depth]

    def _canonical_violation(self, depth: int) -> str | None:
        if self.canonical_for is None:
            return "no prediction functions declared"
        parts = self.parts if self.parts is not None else (self.stages,)
        if len(parts) != len(self.canonical_for):
            return "one part per prediction function is required"
        tabbed = [self._tables(p, depth) for p in parts]
        total = self._tables(self.stages, depth)
        # every check below is linear, so scale all values to integers once
        scale = _common_denominator(t for seq in tabbed + [total] for t in seq)
        ints = [[_scaled(t, scale) for t in seq] for seq in tabbed]
        for s, m in enumerate(total):
            acc = [sum(col) for col in zip(*(side[s] for side in ints))]
            if acc != _scaled(m, scale):
                return f"stage {s} is not the sum of its parts"
        size = (2 << depth) - 1
        for f, seq in zip(self.canonical_for, ints):
            prev = [0] * size
            for s, cur in enumerate(seq):
                diff = [a - b for a, b in zip(cur, prev)]
                if not _fair_ints(diff):
                    return f"stage {s} increment of side {f.name} is not a martingale"
                if not _sided_ints(diff, f):
                    return f"stage {s} increment of side {f.name} is not {f.name}-sided"
                prev = cur
        return None

    def is_canonical(self, depth: int | None = None) -> bool:
        return self.canonical_violation(depth) is None


__all__ = [
    "ROOT", "check_bits", "strings", "strings_upto", "node_index", "is_prefix", "prefixes",
    "guess_counts", "as_fraction", "parse_rational", "format_rational", "compare_pow2",
    "ceil_pow2", "PredictionFunction", "ZERO", "ONE", "MartingaleTable", "StrategyRule",
    "FunctionRule", "TableRule", "MixtureRule", "capital_at", "sum_martingales", "tabulate",
    "Violation", "ValidationReport", "CapitalTrajectory", "GrowthReport", "validate_martingale",
    "wager", "running_max", "is_f_sided", "is_zero_sided", "is_one_sided", "is_separable_witness",
    "check_prefix_free", "ville_sum", "evaluate", "log2_decimal", "growth_exponent", "mix",
    "StageSequence",
]
