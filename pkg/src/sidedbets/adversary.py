"""Staged constructions of casino prefixes that defeat monotonous mixtures.

The opponent is a finite stage stack; the casino side picks balanced
extensions along which the opponent's capital barely moves, and pays for
every choice with a description in a Kraft-budgeted ledger.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Sequence

from mpmath import iv

from .constructions import _interval_bounds, _log_r_interval, iv_precision
from .core import (
    ROOT,
    _iroot,
    ZERO,
    MartingaleTable,
    PredictionFunction,
    StageSequence,
    as_fraction,
    compare_pow2,
    is_prefix,
    running_max,
    sum_martingales,
)
from .errors import (
    BudgetExceeded,
    DepthExceeded,
    EnumerationTooLarge,
    EpsOutOfRange,
    NotAnExtension,
    PreconditionViolated,
)

HALF = Fraction(1, 2)


# ---------------------------------------------------------------------------
# gap bounds


def _min_length(q: Fraction, target: Fraction, prec: int = 160) -> int:
    """Least ``l >= 1`` with ``r_q**l >= target``, decided by interval arithmetic."""
    while prec <= 4096:
        with iv_precision(prec):
            lo_r, hi_r = _interval_bounds(_log_r_interval(q, prec))
            t = iv.log(iv.mpf(target.numerator) / target.denominator)
            lo_t, hi_t = _interval_bounds(t)
        if lo_t <= 0:
            return 1
        l = max(1, math.floor(lo_t / hi_r))
        while True:
            if l * lo_r >= hi_t:
                return l
            if l * hi_r >= lo_t:
                break  # undecided at this precision
            l += 1
        prec *= 2
    raise ArithmeticError("could not separate the bound at 4096 bits")


def _check_eps(eps) -> Fraction:
    eps = as_fraction(eps)
    if not 0 < eps < 1:
        raise EpsOutOfRange(f"eps = {eps} outside (0, 1)")
    return eps


def f_of_eps(eps) -> int:
    """Least gap ``l`` with ``2 r_q^-l <= eps`` for ``q = (1+eps)/2``.

    Beyond this gap a balanced, low-gain extension always exists.
    """
    eps = _check_eps(eps)
    return _min_length((1 + eps) / 2, 2 / eps)


def multi_gap_bound(eps, n_opponents: int) -> int:
    """Union-bound version for ``n_opponents`` simultaneous prediction windows."""
    eps = _check_eps(eps)
    return _min_length((1 + eps) / 2, 2 * n_opponents / eps)


# ---------------------------------------------------------------------------
# schedules


def below(x) -> int:
    """Largest integer strictly below ``x``."""
    return math.ceil(as_fraction(x)) - 1


@dataclass(frozen=True)
class Relaxed:
    """Desk-scale parameters: fixed ``eps`` and ``q``, optional explicit gaps."""

    eps: Fraction
    q: Fraction | Callable[[int], Fraction]
    gaps: tuple[int, ...] | None = None

    def q_at(self, n: int) -> Fraction:
        return as_fraction(self.q(n) if callable(self.q) else self.q)


@dataclass(frozen=True)
class LevelParams:
    n: int
    q: Fraction
    eps: Fraction
    delta: Fraction
    s: int
    p: Fraction
    gap: int
    numerator: Fraction
    f_eps: int | None = None

    @property
    def desc_length(self) -> int:
        return below(self.q * self.s)

    @property
    def max_definitions(self) -> int:
        """``floor(2**p)``."""
        if self.p < 0:
            return 0
        return _iroot(1 << self.p.numerator, self.p.denominator)


@dataclass(frozen=True)
class Schedule:
    profile: str
    levels: tuple[LevelParams, ...]
    budget_exponent: int | None = None
    slack: int = 0

    def level(self, n: int) -> LevelParams:
        if not 1 <= n <= len(self.levels):
            raise PreconditionViolated("schedule range", f"no parameters for level {n}")
        return self.levels[n - 1]

    @property
    def n_max(self) -> int:
        return len(self.levels)

    def s(self, n: int) -> int:
        return 0 if n == 0 else self.level(n).s

    def p_sum(self, n: int) -> Fraction:
        """``Σ p_i`` over ``1 <= i < n`` (the root is never redefined)."""
        return sum((lv.p for lv in self.levels[:n - 1]), Fraction(0))


def schedule(n_max: int, profile="paper", budget_exponent: int | None = None,
             slack: int | None = None) -> Schedule:
    """Exact per-level parameters.

    ``profile`` is ``"paper"`` or a :class:`Relaxed`.  Lengths satisfy
    ``s_n (q_n - delta_n) > numerator`` strictly; the paper profile adds
    ``slack`` (default 1) to its numerator so that the strict-floor
    description lengths still fit the budget.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    paper = profile == "paper"
    if not paper and not isinstance(profile, Relaxed):
        raise ValueError("profile must be 'paper' or Relaxed(...)")
    if slack is None:
        slack = 1 if paper and budget_exponent is None else 0
    levels: list[LevelParams] = []
    prev_s = 0
    p_sum = Fraction(0)
    for n in range(1, n_max + 1):
        if paper:
            q = HALF + Fraction(3, n + 2)
            eps = Fraction(1, 2 ** (n + 5))
        else:
            q = profile.q_at(n)
            eps = as_fraction(profile.eps)
        delta = (1 + eps) / 2
        if not delta < q:
            raise PreconditionViolated("delta < q", f"level {n}: delta {delta} >= q {q}")
        if budget_exponent is not None:
            numerator = Fraction(budget_exponent + n + 3 + slack)
        elif paper:
            numerator = Fraction(2 * n + 2 + slack) + p_sum
        else:
            numerator = Fraction(2 * n + 2 + slack)
        fe = None
        if not paper and profile.gaps is not None:
            gap = profile.gaps[min(n - 1, len(profile.gaps) - 1)]
            s = prev_s + gap
        else:
            s = max(math.floor(numerator / (q - delta)) + 1, prev_s + 1)
            if paper:
                fe = f_of_eps(eps)
                s = max(s, prev_s + fe)
            gap = s - prev_s
        p = s * delta + n + 2
        levels.append(LevelParams(n, q, eps, delta, s, p, gap, numerator, fe))
        p_sum += p
        prev_s = s
    return Schedule("paper" if paper else "relaxed", tuple(levels), budget_exponent, slack)


# ---------------------------------------------------------------------------
# special extensions


def _count_limit(delta: Fraction, gap: int, window: str) -> int:
    """Largest admissible per-symbol count in a window of ``gap`` bits."""
    bound = delta * gap
    return below(bound) if window == "open" else math.floor(bound)


def _capital_bound(m, sigma_prev: str, eps: Fraction) -> Fraction:
    return running_max(m, sigma_prev) / (1 - eps)


def is_special_extension(sigma_prev: str, tau: str, eps, stage, window: str = "open") -> bool:
    """Balanced symbol counts after ``sigma_prev`` and capital within ``1/(1-eps)``.

    ``window="open"`` demands both counts strictly below ``delta*gap``;
    ``"closed"`` allows equality.
    """
    eps = _check_eps(eps)
    if not is_prefix(sigma_prev, tau):
        raise NotAnExtension(f"{tau!r} does not extend {sigma_prev!r}")
    if stage.depth is not None and len(tau) > stage.depth:
        raise DepthExceeded(f"|{tau}| > depth {stage.depth}")
    gap = len(tau) - len(sigma_prev)
    if gap == 0:
        return True
    limit = _count_limit((1 + eps) / 2, gap, window)
    tail = tau[len(sigma_prev):]
    if tail.count("0") > limit or tail.count("1") > limit:
        return False
    bound = _capital_bound(stage, sigma_prev, eps)
    return all(stage[tau[:k]] <= bound for k in range(len(sigma_prev) + 1, len(tau) + 1))


def _window_counts_ok(sigma_prev, tau, eps, predictions, window) -> bool:
    gap = len(tau) - len(sigma_prev)
    if gap == 0:
        return True
    limit = _count_limit((1 + eps) / 2, gap, window)
    for f in predictions:
        hits = sum(1 for i in range(len(sigma_prev), len(tau)) if f(tau[:i]) == int(tau[i]))
        if hits > limit or gap - hits > limit:
            return False
    return True


def is_special_extension_multi(sigma_prev: str, tau: str, eps, opponents, capital: str = "each",
                               window: str = "open") -> bool:
    eps = _check_eps(eps)
    if not is_prefix(sigma_prev, tau):
        raise NotAnExtension(f"{tau!r} does not extend {sigma_prev!r}")
    if not _window_counts_ok(sigma_prev, tau, eps, [f for _, f in opponents], window):
        return False
    for m, bound in _capital_constraints(sigma_prev, eps, opponents, capital):
        if any(m[tau[:k]] > bound for k in range(len(sigma_prev) + 1, len(tau) + 1)):
            return False
    return True


def _capital_constraints(sigma_prev, eps, opponents, capital, bound=None):
    def limit(m):
        return bound if bound is not None else _capital_bound(m, sigma_prev, eps)

    if capital == "each":
        return [(m, limit(m)) for m, _ in opponents]
    if capital == "sum":
        ms = [m for m, _ in opponents]
        if all(isinstance(m, MartingaleTable) for m in ms):
            total = _TableSum(ms)
            if bound is not None:
                return [(total, bound)]
            top = max(total[sigma_prev[:k]] for k in range(len(sigma_prev) + 1))
            return [(total, top / (1 - eps))]
        total = sum_martingales(ms)
        return [(total, limit(total))]
    raise ValueError("capital must be 'each' or 'sum'")


class _TableSum:
    """Pointwise sum of tables, evaluated only where the search looks."""

    def __init__(self, tables):
        self.tables = tables
        self.depth = min(t.depth for t in tables)

    def __getitem__(self, sigma: str) -> Fraction:
        return sum((t[sigma] for t in self.tables), Fraction(0))


class _Budget:
    def __init__(self, max_nodes):
        self.left = max_nodes

    def spend(self):
        if self.left is not None:
            self.left -= 1
            if self.left < 0:
                raise EnumerationTooLarge("special-extension search exceeded its node budget")


def _rule_state(m, sigma: str):
    """Lazy strategies are advanced incrementally during the search; tables are looked up."""
    if isinstance(m, (MartingaleTable, _TableSum)):
        return None
    state = m.start()
    for i, b in enumerate(sigma):
        state = m.advance(state, sigma[:i], b)
    return state


def _leftmost(sigma_prev, gap, eps, predictions, constraints, window, max_nodes):
    """Depth-first search in lexicographic order with count and capital pruning."""
    if gap == 0:
        return sigma_prev
    limit = _count_limit((1 + eps) / 2, gap, window)
    if limit < 0 or 2 * limit < gap:
        return None
    budget = _Budget(max_nodes)
    k = len(predictions)
    # stack entries: (string, hits per prediction, strategy states)
    stack = [(sigma_prev, (0,) * k, tuple(_rule_state(m, sigma_prev) for m, _ in constraints))]
    while stack:
        rho, hits, states = stack.pop()
        budget.spend()
        depth = len(rho) - len(sigma_prev)
        if depth == gap:
            return rho
        guesses = [f(rho) for f in predictions]
        children = []
        for bit in "01":
            child = rho + bit
            nh = tuple(h + (g == int(bit)) for h, g in zip(hits, guesses))
            d = depth + 1
            if any(h > limit or d - h > limit for h in nh):
                continue
            # remaining bits cannot rescue a window that is already lost
            rest = gap - d
            if any(h + rest < gap - limit or (d - h) + rest < gap - limit for h in nh):
                continue
            new_states = []
            ok = True
            for (m, bound), st in zip(constraints, states):
                if st is None:
                    value = m[child]
                else:
                    st = m.advance(st, rho, bit)
                    value = m.capital(st)
                if value > bound:
                    ok = False
                    break
                new_states.append(st)
            if ok:
                children.append((child, nh, tuple(new_states)))
        stack.extend(reversed(children))
    return None


def _check_search(sigma_prev, gap, stage_depth, max_gap):
    if gap < 0:
        raise ValueError("gap must be non-negative")
    if max_gap is not None and gap > max_gap:
        raise EnumerationTooLarge(f"gap {gap} exceeds the enumeration guard {max_gap}")
    if stage_depth is not None and len(sigma_prev) + gap > stage_depth:
        raise DepthExceeded(f"target length {len(sigma_prev) + gap} > depth {stage_depth}")


def find_special_extension(sigma_prev: str, gap: int, eps, stage, max_gap: int | None = 24,
                           window: str = "open", max_nodes: int | None = None,
                           bound=None) -> str | None:
    """Lexicographically least special extension of length ``|sigma_prev| + gap``, or ``None``.

    ``bound`` replaces the relative capital limit ``M̂(sigma_prev)/(1-eps)``
    by a fixed one.
    """
    eps = _check_eps(eps)
    _check_search(sigma_prev, gap, stage.depth, max_gap)
    limit = _capital_bound(stage, sigma_prev, eps) if bound is None else as_fraction(bound)
    return _leftmost(sigma_prev, gap, eps, [ZERO], [(stage, limit)], window, max_nodes)


def find_special_extension_multi(sigma_prev: str, gap: int, eps, opponents, capital: str = "each",
                                 max_gap: int | None = 24, window: str = "open",
                                 max_nodes: int | None = None, bound=None) -> str | None:
    """Leftmost extension balanced for every opponent's prediction function.

    ``capital="each"`` bounds every opponent separately; ``"sum"`` bounds the
    total, which is the form whose existence the low-gain argument guarantees.
    """
    eps = _check_eps(eps)
    if not opponents:
        raise ValueError("at least one opponent is required")
    depths = [m.depth for m, _ in opponents if m.depth is not None]
    _check_search(sigma_prev, gap, min(depths) if depths else None, max_gap)
    constraints = _capital_constraints(sigma_prev, eps, opponents, capital,
                                       None if bound is None else as_fraction(bound))
    predictions = _distinct([f for _, f in opponents])
    return _leftmost(sigma_prev, gap, eps, predictions, constraints, window, max_nodes)


def _distinct(fs: Sequence[PredictionFunction]) -> list[PredictionFunction]:
    out = []
    for f in fs:
        # constant-0 and constant-1 windows coincide
        key = "constant" if f.kind.startswith("constant") else id(f)
        if key not in [("constant" if g.kind.startswith("constant") else id(g)) for g in out]:
            out.append(f)
    return out


# ---------------------------------------------------------------------------
# growth along special extensions


@dataclass(frozen=True)
class GrowthCheck:
    holds: bool
    hypothesis: bool  # M_t(σ) - M_s(σ) < 2^-p
    lhs: Fraction  # M_t(τ) - M_s(τ)
    rhs_exponent: Fraction  # bound is 2 ** rhs_exponent

    @property
    def rhs(self) -> float:
        return 2.0 ** float(self.rhs_exponent)


def growth_bound_check(stages: StageSequence, sigma: str, tau: str, s: int, t: int, p: int, eps,
                       window: str = "open", check_depth: int | None = None) -> GrowthCheck:
    """Exact check of the capital-growth bound along a special extension."""
    eps = _check_eps(eps)
    if not 0 <= s < t < len(stages):
        raise PreconditionViolated("stage order", f"need 0 <= s < t < {len(stages)}")
    reason = stages.canonical_violation(check_depth)
    if reason is not None:
        raise PreconditionViolated("canonical", reason)
    m_s, m_t = stages.stage(s), stages.stage(t)
    opponents = [(m_s, f) for f in stages.canonical_for]
    if not is_special_extension_multi(sigma, tau, eps, opponents, capital="sum", window=window):
        raise PreconditionViolated("special extension", f"{tau!r} is not special over {sigma!r} at stage {s}")
    hyp = compare_pow2(m_t[sigma] - m_s[sigma], -p) < 0
    lhs = m_t[tau] - m_s[tau]
    exponent = (1 + eps) / 2 * (len(tau) - len(sigma)) - p
    holds = (not hyp) or compare_pow2(lhs, exponent) <= 0
    return GrowthCheck(holds, hyp, lhs, exponent)


# ---------------------------------------------------------------------------
# Kraft ledger


@dataclass(frozen=True)
class KraftLedger:
    """Description requests of a prefix-free machine with bounded weight."""

    budget: Fraction = Fraction(1)
    requests: tuple[tuple[str, int], ...] = ()
    weight: Fraction = Fraction(0)

    def k_v(self, sigma: str) -> int | None:
        lengths = [n for s, n in self.requests if s == sigma]
        return min(lengths) if lengths else None

    def request(self, sigma: str, length: int) -> "KraftLedger":
        return ledger_request(self, sigma, length)


def ledger_request(ledger: KraftLedger, sigma: str, length: int) -> KraftLedger:
    if length < 1:
        raise ValueError("description length must be at least 1")
    current = ledger.k_v(sigma)
    if current is not None and current <= length:
        return ledger
    weight = ledger.weight + Fraction(1, 2 ** length)
    if weight > ledger.budget:
        raise BudgetExceeded(f"weight {weight} would exceed budget {ledger.budget}")
    return replace(ledger, requests=ledger.requests + ((sigma, length),), weight=weight)


# ---------------------------------------------------------------------------
# traces


@dataclass(frozen=True)
class StageRecord:
    stage: int
    action: str  # define | undefine | request | idle
    n: int | None = None
    sigma: str | None = None
    weight: Fraction = Fraction(0)


@dataclass(frozen=True)
class Definition:
    n: int
    epoch: int  # how many times sigma_{n-1} had been defined
    sigma: str
    stage: int


@dataclass(frozen=True)
class Certificate:
    n: int
    value: Fraction
    bound: Fraction
    holds: bool


@dataclass(frozen=True)
class ConstructionTrace:
    history: tuple[StageRecord, ...]
    final_prefixes: tuple[str, ...]
    ledger: KraftLedger
    certificates: tuple[Certificate, ...]
    definitions: tuple[Definition, ...] = ()
    max_definitions: tuple[tuple[int, int], ...] = ()  # (n, floor(2**p_n))

    def groups(self) -> dict[tuple[int, int], list[Definition]]:
        out: dict[tuple[int, int], list[Definition]] = {}
        for d in self.definitions:
            out.setdefault((d.n, d.epoch), []).append(d)
        return out

    def lex_monotone(self) -> bool:
        return all(all(a.sigma < b.sigma for a, b in zip(g, g[1:])) for g in self.groups().values())

    def within_redefinition_bounds(self) -> bool:
        limits = dict(self.max_definitions)
        return all(len(g) <= limits[n] for (n, _), g in self.groups().items())

    def within_budget(self) -> bool:
        return self.ledger.weight <= self.ledger.budget

    def certificates_hold(self) -> bool:
        return all(c.holds for c in self.certificates)

    def invariants(self) -> dict[str, bool]:
        return {
            "capital certificates": self.certificates_hold(),
            "redefinition bound": self.within_redefinition_bounds(),
            "lexicographic monotonicity": self.lex_monotone(),
            "ledger within budget": self.within_budget(),
        }


def capital_bound(n: int) -> Fraction:
    """``1/2 + Σ_{i<n} 2^(-i-2)``."""
    return HALF + sum((Fraction(1, 2 ** (i + 2)) for i in range(n)), Fraction(0))


def _check_gaps(sched: Schedule, max_gap):
    if max_gap is None:
        return
    for lv in sched.levels:
        if lv.gap > max_gap:
            raise EnumerationTooLarge(f"level {lv.n} gap {lv.gap} exceeds guard {max_gap}")


def search_bound(n: int) -> Fraction:
    """Fixed capital limit for new ``σ_n``: halfway between consecutive attention bounds."""
    return capital_bound(n - 1) + Fraction(1, 2 ** (n + 2))


def _check_rule(capital_rule: str):
    if capital_rule not in ("fixed", "relative"):
        raise ValueError("capital_rule must be 'fixed' or 'relative'")


def run_construction(opponent: StageSequence, sched: Schedule, max_stage: int,
                     desc_len_rule: Callable[[Fraction, int], int] | None = None,
                     window: str = "open", max_gap: int | None = 24,
                     check_canonical: bool = True, capital_rule: str = "fixed") -> ConstructionTrace:
    """Single-machine construction against one canonical separable stack.

    At stage ``s+1`` the least ``n <= s`` requiring attention acts: an
    undefined ``σ_n`` becomes the leftmost special extension of ``σ_{n-1}``
    (capital read from stage ``s``); a defined one whose running maximum at
    stage ``s+1`` exceeds ``capital_bound(n)`` is cancelled with everything
    above it.  Then the least defined level whose description is missing
    gets one of length just below ``q_k s_k``.

    ``capital_rule="relative"`` limits the capital of new extensions by
    ``M̂(σ_{n-1})/(1-eps_n)``.  The default ``"fixed"`` uses
    :func:`search_bound` instead, a limit that never moves, so strings once
    rejected stay rejected and redefinitions only move right.
    """
    desc = desc_len_rule or (lambda q, s: below(q * s))
    _check_rule(capital_rule)
    if opponent.final[ROOT] >= HALF:
        raise PreconditionViolated("root capital", "opponent must start below 1/2")
    depth = opponent.depth
    if depth is not None and depth < sched.s(sched.n_max):
        raise PreconditionViolated("depth", f"opponent depth {depth} < s_{sched.n_max}")
    _check_gaps(sched, max_gap)
    if check_canonical:
        reason = opponent.canonical_violation(None if depth is not None else 8)
        if reason is not None:
            raise PreconditionViolated("canonical", reason)

    sigma: dict[int, str] = {0: ""}
    made = {0: 1}
    ledger = KraftLedger(Fraction(1))
    history: list[StageRecord] = []
    defs: list[Definition] = []
    for s in range(max_stage):
        stage_no = s + 1
        nxt, cur = opponent.stage(s + 1), opponent.stage(s)
        acted = None
        for n in range(1, min(s, sched.n_max) + 1):
            if n not in sigma or running_max(nxt, sigma[n]) > capital_bound(n):
                acted = n
                break
        if acted is None:
            history.append(StageRecord(stage_no, "idle", None, None, ledger.weight))
        elif acted not in sigma:
            lv = sched.level(acted)
            bound = search_bound(acted) if capital_rule == "fixed" else None
            tau = find_special_extension(sigma[acted - 1], lv.gap, lv.eps, cur, max_gap=None,
                                         window=window, bound=bound)
            if tau is None:
                history.append(StageRecord(stage_no, "idle", acted, None, ledger.weight))
            else:
                sigma[acted] = tau
                made[acted] = made.get(acted, 0) + 1
                defs.append(Definition(acted, made[acted - 1], tau, stage_no))
                history.append(StageRecord(stage_no, "define", acted, tau, ledger.weight))
        else:
            old = sigma[acted]
            for i in [i for i in sigma if i >= acted]:
                del sigma[i]
            history.append(StageRecord(stage_no, "undefine", acted, old, ledger.weight))
        for k in sorted(sigma):
            if k < 1 or k > s:
                continue
            lv = sched.level(k)
            kv = ledger.k_v(sigma[k])
            if kv is None or kv > lv.q * lv.s:
                ledger = ledger.request(sigma[k], desc(lv.q, lv.s))
                history.append(StageRecord(stage_no, "request", k, sigma[k], ledger.weight))
                break

    final = opponent.stage(max_stage)
    certs = []
    for n in sorted(sigma):
        if n == 0:
            continue
        value = running_max(final, sigma[n])
        certs.append(Certificate(n, value, capital_bound(n), value <= capital_bound(n)))
    chain = tuple(sigma[n] for n in sorted(sigma))
    limits = tuple((lv.n, lv.max_definitions) for lv in sched.levels)
    return ConstructionTrace(tuple(history), chain, ledger, tuple(certs), tuple(defs), limits)


# ---------------------------------------------------------------------------
# per-input construction


@dataclass(frozen=True)
class Opponent:
    index: int
    stages: StageSequence
    f: PredictionFunction = ZERO


@dataclass(frozen=True)
class Eta:
    """An input: opponents (by enumeration index) and a prefix chain ``σ_0 ≺ ... ≺ σ_{n-1}``."""

    opponents: tuple[Opponent, ...]
    chain: tuple[str, ...] = ("",)

    def __post_init__(self):
        object.__setattr__(self, "opponents", tuple(self.opponents))
        object.__setattr__(self, "chain", tuple(self.chain))


def _gamma(m: int) -> str:
    """Elias gamma code of ``m >= 1``."""
    b = format(m, "b")
    return "0" * (len(b) - 1) + b


def encode_eta(eta: Eta) -> str:
    """Self-delimiting binary code of the indices and the chain."""
    parts = [_gamma(len(eta.opponents) + 1)]
    parts += [_gamma(o.index + 1) for o in eta.opponents]
    parts.append(_gamma(len(eta.chain) + 1))
    for sigma in eta.chain:
        parts.append(_gamma(len(sigma) + 1) + sigma)
    return "".join(parts)


def g_of_eta(eta: Eta) -> int:
    return 2 * len(encode_eta(eta)) + 2


def _check_chain(chain: Sequence[str]):
    if not chain or chain[0] != "":
        raise PreconditionViolated("chain", "the chain must start with the empty string")
    for a, b in zip(chain, chain[1:]):
        if not (b.startswith(a) and len(b) > len(a)):
            raise PreconditionViolated("chain", f"{b!r} does not properly extend {a!r}")


def run_construction_eta(eta: Eta, budget_exponent: int, sched: Schedule, max_stage: int,
                         desc_len_rule: Callable[[Fraction, int], int] | None = None,
                         window: str = "open", max_gap: int | None = None,
                         max_nodes: int | None = 1 << 22, check_depth: int | None = 8,
                         capital_rule: str = "fixed") -> tuple[KraftLedger, ConstructionTrace]:
    """Build ``σ_n`` above the chain of ``eta`` with a ledger of weight at most ``2^-g``.

    ``σ_n`` is (re)defined only while the hypothesis bound holds on ``σ_{n-1}``
    and fewer than ``2^{p_n}`` definitions were made; it is cancelled once
    its running maximum passes the bound plus ``2^(-n-3)``.  With the
    default ``capital_rule="fixed"`` new extensions keep the summed capital
    within the bound plus ``2^(-n-4)``.
    """
    desc = desc_len_rule or (lambda q, s: below(q * s))
    _check_rule(capital_rule)
    chain = eta.chain
    _check_chain(chain)
    n = len(chain)
    lv = sched.level(n)
    base = chain[-1]
    gap = lv.s - len(base)
    if gap <= 0:
        raise PreconditionViolated("schedule", f"s_{n} = {lv.s} does not exceed |σ_{n-1}| = {len(base)}")
    if max_gap is not None and gap > max_gap:
        raise EnumerationTooLarge(f"gap {gap} exceeds guard {max_gap}")
    for opp in eta.opponents:
        depth = opp.stages.depth
        probe = check_depth if depth is None else depth
        reason = opp.stages.canonical_violation(probe) if opp.stages.canonical_for else "no prediction function"
        if reason is not None:
            raise PreconditionViolated("canonical", f"opponent {opp.index}: {reason}")

    hyp_bound = capital_bound(n - 1)
    cancel_bound = hyp_bound + Fraction(1, 2 ** (n + 3))
    ledger = KraftLedger(Fraction(1, 2 ** budget_exponent))
    current: str | None = None
    made = 0
    history: list[StageRecord] = []
    defs: list[Definition] = []

    def combined(s):
        return sum_martingales([o.stages.stage(s) for o in eta.opponents])

    for s in range(max_stage):
        stage_no = s + 1
        m = combined(s + 1)
        if m.depth is not None and m.depth < lv.s:
            history.append(StageRecord(stage_no, "idle", n, None, ledger.weight))
            continue
        if not running_max(m, base) < hyp_bound:
            history.append(StageRecord(stage_no, "idle", n, None, ledger.weight))
            continue
        acted = False
        if current is None and compare_pow2(made, lv.p) < 0:
            opponents = [(o.stages.stage(s + 1), o.f) for o in eta.opponents]
            bound = hyp_bound + Fraction(1, 2 ** (n + 4)) if capital_rule == "fixed" else None
            tau = find_special_extension_multi(base, gap, lv.eps, opponents, capital="sum",
                                               max_gap=None, window=window, max_nodes=max_nodes,
                                               bound=bound)
            if tau is not None:
                current = tau
                made += 1
                defs.append(Definition(n, 0, tau, stage_no))
                history.append(StageRecord(stage_no, "define", n, tau, ledger.weight))
                acted = True
        elif current is not None and running_max(m, current) > cancel_bound:
            history.append(StageRecord(stage_no, "undefine", n, current, ledger.weight))
            current = None
            acted = True
        if current is not None:
            kv = ledger.k_v(current)
            if kv is None or kv > lv.q * len(current):
                ledger = ledger.request(current, desc(lv.q, len(current)))
                history.append(StageRecord(stage_no, "request", n, current, ledger.weight))
                acted = True
        if not acted:
            history.append(StageRecord(stage_no, "idle", n, None, ledger.weight))

    certs = []
    if current is not None:
        final = combined(max_stage)
        value = running_max(final, current)
        bound = hyp_bound + Fraction(1, 2 ** (n + 2))
        kv = ledger.k_v(current)
        certs.append(Certificate(n, value, bound, value <= bound and kv is not None and kv < lv.q * lv.s))
    prefixes = chain + ((current,) if current is not None else ())
    trace = ConstructionTrace(tuple(history), prefixes, ledger, tuple(certs), tuple(defs),
                              ((n, lv.max_definitions),))
    return ledger, trace


__all__ = [
    "f_of_eps", "multi_gap_bound", "below", "Relaxed", "LevelParams", "Schedule", "schedule",
    "is_special_extension", "is_special_extension_multi", "find_special_extension",
    "find_special_extension_multi", "GrowthCheck", "growth_bound_check", "KraftLedger",
    "ledger_request", "StageRecord", "Definition", "Certificate", "ConstructionTrace",
    "capital_bound", "search_bound", "run_construction", "Opponent", "Eta", "encode_eta", "g_of_eta",
    "run_construction_eta",
]
