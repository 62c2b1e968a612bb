"""How fast does a fixed-odds bettor grow on a biased coin, and how rare are its big wins?

Run: python demos/exponential_bettor.py
"""
from fractions import Fraction as F

from sidedbets import ZERO, evaluate, growth_exponent
from sidedbets.constructions import frequency_mixture_rule, hoeffding_rule, hoeffding_tail_count, r_of_q
from sidedbets.generators import biased_bits

bits = biased_bits(F(7, 10), 2024, 500)
print(f"sequence: {len(bits)} bits, {bits.count('0')} zeros")

# Each bettor stakes a fixed fraction so that its capital is 2^n q^z (1-q)^(n-z).
for q in (F(5, 8), F(3, 4), F(7, 8)):
    rep = growth_exponent(evaluate(hoeffding_rule(q, ZERO), bits))
    print(f"  q={q}: final log2-rate {float(rep.final):+.4f}")

# Mixing over q hedges the guess: close to the best fixed q, never broke.
rep = growth_exponent(evaluate(frequency_mixture_rule(8, ZERO), bits))
print(f"  mixture of 8: final log2-rate {float(rep.final):+.4f}")

# Few strings let the q=3/4 bettor win big: count * r^n stays below 2^n.
enc = r_of_q(F(3, 4))
print(f"r(3/4) lies in [{float(enc.lower):.6f}, {float(enc.upper):.6f}]")
for n in (8, 12):
    tc = hoeffding_tail_count(n, F(3, 4), ZERO)
    print(f"  n={n}: {tc.count} strings with more than 3n/4 zeros; bound holds: {tc.bound_ok}")
