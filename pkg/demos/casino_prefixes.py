"""Build prefixes that a scripted opponent cannot profit on, and watch it fight back.

The opponent repeatedly pumps money onto the deepest prefix built so far.
Each time the prefix's capital passes its bound, the construction drops it
and picks the next balanced, low-capital extension to the right.

Run: python demos/casino_prefixes.py
"""
from fractions import Fraction as F

from sidedbets import Relaxed, f_of_eps, find_special_extension, run_construction, schedule
from sidedbets import MartingaleTable
from sidedbets.generators import pumping_opponent

# Balanced extensions: neither symbol more than (1+eps)/2 of the window.
flat = MartingaleTable.constant(8, 1)
print("leftmost balanced extension of length 4:", find_special_extension("", 4, F(1, 2), flat))
print("gap that always admits one at eps=1/2:", f_of_eps(F(1, 2)))

sched = schedule(3, Relaxed(F(1, 4), F(7, 8), (4, 6, 8)))
print("prefix lengths:", [sched.s(n) for n in range(1, 4)])

opponent = pumping_opponent(sched, 10)
trace = run_construction(opponent, sched, len(opponent) - 1)

for rec in trace.history:
    if rec.action in ("define", "undefine"):
        print(f"stage {rec.stage:3}: {rec.action:8} level {rec.n}  {rec.sigma}")
print("final prefixes:", trace.final_prefixes)
print("description weight:", trace.ledger.weight, "of budget", trace.ledger.budget)
for name, ok in trace.invariants().items():
    print(f"  {name}: {'ok' if ok else 'VIOLATED'}")
