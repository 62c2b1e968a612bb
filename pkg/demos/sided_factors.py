"""Split a betting table into a part that only backs 0s and a part that only backs 1s.

Run: python demos/sided_factors.py
"""
from fractions import Fraction as F

from sidedbets import ZERO, MartingaleTable, is_one_sided, is_zero_sided, strings_upto, validate_martingale
from sidedbets.constructions import product_decompose, strictify

# A two-round gambler: backs 0 first, then flips its preference after a 0.
m = MartingaleTable.from_mapping({
    "": 1, "0": F(3, 2), "1": F(1, 2),
    "00": 1, "01": 2, "10": F(1, 2), "11": F(1, 2),
})
print("fair:", validate_martingale(m).ok)

zero_part, one_part = product_decompose(m)
print(f"{'node':>5} {'M':>6} {'0-part':>7} {'1-part':>7}")
for s in strings_upto(m.depth):
    print(f"{s or 'λ':>5} {str(m[s]):>6} {str(zero_part[s]):>7} {str(one_part[s]):>7}")
print("0-part only backs 0:", is_zero_sided(zero_part))
print("1-part only backs 1:", is_one_sided(one_part))

# The 0-part sits still after "1"; adding a small 0-backing bettor makes it bet everywhere.
strict = strictify(zero_part, ZERO)
print("strictly 0-sided:", is_zero_sided(strict, strict=True), "root", strict[""])
