"""Mittag-Leffler relaxation E_a(-t^a) for a few orders, next to exp(-t).

Smaller orders decay fast at first and then only algebraically, like
t^-a / Gamma(1 - a).
"""

from __future__ import annotations

import math

import numpy as np

from tfdinv import mittag_leffler

t = np.array([0.01, 0.1, 1.0, 10.0, 100.0, 1000.0])
print(f"{'t':>8}" + "".join(f"{'a=' + str(a):>14}" for a in (0.3, 0.5, 0.8)) + f"{'exp(-t)':>14}")
for ti in t:
    row = [mittag_leffler(a, 1.0, -(ti**a)) for a in (0.3, 0.5, 0.8)]
    print(f"{ti:8.2f}" + "".join(f"{v:14.6e}" for v in row) + f"{math.exp(-ti):14.6e}")

print("\nlarge-t check  t^a E_a(-t^a) Gamma(1 - a) -> 1:")
for a in (0.3, 0.5, 0.8):
    big = 1e6
    print(f"  a={a}: {big**a * mittag_leffler(a, 1.0, -(big**a)) * math.gamma(1 - a):.6f}")
