"""
Checking gradients by finite differences
========================================

Every loss is differentiated by hand. Central differences over all
parameters of a tiny network confirm the analytic gradients.
"""
import numpy as np

from tripart import finite_diff_check, init_classifier

rng = np.random.default_rng(0)
net = init_classifier([3, 6, 4], "tanh", seed=1)
x = rng.normal(size=(8, 3))
y = rng.integers(0, 4, size=8)

for kind in ("ce", "hard", "consistency", "total"):
    print(f"{kind:>12}: max relative error {finite_diff_check(net, x, y, kind, seed=2):.2e}")
