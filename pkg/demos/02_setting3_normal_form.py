"""Equivariant functions on a space with a finite rotation action.

The operator mixes a linear orbit and a conjugated orbit.  Conjugating
pointwise would break equivariance, so the conjugated branch rotates the
conjugated base value back around the orbit.  The reconstruction engine then
recovers the normal form: which orbits are linear and the rotation offsets.
"""

import numpy as np

from tingley_lab import reconstruct
from tingley_lab import tbundle as tb
from tingley_lab.isometry_factory import WcoSpec3, build_wco_3

X = tb.FiniteTBundle(8, ("a", "b"))
spec = WcoSpec3(X, X, frozenset({"a"}), {"a": ("b", 3), "b": ("a", 6)})
T, oracle = build_wco_3(spec)

f = tb.EquivariantFunction(X, [0.6 + 0.2j, -0.1 + 0.9j])
out = tb.EquivariantFunction(X, T(f.base_values))
print("input base values :", np.round(f.base_values, 3))
print("output base values:", np.round(out.base_values, 3))
print("output is equivariant:", tb.is_equivariant(X, out.total_values()))

report = reconstruct(oracle)
print("\nsigma(t, 1):", np.round(report.table.sigma1, 3), "orientation:", report.table.orientation)
print("normal form:", report.spec.to_json())
print("matches the hidden operator:", report.spec.same_as(spec))

# triple products are carried to triple products
rng = np.random.default_rng(0)
a, b, c = (rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(3))
gap = np.max(np.abs(T(a * np.conj(b) * c) - T(a) * np.conj(T(b)) * T(c)))
print("triple product defect:", gap)
