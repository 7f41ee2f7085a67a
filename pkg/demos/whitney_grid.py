"""Whitney decomposition of a planar grid minus a disc: pieces per scale and overlap counts."""

from collections import Counter

import numpy as np

from czcurve.space import DiscreteMeasure, FiniteMetricSpace
from czcurve.whitney import christ_cubes, classify_doubling, doubling_reference, whitney_decompose

side = 32
xs = np.arange(side, dtype=float) / side
pts = np.array([[a, b] for a in xs for b in xs])
M = FiniteMetricSpace(coords=pts)
omega = np.linalg.norm(pts - 0.5, axis=1) >= 0.2

tree = christ_cubes(M)
W = whitney_decompose(tree, omega)
print(f"{len(M)} points, levels {tree.k_min}..{tree.k_max}, {len(W.pieces)} pieces, all properties: {W.ok}")
for k, n in sorted(Counter(p.k for p in W.pieces).items()):
    print(f"  scale 8^-{k}: {n} pieces")
ref = doubling_reference(W, M)
print(f"pointwise overlap {W.overlap_pointwise}, ball intersections {W.overlap_intersections}, "
      f"doubling constant {ref['C_D']}")
cl = classify_doubling(W, DiscreteMeasure(M, np.full(len(M), 1.0 / len(M))))
print(f"b = {cl.b:g}: {len(cl.I1)} doubling pieces carry {cl.mass_I1:.4f} of nu(Omega) = {cl.mass_omega:.4f}")
