"""Truncated Hilbert transform on segments: L2 norms versus eps, L and N, and annular integrals."""

import numpy as np

from czcurve.kernel import annular_sweep, hilbert_kernel, line_family, riesz_kernel, ubl_stability
from czcurve.space import NormedSpace

st = ubl_stability(hilbert_kernel(), (np.zeros(1), np.ones(1)), 1.0, 512, [0.004, 0.008, 0.015625, 0.05, 0.1])
print("eps        ||T||(L=1)  ||T||(L=2)  ||T||(N=1024)  change_L  change_N")
for r in st["rows"]:
    print(f"{r['eps']:<10g} {r['norm']:<11.5f} {r['norm_2L']:<11.5f} {r['norm_2N']:<14.5f} "
          f"{r['change_L']:<9.4f} {r['change_N']:.4f}")
E2 = NormedSpace.euclidean(2)
radii = [2.0 ** k for k in range(-4, 5)]
print("max |annular integral|, R_1 in R^2:", annular_sweep(riesz_kernel(1, E2), line_family(E2), radii))
