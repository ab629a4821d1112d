"""
===================================
Energy change from a single strip
===================================

Inserting a strip changes the smoothing energy by exactly
``alpha (kappa - 1) / 2 * int_strip grad u_eps . grad u``, where ``u`` and
``u_eps`` are the smoothed images before and after.  With the bilinear
Galerkin discretization the identity holds to solver precision.
"""

import numpy as np

from stripedge import Image, Params
from stripedge.geometry import Strip
from stripedge.validation import energy_identity_terms, random_identity_trials

data = np.zeros((64, 64))
data[:, 32:] = 1.0
step = Image(data)

#####################################################
# One strip on the jump
# ---------------------

strip = Strip((31.5, 30.5), (0.0, 1.0), 3.0, 0.5)
lhs, rhs, _ = energy_identity_terms(step, [], strip, alpha=8.0, kappa=0.1,
                                    intensity_scale=255.0)
print(f"J(u_eps) - J(u) = {lhs:.10e}")
print(f"strip integral  = {rhs:.10e}")

#####################################################
# Random strips
# -------------
#
# Every other trial already has one distant strip in the edge set.

trials = random_identity_trials(step, Params(), n_trials=10, seed=1, intensity_scale=255.0)
for t in trials:
    print(f"{t.trial:2d}  K={len(t.edge_strips)}  residual {t.residual:.1e}")
