"""The frequencies omega_kl = sqrt(nu_k^2 + lambda_l) cluster by spatial index.

Within a cluster the spread shrinks like (lambda_max - lambda_min) / (2k),
which is what makes the exponential family hard to invert at high k.
"""
import numpy as np

from wavecontrol import lattice, spectral_bvp as sb

bc = sb.build_boundary(alpha1=1.0, alpha2=0.3, beta1=0.5, beta2=1.0)
lams = np.array([0.3, 0.55])
mset = lattice.build_lattice(bc, np.pi, 256, lams)
rep = lattice.gap_statistics(mset)

print("modes:", len(mset), " delta(Lambda):", rep.delta)
print("log-log slope of |omega| against k:", round(rep.omega_slope, 4))
print("log-log slope of the cluster width:", round(rep.width_slope, 4))
for k in (1, 2, 4, 16, 64, 256):
    print(f"k = {k:3d}  width = {rep.cluster_width[k - 1]:.3e}  k * width = {rep.scaled_width[k - 1]:.6f}")
print("limit (lambda2 - lambda1) / 2 =", (lams[1] - lams[0]) / 2)
