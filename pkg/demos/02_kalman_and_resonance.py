"""Finite-dimensional hypotheses on the coupling A and the control direction b.

Kalman rank, zero moments (b, psi_l), and the non-resonance test
mu_k - mu_l != lambda_i - lambda_j.
"""
import numpy as np

from wavecontrol import coupling

cases = {
    "diag(1,2), b=(1,1)": (np.diag([1.0, 2.0]), [1.0, 1.0]),
    "diag(1,2), b=(0,1)": (np.diag([1.0, 2.0]), [0.0, 1.0]),
    "diag(0,3), b=(1,1)": (np.diag([0.0, 3.0]), [1.0, 1.0]),
}
mus = [k * k for k in range(1, 9)]  # a = pi

for name, (A, b) in cases.items():
    op = coupling.CouplingOperator(A, b)
    dec = coupling.decompose(op)
    print(name)
    print("  rank:", coupling.kalman_rank(op), "of", op.N)
    print("  zero moments:", coupling.zero_moments(dec, op.b))
    print("  resonances (k, l, i, j):", coupling.check_nonresonance(mus, dec.eigenvalues)[:4])

# rescaling so that (b, psi_l) = 1
op = coupling.CouplingOperator(np.diag([1.0, 2.0]), [2.0, 3.0])
dec = coupling.normalize_moments(coupling.decompose(op), op.b)
print("\nnormalised psi:\n", dec.psi)
print("normalised phi:\n", dec.phi)
print("moments:", dec.moments)
