"""Finite coupling matrix A and control direction b: eigendecomposition,
Kalman rank test, moment normalisation, and the non-resonance test
mu_k - mu_l != lambda_i - lambda_j.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import NotSymmetric, RepeatedEigenvalues, ZeroMoment

DISTINCT_TOL = 1e-8
RANK_TOL = 1e-10
MOMENT_TOL = 1e-10
RESONANCE_TOL = 1e-10


@dataclass(frozen=True)
class CouplingOperator:
    entries: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.array(self.entries, dtype=float)
        b = np.array(self.b, dtype=float).ravel()
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
            raise ValueError(f"A must be a nonempty square matrix, got shape {A.shape}")
        if b.shape[0] != A.shape[0]:
            raise ValueError(f"b has length {b.shape[0]}, expected {A.shape[0]}")
        if not np.array_equal(A, A.T):
            raise NotSymmetric(f"A is not symmetric (max |A - A^T| = {np.max(np.abs(A - A.T)):.3e})")
        if not np.any(b):
            raise ValueError("control direction b must have a nonzero entry")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "entries", A)
        object.__setattr__(self, "b", b)

    @property
    def N(self):
        return self.entries.shape[0]


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray  # ascending
    phi: np.ndarray  # columns phi_l
    psi: np.ndarray  # columns psi_l, (phi_i, psi_j) = delta_ij
    moments: np.ndarray = field(default=None)  # (b, psi_l)

    @property
    def N(self):
        return len(self.eigenvalues)


def inner(u, v):
    """(u, v) = sum u_i conj(v_i)."""
    return np.sum(np.asarray(u) * np.conj(v), axis=0)


def _fix_signs(vecs):
    # largest-magnitude entry of each column made positive; ties go to the first index
    idx = np.argmax(np.abs(vecs) > np.max(np.abs(vecs), axis=0) * (1 - 1e-12), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1
    return vecs * signs


def decompose(op, distinct_tol=DISTINCT_TOL):
    A = op.entries
    lam, vecs = np.linalg.eigh(A)
    norm = max(np.linalg.norm(A, 2), 1.0)
    if len(lam) > 1:
        gaps = np.diff(lam)
        if np.min(gaps) <= distinct_tol * norm:
            i = int(np.argmin(gaps))
            raise RepeatedEigenvalues(
                f"eigenvalues {lam[i]:.12g} and {lam[i + 1]:.12g} are not distinct "
                f"(gap {gaps[i]:.3e} <= {distinct_tol:.1e} * ||A||)"
            )
    phi = _fix_signs(vecs)
    psi = phi.copy()
    return SpectralDecomposition(lam, phi, psi, inner(op.b[:, None], psi))


def controllability_matrix(op):
    cols = [op.b]
    for _ in range(op.N - 1):
        cols.append(op.entries @ cols[-1])
    return np.column_stack(cols)


def kalman_rank(op, tol=RANK_TOL):
    K = controllability_matrix(op)
    # column scaling does not change the rank but tames the Krylov growth
    norms = np.linalg.norm(K, axis=0)
    norms[norms == 0] = 1.0
    s = np.linalg.svd(K / norms, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def normalize_moments(dec, b, tol=MOMENT_TOL):
    """Rescale so that (b, psi_l) = 1 for every l, keeping (phi_i, psi_j) = delta_ij."""
    b = np.asarray(b)
    m = inner(b[:, None], dec.psi)
    scale = max(np.linalg.norm(b), 1e-300)
    for l, ml in enumerate(m, start=1):
        if abs(ml) <= tol * scale:
            raise ZeroMoment(l, abs(ml))
    phi = dec.phi * m[None, :]
    psi = dec.psi / np.conj(m)[None, :]
    return SpectralDecomposition(dec.eigenvalues, phi, psi, inner(b[:, None], psi))


def zero_moments(dec, b, tol=MOMENT_TOL):
    """1-based indices l with (b, psi_l) = 0 numerically."""
    m = inner(np.asarray(b)[:, None], dec.psi)
    scale = np.linalg.norm(b)
    return [l for l, ml in enumerate(m, start=1) if abs(ml) <= tol * scale]


def check_nonresonance(spatial_mus, lambdas, tol=RESONANCE_TOL):
    """Quadruples (k, l, i, j), 1-based, k != l, i != j, with mu_k - mu_l = lambda_i - lambda_j."""
    mu = np.asarray(spatial_mus, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    dmu = mu[:, None] - mu[None, :]
    dlam = lam[:, None] - lam[None, :]
    scale = max(np.max(np.abs(mu), initial=0.0), np.max(np.abs(lam), initial=0.0), 1.0)
    hit = np.abs(dmu[:, :, None, None] - dlam[None, None, :, :]) <= tol * scale
    k, l, i, j = np.nonzero(hit)
    keep = (k != l) & (i != j)
    return [tuple(int(v) + 1 for v in q) for q in zip(k[keep], l[keep], i[keep], j[keep])]
