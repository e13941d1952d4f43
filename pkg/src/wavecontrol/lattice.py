"""Signed frequency lattice omega_kl = sqrt(nu_k^2 + lambda_l), amplification
factors kappa_k, the C_kl state encoding and the weighted norms built on it.

Signed spatial indices k in {+-1, ..., +-K} carry omega_{-k,l} = -omega_{k,l}
and share kappa_{|k|}.
"""
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import HyperbolicityWarning, ZeroFrequency, ZeroWeight
from .spectral_bvp import spatial_mode

FREQ_TOL = 1e-12


def omega(nu_k, lambda_l, tol=FREQ_TOL):
    rad = complex(nu_k) ** 2 + np.conj(complex(lambda_l))
    if abs(rad) <= tol * max(abs(nu_k) ** 2, abs(lambda_l), 1.0):
        raise ZeroFrequency(f"nu^2 + lambda = {rad} vanishes (nu={nu_k}, lambda={lambda_l})")
    if rad.real < 0 and abs(rad.imag) <= tol * abs(rad):
        warnings.warn(
            f"nu^2 + lambda = {rad.real:.6g} < 0: imaginary frequency", HyperbolicityWarning, stacklevel=2
        )
    return complex(np.sqrt(rad))


def kappa(mode, bc):
    """Amplification with which the boundary control enters mode ``mode.n``.

    cosine family: gamma_k nu_k sigma(nu_k) (alpha2 - beta2) / eta, as printed.
    sine family: gamma_k nu_k (beta2 + (-1)^k alpha2) / eta, from the boundary
    term [u dubar/dx]_0^a with (u(0), u(a)) = (beta2 f, -alpha2 f) / eta.
    A zero value means the mode cannot be reached by this control.
    """
    if mode.family == "sine":
        return complex(mode.gamma * mode.nu * (bc.beta2 + (-1) ** mode.n * bc.alpha2) / bc.eta)
    return complex(mode.gamma * mode.nu * mode.sigma * (bc.alpha2 - bc.beta2) / bc.eta)


@dataclass(frozen=True)
class ModeSet:
    """Modes in ascending order of Re(omega)."""

    k: np.ndarray  # signed spatial index
    l: np.ndarray  # 1-based operator index
    omega: np.ndarray
    kappa: np.ndarray
    K: int
    N: int
    a: float = float(np.pi)

    def __len__(self):
        return len(self.omega)

    @property
    def unreachable(self):
        return self.kappa == 0

    def position(self, k, l):
        hit = np.nonzero((self.k == k) & (self.l == l))[0]
        if len(hit) == 0:
            raise KeyError((k, l))
        return int(hit[0])

    def to_grid(self, values):
        """Mode-ordered vector -> array (2, K, N); [0] holds +k, [1] holds -k."""
        out = np.zeros((2, self.K, self.N), dtype=complex)
        sign = (self.k < 0).astype(int)
        out[sign, np.abs(self.k) - 1, self.l - 1] = values
        return out

    def from_grid(self, grid):
        grid = np.asarray(grid)
        return grid[(self.k < 0).astype(int), np.abs(self.k) - 1, self.l - 1]

    def positive_omega(self):
        """(K, N) array of omega_kl for k > 0."""
        return self.to_grid(self.omega)[0]

    def positive_kappa(self):
        return self.to_grid(self.kappa)[0]


def build_lattice(bc, a, K, dec, family="sine"):
    if K < 1:
        raise ValueError("spatial truncation K must be >= 1")
    lam = np.asarray(dec.eigenvalues if hasattr(dec, "eigenvalues") else dec)
    ks, ls, om, ka = [], [], [], []
    for k in range(1, K + 1):
        mode = spatial_mode(bc, a, k, family)
        kap = kappa(mode, bc)
        for l, lam_l in enumerate(lam, start=1):
            try:
                w = omega(mode.nu, lam_l)
            except ZeroFrequency as exc:
                raise ZeroFrequency(f"mode (k={k}, l={l}): {exc}", k=k, l=l) from None
            ks += [k, -k]
            ls += [l, l]
            om += [w, -w]
            ka += [kap, kap]
    return modeset_from_arrays(ks, ls, om, ka, K, len(lam), a)


def modeset_from_arrays(k, l, om, ka, K, N, a=np.pi):
    k, l = np.asarray(k, dtype=int), np.asarray(l, dtype=int)
    om, ka = np.asarray(om, dtype=complex), np.asarray(ka, dtype=complex)
    order = np.lexsort((l, k, om.imag, om.real))
    return ModeSet(k[order], l[order], om[order], ka[order], int(K), int(N), float(a))


@dataclass(frozen=True)
class GapReport:
    delta: float  # min pairwise distance over all modes
    nearest: np.ndarray  # per-mode distance to the nearest other mode
    k_values: np.ndarray  # positive spatial indices
    cluster_width: np.ndarray  # max_{l,m} |omega_kl - omega_km| per k
    omega_slope: float  # log-log slope of |omega_kl| against k
    width_slope: float  # log-log slope of the cluster width against k (nan if N = 1)

    @property
    def scaled_width(self):
        """k times cluster width; tends to (lambda_max - lambda_min) / 2."""
        return self.k_values * self.cluster_width


def _nearest_distances(om):
    # modes are nearly sorted by real part; the exact pairwise scan is fine at these sizes
    n = len(om)
    if n < 2:
        return np.full(n, np.inf)
    d = np.abs(om[:, None] - om[None, :])
    np.fill_diagonal(d, np.inf)
    return d.min(axis=1)


def _slope(x, y):
    mask = (x > 0) & (y > 0)
    if mask.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[mask]), np.log(y[mask]), 1)[0])


def gap_statistics(mset, k_min=1):
    nearest = _nearest_distances(mset.omega)
    pos = mset.k > 0
    ks = np.arange(1, mset.K + 1)
    width = np.zeros(mset.K)
    for k in ks:
        w = mset.omega[mset.k == k]
        if len(w):
            width[k - 1] = np.max(np.abs(w[:, None] - w[None, :]))
    sel = pos & (mset.k >= k_min)
    absw = np.abs(mset.omega[sel])
    kk = mset.k[sel].astype(float)
    fit = ks >= k_min
    wslope = _slope(ks[fit].astype(float), width[fit]) if mset.N > 1 else float("nan")
    return GapReport(
        delta=float(np.min(nearest)) if len(nearest) else float("inf"),
        nearest=nearest,
        k_values=ks,
        cluster_width=width,
        omega_slope=_slope(kk, absw),
        width_slope=wslope,
    )


@dataclass(frozen=True)
class StateCoefficients:
    """Position / velocity coefficients a_kl, a'_kl (shape (K, N)) and the
    encoding C = i omega a + a' on signed modes, stored as (2, K, N)."""

    a: np.ndarray
    ap: np.ndarray
    C: np.ndarray

    @property
    def truncation(self):
        return self.a.shape


def encode_state(a, ap, mset):
    a = np.asarray(a, dtype=complex).reshape(mset.K, mset.N)
    ap = np.asarray(ap, dtype=complex).reshape(mset.K, mset.N)
    w = mset.positive_omega()
    if np.any(w == 0):
        raise ZeroFrequency("omega_kl = 0 in the lattice")
    C = np.stack([1j * w * a + ap, -1j * w * a + ap])
    return StateCoefficients(a, ap, C)


def decode_state(C, mset):
    C = np.asarray(C, dtype=complex).reshape(2, mset.K, mset.N)
    w = mset.positive_omega()
    if np.any(w == 0):
        raise ZeroFrequency("omega_kl = 0 in the lattice")
    a = (C[0] - C[1]) / (2j * w)
    ap = (C[0] + C[1]) / 2
    return StateCoefficients(a, ap, C)


def wr_norm(coeffs, weights, r):
    c = np.asarray(coeffs)
    w = np.abs(np.asarray(weights, dtype=complex))
    if r < 0 and np.any(w == 0):
        raise ZeroWeight("zero weight with negative order r")
    return float(np.sqrt(np.sum(np.abs(c) ** 2 * w ** float(r))))


def state_norm(C):
    """(sum over signed k and l of |C_kl|^2 / k^2) ** 0.5 for C of shape (2, K, N)."""
    C = np.asarray(C)
    K = C.shape[-2]
    k = np.arange(1, K + 1, dtype=float)[:, None]
    return float(np.sqrt(np.sum(np.abs(C) ** 2 / k ** 2)))
