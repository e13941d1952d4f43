"""Eigenstructure of -d^2/dx^2 on (0, a) under the two-point nonlocal conditions

    alpha1 u(0) + beta1 u(a) = 0,    alpha2 u(0) + beta2 u(a) = 0.

Two eigenfunction families are provided:

``"cosine"``
    u_n = cos(nu_n x) + sigma(nu_n) sin(nu_n x), the closed form printed with
    the model. It does not vanish at x = 0, so for eta != 0 it does not
    satisfy the conditions above; :func:`bc_residual` and
    :func:`biorthogonality_gram` expose this.
``"sine"``
    u_n = sin(nu_n x). When eta != 0 the two conditions are equivalent to
    u(0) = u(a) = 0, and this is the family that actually diagonalises the
    operator. The synthesis pipeline uses it by default.

Both families share nu_n = n pi / a and mu_n = nu_n ** 2.
"""
from dataclasses import dataclass

import numpy as np

from ._quadrature import gauss_legendre_panels
from .errors import DegenerateBoundary, ParityDegeneracy

FAMILIES = ("cosine", "sine")
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class BoundaryCoefficients:
    alpha1: complex
    beta1: complex
    alpha2: complex
    beta2: complex
    eta: complex

    @property
    def matrix(self):
        """[[alpha1, beta1], [alpha2, beta2]], acting on (u(0), u(a))."""
        return np.array([[self.alpha1, self.beta1], [self.alpha2, self.beta2]], dtype=complex)

    @property
    def scale(self):
        return max(abs(self.alpha1), abs(self.beta1), abs(self.alpha2), abs(self.beta2))

    def endpoint_values(self, forcing=1.0):
        """Values (u(0), u(a)) forced by ``alpha1 u(0) + beta1 u(a) = forcing`` and
        ``alpha2 u(0) + beta2 u(a) = 0``."""
        return self.beta2 * forcing / self.eta, -self.alpha2 * forcing / self.eta


@dataclass(frozen=True)
class SpatialMode:
    n: int
    a: float
    nu: float
    mu: float
    sigma: complex  # nan for the sine family
    gamma: complex
    gamma_seed: complex
    family: str = "cosine"

    @property
    def coefficients(self):
        """(p, q) with u_n(x) = p cos(nu x) + q sin(nu x)."""
        if self.family == "sine":
            return 0.0, 1.0
        return 1.0, self.sigma


def build_boundary(alpha1, alpha2, beta1, beta2, tol=DEGENERACY_TOL):
    alpha1, alpha2, beta1, beta2 = (complex(v) for v in (alpha1, alpha2, beta1, beta2))
    eta = alpha1 * beta2 - alpha2 * beta1
    scale = max(abs(alpha1), abs(alpha2), abs(beta1), abs(beta2))
    if scale == 0 or abs(eta) <= tol * scale ** 2:
        raise DegenerateBoundary(
            f"eta = alpha1*beta2 - alpha2*beta1 = {eta} vanishes: the two boundary "
            "conditions are linearly dependent"
        )
    return BoundaryCoefficients(alpha1, beta1, alpha2, beta2, eta)


def sigma_value(bc, n, tol=DEGENERACY_TOL):
    sign = (-1) ** n
    den = bc.alpha1 + bc.beta1 * sign
    if abs(den) <= tol * bc.scale:
        raise ParityDegeneracy(f"alpha1 + beta1*(-1)^{n} = {den} vanishes")
    return -(bc.alpha2 + bc.beta2 * sign) / den


def _norm_sq(n, a, p, q):
    # int_0^a |p cos + q sin|^2 dx by Gauss-Legendre; closed form is a(|p|^2+|q|^2)/2
    nodes, weights = gauss_legendre_panels(0.0, a, panels=max(2 * n, 4), order=16)
    nu = n * np.pi / a
    vals = p * np.cos(nu * nodes) + q * np.sin(nu * nodes)
    return float(np.sum(weights * np.abs(vals) ** 2))


def make_mode(n, a, sigma=0.0, family="cosine"):
    """Build a mode directly from ``sigma``, bypassing boundary coefficients.

    ``gamma`` is renormalised by quadrature so that int u_n conj(ubar_n) = 1;
    ``gamma_seed`` keeps the closed form a/2 (1 + sigma^2).
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if n < 1:
        raise ValueError("mode index n must be a positive integer")
    if a <= 0:
        raise ValueError("interval length a must be positive")
    nu = n * np.pi / a
    if family == "sine":
        sigma = complex("nan")
        seed = a / 2
        norm_sq = _norm_sq(n, a, 0.0, 1.0)
    else:
        sigma = complex(sigma)
        seed = a / 2 * (1 + sigma ** 2)
        norm_sq = _norm_sq(n, a, 1.0, sigma)
    return SpatialMode(
        n=int(n), a=float(a), nu=nu, mu=nu * nu, sigma=sigma,
        gamma=complex(1.0 / norm_sq), gamma_seed=complex(seed), family=family,
    )


def spatial_mode(bc, a, n, family="cosine"):
    if family == "sine":
        return make_mode(n, a, family="sine")
    return make_mode(n, a, sigma_value(bc, n), family="cosine")


def spatial_modes(bc, a, n_max, family="cosine"):
    return [spatial_mode(bc, a, n, family) for n in range(1, n_max + 1)]


def eval_eigenfunction(mode, x, deriv=0):
    """u_n(x), or its ``deriv``-th derivative (0, 1 or 2)."""
    x = np.asarray(x, dtype=float)
    p, q = mode.coefficients
    c, s = np.cos(mode.nu * x), np.sin(mode.nu * x)
    if deriv == 0:
        out = p * c + q * s
    elif deriv == 1:
        out = mode.nu * (-p * s + q * c)
    elif deriv == 2:
        out = -mode.mu * (p * c + q * s)
    else:
        raise ValueError("deriv must be 0, 1 or 2")
    return out.astype(complex)


def eval_biorthogonal(mode, x):
    return mode.gamma * eval_eigenfunction(mode, x)


def modes_gram(modes, a, quad_points=None):
    """Matrix of int_0^a u_k conj(ubar_n) dx over the given modes."""
    n_max = max(m.n for m in modes)
    order = 16
    if quad_points is None:
        quad_points = 64 * n_max
    panels = max(int(np.ceil(quad_points / order)), n_max)
    x, w = gauss_legendre_panels(0.0, a, panels, order)
    U = np.array([eval_eigenfunction(m, x) for m in modes])
    Ubar = np.array([eval_biorthogonal(m, x) for m in modes])
    return (U * w) @ Ubar.conj().T


def biorthogonality_gram(bc, a, n_max, quad_points=None, family="cosine"):
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return modes_gram(spatial_modes(bc, a, n_max, family), a, quad_points)


def gram_offdiagonal(G):
    """Largest off-diagonal magnitude, the failure measure of biorthogonality."""
    G = np.asarray(G)
    if G.shape[0] < 2:
        return 0.0
    return float(np.max(np.abs(G - np.diag(np.diag(G)))))


def orthogonality_condition_residual(bc, n, k):
    # the ratio is -sigma, so this is k sigma_k - n sigma_n
    return n * -sigma_value(bc, n) - k * -sigma_value(bc, k)


def bc_residual(mode, bc):
    u0 = complex(eval_eigenfunction(mode, 0.0))
    ua = complex(eval_eigenfunction(mode, mode.a))
    return bc.alpha1 * u0 + bc.beta1 * ua, bc.alpha2 * u0 + bc.beta2 * ua
