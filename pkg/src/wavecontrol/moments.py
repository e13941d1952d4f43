"""Moment problem over the exponential family e_kl(t) = exp(i omega_kl t) on (0, T).

Inner product convention: <f, g> = int_0^T f(t) conj(g(t)) dt.  With
f = sum_n c_n e_n the moments are <f, e_m> = sum_n G[n, m] c_n, where
G[r, c] = <e_r, e_c>, so the synthesis system is G^T c = alpha.

Clustered exponents (same spatial index k) are handled by switching to the
exponential divided differences [omega_k1, ..., omega_kl] exp(i . t), which
span the same space but keep the Gram matrix well conditioned.
"""
import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.linalg
from scipy.integrate import romb

from ._quadrature import gauss_legendre_panels, oscillatory_panels
from .errors import ClusterWarning, IllConditioned, InconsistentTargets, UnreachableMode, ZeroFrequency
from .lattice import encode_state

CLUSTER_REL = 1e-3
COND_CAP = 1e12
SOLVER_TOL = 1e-8
SAMPLES_PER_PERIOD = 64


@dataclass(frozen=True)
class ExponentialFamily:
    frequencies: np.ndarray
    T: float
    labels: tuple = None  # (k, l) per member

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.frequencies, dtype=complex))
        if self.T <= 0:
            raise ValueError("horizon T must be positive")
        if len(w) == 0:
            raise ValueError("exponential family needs at least one member")
        if len(w) > 1:
            d = np.abs(w[:, None] - w[None, :])
            np.fill_diagonal(d, np.inf)
            if np.min(d) <= 1e-15 * max(np.max(np.abs(w)), 1.0):
                i, j = np.unravel_index(np.argmin(d), d.shape)
                raise ValueError(f"duplicate frequencies {w[i]} and {w[j]} in exponential family")
        w.setflags(write=False)
        object.__setattr__(self, "frequencies", w)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(tuple(int(v) for v in lab) for lab in self.labels))

    def __len__(self):
        return len(self.frequencies)

    def evaluate(self, t):
        """Members sampled at ``t``: array (len(family), len(t))."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.exp(1j * self.frequencies[:, None] * t[None, :])

    def min_spacing(self):
        w = self.frequencies
        if len(w) < 2:
            return float("inf")
        d = np.abs(w[:, None] - w[None, :])
        np.fill_diagonal(d, np.inf)
        return float(np.min(d))


def family_from_modes(mset, T):
    return ExponentialFamily(mset.omega, T, tuple(zip(mset.k.tolist(), mset.l.tolist())))


def _window_terms(p, T):
    """sin(pi t/T)^(2p) = sum_m coef_m exp(i shift_m t)."""
    if p == 0:
        return np.array([1.0]), np.array([0.0])
    m = np.arange(2 * p + 1)
    coef = (-1) ** p * 4.0 ** (-p) * np.array([comb(2 * p, int(j)) for j in m]) * (-1.0) ** m
    shift = (2 * p - 2 * m) * np.pi / T
    return coef, shift


def window(t, T, p):
    if p == 0:
        return np.ones_like(np.asarray(t, dtype=float))
    return np.sin(np.pi * np.asarray(t, dtype=float) / T) ** (2 * p)


def _E(z, T):
    # int_0^T exp(i z t) dt, stable as z -> 0
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) * T < 1e-8
    zs = np.where(small, 1.0, z)
    out = np.expm1(1j * zs * T) / (1j * zs)
    return np.where(small, T + 0.5j * z * T * T, out)


def gram(family, window_order=0, warn=True):
    """G[r, c] = int_0^T w(t) e_r conj(e_c) dt, closed form; w = 1 unless ``window_order`` > 0."""
    w = family.frequencies
    diff = w[:, None] - np.conj(w)[None, :]
    coef, shift = _window_terms(window_order, family.T)
    G = sum(cf * _E(diff + sh, family.T) for cf, sh in zip(coef, shift))
    G = 0.5 * (G + G.conj().T)
    if warn and len(w) > 1:
        mean = float(np.mean(np.abs(w)))
        if family.min_spacing() < CLUSTER_REL * mean:
            warnings.warn(
                f"frequency cluster: min spacing {family.min_spacing():.3e} < "
                f"{CLUSTER_REL:g} * mean|omega|; Gram condition {np.linalg.cond(G):.3e}",
                ClusterWarning,
                stacklevel=2,
            )
    return G


def gram_condition(G):
    return float(np.linalg.cond(G))


# --- exponential divided differences -------------------------------------------------


def exp_divided_differences(nodes, t):
    """Rows l = 0..d-1 hold [z_1, ..., z_{l+1}] exp(i z t) at each t.

    Uses the first row of exp(i t Z), Z upper bidiagonal with the nodes on the
    diagonal and ones above it, so repeated or nearly repeated nodes need no
    special casing.  The mean node is factored out as an exact phase and the
    remaining small matrix is exponentiated by Taylor series with scaling and
    squaring, vectorised over t.
    """
    z = np.atleast_1d(np.asarray(nodes, dtype=complex))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    d = len(z)
    if d == 1:
        return np.exp(1j * z[0] * t)[None, :]
    centre = np.mean(z)
    Z = np.diag(z - centre) + np.diag(np.ones(d - 1), 1)
    X = 1j * t[:, None, None] * Z[None, :, :]
    bound = float(np.max(np.abs(t), initial=0.0)) * np.max(np.sum(np.abs(Z), axis=0))
    squarings = max(0, int(np.ceil(np.log2(max(bound, 1e-300) / 0.25))))
    X = X / 2.0 ** squarings
    eye = np.eye(d)
    E = eye + X / _TAYLOR_DEGREE
    for j in range(_TAYLOR_DEGREE - 1, 0, -1):
        E = eye + (X @ E) / j
    for _ in range(squarings):
        E = E @ E
    return (E[:, 0, :] * np.exp(1j * centre * t)[:, None]).T


_TAYLOR_DEGREE = 16


def edd_family(cluster):
    """One callable per member: t -> [omega_1, ..., omega_l] exp(i omega t)."""
    nodes = np.atleast_1d(np.asarray(cluster, dtype=complex))

    def member(l):
        def f(t):
            return exp_divided_differences(nodes[: l + 1], t)[l]
        return f

    return [member(l) for l in range(len(nodes))]


def divided_difference_weights(nodes):
    """L with [z_1..z_a] g = sum_j L[a, j] g(z_j) for distinct nodes."""
    z = np.asarray(nodes, dtype=complex)
    d = len(z)
    L = np.zeros((d, d), dtype=complex)
    for a in range(d):
        for j in range(a + 1):
            others = [z[j] - z[n] for n in range(a + 1) if n != j]
            L[a, j] = 1.0 / np.prod(others) if others else 1.0
    return L


def clusters_by_index(family):
    """Member positions grouped by signed spatial index, each ordered by l."""
    if family.labels is None:
        return [np.array([i]) for i in range(len(family))]
    groups = {}
    for pos, (k, l) in enumerate(family.labels):
        groups.setdefault(k, []).append((l, pos))
    return [np.array([p for _, p in sorted(v)]) for _, v in sorted(groups.items())]


# --- problem and solution containers --------------------------------------------------


@dataclass
class MomentProblem:
    targets: np.ndarray  # alpha_kl in family order
    family: ExponentialFamily
    normalizer: np.ndarray = None  # C_kl(T) = normalizer * alpha_kl
    target_C: np.ndarray = None  # required C(T), shape (2, K, N)
    mset: object = None
    edd_targets: np.ndarray = None
    edd_growth: float = float("nan")

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=complex)
        if self.edd_targets is None:
            self.edd_targets, self.edd_growth = _edd_targets(self.family, self.targets)


def _edd_targets(family, targets):
    tilde = np.array(targets, dtype=complex)
    growth = 0.0
    for idx in clusters_by_index(family):
        L = divided_difference_weights(family.frequencies[idx])
        tilde[idx] = np.conj(L) @ targets[idx]
        if family.labels is not None and len(idx) > 1:
            k = abs(family.labels[idx[0]][0])
            for a in range(1, len(idx)):
                ref = np.max(np.abs(targets[idx[: a + 1]]))
                if ref > 0:
                    growth = max(growth, abs(tilde[idx[a]]) / (k ** a * ref))
    return tilde, growth


@dataclass
class ControlSignal:
    family: ExponentialFamily
    coefficients: np.ndarray
    basis: str = "direct"  # or "edd"
    window_order: int = 0
    clusters: list = None
    samples_per_period: int = SAMPLES_PER_PERIOD
    residual: float = float("nan")
    condition: float = float("nan")
    t: np.ndarray = field(default=None, repr=False)
    values: np.ndarray = field(default=None, repr=False)
    _norm: float = field(default=None, repr=False)

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.basis == "edd" and self.clusters is None:
            self.clusters = clusters_by_index(self.family)
        if self.t is None:
            self.t = uniform_grid(self.family, self.samples_per_period)
        if self.values is None:
            self.values = self.evaluate(self.t)

    @property
    def T(self):
        return self.family.T

    def basis_functions(self, t):
        """Members of the basis actually used, sampled at ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.basis == "direct":
            B = self.family.evaluate(t)
        else:
            B = np.zeros((len(self.family), len(t)), dtype=complex)
            for idx in self.clusters:
                B[idx] = exp_divided_differences(self.family.frequencies[idx], t)
        return B * window(t, self.T, self.window_order)[None, :]

    def evaluate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros(len(t), dtype=complex)
        chunk = 4096
        for s in range(0, len(t), chunk):
            out[s:s + chunk] = self.coefficients @ self.basis_functions(t[s:s + chunk])
        return out

    def __call__(self, t):
        return self.evaluate(t)

    @property
    def l2_norm(self):
        if self._norm is None:
            x, w = _time_quadrature(self.family)
            self._norm = float(np.sqrt(np.sum(w * np.abs(self.evaluate(x)) ** 2)))
        return self._norm

    def moments(self):
        """<f, e_kl> for every family member, by Gauss-Legendre on the coefficient path."""
        x, w = _time_quadrature(self.family)
        return (self.evaluate(x) * w) @ self.family.evaluate(x).conj().T


def zero_control(family, samples_per_period=SAMPLES_PER_PERIOD):
    return ControlSignal(family, np.zeros(len(family)), samples_per_period=samples_per_period)


def uniform_grid(family, samples_per_period=SAMPLES_PER_PERIOD):
    """2^m + 1 uniform points on [0, T] with at least the requested density."""
    wmax = max(float(np.max(np.abs(family.frequencies))), 2 * np.pi / family.T)
    needed = samples_per_period * wmax * family.T / (2 * np.pi)
    m = max(int(np.ceil(np.log2(max(needed, 2)))), 4)
    return np.linspace(0.0, family.T, 2 ** m + 1)


def _time_quadrature(family, extra=0.0):
    wmax = float(np.max(np.abs(family.frequencies))) + extra + 4 * np.pi / family.T
    panels = oscillatory_panels(2 * wmax, family.T, minimum=8)
    return gauss_legendre_panels(0.0, family.T, panels, order=20)


# --- operations ------------------------------------------------------------------------


def target_moments(initial, final, mset, T, normalizer="kappa"):
    """Moment targets steering ``initial`` to ``final`` at time T.

    The free evolution of ``initial`` is removed first (control from zero).
    ``normalizer="kappa"`` divides C_kl(T) by kappa_k exp(i omega_kl T), the
    factor produced by the Duhamel formula; ``"index"`` uses (2k/pi) exp(i
    omega_kl T) in its place, which steers correctly only where
    kappa_k = 2k/pi.
    """
    from .simulator import free_evolution

    free = free_evolution(initial, mset, T)
    diff = encode_state(final.a - free.a, final.ap - free.ap, mset)
    C = mset.from_grid(diff.C)
    if normalizer == "kappa":
        scale = mset.kappa
        bad = (scale == 0) & (np.abs(C) > 0)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise UnreachableMode(
                f"mode (k={mset.k[i]}, l={mset.l[i]}) has kappa = 0 but a nonzero target"
            )
    elif normalizer == "index":
        scale = 2 * np.abs(mset.k) / np.pi
    else:
        raise ValueError(f"unknown normalizer {normalizer!r}")
    if np.any(mset.omega == 0):
        raise ZeroFrequency("omega_kl = 0 in the lattice")
    norm = scale * np.exp(1j * mset.omega * T)
    alpha = np.divide(C, norm, out=np.zeros_like(C), where=norm != 0)
    return MomentProblem(alpha, family_from_modes(mset, T), norm, diff.C, mset)


def _edd_system(family, clusters, window_order):
    x, w = _time_quadrature(family)
    B = np.zeros((len(family), len(x)), dtype=complex)
    for idx in clusters:
        B[idx] = exp_divided_differences(family.frequencies[idx], x)
    Bw = B * (w * window(x, family.T, window_order))[None, :]
    G = Bw @ B.conj().T
    G = 0.5 * (G + G.conj().T)
    M = Bw @ family.evaluate(x).conj().T  # <btilde_a, e_j>
    return G, M


def solve(problem, mode="direct", ridge=0.0, cond_cap=COND_CAP, tol=SOLVER_TOL,
          window_order=0, samples_per_period=SAMPLES_PER_PERIOD):
    """Minimal-norm control with <f, e_kl> = alpha_kl for every family member.

    Minimal in L^2(0, T) when ``window_order`` = 0; otherwise minimal in the
    weighted norm int |f|^2 / w with w = sin(pi t / T)^(2 window_order), which
    makes f vanish to that order at both ends.
    """
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    fam = problem.family
    alpha = problem.targets
    if mode == "direct":
        G = gram(fam, window_order, warn=False)
        rhs = alpha
        clusters = None
    elif mode == "edd":
        clusters = clusters_by_index(fam)
        G, M = _edd_system(fam, clusters, window_order)
        rhs = problem.edd_targets
    else:
        raise ValueError(f"unknown solver mode {mode!r}")
    cond = gram_condition(G)
    if not np.isfinite(cond) or cond > cond_cap:
        raise IllConditioned(
            f"Gram condition number {cond:.3e} exceeds cap {cond_cap:.1e}; "
            "use mode='edd' or a longer horizon T"
        )
    S = G.T + ridge * np.eye(len(fam))
    if np.all(rhs == 0):
        c = np.zeros(len(fam), dtype=complex)
    else:
        c = scipy.linalg.solve(S, rhs)
    got = G.T @ c if mode == "direct" else M.T @ c
    residual = float(np.max(np.abs(got - alpha)))
    scale = max(float(np.max(np.abs(alpha))), 1e-300)
    if ridge == 0 and residual > tol * max(scale, 1.0):
        raise InconsistentTargets(f"moment residual {residual:.3e} exceeds tolerance {tol:.1e}")
    return ControlSignal(fam, c, basis=mode, window_order=window_order, clusters=clusters,
                         samples_per_period=samples_per_period, residual=residual, condition=cond)


def moment_residual(f, family, targets):
    """max |<f, e_kl> - alpha_kl| by Romberg quadrature of the stored samples."""
    t, v = f.t, f.values
    dt = t[1] - t[0]
    E = family.evaluate(t)
    vals = np.array([romb(v * np.conj(e), dx=dt) for e in E])
    return float(np.max(np.abs(vals - np.asarray(targets))))
