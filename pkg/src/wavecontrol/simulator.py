"""Forward solvers for the truncated system.

Per-mode dynamics are a'' + omega^2 a = kappa f, integrated exactly through
the Duhamel formulas; the spatial field is synthesised from the series
u = sum a_kl u_k(x) phi_l.  :func:`fd_oracle` is an independent leapfrog
discretisation of u_tt - u_xx + A u = 0 with the boundary conditions imposed
directly, used as a second opinion on everything above.
"""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.linalg import solve_banded

from .errors import UnstableGrid, ZeroFrequency
from .lattice import StateCoefficients, encode_state, state_norm
from .spectral_bvp import eval_biorthogonal, eval_eigenfunction


@dataclass(frozen=True)
class SeriesSolution:
    t: np.ndarray
    a: np.ndarray  # (nt, K, N)
    ap: np.ndarray  # (nt, K, N)

    @property
    def truncation(self):
        return self.a.shape[1:]

    def state(self, i=-1, mset=None):
        if mset is None:
            return StateCoefficients(self.a[i], self.ap[i], None)
        return encode_state(self.a[i], self.ap[i], mset)


def _cumsimpson(y, t, axis=0):
    # scipy's cumulative_simpson drops imaginary parts
    kw = dict(x=t, axis=axis, initial=0)
    return cumulative_simpson(y.real, **kw) + 1j * cumulative_simpson(y.imag, **kw)


def _sample(f, tgrid):
    if callable(f):
        return np.asarray(f(tgrid), dtype=complex)
    f = np.asarray(f, dtype=complex)
    if f.shape != tgrid.shape:
        raise ValueError("sampled control must align with the time grid")
    return f


def duhamel(f, omega, kappa, tgrid):
    """(a, a') of a'' + omega^2 a = kappa f with zero initial data, on ``tgrid``.

    Cumulative Simpson quadrature of f(s) exp(-+ i omega s); ``tgrid`` must be
    uniform and start at 0.
    """
    t = np.asarray(tgrid, dtype=float)
    if omega == 0:
        raise ZeroFrequency("duhamel needs omega != 0")
    fs = _sample(f, t)
    if kappa == 0 or not np.any(fs):
        z = np.zeros(len(t), dtype=complex)
        return z, z.copy()
    Cp = kappa * np.exp(1j * omega * t) * _cumsimpson(fs * np.exp(-1j * omega * t), t)
    Cm = kappa * np.exp(-1j * omega * t) * _cumsimpson(fs * np.exp(1j * omega * t), t)
    return (Cp - Cm) / (2j * omega), (Cp + Cm) / 2


def duhamel_modes(f, mset, tgrid):
    """Forced response of every retained mode: SeriesSolution with (nt, K, N) arrays."""
    t = np.asarray(tgrid, dtype=float)
    fs = _sample(f, t)
    w = mset.positive_omega()
    kap = mset.positive_kappa()
    if np.any(w == 0):
        raise ZeroFrequency("omega_kl = 0 in the lattice")
    ph = np.exp(1j * w[None] * t[:, None, None])
    Ip = _cumsimpson(fs[:, None, None] / ph, t)
    Im = _cumsimpson(fs[:, None, None] * ph, t)
    Cp = kap * ph * Ip
    Cm = kap / ph * Im
    return SeriesSolution(t, (Cp - Cm) / (2j * w), (Cp + Cm) / 2)


def free_evolution(state0, mset, t):
    w = mset.positive_omega()
    if np.any(w == 0):
        raise ZeroFrequency("omega_kl = 0 in the lattice")
    a0 = np.asarray(state0.a, dtype=complex)
    ap0 = np.asarray(state0.ap, dtype=complex)
    c, s = np.cos(w * t), np.sin(w * t)
    return encode_state(a0 * c + ap0 * s / w, -a0 * w * s + ap0 * c, mset)


def combine(forced, free, mset):
    return encode_state(forced.a + free.a, forced.ap + free.ap, mset)


def series_eval(a, modes, phi, xgrid):
    """u[..., j, x] = sum_{n,l} a[..., n, l] u_n(x) phi[j, l]."""
    a = np.asarray(a, dtype=complex)
    U = np.array([eval_eigenfunction(m, xgrid) for m in modes])
    return np.einsum("...nl,nx,jl->...jx", a, U, np.asarray(phi))


def project_field(u, modes, psi, xgrid):
    """Coefficients a_nl = int (u(x), psi_l) conj(ubar_n(x)) dx of sampled fields u (N, nx)."""
    u = np.asarray(u, dtype=complex)
    Ub = np.array([eval_biorthogonal(m, xgrid) for m in modes])
    proj = np.einsum("jx,jl->lx", u, np.conj(psi))
    return simpson(proj[None, :, :] * np.conj(Ub)[:, None, :], x=xgrid, axis=-1)


# --- norms of sampled fields -------------------------------------------------------------


def l2_norm_sq(u, xgrid):
    u = np.atleast_2d(u)
    return float(np.real(simpson(np.sum(np.abs(u) ** 2, axis=0), x=xgrid)))


def hminus1_norm_sq(g, xgrid):
    """||g||^2 in H^{-1}(0, a): int g conj(w) with -w'' = g, w(0) = w(a) = 0 (second order FD)."""
    g = np.atleast_2d(np.asarray(g, dtype=complex))
    h = xgrid[1] - xgrid[0]
    n = len(xgrid) - 2
    ab = np.zeros((3, n))
    ab[0, 1:] = -1.0
    ab[1, :] = 2.0
    ab[2, :-1] = -1.0
    total = 0.0
    for comp in g:
        w = np.zeros(len(xgrid), dtype=complex)
        w[1:-1] = solve_banded((1, 1), ab, h * h * comp[1:-1])
        total += float(np.real(simpson(comp * np.conj(w), x=xgrid)))
    return total


def field_state_norm_sq(u, ut, xgrid):
    return l2_norm_sq(u, xgrid) + hminus1_norm_sq(ut, xgrid)


def equivalence_check(state, u, ut, xgrid):
    """Ratio of sum |C_kl|^2 / k^2 to ||u||^2 + ||u_t||^2_{H^-1}; 1 for the zero state."""
    lhs = state_norm(state.C) ** 2
    rhs = field_state_norm_sq(u, ut, xgrid)
    if lhs == 0 and rhs == 0:
        return 1.0
    return lhs / rhs


def continuity_check(f, mset, tgrid):
    """sup_t (sum |C_kl(t)|^2 / k^2)^(1/2) / ||f||_{L^2(0,T)}; 0 for f = 0."""
    t = np.asarray(tgrid, dtype=float)
    fs = _sample(f, t)
    fnorm = np.sqrt(float(simpson(np.abs(fs) ** 2, x=t)))
    if fnorm == 0:
        return 0.0
    sol = duhamel_modes(fs, mset, t)
    w = mset.positive_omega()
    Cp = 1j * w * sol.a + sol.ap
    Cm = -1j * w * sol.a + sol.ap
    k = np.arange(1, mset.K + 1, dtype=float)[None, :, None]
    norms = np.sqrt(np.sum((np.abs(Cp) ** 2 + np.abs(Cm) ** 2) / k ** 2, axis=(1, 2)))
    return float(np.max(norms) / fnorm)


# --- finite-difference oracle ------------------------------------------------------------


@dataclass(frozen=True)
class FDGrid:
    dx: float
    dt: float
    nx: int  # number of spatial intervals
    nt: int  # number of time steps

    @property
    def cfl(self):
        return self.dt / self.dx


def make_grid(a, T, nx, cfl=0.5):
    if cfl > 1:
        raise UnstableGrid(f"CFL ratio {cfl} > 1 is unstable for leapfrog")
    dx = a / nx
    nt = int(np.ceil(T / (cfl * dx)))
    return FDGrid(dx, T / nt, int(nx), nt)


def fd_oracle(a, A, bc, b, u0, u1, f, T, grid):
    """Leapfrog in time, centred in space, for the N-component field.

    Boundary values follow from the 2x2 system [[alpha1, beta1], [alpha2,
    beta2]] (u(0), u(a)) = (b f(t), 0) at every time level.  ``u0``/``u1`` are
    callables of x returning (N, nx+1) arrays or such arrays directly.  Returns
    (x, u(., T), u_t(., T)).
    """
    if grid.cfl > 1 + 1e-12:
        raise UnstableGrid(f"CFL ratio {grid.cfl:.3f} > 1 is unstable for leapfrog")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=complex).ravel()
    N = A.shape[0]
    x = np.linspace(0.0, a, grid.nx + 1)
    U0 = np.asarray(u0(x) if callable(u0) else u0, dtype=complex).reshape(N, -1)
    U1 = np.asarray(u1(x) if callable(u1) else u1, dtype=complex).reshape(N, -1)
    dt, dx = grid.dt, grid.dx
    r2 = (dt / dx) ** 2
    times = dt * np.arange(grid.nt + 1)
    fvals = np.zeros(len(times), dtype=complex) if f is None else _sample(f, times)
    g0, ga = bc.endpoint_values(1.0)

    def lap(u):
        return u[:, 2:] - 2 * u[:, 1:-1] + u[:, :-2]

    levels = [U0.copy()]
    cur = np.empty_like(U0)
    cur[:, 1:-1] = (U0[:, 1:-1] + dt * U1[:, 1:-1] + 0.5 * r2 * lap(U0)
                    - 0.5 * dt * dt * (A @ U0[:, 1:-1]))
    cur[:, 0], cur[:, -1] = b * g0 * fvals[1], b * ga * fvals[1]
    levels.append(cur)
    for n in range(1, grid.nt):
        prev, cur = levels[-2], levels[-1]
        nxt = np.empty_like(cur)
        nxt[:, 1:-1] = 2 * cur[:, 1:-1] - prev[:, 1:-1] + r2 * lap(cur) - dt * dt * (A @ cur[:, 1:-1])
        nxt[:, 0], nxt[:, -1] = b * g0 * fvals[n + 1], b * ga * fvals[n + 1]
        levels = levels[-2:] + [nxt]
    if len(levels) == 3:
        ut = (3 * levels[2] - 4 * levels[1] + levels[0]) / (2 * dt)
    else:
        ut = (levels[1] - levels[0]) / dt
    uT = levels[-1]
    return x, uT, ut


def relative_l2(u, ref, xgrid):
    den = l2_norm_sq(ref, xgrid)
    num = l2_norm_sq(np.asarray(u) - np.asarray(ref), xgrid)
    return float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num))
