"""End-to-end steering: lattice, moment targets, synthesis, forward checks.

The moment problem is posed on K + guard spatial modes.  Modes beyond K get
zero targets, which keeps the synthesised control from exciting the modes
just above the retained band.
"""
from dataclasses import dataclass, field

import numpy as np

from . import coupling, lattice, moments, simulator, spectral_bvp
from .lattice import StateCoefficients


@dataclass
class ControlTask:
    a: float
    T: float
    bc: spectral_bvp.BoundaryCoefficients
    op: coupling.CouplingOperator
    K: int
    family: str = "sine"
    guard: int = 0
    dec: coupling.SpectralDecomposition = field(default=None, repr=False)
    mset: lattice.ModeSet = field(default=None, repr=False)
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        tol = self.tolerances
        if self.dec is None:
            raw = coupling.decompose(self.op, tol.get("distinct", coupling.DISTINCT_TOL))
            self.dec = coupling.normalize_moments(raw, self.op.b, tol.get("moment", coupling.MOMENT_TOL))
        if self.mset is None:
            self.mset = lattice.build_lattice(self.bc, self.a, self.K + self.guard, self.dec, self.family)

    @classmethod
    def from_config(cls, cfg):
        bnd = cfg.boundary
        bc = spectral_bvp.build_boundary(bnd["alpha1"], bnd["alpha2"], bnd["beta1"], bnd["beta2"])
        op = coupling.CouplingOperator(cfg.A, cfg.b)
        return cls(cfg.a, cfg.T, bc, op, cfg.K, cfg.family, cfg.guard, tolerances=dict(cfg.tolerances))

    @property
    def N(self):
        return self.op.N

    @property
    def K_total(self):
        return self.K + self.guard

    def modes(self, K=None):
        return spectral_bvp.spatial_modes(self.bc, self.a, K or self.K_total, self.family)

    def retained_lattice(self):
        keep = np.abs(self.mset.k) <= self.K
        m = self.mset
        return lattice.ModeSet(m.k[keep], m.l[keep], m.omega[keep], m.kappa[keep], self.K, m.N, m.a)

    def pad(self, state):
        """K x N state (or None) -> (K + guard) x N StateCoefficients."""
        a = np.zeros((self.K_total, self.N), dtype=complex)
        ap = np.zeros_like(a)
        if state is not None:
            sa = np.asarray(state.a if hasattr(state, "a") else state["a"])
            sp = np.asarray(state.ap if hasattr(state, "ap") else state["ap"])
            a[: sa.shape[0]] = sa
            ap[: sp.shape[0]] = sp
        return lattice.encode_state(a, ap, self.mset)

    def random_state(self, seed=0, decay=1.0):
        """Random K x N target; positions decay like k^-decay so the field is L^2 bounded."""
        rng = np.random.default_rng(seed)
        k = np.arange(1, self.K + 1)[:, None]
        return StateCoefficients(
            rng.standard_normal((self.K, self.N)) / k ** decay,
            rng.standard_normal((self.K, self.N)),
            None,
        )

    def problem(self, initial, target, normalizer="kappa"):
        return moments.target_moments(self.pad(initial), self.pad(target), self.mset, self.T, normalizer)

    def synthesize(self, initial, target, mode="direct", ridge=0.0, window=1, normalizer="kappa",
                   cond_cap=moments.COND_CAP, tol=moments.SOLVER_TOL,
                   samples_per_period=moments.SAMPLES_PER_PERIOD):
        prob = self.problem(initial, target, normalizer)
        f = moments.solve(prob, mode=mode, ridge=ridge, cond_cap=cond_cap, tol=tol,
                          window_order=window, samples_per_period=samples_per_period)
        return prob, f

    # --- forward checks ------------------------------------------------------------

    def terminal_state(self, f, initial=None, nt=4096):
        """Duhamel (cumulative Simpson on nt steps) plus free evolution of ``initial``."""
        t = np.linspace(0.0, self.T, nt + 1)
        forced = simulator.duhamel_modes(f, self.mset, t).state(-1, self.mset)
        free = simulator.free_evolution(self.pad(initial), self.mset, self.T)
        return simulator.combine(forced, free, self.mset)

    def retained_residual(self, state, target):
        """Relative residual in the sum |C|^2/k^2 norm over k <= K (and over guard modes)."""
        want = self.pad(target).C
        diff = state.C - want
        scale = lattice.state_norm(want[:, : self.K]) or 1.0
        return {
            "retained": lattice.state_norm(diff[:, : self.K]) / scale,
            "guard": lattice.state_norm(diff[:, self.K:]) / scale if self.guard else 0.0,
            "target_norm": lattice.state_norm(want[:, : self.K]),
        }

    def exact_terminal_C(self, f, initial=None):
        """C_kl(T) from Gauss-Legendre moments of f; exact Duhamel at T, no time stepping."""
        C = self.mset.kappa * np.exp(1j * self.mset.omega * self.T) * f.moments()
        free = simulator.free_evolution(self.pad(initial), self.mset, self.T)
        return lattice.decode_state(self.mset.to_grid(C) + free.C, self.mset)

    def field(self, state, x):
        """u and u_t on the grid x from (K_total) x N coefficients."""
        modes = self.modes(np.asarray(state.a).shape[0])
        return (simulator.series_eval(state.a, modes, self.dec.phi, x),
                simulator.series_eval(state.ap, modes, self.dec.phi, x))

    def fd_check(self, f, initial=None, target=None, nx=400, cfl=0.9):
        """Run the leapfrog oracle and compare u(., T) with the target field."""
        grid = simulator.make_grid(self.a, self.T, nx, cfl)
        x = np.linspace(0.0, self.a, nx + 1)
        init = self.pad(initial)
        u0, u1 = self.field(init, x)
        x, uT, utT = simulator.fd_oracle(self.a, self.op.entries, self.bc, self.op.b, u0, u1, f, self.T, grid)
        tgt_u, tgt_ut = self.field(self.pad(target), x)
        return {
            "u_rel_l2": simulator.relative_l2(uT, tgt_u, x),
            "x": x,
            "u": uT,
            "ut": utT,
            "target_u": tgt_u,
            "target_ut": tgt_ut,
        }
