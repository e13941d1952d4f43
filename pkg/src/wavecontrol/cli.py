"""Command line: spectrum | kalman | synthesize | verify | diagnose.

Exit codes: 0 success, 2 configuration error, 3 mathematical precondition
(eta = 0, repeated eigenvalues, zero frequency, Kalman failure), 4 Gram
conditioning, 5 verification failure.
"""
import argparse
import csv
import io
import json
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import coupling, lattice, moments, simulator, spectral_bvp
from .config import apply_override, load_config
from .errors import ConfigError, PreconditionError, VerificationFailed, WaveControlError
from .pipeline import ControlTask


def _fmt(v):
    return format(float(v), ".17g")


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    atomic_write(path, buf.getvalue())


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o))


# --- shared pieces -----------------------------------------------------------------------


def _states(cfg, task, seed):
    def resolve(state, default_seed):
        if state is None:
            return None
        if "random" in state:
            r = state["random"]
            s = default_seed if r is True or r is None else int(r)
            return task.random_state(s)
        return lattice.StateCoefficients(state["a"], state["ap"], None)

    return resolve(cfg.initial, seed), resolve(cfg.target, seed)


def _synthesize(cfg, task, seed):
    initial, target = _states(cfg, task, seed)
    s = cfg.solver
    prob, f = task.synthesize(
        initial, target, mode=s["mode"], ridge=s["ridge"], window=s["window"],
        normalizer=s["normalizer"], cond_cap=cfg.tolerances["cond_cap"],
        tol=cfg.tolerances["solver"], samples_per_period=cfg.grids["samples_per_period"],
    )
    return initial, target, prob, f


def _labels(f):
    return f.family.labels or [(i, 0) for i in range(len(f.family))]


def _load_control(path, task, cfg):
    """Rebuild a ControlSignal from coeffs.csv written by ``synthesize``."""
    rows = list(csv.DictReader(Path(path).read_text().splitlines()))
    fam = moments.family_from_modes(task.mset, cfg.T)
    index = {lab: i for i, lab in enumerate(fam.labels)}
    c = np.zeros(len(fam), dtype=complex)
    bases = {r["basis"] for r in rows}
    if len(bases) != 1 or len(rows) != len(fam):
        raise ConfigError(f"{path}: coefficient table does not match the configured lattice")
    window = int(rows[0]["window"])
    for r in rows:
        key = (int(r["k"]), int(r["l"]))
        if key not in index:
            raise ConfigError(f"{path}: unknown mode {key}")
        c[index[key]] = complex(float(r["re_c"]), float(r["im_c"]))
    return moments.ControlSignal(fam, c, basis=bases.pop(), window_order=window,
                                 samples_per_period=cfg.grids["samples_per_period"])


# --- subcommands ---------------------------------------------------------------------------


def cmd_spectrum(cfg, out, seed):
    task = ControlTask.from_config(cfg)
    mset = task.retained_lattice()
    report = lattice.gap_statistics(mset)
    write_csv(out / "modes.csv", ["k", "l", "re_omega", "im_omega", "re_kappa", "im_kappa", "unreachable"],
              [(int(k), int(l), w.real, w.imag, kp.real, kp.imag, int(kp == 0))
               for k, l, w, kp in zip(mset.k, mset.l, mset.omega, mset.kappa)])
    write_csv(out / "gaps.csv", ["k", "l", "re_omega", "im_omega", "kappa_abs", "cluster_width", "delta_lambda"],
              [(int(k), int(l), w.real, w.imag, abs(kp), report.cluster_width[abs(k) - 1], d)
               for k, l, w, kp, d in zip(mset.k, mset.l, mset.omega, mset.kappa, report.nearest)])
    print(f"modes: {len(mset)}  delta(Lambda) = {report.delta:.6g}  "
          f"|omega| slope = {report.omega_slope:.4f}  width slope = {report.width_slope:.4f}")
    return 0


def kalman_report(cfg):
    bnd = cfg.boundary
    spectral_bvp.build_boundary(bnd["alpha1"], bnd["alpha2"], bnd["beta1"], bnd["beta2"])
    op = coupling.CouplingOperator(cfg.A, cfg.b)
    tol = cfg.tolerances
    dec = coupling.decompose(op, tol["distinct"])
    rank = coupling.kalman_rank(op, tol["rank"])
    zeros = coupling.zero_moments(dec, op.b, tol["moment"])
    mus = [(k * np.pi / cfg.a) ** 2 for k in range(1, cfg.K + 1)]
    violations = coupling.check_nonresonance(mus, dec.eigenvalues, tol["resonance"])
    return {
        "rank": rank,
        "N": op.N,
        "zero_moments": zeros,
        "resonances": violations,
        "checked_k": [1, cfg.K],
        "checked_l": [1, op.N],
        "passed": rank == op.N and not zeros and not violations,
    }


def cmd_kalman(cfg, out, seed):
    rep = kalman_report(cfg)
    print(f"kalman rank: {rep['rank']} / {rep['N']}")
    for l in rep["zero_moments"]:
        print(f"ZeroMoment({l}): (b, psi_{l}) = 0")
    for q in rep["resonances"]:
        print("resonance: mu_%d - mu_%d = lambda_%d - lambda_%d" % q)
    print(f"non-resonance checked over k in 1..{cfg.K}, l in 1..{rep['N']}")
    print("PASS" if rep["passed"] else "FAIL")
    return 0 if rep["passed"] else PreconditionError.exit_code


def cmd_synthesize(cfg, out, seed):
    rep = kalman_report(cfg)
    if not rep["passed"]:
        print("kalman check failed; run `kalman` for details", file=sys.stderr)
        return PreconditionError.exit_code
    task = ControlTask.from_config(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        _, _, prob, f = _synthesize(cfg, task, seed)
    write_csv(out / "control.csv", ["t", "re_f", "im_f"], zip(f.t, f.values.real, f.values.imag))
    write_csv(out / "coeffs.csv", ["k", "l", "basis", "window", "re_c", "im_c"],
              [(k, l, f.basis, f.window_order, c.real, c.imag) for (k, l), c in zip(_labels(f), f.coefficients)])
    fam = f.family
    write_json(out / "conditioning.json", {
        "mode": f.basis,
        "window": f.window_order,
        "guard": task.guard,
        "condition": f.condition,
        "moment_residual": f.residual,
        "min_spacing": fam.min_spacing(),
        "edd_growth_constant": prob.edd_growth,
        "l2_norm": f.l2_norm,
        "T": cfg.T,
        "T_threshold_2Na": 2 * task.N * cfg.a,
        "warnings": sorted({str(w.message) for w in caught}),
    })
    print(f"control: {len(fam)} members, cond = {f.condition:.3e}, residual = {f.residual:.3e}, "
          f"||f|| = {f.l2_norm:.6g}")
    if cfg.T <= 2 * task.N * cfg.a:
        print(f"warning: T = {cfg.T:.4g} <= 2 N a = {2 * task.N * cfg.a:.4g}; "
              "the exponential family need not be a Riesz sequence", file=sys.stderr)
    return 0


def cmd_verify(cfg, out, seed):
    task = ControlTask.from_config(cfg)
    initial, target = _states(cfg, task, seed)
    coeffs = out / "coeffs.csv"
    if coeffs.exists():
        f = _load_control(coeffs, task, cfg)
    else:
        _, _, _, f = _synthesize(cfg, task, seed)
    state = task.terminal_state(f, initial, nt=cfg.grids["nt"])
    res = task.retained_residual(state, target)
    fd = task.fd_check(f, initial, target, nx=cfg.grids["nx"], cfl=cfg.grids["cfl"])
    tol = cfg.tolerances
    report = {
        "retained_residual": res["retained"],
        "guard_residual": res["guard"],
        "target_norm": res["target_norm"],
        "fd_relative_l2": fd["u_rel_l2"],
        "tolerance": tol["verify"],
        "fd_tolerance": tol["fd"],
        "family": cfg.family,
    }
    report["passed"] = bool(res["retained"] <= tol["verify"] and fd["u_rel_l2"] <= tol["fd"])
    write_json(out / "residuals.json", report)
    print(f"retained-mode residual {res['retained']:.3e} (tol {tol['verify']:.1e}); "
          f"FD relative L2 {fd['u_rel_l2']:.3e} (tol {tol['fd']:.1e})")
    if not report["passed"]:
        raise VerificationFailed("terminal state misses the target")
    return 0


def cmd_diagnose(cfg, out, seed):
    """Spectral-family and conditioning diagnostics, plus the randomized norm-equivalence bands."""
    task = ControlTask.from_config(cfg)
    bc, a, K = task.bc, cfg.a, cfg.K
    modes = spectral_bvp.spatial_modes(bc, a, K, cfg.family)
    G = spectral_bvp.modes_gram(modes, a)
    bc_res = [[abs(r) for r in spectral_bvp.bc_residual(m, bc)] for m in modes]
    orth = []
    if cfg.family == "cosine":
        orth = [abs(spectral_bvp.orthogonality_condition_residual(bc, n, k))
                for n in range(1, K + 1) for k in range(n + 1, K + 1)]
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, a, cfg.grids["nx"] + 1)
    ratios = []
    for _ in range(100):
        st = lattice.encode_state(
            np.vstack([rng.standard_normal((K, task.N)), np.zeros((task.guard, task.N))]),
            np.vstack([rng.standard_normal((K, task.N)), np.zeros((task.guard, task.N))]),
            task.mset,
        )
        u, ut = task.field(st, x)
        ratios.append(simulator.equivalence_check(st, u, ut, x))
    fam = moments.family_from_modes(task.mset, cfg.T)
    t = np.linspace(0.0, cfg.T, cfg.grids["nt"] + 1)
    cont = []
    for _ in range(50):
        c = rng.standard_normal(len(fam)) + 1j * rng.standard_normal(len(fam))
        f = moments.ControlSignal(fam, c, samples_per_period=cfg.grids["samples_per_period"])
        cont.append(simulator.continuity_check(f, task.mset, t))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cond = moments.gram_condition(moments.gram(fam))
    report = {
        "family": cfg.family,
        "biorthogonality_diag_max_dev": float(np.max(np.abs(np.diag(G) - 1))),
        "biorthogonality_offdiag_max": spectral_bvp.gram_offdiagonal(G),
        "bc_residual_max": float(np.max(bc_res)),
        "orthogonality_condition_max": float(max(orth)) if orth else 0.0,
        "gap": {"delta": lattice.gap_statistics(task.mset).delta},
        "gram_condition": cond,
        "equivalence_ratio": {"min": min(ratios), "max": max(ratios), "spread": max(ratios) / min(ratios)},
        "continuity_ratio": {"min": min(cont), "max": max(cont), "spread": max(cont) / min(cont)},
        "seed": seed,
    }
    write_json(out / "diagnostics.json", report)
    print(json.dumps(report, indent=2, default=_json_default))
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "kalman": cmd_kalman,
    "synthesize": cmd_synthesize,
    "verify": cmd_verify,
    "diagnose": cmd_diagnose,
}


def build_parser():
    p = argparse.ArgumentParser(prog="wavecontrol", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON experiment configuration")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized targets and checks")
    p.add_argument("--tol-override", action="append", default=[], metavar="KEY=VAL",
                   help="override tolerances.KEY, or section.key for grids/solver; repeatable")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        for item in args.tol_override:
            key, sep, val = item.partition("=")
            if not sep:
                raise ConfigError(f"--tol-override {item!r}: expected KEY=VAL")
            cfg = apply_override(cfg, key.strip(), val.strip())
        return COMMANDS[args.command](cfg, Path(args.out), args.seed)
    except WaveControlError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
