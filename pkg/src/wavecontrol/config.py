"""JSON experiment configuration for the command line.

Complex scalars are written as [re, im] pairs (a bare number is accepted for
a real value).  State coefficient arrays are K x N real lists with optional
``*_im`` companions, or a string path to a JSON file holding that object,
resolved relative to the configuration file.
"""
import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

DEFAULT_TOLERANCES = {
    "rank": 1e-10,
    "distinct": 1e-8,
    "moment": 1e-10,
    "resonance": 1e-10,
    "quadrature": 1e-10,
    "solver": 1e-8,
    "cond_cap": 1e12,
    "verify": 1e-6,
    "fd": 1e-2,
}
DEFAULT_GRIDS = {"nx": 400, "cfl": 0.9, "nt": 4096, "samples_per_period": 64}
DEFAULT_SOLVER = {"mode": "direct", "ridge": 0.0, "window": 1, "normalizer": "kappa", "guard": None}
FAMILIES = ("sine", "cosine")
MIN_GUARD = 16


@dataclass
class ExperimentConfig:
    a: float
    T: float
    boundary: dict  # alpha1, beta1, alpha2, beta2 -> complex
    A: np.ndarray
    b: np.ndarray
    K: int
    family: str = "sine"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    grids: dict = field(default_factory=lambda: dict(DEFAULT_GRIDS))
    solver: dict = field(default_factory=lambda: dict(DEFAULT_SOLVER))
    initial: dict = None  # {"a": KxN complex, "ap": KxN complex} or None (zero)
    target: dict = None  # same, or {"random": seed-or-true}
    base_dir: Path = field(default=Path("."), repr=False, compare=False)

    @property
    def N(self):
        return self.A.shape[0]

    @property
    def guard(self):
        # zero-target modes above K that absorb spillover; a thin band leaks for small K
        g = self.solver.get("guard")
        return max(self.K, MIN_GUARD) if g is None else int(g)

    def to_dict(self):
        out = {
            "a": self.a,
            "T": self.T,
            "boundary": {k: [v.real, v.imag] for k, v in self.boundary.items()},
            "A": self.A.tolist(),
            "b": self.b.tolist(),
            "K": self.K,
            "family": self.family,
            "tolerances": dict(self.tolerances),
            "grids": dict(self.grids),
            "solver": dict(self.solver),
        }
        for name in ("initial", "target"):
            state = getattr(self, name)
            if state is None:
                continue
            if "random" in state:
                out[name] = {"random": state["random"]}
                continue
            out[name] = {}
            for key in ("a", "ap"):
                arr = np.asarray(state[key])
                out[name][key] = arr.real.tolist()
                if np.any(arr.imag):
                    out[name][key + "_im"] = arr.imag.tolist()
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _complex(value, where):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise ConfigError(f"{where}: expected a number or an [re, im] pair, got {value!r}")


def _positive(raw, key):
    if key not in raw:
        raise ConfigError(f"{key}: required field missing")
    try:
        v = float(raw[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a positive number, got {raw[key]!r}") from None
    if not np.isfinite(v) or v <= 0:
        raise ConfigError(f"{key}: must be positive, got {v}")
    return v


def _matrix(value, where, shape):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a numeric array") from None
    if arr.shape != shape:
        raise ConfigError(f"{where}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{where}: entries must be finite")
    return arr


def _state(value, where, K, N, base_dir):
    if value is None:
        return None
    if isinstance(value, str):
        path = (base_dir / value).resolve()
        try:
            value = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{where}: cannot read state file {path}: {exc}") from None
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: expected an object with 'a' and 'ap'")
    if "random" in value:
        return {"random": value["random"]}
    out = {}
    for key in ("a", "ap"):
        re = _matrix(value.get(key, np.zeros((K, N))), f"{where}.{key}", (K, N))
        im = _matrix(value.get(key + "_im", np.zeros((K, N))), f"{where}.{key}_im", (K, N))
        out[key] = re + 1j * im
    return out


def parse_config(raw, base_dir="."):
    """Validate a decoded JSON document; every failure names the offending field."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    base_dir = Path(base_dir)
    a = _positive(raw, "a")
    T = _positive(raw, "T")
    bnd = raw.get("boundary")
    if not isinstance(bnd, dict):
        raise ConfigError("boundary: required object with alpha1, beta1, alpha2, beta2")
    boundary = {}
    for key in ("alpha1", "beta1", "alpha2", "beta2"):
        if key not in bnd:
            raise ConfigError(f"boundary.{key}: required field missing")
        boundary[key] = _complex(bnd[key], f"boundary.{key}")
    if "A" not in raw:
        raise ConfigError("A: required field missing")
    A = np.asarray(raw["A"], dtype=float) if _is_numeric(raw["A"]) else None
    if A is None or A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ConfigError("A: expected a nonempty square numeric matrix")
    N = A.shape[0]
    if "b" not in raw:
        raise ConfigError("b: required field missing")
    b = _matrix(raw["b"], "b", (N,))
    if not np.any(b):
        raise ConfigError("b: control direction must have a nonzero entry")
    K = raw.get("K")
    if not isinstance(K, int) or isinstance(K, bool) or K < 1:
        raise ConfigError(f"K: expected a positive integer, got {K!r}")
    family = raw.get("family", "sine")
    if family not in FAMILIES:
        raise ConfigError(f"family: expected one of {FAMILIES}, got {family!r}")

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, v in (raw.get("tolerances") or {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"tolerances.{key}: unknown tolerance")
        tolerances[key] = _positive({f"tolerances.{key}": v}, f"tolerances.{key}")
    grids = dict(DEFAULT_GRIDS)
    for key, v in (raw.get("grids") or {}).items():
        if key not in DEFAULT_GRIDS:
            raise ConfigError(f"grids.{key}: unknown grid setting")
        grids[key] = _positive({f"grids.{key}": v}, f"grids.{key}")
    for key in ("nx", "nt", "samples_per_period"):
        if float(grids[key]) != int(grids[key]):
            raise ConfigError(f"grids.{key}: expected an integer")
        grids[key] = int(grids[key])
    if grids["cfl"] > 1:
        raise ConfigError(f"grids.cfl: must be <= 1 for a stable leapfrog, got {grids['cfl']}")
    solver = dict(DEFAULT_SOLVER)
    for key, v in (raw.get("solver") or {}).items():
        if key not in DEFAULT_SOLVER:
            raise ConfigError(f"solver.{key}: unknown solver setting")
        solver[key] = v
    if solver["mode"] not in ("direct", "edd"):
        raise ConfigError(f"solver.mode: expected 'direct' or 'edd', got {solver['mode']!r}")
    if solver["normalizer"] not in ("kappa", "index"):
        raise ConfigError(f"solver.normalizer: expected 'kappa' or 'index', got {solver['normalizer']!r}")
    if not isinstance(solver["ridge"], (int, float)) or solver["ridge"] < 0:
        raise ConfigError("solver.ridge: expected a nonnegative number")
    if not isinstance(solver["window"], int) or solver["window"] < 0:
        raise ConfigError("solver.window: expected a nonnegative integer")
    if solver["guard"] is not None and (not isinstance(solver["guard"], int) or solver["guard"] < 0):
        raise ConfigError("solver.guard: expected a nonnegative integer or null")
    solver["ridge"] = float(solver["ridge"])
    return ExperimentConfig(
        a=a, T=T, boundary=boundary, A=A, b=b, K=K, family=family,
        tolerances=tolerances, grids=grids, solver=solver,
        initial=_state(raw.get("initial"), "initial", K, N, base_dir),
        target=_state(raw.get("target"), "target", K, N, base_dir),
        base_dir=base_dir,
    )


def _is_numeric(value):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        return False
    return bool(np.all(np.isfinite(arr)))


def load_config(path):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path}: {exc}") from None
    return parse_config(raw, path.parent)


def apply_override(cfg, key, value):
    """Set ``tolerances.KEY`` (bare KEY) or a dotted ``section.key`` from a string value."""
    section, _, name = key.rpartition(".")
    section = section or "tolerances"
    raw = cfg.to_dict()
    if section not in ("tolerances", "grids", "solver"):
        raise ConfigError(f"--tol-override {key}: only tolerances, grids and solver can be overridden")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    raw = copy.deepcopy(raw)
    raw.setdefault(section, {})[name] = parsed
    return parse_config(raw, cfg.base_dir)
