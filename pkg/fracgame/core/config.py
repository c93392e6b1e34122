# fracgame/core/config.py
"""Scenario files: JSON, strict schema, line-anchored errors.

JSON is a subset of YAML, so files are read through PyYAML: the composed node
tree carries the line of every key for error messages.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from fracgame.core.errors import ConfigError, DomainError
from fracgame.core.reports import digest
from fracgame.game.dynamics import CATALOG, GameDynamics, build_dynamics

_SCHEMA: dict[str, Any] = {
    "name": None,
    "T": None,
    "alpha": None,
    "beta": None,
    "grid": {"fine_n": None, "decision_k": None},
    "dynamics": {"catalog": None, "params": None, "P": None, "Q": None, "c_star": None},
    "library": {"paths": None, "k": None, "blocks": None, "amplitude": None, "times": None},
    "harness": {"trials": None, "theta": None, "eps": None, "fd_deltas": None,
                "samples": None, "simulate_n": None},
    "seed": None,
    "out": None,
}
_REQUIRED = (("T",), ("alpha",), ("grid", "fine_n"), ("grid", "decision_k"), ("dynamics", "catalog"))

TREE_BUDGET = 10 ** 7
FD_CELLS_PER_STEP = 4


def fd_cells(fine_n: int, fd_deltas) -> int:
    """Cells of the finite-difference grid: fine_n, or FD_CELLS_PER_STEP cells per smallest step when that is finer."""
    return max(int(fine_n), FD_CELLS_PER_STEP * max(int(d) for d in fd_deltas))


@dataclass(frozen=True)
class DynamicsConfig:
    catalog: str
    params: Mapping[str, Any] = field(default_factory=dict)
    P: tuple | None = None
    Q: tuple | None = None
    c_star: float | None = None


@dataclass(frozen=True)
class LibraryConfig:
    paths: int = 6
    k: int = 2
    blocks: int = 4
    amplitude: float = 0.9
    times: int = 5            # library / doubling node times, evenly spaced incl. 0 and T


@dataclass(frozen=True)
class HarnessConfig:
    trials: int = 100
    theta: float | None = None
    eps: tuple[float, ...] = (0.1, 0.01, 0.001)
    fd_deltas: tuple[int, ...] = (64, 128, 256, 512)     # δ = T / value
    samples: int = 64
    simulate_n: tuple[int, ...] = (128, 256, 512, 1024)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    T: float
    alpha: float
    beta: float
    fine_n: int
    decision_k: int
    dynamics: DynamicsConfig
    library: LibraryConfig = field(default_factory=LibraryConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    seed: int = 0
    out_dir: str = "out"
    source: str = field(default="<memory>", compare=False)

    @property
    def theta(self) -> float:
        return self.harness.theta if self.harness.theta is not None else self.T / 4.0

    @property
    def fd_n(self) -> int:
        return fd_cells(self.fine_n, self.harness.fd_deltas)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("source", None)
        d["dynamics"]["params"] = dict(self.dynamics.params)
        return d

    @property
    def digest(self) -> str:
        payload = self.to_dict()
        payload.pop("out_dir", None)
        return digest(payload)

    def with_overrides(self, *, out: str | None = None, seed: int | None = None) -> "ScenarioConfig":
        changes: dict[str, Any] = {}
        if out is not None:
            changes["out_dir"] = str(out)
        if seed is not None:
            if int(seed) < 0 or int(seed) >= 2 ** 64:
                raise ConfigError(f"--seed must be an unsigned 64-bit integer, got {seed!r}")
            changes["seed"] = int(seed)
        return replace(self, **changes) if changes else self


# ── loader ──────────────────────────────────────────────────────────────────
def _key_lines(node: yaml.Node, prefix: tuple = (), out: dict | None = None) -> dict[tuple, int]:
    """(key path) -> 1-based line for every mapping key; () -> line of the document."""
    out = {} if out is None else out
    if not prefix:
        out[()] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k_node, v_node in node.value:
            path = prefix + (str(k_node.value),)
            out[path] = k_node.start_mark.line + 1
            _key_lines(v_node, path, out)
    return out


class _Reader:
    def __init__(self, data: Mapping[str, Any], lines: dict[tuple, int], source: str):
        self.data = data
        self.lines = lines
        self.source = source

    def error(self, path: tuple, message: str) -> ConfigError:
        line = None
        for cut in range(len(path), -1, -1):
            if path[:cut] in self.lines:
                line = self.lines[path[:cut]]
                break
        return ConfigError(message, source=self.source, line=line)

    def check_keys(self, data: Mapping[str, Any], schema: Mapping[str, Any], prefix: tuple = ()) -> None:
        if not isinstance(data, Mapping):
            raise self.error(prefix, f"{'.'.join(prefix) or 'scenario'} must be an object")
        for key, val in data.items():
            if key not in schema:
                raise self.error(prefix + (key,), f"unknown key {'.'.join(prefix + (key,))!r}")
            sub = schema[key]
            if isinstance(sub, dict):
                self.check_keys(val, sub, prefix + (key,))

    def get(self, *path: str, default: Any = None) -> Any:
        cur: Any = self.data
        for key in path:
            if not isinstance(cur, Mapping) or key not in cur:
                return default
            cur = cur[key]
        return cur

    def number(self, *path: str, default: Any = None, integer: bool = False) -> Any:
        val = self.get(*path, default=default)
        if val is None:
            return None
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise self.error(path, f"{'.'.join(path)} must be a number, got {val!r}")
        if integer:
            if float(val) != int(val):
                raise self.error(path, f"{'.'.join(path)} must be an integer, got {val!r}")
            return int(val)
        if not math.isfinite(float(val)):
            raise self.error(path, f"{'.'.join(path)} must be finite")
        return float(val)

    def numbers(self, *path: str, default: tuple, integer: bool = False) -> tuple:
        val = self.get(*path, default=None)
        if val is None:
            return tuple(default)
        if not isinstance(val, list) or not val:
            raise self.error(path, f"{'.'.join(path)} must be a nonempty list")
        out = []
        for v in val:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise self.error(path, f"{'.'.join(path)} must hold numbers, got {v!r}")
            out.append(int(v) if integer else float(v))
        return tuple(out)


def _positive(r: _Reader, path: tuple, value: float | int, strict: bool = True) -> None:
    if (strict and not value > 0) or (not strict and value < 0):
        raise r.error(path, f"{'.'.join(path)} must be {'positive' if strict else 'non-negative'}, got {value!r}")


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ConfigError(f"parse error: {exc.problem}", source=source, line=line) from None
    if node is None or data is None:
        raise ConfigError("empty scenario", source=source, line=1)
    r = _Reader(data, _key_lines(node), source)
    r.check_keys(data, _SCHEMA)
    for req in _REQUIRED:
        if r.get(*req) is None:
            raise r.error(req, f"missing required key {'.'.join(req)!r}")

    T = r.number("T")
    _positive(r, ("T",), T)
    alpha = r.number("alpha")
    if not 0.0 < alpha < 1.0:
        raise r.error(("alpha",), f"alpha must lie in (0, 1), got {alpha!r}")
    beta = r.number("beta", default=min(1.0 - alpha, alpha / 2.0) / 2.0)
    if not 0.0 < beta < min(1.0 - alpha, alpha / 2.0):
        raise r.error(("beta",), f"beta must lie in (0, min(1-alpha, alpha/2)), got {beta!r}")
    fine_n = r.number("grid", "fine_n", integer=True)
    _positive(r, ("grid", "fine_n"), fine_n)
    decision_k = r.number("grid", "decision_k", integer=True)
    _positive(r, ("grid", "decision_k"), decision_k)
    if decision_k > fine_n:
        raise r.error(("grid", "decision_k"), f"decision_k={decision_k} exceeds fine_n={fine_n}")

    catalog = r.get("dynamics", "catalog")
    if not isinstance(catalog, str) or not catalog:
        raise r.error(("dynamics", "catalog"), "dynamics.catalog must be a non-empty string")
    params = r.get("dynamics", "params", default={}) or {}
    if not isinstance(params, Mapping):
        raise r.error(("dynamics", "params"), "dynamics.params must be an object")
    c_star = r.number("dynamics", "c_star")
    if c_star is not None:
        _positive(r, ("dynamics", "c_star"), c_star)
    P, Q = r.get("dynamics", "P"), r.get("dynamics", "Q")
    dyn_cfg = DynamicsConfig(catalog, dict(params), _freeze_list(P), _freeze_list(Q), c_star)
    try:
        dyn = build_scenario_dynamics(dyn_cfg)
    except DomainError as exc:
        raise r.error(("dynamics",), str(exc)) from None
    required = (len(dyn.P) * len(dyn.Q)) ** decision_k
    if required > TREE_BUDGET:
        raise r.error(("grid", "decision_k"),
                      f"value tree needs {required} leaves, budget is {TREE_BUDGET}")

    lib = LibraryConfig(
        paths=r.number("library", "paths", default=LibraryConfig.paths, integer=True),
        k=r.number("library", "k", default=LibraryConfig.k, integer=True),
        blocks=r.number("library", "blocks", default=LibraryConfig.blocks, integer=True),
        amplitude=r.number("library", "amplitude", default=LibraryConfig.amplitude),
        times=r.number("library", "times", default=LibraryConfig.times, integer=True),
    )
    for key in ("paths", "k", "blocks", "amplitude"):
        _positive(r, ("library", key), getattr(lib, key))
    if lib.amplitude > 1.0:
        raise r.error(("library", "amplitude"), "library.amplitude must be <= 1 (X_k membership)")
    if lib.times < 2 or fine_n % (lib.times - 1):
        raise r.error(("library", "times"), f"library.times - 1 must divide fine_n={fine_n} (times >= 2)")

    theta = r.number("harness", "theta")
    if theta is not None and not 0.0 < theta < T:
        raise r.error(("harness", "theta"), f"harness.theta must lie in (0, T), got {theta!r}")
    eps = r.numbers("harness", "eps", default=HarnessConfig.eps)
    if any(not e > 0.0 for e in eps):
        raise r.error(("harness", "eps"), "harness.eps entries must be positive")
    fd_deltas = r.numbers("harness", "fd_deltas", default=HarnessConfig.fd_deltas, integer=True)
    if not fd_deltas or any(d < 1 for d in fd_deltas):
        raise r.error(("harness", "fd_deltas"), "harness.fd_deltas must be a nonempty list of positive integers")
    fd_n = fd_cells(fine_n, fd_deltas)
    if any(fd_n % d for d in fd_deltas):
        raise r.error(("harness", "fd_deltas"), f"harness.fd_deltas must divide the finite-difference grid N={fd_n}")
    harness = HarnessConfig(
        trials=r.number("harness", "trials", default=HarnessConfig.trials, integer=True),
        theta=theta,
        eps=eps,
        fd_deltas=fd_deltas,
        samples=r.number("harness", "samples", default=HarnessConfig.samples, integer=True),
        simulate_n=r.numbers("harness", "simulate_n", default=HarnessConfig.simulate_n, integer=True),
    )
    _positive(r, ("harness", "trials"), harness.trials)
    _positive(r, ("harness", "samples"), harness.samples)
    if any(n < 1 for n in harness.simulate_n):
        raise r.error(("harness", "simulate_n"), "harness.simulate_n entries must be positive")

    seed = r.number("seed", default=0, integer=True)
    if not 0 <= seed < 2 ** 64:
        raise r.error(("seed",), f"seed must be an unsigned 64-bit integer, got {seed!r}")
    out = r.get("out", default="out")
    if not isinstance(out, str) or not out:
        raise r.error(("out",), "out must be a non-empty string")
    name = r.get("name", default=Path(source).stem)
    return ScenarioConfig(str(name), T, alpha, beta, fine_n, decision_k, dyn_cfg, lib, harness,
                          seed, out, source)


def _freeze_list(value: Any) -> tuple | None:
    if value is None:
        return None
    if isinstance(value, list):
        return tuple(_freeze_list(v) if isinstance(v, list) else v for v in value)
    return (value,)


def load_scenario_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError("file not found", source=str(path)) from None
    return parse_scenario(text, source=path.name)


def build_scenario_dynamics(cfg: DynamicsConfig) -> GameDynamics:
    """GameDynamics for a dynamics block; P/Q default to {−1, 1}^n corners, c_* to the linear-form bound."""
    family = CATALOG.get(cfg.catalog)
    if family is None:
        raise DomainError(f"dynamics: unknown catalog entry {cfg.catalog!r} (known: {sorted(CATALOG)})")
    corners = [[-1.0] * family.n, [1.0] * family.n]
    P = [list(p) if isinstance(p, tuple) else p for p in cfg.P] if cfg.P is not None else corners
    Q = [list(q) if isinstance(q, tuple) else q for q in cfg.Q] if cfg.Q is not None else corners
    if cfg.c_star is not None:
        return build_dynamics(cfg.catalog, cfg.params, P, Q, cfg.c_star)
    draft = build_dynamics(cfg.catalog, cfg.params, P, Q, 1.0)
    return build_dynamics(cfg.catalog, cfg.params, P, Q, max(1.0, draft.growth_bound()))
