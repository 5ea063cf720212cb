"""Run configuration for the studies, loadable from JSON or TOML."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from ..ansatz import ProfileSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_EPS = (0.25, 0.125, 0.0625)


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a study needs; T, the profile and the grids are shared by the whole sweep.

    The slow torus has length 2 pi ``periods`` and ``n_slow`` points; the
    physical one is 1/eps times longer with n_slow/eps points. ``dt_phys``
    is the Klein-Gordon step in physical time (equal to eps^2 dt_phys in
    rescaled time).
    """

    study: str = "converge-main"
    eps_list: tuple = DEFAULT_EPS
    profile: ProfileSpec = field(default_factory=ProfileSpec)
    T: float = 1.0
    periods: int = 16
    n_slow: int = 1024
    samples: int = 64
    dt_phys: float = 0.125
    nls_substeps: int = 16
    scheme: str = "if_rk4"
    nls_scheme: str = "yoshida4"
    deltas: tuple = (0.5, 1.0, 2.0)
    eta: float = 0.05
    t_window: float = 1.0
    linear_samples: int = 257
    decay_N: float = 1.0
    decay_times: tuple = (1e2, 1e4, 33)
    kernel_points: int = 17
    band: tuple | None = None
    out_dir: str = "out"
    seed: int = 0

    def __post_init__(self):
        if not self.eps_list:
            raise ConfigError("eps list is empty")
        for e in self.eps_list:
            if not 0 < e <= 1:
                raise ConfigError(f"eps must lie in (0, 1], got {e}")
            m = 2 * self.periods / e
            if abs(m - round(m)) > 1e-9 * m:
                raise ConfigError(f"eps = {e} is not commensurate with P = {self.periods}: 2P/eps must be an integer")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if self.samples < 1 or self.nls_substeps < 1:
            raise ConfigError("samples and nls_substeps must be positive")
        if not 0 < self.eta < 0.25:
            raise ConfigError(f"eta must lie in (0, 0.25), got {self.eta}")
        if self.n_slow < 16 or self.n_slow & (self.n_slow - 1):
            raise ConfigError(f"n_slow must be a power of two >= 16, got {self.n_slow}")
        if not self.dt_phys > 0:
            raise ConfigError("dt_phys must be positive")

    def with_(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["profile"] = {k: _jsonable(v) for k, v in d["profile"].items()}
        for k in ("eps_list", "deltas", "decay_times", "band"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    def hash(self) -> str:
        """sha256 of the canonical JSON form, ignoring where outputs go."""
        d = self.to_dict()
        d.pop("out_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


_PROFILE_KEYS = {f.name for f in dataclasses.fields(ProfileSpec)}
_RUN_KEYS = {f.name for f in dataclasses.fields(RunConfig)}


def config_from_dict(d: dict, base: RunConfig | None = None) -> RunConfig:
    base = base or RunConfig()
    unknown = set(d) - _RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    changes = dict(d)
    try:
        if "profile" in changes:
            prof = changes["profile"]
            if isinstance(prof, str):
                prof = {"family": prof}
            bad = set(prof) - _PROFILE_KEYS
            if bad:
                raise ConfigError(f"unknown profile keys: {sorted(bad)}")
            prof = {k: (math.inf if v == "inf" else v) for k, v in prof.items()}
            changes["profile"] = dataclasses.replace(base.profile, **prof)
        for k in ("eps_list", "deltas", "decay_times", "band"):
            if changes.get(k) is not None:
                changes[k] = tuple(float(x) for x in changes[k])
        return dataclasses.replace(base, **changes)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(raw.decode())
        else:
            data = json.loads(raw)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a table/object")
    return config_from_dict(data, base)


def worker_count(jobs: int) -> int:
    """Pool size: ENVELOPE_LAB_THREADS if set, else the CPU count, never more than ``jobs``."""
    env = os.environ.get("ENVELOPE_LAB_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(f"ENVELOPE_LAB_THREADS must be an integer, got {env!r}") from None
        if cap < 1:
            raise ConfigError("ENVELOPE_LAB_THREADS must be >= 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, jobs))
