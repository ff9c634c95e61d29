"""Flat ``section.key=value`` run configuration with lossless text round trip."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigurationError

MODELS = ("abp2d", "gt1d")
VIOLATION_POLICIES = ("fail", "warn")


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_optional_float(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def _parse_optional_str(text: str):
    return None if text.strip().lower() in ("", "none") else text.strip()


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


# text key -> (attribute, parser)
KEYS = {
    "model.name": ("model", str),
    "model.Pe": ("Pe", float),
    "model.De": ("De", float),
    "model.n": ("n", int),
    "model.j1_a0_weight": ("j1_a0_weight", float),
    "grid.nx": ("nx", int),
    "grid.ny": ("ny", int),
    "time.T": ("T", float),
    "time.dt": ("dt", _parse_optional_float),
    "time.scheme": ("scheme", str),
    "time.cfl_safety": ("cfl_safety", float),
    "time.max_steps": ("max_steps", int),
    "init.preset": ("preset", _parse_optional_str),
    "init.file": ("init_file", _parse_optional_str),
    "init.phi": ("phi", float),
    "init.theta_star": ("theta_star", float),
    "init.mollify_eps": ("mollify_eps", _parse_optional_float),
    "init.mollify_alpha": ("mollify_alpha", float),
    "output.dir": ("output_dir", str),
    "output.cadence": ("cadence", float),
    "output.snapshots": ("snapshots", _parse_bool),
    "run.seed": ("seed", int),
    "run.workers": ("workers", int),
    "run.on_violation": ("on_violation", str),
}


@dataclass
class RunConfig:
    model: str = "abp2d"
    Pe: float = 1.0
    De: float = 0.5
    n: int = 4
    j1_a0_weight: float = 2.0
    nx: int = 32
    ny: int = 32
    T: float = 0.5
    dt: float | None = None
    scheme: str = "ETD-RK2"
    cfl_safety: float = 0.5
    max_steps: int = 1_000_000
    preset: str | None = "isotropic-uniform"
    init_file: str | None = None
    phi: float = 0.5
    theta_star: float = 0.0
    mollify_eps: float | None = None
    mollify_alpha: float = 3.0
    output_dir: str = "out"
    cadence: float = 0.05
    snapshots: bool = True
    seed: int = 0
    workers: int = 1
    on_violation: str = "fail"

    def validate(self) -> "RunConfig":
        """Check every scalar field; initial data is validated when built."""
        if self.model not in MODELS:
            raise ConfigurationError(f"model.name must be one of {MODELS}, got {self.model!r}")
        if not self.Pe >= 0:
            raise ConfigurationError(f"model.Pe must be >= 0, got {self.Pe}")
        if not 0 < self.De <= 1:
            raise ConfigurationError(f"model.De must lie in (0, 1], got {self.De}")
        if self.n < 1:
            raise ConfigurationError(f"model.n must be >= 1, got {self.n}")
        for key, v in (("grid.nx", self.nx), ("grid.ny", self.ny)):
            if v < 4 or v % 2:
                raise ConfigurationError(f"{key} must be an even integer >= 4, got {v}")
        if not self.T >= 0:
            raise ConfigurationError(f"time.T must be >= 0, got {self.T}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError(f"time.dt must be positive, got {self.dt}")
        if not self.cadence > 0:
            raise ConfigurationError(f"output.cadence must be positive, got {self.cadence}")
        if self.preset is None and self.init_file is None:
            raise ConfigurationError("one of init.preset or init.file is required")
        if self.mollify_eps is not None and not self.mollify_eps > 0:
            raise ConfigurationError("init.mollify_eps must be positive")
        if not self.mollify_alpha > 2:
            raise ConfigurationError(f"init.mollify_alpha must exceed 2, got {self.mollify_alpha}")
        if self.workers < 1:
            raise ConfigurationError("run.workers must be >= 1")
        if self.on_violation not in VIOLATION_POLICIES:
            raise ConfigurationError(f"run.on_violation must be one of {VIOLATION_POLICIES}")
        return self

    # -- text form -----------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"{key}={_fmt(getattr(self, attr))}" for key, (attr, _) in KEYS.items()]
        return "\n".join(lines) + "\n"

    def set(self, key: str, text: str) -> None:
        if key not in KEYS:
            raise ConfigurationError(f"unknown config key {key!r}")
        attr, parse = KEYS[key]
        try:
            setattr(self, attr, parse(text.strip()))
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key!r}: {text.strip()!r} ({exc})") from exc

    @classmethod
    def from_text(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        cfg = base if base is not None else cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            cfg.set(key.strip(), value)
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text)

    def effective_workers(self) -> int:
        env = os.environ.get("ABP_THREADS")
        if env:
            try:
                return max(1, int(env))
            except ValueError as exc:
                raise ConfigurationError(f"ABP_THREADS must be an integer, got {env!r}") from exc
        return self.workers

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return all(getattr(self, f.name) == getattr(other, f.name) for f in fields(self))
