"""Run configuration shared by the command-line tools.

A config is a flat JSON object (``schema_version`` 1). Command-line flags
override file values. ``study`` holds :class:`~gammalogit.simulation.StudyConfig`
fields for the ``simulate`` command.
"""
from dataclasses import asdict, dataclass, field, fields
import hashlib
import json
from pathlib import Path

from .estimators import KINDS, SOLVERS, EstimatorSpec
from .io import PIMA_VARIANTS

__all__ = ["SCHEMA_VERSION", "ConfigError", "RunConfig", "load_config"]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    input: str = None  # None means the bundled Pima table
    response: str = "Outcome"
    pima_variant: str = "full"
    standardize: bool = True
    estimator: str = "gamma"
    tuning: object = None  # None: gamma is selected, constant/xi are profiled
    grid: tuple = None
    gamma0: float = 0.1
    level: float = 0.95
    b_prime: int = 2000
    threshold: float = 0.01
    seed: int = None
    solver: str = "quasi_newton"
    tol: float = 1e-8
    max_iter: int = 500
    outdir: str = "out"
    study: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}; expected {SCHEMA_VERSION}")
        if self.estimator not in KINDS:
            raise ConfigError(f"unknown estimator {self.estimator!r}; expected one of {KINDS}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")
        if self.pima_variant not in PIMA_VARIANTS:
            raise ConfigError(f"unknown pima_variant {self.pima_variant!r}")
        if self.tuning is not None:
            tuning = tuple(self.tuning) if isinstance(self.tuning, (list, tuple)) else self.tuning
            object.__setattr__(self, "tuning", tuning)
            try:
                self.spec()
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"tuning {self.tuning!r} for {self.estimator}: {exc}") from None
        if self.grid is not None:
            grid = tuple(float(g) for g in self.grid)
            if not grid or min(grid) < 0:
                raise ConfigError("grid must be nonempty with nonnegative entries")
            object.__setattr__(self, "grid", grid)
        checks = [
            (self.gamma0 > 0, "gamma0 must be positive"),
            (0 < self.level < 1, "level must lie in (0, 1)"),
            (0 < self.threshold < 1, "threshold must lie in (0, 1)"),
            (int(self.b_prime) >= 1, "b_prime must be at least 1"),
            (self.tol > 0, "tol must be positive"),
            (int(self.max_iter) >= 1, "max_iter must be at least 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        if self.seed is not None and (not isinstance(self.seed, int) or self.seed < 0):
            raise ConfigError("seed must be a nonnegative integer")
        if not isinstance(self.study, dict):
            raise ConfigError("study must be an object")

    def spec(self):
        """EstimatorSpec for a fixed tuning value (None when it must be chosen)."""
        if self.estimator == "mle":
            return EstimatorSpec.mle()
        if self.tuning is None:
            return None
        return EstimatorSpec(self.estimator, self.tuning)

    def require_seed(self, command):
        if self.seed is None:
            raise ConfigError(f"{command} is stochastic: --seed is required")

    def to_dict(self):
        d = asdict(self)
        if d["grid"] is not None:
            d["grid"] = list(d["grid"])
        if isinstance(d["tuning"], tuple):
            d["tuning"] = list(d["tuning"])
        return d

    def digest(self):
        """sha256 of the canonical JSON config, output directory excluded."""
        d = self.to_dict()
        d.pop("outdir")
        text = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def load_config(path=None, **overrides):
    """Build a RunConfig from an optional JSON file plus overrides.

    Overrides set to None are ignored, so unset command-line flags leave
    file values alone.
    """
    values = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        try:
            values = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(values, dict):
            raise ConfigError(f"{path}: top level must be an object")
    study = dict(values.get("study", {}))
    study.update(overrides.pop("study", None) or {})
    values.update({k: v for k, v in overrides.items() if v is not None})
    values["study"] = study
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    return RunConfig(**values)
