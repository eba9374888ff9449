"""Run configuration shared by the library pipeline and the CLI."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError

__all__ = [
    "ThresholdConfig",
    "RunConfig",
    "OUTPUT_DIR_ENV",
    "DEFAULT_RISK_INCREASES",
]

#: Environment variable naming the default report directory.
OUTPUT_DIR_ENV = "METRIC_THRESHOLDS_OUT"

#: Risk-increase levels the correlation grid sweeps by default.
DEFAULT_RISK_INCREASES = (0.05, 0.10, 0.15)


@dataclass(frozen=True)
class ThresholdConfig:
    """Knobs of the threshold chain and the screening steps.

    ``population_ratio`` of None means: compute it from the corpus
    (unweighted mean of dataset ratios, or pooled when
    ``pooled_population`` is set).
    """

    risk_increase: float = 0.10
    apply_correction: bool = True
    sig_level: float = 0.05
    population_ratio: float | None = None
    pooled_population: bool = False
    significance_test: str = "wald"
    exact_spearman: bool = False
    min_train_pairs: int = 3

    def __post_init__(self) -> None:
        if not 0.0 < self.risk_increase < 1.0:
            raise ConfigError(f"risk_increase {self.risk_increase} outside (0,1)")
        if not 0.0 < self.sig_level < 1.0:
            raise ConfigError(f"sig_level {self.sig_level} outside (0,1)")
        if self.population_ratio is not None and not 0.0 < self.population_ratio < 1.0:
            raise ConfigError(
                f"population_ratio {self.population_ratio} outside (0,1)"
            )
        if self.significance_test not in ("wald", "lrt"):
            raise ConfigError(f"unknown significance test {self.significance_test!r}")
        if self.min_train_pairs < 3:
            raise ConfigError("min_train_pairs below 3 invites degenerate fits")


@dataclass(frozen=True)
class RunConfig:
    """Everything one reproducible pipeline run depends on."""

    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    rounding: str = "half-up"
    seed: int = 0
    output_dir: Path = field(default_factory=lambda: _default_output_dir())

    def __post_init__(self) -> None:
        if self.rounding != "half-up":
            # the rounding policy is centralized in one function; other
            # policies would be added there first
            raise ConfigError(f"unknown rounding policy {self.rounding!r}")
        object.__setattr__(self, "output_dir", Path(self.output_dir))

    def to_dict(self) -> dict[str, Any]:
        t = self.thresholds
        return {
            "risk_increase": t.risk_increase,
            "apply_correction": t.apply_correction,
            "sig_level": t.sig_level,
            "population_ratio": t.population_ratio,
            "pooled_population": t.pooled_population,
            "significance_test": t.significance_test,
            "exact_spearman": t.exact_spearman,
            "min_train_pairs": t.min_train_pairs,
            "rounding": self.rounding,
            "seed": self.seed,
            "output_dir": str(self.output_dir),
        }

    @classmethod
    def from_mapping(cls, obj: Mapping[str, Any]) -> "RunConfig":
        """Build a config from a flat mapping, e.g. a parsed JSON file."""
        known_t = {f.name for f in fields(ThresholdConfig)}
        known_r = {"rounding", "seed", "output_dir"}
        unknown = set(obj) - known_t - known_r
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        try:
            tc = ThresholdConfig(**{k: obj[k] for k in known_t if k in obj})
            return cls(
                thresholds=tc,
                rounding=obj.get("rounding", "half-up"),
                seed=int(obj.get("seed", 0)),
                output_dir=Path(obj["output_dir"]) if "output_dir" in obj
                else _default_output_dir(),
            )
        except TypeError as exc:
            raise ConfigError(f"malformed config: {exc}") from None

    def overridden_by_file(self, path: str | Path) -> "RunConfig":
        """Apply a JSON config file on top of this config.

        File values win over flag values, so a pinned config file makes
        a run reproducible regardless of the command line around it.
        """
        with open(path, "r", encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(obj, Mapping):
            raise ConfigError(f"{path}: config must be a JSON object")
        merged = self.to_dict()
        merged.update(obj)
        return RunConfig.from_mapping(merged)

    def with_thresholds(self, **kwargs: Any) -> "RunConfig":
        return replace(self, thresholds=replace(self.thresholds, **kwargs))


def _default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "reports"))
