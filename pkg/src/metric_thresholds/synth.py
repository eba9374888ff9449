"""Synthetic corpora with planted parameters, for oracle-style testing.

Every corpus is generated from one seeded generator, so a spec is a
complete recipe: the same spec always yields the same corpus.  Exactly
one metric (the driver) determines faultiness through the logistic
risk model; proxy metrics are noisy transforms of the driver, noise
metrics are independent of everything.

Three ways to pin the driver's intercept per dataset:

* a planted size-threshold line: alpha is solved so the model's
  threshold lands exactly on slope*size + intercept,
* a defect-ratio range: alpha is solved so the expected faulty
  fraction hits a drawn target,
* a fixed alpha given in the spec.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .dataset import ClassRecord, Corpus, MetricId, SystemDataset
from .errors import ConfigError
from .logit import varl_threshold

__all__ = ["PlantedMetric", "SyntheticSpec", "generate_synthetic", "load_spec"]

_ROLES = ("driver", "proxy", "noise")


@dataclass(frozen=True)
class PlantedMetric:
    """Recipe for one metric column.

    ``scale`` is the median of the heavy-tailed value distribution and
    ``tail`` its log-scale spread.  ``beta`` and ``alpha`` apply to the
    driver; ``source`` and ``coef`` to proxies.
    """

    name: str
    role: str
    scale: float = 10.0
    tail: float = 0.8
    beta: float = 0.0
    alpha: float | None = None
    source: str | None = None
    coef: float = 1.0

    def __post_init__(self) -> None:
        if self.role not in _ROLES:
            raise ConfigError(f"metric {self.name}: unknown role {self.role!r}")
        if self.scale <= 0 or self.tail <= 0:
            raise ConfigError(f"metric {self.name}: scale and tail must be positive")
        if self.role == "driver" and self.beta <= 0:
            raise ConfigError(f"driver {self.name} needs beta > 0")
        if self.role == "proxy" and not self.source:
            raise ConfigError(f"proxy {self.name} names no source metric")


@dataclass(frozen=True)
class SyntheticSpec:
    """Complete recipe for one synthetic corpus."""

    seed: int
    n_systems: int
    versions_per_system: int
    size_range: tuple[int, int]
    metrics: tuple[PlantedMetric, ...]
    risk_increase: float = 0.10
    size_law: tuple[float, float] | None = None  # (slope, intercept)
    defect_ratio_range: tuple[float, float] | None = None
    defect_intensity: float = 1.0

    def __post_init__(self) -> None:
        if self.n_systems < 1 or self.versions_per_system < 1:
            raise ConfigError("need at least one system and one version")
        lo, hi = self.size_range
        if lo < 1 or hi < lo:
            raise ConfigError(f"bad size_range {self.size_range}")
        if not 0.0 < self.risk_increase <= 0.5:
            raise ConfigError("risk_increase must lie in (0, 0.5]")
        drivers = [m for m in self.metrics if m.role == "driver"]
        if len(drivers) != 1:
            raise ConfigError(f"exactly one driver metric required, got {len(drivers)}")
        names = [m.name for m in self.metrics]
        if len(set(names)) != len(names):
            raise ConfigError("metric names must be unique")
        for m in self.metrics:
            if m.role == "proxy" and m.source != drivers[0].name:
                raise ConfigError(
                    f"proxy {m.name}: source must be the driver ({drivers[0].name})"
                )
        if self.size_law is not None and self.defect_ratio_range is not None:
            raise ConfigError("size_law and defect_ratio_range are mutually exclusive")
        if self.size_law is None and self.defect_ratio_range is None:
            if drivers[0].alpha is None:
                raise ConfigError(
                    "without size_law or defect_ratio_range the driver needs "
                    "a fixed alpha"
                )
        if self.defect_ratio_range is not None:
            rlo, rhi = self.defect_ratio_range
            if not 0.0 < rlo <= rhi < 1.0:
                raise ConfigError(f"bad defect_ratio_range {self.defect_ratio_range}")

    @property
    def driver(self) -> PlantedMetric:
        return next(m for m in self.metrics if m.role == "driver")

    @classmethod
    def from_mapping(cls, obj: Mapping[str, Any]) -> "SyntheticSpec":
        try:
            metrics = tuple(
                PlantedMetric(
                    name=str(m["name"]),
                    role=str(m["role"]),
                    scale=float(m.get("scale", 10.0)),
                    tail=float(m.get("tail", 0.8)),
                    beta=float(m.get("beta", 0.0)),
                    alpha=None if m.get("alpha") is None else float(m["alpha"]),
                    source=m.get("source"),
                    coef=float(m.get("coef", 1.0)),
                )
                for m in obj["metrics"]
            )
            law = obj.get("size_law")
            ratio = obj.get("defect_ratio_range")
            return cls(
                seed=int(obj["seed"]),
                n_systems=int(obj["n_systems"]),
                versions_per_system=int(obj["versions_per_system"]),
                size_range=(int(obj["size_range"][0]), int(obj["size_range"][1])),
                metrics=metrics,
                risk_increase=float(obj.get("risk_increase", 0.10)),
                size_law=None if law is None
                else (float(law["slope"]), float(law["intercept"])),
                defect_ratio_range=None if ratio is None
                else (float(ratio[0]), float(ratio[1])),
                defect_intensity=float(obj.get("defect_intensity", 1.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed synthetic spec: {exc}") from None


def load_spec(path: str | Path) -> SyntheticSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return SyntheticSpec.from_mapping(obj)


def _draw_counts(rng: np.random.Generator, n: int, scale: float, tail: float) -> np.ndarray:
    """Discrete heavy-tailed metric values: floored lognormal."""
    return np.floor(rng.lognormal(math.log(scale), tail, size=n)).astype(np.int64)


def _sigmoid_vec(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


# alpha range on which the planted threshold is monotone in alpha
# (background risk stays below 0.42, well under the 0.45 turning point
# for a 0.10 increase)
_ALPHA_LO = -16.0
_ALPHA_HI = math.log(0.42 / 0.58)


def _planted_threshold(alpha: float, beta: float, inc: float) -> float:
    p0 = 1.0 / (1.0 + math.exp(-alpha))
    return varl_threshold(alpha, beta, p0 + inc)


def _solve_alpha_for_threshold(beta: float, inc: float, target: float) -> float:
    """Alpha whose model puts the threshold exactly at ``target``.

    The threshold is strictly decreasing in alpha on the search range,
    so plain bisection suffices.
    """
    lo, hi = _ALPHA_LO, _ALPHA_HI
    t_lo = _planted_threshold(lo, beta, inc)  # large threshold
    t_hi = _planted_threshold(hi, beta, inc)  # small threshold
    if not t_hi <= target <= t_lo:
        raise ConfigError(
            f"planted threshold {target:.3f} unreachable for beta={beta}, "
            f"increase={inc} (reachable range [{t_hi:.3f}, {t_lo:.3f}])"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _planted_threshold(mid, beta, inc) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _solve_alpha_for_ratio(beta: float, xs: np.ndarray, target: float) -> float:
    """Alpha whose expected faulty fraction over ``xs`` is ``target``."""
    lo, hi = -30.0, 30.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(np.mean(_sigmoid_vec(mid + beta * xs))) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def planted_alpha_for_size(spec: SyntheticSpec, size: int) -> float:
    """The alpha the generator plants for a dataset of ``size`` classes."""
    if spec.size_law is None:
        raise ConfigError("spec has no size law")
    slope, intercept = spec.size_law
    return _solve_alpha_for_threshold(
        spec.driver.beta, spec.risk_increase, slope * size + intercept
    )


def generate_synthetic(spec: SyntheticSpec) -> Corpus:
    """Draw the corpus a spec describes.  Same spec, same corpus."""
    rng = np.random.default_rng(spec.seed)
    driver = spec.driver
    metric_ids = tuple(MetricId(m.name) for m in spec.metrics)
    datasets = []
    for si in range(spec.n_systems):
        system = f"sys{si + 1:02d}"
        for vi in range(spec.versions_per_system):
            version = f"1.{vi}"
            size = int(rng.integers(spec.size_range[0], spec.size_range[1] + 1))

            columns: dict[str, np.ndarray] = {}
            columns[driver.name] = _draw_counts(rng, size, driver.scale, driver.tail)
            for m in spec.metrics:
                if m.role == "proxy":
                    noise = _draw_counts(rng, size, m.scale, m.tail)
                    columns[m.name] = np.floor(
                        m.coef * columns[driver.name]
                    ).astype(np.int64) + noise
                elif m.role == "noise":
                    columns[m.name] = _draw_counts(rng, size, m.scale, m.tail)

            x = columns[driver.name].astype(np.float64)
            if spec.size_law is not None:
                alpha = planted_alpha_for_size(spec, size)
            elif spec.defect_ratio_range is not None:
                target = float(rng.uniform(*spec.defect_ratio_range))
                alpha = _solve_alpha_for_ratio(driver.beta, x, target)
            else:
                alpha = float(driver.alpha)

            risk = _sigmoid_vec(alpha + driver.beta * x)
            faulty = rng.random(size) < risk
            extra = rng.poisson(spec.defect_intensity, size)
            records = tuple(
                ClassRecord(
                    class_name=f"C{i:04d}",
                    metric_values={
                        MetricId(m.name): int(columns[m.name][i])
                        for m in spec.metrics
                    },
                    defect_count=int(1 + extra[i]) if faulty[i] else 0,
                )
                for i in range(size)
            )
            datasets.append(
                SystemDataset(
                    system_id=system,
                    version_label=version,
                    version_order=vi,
                    classes=records,
                )
            )
    return Corpus(tuple(datasets), metric_ids)
