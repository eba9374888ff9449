"""Bundled reference data: estimation models, toy corpus, synth specs.

The shipped estimation models let anyone turn a system size into
thresholds without owning a defect corpus; the toy corpus and the
synthetic specs exist so every pipeline stage can be exercised out of
the box.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .dataset import MetricId
from .errors import FixtureLookupError, SchemaError
from .estimation import EstimationModel, estimate_threshold
from .logit import ThresholdResult

__all__ = [
    "data_path",
    "load_fixture_models",
    "estimate_from_fixture",
    "FIXTURE_MODELS_FILE",
    "TOY_CORPUS_FILE",
]

FIXTURE_MODELS_FILE = "shipped_models.json"
TOY_CORPUS_FILE = "toy_corpus.csv"


def data_path(name: str) -> Path:
    """Filesystem path of a bundled data file."""
    path = Path(str(resources.files("metric_thresholds") / "data" / name))
    if not path.exists():
        raise FixtureLookupError(f"no bundled data file {name!r}")
    return path


def load_fixture_models(path: str | Path | None = None) -> dict[MetricId, EstimationModel]:
    """The shipped size-to-threshold models, keyed by metric."""
    if path is None:
        path = data_path(FIXTURE_MODELS_FILE)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    try:
        models = {}
        for name, entry in obj["models"].items():
            metric = MetricId(name)
            models[metric] = EstimationModel(
                slope=float(entry["slope"]),
                intercept=float(entry["intercept"]),
                n_train=int(entry["n_train"]),
                metric=metric,
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed model fixture: {exc}") from None
    return models


def estimate_from_fixture(
    metric: MetricId, size: int, path: str | Path | None = None
) -> ThresholdResult:
    """Threshold for ``size`` classes from the shipped models alone.

    Raises :class:`FixtureLookupError` for metrics without a shipped
    model (notably WMC, whose size correlation did not hold up).
    """
    models = load_fixture_models(path)
    if metric not in models:
        have = ", ".join(sorted(str(m) for m in models))
        raise FixtureLookupError(
            f"no estimation model for {metric}; the fixture covers {have}"
        )
    return estimate_threshold(models[metric], size)
