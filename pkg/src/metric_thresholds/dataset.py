"""Per-class defect data grouped into system versions.

A :class:`Corpus` is an immutable collection of :class:`SystemDataset`
objects, one per released version of a software system.  Each dataset
holds one :class:`ClassRecord` per class with its metric values and its
defect count.  A class is *faulty* when it has at least one defect.

Loading is column-mapping driven: :func:`load_corpus` takes a
:class:`ColumnSchema` naming the system / version / class / bug columns
and the metric columns, so differently shaped CSV exports can be read
without code changes.
"""

from __future__ import annotations

import csv
import json
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import (
    DegeneratePopulationError,
    DuplicateClassError,
    EmptyInputError,
    SchemaError,
)

__all__ = [
    "MetricId",
    "ClassRecord",
    "SystemDataset",
    "Corpus",
    "ColumnSchema",
    "CBO",
    "DCC",
    "EXPORT_COUPLING",
    "IMPORT_COUPLING",
    "NOM",
    "WMC",
    "CANONICAL_METRICS",
    "version_sort_key",
    "defect_ratio",
    "population_defect_ratio",
    "system_size",
    "latest_versions",
    "load_corpus",
    "corpus_to_obj",
    "corpus_from_obj",
    "csv_schema_for",
    "save_corpus_csv",
    "save_corpus",
    "load_corpus_json",
]


@dataclass(frozen=True, order=True)
class MetricId:
    """Identifier of a count-valued class-level metric."""

    name: str

    def __post_init__(self) -> None:
        if not self.name or not self.name.strip():
            raise ValueError("metric name must be non-empty")

    def __str__(self) -> str:
        return self.name


CBO = MetricId("CBO")
DCC = MetricId("DCC")
EXPORT_COUPLING = MetricId("ExportCoupling")
IMPORT_COUPLING = MetricId("ImportCoupling")
NOM = MetricId("NOM")
WMC = MetricId("WMC")

#: The six metrics the threshold study is built around, in report order.
CANONICAL_METRICS = (CBO, DCC, EXPORT_COUPLING, IMPORT_COUPLING, NOM, WMC)


@dataclass(frozen=True)
class ClassRecord:
    """One class: its metric values and how many defects it carries."""

    class_name: str
    metric_values: Mapping[MetricId, int]
    defect_count: int

    def __post_init__(self) -> None:
        if not self.class_name:
            raise ValueError("class_name must be non-empty")
        if not isinstance(self.defect_count, int) or self.defect_count < 0:
            raise ValueError(
                f"defect_count must be a non-negative int, got {self.defect_count!r}"
            )
        for mid, value in self.metric_values.items():
            if not isinstance(mid, MetricId):
                raise ValueError(f"metric key {mid!r} is not a MetricId")
            if not isinstance(value, int) or value < 0:
                raise ValueError(
                    f"metric {mid} of {self.class_name!r} must be a "
                    f"non-negative int, got {value!r}"
                )

    @property
    def faulty(self) -> bool:
        return self.defect_count >= 1

    def value(self, metric: MetricId) -> int:
        return self.metric_values[metric]


@dataclass(frozen=True)
class SystemDataset:
    """All classes of one released version of one system."""

    system_id: str
    version_label: str
    version_order: int
    classes: tuple[ClassRecord, ...]

    def __post_init__(self) -> None:
        if not self.system_id:
            raise ValueError("system_id must be non-empty")
        if not self.version_label:
            raise ValueError("version_label must be non-empty")
        if not self.classes:
            raise ValueError(
                f"{self.system_id} {self.version_label}: dataset has no classes"
            )
        seen: set[str] = set()
        for rec in self.classes:
            if rec.class_name in seen:
                raise DuplicateClassError(
                    f"{self.system_id} {self.version_label}: duplicate class "
                    f"{rec.class_name!r}"
                )
            seen.add(rec.class_name)

    @property
    def key(self) -> tuple[str, str]:
        return (self.system_id, self.version_label)

    @property
    def label(self) -> str:
        return f"{self.system_id} {self.version_label}"


@dataclass(frozen=True)
class Corpus:
    """An immutable set of datasets sharing one metric vocabulary."""

    datasets: tuple[SystemDataset, ...]
    metric_ids: tuple[MetricId, ...]

    def __post_init__(self) -> None:
        if len(set(self.metric_ids)) != len(self.metric_ids):
            raise ValueError("metric_ids contains duplicates")
        seen: set[tuple[str, str]] = set()
        wanted = set(self.metric_ids)
        for ds in self.datasets:
            if ds.key in seen:
                raise ValueError(f"duplicate dataset {ds.label}")
            seen.add(ds.key)
            for rec in ds.classes:
                missing = wanted - set(rec.metric_values)
                if missing:
                    names = ", ".join(sorted(str(m) for m in missing))
                    raise ValueError(
                        f"{ds.label}: class {rec.class_name!r} lacks {names}"
                    )

    def __len__(self) -> int:
        return len(self.datasets)

    def systems(self) -> list[str]:
        """Distinct system ids, in first-appearance order."""
        out: list[str] = []
        for ds in self.datasets:
            if ds.system_id not in out:
                out.append(ds.system_id)
        return out

    def dataset(self, system_id: str, version_label: str) -> SystemDataset:
        for ds in self.datasets:
            if ds.key == (system_id, version_label):
                return ds
        raise KeyError(f"no dataset {system_id} {version_label}")

    def versions_of(self, system_id: str) -> list[SystemDataset]:
        """Datasets of one system, oldest first."""
        hits = [ds for ds in self.datasets if ds.system_id == system_id]
        hits.sort(key=lambda ds: (ds.version_order, version_sort_key(ds.version_label)))
        return hits


_SPLIT_DIGITS = re.compile(r"(\d+)")


def version_sort_key(label: str) -> tuple:
    """Order version labels so that numeric runs compare as numbers.

    "1.2" sorts before "1.10", and "3.4.1" after "3.4".
    """
    key = []
    for part in _SPLIT_DIGITS.split(label):
        if part.isdigit():
            key.append((1, int(part), ""))
        elif part:
            key.append((0, 0, part))
    return tuple(key)


def defect_ratio(ds: SystemDataset) -> float:
    """Fraction of classes in one dataset that are faulty."""
    faulty = sum(1 for rec in ds.classes if rec.faulty)
    return faulty / len(ds.classes)


def population_defect_ratio(corpus: Corpus, pooled: bool = False) -> float:
    """Defect ratio of the whole corpus.

    By default this is the unweighted mean of the per-dataset ratios, so
    every dataset counts the same regardless of its size.  With
    ``pooled=True`` it is instead total faulty classes over total
    classes.  A ratio of exactly 0 or 1 admits no intercept correction
    and raises :class:`DegeneratePopulationError`.
    """
    if not corpus.datasets:
        raise EmptyInputError("corpus has no datasets")
    if pooled:
        faulty = sum(1 for ds in corpus.datasets for rec in ds.classes if rec.faulty)
        total = sum(len(ds.classes) for ds in corpus.datasets)
        ratio = faulty / total
    else:
        ratio = sum(defect_ratio(ds) for ds in corpus.datasets) / len(corpus.datasets)
    if ratio <= 0.0 or ratio >= 1.0:
        raise DegeneratePopulationError(
            f"population defect ratio {ratio} leaves nothing to correct against"
        )
    return ratio


def system_size(ds: SystemDataset) -> int:
    """Size of a system version, measured in number of classes."""
    return len(ds.classes)


def latest_versions(corpus: Corpus) -> list[SystemDataset]:
    """The newest dataset of each system, in corpus system order."""
    out = []
    for system_id in corpus.systems():
        out.append(corpus.versions_of(system_id)[-1])
    return out


@dataclass(frozen=True)
class ColumnSchema:
    """Maps CSV columns onto the corpus model.

    ``metrics`` maps column name to metric name.  ``order_column`` is
    optional; without it version order is derived from the labels via
    :func:`version_sort_key`.  Classes whose name starts with one of
    ``exclude_prefixes`` are dropped before anything else happens.
    """

    system_column: str
    version_column: str
    class_column: str
    bug_column: str
    metrics: Mapping[str, str]
    order_column: str | None = None
    exclude_prefixes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.metrics:
            raise SchemaError("schema names no metric columns")

    @classmethod
    def from_mapping(cls, obj: Mapping[str, Any]) -> "ColumnSchema":
        try:
            metrics_raw = obj["metrics"]
            if isinstance(metrics_raw, Mapping):
                metrics = dict(metrics_raw)
            else:
                # a bare list means column name and metric name coincide
                metrics = {str(c): str(c) for c in metrics_raw}
            return cls(
                system_column=str(obj["system"]),
                version_column=str(obj["version"]),
                class_column=str(obj["class"]),
                bug_column=str(obj["bugs"]),
                metrics=metrics,
                order_column=str(obj["order"]) if obj.get("order") else None,
                exclude_prefixes=tuple(obj.get("exclude_prefixes", ())),
            )
        except KeyError as exc:
            raise SchemaError(f"schema is missing key {exc.args[0]!r}") from None

    @classmethod
    def from_file(cls, path: str | Path) -> "ColumnSchema":
        """Read a schema file, JSON or key=value lines.

        In the key=value form ``metrics`` is comma separated, each entry
        either a column name or ``column:metric``; so is
        ``exclude_prefixes``.
        """
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError:
            obj = _parse_kv_schema(text, path)
        if not isinstance(obj, Mapping):
            raise SchemaError(f"{path}: schema must be a JSON object or key=value lines")
        return cls.from_mapping(obj)


def _parse_kv_schema(text: str, path: str | Path) -> dict[str, Any]:
    obj: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SchemaError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "metrics":
            metrics: dict[str, str] = {}
            for entry in value.split(","):
                entry = entry.strip()
                if not entry:
                    continue
                col, sep, name = entry.partition(":")
                metrics[col.strip()] = name.strip() if sep else col.strip()
            obj[key] = metrics
        elif key == "exclude_prefixes":
            obj[key] = [p.strip() for p in value.split(",") if p.strip()]
        else:
            obj[key] = value
    return obj


def _parse_count(cell: str) -> int | None:
    """A non-negative integer count, or None when the cell is not one."""
    text = cell.strip()
    if not text:
        return None
    try:
        value = int(text)
    except ValueError:
        try:
            as_float = float(text)
        except ValueError:
            return None
        if not as_float.is_integer():
            return None
        value = int(as_float)
    return value if value >= 0 else None


def load_corpus(path: str | Path, schema: ColumnSchema) -> Corpus:
    """Read a CSV export into a :class:`Corpus`.

    Rows whose bug or metric cells are not non-negative integers are
    rejected with a warning that states how many were dropped.  Raises
    :class:`SchemaError` when named columns are absent from the header
    and :class:`EmptyInputError` when nothing usable remains.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyInputError(f"{path}: file is empty")
        header = set(reader.fieldnames)
        needed = [
            schema.system_column,
            schema.version_column,
            schema.class_column,
            schema.bug_column,
            *schema.metrics,
        ]
        if schema.order_column:
            needed.append(schema.order_column)
        missing = [c for c in needed if c not in header]
        if missing:
            raise SchemaError(f"{path}: header lacks columns {', '.join(missing)}")

        metric_ids = {col: MetricId(name) for col, name in schema.metrics.items()}
        groups: dict[tuple[str, str], list[ClassRecord]] = {}
        orders: dict[tuple[str, str], int] = {}
        rejected = 0
        for lineno, row in enumerate(reader, start=2):
            system = (row[schema.system_column] or "").strip()
            version = (row[schema.version_column] or "").strip()
            cname = (row[schema.class_column] or "").strip()
            if not system or not version or not cname:
                rejected += 1
                continue
            if any(cname.startswith(p) for p in schema.exclude_prefixes):
                continue
            bugs = _parse_count(row[schema.bug_column] or "")
            values: dict[MetricId, int] = {}
            ok = bugs is not None
            if ok:
                for col, mid in metric_ids.items():
                    v = _parse_count(row[col] or "")
                    if v is None:
                        ok = False
                        break
                    values[mid] = v
            if not ok:
                rejected += 1
                continue
            key = (system, version)
            rec = ClassRecord(cname, values, bugs)
            bucket = groups.setdefault(key, [])
            if any(r.class_name == cname for r in bucket):
                raise DuplicateClassError(
                    f"{path}:{lineno}: duplicate class {cname!r} in {system} {version}"
                )
            bucket.append(rec)
            if schema.order_column:
                order = _parse_count(row[schema.order_column] or "")
                if order is None:
                    raise SchemaError(
                        f"{path}:{lineno}: order cell is not a non-negative integer"
                    )
                prior = orders.setdefault(key, order)
                if prior != order:
                    raise SchemaError(
                        f"{path}:{lineno}: conflicting order values for {system} {version}"
                    )

    if rejected:
        warnings.warn(
            f"{path}: rejected {rejected} malformed row{'s' if rejected != 1 else ''}",
            stacklevel=2,
        )
    if not groups:
        raise EmptyInputError(f"{path}: no usable rows")

    if not schema.order_column:
        # derive per-system order from the version labels
        by_system: dict[str, list[str]] = {}
        for system, version in groups:
            by_system.setdefault(system, []).append(version)
        for system, labels in by_system.items():
            labels.sort(key=version_sort_key)
            for rank, label in enumerate(labels):
                orders[(system, label)] = rank

    datasets = [
        SystemDataset(system, version, orders[(system, version)], tuple(records))
        for (system, version), records in groups.items()
    ]
    datasets.sort(key=lambda ds: (ds.system_id, ds.version_order,
                                  version_sort_key(ds.version_label)))
    return Corpus(tuple(datasets), tuple(sorted(metric_ids.values())))


def corpus_to_obj(corpus: Corpus) -> dict[str, Any]:
    """Plain-data form of a corpus, suitable for JSON."""
    return {
        "metrics": [str(m) for m in corpus.metric_ids],
        "datasets": [
            {
                "system": ds.system_id,
                "version": ds.version_label,
                "order": ds.version_order,
                "classes": [
                    {
                        "name": rec.class_name,
                        "bugs": rec.defect_count,
                        "metrics": {str(m): v for m, v in sorted(rec.metric_values.items())},
                    }
                    for rec in ds.classes
                ],
            }
            for ds in corpus.datasets
        ],
    }


def corpus_from_obj(obj: Mapping[str, Any]) -> Corpus:
    """Inverse of :func:`corpus_to_obj`."""
    try:
        metric_ids = tuple(MetricId(str(m)) for m in obj["metrics"])
        datasets = []
        for entry in obj["datasets"]:
            classes = tuple(
                ClassRecord(
                    class_name=str(c["name"]),
                    metric_values={MetricId(str(m)): int(v)
                                   for m, v in c["metrics"].items()},
                    defect_count=int(c["bugs"]),
                )
                for c in entry["classes"]
            )
            datasets.append(
                SystemDataset(
                    system_id=str(entry["system"]),
                    version_label=str(entry["version"]),
                    version_order=int(entry["order"]),
                    classes=classes,
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed corpus object: {exc}") from None
    return Corpus(tuple(datasets), metric_ids)


def csv_schema_for(corpus: Corpus) -> ColumnSchema:
    """The schema :func:`save_corpus_csv` writes under."""
    return ColumnSchema(
        system_column="system",
        version_column="version",
        class_column="class",
        bug_column="bugs",
        metrics={str(m): str(m) for m in corpus.metric_ids},
    )


def save_corpus_csv(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus as CSV readable back via :func:`csv_schema_for`."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["system", "version", "class", "bugs",
                         *(str(m) for m in corpus.metric_ids)])
        for ds in corpus.datasets:
            for rec in ds.classes:
                writer.writerow(
                    [ds.system_id, ds.version_label, rec.class_name,
                     rec.defect_count,
                     *(rec.metric_values[m] for m in corpus.metric_ids)]
                )


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(corpus_to_obj(corpus), fh, indent=2, sort_keys=False)
        fh.write("\n")


def load_corpus_json(path: str | Path) -> Corpus:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return corpus_from_obj(obj)
