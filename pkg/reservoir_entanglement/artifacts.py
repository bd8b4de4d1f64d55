"""CSV and JSON writers for run outputs"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

DISTRIBUTION_NAME = "reservoir-entanglement"
MANIFEST_NAME = "manifest.json"
# Longest axis written for a 2-D field
FIELD_EXPORT_LIMIT = 400

PathLike = Union[str, Path]


def format_number(value: float) -> str:
    """12 significant digits; -0 is written as 0"""
    return format(float(value) + 0.0, ".12g")


def package_version() -> str:
    try:
        return metadata.version(DISTRIBUTION_NAME)
    except metadata.PackageNotFoundError:
        return "0+unknown"


def export_stride(size: int, limit: int = FIELD_EXPORT_LIMIT) -> int:
    return max(1, int(math.ceil(size / limit)))


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """Write a header plus rows, numbers at 12 significant digits; returns the data row count"""
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell if isinstance(cell, str) else format_number(cell) for cell in row])
            count += 1
    logger.info("Wrote %s (%d rows)", path, count)
    return count


def write_columns(path: PathLike, columns: Dict[str, np.ndarray]) -> int:
    """Equal-length columns, one CSV column each"""
    return write_csv(path, list(columns), zip(*columns.values()))


def write_field(
    path: PathLike,
    x: np.ndarray,
    y: np.ndarray,
    values: np.ndarray,
    names: Sequence[str],
    stride: Optional[int] = None,
) -> int:
    """
    Long-format (x, y, value) triples of a field values[i, j] = f(x[i], y[j]).

    Both axes are thinned by the same stride; the default keeps the longer axis
    within FIELD_EXPORT_LIMIT samples.
    """
    if stride is None:
        stride = export_stride(max(len(x), len(y)))
    x = np.asarray(x)[::stride]
    y = np.asarray(y)[::stride]
    values = np.asarray(values)[::stride, ::stride]

    def rows():
        for i, x_value in enumerate(x):
            for j, y_value in enumerate(y):
                yield x_value, y_value, values[i, j]

    return write_csv(path, list(names) + ["value"], rows())


def count_rows(path: PathLike) -> int:
    with Path(path).open("r", encoding="utf-8") as handle:
        return max(0, sum(1 for _ in handle) - 1)


class FileRecord(NamedTuple):
    name: str
    rows: int


@dataclass
class RunManifest:
    config: Dict[str, Any]
    version: str
    files: List[FileRecord] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    duration_seconds: float = 0.0
    status: str = "ok"

    def add_file(self, name: str, rows: int):
        self.files.append(FileRecord(name=name, rows=rows))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "version": self.version,
            "files": [record._asdict() for record in self.files],
            "diagnostics": self.diagnostics,
            "duration_seconds": self.duration_seconds,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        return cls(
            config=data["config"],
            version=data["version"],
            files=[FileRecord(**record) for record in data["files"]],
            diagnostics=data.get("diagnostics", {}),
            duration_seconds=data.get("duration_seconds", 0.0),
            status=data.get("status", "ok"),
        )

    def write(self, directory: PathLike) -> Path:
        path = Path(directory) / MANIFEST_NAME
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info("Wrote %s", path)
        return path

    def missing_files(self, directory: PathLike) -> List[str]:
        """Listed files that are absent, empty or whose row count disagrees"""
        missing = []
        for record in self.files:
            path = Path(directory) / record.name
            if not path.is_file() or path.stat().st_size == 0 or count_rows(path) != record.rows:
                missing.append(record.name)
        return missing


def read_manifest(directory: PathLike) -> RunManifest:
    path = Path(directory) / MANIFEST_NAME
    return RunManifest.from_dict(json.loads(path.read_text(encoding="utf-8")))
