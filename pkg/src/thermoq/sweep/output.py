"""Deterministic CSV emission and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Sequence

__all__ = ["RunManifest", "Table", "format_value", "render_csv", "sha256_file", "write_table"]


def format_value(v: Any) -> str:
    """17 significant digits for floats; booleans as 0/1; ints and strings verbatim."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".16e")
    if isinstance(v, str):
        return v
    # numpy scalars
    if hasattr(v, "item"):
        return format_value(v.item())
    raise TypeError(f"cannot format {type(v).__name__}")


@dataclass
class Table:
    columns: Sequence[str]
    rows: list[Sequence[Any]] = field(default_factory=list)

    def column(self, name: str) -> list[Any]:
        i = list(self.columns).index(name)
        return [r[i] for r in self.rows]


def render_csv(table: Table) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        if len(row) != len(table.columns):
            raise ValueError("row width does not match header")
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue().encode("utf-8")


def write_table(table: Table, path: str) -> str:
    """Write ``table`` to ``path``; returns its sha256 hex digest."""
    data = render_csv(table)
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass
class RunManifest:
    tool_version: str
    command: str
    config_text: str
    master_seed: int | None
    shots: int | None
    started: str = field(default_factory=_now)
    finished: str | None = None
    outputs: dict[str, str] = field(default_factory=dict)
    exit_code: int | None = None

    def finish(self, exit_code: int) -> None:
        self.finished = _now()
        self.exit_code = exit_code

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path: str) -> "RunManifest":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(**data)
