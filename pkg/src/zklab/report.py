"""Assertions, tables and report persistence shared by experiments and the CLI."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Assertion:
    """One checked property. passed=None marks an informational record."""

    name: str
    passed: bool | None
    value: float | None = None
    limit: float | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "value": _json_float(self.value),
                "limit": _json_float(self.limit), "detail": self.detail}


@dataclass
class Table:
    """Column names with units, and rows of numbers or short strings."""

    name: str
    columns: list[tuple[str, str]]
    rows: list[list] = field(default_factory=list)

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"table {self.name}: expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(list(values))

    def header(self) -> list[str]:
        return [f"{c} [{u}]" for c, u in self.columns]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _json_float(v):
    if v is None:
        return None
    v = float(v)
    if np.isfinite(v):
        return v
    return repr(v)


@dataclass
class Report:
    """Outcome of one experiment or module check."""

    kind: str
    assertions: list[Assertion] = field(default_factory=list)
    tables: list[Table] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    inconclusive: list[str] = field(default_factory=list)

    def check(self, name: str, ok: bool, value=None, limit=None, detail: str = "") -> bool:
        self.assertions.append(Assertion(name, bool(ok), None if value is None else float(value),
                                         None if limit is None else float(limit), detail))
        return bool(ok)

    def note(self, name: str, value=None, detail: str = "") -> None:
        self.assertions.append(Assertion(name, None, None if value is None else float(value), None, detail))

    def mark_inconclusive(self, reason: str) -> None:
        self.inconclusive.append(reason)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions if a.passed is not None)

    @property
    def status(self) -> str:
        if not self.passed:
            return "fail"
        if self.inconclusive:
            return "inconclusive"
        return "pass"

    def table(self, name: str) -> Table:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    def extend(self, other: "Report", prefix: str) -> None:
        for a in other.assertions:
            self.assertions.append(Assertion(f"{prefix}.{a.name}", a.passed, a.value, a.limit, a.detail))
        for t in other.tables:
            self.tables.append(Table(f"{prefix}-{t.name}", t.columns, t.rows))
        self.inconclusive.extend(f"{prefix}: {r}" for r in other.inconclusive)
        if other.metadata:
            self.metadata[prefix] = other.metadata


def canonical_hash(obj) -> str:
    """sha256 of the canonical JSON text of a config mapping."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, (tuple, set)):
        return list(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def atomic_write(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
