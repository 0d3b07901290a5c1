"""Versioned CSV ingestion.

Every dqcbench file starts with `# dqcbench-csv v<N> <command>`; anything
else is rejected before parsing.  Values stay as strings in the table;
figure code pulls typed columns through the accessors.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EXPECTED_SCHEMA = 1

_HEADER = re.compile(r"# dqcbench-csv v(\d+) (\S+)\s*$")


class SchemaMismatchError(ValueError):
    """Input file does not carry the CSV schema this package understands."""


@dataclass(frozen=True)
class Table:
    command: str
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def column(self, name: str) -> list[str]:
        if name not in self.columns:
            raise SchemaMismatchError(
                f"column {name!r} missing; file has {', '.join(self.columns)}"
            )
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def floats(self, name: str) -> np.ndarray:
        return np.array([float(x) for x in self.column(name)])

    def require(self, *names: str) -> None:
        for name in names:
            self.column(name)

    def groups(self, *names: str) -> dict[tuple[str, ...], "Table"]:
        """Split rows by the values of the named columns, key order sorted."""
        keys = list(zip(*(self.column(n) for n in names)))
        out: dict[tuple[str, ...], Table] = {}
        for key in sorted(set(keys)):
            rows = tuple(r for r, k in zip(self.rows, keys) if k == key)
            out[key] = Table(self.command, self.columns, rows)
        return out


def read_table(path: str | Path) -> Table:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise SchemaMismatchError(f"{path}: empty file, no schema header")
    match = _HEADER.match(lines[0])
    if match is None:
        raise SchemaMismatchError(
            f"{path}: first line is not a dqcbench-csv header: {lines[0]!r}"
        )
    version = int(match.group(1))
    if version != EXPECTED_SCHEMA:
        raise SchemaMismatchError(
            f"{path}: schema version mismatch: expected v{EXPECTED_SCHEMA}, "
            f"found v{version}"
        )
    parsed = list(csv.reader(lines[1:]))
    if not parsed:
        raise SchemaMismatchError(f"{path}: header present but no column row")
    columns = tuple(parsed[0])
    rows = tuple(tuple(r) for r in parsed[1:] if r)
    if not rows:
        raise ValueError(f"{path}: no data rows, refusing to render")
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(
                f"{path}: row width {len(row)} != {len(columns)} columns"
            )
    return Table(match.group(2), columns, rows)
