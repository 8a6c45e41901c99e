"""Reading, writing and summarising delimited galaxy catalogs.

The reader is header driven: a *schema* maps the logical field names of
:class:`GalaxyRecord` to the column headers actually present in the file, so
survey exports with arbitrary column order and extra columns can be read
without editing them.
"""

from __future__ import annotations

import csv
import io
import math
import os
import re
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import astuple, dataclass, fields

from .errors import EmptyInputError, RowError, SchemaError

UNIVERSE_AGE = 13.8

NUMERIC_FIELDS = (
    "stellar_mass",
    "sfr",
    "redshift",
    "age",
    "abs_magnitude",
    "right_ascension",
    "declination",
)

DEFAULT_SCHEMA = {"id": "id", **{name: name for name in NUMERIC_FIELDS}}

# Dot decimal only; rejects "nan", "inf", "1,5" and python's "1_000".
_NUMBER = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")


@dataclass(frozen=True)
class GalaxyRecord:
    id: str
    stellar_mass: float
    sfr: float
    redshift: float
    age: float
    abs_magnitude: float
    right_ascension: float
    declination: float

    def as_row(self):
        return astuple(self)


@dataclass(frozen=True)
class Catalog(Sequence):
    """Parsed records in file order, plus the rows that were rejected."""

    records: tuple
    rejected: tuple = ()

    def __len__(self):
        return len(self.records)

    def __getitem__(self, item):
        return self.records[item]

    def __iter__(self) -> Iterator[GalaxyRecord]:
        return iter(self.records)

    @property
    def n_rows(self):
        return len(self.records) + len(self.rejected)


@dataclass(frozen=True)
class FieldSummary:
    field: str
    min: float
    max: float
    mean: float
    count: int


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
        return data.decode("utf-8-sig")
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8-sig")
    return data.lstrip("﻿")


def _parse_number(cell):
    text = cell.strip()
    if not _NUMBER.match(text):
        return None
    value = float(text)
    return value if math.isfinite(value) else None


def _check_record(values):
    """Return (field, message) for the first violated invariant, else None."""
    if values["sfr"] < 0:
        return "sfr", "star formation rate must be >= 0"
    if values["redshift"] < 0:
        return "redshift", "redshift must be >= 0"
    if not 0 < values["age"] <= UNIVERSE_AGE:
        return "age", f"age must lie in (0, {UNIVERSE_AGE}]"
    return None


def parse_catalog(source, schema: Mapping[str, str] | None = None, delimiter=",", strict=False):
    """Parse a delimited catalog into a :class:`Catalog`.

    ``source`` is a path or a binary/text file object. ``schema`` maps logical
    field names to header names; missing entries fall back to the logical
    name itself. The ``id`` column is optional and defaults to the data row
    index.

    Bad rows are collected in ``Catalog.rejected`` as :class:`RowError`
    instances, or raised immediately when ``strict`` is true.
    """
    text = _open_text(source)
    if not text.strip():
        raise EmptyInputError("catalog is empty")

    mapping = dict(DEFAULT_SCHEMA)
    if schema:
        unknown = set(schema) - set(DEFAULT_SCHEMA)
        if unknown:
            raise SchemaError(sorted(unknown)[0], "unknown logical field")
        mapping.update(schema)

    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    header = [h.strip() for h in next(reader)]
    index = {name: i for i, name in enumerate(header)}
    for logical in NUMERIC_FIELDS:
        if mapping[logical] not in index:
            raise SchemaError(mapping[logical], logical)
    id_col = index.get(mapping["id"])

    records, rejected = [], []
    row = -1
    for cells in reader:
        if not cells or all(not c.strip() for c in cells):
            continue
        row += 1
        try:
            records.append(_parse_row(cells, row, reader.line_num, index, mapping, id_col))
        except RowError as err:
            if strict:
                raise
            rejected.append(err)
    return Catalog(tuple(records), tuple(rejected))


def _parse_row(cells, row, line, index, mapping, id_col):
    values = {}
    for logical in NUMERIC_FIELDS:
        column = mapping[logical]
        i = index[column]
        if i >= len(cells):
            raise RowError(row, column, "missing cell", line)
        value = _parse_number(cells[i])
        if value is None:
            raise RowError(row, column, f"not a finite number: {cells[i]!r}", line)
        values[logical] = value
    problem = _check_record(values)
    if problem:
        raise RowError(row, mapping[problem[0]], problem[1], line)
    if id_col is not None and id_col < len(cells) and cells[id_col].strip():
        ident = cells[id_col].strip()
    else:
        ident = str(row)
    return GalaxyRecord(id=ident, **values)


def write_catalog(records, dest, schema: Mapping[str, str] | None = None, delimiter=","):
    """Write records as delimited text that :func:`parse_catalog` reads back exactly."""
    mapping = dict(DEFAULT_SCHEMA)
    mapping.update(schema or {})
    names = [f.name for f in fields(GalaxyRecord)]

    def _write(fh):
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow([mapping[n] for n in names])
        for rec in records:
            writer.writerow([rec.id] + [repr(float(getattr(rec, n))) for n in names[1:]])

    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            _write(fh)
    else:
        _write(dest)


def catalog_digest(records):
    """Per-field min/max/mean summary, keyed by field name."""
    records = list(records)
    if not records:
        raise EmptyInputError("cannot summarise an empty record list")
    out = {}
    for name in NUMERIC_FIELDS:
        col = [getattr(r, name) for r in records]
        out[name] = FieldSummary(name, min(col), max(col), math.fsum(col) / len(col), len(col))
    return out


def write_digest(digest, dest, delimiter=","):
    def _write(fh):
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["field", "min", "max", "mean", "count"])
        for s in digest.values():
            writer.writerow([s.field, repr(s.min), repr(s.max), repr(s.mean), s.count])

    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            _write(fh)
    else:
        _write(dest)
