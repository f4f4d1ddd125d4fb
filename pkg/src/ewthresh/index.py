"""Unary bitmap indexes over tables, query translation and the row-scan baseline."""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .bitmap import CompressedBitmap

INDEX_MAGIC = b"EWIX"


class IngestionError(ValueError):
    """Malformed tabular input."""


class QueryError(ValueError):
    """A query refers to something the table or index does not have."""


class IndexFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Criterion:
    attribute: str
    value: str

    @classmethod
    def parse(cls, text: str) -> "Criterion":
        """``"City=Montreal"`` -> Criterion("City", "Montreal")."""
        attr, sep, value = text.partition("=")
        if not sep:
            raise QueryError(f"criterion {text!r} is not of the form attribute=value")
        return cls(attr.strip(), value)


@dataclass
class Table:
    column_names: list
    rows: list

    def __post_init__(self):
        if not self.column_names:
            raise IngestionError("a table needs at least one column")
        if not self.rows:
            raise IngestionError("a table needs at least one row")
        D = len(self.column_names)
        for i, row in enumerate(self.rows):
            if len(row) != D:
                raise IngestionError(f"row {i} has {len(row)} cells, expected {D}")

    @property
    def r(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise QueryError(f"unknown attribute {name!r}") from None


def read_csv(source: Union[str, Path, io.TextIOBase]) -> Table:
    """Comma-separated, header row, UTF-8, RFC 4180 quoting."""
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_csv(fh)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise IngestionError("empty CSV: no header row") from None
    except csv.Error as exc:
        raise IngestionError(f"line {reader.line_num}: {exc}") from None
    rows = []
    try:
        for row in reader:
            if len(row) != len(header):
                raise IngestionError(
                    f"line {reader.line_num}: {len(row)} fields, header has {len(header)}"
                )
            rows.append(row)
    except csv.Error as exc:
        raise IngestionError(f"line {reader.line_num}: {exc}") from None
    if not rows:
        raise IngestionError("CSV has a header but no data rows")
    return Table(header, rows)


def write_csv(table: Table, path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.column_names)
        w.writerows(table.rows)


@dataclass
class BitmapIndex:
    """One bitmap per (attribute, value), over ``r`` rows in table order."""

    r: int
    attributes: list
    # attribute -> {value -> bitmap}, values in order of first appearance
    columns: dict = field(default_factory=dict)

    def __getitem__(self, key) -> CompressedBitmap:
        attr, value = key
        return self.columns[attr][value]

    def get(self, attr: str, value: str) -> Optional[CompressedBitmap]:
        return self.columns.get(attr, {}).get(value)

    def keys(self) -> list:
        return [(a, v) for a in self.attributes for v in self.columns[a]]

    def items(self):
        for a in self.attributes:
            for v, bm in self.columns[a].items():
                yield (a, v), bm

    def __len__(self) -> int:
        return sum(len(c) for c in self.columns.values())

    def total_ewah_size(self) -> int:
        return sum(bm.ewah_size() for _, bm in self.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitmapIndex):
            return NotImplemented
        return (
            self.r == other.r
            and self.attributes == other.attributes
            and list(self.items()) == list(other.items())
        )

    # ---- on-disk format --------------------------------------------------

    def to_bytes(self) -> bytes:
        out = [struct.pack("<4sQI", INDEX_MAGIC, self.r, len(self.attributes))]
        for a in self.attributes:
            out.append(_pack_str(a))
            values = self.columns[a]
            out.append(struct.pack("<I", len(values)))
            for v, bm in values.items():
                out.append(_pack_str(v))
                out.append(bm.serialize())
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "BitmapIndex":
        try:
            magic, r, nattr = struct.unpack_from("<4sQI", data, 0)
        except struct.error:
            raise IndexFormatError("truncated index header") from None
        if magic != INDEX_MAGIC:
            raise IndexFormatError(f"bad index magic {magic!r}")
        off = struct.calcsize("<4sQI")
        attributes = []
        columns = {}
        try:
            for _ in range(nattr):
                name, off = _unpack_str(data, off)
                (nval,) = struct.unpack_from("<I", data, off)
                off += 4
                values = {}
                for _ in range(nval):
                    v, off = _unpack_str(data, off)
                    bm, off = CompressedBitmap.read_from(data, off)
                    values[v] = bm
                attributes.append(name)
                columns[name] = values
        except struct.error:
            raise IndexFormatError("truncated index body") from None
        if off != len(data):
            raise IndexFormatError(f"{len(data) - off} trailing bytes after index")
        return cls(r, attributes, columns)

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "BitmapIndex":
        return cls.from_bytes(Path(path).read_bytes())


def _pack_str(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def _unpack_str(data: bytes, off: int) -> tuple:
    (n,) = struct.unpack_from("<I", data, off)
    off += 4
    if off + n > len(data):
        raise struct.error("string runs past end of data")
    return data[off:off + n].decode("utf-8"), off + n


def build_index(table: Table) -> BitmapIndex:
    r = table.r
    columns = {}
    for c, name in enumerate(table.column_names):
        rows_by_value: dict = {}
        for i, row in enumerate(table.rows):
            rows_by_value.setdefault(row[c], []).append(i)
        columns[name] = {
            v: CompressedBitmap.from_positions(rows, r) for v, rows in rows_by_value.items()
        }
    return BitmapIndex(r, list(table.column_names), columns)


def row_scan_threshold(table: Table, criteria: Sequence[Criterion], T: int) -> set:
    """Rows satisfying at least ``T`` criteria, by scanning every row."""
    if not 1 <= T <= len(criteria):
        raise QueryError(f"T={T} outside [1, {len(criteria)}]")
    wanted = [(table.column(c.attribute), c.value) for c in criteria]
    matches = set()
    for i, row in enumerate(table.rows):
        count = 0
        for col, value in wanted:
            if row[col] == value:
                count += 1
        if count >= T:
            matches.add(i)
    return matches


@dataclass
class Selection:
    """Bitmaps for a list of criteria; ``missing`` lists criteria with no bitmap."""

    bitmaps: list
    missing: list

    def __iter__(self):
        return iter(self.bitmaps)

    def __len__(self) -> int:
        return len(self.bitmaps)


def criteria_to_bitmaps(index: BitmapIndex, criteria: Iterable[Criterion]) -> Selection:
    bitmaps = []
    missing = []
    for c in criteria:
        if c.attribute not in index.columns:
            raise QueryError(f"unknown attribute {c.attribute!r}")
        bm = index.get(c.attribute, c.value)
        if bm is None:
            missing.append(c)
            bm = CompressedBitmap.empty(index.r)
        bitmaps.append(bm)
    return Selection(bitmaps, missing)


def similarity_keys(index: BitmapIndex, prototype_rows: Iterable[int]) -> list:
    """(attribute, value) keys whose bitmap has a 1 at some prototype row."""
    rows = sorted(set(prototype_rows))
    for row in rows:
        if not 0 <= row < index.r:
            raise QueryError(f"row {row} outside [0, {index.r})")
    keys = []
    for key, bm in index.items():
        if any(bm.contains(row) for row in rows):
            keys.append(key)
    return keys


def similarity_bitmaps(index: BitmapIndex, prototype_rows: Iterable[int]) -> list:
    return [index[k] for k in similarity_keys(index, prototype_rows)]
