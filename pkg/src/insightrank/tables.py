"""Multi-dimensional table data model, subspace enumeration, file ingestion.

A table is a flat set of cells, each carrying one label per dimension plus a
numeric value.  A subspace fixes all dimensions but one and collects the cells
that agree on the fixed labels, ordered along the varying dimension.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

from .errors import DataError, ParseError

__all__ = [
    "Cell",
    "Table",
    "Subspace",
    "DocumentText",
    "load_table",
    "save_table",
    "load_document",
    "save_document",
    "enumerate_subspaces",
    "split_sentences",
]


@dataclass(frozen=True)
class Cell:
    dims: tuple[str, ...]
    value: float


@dataclass(frozen=True)
class Table:
    id: str
    dim_names: tuple[str, ...]
    cells: tuple[Cell, ...]
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.cells:
            raise DataError(f"table {self.id!r} has no cells")
        d = len(self.dim_names)
        if d < 1:
            raise DataError(f"table {self.id!r} has no dimensions")
        seen = set()
        for cell in self.cells:
            if len(cell.dims) != d:
                raise DataError(
                    f"table {self.id!r}: cell {cell.dims} has "
                    f"{len(cell.dims)} labels, expected {d}"
                )
            if not math.isfinite(cell.value):
                raise DataError(
                    f"table {self.id!r}: non-finite value at cell {cell.dims}"
                )
            if cell.dims in seen:
                raise DataError(f"table {self.id!r}: duplicate cell {cell.dims}")
            seen.add(cell.dims)

    @property
    def ndim(self) -> int:
        return len(self.dim_names)

    @property
    def measure(self) -> str:
        return self.meta.get("measure", "Value")


@dataclass(frozen=True)
class Subspace:
    """Cells agreeing on every dimension except one, sorted along it.

    ``fixed_dim_index``/``fixed_dim_value`` expose the first fixed dimension
    (for bi-dimensional tables there is exactly one); ``fixed_labels`` carries
    the fixed label of every non-varying dimension in index order.
    """

    cells: tuple[Cell, ...]
    fixed_dim_index: int
    fixed_dim_value: str
    varying_dim_index: int
    fixed_labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.cells:
            raise DataError("subspace has no cells")
        for cell in self.cells:
            if cell.dims[self.fixed_dim_index] != self.fixed_dim_value:
                raise DataError("subspace cells disagree on the fixed dimension")

    @property
    def varying_labels(self) -> tuple[str, ...]:
        return tuple(c.dims[self.varying_dim_index] for c in self.cells)

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(c.value for c in self.cells)

    @property
    def fixed_label_text(self) -> str:
        return " ".join(self.fixed_labels) if self.fixed_labels else self.fixed_dim_value


@dataclass(frozen=True)
class DocumentText:
    table_id: str
    sentences: tuple[str, ...]
    meta: dict[str, str] = field(default_factory=dict)


_DECIMAL_SAFE_SPLIT = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[str]:
    """Split on '.', '!', '?' followed by whitespace.

    Decimal points are never followed by whitespace, so numbers like 71.7
    survive intact.
    """
    parts = [p.strip() for p in _DECIMAL_SAFE_SPLIT.split(text)]
    return [p for p in parts if p]


def _label_sort_key(labels):
    """Numeric order when every label parses as an integer, else lexical."""
    try:
        return [(0, int(lab), "") for lab in labels]
    except ValueError:
        return [(1, 0, lab) for lab in labels]


def enumerate_subspaces(table: Table, min_len: int = 3) -> list[Subspace]:
    """Every subspace fixing all-but-one dimension, with >= min_len cells.

    Deterministic order: by fixed dimension index, fixed value (then the
    remaining fixed labels), then varying dimension index.
    """
    if min_len < 1:
        raise DataError("min_len must be >= 1")
    d = table.ndim
    out = []
    for varying in range(d):
        fixed_idx = [i for i in range(d) if i != varying]
        groups: dict[tuple[str, ...], list[Cell]] = {}
        for cell in table.cells:
            key = tuple(cell.dims[i] for i in fixed_idx)
            groups.setdefault(key, []).append(cell)
        for key, cells in groups.items():
            if len(cells) < min_len:
                continue
            labels = [c.dims[varying] for c in cells]
            order = sorted(range(len(cells)), key=lambda i, k=_label_sort_key(labels): k[i])
            out.append(
                Subspace(
                    cells=tuple(cells[i] for i in order),
                    fixed_dim_index=fixed_idx[0] if fixed_idx else varying,
                    fixed_dim_value=key[0] if key else "",
                    varying_dim_index=varying,
                    fixed_labels=key,
                )
            )
    out.sort(key=lambda s: (s.fixed_dim_index, s.fixed_labels, s.varying_dim_index))
    return out


def _table_from_dict(obj: dict, where: str) -> Table:
    for name in ("id", "dim_names", "cells"):
        if name not in obj:
            raise ParseError(f"{where}: missing field {name!r}")
    cells = []
    for i, raw in enumerate(obj["cells"]):
        if "dims" not in raw or "value" not in raw:
            raise ParseError(f"{where}: cell {i} needs 'dims' and 'value'")
        value = raw["value"]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ParseError(f"{where}: cell {i} value is not numeric")
        cells.append(Cell(dims=tuple(str(x) for x in raw["dims"]), value=float(value)))
    return Table(
        id=str(obj["id"]),
        dim_names=tuple(str(x) for x in obj["dim_names"]),
        cells=tuple(cells),
        meta={str(k): str(v) for k, v in obj.get("meta", {}).items()},
    )


def load_table(path) -> Table:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return _table_from_dict(obj, str(path))


def table_to_dict(table: Table) -> dict:
    return {
        "id": table.id,
        "dim_names": list(table.dim_names),
        "cells": [{"dims": list(c.dims), "value": c.value} for c in table.cells],
        "meta": dict(table.meta),
    }


def save_table(table: Table, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(table_to_dict(table), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_document(path) -> DocumentText:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if "table_id" not in obj:
        raise ParseError(f"{path}: missing field 'table_id'")
    if "text" not in obj:
        raise ParseError(f"{path}: missing field 'text'")
    return DocumentText(
        table_id=str(obj["table_id"]),
        sentences=tuple(split_sentences(str(obj["text"]))),
        meta={str(k): str(v) for k, v in obj.get("meta", {}).items()},
    )


def save_document(table_id: str, text: str, meta: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {"table_id": table_id, "meta": dict(meta), "text": text},
            fh,
            indent=1,
            sort_keys=True,
        )
        fh.write("\n")
