"""Measured-configuration datasets: typed columns, CSV + JSON-metadata I/O."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateInputError, GraphParseError, InputError
from .graph import NAME_RE, NodeRole

__all__ = ["VariableMeta", "Dataset", "read_csv", "read_metadata", "write_csv", "write_metadata"]

DISCRETE = "discrete"
CONTINUOUS = "continuous"


@dataclass(frozen=True)
class VariableMeta:
    name: str
    role: NodeRole = NodeRole.OPTION
    dtype: str = DISCRETE
    levels: tuple[str, ...] = ()
    units: str = ""

    def __post_init__(self):
        if not NAME_RE.match(self.name):
            raise InputError(f"invalid variable name {self.name!r}")
        object.__setattr__(self, "role", NodeRole(self.role))
        if self.role not in (NodeRole.OPTION, NodeRole.PERFORMANCE):
            raise InputError(f"variable {self.name!r}: dataset roles are option or performance, not {self.role.value}")
        if self.dtype not in (DISCRETE, CONTINUOUS):
            raise InputError(f"variable {self.name!r}: unknown dtype {self.dtype!r}")
        levels = tuple(str(v) for v in self.levels)
        object.__setattr__(self, "levels", levels)
        if self.dtype == DISCRETE:
            if not levels:
                raise InputError(f"variable {self.name!r}: discrete variables need levels")
            if len(set(levels)) != len(levels):
                raise InputError(f"variable {self.name!r}: duplicate levels")
        elif levels:
            raise InputError(f"variable {self.name!r}: continuous variables take no levels")

    @property
    def discrete(self) -> bool:
        return self.dtype == DISCRETE

    @property
    def card(self) -> int:
        return len(self.levels)

    def code(self, value) -> int:
        """Code of a level given as label or number."""
        s = str(value).strip()
        try:
            return self.levels.index(s)
        except ValueError:
            pass
        try:
            f = float(s)
        except ValueError:
            f = None
        if f is not None:
            for i, lv in enumerate(self.levels):
                try:
                    if float(lv) == f:
                        return i
                except ValueError:
                    continue
        raise InputError(f"value {value!r} is not a declared level of {self.name!r} {list(self.levels)}")

    def to_json(self) -> dict:
        out = {"name": self.name, "role": self.role.value, "dtype": self.dtype}
        if self.discrete:
            out["levels"] = list(self.levels)
        if self.units:
            out["units"] = self.units
        return out


class Dataset:
    """Complete records of measured configurations.

    Discrete columns hold integer level codes, continuous columns hold
    floats. Instances are treated as immutable.
    """

    def __init__(self, variables: Sequence[VariableMeta], columns: Mapping[str, np.ndarray], *,
                 check_constant: bool = True):
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise InputError("duplicate variable names")
        self._meta = {v.name: v for v in variables}
        self._names = tuple(names)
        cols = {}
        n = None
        for v in variables:
            if v.name not in columns:
                raise InputError(f"missing column {v.name!r}")
            col = np.asarray(columns[v.name])
            if v.discrete:
                col = col.astype(np.int64)
                if col.size and (col.min() < 0 or col.max() >= v.card):
                    raise InputError(f"column {v.name!r} has codes outside its {v.card} levels")
            else:
                col = col.astype(np.float64)
                if not np.all(np.isfinite(col)):
                    raise InputError(f"column {v.name!r} has non-finite values")
            col.setflags(write=False)
            if n is None:
                n = len(col)
            elif len(col) != n:
                raise InputError("columns differ in length")
            cols[v.name] = col
        if not n:
            raise InputError("a dataset needs at least one row")
        self._cols = cols
        self._n = n
        if check_constant:
            const = [k for k in names if np.all(cols[k] == cols[k][0])]
            if const:
                raise DegenerateInputError(f"constant column(s): {', '.join(const)}")

    @classmethod
    def from_labels(cls, variables: Sequence[VariableMeta], rows: Sequence[Mapping], **kw) -> "Dataset":
        cols = {}
        for v in variables:
            if v.discrete:
                cols[v.name] = np.array([v.code(r[v.name]) for r in rows], dtype=np.int64)
            else:
                cols[v.name] = np.array([float(r[v.name]) for r in rows], dtype=np.float64)
        return cls(variables, cols, **kw)

    @property
    def n(self) -> int:
        return self._n

    def __len__(self):
        return self._n

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    @property
    def variables(self) -> tuple[VariableMeta, ...]:
        return tuple(self._meta[k] for k in self._names)

    def meta(self, name) -> VariableMeta:
        try:
            return self._meta[name]
        except KeyError:
            raise InputError(f"unknown variable {name!r}") from None

    def column(self, name) -> np.ndarray:
        self.meta(name)
        return self._cols[name]

    def numeric(self, name) -> np.ndarray:
        """Float view; discrete options are encoded by their level index."""
        return self.column(name).astype(np.float64)

    def codes(self, names: Sequence[str]) -> np.ndarray:
        for k in names:
            if not self.meta(k).discrete:
                raise InputError(f"variable {k!r} is not discrete")
        if not names:
            return np.zeros((self._n, 0), dtype=np.int64)
        return np.column_stack([self._cols[k] for k in names])

    def cards(self, names: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.meta(k).card for k in names)

    def all_discrete(self, names=None) -> bool:
        return all(self.meta(k).discrete for k in (self._names if names is None else names))

    def select(self, mask) -> "Dataset":
        """Rows where ``mask`` holds; constant columns are allowed in the result."""
        mask = np.asarray(mask, dtype=bool)
        return Dataset(self.variables, {k: c[mask] for k, c in self._cols.items()}, check_constant=False)

    def where(self, assignment: Mapping[str, object]) -> np.ndarray:
        """Boolean row mask for an assignment of level labels."""
        mask = np.ones(self._n, dtype=bool)
        for k, val in assignment.items():
            m = self.meta(k)
            if not m.discrete:
                raise InputError(f"cannot condition on continuous variable {k!r} by value")
            mask &= self._cols[k] == m.code(val)
        return mask

    def roles(self) -> dict[str, NodeRole]:
        return {k: self._meta[k].role for k in self._names}

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.variables == other.variables and all(
            np.array_equal(self._cols[k], other._cols[k]) for k in self._names)

    def __repr__(self):
        return f"Dataset(n={self._n}, variables={list(self._names)})"


# ---------------------------------------------------------------------------
# I/O


def read_metadata(source) -> list[VariableMeta]:
    """Metadata sidecar: JSON ``{"variables": [{name, role, dtype, levels?, units?}, ...]}``."""
    text = _read_text(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(exc.msg, line=exc.lineno, field="metadata") from None
    entries = doc.get("variables") if isinstance(doc, dict) else None
    if not isinstance(entries, list):
        raise GraphParseError("expected an object with a 'variables' list", field="variables")
    out = []
    for i, e in enumerate(entries):
        try:
            out.append(VariableMeta(name=e["name"], role=e.get("role", "option"), dtype=e.get("dtype", DISCRETE),
                                    levels=tuple(e.get("levels", ())), units=e.get("units", "")))
        except KeyError as exc:
            raise GraphParseError(f"variable #{i} lacks {exc.args[0]!r}", field="variables") from None
        except (TypeError, ValueError) as exc:
            raise GraphParseError(f"variable #{i}: {exc}", field="variables") from None
    return out


def write_metadata(variables: Sequence[VariableMeta]) -> bytes:
    return (json.dumps({"variables": [v.to_json() for v in variables]}, indent=2) + "\n").encode()


def read_csv(source, metadata: Sequence[VariableMeta]) -> Dataset:
    """Load a CSV with a header row; cells are numbers or quoted strings, none may be empty."""
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise InputError("empty CSV") from None
    meta = {m.name: m for m in metadata}
    unknown = [h for h in header if h not in meta]
    if unknown:
        raise InputError(f"CSV columns without metadata: {', '.join(unknown)}")
    missing = [m.name for m in metadata if m.name not in header]
    if missing:
        raise InputError(f"metadata variables absent from CSV: {', '.join(missing)}")
    raw = {h: [] for h in header}
    for rowno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"row {rowno}: expected {len(header)} cells, got {len(row)}")
        for col, cell in zip(header, row):
            cell = cell.strip()
            if cell == "" or cell.upper() in ("NA", "NAN"):
                raise InputError(f"row {rowno}, column {col!r}: missing value")
            raw[col].append((rowno, cell))
    cols = {}
    for m in metadata:
        vals = raw[m.name]
        if m.discrete:
            arr = np.empty(len(vals), dtype=np.int64)
            for i, (rowno, cell) in enumerate(vals):
                try:
                    arr[i] = m.code(cell)
                except InputError as exc:
                    raise InputError(f"row {rowno}, column {m.name!r}: {exc}") from None
        else:
            arr = np.empty(len(vals), dtype=np.float64)
            for i, (rowno, cell) in enumerate(vals):
                try:
                    arr[i] = float(cell)
                except ValueError:
                    raise InputError(f"row {rowno}, column {m.name!r}: not a number: {cell!r}") from None
        cols[m.name] = arr
    ordered = [meta[h] for h in header]
    return Dataset(ordered, cols)


def write_csv(d: Dataset) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(d.names)
    conv = []
    for v in d.variables:
        col = d.column(v.name)
        if v.discrete:
            conv.append([v.levels[c] for c in col])
        else:
            conv.append([_fmt_float(x) for x in col])
    for row in zip(*conv):
        w.writerow(row)
    return buf.getvalue().encode()


def _fmt_float(x: float) -> str:
    # shortest round-trip form, so write -> read is lossless
    return repr(float(x))


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return source.decode()
    if hasattr(source, "read"):
        data = source.read()
        return data.decode() if isinstance(data, bytes) else data
    with open(source, encoding="utf-8") as fh:
        return fh.read()
