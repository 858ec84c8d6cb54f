"""Deterministic JSON and CSV emitters.

Floats are written with 17 significant digits so that every value
round-trips exactly. Complex numbers become ``{"re", "im", "abs", "arg"}``
objects in JSON and ``<name>_re, <name>_im`` column pairs in CSV. Non-finite
values are written as ``null`` in JSON and ``nan`` / ``inf`` in CSV.
"""

from __future__ import annotations

import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np


def format_float(x: float) -> str:
    """Return ``x`` with 17 significant digits (``nan``/``inf`` spelled out)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def complex_record(z: complex) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag, "abs": abs(z), "arg": math.atan2(z.imag, z.real)}


def _json_scalar(x: Any) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def _escape(s: str) -> str:
    out = []
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ord(ch) < 0x20:
            out.append("\\u%04x" % ord(ch))
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def dumps_json(obj: Any, indent: int = 2) -> str:
    """Serialize nested dicts / lists / arrays / scalars deterministically."""
    buf = io.StringIO()
    _write(obj, buf, 0, indent)
    buf.write("\n")
    return buf.getvalue()


def _write(obj, buf, level, indent):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, Table):
        obj = obj.to_dict()
    if isinstance(obj, Mapping):
        if not obj:
            buf.write("{}")
            return
        buf.write("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            buf.write(pad + _escape(str(k)) + ": ")
            _write(v, buf, level + 1, indent)
            buf.write(",\n" if i < len(items) - 1 else "\n")
        buf.write(end + "}")
        return
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            obj = [complex_record(z) for z in obj.ravel()]
        else:
            obj = obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        _write(complex_record(obj), buf, level, indent)
        return
    if isinstance(obj, str):
        buf.write(_escape(obj))
        return
    if isinstance(obj, (list, tuple)):
        if not obj:
            buf.write("[]")
            return
        if all(not isinstance(v, (Mapping, list, tuple, np.ndarray, complex, Table)) for v in obj):
            buf.write("[" + ", ".join(_json_scalar(v) if not isinstance(v, str) else _escape(v) for v in obj) + "]")
            return
        buf.write("[\n")
        for i, v in enumerate(obj):
            buf.write(pad)
            _write(v, buf, level + 1, indent)
            buf.write(",\n" if i < len(obj) - 1 else "\n")
        buf.write(end + "]")
        return
    buf.write(_json_scalar(obj))


@dataclass(frozen=True)
class Table:
    """Column-oriented numeric table with scalar metadata.

    Parameters
    ----------
    columns : dict
        Mapping of column name to 1D array (real, complex, bool or str).
        All columns must have equal length.
    meta : dict
        Scalar summary values written as ``# key = value`` lines in CSV and
        as a ``summary`` object in JSON.
    """

    columns: Mapping[str, Sequence] = field(default_factory=dict)
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"column lengths differ: {sorted(lengths)}")

    @property
    def n_rows(self) -> int:
        for v in self.columns.values():
            return len(v)
        return 0

    def to_dict(self) -> dict:
        return {"summary": dict(self.meta), "columns": {k: np.asarray(v) for k, v in self.columns.items()}}

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in self.meta.items():
            buf.write(f"# {k} = {_csv_meta(v)}\n")
        names, cols = [], []
        for k, v in self.columns.items():
            arr = np.asarray(v)
            if np.iscomplexobj(arr):
                names += [f"{k}_re", f"{k}_im"]
                cols += [arr.real, arr.imag]
            else:
                names.append(k)
                cols.append(arr)
        if names:
            buf.write(",".join(names) + "\n")
            for i in range(self.n_rows):
                buf.write(",".join(_csv_cell(c[i]) for c in cols) + "\n")
        return buf.getvalue()


def _csv_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (str, np.str_)):
        return str(x)
    return format_float(x)


def _csv_meta(v) -> str:
    if isinstance(v, (complex, np.complexfloating)):
        return f"{format_float(v.real)}{'+' if v.imag >= 0 or math.isnan(v.imag) else '-'}{format_float(abs(v.imag))}j"
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_csv_meta(x) for x in v)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer, str)):
        return str(v)
    if v is None:
        return "none"
    return format_float(v)


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
