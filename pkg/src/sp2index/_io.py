"""Atomic, bit-stable text output."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from typing import Iterable, Sequence


def fmt(x) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".17g")
    if x is None:
        return ""
    return str(x)


def atomic_write(path: str, text: str) -> None:
    """Write to a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _round(o):
    # json prints shortest round-trip reprs; only numpy scalars need converting
    if isinstance(o, dict):
        return {str(k): _round(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_round(v) for v in o]
    if hasattr(o, "item") and not isinstance(o, (str, bytes)):
        return o.item()
    return o


def json_text(obj) -> str:
    return json.dumps(_round(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"
