"""Atomic file output with numbers at 15 significant digits."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = ["fmt", "clean", "atomic_write", "write_csv", "write_json", "dumps"]


def fmt(x) -> str:
    return f"{float(x):.15g}"


def clean(obj):
    """Convert numpy scalars/arrays to plain Python, floats rounded to 15 digits."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(fmt(x))
    if isinstance(obj, complex):
        return [clean(obj.real), clean(obj.imag)]
    return obj


def dumps(obj) -> str:
    return json.dumps(clean(obj), indent=2) + "\n"


def atomic_write(path: str | os.PathLike, text: str) -> Path:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, obj) -> Path:
    return atomic_write(path, dumps(obj))
