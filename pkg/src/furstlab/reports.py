"""Report writing: CSV with '#' header comments and JSON summaries.

Files are written once, atomically (temp file + rename).
"""
from __future__ import annotations

import json
import os
import tempfile
from decimal import Decimal
from fractions import Fraction
from pathlib import Path


def _default(obj):
    if isinstance(obj, (Fraction, Decimal)):
        return str(obj)
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    return str(obj)


def atomic_write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path


def header_lines(config: dict) -> str:
    return "".join(f"# {k} = {v}\n" for k, v in config.items())


def write_csv(path: Path, body: str, config: dict) -> Path:
    return atomic_write(path, header_lines(config) + body)


def write_summary(path: Path, summary: dict) -> Path:
    return atomic_write(path, json.dumps(summary, indent=2, sort_keys=True, default=_default) + "\n")
