"""CSV output with provenance headers and atomic writes."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import __version__


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def render_csv(columns: Sequence[str], rows: Iterable[Mapping],
               meta: Mapping | None = None) -> str:
    """Comment lines ``# key: value`` (version first), a header, then rows.

    Floats are written with ``repr`` so reading them back is exact.
    """
    out = io.StringIO()
    out.write(f"# scanident {__version__}\n")
    for key, value in (meta or {}).items():
        for line in str(value).splitlines() or [""]:
            out.write(f"# {key}: {line}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return out.getvalue()


def write_csv(path, columns, rows, meta=None) -> None:
    atomic_write_text(path, render_csv(columns, list(rows), meta))


def read_csv(path) -> tuple[dict, list[dict]]:
    """Inverse of ``write_csv``: header comments as a dict, rows as string dicts.

    Repeated comment keys are joined with newlines.
    """
    meta: dict[str, str] = {}
    lines = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                body = line[1:].strip("\n")
                body = body[1:] if body.startswith(" ") else body
                if ": " in body:
                    key, value = body.split(": ", 1)
                    meta[key] = f"{meta[key]}\n{value}" if key in meta else value
                elif body.endswith(":"):
                    key = body[:-1]
                    meta[key] = f"{meta[key]}\n" if key in meta else ""
                continue
            lines.append(line)
    rows = list(csv.DictReader(lines))
    return meta, rows
