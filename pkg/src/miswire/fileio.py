"""Parameter parsing and result serialization for the command-line tools.

Grids use ``start:stop:step`` syntax, inclusive of start and exclusive of
stop; plain lists are comma-separated.  Results are written as CSV or JSON
with a metadata header carrying the command, the full resolved parameter
set, the master seed, and the package version — enough to reproduce the
file bit-identically.  No timestamps or host details are recorded, so
reruns of the same command produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from typing import Any, Iterable, Mapping, Sequence

__all__ = [
    "parse_grid",
    "parse_float_list",
    "parse_values",
    "parse_int_list",
    "read_config_args",
    "write_records",
    "read_records",
]


def parse_grid(text: str) -> list[float]:
    """Parse ``start:stop:step`` into grid points in [start, stop)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ValueError(f"non-numeric grid component in {text!r}") from exc
    if step <= 0:
        raise ValueError(f"grid step must be positive, got {step}")
    if stop <= start:
        raise ValueError(f"grid stop must exceed start, got {text!r}")
    # Count points so accumulated float error cannot add or drop the endpoint.
    count = math.ceil((stop - start) / step - 1e-9)
    return [start + k * step for k in range(max(count, 1))]


def parse_float_list(text: str) -> list[float]:
    """Parse a comma-separated list of reals (at least one value)."""
    items = [p.strip() for p in text.split(",") if p.strip()]
    if not items:
        raise ValueError("empty value list")
    try:
        return [float(p) for p in items]
    except ValueError as exc:
        raise ValueError(f"non-numeric list entry in {text!r}") from exc


def parse_values(text: str) -> list[float]:
    """Parse either grid (``a:b:c``) or comma-list (``x,y,z``) syntax."""
    if ":" in text:
        return parse_grid(text)
    return parse_float_list(text)


def parse_int_list(text: str) -> list[int]:
    """Parse a comma-separated list of integers (at least one value)."""
    items = [p.strip() for p in text.split(",") if p.strip()]
    if not items:
        raise ValueError("empty value list")
    try:
        return [int(p) for p in items]
    except ValueError as exc:
        raise ValueError(f"non-integer list entry in {text!r}") from exc


def read_config_args(path: str) -> list[str]:
    """Turn a key=value config file into a flat CLI token list.

    Lines are ``key = value``; blank lines and ``#`` comments are ignored.
    Keys are long option names without the leading dashes.  The caller
    inserts these tokens ahead of explicit flags, so flags override the
    file.
    """
    tokens: list[str] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key or not value:
                raise ValueError(f"{path}:{lineno}: expected key = value, got {raw!r}")
            tokens.extend([f"--{key}", value])
    return tokens


def _json_safe(value: Any) -> Any:
    """Map NaN/inf to null for strict-JSON output; pass through the rest."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _format_cell(value: Any) -> str:
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _meta_lines(meta: Mapping[str, Any]) -> list[str]:
    lines = []
    for key in sorted(meta):
        value = meta[key]
        if isinstance(value, Mapping):
            for sub in sorted(value):
                lines.append(f"# {key}.{sub} = {_format_cell(value[sub])}")
        else:
            lines.append(f"# {key} = {_format_cell(value)}")
    return lines


def write_records(
    path: str | None,
    fmt: str,
    meta: Mapping[str, Any],
    rows: Sequence[Mapping[str, Any]],
    fieldnames: Iterable[str] | None = None,
) -> None:
    """Write result rows with a reproducibility header; path None or "-" is stdout."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    names = list(fieldnames) if fieldnames is not None else (
        list(rows[0].keys()) if rows else []
    )
    if fmt == "csv":
        buf = io.StringIO()
        for line in _meta_lines(meta):
            buf.write(line + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            writer.writerow([_format_cell(row.get(name)) for name in names])
        text = buf.getvalue()
    else:
        payload = {
            "meta": {k: meta[k] for k in sorted(meta)},
            "rows": [
                {name: _json_safe(row.get(name)) for name in names} for row in rows
            ],
        }
        text = json.dumps(payload, indent=2, sort_keys=False, allow_nan=False) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


def _parse_cell(text: str) -> Any:
    if text == "nan":
        return float("nan")
    if text in ("true", "false"):
        return text == "true"
    try:
        if text.lstrip("+-").isdigit():
            return int(text)
        return float(text)
    except ValueError:
        return text


def read_records(path: str) -> tuple[dict[str, str], list[dict[str, Any]]]:
    """Read a CSV or JSON results file back into (meta, rows).

    CSV meta values come back as strings; JSON meta keeps its types.  Used
    by tests to check format parity and by downstream tooling.
    """
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    if text.lstrip().startswith("{"):
        payload = json.loads(text)
        return payload["meta"], payload["rows"]
    meta: dict[str, str] = {}
    lines = text.splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = value.strip()
            body_start = i + 1
        else:
            break
    reader = csv.DictReader(lines[body_start:])
    rows = [
        {name: _parse_cell(value) for name, value in row.items()}
        for row in reader
    ]
    return meta, rows
