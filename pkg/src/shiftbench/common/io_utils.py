from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import tempfile
from importlib import metadata
from pathlib import Path
from typing import Any, Iterable, List, Mapping, Sequence, Tuple

from .config import tomllib
from .errors import ConfigError

__all__ = [
    "TOOL",
    "FLOAT_FORMAT",
    "tool_version",
    "canonical_json",
    "format_float",
    "decimal_strings",
    "parse_value",
    "parse_assignment",
    "looks_like_bits",
    "atomic_write",
    "csv_text",
    "write_csv",
    "write_json",
]

TOOL = "shiftbench"
DIST_NAME = "Shift-Testbench"
FLOAT_FORMAT = "%.12e"
_KEY = re.compile(r"^[A-Za-z_][\w-]*(\.[A-Za-z_][\w-]*)*$")


def tool_version() -> str:
    try:
        return metadata.version(DIST_NAME)
    except metadata.PackageNotFoundError:
        return "0+unknown"


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False, default=str)


def format_float(x: float) -> str:
    return FLOAT_FORMAT % x if math.isfinite(x) else str(x)


def decimal_strings(obj: Any) -> Any:
    """Floats become "%.12e" strings, recursively; bools and ints are left alone."""
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, Mapping):
        return {k: decimal_strings(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [decimal_strings(v) for v in obj]
    return obj


def parse_value(text: str) -> Any:
    """A TOML scalar or array; anything else stays a string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def parse_assignment(spec: str) -> Tuple[str, Any]:
    key, eq, raw = spec.partition("=")
    key = key.strip()
    if not eq or not _KEY.match(key):
        raise ConfigError(f"--set expects key=value with a dotted key, got {spec!r}")
    return key, parse_value(raw.strip())


def looks_like_bits(s: str) -> bool:
    return bool(s) and all(c in "01" for c in s)


def atomic_write(path: Path, data: str | bytes) -> Path:
    """Write to a temp file next to ``path`` and move it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, tuple)):
        return " ".join(_cell(v) for v in value)
    return str(value)


def csv_text(columns: Sequence[str], rows: Iterable[Mapping[str, Any]], config_hash: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {TOOL} {tool_version()} config_hash={config_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c, "")) for c in columns])
    return buf.getvalue()


def write_csv(path: Path, columns: Sequence[str], rows: List[Mapping[str, Any]], config_hash: str) -> Path:
    return atomic_write(path, csv_text(columns, rows, config_hash))


def write_json(path: Path, obj: Mapping[str, Any]) -> Path:
    text = json.dumps(decimal_strings(obj), indent=2, sort_keys=False, default=str)
    return atomic_write(path, text + "\n")
