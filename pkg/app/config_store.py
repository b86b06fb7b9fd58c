# FILE: app/config_store.py
from __future__ import annotations

import json
import os
import re
from pathlib import Path
from typing import Any

from core.errors import ConfigError, MissingArtifact

def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingArtifact(f"{path} does not exist") from None
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from None

def _parse_object(txt: str, path: Path) -> dict[str, Any]:
    try:
        obj = json.loads(txt)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e.msg} (column {e.colno})", line=e.lineno) from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be an object", line=1)
    return obj

def load_json(path: Path) -> dict[str, Any]:
    """Read a JSON object; syntax errors become ConfigError with the line number."""
    return _parse_object(_read_text(path), path)

def load_config_dict(path: Path) -> tuple[dict[str, Any], str]:
    """(parsed object, raw text) so later validation errors can be located."""
    txt = _read_text(path)
    return _parse_object(txt, path), txt

def key_line(text: str, dotted: str | None) -> int | None:
    """1-based line of the last key in a dotted path, searched after its parents."""
    if not dotted:
        return None
    pos = 0
    for part in re.sub(r"\[\d+\]$", "", dotted).split("."):
        m = re.compile(r'"' + re.escape(part) + r'"\s*:').search(text, pos)
        if m is None:
            return None
        pos = m.start()
    return text.count("\n", 0, pos) + 1

def save_json_atomic(path: Path, data: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")

    txt = json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True)
    tmp.write_text(txt + "\n", encoding="utf-8")

    # Atomic replace on Windows/macOS/Linux
    os.replace(str(tmp), str(path))
