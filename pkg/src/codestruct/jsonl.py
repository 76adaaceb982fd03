from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable, Iterator
from pathlib import Path


class JsonlError(ValueError):
    pass


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JsonlError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise JsonlError(f"{path}:{lineno}: expected a JSON object")
            yield obj


def dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False)


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> str:
    """Write rows and return the sha256 of the bytes written."""
    h = hashlib.sha256()
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            line = dumps(row) + "\n"
            h.update(line.encode("utf-8"))
            f.write(line)
    return h.hexdigest()
