"""Fenced code block extraction from markdown responses."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .metrics import SourceUnit

log = logging.getLogger(__name__)

SOURCE_CORPORA = ("codenet", "magicoder", "evol_instruct", "wizardlm", "other")
UNSUPPORTED = "unsupported"

_LANGUAGE_TAGS = {
    "py": ("python", None),
    "python": ("python", None),
    "python3": ("python", None),
    "js": ("javascript", None),
    "javascript": ("javascript", None),
    "node": ("javascript", None),
    "ts": ("javascript", "typescript"),
    "typescript": ("javascript", "typescript"),
    "java": ("java", None),
}

_OPEN = re.compile(r"^(?P<indent> {0,3})(?P<fence>`{3,}|~{3,})(?P<info>.*)$")


class Rejection(Exception):
    def __init__(self, record_id: str, reason: str):
        super().__init__(f"{record_id}: {reason}")
        self.record_id = record_id
        self.reason = reason


@dataclass(frozen=True)
class RawRecord:
    record_id: str
    instruction: str
    response: str
    source_corpus: str = "other"

    @classmethod
    def from_json(cls, obj: dict) -> RawRecord:
        source = obj.get("source") or "other"
        return cls(
            record_id=str(obj.get("id", "")),
            instruction=obj.get("instruction") or "",
            response=obj.get("response") or "",
            source_corpus=source if source in SOURCE_CORPORA else "other",
        )


@dataclass(frozen=True)
class CodeBlock:
    language_raw: str
    code: str
    position: int


def _closes(line: str, char: str, length: int) -> bool:
    stripped = line.rstrip()
    body = stripped.lstrip(" ")
    if len(stripped) - len(body) > 3:
        return False
    return len(body) >= length and body == char * len(body)


def extract_blocks(markdown: str) -> list[CodeBlock]:
    """Return backtick-fenced blocks that carry a language token, in document order.

    Untagged and tilde fences are consumed (so their contents are never mistaken
    for fences) but not returned. A fence that is never closed yields nothing.
    """
    lines = markdown.split("\n")
    blocks: list[CodeBlock] = []
    i = 0
    while i < len(lines):
        m = _OPEN.match(lines[i].rstrip("\r"))
        if m is None:
            i += 1
            continue
        fence, info, indent = m["fence"], m["info"].strip(), len(m["indent"])
        char = fence[0]
        if char == "`" and "`" in info:
            # backticks in the info string make this inline code, not a fence
            i += 1
            continue
        end = next((j for j in range(i + 1, len(lines)) if _closes(lines[j], char, len(fence))), None)
        if end is None:
            i += 1
            continue
        token = info.split()[0] if info else ""
        if char == "`" and token:
            if indent:
                log.debug("indented fence accepted at line %d", i + 1)
            body = [_dedent(line, indent) for line in lines[i + 1 : end]]
            blocks.append(CodeBlock(language_raw=token, code="\n".join(body), position=len(blocks)))
        i = end + 1
    return blocks


def _dedent(line: str, indent: int) -> str:
    n = 0
    while n < indent and n < len(line) and line[n] == " ":
        n += 1
    return line[n:]


def normalize_language(language_raw: str) -> tuple[str, str | None]:
    """Map a fence tag to ``(language, dialect)``; unknown tags give ``("unsupported", None)``."""
    return _LANGUAGE_TAGS.get(language_raw.strip().lower(), (UNSUPPORTED, None))


def to_source_units(record: RawRecord) -> tuple[str, list[SourceUnit]]:
    """Units for every block in the record's primary language.

    The primary language is that of the first supported, non-empty block.
    Raises :class:`Rejection` when the response has no supported code.
    """
    supported = []
    for block in extract_blocks(record.response):
        language, dialect = normalize_language(block.language_raw)
        if language != UNSUPPORTED and block.code.strip():
            supported.append((language, dialect, block))
    if not supported:
        raise Rejection(record.record_id, "no_supported_code")

    primary = supported[0][0]
    units = [
        SourceUnit(f"{record.record_id}#{block.position}", language, block.code, dialect)
        for language, dialect, block in supported
        if language == primary
    ]
    return primary, units
