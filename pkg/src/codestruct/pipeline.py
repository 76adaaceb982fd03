"""Corpus records -> extracted code -> metrics -> dataset records."""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable, Iterator
from concurrent.futures import ProcessPoolExecutor

from .dataset import DatasetRecord
from .extraction import RawRecord, Rejection, extract_blocks, normalize_language, to_source_units
from .metrics import LANGUAGES, SourceUnit, aggregate, analyze

log = logging.getLogger(__name__)


def analyze_record(obj: dict) -> dict:
    """Augment a corpus record with ``primary_language``, ``blocks`` and ``metrics``.

    Records carrying ``code`` and ``language`` fields (standalone solutions) are
    analysed directly; otherwise code is extracted from the markdown ``response``.
    """
    out = dict(obj)
    record_id = str(obj.get("id", ""))
    if obj.get("code") and obj.get("language"):
        language, dialect = normalize_language(obj["language"])
        if language not in LANGUAGES:
            out.update(primary_language=None, blocks=[], metrics=None, rejected="no_supported_code")
            return out
        units = [SourceUnit(record_id, language, obj["code"], dialect)]
        blocks = [{"language_raw": obj["language"], "position": 0}]
    else:
        try:
            language, units = to_source_units(RawRecord.from_json(obj))
        except Rejection as exc:
            out.update(primary_language=None, blocks=[], metrics=None, rejected=exc.reason)
            return out
        blocks = [
            {"language_raw": b.language_raw, "position": b.position}
            for b in extract_blocks(obj.get("response") or "")
        ]
    metrics = aggregate([analyze(u) for u in units])
    out.update(
        primary_language=language,
        blocks=blocks,
        units=[u.origin_id for u in units],
        metrics=metrics.to_dict(),
    )
    return out


def analyze_records(objs: Iterable[dict], jobs: int = 1) -> Iterator[dict]:
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(analyze_record, objs, chunksize=64)
    else:
        yield from map(analyze_record, objs)


def to_dataset_record(analyzed: dict) -> DatasetRecord | None:
    """None for rejected or unparseable records."""
    metrics = analyzed.get("metrics")
    if not metrics or not metrics["parse_ok"]:
        return None
    return DatasetRecord(
        record_id=str(analyzed["id"]),
        language=analyzed["primary_language"],
        cc=metrics["cc_max"],
        lloc=metrics["lloc_total"],
        instruction=analyzed.get("instruction") or "",
        response=analyzed.get("response") or "",
        problem_id=None if analyzed.get("problem_id") is None else str(analyzed["problem_id"]),
    )


def load_dataset_records(objs: Iterable[dict], jobs: int = 1) -> tuple[list[DatasetRecord], Counter]:
    """Analyse a corpus; returns kept records and a tally of exclusion reasons."""
    kept: list[DatasetRecord] = []
    excluded: Counter = Counter()
    for analyzed in analyze_records(objs, jobs):
        record = to_dataset_record(analyzed)
        if record is not None:
            kept.append(record)
            continue
        reason = analyzed.get("rejected") or "parse_failure"
        excluded[reason] += 1
        log.info("excluded record %s: %s", analyzed.get("id"), reason)
    return kept, excluded
