"""Complexity-controlled dataset splits.

Two constructions are supported. The solution-driven one keeps the task fixed:
solutions to the same problem in the same language are ranked and five
representatives (least complex, most complex and three evenly spaced between)
populate the five levels. The problem-driven one ranks single-solution records
per language and cuts the ranking into five contiguous bins.

In both, only the control split consumes randomness, drawn from generators
derived from ``(seed, regime, metric family, level, language)``.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean

import numpy as np

from .jsonl import dumps, read_jsonl, write_jsonl

log = logging.getLogger(__name__)

REGIMES = ("solution_driven", "problem_driven")
METRIC_FAMILIES = ("CC", "LLOC")
LEVELS = ("min", "low", "mid", "high", "max")
CTRL = "ctrl"
LANGUAGE_ORDER = ("python", "javascript", "java")

DEFAULT_SPLIT_SIZE = 8087
SOLUTION_DRIVEN_TARGETS = {"python": 2919, "javascript": 1890, "java": 3278}
PROBLEM_DRIVEN_TARGETS = {"python": 3688, "javascript": 2789, "java": 1610}


class TooFewSolutions(ValueError):
    pass


class InsufficientGroups(ValueError):
    pass


class InsufficientSamples(ValueError):
    pass


@dataclass(frozen=True)
class DatasetRecord:
    record_id: str
    language: str
    cc: int
    lloc: int
    instruction: str = ""
    response: str = ""
    problem_id: str | None = None

    def __post_init__(self) -> None:
        if self.language not in LANGUAGE_ORDER:
            raise ValueError(f"record {self.record_id}: unsupported language {self.language!r}")
        if self.cc < 1 or self.lloc < 1:
            raise ValueError(f"record {self.record_id}: cc and lloc must be >= 1")

    def metric(self, family: str) -> int:
        return self.cc if family == "CC" else self.lloc

    def to_row(self, level: str, metric_family: str, regime: str) -> dict:
        row = {
            "id": self.record_id,
            "instruction": self.instruction,
            "response": self.response,
            "language": self.language,
            "cc": self.cc,
            "lloc": self.lloc,
            "level": level,
            "metric_family": metric_family,
            "regime": regime,
        }
        if self.problem_id is not None:
            row["problem_id"] = self.problem_id
        return row

    @classmethod
    def from_row(cls, row: Mapping) -> DatasetRecord:
        return cls(
            record_id=str(row["id"]),
            language=row["language"],
            cc=int(row["cc"]),
            lloc=int(row["lloc"]),
            instruction=row.get("instruction", ""),
            response=row.get("response", ""),
            problem_id=row.get("problem_id"),
        )


@dataclass(frozen=True)
class SplitAssignment:
    record_id: str
    metric_family: str
    level: str
    regime: str
    problem_id: str | None = None
    language: str | None = None


@dataclass(frozen=True)
class LevelSummary:
    size: int
    languages: dict[str, int]
    mean_cc: float
    mean_lloc: float

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "languages": self.languages,
            "mean_cc": round(self.mean_cc, 6),
            "mean_lloc": round(self.mean_lloc, 6),
        }


@dataclass
class DatasetManifest:
    regime: str
    metric_family: str
    seed: int
    levels: dict[str, LevelSummary]
    digest: str
    dropped: dict[str, int] = field(default_factory=dict)
    excluded_groups: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "metric_family": self.metric_family,
            "seed": self.seed,
            "levels": {name: s.to_dict() for name, s in self.levels.items()},
            "dropped_remainder": self.dropped,
            "excluded_groups": self.excluded_groups,
            "digest": self.digest,
        }


@dataclass
class SplitSet:
    """The six splits of one (regime, metric family)."""

    regime: str
    metric_family: str
    seed: int
    splits: dict[str, list[DatasetRecord]]
    dropped: dict[str, int] = field(default_factory=dict)
    excluded_groups: dict[str, int] = field(default_factory=dict)

    def rows(self, level: str) -> list[dict]:
        return [r.to_row(level, self.metric_family, self.regime) for r in self.splits[level]]

    def assignments(self) -> list[SplitAssignment]:
        return [
            SplitAssignment(r.record_id, self.metric_family, level, self.regime, r.problem_id, r.language)
            for level, records in self.splits.items()
            for r in records
        ]

    def digest(self) -> str:
        h = hashlib.sha256()
        for level in (*LEVELS, CTRL):
            for row in self.rows(level):
                h.update((dumps(row) + "\n").encode("utf-8"))
        return h.hexdigest()

    def manifest(self) -> DatasetManifest:
        return DatasetManifest(
            regime=self.regime,
            metric_family=self.metric_family,
            seed=self.seed,
            levels={level: split_summary(self.splits[level]) for level in (*LEVELS, CTRL)},
            digest=self.digest(),
            dropped=dict(self.dropped),
            excluded_groups=dict(self.excluded_groups),
        )


def split_summary(records: Sequence[DatasetRecord]) -> LevelSummary:
    counts = Counter(r.language for r in records)
    return LevelSummary(
        size=len(records),
        languages={lang: counts.get(lang, 0) for lang in LANGUAGE_ORDER},
        mean_cc=fmean(r.cc for r in records) if records else float("nan"),
        mean_lloc=fmean(r.lloc for r in records) if records else float("nan"),
    )


def derive_rng(seed: int, *labels: str) -> np.random.Generator:
    """Generator for one stratum; independent of the order strata are visited in."""
    digest = hashlib.sha256("\x1f".join(labels).encode("utf-8")).digest()
    return np.random.default_rng([seed, int.from_bytes(digest[:16], "big")])


def rank_key(record: DatasetRecord, metric_family: str) -> tuple:
    other = "LLOC" if metric_family == "CC" else "CC"
    return (record.metric(metric_family), record.metric(other), record.record_id)


def rank_within_group(records: Iterable[DatasetRecord], metric_family: str) -> list[DatasetRecord]:
    """Ascending by the metric, then by the other metric, then by record id."""
    records = list(records)
    if len({(r.problem_id, r.language) for r in records}) > 1:
        raise ValueError("records span more than one (problem, language) group")
    return sorted(records, key=lambda r: rank_key(r, metric_family))


def select_representatives(ranked: Sequence) -> list[int]:
    """Indices round_half_up(k * (n - 1) / 4) for k = 0..4."""
    n = len(ranked)
    if n < 5:
        raise TooFewSolutions(f"need at least 5 solutions, got {n}")
    return [(2 * k * (n - 1) + 4) // 8 for k in range(5)]


def _check_family(metric_family: str) -> None:
    if metric_family not in METRIC_FAMILIES:
        raise ValueError(f"metric family must be one of {METRIC_FAMILIES}, got {metric_family!r}")


def build_solution_driven(
    records: Iterable[DatasetRecord],
    metric_family: str,
    per_language_pair_counts: Mapping[str, int] = SOLUTION_DRIVEN_TARGETS,
    seed: int = 0,
) -> SplitSet:
    """One representative per level from each selected (problem, language) group.

    Groups are taken in ascending problem id until each language's target is met;
    groups with fewer than five solutions are skipped.
    """
    _check_family(metric_family)
    groups: dict[tuple[str, str], list[DatasetRecord]] = defaultdict(list)
    for r in records:
        if r.problem_id is None:
            raise ValueError(f"record {r.record_id} has no problem_id")
        groups[(r.language, r.problem_id)].append(r)

    splits: dict[str, list[DatasetRecord]] = {level: [] for level in LEVELS}
    excluded: dict[str, int] = {}
    for language in LANGUAGE_ORDER:
        target = per_language_pair_counts.get(language, 0)
        keys = sorted(pid for lang, pid in groups if lang == language)
        usable = [pid for pid in keys if len(groups[(language, pid)]) >= 5]
        excluded[language] = len(keys) - len(usable)
        if excluded[language]:
            log.info("%s: %d groups with fewer than 5 solutions skipped", language, excluded[language])
        if len(usable) < target:
            raise InsufficientGroups(
                f"{language}: {len(usable)} usable problem groups, {target} required"
            )
        for pid in usable[:target]:
            ranked = rank_within_group(groups[(language, pid)], metric_family)
            for level, idx in zip(LEVELS, select_representatives(ranked)):
                splits[level].append(ranked[idx])

    splits[CTRL] = draw_control("solution_driven", metric_family, splits, seed)
    return SplitSet("solution_driven", metric_family, seed, splits, excluded_groups=excluded)


def build_problem_driven(
    records: Iterable[DatasetRecord],
    metric_family: str,
    split_size: int = DEFAULT_SPLIT_SIZE,
    per_language_targets: Mapping[str, int] | None = None,
    seed: int = 0,
    supplement_language: str = "python",
) -> SplitSet:
    """Five contiguous bins of ``floor(N / 5)`` per language.

    Remainder records at the top of each language's ranking are dropped. Without
    explicit targets every language but the supplement contributes its whole bin
    and the supplement language fills the split up to ``split_size`` with its
    lowest-ranked bin members.
    """
    _check_family(metric_family)
    by_language: dict[str, list[DatasetRecord]] = defaultdict(list)
    for r in records:
        by_language[r.language].append(r)

    bins: dict[str, list[list[DatasetRecord]]] = {}
    dropped: dict[str, int] = {}
    for language in LANGUAGE_ORDER:
        ranked = sorted(by_language.get(language, ()), key=lambda r: rank_key(r, metric_family))
        size = len(ranked) // 5
        bins[language] = [ranked[i * size : (i + 1) * size] for i in range(5)]
        dropped[language] = len(ranked) - 5 * size
        if dropped[language]:
            log.info("%s: %d remainder records dropped from the top of the ranking", language, dropped[language])

    if per_language_targets is None:
        targets = {lang: len(bins[lang][0]) for lang in LANGUAGE_ORDER if lang != supplement_language}
        targets[supplement_language] = split_size - sum(targets.values())
        if targets[supplement_language] < 0:
            raise InsufficientSamples(
                f"non-{supplement_language} bins hold {split_size - targets[supplement_language]} records, "
                f"more than the split size {split_size}"
            )
    else:
        targets = {lang: per_language_targets.get(lang, 0) for lang in LANGUAGE_ORDER}
        if sum(targets.values()) != split_size:
            raise ValueError(f"per-language targets sum to {sum(targets.values())}, split size is {split_size}")

    for language, target in targets.items():
        available = len(bins[language][0])
        if target > available:
            raise InsufficientSamples(
                f"{language}: bins of {available} records cannot supply {target} per split"
            )

    splits = {
        level: [r for language in LANGUAGE_ORDER for r in bins[language][i][: targets[language]]]
        for i, level in enumerate(LEVELS)
    }
    splits[CTRL] = draw_control("problem_driven", metric_family, splits, seed)
    return SplitSet("problem_driven", metric_family, seed, splits, dropped=dropped)


def draw_control(
    regime: str, metric_family: str, levels: Mapping[str, Sequence[DatasetRecord]], seed: int
) -> list[DatasetRecord]:
    """Mixed-complexity control split drawn from the five level splits.

    Solution-driven: one of each group's five representatives, uniformly.
    Problem-driven: each language's per-level count spread evenly over the five
    levels (remainder levels chosen at random), sampled without replacement.
    """
    if regime == "solution_driven":
        return _control_by_group(metric_family, levels, seed)
    if regime == "problem_driven":
        return _control_stratified(metric_family, levels, seed)
    raise ValueError(f"unknown regime {regime!r}")


def _control_by_group(metric_family, levels, seed):
    members: dict[tuple[str, str], list[DatasetRecord]] = {}
    for level in LEVELS:
        for r in levels[level]:
            members.setdefault((r.language, r.problem_id), []).append(r)
    control = []
    for language in LANGUAGE_ORDER:
        keys = [k for k in members if k[0] == language]
        rng = derive_rng(seed, "solution_driven", metric_family, CTRL, language)
        picks = rng.integers(0, len(LEVELS), size=len(keys))
        for key, pick in zip(keys, picks):
            group = members[key]
            if len(group) != len(LEVELS):
                raise ValueError(f"group {key} has {len(group)} level members, expected {len(LEVELS)}")
            control.append(group[int(pick)])
    return control


def _control_stratified(metric_family, levels, seed):
    cells = {
        (level, language): [r for r in levels[level] if r.language == language]
        for level in LEVELS
        for language in LANGUAGE_ORDER
    }
    quota: dict[tuple[str, str], int] = {}
    for language in LANGUAGE_ORDER:
        total = len(cells[(LEVELS[0], language)])
        base, extra = divmod(total, len(LEVELS))
        rng = derive_rng(seed, "problem_driven", metric_family, CTRL, "remainder", language)
        bonus = set(rng.choice(len(LEVELS), size=extra, replace=False).tolist())
        for i, level in enumerate(LEVELS):
            quota[(level, language)] = base + (i in bonus)

    control = []
    for level in LEVELS:
        for language in LANGUAGE_ORDER:
            cell, k = cells[(level, language)], quota[(level, language)]
            if k > len(cell):
                raise InsufficientSamples(f"control cell ({level}, {language}) has {len(cell)} records, needs {k}")
            rng = derive_rng(seed, "problem_driven", metric_family, level, language)
            picked = np.sort(rng.choice(len(cell), size=k, replace=False))
            control.extend(cell[i] for i in picked)
    return control


def sample_nl_baseline(rows: Sequence[dict], split_size: int = DEFAULT_SPLIT_SIZE, seed: int = 0) -> list[dict]:
    """Uniform sample of ``split_size`` rows from a non-code corpus, in corpus order."""
    if len(rows) < split_size:
        raise InsufficientSamples(f"NL corpus has {len(rows)} records, {split_size} required")
    picked = np.sort(derive_rng(seed, "nl_baseline").choice(len(rows), size=split_size, replace=False))
    return [rows[i] for i in picked]


def split_filename(regime: str, metric_family: str, level: str) -> str:
    return f"{regime}_{metric_family.lower()}_{level}.jsonl"


def emit_splits(split_sets: Sequence[SplitSet], output_dir: str | Path, extra: dict | None = None) -> list[Path]:
    """Write every split as JSON-lines plus one manifest per regime.

    Output bytes depend only on the split contents and seed.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    by_regime: dict[str, list[SplitSet]] = defaultdict(list)
    for s in split_sets:
        by_regime[s.regime].append(s)

    for regime, sets in by_regime.items():
        files = {}
        for s in sets:
            for level in (*LEVELS, CTRL):
                name = split_filename(regime, s.metric_family, level)
                files[name] = write_jsonl(out / name, s.rows(level))
                written.append(out / name)
        manifest = {
            "regime": regime,
            "seed": sets[0].seed,
            "splits": [s.manifest().to_dict() for s in sets],
            "files": files,
            **(extra or {}),
        }
        path = out / f"{regime}_manifest.json"
        path.write_text(dumps_pretty(manifest), encoding="utf-8")
        written.append(path)
    return written


def dumps_pretty(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2) + "\n"


def load_levels(split_dir: str | Path, regime: str, metric_family: str) -> dict[str, list[DatasetRecord]]:
    split_dir = Path(split_dir)
    return {
        level: [DatasetRecord.from_row(row) for row in read_jsonl(split_dir / split_filename(regime, metric_family, level))]
        for level in LEVELS
    }
