"""Rank correlation between complexity level and benchmark accuracy, and deltas over the NL baseline."""

from __future__ import annotations

import csv
import itertools
import json
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from statistics import fmean

from scipy import stats as sps

from .dataset import CTRL, LEVELS, REGIMES

NL_BASELINE = "nl_baseline"
ALPHA = 0.05
EVAL_LEVELS = (*LEVELS, CTRL, NL_BASELINE)
_WIDE_REGIMES = {"codenet": "solution_driven", "instruct": "problem_driven"}


class DegenerateInput(ValueError):
    pass


class TooFewPoints(ValueError):
    pass


class MissingLevel(KeyError):
    def __str__(self) -> str:
        return str(self.args[0])


class MissingBaseline(KeyError):
    def __str__(self) -> str:
        return str(self.args[0])


class EmptySplit(ValueError):
    pass


class ResultsSchemaError(ValueError):
    pass


@dataclass(frozen=True)
class EvaluationRecord:
    model: str
    benchmark: str
    regime: str | None
    metric_family: str | None
    level: str
    accuracy: float

    def __post_init__(self) -> None:
        if self.level not in EVAL_LEVELS:
            raise ValueError(f"unknown level {self.level!r}")
        if not 0.0 <= self.accuracy <= 100.0:
            raise ValueError(f"accuracy {self.accuracy} outside [0, 100]")
        if self.level != NL_BASELINE:
            if self.regime not in REGIMES:
                raise ValueError(f"unknown regime {self.regime!r}")
            if self.metric_family not in ("CC", "LLOC"):
                raise ValueError(f"unknown metric family {self.metric_family!r}")


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_value: float
    n: int
    significant: bool
    degenerate: bool = False
    exact_p: float | None = None


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of the ranks they cover."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(levels: Sequence[float], values: Sequence[float]) -> float:
    """Tie-corrected Spearman coefficient: Pearson correlation of average ranks."""
    if len(levels) != len(values):
        raise ValueError("inputs differ in length")
    if len(levels) < 2:
        raise TooFewPoints("need at least two observations")
    rx, ry = average_ranks(levels), average_ranks(values)
    mx, my = fmean(rx), fmean(ry)
    dx = [r - mx for r in rx]
    dy = [r - my for r in ry]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise DegenerateInput("constant input: rank correlation is undefined")
    rho = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, rho))


def p_value(rho: float, n: int) -> float:
    """Two-sided p from t = rho * sqrt((n - 2) / (1 - rho^2)) with n - 2 degrees of freedom."""
    if n < 3:
        raise TooFewPoints(f"p-value needs n >= 3, got {n}")
    if abs(rho) > 1:
        raise ValueError(f"|rho| > 1: {rho}")
    if abs(rho) == 1:
        return 0.0
    t = rho * math.sqrt((n - 2) / (1 - rho * rho))
    return float(min(1.0, 2 * sps.t.sf(abs(t), n - 2)))


def exact_p_value(levels: Sequence[float], values: Sequence[float]) -> float:
    """Two-sided permutation p: share of value orderings with |rho| at least the observed one."""
    observed = abs(spearman(levels, values))
    hits = total = 0
    for perm in itertools.permutations(values):
        total += 1
        try:
            if abs(spearman(levels, perm)) >= observed - 1e-12:
                hits += 1
        except DegenerateInput:
            pass
    return hits / total


def correlate(levels: Sequence[float], values: Sequence[float], exact: bool = False) -> CorrelationResult:
    n = len(values)
    try:
        rho = spearman(levels, values)
    except DegenerateInput:
        return CorrelationResult(math.nan, math.nan, n, False, degenerate=True)
    p = p_value(rho, n)
    return CorrelationResult(rho, p, n, p < ALPHA, exact_p=exact_p_value(levels, values) if exact else None)


def correlation_table(
    records: Iterable[EvaluationRecord], exact: bool = False
) -> dict[tuple[str, str, str, str], CorrelationResult]:
    """Spearman between level index (min=0 .. max=4) and accuracy per (model, benchmark, regime, metric).

    Control and NL-baseline rows are ignored.
    """
    grouped: dict[tuple, dict[str, float]] = defaultdict(dict)
    for r in records:
        key = (r.model, r.benchmark, r.regime, r.metric_family)
        if r.level == NL_BASELINE:
            continue
        if r.level == CTRL:
            grouped.setdefault(key, {})
            continue
        if r.level in grouped[key]:
            raise ValueError(f"duplicate level {r.level} for {key}")
        grouped[key][r.level] = r.accuracy

    table = {}
    for key in sorted(grouped):
        present = grouped[key]
        missing = [lvl for lvl in LEVELS if lvl not in present]
        if missing:
            raise MissingLevel(f"{'/'.join(key)}: missing levels {', '.join(missing)}")
        table[key] = correlate(range(len(LEVELS)), [present[lvl] for lvl in LEVELS], exact=exact)
    return table


def delta_vs_baseline(
    records: Iterable[EvaluationRecord], per_benchmark: bool = False
) -> dict[tuple, float]:
    """Accuracy minus the model's NL-baseline accuracy on the same benchmark.

    Keys are ``(model, regime, metric_family, level)`` with the mean over
    benchmarks, or ``(model, benchmark, regime, metric_family, level)`` when
    ``per_benchmark`` is set.
    """
    records = list(records)
    baseline = {(r.model, r.benchmark): r.accuracy for r in records if r.level == NL_BASELINE}
    diffs: dict[tuple, list[float]] = defaultdict(list)
    for r in records:
        if r.level == NL_BASELINE:
            continue
        base = baseline.get((r.model, r.benchmark))
        if base is None:
            raise MissingBaseline(f"no NL baseline for {r.model} / {r.benchmark}")
        if per_benchmark:
            key = (r.model, r.benchmark, r.regime, r.metric_family, r.level)
        else:
            key = (r.model, r.regime, r.metric_family, r.level)
        diffs[key].append(r.accuracy - base)
    return {k: fmean(v) for k, v in sorted(diffs.items())}


def split_stats(records: Sequence) -> dict[str, float]:
    """Mean CC and LLOC of one split (records with ``cc``/``lloc`` attributes or keys)."""
    if not records:
        raise EmptySplit("split has no records")

    def get(r, name):
        return r[name] if isinstance(r, dict) else getattr(r, name)

    return {"mean_cc": fmean(get(r, "cc") for r in records), "mean_lloc": fmean(get(r, "lloc") for r in records)}


# ---------------------------------------------------------------------------
# loading


def _wide_rows(rows: list[dict], path: str) -> list[EvaluationRecord]:
    out = []
    for lineno, row in enumerate(rows, 2):
        try:
            model, bench = row["model"], row["benchmark"]
            out.append(EvaluationRecord(model, bench, None, None, NL_BASELINE, float(row["nl"])))
            for column, value in row.items():
                parts = column.split("_")
                if len(parts) != 3 or parts[0] not in _WIDE_REGIMES:
                    continue
                regime, family, level = _WIDE_REGIMES[parts[0]], parts[1].upper(), parts[2]
                out.append(EvaluationRecord(model, bench, regime, family, level, float(value)))
        except (KeyError, ValueError, TypeError) as exc:
            raise ResultsSchemaError(f"{path}:{lineno}: {exc}") from None
    return out


def _long_row(row: dict, where: str) -> EvaluationRecord:
    try:
        level = row["level"]
        return EvaluationRecord(
            model=row["model"],
            benchmark=row["benchmark"],
            regime=row.get("regime") or None,
            metric_family=(row.get("metric_family") or "").upper() or None,
            level=level,
            accuracy=float(row["accuracy"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ResultsSchemaError(f"{where}: {exc}") from None


def load_results(path: str | Path) -> list[EvaluationRecord]:
    """Read evaluation results from CSV (long layout, or the wide layout of the bundled accuracy table) or JSON-lines."""
    path = str(path)
    if path.endswith((".jsonl", ".json")):
        out = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ResultsSchemaError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
                out.append(_long_row(obj, f"{path}:{lineno}"))
        return out
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        fields = reader.fieldnames or []
        rows = list(reader)
    if "nl" in fields:
        return _wide_rows(rows, path)
    return [_long_row(row, f"{path}:{lineno}") for lineno, row in enumerate(rows, 2)]


def load_reference_results() -> list[EvaluationRecord]:
    """Bundled per-benchmark accuracies for six models, six benchmarks and all splits."""
    ref = resources.files("codestruct") / "data" / "benchmark_accuracy.csv"
    with resources.as_file(ref) as path:
        return load_results(path)
