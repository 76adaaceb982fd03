"""Command-line entry point: ``codestruct {analyze,build,control,stats,correlate,augment}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import re
import sys
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean

from . import dataset as ds
from .augment import AugmentResult, ChatClient, ChatError, EmptyInput, EndpointConfig, augment, dry_run_bundles
from .jsonl import JsonlError, read_jsonl, write_jsonl
from .metrics import SourceUnit, analyze
from .pipeline import analyze_record, load_dataset_records
from .stats import (
    ALPHA,
    MissingBaseline,
    MissingLevel,
    ResultsSchemaError,
    correlation_table,
    delta_vs_baseline,
    load_results,
    load_reference_results,
    split_stats,
)

log = logging.getLogger("codestruct")

EXTENSIONS = {
    ".py": ("python", None),
    ".js": ("javascript", None),
    ".mjs": ("javascript", None),
    ".cjs": ("javascript", None),
    ".jsx": ("javascript", None),
    ".ts": ("javascript", "typescript"),
    ".tsx": ("javascript", "typescript"),
    ".mts": ("javascript", "typescript"),
    ".java": ("java", None),
}
LANGUAGE_FLAGS = {
    "python": ("python", None),
    "javascript": ("javascript", None),
    "typescript": ("javascript", "typescript"),
    "java": ("java", None),
}
SPLIT_FILE = re.compile(r"(solution|problem)_driven_(cc|lloc)_(min|low|mid|high|max|ctrl)\.jsonl")
REGIME_FLAGS = {"solution": "solution_driven", "problem": "problem_driven"}
METRIC_FLAGS = {"cc": ("CC",), "lloc": ("LLOC",), "both": ("CC", "LLOC")}


class UsageError(Exception):
    pass


@dataclass
class PipelineConfig:
    inputs: list[str] = field(default_factory=list)
    out: str | None = None
    regime: str = "problem"
    metric: str = "both"
    split_size: int = ds.DEFAULT_SPLIT_SIZE
    targets: dict[str, int] | None = None
    seed: int = 0
    jobs: int = 1
    nl_corpus: str | None = None
    endpoint: dict = field(default_factory=dict)
    log_level: str = "info"
    log_file: str | None = None

    def validate(self, check_inputs: bool = True) -> None:
        if self.regime not in REGIME_FLAGS:
            raise UsageError(f"--regime must be one of {sorted(REGIME_FLAGS)}")
        if self.metric not in METRIC_FLAGS:
            raise UsageError(f"--metric must be one of {sorted(METRIC_FLAGS)}")
        if self.split_size < 5:
            raise UsageError("--split-size must be at least 5")
        if not 0 <= self.seed < 2**64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        if check_inputs:
            for p in self.inputs + ([self.nl_corpus] if self.nl_corpus else []):
                if not Path(p).exists():
                    raise UsageError(f"input not found: {p}")


def _parse_targets(text: str) -> dict[str, int]:
    out = {}
    for part in text.split(","):
        lang, _, n = part.partition("=")
        if lang.strip() not in ds.LANGUAGE_ORDER or not n.strip().isdigit():
            raise UsageError(f"bad --targets entry {part!r}; expected e.g. python=3688,javascript=2789,java=1610")
        out[lang.strip()] = int(n)
    return out


def load_config(args: argparse.Namespace) -> PipelineConfig:
    """JSON config file first, then any flag given on the command line."""
    values: dict = {}
    if args.config:
        try:
            values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(values) - set(PipelineConfig.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for name in ("out", "regime", "metric", "split_size", "seed", "jobs", "nl_corpus", "log_file"):
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    if getattr(args, "inputs", None):
        values["inputs"] = list(args.inputs)
    if getattr(args, "targets", None):
        values["targets"] = _parse_targets(args.targets)
    endpoint = dict(values.get("endpoint") or {})
    for name in ("base_url", "model", "api_key_env", "timeout", "max_in_flight"):
        value = getattr(args, name, None)
        if value is not None:
            endpoint[name] = value
    values["endpoint"] = endpoint
    if args.verbose:
        values["log_level"] = "debug"
    return PipelineConfig(**values)


class _JsonFormatter(logging.Formatter):
    _skip = set(vars(logging.makeLogRecord({})))

    def format(self, record: logging.LogRecord) -> str:
        entry = {
            "time": self.formatTime(record, "%Y-%m-%dT%H:%M:%S"),
            "level": record.levelname.lower(),
            "logger": record.name,
            "message": record.getMessage(),
        }
        entry.update({k: v for k, v in vars(record).items() if k not in self._skip})
        return json.dumps(entry, ensure_ascii=False, default=str)


def setup_logging(level: str, log_file: str | None) -> None:
    root = logging.getLogger()
    for h in list(root.handlers):
        root.removeHandler(h)
    root.setLevel(logging.DEBUG)
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(getattr(logging, level.upper(), logging.INFO))
    console.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    root.addHandler(console)
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(log_file, encoding="utf-8")
        handler.setFormatter(_JsonFormatter())
        root.addHandler(handler)
    logging.getLogger("httpx").setLevel(logging.WARNING)


# ---------------------------------------------------------------------------
# analyze


def _iter_sources(paths: list[str]):
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            for p in sorted(path.rglob("*")):
                if p.is_file() and (p.suffix in EXTENSIONS or p.suffix == ".jsonl"):
                    yield p
        elif path.is_file():
            yield path
        else:
            raise UsageError(f"cannot read {raw}")


def _analyze_file(path: Path, language_flag: str | None) -> dict:
    language, dialect = LANGUAGE_FLAGS.get(language_flag) if language_flag else EXTENSIONS.get(path.suffix, (None, None))
    row = {"kind": "file", "path": str(path), "language": dialect or language}
    if language is None:
        row["metrics"] = {"parse_ok": False, "error": "unknown language; pass --language"}
        return row
    try:
        code = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError:
        row["metrics"] = {"parse_ok": False, "error": "not UTF-8 text"}
        return row
    if not code.strip() or "\x00" in code:
        row["metrics"] = {"parse_ok": False, "error": "empty or binary content"}
        return row
    row["metrics"] = analyze(SourceUnit(str(path), language, code, dialect)).to_dict()
    return row


def cmd_analyze(cfg: PipelineConfig, args) -> int:
    out_path = Path(cfg.out or "metrics.jsonl")
    rows = []
    for path in _iter_sources(cfg.inputs):
        if path.suffix == ".jsonl" and not args.language:
            try:
                for obj in read_jsonl(path):
                    rec = analyze_record(obj)
                    rows.append({"kind": "record", "path": str(path), "id": rec.get("id"),
                                 "language": rec.get("primary_language"), "blocks": rec.get("blocks"),
                                 "metrics": rec.get("metrics") or {"parse_ok": False, "error": rec.get("rejected")}})
            except JsonlError as exc:
                raise UsageError(str(exc)) from None
        else:
            rows.append(_analyze_file(path, args.language))
    if out_path.parent != Path(""):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    write_jsonl(out_path, rows)

    groups: dict[str, list[dict]] = defaultdict(list)
    for row in rows:
        groups[row.get("language") or "unknown"].append(row["metrics"])
        if not row["metrics"].get("parse_ok"):
            log.warning("%s %s: %s", row["path"], row.get("id") or "", row["metrics"].get("error"))
    print(f"{'language':<12}{'units':>7}{'parsed':>8}{'failed':>8}{'mean_cc':>10}{'mean_lloc':>11}")
    for language in sorted(groups):
        ok = [m for m in groups[language] if m.get("parse_ok")]
        mean_cc = fmean(m["cc_max"] for m in ok) if ok else math.nan
        mean_lloc = fmean(m["lloc_total"] for m in ok) if ok else math.nan
        print(f"{language:<12}{len(groups[language]):>7}{len(ok):>8}{len(groups[language]) - len(ok):>8}"
              f"{mean_cc:>10.2f}{mean_lloc:>11.2f}")
    print(f"wrote {len(rows)} rows to {out_path}")
    return 0


# ---------------------------------------------------------------------------
# build / control / stats


def _print_summary(split_sets) -> None:
    print(f"{'regime':<16}{'metric':<7}{'level':<6}{'size':>7}{'python':>8}{'js':>7}{'java':>7}{'mean_cc':>10}{'mean_lloc':>11}")
    for s in split_sets:
        for level, summary in s.manifest().levels.items():
            langs = summary.languages
            print(f"{s.regime:<16}{s.metric_family:<7}{level:<6}{summary.size:>7}{langs['python']:>8}"
                  f"{langs['javascript']:>7}{langs['java']:>7}{summary.mean_cc:>10.2f}{summary.mean_lloc:>11.2f}")


def _targets_for(cfg: PipelineConfig) -> dict[str, int] | None:
    if cfg.regime == "solution":
        if cfg.targets is None:
            if cfg.split_size != ds.DEFAULT_SPLIT_SIZE:
                raise UsageError("solution-driven builds with a custom --split-size need --targets")
            return dict(ds.SOLUTION_DRIVEN_TARGETS)
        if sum(cfg.targets.values()) != cfg.split_size:
            raise UsageError(f"--targets sum to {sum(cfg.targets.values())}, not --split-size {cfg.split_size}")
    return cfg.targets


def cmd_build(cfg: PipelineConfig, args) -> int:
    if not cfg.inputs:
        raise UsageError("build needs at least one corpus file")
    out = Path(cfg.out or "splits")
    regime = REGIME_FLAGS[cfg.regime]
    targets = _targets_for(cfg)

    objs = []
    for path in cfg.inputs:
        try:
            objs.extend(read_jsonl(path))
        except JsonlError as exc:
            raise UsageError(str(exc)) from None
    records, excluded = load_dataset_records(objs, cfg.jobs)
    log.info("%d records usable, %d excluded", len(records), sum(excluded.values()))

    split_sets = []
    for family in METRIC_FLAGS[cfg.metric]:
        if regime == "solution_driven":
            split_sets.append(ds.build_solution_driven(records, family, targets, cfg.seed))
        else:
            split_sets.append(ds.build_problem_driven(records, family, cfg.split_size, targets, cfg.seed))
    ds.emit_splits(split_sets, out, extra={"excluded_records": dict(sorted(excluded.items()))})
    if cfg.nl_corpus:
        _write_nl_baseline(cfg, out)
    _print_summary(split_sets)
    return 0


def _write_nl_baseline(cfg: PipelineConfig, out: Path) -> None:
    rows = list(read_jsonl(cfg.nl_corpus))
    sample = ds.sample_nl_baseline(rows, cfg.split_size, cfg.seed)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(out / "nl_baseline.jsonl", sample)
    print(f"wrote {len(sample)} NL baseline records to {out / 'nl_baseline.jsonl'}")


def cmd_control(cfg: PipelineConfig, args) -> int:
    if not cfg.inputs and not cfg.nl_corpus:
        raise UsageError("control needs a split directory or --nl-corpus")
    out = Path(cfg.out or (cfg.inputs[0] if cfg.inputs else "splits"))
    regime = REGIME_FLAGS[cfg.regime]
    for split_dir in cfg.inputs:
        for family in METRIC_FLAGS[cfg.metric]:
            try:
                levels = ds.load_levels(split_dir, regime, family)
            except FileNotFoundError as exc:
                raise UsageError(f"missing level file: {exc.filename}") from None
            control = ds.draw_control(regime, family, levels, cfg.seed)
            out.mkdir(parents=True, exist_ok=True)
            path = out / ds.split_filename(regime, family, ds.CTRL)
            write_jsonl(path, [r.to_row(ds.CTRL, family, regime) for r in control])
            print(f"wrote {len(control)} control records to {path}")
    if cfg.nl_corpus:
        _write_nl_baseline(cfg, out)
    return 0


def _split_files(paths: list[str]) -> list[Path]:
    files = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(q for q in p.glob("*.jsonl") if SPLIT_FILE.fullmatch(q.name)))
        elif p.is_file():
            files.append(p)
        else:
            raise UsageError(f"cannot read {raw}")
    return files


def cmd_stats(cfg: PipelineConfig, args) -> int:
    header = ["file", "regime", "metric_family", "level", "size", "python", "javascript", "java", "mean_cc", "mean_lloc"]
    table = []
    for path in _split_files(cfg.inputs):
        rows = []
        for row in read_jsonl(path):
            if "cc" not in row or "lloc" not in row:
                m = analyze_record(row).get("metrics")
                if not m or not m["parse_ok"]:
                    log.warning("%s: record %s has no metrics and could not be analysed", path, row.get("id"))
                    continue
                row = {**row, "cc": m["cc_max"], "lloc": m["lloc_total"]}
            rows.append(row)
        if not rows:
            log.warning("%s: empty split", path)
            continue
        means = split_stats(rows)
        langs = defaultdict(int)
        for row in rows:
            langs[row.get("language")] += 1
        first = rows[0]
        table.append([path.name, first.get("regime", ""), first.get("metric_family", ""), first.get("level", ""),
                      len(rows), langs["python"], langs["javascript"], langs["java"],
                      f"{means['mean_cc']:.4f}", f"{means['mean_lloc']:.4f}"])
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(table)
    if cfg.out:
        with open(cfg.out, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(header)
            w.writerows(table)
    return 0


# ---------------------------------------------------------------------------
# correlate


def _fmt(x: float | None) -> str:
    if x is None:
        return ""
    return "nan" if math.isnan(x) else repr(round(x, 12))


def cmd_correlate(cfg: PipelineConfig, args) -> int:
    source = cfg.inputs[0] if cfg.inputs else None
    records = load_results(source) if source else load_reference_results()
    table = correlation_table(records, exact=args.exact_p)
    out = Path(cfg.out or "correlation")
    out.mkdir(parents=True, exist_ok=True)

    header = ["model", "benchmark", "regime", "metric_family", "rho", "p_value", "n", "significant", "degenerate"]
    if args.exact_p:
        header.append("exact_p")
    rows_json = []
    with open(out / "correlations.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for key, r in table.items():
            line = [*key, _fmt(r.rho), _fmt(r.p_value), r.n, int(r.significant), int(r.degenerate)]
            if args.exact_p:
                line.append(_fmt(r.exact_p))
            w.writerow(line)
            rows_json.append(dict(zip(header, [*key, None if math.isnan(r.rho) else r.rho,
                                               None if math.isnan(r.p_value) else r.p_value,
                                               r.n, r.significant, r.degenerate] + ([r.exact_p] if args.exact_p else []))))
    (out / "correlations.json").write_text(json.dumps(rows_json, indent=2) + "\n", encoding="utf-8")

    has_baseline = any(r.level == "nl_baseline" for r in records)
    if has_baseline:
        for name, per_benchmark in (("deltas", False), ("benchmark_deltas", True)):
            deltas = delta_vs_baseline(records, per_benchmark=per_benchmark)
            cols = ["model", "benchmark", "regime", "metric_family", "level"] if per_benchmark else \
                ["model", "regime", "metric_family", "level"]
            with open(out / f"{name}.csv", "w", newline="", encoding="utf-8") as f:
                w = csv.writer(f, lineterminator="\n")
                w.writerow([*cols, "delta"])
                for key, value in deltas.items():
                    w.writerow([*key, _fmt(value)])
            payload = [dict(zip(cols, key), delta=value) for key, value in deltas.items()]
            (out / f"{name}.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    else:
        log.warning("no nl_baseline rows: accuracy deltas skipped")

    valid = [r for r in table.values() if not r.degenerate]
    significant = sum(r.significant for r in valid)
    print(f"{len(table)} correlations ({len(table) - len(valid)} degenerate), "
          f"{significant} significant at alpha={ALPHA}; written to {out}")
    return 0


# ---------------------------------------------------------------------------
# augment


def cmd_augment(cfg: PipelineConfig, args) -> int:
    if not cfg.inputs:
        raise UsageError("augment needs a CodeNet problems file")
    out = Path(cfg.out or "augmented")
    problems = []
    for path in cfg.inputs:
        try:
            problems.extend(read_jsonl(path))
        except JsonlError as exc:
            raise UsageError(str(exc)) from None

    out.mkdir(parents=True, exist_ok=True)
    if args.dry_run:
        bundles, failed = [], 0
        for problem in problems:
            try:
                bundles.extend(dry_run_bundles([problem]))
            except (EmptyInput, ValueError) as exc:
                failed += 1
                log.warning("skipping %s: %s", problem.get("problem_id"), exc)
        write_jsonl(out / "prompt_bundles.jsonl", bundles)
        print(f"wrote {len(bundles)} prompt bundles to {out / 'prompt_bundles.jsonl'} ({failed} records skipped)")
        return 0

    endpoint = EndpointConfig.from_dict(cfg.endpoint)
    with ChatClient(endpoint) as client:
        result: AugmentResult = augment(problems, client)
    write_jsonl(out / "augmented.jsonl", result.rows)
    for key, reason in sorted(result.failures.items()):
        log.warning("failed %s: %s", key, reason)
    print(f"wrote {len(result.rows)} records to {out / 'augmented.jsonl'}; {len(result.failures)} failures")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file; flags override its values")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--log-file", dest="log_file", help="JSON-lines log file")
    common.add_argument("-v", "--verbose", action="store_true")

    splits = argparse.ArgumentParser(add_help=False)
    splits.add_argument("--regime", choices=sorted(REGIME_FLAGS))
    splits.add_argument("--metric", choices=sorted(METRIC_FLAGS))
    splits.add_argument("--seed", type=int)
    splits.add_argument("--split-size", dest="split_size", type=int)
    splits.add_argument("--targets", help="per-language counts, e.g. python=3688,javascript=2789,java=1610")
    splits.add_argument("--nl-corpus", dest="nl_corpus", help="non-code JSON-lines corpus for the NL baseline")

    parser = argparse.ArgumentParser(prog="codestruct", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="compute CC and LLOC for files, directories or JSON-lines corpora")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--language", choices=sorted(LANGUAGE_FLAGS))

    p = sub.add_parser("build", parents=[common, splits], help="build complexity-controlled splits")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--jobs", type=int, help="worker processes for metric computation")

    p = sub.add_parser("control", parents=[common, splits], help="redraw control splits or cut the NL baseline")
    p.add_argument("inputs", nargs="*", help="directories holding level split files")

    p = sub.add_parser("stats", parents=[common], help="mean CC/LLOC and language counts per split file")
    p.add_argument("inputs", nargs="+")

    p = sub.add_parser("correlate", parents=[common], help="Spearman correlations and NL-baseline deltas")
    p.add_argument("inputs", nargs="?", help="results CSV/JSON-lines (default: bundled per-benchmark table)")
    p.add_argument("--exact-p", dest="exact_p", action="store_true", help="add permutation p-values")

    p = sub.add_parser("augment", parents=[common], help="turn CodeNet problems into instruction/response records")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--dry-run", dest="dry_run", action="store_true", help="emit prompt bundles, call nothing")
    p.add_argument("--base-url", dest="base_url")
    p.add_argument("--model")
    p.add_argument("--api-key-env", dest="api_key_env")
    p.add_argument("--timeout", type=float)
    p.add_argument("--max-in-flight", dest="max_in_flight", type=int)
    return parser


COMMANDS = {
    "analyze": cmd_analyze,
    "build": cmd_build,
    "control": cmd_control,
    "stats": cmd_stats,
    "correlate": cmd_correlate,
    "augment": cmd_augment,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if isinstance(getattr(args, "inputs", None), str):
        args.inputs = [args.inputs]
    try:
        cfg = load_config(args)
        cfg.validate(check_inputs=args.command not in ("analyze", "stats"))
        log_file = cfg.log_file
        if log_file is None and args.command in ("build", "control", "augment") and cfg.out:
            log_file = os.path.join(cfg.out, "run.log.jsonl")
        setup_logging(cfg.log_level, log_file)
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"codestruct: error: {exc}", file=sys.stderr)
        return 2
    except ChatError as exc:
        print(f"codestruct: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ds.InsufficientSamples, ds.InsufficientGroups, MissingLevel, MissingBaseline, ResultsSchemaError) as exc:
        print(f"codestruct: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
