"""Exit criteria for the toolkit. Run with ``pytest -m acceptance -s``.

Each test prints exactly one ``ACCEPTANCE <n> PASS|FAIL`` line.
"""

import contextlib
import filecmp
import itertools
import os
import random
import time
from pathlib import Path

import pytest

import codestruct.dataset as ds
from codestruct.augment import TemplatePair, instantiate
from codestruct.augment.prompts import INSTRUCTION_PROMPT, RESPONSE_PROMPT, SYSTEM_PROMPT
from codestruct.dataset import CTRL, LEVELS, build_problem_driven, build_solution_driven, emit_splits
from codestruct.extraction import extract_blocks
from codestruct.jsonl import read_jsonl
from codestruct.metrics import SourceUnit, analyze
from codestruct.pipeline import analyze_record
from codestruct.stats import correlation_table, delta_vs_baseline, load_reference_results, spearman
from oracle_corpus import cases
from oracles import classic, oracle_spearman
from snippets import LANGS, generate, insert_comments, random_body, reformat
from synthetic import problem_corpus, solution_corpus
from test_augment import PROMPT_SHA256, sha

pytestmark = pytest.mark.acceptance


@contextlib.contextmanager
def criterion(capsys, number, label, limit):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < limit, f"took {elapsed:.2f}s, limit {limit}s"
    except BaseException as exc:
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} FAIL {label}: {exc}")
        raise
    with capsys.disabled():
        print(f"\nACCEPTANCE {number} PASS {label} ({elapsed:.2f}s)")


def measure(code, language, dialect=None):
    m = analyze(SourceUnit("t", language, code, dialect))
    return m.cc_max, m.lloc_total


def fn_metrics(code, language):
    name = "A.f" if language == "java" else "f"
    m = analyze(SourceUnit("t", language, code))
    f = next(f for f in m.functions if f.name == name)
    return f.cc, f.lloc


def test_1_hand_counted_corpus(capsys):
    with criterion(capsys, 1, "hand-counted metric corpus", 5):
        corpus = cases()
        per_language = {}
        for _, language, dialect, *_ in corpus:
            per_language[language] = per_language.get(language, 0) + 1
        assert min(per_language.values()) >= 20 and len(per_language) == 3
        wrong = [(name, measure(code, lang, dialect), (cc, lloc))
                 for name, lang, dialect, code, cc, lloc in corpus
                 if measure(code, lang, dialect) != (cc, lloc)]
        assert not wrong, wrong


def test_2_metric_properties(capsys):
    with criterion(capsys, 2, "1000 metric-preserving and if-wrap transformations", 60):
        rng = random.Random(20240611)
        corpus = cases()
        violations = []
        for i in range(1000):
            language = LANGS[i % len(LANGS)]
            kind = ("comment", "format", "wrap")[i % 3]
            seed = rng.getrandbits(32)
            if kind == "comment" and i % 2:
                name, lang, dialect, code, cc, lloc = corpus[seed % len(corpus)]
                got = measure(insert_comments(random.Random(seed), lang, code), lang, dialect)
                expected = (cc, lloc)
            elif kind == "comment":
                g = generate(random.Random(seed), language)
                got = measure(insert_comments(random.Random(seed + 1), language, g.code), language)
                expected = (g.cc, g.unit_lloc)
            elif kind == "format":
                g = generate(random.Random(seed), language)
                got = measure(reformat(random.Random(seed + 1), language, g.code), language)
                expected = (g.cc, g.unit_lloc)
            else:
                body = random_body(random.Random(seed), size=1 + seed % 4)
                plain = fn_metrics(generate(random.Random(seed), language, body).code, language)
                got = fn_metrics(generate(random.Random(seed), language, body, wrap=True).code, language)
                expected = (plain[0] + 1, plain[1] + 1)
            if got != expected:
                violations.append((i, kind, language, seed, got, expected))
        assert not violations, violations[:5]


def test_3_spearman_oracle(capsys):
    with criterion(capsys, 3, "spearman vs brute-force rank oracle on 10000 vectors", 30):
        rng = random.Random(7)
        worst, classic_checked = 0.0, 0
        for _ in range(10_000):
            n = rng.randint(3, 8)
            if rng.random() < 0.5:
                x, y = rng.sample(range(100), n), rng.sample(range(100), n)
            else:
                x = [rng.randint(0, 3) for _ in range(n)]
                y = [rng.randint(0, 3) for _ in range(n)]
            if len(set(x)) < 2 or len(set(y)) < 2:
                continue
            rho = spearman(x, y)
            worst = max(worst, abs(rho - oracle_spearman(x, y)))
            if len(set(x)) == n and len(set(y)) == n:
                worst = max(worst, abs(rho - classic(x, y)))
                classic_checked += 1
        assert worst <= 1e-12, worst
        assert classic_checked >= 4000


def test_4_reference_correlations(capsys):
    with criterion(capsys, 4, "correlations recomputed from bundled accuracy table", 5):
        table = correlation_table(load_reference_results())
        assert len(table) == 144
        assert table[("Qwen2.5-3B", "BBEH-mini", "solution_driven", "CC")].rho == pytest.approx(-0.6, abs=1e-12)
        llama_cc = [r.rho for (model, _, _, family), r in table.items() if model.startswith("Llama") and family == "CC"]
        assert llama_cc and min(llama_cc) <= -0.9


def test_5_delta_over_baseline(capsys):
    with criterion(capsys, 5, "delta over NL baseline", 1):
        deltas = delta_vs_baseline(load_reference_results(), per_benchmark=True)
        assert deltas[("Mistral-7B", "GSM8K", "solution_driven", "CC", "min")] == 55.0


def _check_split_set(s, size, violations):
    tag = f"{s.regime}/{s.metric_family}"
    levels = [s.splits[level] for level in LEVELS]
    if any(len(split) != size for split in (*levels, s.splits[CTRL])):
        violations.append(f"{tag}: split sizes {[len(x) for x in (*levels, s.splits[CTRL])]}")
    ids = [r.record_id for split in levels for r in split]
    if len(ids) != len(set(ids)):
        violations.append(f"{tag}: level splits overlap")
    if not {r.record_id for r in s.splits[CTRL]} <= set(ids):
        violations.append(f"{tag}: control not contained in level splits")
    key = "mean_cc" if s.metric_family == "CC" else "mean_lloc"
    means = [getattr(ds.split_summary(split), key) for split in levels]
    if any(a > b for a, b in itertools.pairwise(means)):
        violations.append(f"{tag}: level means not nondecreasing {means}")


def _same_tree(a: Path, b: Path) -> bool:
    names = sorted(p.name for p in a.iterdir())
    if names != sorted(p.name for p in b.iterdir()):
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    return not mismatch and not errors


def test_6_split_construction(capsys, tmp_path):
    with criterion(capsys, 6, "split properties on 10k synthetic records", 30):
        problem = problem_corpus({"python": 6000, "javascript": 2500, "java": 1500}, seed=11)
        solution = solution_corpus({"python": 420, "javascript": 330, "java": 430}, seed=12)
        assert len(problem) == 10_000 and len(solution) >= 9_000
        targets = {"python": 400, "javascript": 300, "java": 400}

        def build(prob, sol):
            return [
                *(build_problem_driven(prob, fam, split_size=1600, seed=5) for fam in ds.METRIC_FAMILIES),
                *(build_solution_driven(sol, fam, targets, seed=5) for fam in ds.METRIC_FAMILIES),
            ]

        violations = []
        first = build(problem, solution)
        for s in first:
            _check_split_set(s, 1600 if s.regime == "problem_driven" else 1100, violations)
        emit_splits(first, tmp_path / "a")
        emit_splits(build(problem, solution), tmp_path / "b")
        emit_splits(build(list(reversed(problem)), list(reversed(solution))), tmp_path / "c")
        if not (_same_tree(tmp_path / "a", tmp_path / "b") and _same_tree(tmp_path / "a", tmp_path / "c")):
            violations.append("reruns are not byte-identical")
        assert len(list((tmp_path / "a").iterdir())) == 26
        assert not violations, violations


def test_7_full_scale_problem_driven(capsys):
    with criterion(capsys, 7, "full-scale problem-driven split arithmetic", 60):
        corpus = problem_corpus({"python": 77686, "javascript": 13949, "java": 8054}, seed=3)
        s = build_problem_driven(corpus, "CC", split_size=8087, per_language_targets=ds.PROBLEM_DRIVEN_TARGETS)
        for level in LEVELS:
            summary = ds.split_summary(s.splits[level])
            assert summary.size == 8087
            assert summary.languages == {"python": 3688, "javascript": 2789, "java": 1610}
        assert s.dropped["javascript"] == 4 and s.dropped["java"] == 4
        assert len(s.splits[CTRL]) == 8087


# Mean (CC, LLOC) per level for each published split configuration.
PUBLISHED_MEANS = {
    ("solution_driven", "CC"): {
        "min": (7.79, 37.67), "low": (9.91, 44.65), "mid": (13.99, 58.81),
        "high": (20.63, 82.50), "max": (43.03, 169.67), "ctrl": (18.84, 76.14),
    },
    ("solution_driven", "LLOC"): {
        "min": (8.83, 32.67), "low": (10.66, 40.75), "mid": (14.32, 57.69),
        "high": (19.95, 84.82), "max": (40.63, 180.17), "ctrl": (19.21, 81.83),
    },
    ("problem_driven", "CC"): {
        "min": (0.63, 8.35), "low": (0.69, 8.26), "mid": (2.00, 10.76),
        "high": (3.89, 15.25), "max": (11.12, 29.83), "ctrl": (3.78, 15.02),
    },
    ("problem_driven", "LLOC"): {
        "min": (0.96, 3.43), "low": (1.30, 4.74), "mid": (2.62, 9.65),
        "high": (4.01, 16.06), "max": (7.58, 43.94), "ctrl": (3.78, 15.81),
    },
}


def _recomputed_means(path: Path) -> tuple[float, float]:
    cc, lloc = [], []
    for row in read_jsonl(path):
        m = analyze_record(row).get("metrics")
        if m and m["parse_ok"]:
            cc.append(m["cc_max"])
            lloc.append(m["lloc_total"])
    assert cc, f"{path}: no analysable records"
    return sum(cc) / len(cc), sum(lloc) / len(lloc)


@pytest.mark.skipif(
    not os.environ.get("CODESTRUCT_RELEASED_SPLITS"),
    reason="set CODESTRUCT_RELEASED_SPLITS to a directory holding the released split files",
)
def test_8_released_split_means(capsys):
    root = Path(os.environ["CODESTRUCT_RELEASED_SPLITS"])
    with criterion(capsys, 8, "published split means within 10%", float("inf")):
        problems = []
        for (regime, family), expected in PUBLISHED_MEANS.items():
            ours = {level: _recomputed_means(root / ds.split_filename(regime, family, level)) for level in expected}
            for level, pair in expected.items():
                for label, want, got in zip(("CC", "LLOC"), pair, ours[level]):
                    if abs(got - want) > 0.10 * abs(want):
                        problems.append(f"{regime}/{family}/{level} mean {label}: {got:.2f} vs {want:.2f}")
            idx = 0 if family == "CC" else 1
            ordered = [ours[level][idx] for level in LEVELS]
            if any(a > b for a, b in itertools.pairwise(ordered)):
                problems.append(f"{regime}/{family}: level means not monotone {ordered}")
        assert not problems, problems


def test_9_prompt_fidelity_and_round_trip(capsys):
    with criterion(capsys, 9, "prompt fidelity and 1000 template round trips", 10):
        assert sha(SYSTEM_PROMPT) == PROMPT_SHA256["system"]
        assert sha(INSTRUCTION_PROMPT) == PROMPT_SHA256["instruction"]
        assert sha(RESPONSE_PROMPT) == PROMPT_SHA256["response"]
        rng = random.Random(99)
        alphabet = "abcxyz019 \t\n`~#{}<>()[];:'\"\\/*-=+"
        pair = TemplatePair("Solve this in <language>.", "A <language> answer:\n<code>\nThat is all.")
        failures = []
        for i in range(1000):
            code = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 80)))
            if rng.random() < 0.2:
                code += "\n" + "`" * rng.randint(3, 6) + "\n"
            name = ("Python", "JavaScript", "TypeScript", "Java")[i % 4]
            instruction, response = instantiate(pair, name, code)
            blocks = extract_blocks(response)
            if instruction != f"Solve this in {name}." or len(blocks) != 1 or blocks[0].code != code:
                failures.append(repr(code))
        assert not failures, failures[:3]
