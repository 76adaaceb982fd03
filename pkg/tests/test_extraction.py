import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codestruct.extraction import (
    UNSUPPORTED,
    CodeBlock,
    RawRecord,
    Rejection,
    extract_blocks,
    normalize_language,
    to_source_units,
)


def record(response, rid="r1"):
    return RawRecord(rid, "do it", response, "magicoder")


def test_single_block():
    blocks = extract_blocks("text\n```python\nprint(1)\n```\ntext")
    assert blocks == [CodeBlock("python", "print(1)", 0)]


def test_no_fences():
    assert extract_blocks("just prose, `inline` code") == []


def test_two_blocks_in_order():
    md = "a\n```js\nlet a = 1;\n```\nb\n```java\nint b = 2;\n```\n"
    blocks = extract_blocks(md)
    assert [(b.language_raw, b.code, b.position) for b in blocks] == [
        ("js", "let a = 1;", 0),
        ("java", "int b = 2;", 1),
    ]


def test_unterminated_fence_yields_nothing():
    assert extract_blocks("```python\nprint(1)\n") == []


def test_untagged_and_tilde_fences_ignored():
    md = "```\nx = 1\n```\n~~~python\ny = 2\n~~~\n```py\nz = 3\n```"
    assert [b.code for b in extract_blocks(md)] == ["z = 3"]


def test_untagged_fence_content_is_not_rescanned():
    md = "```\n```python\nnot a block\n```\n"
    assert extract_blocks(md) == []


def test_indented_fence_in_list():
    md = "1. step\n   ```python\n   if x:\n       y = 1\n   ```\n"
    assert extract_blocks(md)[0].code == "if x:\n    y = 1"


def test_four_space_indent_is_not_a_fence():
    assert extract_blocks("    ```python\n    x = 1\n    ```\n") == []


def test_longer_fence_contains_shorter():
    md = "````markdown\n```python\nx\n```\n````"
    assert extract_blocks(md) == [CodeBlock("markdown", "```python\nx\n```", 0)]


def test_info_string_keeps_first_token():
    assert extract_blocks("```python title=x.py\npass\n```")[0].language_raw == "python"


def test_empty_block():
    assert extract_blocks("```python\n```") == [CodeBlock("python", "", 0)]


@pytest.mark.parametrize(
    "raw,expected",
    [
        ("TypeScript", ("javascript", "typescript")),
        ("ts", ("javascript", "typescript")),
        ("ruby", (UNSUPPORTED, None)),
        ("PY", ("python", None)),
        ("python3", ("python", None)),
        ("Node", ("javascript", None)),
        ("JAVA", ("java", None)),
        ("c++", (UNSUPPORTED, None)),
        ("", (UNSUPPORTED, None)),
    ],
)
def test_normalize_language(raw, expected):
    assert normalize_language(raw) == expected


def test_one_python_block():
    lang, units = to_source_units(record("```python\nx = 1\n```"))
    assert lang == "python" and len(units) == 1
    assert units[0].origin_id == "r1#0"


def test_first_supported_block_decides():
    md = "```ruby\nputs 1\n```\n```java\nint a = 1;\n```\n```python\nx = 1\n```\n```java\nint b;\n```"
    lang, units = to_source_units(record(md))
    assert lang == "java"
    assert [u.code for u in units] == ["int a = 1;", "int b;"]
    assert all(u.language == "java" for u in units)


def test_typescript_units_keep_dialect():
    lang, units = to_source_units(record("```ts\nlet a: number = 1;\n```"))
    assert lang == "javascript" and units[0].dialect == "typescript"


def test_only_unsupported_is_rejected():
    with pytest.raises(Rejection) as info:
        to_source_units(record("```ruby\nputs 1\n```"))
    assert info.value.reason == "no_supported_code"


def test_empty_supported_block_is_skipped():
    lang, units = to_source_units(record("```python\n\n```\n```js\nf();\n```"))
    assert lang == "javascript"


def test_raw_record_from_json():
    r = RawRecord.from_json({"id": 7, "instruction": "i", "response": "r", "source": "weird"})
    assert (r.record_id, r.source_corpus) == ("7", "other")


# --- properties ------------------------------------------------------------------

tags = st.sampled_from(["python", "js", "java", "ts", "ruby", "Py", "go"])
code_lines = st.lists(
    st.text(alphabet=st.sampled_from("abc xyz=+()[]{};:#'\"\t~`-"), max_size=30).filter(
        lambda s: not s.lstrip(" ").startswith(("```", "~~~"))
    ),
    max_size=6,
)
prose = st.text(alphabet=st.sampled_from("abc .,\n"), max_size=40).map(lambda s: s.replace("\n\n", "\n"))


def linear_scan(md):
    """Independent reading for well-formed documents: tag line, body, closing line."""
    return [
        CodeBlock(m.group(1), m.group(2), i)
        for i, m in enumerate(re.finditer(r"^```(\S+)\n(.*?)\n?^```$", md, flags=re.M | re.S))
    ]


def serialize(blocks, prose_parts):
    parts = []
    for block, text in zip(blocks, prose_parts):
        parts.append(text)
        parts.append(f"```{block[0]}\n" + "\n".join(block[1]) + "\n```")
    return "\n".join(parts) + "\n"


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(tags, code_lines.filter(bool)), max_size=4), st.lists(prose, min_size=4, max_size=4))
def test_order_matches_linear_scan(blocks, prose_parts):
    md = serialize(blocks, prose_parts)
    assert extract_blocks(md) == linear_scan(md)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(tags, code_lines), max_size=4), st.lists(prose, min_size=4, max_size=4))
def test_round_trip(blocks, prose_parts):
    first = extract_blocks(serialize(blocks, prose_parts))
    again = extract_blocks(serialize([(b.language_raw, b.code.split("\n")) for b in first], prose_parts))
    assert again == first
    assert [b.code for b in first] == ["\n".join(lines) for _, lines in blocks]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(tags, code_lines), min_size=1, max_size=5))
def test_primary_language_units_only(blocks):
    md = serialize(blocks, [""] * len(blocks))
    try:
        lang, units = to_source_units(record(md))
    except Rejection:
        assert all(normalize_language(t)[0] == UNSUPPORTED or not "\n".join(c).strip() for t, c in blocks)
        return
    expected = [
        "\n".join(c) for t, c in blocks if normalize_language(t)[0] == lang and "\n".join(c).strip()
    ]
    assert [u.code for u in units] == expected
