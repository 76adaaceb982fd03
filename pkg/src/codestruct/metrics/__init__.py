"""Cyclomatic complexity and logical lines of code for Python, JavaScript/TypeScript and Java.

One decision-point ruleset is applied to every language:

* ``if`` and ``elif`` / ``else if`` headers (a bare ``else`` adds nothing)
* conditional (ternary) expressions
* every loop header: ``for``, ``while``, ``do``-``while``, ``for-in``, ``for-of``,
  enhanced ``for`` and each ``for`` clause of a comprehension
* every non-default ``case`` / ``match`` arm
* every ``catch`` / ``except`` clause
* every short-circuit operator (``and``, ``or``, ``&&``, ``||``)
* every ``if`` clause of a comprehension
* ``assert`` statements (Python only)

A function's CC is one plus its decision points. Every function-like construct
(named functions, methods, constructors, lambdas, arrow functions and function
expressions) is its own scope, and code outside any function belongs to the
implicit ``<module>`` function.

LLOC counts statements: one per simple statement, one per compound-statement
header, nothing for comments, blank lines, braces and clause headers such as
``else``, ``except``, ``finally`` or ``case``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

LANGUAGES = ("python", "javascript", "java")
DIALECTS = ("typescript",)
MODULE_NAME = "<module>"


class ParseError(Exception):
    """The code is not syntactically valid for its language."""


@dataclass(frozen=True)
class SourceUnit:
    origin_id: str
    language: str
    code: str
    dialect: str | None = None

    def __post_init__(self) -> None:
        if self.language not in LANGUAGES:
            raise ValueError(f"unsupported language {self.language!r}")
        if self.dialect is not None:
            if self.dialect not in DIALECTS:
                raise ValueError(f"unsupported dialect {self.dialect!r}")
            if self.language != "javascript":
                raise ValueError("the typescript dialect requires language='javascript'")
        if not self.code.strip():
            raise ValueError(f"{self.origin_id}: empty code")


@dataclass(frozen=True)
class FunctionMetric:
    name: str
    cc: int
    lloc: int


@dataclass(frozen=True)
class ComplexityMetrics:
    cc_max: int | None
    lloc_total: int | None
    functions: tuple[FunctionMetric, ...] = ()
    parse_ok: bool = True
    error: str | None = None

    @classmethod
    def failed(cls, error: str) -> ComplexityMetrics:
        return cls(cc_max=None, lloc_total=None, functions=(), parse_ok=False, error=error)

    def to_dict(self) -> dict[str, Any]:
        return {
            "parse_ok": self.parse_ok,
            "cc_max": self.cc_max,
            "lloc_total": self.lloc_total,
            "functions": [{"name": f.name, "cc": f.cc, "lloc": f.lloc} for f in self.functions],
            "error": self.error,
        }


@dataclass
class SyntaxTree:
    """Parsed unit: the root node plus its function scopes in source order.

    ``functions`` holds ``(qualified_name, node)`` pairs for every function-like
    construct. The root itself stands for the implicit top-level function.
    """

    language: str
    dialect: str | None
    root: Any
    functions: list[tuple[str, Any]] = field(default_factory=list)


def _backend(language: str):
    if language == "python":
        from . import _python

        return _python
    from . import _treesitter

    return _treesitter


def parse_unit(unit: SourceUnit) -> SyntaxTree:
    """Parse ``unit`` or raise :class:`ParseError`."""
    return _backend(unit.language).parse(unit.code, unit.language, unit.dialect)


def function_cc(fn_subtree: Any, language: str) -> int:
    """1 + decision points of one function scope (nested functions excluded)."""
    return 1 + _backend(language).decision_points(fn_subtree, language)


def function_lloc(fn_subtree: Any, language: str) -> int:
    """Logical statements of one function scope, its own declaration header included."""
    return _backend(language).statements(fn_subtree, language)


def analyze(unit: SourceUnit) -> ComplexityMetrics:
    """Compute per-function and unit-level metrics; parse failures are returned, not raised."""
    try:
        tree = parse_unit(unit)
    except ParseError as exc:
        return ComplexityMetrics.failed(str(exc))

    functions = [
        FunctionMetric(name, function_cc(node, unit.language), function_lloc(node, unit.language))
        for name, node in tree.functions
    ]
    module_lloc = function_lloc(tree.root, unit.language)
    # no named functions: the module scope is kept so every unit has a CC >= 1
    if module_lloc or not functions:
        module = FunctionMetric(MODULE_NAME, function_cc(tree.root, unit.language), module_lloc)
        functions.insert(0, module)

    lloc_total = sum(f.lloc for f in functions)
    if lloc_total == 0:
        return ComplexityMetrics.failed("no statements")
    return ComplexityMetrics(
        cc_max=max(f.cc for f in functions),
        lloc_total=lloc_total,
        functions=tuple(functions),
    )


def aggregate(metrics: list[ComplexityMetrics]) -> ComplexityMetrics:
    """Combine several units of one record: max of CC, sum of LLOC.

    Any failed unit fails the aggregate, since partial metrics would understate the record.
    """
    if not metrics:
        return ComplexityMetrics.failed("no units")
    for m in metrics:
        if not m.parse_ok:
            return ComplexityMetrics.failed(m.error or "parse failure")
    return ComplexityMetrics(
        cc_max=max(m.cc_max for m in metrics),
        lloc_total=sum(m.lloc_total for m in metrics),
        functions=tuple(f for m in metrics for f in m.functions),
    )


__all__ = [
    "LANGUAGES",
    "MODULE_NAME",
    "ComplexityMetrics",
    "FunctionMetric",
    "ParseError",
    "SourceUnit",
    "SyntaxTree",
    "aggregate",
    "analyze",
    "function_cc",
    "function_lloc",
    "parse_unit",
]
