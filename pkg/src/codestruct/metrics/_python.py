from __future__ import annotations

import ast
from collections.abc import Iterator

from . import ParseError, SyntaxTree

DEFS = (ast.FunctionDef, ast.AsyncFunctionDef)
FUNCTIONS = DEFS + (ast.Lambda,)
LOOPS = (ast.For, ast.AsyncFor, ast.While)


def parse(code: str, language: str, dialect: str | None) -> SyntaxTree:
    try:
        root = ast.parse(code)
    except (SyntaxError, ValueError, RecursionError, MemoryError) as exc:
        raise ParseError(f"{type(exc).__name__}: {exc}") from None
    tree = SyntaxTree(language, dialect, root)
    _collect(root, [], tree.functions)
    return tree


def _collect(node: ast.AST, prefix: list[str], out: list) -> None:
    for child in ast.iter_child_nodes(node):
        if isinstance(child, FUNCTIONS):
            name = "<lambda>" if isinstance(child, ast.Lambda) else child.name
            out.append((".".join(prefix + [name]), child))
            _collect(child, prefix + [name], out)
        elif isinstance(child, ast.ClassDef):
            _collect(child, prefix + [child.name], out)
        else:
            _collect(child, prefix, out)


def _scope(root: ast.AST) -> Iterator[ast.AST]:
    """Nodes owned by ``root``'s scope; nested functions are yielded but not entered."""
    stack = list(ast.iter_child_nodes(root))
    while stack:
        node = stack.pop()
        yield node
        if not isinstance(node, FUNCTIONS):
            stack.extend(ast.iter_child_nodes(node))


def _is_default_arm(case: ast.match_case) -> bool:
    pattern = case.pattern
    return case.guard is None and isinstance(pattern, ast.MatchAs) and pattern.pattern is None


def decision_points(root: ast.AST, language: str = "python") -> int:
    count = 0
    for node in _scope(root):
        if isinstance(node, FUNCTIONS):
            continue
        if isinstance(node, (ast.If, ast.IfExp, ast.ExceptHandler, ast.Assert) + LOOPS):
            count += 1
        elif isinstance(node, ast.comprehension):
            count += 1 + len(node.ifs)
        elif isinstance(node, ast.BoolOp):
            count += len(node.values) - 1
        elif isinstance(node, ast.match_case) and not _is_default_arm(node):
            count += 1
    return count


def statements(root: ast.AST, language: str = "python") -> int:
    count = 1 if isinstance(root, DEFS) else 0
    for node in _scope(root):
        if isinstance(node, ast.stmt) and not isinstance(node, DEFS):
            count += 1
    return count
