"""JavaScript, TypeScript and Java metrics on tree-sitter syntax trees."""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass
from functools import lru_cache

import tree_sitter
import tree_sitter_java
import tree_sitter_javascript
import tree_sitter_typescript

from . import ParseError, SyntaxTree

Node = tree_sitter.Node


@dataclass(frozen=True)
class Rules:
    functions: frozenset[str]
    # function types whose declaration is itself a statement of the function
    declarations: frozenset[str]
    statements: frozenset[str]
    # counted only when they do not directly wrap another statement
    wrappers: frozenset[str]
    branches: frozenset[str]
    case_arm: str
    classes: frozenset[str]


_JS_STATEMENTS = frozenset(
    {
        "expression_statement",
        "variable_declaration",
        "lexical_declaration",
        "if_statement",
        "for_statement",
        "for_in_statement",
        "while_statement",
        "do_statement",
        "try_statement",
        "with_statement",
        "switch_statement",
        "break_statement",
        "continue_statement",
        "return_statement",
        "throw_statement",
        "debugger_statement",
        "import_statement",
        "class_declaration",
        "field_definition",
    }
)

_JS = Rules(
    functions=frozenset(
        {
            "function_declaration",
            "generator_function_declaration",
            "function_expression",
            "function",
            "generator_function",
            "arrow_function",
            "method_definition",
        }
    ),
    declarations=frozenset({"function_declaration", "generator_function_declaration", "method_definition"}),
    statements=_JS_STATEMENTS,
    wrappers=frozenset({"export_statement"}),
    branches=frozenset(
        {
            "if_statement",
            "ternary_expression",
            "for_statement",
            "for_in_statement",
            "while_statement",
            "do_statement",
            "catch_clause",
        }
    ),
    case_arm="switch_case",
    classes=frozenset({"class_declaration", "class"}),
)

_TS = Rules(
    functions=_JS.functions,
    declarations=_JS.declarations,
    # type-only declarations are statements; interface members are not
    statements=_JS_STATEMENTS
    | {
        "interface_declaration",
        "type_alias_declaration",
        "enum_declaration",
        "abstract_class_declaration",
        "function_signature",
        "abstract_method_signature",
        "public_field_definition",
        "internal_module",
        "module",
        "import_alias",
    },
    wrappers=_JS.wrappers | {"ambient_declaration"},
    branches=_JS.branches,
    case_arm=_JS.case_arm,
    classes=_JS.classes | {"abstract_class_declaration", "interface_declaration"},
)

_JAVA = Rules(
    functions=frozenset(
        {"method_declaration", "constructor_declaration", "compact_constructor_declaration", "lambda_expression"}
    ),
    declarations=frozenset({"method_declaration", "constructor_declaration", "compact_constructor_declaration"}),
    statements=frozenset(
        {
            "local_variable_declaration",
            "expression_statement",
            "if_statement",
            "for_statement",
            "enhanced_for_statement",
            "while_statement",
            "do_statement",
            "try_statement",
            "try_with_resources_statement",
            "return_statement",
            "break_statement",
            "continue_statement",
            "throw_statement",
            "yield_statement",
            "synchronized_statement",
            "assert_statement",
            "explicit_constructor_invocation",
            "class_declaration",
            "interface_declaration",
            "enum_declaration",
            "record_declaration",
            "annotation_type_declaration",
            "field_declaration",
            "constant_declaration",
            "method_declaration",
            "import_declaration",
            "package_declaration",
        }
    ),
    wrappers=frozenset(),
    branches=frozenset(
        {
            "if_statement",
            "ternary_expression",
            "for_statement",
            "enhanced_for_statement",
            "while_statement",
            "do_statement",
            "catch_clause",
        }
    ),
    case_arm="switch_label",
    classes=frozenset(
        {"class_declaration", "interface_declaration", "enum_declaration", "record_declaration"}
    ),
)

# a Java switch is a statement only where a statement may appear
_JAVA_STATEMENT_PARENTS = frozenset(
    {
        "program",
        "block",
        "constructor_body",
        "switch_block_statement_group",
        "labeled_statement",
        "if_statement",
        "for_statement",
        "enhanced_for_statement",
        "while_statement",
        "do_statement",
    }
)


@lru_cache(maxsize=None)
def _language(key: str) -> tree_sitter.Language:
    if key == "javascript":
        return tree_sitter.Language(tree_sitter_javascript.language())
    if key == "typescript":
        return tree_sitter.Language(tree_sitter_typescript.language_typescript())
    if key == "tsx":
        return tree_sitter.Language(tree_sitter_typescript.language_tsx())
    return tree_sitter.Language(tree_sitter_java.language())


def _rules(language: str, dialect: str | None = None) -> Rules:
    if language == "java":
        return _JAVA
    return _TS if dialect == "typescript" else _JS


def parse(code: str, language: str, dialect: str | None) -> SyntaxTree:
    source = code.encode("utf-8")
    grammars = ["typescript", "tsx"] if dialect == "typescript" else [language]
    root = None
    for grammar in grammars:
        # tree-sitter parsers are not thread-safe; one per call keeps parse() pure
        tree = tree_sitter.Parser(_language(grammar)).parse(source)
        if not tree.root_node.has_error:
            root = tree.root_node
            break
    if root is None:
        raise ParseError(f"syntax error in {dialect or language} code")
    rules = _rules(language, dialect)
    tree = SyntaxTree(language, dialect, root)
    tree.root = _Scope(root, rules)
    _collect(root, rules, [], tree.functions)
    return tree


@dataclass(frozen=True)
class _Scope:
    """A tree-sitter node paired with the rules of the grammar it came from."""

    node: Node
    rules: Rules


def _text(node: Node | None) -> str:
    return node.text.decode("utf-8", "replace") if node is not None and node.text else ""


def _is_function(node: Node, rules: Rules) -> bool:
    if node.type not in rules.functions:
        return False
    # abstract and interface methods have no body: they are plain declarations
    return node.type != "method_declaration" or node.child_by_field_name("body") is not None


def _function_name(node: Node) -> str:
    name = node.child_by_field_name("name")
    if name is not None:
        return _text(name)
    if node.type == "lambda_expression":
        return "<lambda>"
    parent = node.parent
    if parent is not None:
        if parent.type == "variable_declarator":
            return _text(parent.child_by_field_name("name")) or "<anonymous>"
        if parent.type == "pair":
            return _text(parent.child_by_field_name("key")) or "<anonymous>"
        if parent.type == "assignment_expression":
            return _text(parent.child_by_field_name("left")) or "<anonymous>"
        if parent.type in ("field_definition", "public_field_definition"):
            prop = parent.child_by_field_name("property") or parent.child_by_field_name("name")
            return _text(prop) or "<anonymous>"
    return "<anonymous>"


def _collect(node: Node, rules: Rules, prefix: list[str], out: list) -> None:
    for child in node.named_children:
        if _is_function(child, rules):
            name = _function_name(child)
            out.append((".".join(prefix + [name]), _Scope(child, rules)))
            _collect(child, rules, prefix + [name], out)
        elif child.type in rules.classes:
            name = _text(child.child_by_field_name("name")) or "<anonymous>"
            _collect(child, rules, prefix + [name], out)
        else:
            _collect(child, rules, prefix, out)


def _owned(scope: _Scope) -> Iterator[Node]:
    """Named descendants owned by the scope; nested functions are yielded but not entered."""
    stack = list(reversed(scope.node.named_children))
    while stack:
        node = stack.pop()
        yield node
        if not _is_function(node, scope.rules):
            stack.extend(reversed(node.named_children))


def _as_scope(subtree, language: str) -> _Scope:
    if isinstance(subtree, _Scope):
        return subtree
    return _Scope(subtree, _rules(language))


def decision_points(subtree, language: str) -> int:
    scope = _as_scope(subtree, language)
    rules = scope.rules
    count = 0
    for node in _owned(scope):
        kind = node.type
        if _is_function(node, rules):
            continue
        if kind in rules.branches:
            count += 1
        elif kind == rules.case_arm:
            # java: a default label has no case values
            if kind != "switch_label" or node.named_child_count > 0:
                count += 1
        elif kind == "binary_expression":
            op = node.child_by_field_name("operator")
            if op is not None and op.type in ("&&", "||"):
                count += 1
    return count


def _is_statement(node: Node, rules: Rules) -> bool:
    kind = node.type
    parent = node.parent
    if parent is not None and parent.type == "for_statement" and node != parent.child_by_field_name("body"):
        # for-loop initialiser and condition are part of the loop header
        return False
    if kind in rules.wrappers:
        return not any(_is_statement(c, rules) or c.type in rules.declarations for c in node.named_children)
    if kind == "switch_expression":
        return parent is not None and parent.type in _JAVA_STATEMENT_PARENTS
    if kind == "method_declaration":
        return node.child_by_field_name("body") is None
    return kind in rules.statements


def statements(subtree, language: str) -> int:
    scope = _as_scope(subtree, language)
    rules = scope.rules
    count = 1 if scope.node.type in rules.declarations else 0
    for node in _owned(scope):
        if not _is_function(node, rules) and _is_statement(node, rules):
            count += 1
    return count
