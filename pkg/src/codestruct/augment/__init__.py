"""CodeNet augmentation: one instruction template and one response template per language.

Input records look like::

    {"problem_id": "p00001", "html": "<p>...</p>",
     "solutions": [{"id": "s1", "language": "Python", "code": "..."}]}

Each solution becomes ``{"id", "problem_id", "instruction", "response", "language", "source"}``.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

from ..extraction import normalize_language
from .client import (
    AuthError,
    ChatClient,
    ChatError,
    EndpointConfig,
    MalformedResponse,
    RateLimited,
    Timeout,
    chat_complete,
    complete_many,
)
from .prompts import (
    DISPLAY_NAMES,
    RESPONSE_PROMPT,
    SYSTEM_PROMPT,
    EmptyInput,
    MissingToken,
    PromptBundle,
    TemplateError,
    TemplatePair,
    build_instruction_prompt,
    build_response_prompt,
    instantiate,
)

log = logging.getLogger(__name__)

TEMPLATE_LANGUAGES = ("python", "javascript", "java")


@dataclass
class AugmentResult:
    rows: list[dict] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)


def _check(problem: dict) -> str:
    if "problem_id" not in problem:
        raise ValueError("record lacks problem_id")
    return str(problem["problem_id"])


def dry_run_bundles(problems: Sequence[dict]) -> list[dict]:
    """Every prompt the augmentation would send, without sending any.

    Response prompts depend on the instruction the service has not yet written,
    so they are emitted with the ``{instruction}`` slot left open.
    """
    rows = []
    for problem in problems:
        pid = _check(problem)
        bundle = build_instruction_prompt(problem.get("html", ""))
        rows.append({"request_id": f"{pid}/instruction", "record_id": pid, "kind": "instruction",
                     "language": None, "system": bundle.system, "user": bundle.user})
        for language in TEMPLATE_LANGUAGES:
            rows.append({"request_id": f"{pid}/response/{language}", "record_id": pid, "kind": "response",
                         "language": language, "system": SYSTEM_PROMPT, "user": RESPONSE_PROMPT,
                         "pending": "instruction"})
    return rows


def augment(problems: Sequence[dict], client: ChatClient) -> AugmentResult:
    """Request templates for every problem, then instantiate them with each solution."""
    result = AugmentResult()
    requests = []
    for problem in problems:
        pid = _check(problem)
        try:
            requests.append((pid, build_instruction_prompt(problem.get("html", ""))))
        except EmptyInput as exc:
            result.failures[pid] = str(exc)
    instructions = complete_many(client, requests)

    response_requests = []
    for pid, text in instructions.items():
        if isinstance(text, ChatError):
            result.failures[pid] = f"instruction request failed: {text}"
        elif "<language>" not in text:
            result.failures[pid] = "instruction template lacks <language>"
        else:
            bundle = build_response_prompt(text)
            response_requests.extend((f"{pid}/{lang}", bundle) for lang in TEMPLATE_LANGUAGES)
    responses = complete_many(client, response_requests)

    for problem in problems:
        pid = str(problem["problem_id"])
        if pid in result.failures:
            log.warning("skipping %s: %s", pid, result.failures[pid])
            continue
        templates = {}
        for lang in TEMPLATE_LANGUAGES:
            text = responses.get(f"{pid}/{lang}")
            if isinstance(text, ChatError):
                result.failures[f"{pid}/{lang}"] = f"response request failed: {text}"
            elif text is not None:
                templates[lang] = TemplatePair(instructions[pid], text)
        for solution in problem.get("solutions", ()):
            sid = str(solution.get("id"))
            language, dialect = normalize_language(solution.get("language", ""))
            if language not in templates:
                result.failures.setdefault(sid, f"no template for language {solution.get('language')!r}")
                continue
            try:
                instruction, response = instantiate(
                    templates[language], DISPLAY_NAMES[dialect or language], solution["code"]
                )
            except (TemplateError, KeyError) as exc:
                result.failures[sid] = f"instantiation failed: {exc}"
                continue
            result.rows.append({"id": sid, "problem_id": pid, "instruction": instruction,
                                "response": response, "language": language, "source": "codenet"})
    result.rows.sort(key=lambda r: r["id"])
    return result


__all__ = [
    "AuthError",
    "AugmentResult",
    "ChatClient",
    "ChatError",
    "EndpointConfig",
    "EmptyInput",
    "MalformedResponse",
    "MissingToken",
    "PromptBundle",
    "RateLimited",
    "TemplateError",
    "TemplatePair",
    "Timeout",
    "augment",
    "build_instruction_prompt",
    "build_response_prompt",
    "chat_complete",
    "complete_many",
    "dry_run_bundles",
    "instantiate",
]
