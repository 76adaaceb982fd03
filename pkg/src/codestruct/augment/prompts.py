"""Prompt assembly for turning CodeNet problems into instruction/response pairs."""

from __future__ import annotations

import re
from dataclasses import dataclass

SYSTEM_PROMPT = (
    "You are a helpful assistant that will assist in creating a new code-based benchmark dataset. "
    "When responding, you only provide exactly what is requested, with no additional text."
)

# original spelling kept: these strings must match the prompts used for the released data
INSTRUCTION_PROMPT = (
    "I am augmenting the Project CodeNet (by IBM) dataset, converting it into an instruction / response "
    "dataset that can be used for supervised finetuning, and I need assistance.\n"
    "The current problem statements are provided in HTML, and I need you to convert them into a natrual "
    "language prompt instruction that I can use to ask models to generate code.\n"
    "The instruction must be programming language agnostic, but you must provide a <language> token in the "
    "instruction, that I can replace with the programming language that must be used.\n"
    "It is vital that the requested specifications are exactly the same as the original.\n"
    "Only provide the instruction exactly as it should be used in the dataset. "
    "Here is the original HTML problem statement:\n"
    "{html}"
)

RESPONSE_PROMPT = (
    "I am augmenting the Project CodeNet (by IBM) dataset, converting it into an instruction / response "
    "dataset that can be used for supervised finetuning, and I need assistance.\n"
    "The solutions are currently provided as just raw code, and I need your help to turn them into readable "
    "and useful model responses that can be used for training.\n"
    "I need you to provide a template for a response that would read naturally to a user, you should add the "
    "surrounding text that LLMs typically provide, reading as if it is a real response from an LLM solving "
    "the task. Do not include specifics of the code, approach or algorithm though - you have not seen the "
    "code yet, so it might not be accurate.\n"
    "The response should be language agnostic (do not use those words though), but must contain a "
    "<language> token, that I can replace with the programming language that is used.\n"
    "You must also provide a <code> token that I will replace with the code block of the response, there is "
    "no need for a corresponding </code>.\n"
    "The <code> token must be surrounded by newlines, but I will handle correctly having the code itself "
    "contained within triple backticks (as per markdown).\n"
    "Only provide the response template exactly as it should be used in the dataset.\n"
    "Here is the instruction:\n"
    "{instruction}"
)

LANGUAGE_TOKEN = "<language>"
CODE_TOKEN = "<code>"

DISPLAY_NAMES = {
    "python": "Python",
    "javascript": "JavaScript",
    "typescript": "TypeScript",
    "java": "Java",
}


class EmptyInput(ValueError):
    pass


class TemplateError(ValueError):
    pass


class MissingToken(TemplateError):
    pass


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str

    def messages(self) -> list[dict[str, str]]:
        return [{"role": "system", "content": self.system}, {"role": "user", "content": self.user}]


@dataclass(frozen=True)
class TemplatePair:
    instruction_template: str
    response_template: str

    def validate(self) -> None:
        if LANGUAGE_TOKEN not in self.instruction_template:
            raise MissingToken(f"instruction template lacks {LANGUAGE_TOKEN}")
        if LANGUAGE_TOKEN not in self.response_template:
            raise MissingToken(f"response template lacks {LANGUAGE_TOKEN}")
        n = self.response_template.count(CODE_TOKEN)
        if n == 0:
            raise MissingToken(f"response template lacks {CODE_TOKEN}")
        if n > 1:
            raise TemplateError(f"response template has {n} {CODE_TOKEN} tokens")
        if f"\n{CODE_TOKEN}\n" not in self.response_template:
            raise TemplateError(f"{CODE_TOKEN} must have a newline immediately before and after it")


def build_instruction_prompt(html: str) -> PromptBundle:
    if not html or not html.strip():
        raise EmptyInput("empty HTML problem statement")
    return PromptBundle(SYSTEM_PROMPT, INSTRUCTION_PROMPT.replace("{html}", html, 1))


def build_response_prompt(instruction: str) -> PromptBundle:
    if not instruction or not instruction.strip():
        raise EmptyInput("empty instruction")
    return PromptBundle(SYSTEM_PROMPT, RESPONSE_PROMPT.replace("{instruction}", instruction, 1))


def fence_for(code: str) -> str:
    """Shortest backtick fence (at least three) that cannot be closed from inside ``code``."""
    longest = max((len(run) for run in re.findall(r"`+", code)), default=0)
    return "`" * max(3, longest + 1)


def instantiate(template_pair: TemplatePair, language_name: str, code: str) -> tuple[str, str]:
    """Fill both templates; the code lands in a fenced block tagged with the lowercased language."""
    template_pair.validate()
    fence = fence_for(code)
    block = f"{fence}{language_name.lower()}\n{code}\n{fence}"
    instruction = template_pair.instruction_template.replace(LANGUAGE_TOKEN, language_name)
    before, after = template_pair.response_template.split(CODE_TOKEN)
    response = before.replace(LANGUAGE_TOKEN, language_name) + block + after.replace(LANGUAGE_TOKEN, language_name)
    return instruction, response
