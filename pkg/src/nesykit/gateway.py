"""Prompt templates and chat-completion endpoints.

Templates are plain text files with ``{placeholder}`` slots; only the known
placeholder names are substituted, so regex metacharacters and stray braces
in problem text pass through untouched. Endpoints expose one method,
``complete(prompt)``, returning the response text plus token usage; the
HTTP implementation targets OpenAI-compatible chat-completion APIs and the
offline stubs (see ``nesykit.stub``) share the same interface.
"""

from __future__ import annotations

import json
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import requests

TEMPLATE_NAMES = (
    "normal",
    "cot",
    "one_shot_cot",
    "bottom_up",
    "top_down",
    "magic_set",
    "small_model_translate",
    "small_model_repair",
)

PLACEHOLDER_NAMES = ("question", "query", "examples", "problem_nl", "previous_translation")

_PLACEHOLDER_RE = re.compile(r"\{(%s)\}" % "|".join(PLACEHOLDER_NAMES))

TRANSLATE_MARKER = "Simplified Logic Format:"
REPAIR_MARKER = "Corrected Simplified Logic Format:"


class EndpointError(RuntimeError):
    """The endpoint could not produce a response (after retries)."""


# ---------------------------------------------------------------------------
# Templates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PromptTemplate:
    """A named prompt with ``{placeholder}`` slots."""

    name: str
    text: str

    @property
    def placeholders(self) -> frozenset[str]:
        return frozenset(_PLACEHOLDER_RE.findall(self.text))

    def render(self, **values: str) -> str:
        """Substitute placeholder values; every slot in the text must be given.

        Only known placeholder names are touched, so arbitrary ``{...}``
        text in the values or template survives verbatim. Surplus values
        are ignored, letting callers pass one value dict to any template.
        """
        missing = sorted(self.placeholders - set(values))
        if missing:
            raise ValueError(f"template {self.name!r} missing values for: {missing}")
        return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], self.text)


def bundled_prompt_dir() -> Path:
    return Path(__file__).parent / "assets" / "prompts"


def load_template(name: str, path: str | Path | None = None) -> PromptTemplate:
    """Load a prompt template by bundled name, or from an explicit file."""
    if path is None:
        if name not in TEMPLATE_NAMES:
            raise ValueError(f"unknown template {name!r}; bundled: {TEMPLATE_NAMES}")
        path = bundled_prompt_dir() / f"{name}.txt"
    text = Path(path).read_text(encoding="utf-8").rstrip("\n")
    return PromptTemplate(name=name, text=text)


def bundled_examples_path() -> Path:
    return Path(__file__).parent / "assets" / "examples" / "translation_examples.txt"


def load_examples(path: str | Path | None = None, count: int | None = None) -> str:
    """Load worked translation examples, optionally truncated to ``count``.

    The file holds blocks that each start with a ``Natural Language:``
    line; the one-example condition uses ``count=1``.
    """
    if path is None:
        path = bundled_examples_path()
    text = Path(path).read_text(encoding="utf-8")
    marker = "Natural Language:"
    pieces = text.split(marker)
    blocks = [marker + piece.strip() for piece in pieces[1:] if piece.strip()]
    if not blocks:
        raise ValueError(f"{path}: no '{marker}' blocks found")
    if count is not None:
        if not 1 <= count <= len(blocks):
            raise ValueError(f"asked for {count} examples, file has {len(blocks)}")
        blocks = blocks[:count]
    return "\n\n".join(blocks)


# ---------------------------------------------------------------------------
# Usage and responses
# ---------------------------------------------------------------------------


def estimate_tokens(text: str) -> int:
    """Crude token estimate (4/3 of whitespace words) for endpoints that
    report no usage; flagged as an estimate wherever it is recorded."""
    words = len(text.split())
    return math.ceil(words * 4 / 3)


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int
    completion_tokens: int
    estimated: bool = False

    def to_json(self) -> dict:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "estimated": self.estimated,
        }


@dataclass(frozen=True)
class ChatResponse:
    text: str
    usage: Usage


class Endpoint(Protocol):
    def complete(self, prompt: str) -> ChatResponse: ...


# ---------------------------------------------------------------------------
# HTTP endpoint
# ---------------------------------------------------------------------------

_RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


@dataclass
class HttpEndpoint:
    """OpenAI-compatible chat-completion client with bounded retries.

    Connection errors, timeouts, and retryable HTTP statuses back off
    exponentially; anything else raises ``EndpointError`` immediately. A
    response with no usage block gets estimated token counts. A blank
    completion is returned as-is: the caller records it and scores the
    attempt, it is not an error.
    """

    url: str
    model: str
    api_key: str | None = None
    temperature: float = 0.0
    max_tokens: int | None = None
    timeout: float = 120.0
    retries: int = 3
    backoff: float = 1.0
    extra_headers: dict[str, str] = field(default_factory=dict)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        headers.update(self.extra_headers)
        return headers

    def complete(self, prompt: str) -> ChatResponse:
        payload: dict = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        if self.max_tokens is not None:
            payload["max_tokens"] = self.max_tokens

        last_error: str = "no attempts made"
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                response = requests.post(
                    self.url, json=payload, headers=self._headers(), timeout=self.timeout
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                continue
            if response.status_code in _RETRYABLE_STATUS:
                last_error = f"HTTP {response.status_code}"
                continue
            if response.status_code != 200:
                raise EndpointError(
                    f"{self.url}: HTTP {response.status_code}: {response.text[:500]}"
                )
            return self._parse(prompt, response)
        raise EndpointError(f"{self.url}: giving up after {self.retries + 1} attempts ({last_error})")

    def _parse(self, prompt: str, response: requests.Response) -> ChatResponse:
        try:
            data = response.json()
        except json.JSONDecodeError as exc:
            raise EndpointError(f"{self.url}: malformed JSON response: {exc}") from None
        try:
            choice = data["choices"][0]
            text = choice.get("message", {}).get("content")
            if text is None:
                text = choice.get("text")
        except (KeyError, IndexError, TypeError):
            raise EndpointError(f"{self.url}: response has no choices") from None
        if text is None:
            text = ""

        usage = data.get("usage") or {}
        prompt_tokens = usage.get("prompt_tokens")
        completion_tokens = usage.get("completion_tokens")
        if prompt_tokens is None or completion_tokens is None:
            return ChatResponse(
                text=text,
                usage=Usage(
                    prompt_tokens=estimate_tokens(prompt),
                    completion_tokens=estimate_tokens(text),
                    estimated=True,
                ),
            )
        return ChatResponse(
            text=text,
            usage=Usage(int(prompt_tokens), int(completion_tokens), estimated=False),
        )


# ---------------------------------------------------------------------------
# Endpoint factory
# ---------------------------------------------------------------------------


def make_endpoint(spec: str, *, problems=None, api_key: str | None = None, model: str = "", **kwargs):
    """Build an endpoint from a spec string.

    ``stub:...`` specs build offline deterministic endpoints (see
    ``nesykit.stub`` for the syntax); anything starting with http(s) is an
    OpenAI-compatible chat-completion URL. ``problems`` gives replay stubs
    access to golden chains and is ignored by everything else.
    """
    if spec.startswith("stub:"):
        from .stub import make_stub

        return make_stub(spec, problems=problems)
    if spec.startswith(("http://", "https://")):
        if not model:
            raise ValueError("HTTP endpoints need a model name")
        return HttpEndpoint(url=spec, model=model, api_key=api_key, **kwargs)
    raise ValueError(f"unrecognized endpoint spec {spec!r} (expected stub:... or an URL)")
