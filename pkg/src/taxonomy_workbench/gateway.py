"""Chat-completion gateway: one interface, two providers.

``HttpProvider`` speaks the common chat-completions HTTP shape (POST
``{base}/v1/chat/completions``) with retry, exponential backoff, and a hard
wall-clock deadline. ``ScriptedProvider`` replays canned responses matched by
request tag (and optional substring), so every pipeline path runs without
network access and is reproducible byte-for-byte.
"""

from __future__ import annotations

import enum
import json
import os
import threading
import time
from dataclasses import dataclass, field

import httpx

from .errors import (
    ExhaustedRetries,
    GatewayError,
    MalformedResponse,
    ParseError,
    ProviderError,
    SchemaError,
    Timeout,
)


class Role(enum.Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_tokens: int = 2048
    request_tag: str = ""

    def validate(self) -> None:
        if not self.messages:
            raise GatewayError("request has no messages")
        if self.messages[0].role is Role.ASSISTANT:
            raise GatewayError("first message must be system or user")
        for message in self.messages:
            if not message.content:
                raise GatewayError("message content must be nonempty")
        if not 0.0 <= self.temperature <= 2.0:
            raise GatewayError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_tokens <= 0:
            raise GatewayError("max_tokens must be positive")

    def text(self) -> str:
        return "\n".join(m.content for m in self.messages)


class FinishReason(enum.Enum):
    STOP = "stop"
    LENGTH = "length"
    OTHER = "other"


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: FinishReason = FinishReason.STOP
    provider_meta: dict = field(default_factory=dict)


class Provider:
    """Anything that turns a ChatRequest into a ChatResponse."""

    def complete(self, request: ChatRequest) -> ChatResponse:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Scripted provider
# ---------------------------------------------------------------------------


@dataclass
class ScriptRule:
    match_tag: str
    response: str
    match_substring: str | None = None
    remaining_uses: int | None = None  # None = unlimited


class ScriptedProvider(Provider):
    """Deterministic provider: first rule (in file order) whose tag matches,
    whose substring (if any) occurs in the request text, and which still has
    uses left. Misses raise ProviderError."""

    def __init__(self, rules: list[ScriptRule]):
        self._rules = list(rules)
        self._uses = [r.remaining_uses for r in self._rules]
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> ChatResponse:
        request.validate()
        text = request.text()
        with self._lock:
            for index, rule in enumerate(self._rules):
                if rule.match_tag != request.request_tag:
                    continue
                if rule.match_substring is not None and rule.match_substring not in text:
                    continue
                if self._uses[index] == 0:
                    continue
                if self._uses[index] is not None:
                    self._uses[index] -= 1
                return ChatResponse(content=rule.response,
                                    finish_reason=FinishReason.STOP,
                                    provider_meta={"rule_index": index})
        raise ProviderError(
            f"no script rule for tag {request.request_tag!r}", retryable=False)


def parse_script(text: str) -> list[ScriptRule]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"script is not valid JSON: {exc.msg}",
                         line=exc.lineno, column=exc.colno) from None
    if not isinstance(doc, list):
        raise SchemaError("script must be a JSON array of rule objects")
    rules: list[ScriptRule] = []
    for index, raw in enumerate(doc):
        if not isinstance(raw, dict):
            raise SchemaError(f"rules[{index}] is not an object")
        tag = raw.get("match_tag")
        response = raw.get("response")
        if not isinstance(tag, str) or not isinstance(response, str):
            raise SchemaError(f"rules[{index}]: match_tag and response must be strings")
        substring = raw.get("match_substring")
        if substring is not None and not isinstance(substring, str):
            raise SchemaError(f"rules[{index}]: match_substring must be a string or null")
        uses = raw.get("remaining_uses")
        if uses is not None and (not isinstance(uses, int) or isinstance(uses, bool) or uses < 1):
            raise SchemaError(f"rules[{index}]: remaining_uses must be a positive integer or null")
        rules.append(ScriptRule(match_tag=tag, response=response,
                                match_substring=substring, remaining_uses=uses))
    return rules


def load_script(path: str) -> ScriptedProvider:
    with open(path, encoding="utf-8") as handle:
        return ScriptedProvider(parse_script(handle.read()))


# ---------------------------------------------------------------------------
# Live HTTP provider
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_delay: float = 0.2
    max_delay: float = 4.0
    deadline: float = 60.0  # wall-clock bound across all attempts, seconds


class HttpProvider(Provider):
    def __init__(self, base_url: str, api_key: str = "",
                 policy: RetryPolicy | None = None,
                 client: httpx.Client | None = None,
                 sleep=time.sleep, clock=time.monotonic):
        self._url = base_url.rstrip("/") + "/v1/chat/completions"
        self._api_key = api_key
        self._policy = policy or RetryPolicy()
        self._client = client or httpx.Client()
        self._sleep = sleep
        self._clock = clock

    def complete(self, request: ChatRequest) -> ChatResponse:
        request.validate()
        body = {
            "model": request.model,
            "messages": [{"role": m.role.value, "content": m.content}
                         for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"

        deadline = self._clock() + self._policy.deadline
        attempt = 0
        last_failure = ""
        while True:
            remaining = deadline - self._clock()
            if remaining <= 0:
                raise Timeout(f"deadline of {self._policy.deadline}s exceeded "
                              f"after {attempt} attempts ({last_failure})")
            attempt += 1
            try:
                response = self._client.post(self._url, json=body, headers=headers,
                                             timeout=remaining)
            except httpx.TimeoutException:
                last_failure = "request timed out"
            except httpx.HTTPError as exc:
                last_failure = f"transport error: {exc.__class__.__name__}"
            else:
                status = response.status_code
                if status == 200:
                    return _parse_completion(response)
                if status == 429 or 500 <= status < 600:
                    last_failure = f"HTTP {status}"
                else:
                    raise ProviderError(f"provider returned HTTP {status}",
                                        retryable=False, status=status)
            if attempt >= self._policy.max_attempts:
                raise ExhaustedRetries(
                    f"{attempt} attempts failed; last failure: {last_failure}")
            delay = min(self._policy.base_delay * (2 ** (attempt - 1)),
                        self._policy.max_delay)
            remaining = deadline - self._clock()
            if remaining <= 0:
                raise Timeout(f"deadline of {self._policy.deadline}s exceeded "
                              f"after {attempt} attempts ({last_failure})")
            self._sleep(min(delay, remaining))


def _parse_completion(response: httpx.Response) -> ChatResponse:
    try:
        doc = response.json()
    except (json.JSONDecodeError, ValueError):
        raise MalformedResponse("provider payload is not JSON") from None
    try:
        choice = doc["choices"][0]
        content = choice["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise MalformedResponse("provider payload missing choices[0].message.content") from None
    if not isinstance(content, str):
        raise MalformedResponse("provider message content is not a string")
    raw_reason = choice.get("finish_reason")
    reason = {"stop": FinishReason.STOP, "length": FinishReason.LENGTH}.get(
        raw_reason, FinishReason.OTHER)
    meta = {"finish_reason": raw_reason}
    if isinstance(doc, dict):
        if "model" in doc:
            meta["model"] = doc["model"]
        if "usage" in doc:
            meta["usage"] = doc["usage"]
    return ChatResponse(content=content, finish_reason=reason, provider_meta=meta)


# ---------------------------------------------------------------------------
# Environment wiring
# ---------------------------------------------------------------------------

ENV_BASE_URL = "WORKBENCH_LLM_BASE_URL"
ENV_API_KEY = "WORKBENCH_LLM_API_KEY"
ENV_MODEL = "WORKBENCH_LLM_MODEL"


def provider_from_env(policy: RetryPolicy | None = None) -> HttpProvider:
    base_url = os.environ.get(ENV_BASE_URL, "")
    if not base_url:
        raise GatewayError(f"{ENV_BASE_URL} is not set; pass --script or configure a provider")
    return HttpProvider(base_url=base_url,
                        api_key=os.environ.get(ENV_API_KEY, ""),
                        policy=policy)


def model_from_env(default: str = "gpt-4") -> str:
    return os.environ.get(ENV_MODEL, default)
