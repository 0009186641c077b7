"""Provider-agnostic LLM gateway with record/replay and schema enforcement.

The gateway speaks an OpenAI-compatible chat-completions wire format to live
providers, can record every exchange into a content-addressed fixture store,
and can replay a recorded store byte-for-byte without any network access.
Structured outputs are validated against closed JSON schemas with bounded
retries and an optional fallback provider that re-shapes unparseable text.
"""

from __future__ import annotations

import json
import re
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field, replace
from hashlib import sha256
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import jsonschema

STAGES = ("EE", "retrieve", "CS", "PC", "SG", "verify")


class GatewayError(Exception):
    pass


class TransportError(GatewayError):
    pass


class RateLimited(TransportError):
    """Provider returned HTTP 429; safe to retry after a delay."""


class FixtureMiss(GatewayError):
    def __init__(self, digest: str):
        super().__init__(f"no recorded fixture for request digest {digest}")
        self.digest = digest


class SchemaValidationExhausted(GatewayError):
    """All structured-output attempts failed validation."""

    def __init__(self, attempts: Sequence["Attempt"]):
        last = attempts[-1].error if attempts else "no attempts made"
        super().__init__(f"schema validation failed after {len(attempts)} attempts: {last}")
        self.attempts = tuple(attempts)


@dataclass(frozen=True)
class DecodingConfig:
    temperature: float | None = None
    top_p: float | None = None
    max_output_tokens: int = 2048
    seed: int | None = None

    def __post_init__(self):
        if self.temperature is not None and not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be at least 1")


@dataclass(frozen=True)
class PromptBundle:
    """One request: system prompt, user prompt, optional output-schema handle."""

    system: str
    user: str
    schema_id: str | None = None
    decoding: DecodingConfig = field(default_factory=DecodingConfig)

    def __post_init__(self):
        if not self.system.strip():
            raise ValueError("system prompt must be non-empty")
        if self.schema_id and self.schema_id not in self.system:
            raise ValueError(
                f"system prompt's output-format section must reference schema {self.schema_id!r}"
            )


@dataclass(frozen=True)
class TokenUsage:
    input_tokens: int = 0
    output_tokens: int = 0
    total_tokens: int = 0
    estimated: bool = False

    def __post_init__(self):
        if min(self.input_tokens, self.output_tokens, self.total_tokens) < 0:
            raise ValueError("token counts must be non-negative")
        if self.total_tokens < max(self.input_tokens, self.output_tokens):
            raise ValueError("total_tokens may not be below either component")

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.input_tokens + other.input_tokens,
            self.output_tokens + other.output_tokens,
            self.total_tokens + other.total_tokens,
            self.estimated or other.estimated,
        )


@dataclass(frozen=True)
class Completion:
    text: str
    usage: TokenUsage
    provider: str
    latency: float = 0.0


_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def estimate_tokens(text: str) -> int:
    """Crude whitespace/punctuation token count, used when the wire omits usage."""
    return len(_TOKEN_RE.findall(text))


def replay_key(provider: str, bundle: PromptBundle) -> str:
    """Content digest of everything that influences a provider response."""
    blob = json.dumps(
        {
            "provider": provider,
            "system": bundle.system,
            "user": bundle.user,
            "schema_id": bundle.schema_id,
            "decoding": {
                "temperature": bundle.decoding.temperature,
                "top_p": bundle.decoding.top_p,
                "max_output_tokens": bundle.decoding.max_output_tokens,
                "seed": bundle.decoding.seed,
            },
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return sha256(blob.encode()).hexdigest()


class FixtureStore:
    """One JSON file per request digest; safe for concurrent writers."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()

    def _path(self, digest: str) -> Path:
        return self.root / f"{digest}.json"

    def record(self, provider: str, bundle: PromptBundle, completion: Completion) -> str:
        digest = replay_key(provider, bundle)
        doc = {
            "digest": digest,
            "request": {
                "provider": provider,
                "system": bundle.system,
                "user": bundle.user,
                "schema_id": bundle.schema_id,
            },
            "response": {
                "text": completion.text,
                "provider": completion.provider,
                "latency": completion.latency,
                "usage": {
                    "input_tokens": completion.usage.input_tokens,
                    "output_tokens": completion.usage.output_tokens,
                    "total_tokens": completion.usage.total_tokens,
                    "estimated": completion.usage.estimated,
                },
            },
        }
        with self._lock:
            self.root.mkdir(parents=True, exist_ok=True)
            self._path(digest).write_text(json.dumps(doc, indent=2, sort_keys=True))
        return digest

    def lookup(self, provider: str, bundle: PromptBundle) -> Completion:
        digest = replay_key(provider, bundle)
        path = self._path(digest)
        if not path.exists():
            raise FixtureMiss(digest)
        doc = json.loads(path.read_text())
        resp = doc["response"]
        u = resp["usage"]
        return Completion(
            text=resp["text"],
            usage=TokenUsage(
                u["input_tokens"], u["output_tokens"], u["total_tokens"], u["estimated"]
            ),
            provider=resp["provider"],
            latency=resp["latency"],
        )

    def __len__(self) -> int:
        return len(list(self.root.glob("*.json"))) if self.root.exists() else 0


class Provider(Protocol):
    id: str

    def complete(self, bundle: PromptBundle) -> Completion: ...


@dataclass
class ReplayProvider:
    """Serves responses exclusively from a fixture store."""

    id: str
    store: FixtureStore

    def complete(self, bundle: PromptBundle) -> Completion:
        return self.store.lookup(self.id, bundle)


class ScriptedProvider:
    """Returns a fixed sequence of texts; used to author fixtures and tests."""

    def __init__(self, id: str, responses: Sequence[str]):
        self.id = id
        self._responses = list(responses)
        self.calls: list[PromptBundle] = []

    def complete(self, bundle: PromptBundle) -> Completion:
        self.calls.append(bundle)
        if not self._responses:
            raise TransportError(f"scripted provider {self.id} ran out of responses")
        text = self._responses.pop(0)
        usage = TokenUsage(
            input_tokens=estimate_tokens(bundle.system) + estimate_tokens(bundle.user),
            output_tokens=estimate_tokens(text),
            total_tokens=estimate_tokens(bundle.system)
            + estimate_tokens(bundle.user)
            + estimate_tokens(text),
            estimated=True,
        )
        return Completion(text=text, usage=usage, provider=self.id)


@dataclass
class HttpProvider:
    """OpenAI-compatible chat-completions client over HTTPS."""

    id: str
    base_url: str
    api_key: str = ""
    model: str | None = None
    timeout: float = 120.0

    def complete(self, bundle: PromptBundle) -> Completion:
        body: dict = {
            "model": self.model or self.id,
            "messages": [
                {"role": "system", "content": bundle.system},
                {"role": "user", "content": bundle.user},
            ],
            "max_tokens": bundle.decoding.max_output_tokens,
        }
        if bundle.decoding.temperature is not None:
            body["temperature"] = bundle.decoding.temperature
        if bundle.decoding.top_p is not None:
            body["top_p"] = bundle.decoding.top_p
        if bundle.decoding.seed is not None:
            body["seed"] = bundle.decoding.seed
        req = urllib.request.Request(
            self.base_url.rstrip("/") + "/chat/completions",
            data=json.dumps(body).encode(),
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self.api_key}",
            },
        )
        start = time.monotonic()
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read())
        except urllib.error.HTTPError as e:
            if e.code == 429:
                raise RateLimited(f"{self.id}: rate limited") from e
            raise TransportError(f"{self.id}: HTTP {e.code}") from e
        except urllib.error.URLError as e:
            raise TransportError(f"{self.id}: {e.reason}") from e
        latency = time.monotonic() - start

        text = payload["choices"][0]["message"]["content"]
        wire = payload.get("usage") or {}
        if wire:
            usage = TokenUsage(
                input_tokens=int(wire.get("prompt_tokens", 0)),
                output_tokens=int(wire.get("completion_tokens", 0)),
                total_tokens=int(
                    wire.get(
                        "total_tokens",
                        wire.get("prompt_tokens", 0) + wire.get("completion_tokens", 0),
                    )
                ),
            )
        else:
            n_in = estimate_tokens(bundle.system) + estimate_tokens(bundle.user)
            n_out = estimate_tokens(text)
            usage = TokenUsage(n_in, n_out, n_in + n_out, estimated=True)
        return Completion(text=text, usage=usage, provider=self.id, latency=latency)


class UsageLedger:
    """Exact per-stage token totals, updated under a lock."""

    def __init__(self):
        self._lock = threading.Lock()
        self._stages: dict[str, TokenUsage] = {s: TokenUsage() for s in STAGES}

    def accumulate(self, stage: str, usage: TokenUsage) -> None:
        if stage not in self._stages:
            raise ValueError(f"unknown stage {stage!r}; expected one of {STAGES}")
        with self._lock:
            self._stages[stage] = self._stages[stage] + usage

    def stage(self, stage: str) -> TokenUsage:
        return self._stages[stage]

    def total(self) -> TokenUsage:
        out = TokenUsage()
        for u in self._stages.values():
            out = out + u
        return out

    def as_dict(self) -> dict[str, dict[str, int]]:
        return {
            s: {
                "input_tokens": u.input_tokens,
                "output_tokens": u.output_tokens,
                "total_tokens": u.total_tokens,
            }
            for s, u in self._stages.items()
        }


@dataclass(frozen=True)
class RetryPolicy:
    max_retries: int = 3
    fallback_provider: str | None = None


@dataclass(frozen=True)
class Attempt:
    provider: str
    text: str
    error: str | None  # None when this attempt validated


@dataclass(frozen=True)
class StructuredResult:
    value: object
    attempt_count: int
    providers: tuple[str, ...]  # every provider consulted, in order
    attempts: tuple[Attempt, ...]
    usage: TokenUsage


_FENCE_RE = re.compile(r"^```(?:json)?\s*(.*?)\s*```\s*$", re.DOTALL)


def extract_json(text: str) -> object:
    """Parse a JSON payload, tolerating a surrounding markdown code fence."""
    stripped = text.strip()
    fenced = _FENCE_RE.match(stripped)
    if fenced:
        stripped = fenced.group(1)
    return json.loads(stripped)


class Gateway:
    """Dispatches prompt bundles to named providers with optional recording."""

    def __init__(
        self,
        providers: Mapping[str, Provider],
        record_store: FixtureStore | None = None,
        ledger: UsageLedger | None = None,
    ):
        self.providers = dict(providers)
        self.record_store = record_store
        self.ledger = ledger or UsageLedger()

    def complete(self, provider_id: str, bundle: PromptBundle, stage: str | None = None) -> Completion:
        provider = self.providers[provider_id]
        completion = provider.complete(bundle)
        if self.record_store is not None and not isinstance(provider, ReplayProvider):
            self.record_store.record(provider_id, bundle, completion)
        if stage is not None:
            self.ledger.accumulate(stage, completion.usage)
        return completion

    def complete_structured(
        self,
        provider_id: str,
        bundle: PromptBundle,
        schema: Mapping,
        policy: RetryPolicy | None = None,
        stage: str | None = None,
    ) -> StructuredResult:
        policy = policy or RetryPolicy()
        if schema.get("type") == "object" and schema.get("additionalProperties") is not False:
            raise ValueError("structured output requires a closed object schema")

        attempts: list[Attempt] = []
        providers: list[str] = []
        usage = TokenUsage()
        current = bundle
        for _ in range(max(policy.max_retries, 1)):
            completion = self.complete(provider_id, current, stage=stage)
            providers.append(provider_id)
            usage = usage + completion.usage
            value, err = _validate(completion.text, schema)
            attempts.append(Attempt(provider_id, completion.text, err))
            if err is None:
                return StructuredResult(
                    value, len(attempts), tuple(providers), tuple(attempts), usage
                )
            # feed the validation error back so the model can correct itself
            current = replace(
                bundle,
                user=bundle.user
                + f"\n\nYour previous reply was rejected: {err}\n"
                + "Reply again with only the corrected JSON.",
            )

        if policy.fallback_provider is not None:
            reshape = PromptBundle(
                system=(
                    "You repair malformed structured output. "
                    "Reply with only a JSON document that satisfies the schema "
                    + (bundle.schema_id or "provided")
                    + "."
                ),
                user="Schema:\n"
                + json.dumps(dict(schema), indent=2)
                + "\n\nMalformed output:\n"
                + attempts[-1].text,
                schema_id=bundle.schema_id,
                decoding=bundle.decoding,
            )
            completion = self.complete(policy.fallback_provider, reshape, stage=stage)
            providers.append(policy.fallback_provider)
            usage = usage + completion.usage
            value, err = _validate(completion.text, schema)
            attempts.append(Attempt(policy.fallback_provider, completion.text, err))
            if err is None:
                return StructuredResult(
                    value, len(attempts), tuple(providers), tuple(attempts), usage
                )

        raise SchemaValidationExhausted(attempts)


def _validate(text: str, schema: Mapping) -> tuple[object, str | None]:
    try:
        value = extract_json(text)
    except json.JSONDecodeError as e:
        return None, f"not valid JSON: {e}"
    try:
        jsonschema.validate(value, dict(schema))
    except jsonschema.ValidationError as e:
        return None, f"schema violation at {list(e.absolute_path)}: {e.message}"
    return value, None
