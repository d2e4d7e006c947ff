"""Chat backends (OpenAI-compatible HTTP, mocks) and the caching gate."""

from __future__ import annotations

import logging
import re
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Protocol

import httpx

from ..cache import JsonDiskCache, sha256_key
from ..errors import BackendUnavailable, ConfigError, RateLimited, ReplayMiss
from . import prompts

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChatRequest:
    model: str
    system: str
    user: str
    temperature: float = 0.0
    max_tokens: int = 512

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def messages(self) -> list[dict]:
        msgs = [{"role": "system", "content": self.system}] if self.system else []
        msgs.append({"role": "user", "content": self.user})
        return msgs

    def payload(self) -> dict:
        return {
            "model": self.model,
            "messages": self.messages(),
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    def cache_key(self) -> str:
        return sha256_key(self.model, self.temperature, self.max_tokens, self.messages())


class ChatBackend(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


class HttpChatBackend:
    """POSTs ``/chat/completions`` to any OpenAI-compatible server."""

    def __init__(self, api_base: str, api_key: str | None = None, *, max_in_flight: int = 4,
                 max_retries: int = 5, backoff: float = 1.0, timeout: float = 120.0,
                 transport: httpx.BaseTransport | None = None, sleep=time.sleep):
        if not api_base:
            raise ConfigError("LLM_API_BASE is not set")
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(base_url=api_base.rstrip("/"), headers=headers,
                                    timeout=timeout, transport=transport)
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self.max_retries = max_retries
        self.backoff = backoff
        self._sleep = sleep

    def complete(self, request: ChatRequest) -> str:
        attempt = 0
        while True:
            try:
                with self._slots:
                    resp = self._client.post("/chat/completions", json=request.payload())
            except httpx.HTTPError as exc:
                raise BackendUnavailable(f"LLM request failed: {exc}") from exc
            if resp.status_code == 429:
                header = resp.headers.get("Retry-After")
                retry_after = float(header) if header and header.replace(".", "", 1).isdigit() else None
                if attempt >= self.max_retries:
                    raise RateLimited("LLM rate limit", retry_after)
                self._sleep(retry_after if retry_after is not None else self.backoff * 2 ** attempt)
                attempt += 1
                continue
            if resp.status_code >= 400:
                raise BackendUnavailable(f"LLM endpoint returned HTTP {resp.status_code}")
            try:
                return resp.json()["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendUnavailable("malformed chat completion response") from exc


class ReplayBackend:
    """Never generates; any request not already cached is a miss."""

    def complete(self, request: ChatRequest) -> str:
        raise ReplayMiss(request.cache_key(), request.user[-60:])


_QUERY_LINE = re.compile(r"^Query: (.*)$", re.M)
_SOURCE_TAG = re.compile(r" \(Source: (?:[^()]|\([^()]*\))*\)(?:; |;$)")
_EXAMPLE_TERMS = {q.casefold(): ts for q, ts in prompts.EXTRACTION_EXAMPLES}


class MockBackend:
    """Deterministic offline stand-in for a chat model.

    ``identity``: paraphrase returns the query unchanged and generation
    returns the query. ``canned``: paraphrase wraps the query in a fixed
    question and generation rewrites the supplied context as prose.

    In both modes term extraction answers the in-context examples with
    their own term lists, and otherwise reports every ``lexicon`` entry
    found in the query (longest match first, in order of appearance).
    """

    def __init__(self, mode: str = "canned", lexicon: Iterable[str] = ()):
        if mode not in ("identity", "canned"):
            raise ConfigError(f"unknown mock mode {mode!r}")
        self.mode = mode
        self.lexicon = sorted({t.strip() for t in lexicon if t.strip()}, key=lambda t: (-len(t), t.casefold()))

    def complete(self, request: ChatRequest) -> str:
        user = request.user
        if user.startswith(prompts.EXTRACTION_INSTRUCTION):
            return prompts.render_terms(self._terms(_QUERY_LINE.findall(user)[-1]))
        if user.startswith(prompts.GENERATION_INSTRUCTION):
            return self._generate(user, request.max_tokens)
        if user.startswith(prompts.PARAPHRASE_INSTRUCTION):
            query = _QUERY_LINE.findall(user)[-1]
            if self.mode == "identity":
                return query
            return f"What is known about {query.strip().rstrip('?.!')}?"
        return ""

    def _terms(self, query: str) -> list[str]:
        known = _EXAMPLE_TERMS.get(query.strip().casefold())
        if known is not None:
            return list(known)
        found = []
        taken: list[tuple[int, int]] = []
        for term in self.lexicon:
            pattern = r"(?<!\w)" + re.escape(term) + r"(?!\w)"
            for m in re.finditer(pattern, query, flags=re.I):
                if all(m.end() <= s or m.start() >= e for s, e in taken):
                    taken.append((m.start(), m.end()))
                    found.append((m.start(), query[m.start():m.end()]))
                    break
        return [t for _, t in sorted(found)]

    def _generate(self, user: str, max_tokens: int) -> str:
        sections = {}
        for block in user.split("\n\n"):
            label, sep, body = block.partition(":")
            if sep and label in ("Query", "Definitions", "Relationships"):
                sections[label] = body.strip("\n ")
        query = sections.get("Query", "")
        if self.mode == "identity":
            return query
        sentences = [query.rstrip("?.!") + "."]
        for line in sections.get("Definitions", "").splitlines():
            name, _, rest = line.partition(": ")
            for part in _SOURCE_TAG.split(rest):
                if part.strip():
                    sentences.append(f"{name}: {part.strip()}")
        center = ""
        for line in sections.get("Relationships", "").splitlines():
            if not line.startswith(" "):
                center = line.rstrip(":")
            else:
                phrase = line.strip().lstrip("∟").strip()
                sentences.append(f"{center} {phrase.replace(': ', ' ', 1)}.")
        if user.endswith(prompts.COT_SUFFIX):
            sentences.insert(0, "Rationale: the answer follows from the definitions and relationships given.")
        words = " ".join(sentences).split()
        return " ".join(words[:max_tokens])


@dataclass(frozen=True)
class Reply:
    text: str
    model: str
    key: str
    cache_hit: bool


class LLMGate:
    """Routes chat requests through an optional on-disk response cache.

    Cache records live at ``<cache_dir>/<key[:2]>/<key>.json`` and hold the
    request, the reply and a timestamp. Records are only ever added.
    """

    def __init__(self, backend: ChatBackend, model: str, cache_dir: str | Path | None = None,
                 generation_temperature: float = 1.0):
        self.backend = backend
        self.model = model
        self.cache = JsonDiskCache(cache_dir) if cache_dir else None
        self.generation_temperature = generation_temperature

    def request(self, system: str, user: str, temperature: float, max_tokens: int) -> ChatRequest:
        return ChatRequest(self.model, system, user, temperature, max_tokens)

    def is_cached(self, request: ChatRequest) -> bool:
        return self.cache is not None and request.cache_key() in self.cache

    def ask(self, request: ChatRequest) -> Reply:
        key = request.cache_key()
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return Reply(hit["reply"], request.model, key, True)
        text = self.backend.complete(request)
        if self.cache is not None:
            self.cache.put(key, {
                "request": request.payload(),
                "reply": text,
                "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            })
        return Reply(text, request.model, key, False)
