"""Ontology backends: an offline snapshot store and the live UMLS REST API.

Both expose the same four raw lookups; the filtering and capping rules
live in :mod:`ontoqe.ontology.ops` so they apply identically to either.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from pathlib import Path
from typing import Protocol

import httpx

from ..cache import JsonDiskCache, sha256_key
from ..errors import BackendUnavailable, DataError, InvalidCui, MalformedJson, RateLimited
from .model import Cui, RelationLabel

log = logging.getLogger(__name__)

UMLS_API_BASE = "https://uts-ws.nlm.nih.gov/rest"


class OntologyBackend(Protocol):
    def search_exact(self, term: str) -> list[tuple[Cui, str]]: ...

    def concept_name(self, cui: Cui) -> str: ...

    def raw_definitions(self, cui: Cui) -> list[tuple[str, str]]: ...

    def raw_relations(self, cui: Cui, limit: int) -> list[tuple[Cui, str, RelationLabel]]: ...


class SnapshotBackend:
    """Concept records read from a JSON-lines snapshot file.

    Record shape::

        {"cui": "C0029118", "name": "Opportunistic Infections",
         "aliases": ["..."],
         "definitions": [{"text": "...", "source": "MSH"}],
         "relations": [{"to": "C...", "to_name": "...", "label": "PAR"}]}

    ``aliases`` is optional. Exact-match lookup compares case-folded,
    trimmed strings against the name and aliases; hits come back in file
    order.
    """

    def __init__(self, records):
        self._records: dict[Cui, dict] = {}
        self._lookup: dict[str, list[Cui]] = {}
        for rec in records:
            cui = Cui(rec["cui"])
            if cui in self._records:
                raise DataError(f"duplicate snapshot record for {cui}")
            self._records[cui] = rec
            for s in [rec["name"], *rec.get("aliases", ())]:
                hits = self._lookup.setdefault(_norm(s), [])
                if cui not in hits:
                    hits.append(cui)

    @classmethod
    def load(cls, path: str | Path) -> "SnapshotBackend":
        path = Path(path)
        records = []
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    Cui(rec["cui"])
                    rec["name"]
                except json.JSONDecodeError as exc:
                    raise MalformedJson(path, line_no, exc.msg) from None
                except (KeyError, TypeError, InvalidCui) as exc:
                    raise DataError(f"{path}:{line_no}: bad snapshot record ({exc})") from None
                records.append(rec)
        return cls(records)

    def __len__(self) -> int:
        return len(self._records)

    def records(self) -> list[dict]:
        return list(self._records.values())

    def search_exact(self, term: str) -> list[tuple[Cui, str]]:
        return [(c, self._records[c]["name"]) for c in self._lookup.get(_norm(term), ())]

    def concept_name(self, cui: Cui) -> str:
        rec = self._records.get(cui)
        return rec["name"] if rec else ""

    def raw_definitions(self, cui: Cui) -> list[tuple[str, str]]:
        rec = self._records.get(cui)
        if rec is None:
            return []
        return [(d["text"], d["source"]) for d in rec.get("definitions", ())]

    def raw_relations(self, cui: Cui, limit: int) -> list[tuple[Cui, str, RelationLabel]]:
        rec = self._records.get(cui)
        if rec is None:
            return []
        out = []
        for r in rec.get("relations", ())[:limit]:
            out.append((Cui(r["to"]), r.get("to_name", ""), RelationLabel.parse(r["label"])))
        return out


def _norm(s: str) -> str:
    return " ".join(s.split()).casefold()


class UmlsRestBackend:
    """Client for the UTS REST API (``/search``, ``/content``).

    Responses are cached on disk keyed by endpoint and request parameters
    (the API key is never part of the key). ``refresh=True`` bypasses cache
    reads but still writes.
    """

    def __init__(self, api_key: str | None, base_url: str = UMLS_API_BASE, *,
                 version: str = "current", cache_dir: str | Path | None = None,
                 refresh: bool = False, max_in_flight: int = 4, max_retries: int = 5,
                 backoff: float = 1.0, timeout: float = 30.0,
                 transport: httpx.BaseTransport | None = None, sleep=time.sleep):
        if not api_key:
            raise BackendUnavailable("UMLS_API_KEY is not set")
        self.api_key = api_key
        self.version = version
        self.cache = JsonDiskCache(cache_dir) if cache_dir else None
        self.refresh = refresh
        self.max_retries = max_retries
        self.backoff = backoff
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._client = httpx.Client(base_url=base_url, timeout=timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def _get(self, endpoint: str, params: dict) -> dict | None:
        """GET returning parsed JSON, or None for 404 (no content)."""
        key = sha256_key("umls", endpoint, sorted(params.items()))
        if self.cache is not None and not self.refresh:
            hit = self.cache.get(key)
            if hit is not None:
                return hit["body"]
        body = self._fetch(endpoint, params)
        if self.cache is not None:
            self.cache.put(key, {"endpoint": endpoint, "params": params, "body": body})
        return body

    def _fetch(self, endpoint: str, params: dict) -> dict | None:
        attempt = 0
        while True:
            try:
                with self._slots:
                    resp = self._client.get(endpoint, params={**params, "apiKey": self.api_key})
            except httpx.HTTPError as exc:
                raise BackendUnavailable(f"UMLS request to {endpoint} failed: {exc}") from exc
            if resp.status_code == 404:
                return None
            if resp.status_code == 429:
                retry_after = _retry_after(resp)
                if attempt >= self.max_retries:
                    raise RateLimited(f"UMLS rate limit on {endpoint}", retry_after)
                delay = retry_after if retry_after is not None else self.backoff * 2 ** attempt
                log.warning("UMLS rate limited; sleeping %.1fs", delay)
                self._sleep(delay)
                attempt += 1
                continue
            if resp.status_code in (401, 403):
                raise BackendUnavailable(f"UMLS authentication failed ({resp.status_code})")
            if resp.status_code >= 400:
                raise BackendUnavailable(f"UMLS {endpoint} returned HTTP {resp.status_code}")
            try:
                return resp.json()
            except ValueError as exc:
                raise BackendUnavailable(f"UMLS {endpoint} returned non-JSON body") from exc

    def search_exact(self, term: str) -> list[tuple[Cui, str]]:
        body = self._get(f"/search/{self.version}",
                         {"string": term, "searchType": "exact", "returnIdType": "concept"})
        results = ((body or {}).get("result") or {}).get("results") or []
        hits = []
        for r in results:
            ui = r.get("ui", "")
            if ui == "NONE":
                continue
            try:
                hits.append((Cui(ui), r.get("name", "")))
            except InvalidCui:
                continue
        return hits

    def concept_name(self, cui: Cui) -> str:
        body = self._get(f"/content/{self.version}/CUI/{cui}", {})
        return ((body or {}).get("result") or {}).get("name", "")

    def raw_definitions(self, cui: Cui) -> list[tuple[str, str]]:
        body = self._get(f"/content/{self.version}/CUI/{cui}/definitions", {"pageSize": 100})
        return [(d.get("value", ""), d.get("rootSource", "")) for d in (body or {}).get("result") or []]

    def raw_relations(self, cui: Cui, limit: int) -> list[tuple[Cui, str, RelationLabel]]:
        body = self._get(f"/content/{self.version}/CUI/{cui}/relations", {"pageSize": limit})
        out = []
        for r in (body or {}).get("result") or []:
            related = (r.get("relatedId") or "").rstrip("/").rsplit("/", 1)[-1]
            try:
                target = Cui(related)
            except InvalidCui:
                continue
            label = RelationLabel(r.get("relationLabel", ""), r.get("additionalRelationLabel") or None)
            out.append((target, r.get("relatedIdName", ""), label))
        return out[:limit]


def _retry_after(resp: httpx.Response) -> float | None:
    value = resp.headers.get("Retry-After")
    try:
        return float(value) if value is not None else None
    except ValueError:
        return None
