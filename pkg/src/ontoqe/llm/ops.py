"""The three LLM-backed operations: term extraction, generation, paraphrase."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from ..context import SerializedContext
from ..errors import EmptyGeneration, ParseFailure
from . import prompts
from .backends import LLMGate

log = logging.getLogger(__name__)

EXTRACTION_TEMPERATURE = 0.0
EXTRACTION_MAX_TOKENS = 256
GENERATION_MAX_TOKENS = 512
PARAPHRASE_TEMPERATURE = 0.0
PARAPHRASE_MAX_TOKENS = 128


@dataclass(frozen=True)
class PseudoDocument:
    text: str
    model: str
    prompt_hash: str
    cache_hit: bool


def extraction_request(query: str, gate: LLMGate, retry: bool = False):
    return gate.request(prompts.EXTRACTION_SYSTEM, prompts.render_extraction_prompt(query, retry=retry),
                        EXTRACTION_TEMPERATURE, EXTRACTION_MAX_TOKENS)


def extract_terms(query: str, gate: LLMGate) -> list[str]:
    """Ask the model for the medical terms in ``query``.

    An unparseable reply is retried once with the format instructions
    repeated at the end; a second failure yields no terms.
    """
    if not query.strip():
        raise ValueError("query must be non-empty")
    reply = gate.ask(extraction_request(query, gate))
    try:
        return prompts.parse_terms_response(reply.text)
    except ParseFailure:
        pass
    reply = gate.ask(extraction_request(query, gate, retry=True))
    try:
        return prompts.parse_terms_response(reply.text)
    except ParseFailure:
        log.warning("term extraction unparseable twice for %r; using no terms", query)
        return []


def generation_request(query: str, context: SerializedContext, gate: LLMGate, cot: bool = False):
    user = prompts.render_generation_prompt(query, context.definitions_text, context.relations_text, cot=cot)
    return gate.request("", user, gate.generation_temperature, GENERATION_MAX_TOKENS)


def generate_pseudo_document(query: str, context: SerializedContext, gate: LLMGate,
                             cot: bool = False) -> PseudoDocument:
    reply = gate.ask(generation_request(query, context, gate, cot=cot))
    if not reply.text.strip():
        raise EmptyGeneration(f"empty generation for query {query!r}")
    return PseudoDocument(reply.text, reply.model, reply.key, reply.cache_hit)


def paraphrase_query(query: str, gate: LLMGate) -> str:
    if not query.strip():
        raise ValueError("query must be non-empty")
    request = gate.request("", prompts.render_paraphrase_prompt(query),
                           PARAPHRASE_TEMPERATURE, PARAPHRASE_MAX_TOKENS)
    text = prompts.parse_paraphrase_response(gate.ask(request).text)
    if not text:
        raise EmptyGeneration(f"empty paraphrase for query {query!r}")
    return text
