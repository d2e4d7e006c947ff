from .backends import ChatRequest, HttpChatBackend, LLMGate, MockBackend, ReplayBackend, Reply
from .ops import (
    PseudoDocument,
    extract_terms,
    extraction_request,
    generate_pseudo_document,
    generation_request,
    paraphrase_query,
)
from .prompts import parse_terms_response, render_terms

__all__ = [
    "ChatRequest", "HttpChatBackend", "LLMGate", "MockBackend", "ReplayBackend", "Reply",
    "PseudoDocument", "extract_terms", "extraction_request", "generate_pseudo_document",
    "generation_request", "paraphrase_query", "parse_terms_response", "render_terms",
]
