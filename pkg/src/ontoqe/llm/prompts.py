"""Prompt templates and reply parsing for the three LLM tasks."""

from __future__ import annotations

import re

from ..errors import ParseFailure

EXTRACTION_SYSTEM = "You are a biomedical information retrieval assistant."

EXTRACTION_INSTRUCTION = (
    "Your task: Extract key medical terms from the query. "
    "If the query lacks significant medical terms, return an empty list."
)

# (query, terms) pairs shown to the model before the real query.
EXTRACTION_EXAMPLES = (
    ("Dietary Treatment of Crohn's Disease", ("Dietary Treatment", "Crohn's Disease")),
    ("Neurobiology of Artificial Sweeteners", ("Neurobiology", "Artificial Sweeteners")),
    ("Boosting Good Bacteria in the Colon Without Probiotics", ("Good Bacteria", "Probiotics")),
    ("Veggies vs. Cancer", ("Cancer",)),
    ("Native Americans", ()),
)

FORMAT_SUFFIX = "Strictly follow the output format.\nOutput format:\nTerms: [term1, term2, ...]"

GENERATION_INSTRUCTION = (
    "Given a query, relevant medical definitions and relationships; write an answer to the query."
)
COT_SUFFIX = "Give the rationale before answering"

PARAPHRASE_INSTRUCTION = "Paraphrase the following query."
PARAPHRASE_ANSWER_LABEL = "Paraphrased query:"


def render_terms(terms) -> str:
    return "Terms: [" + ", ".join(terms) + "]"


def render_extraction_prompt(query: str, retry: bool = False) -> str:
    blocks = [EXTRACTION_INSTRUCTION]
    blocks += [f"Query: {q}\n{render_terms(ts)}" for q, ts in EXTRACTION_EXAMPLES]
    blocks.append(FORMAT_SUFFIX)
    blocks.append(f"Query: {query}\nTerms:")
    if retry:
        blocks.append(FORMAT_SUFFIX)
    return "\n\n".join(blocks)


def render_generation_prompt(query: str, definitions: str, relationships: str, cot: bool = False) -> str:
    prompt = (
        f"{GENERATION_INSTRUCTION}\n\n"
        f"Query: {query}\n\n"
        f"Definitions: {definitions}\n\n"
        f"Relationships: {relationships}"
    )
    if cot:
        prompt += f"\n\n{COT_SUFFIX}"
    return prompt


def render_paraphrase_prompt(query: str) -> str:
    return f"{PARAPHRASE_INSTRUCTION}\nQuery: {query}\n{PARAPHRASE_ANSWER_LABEL}"


_TERMS_LINE = re.compile(r"^\s*Terms:\s*\[(.*)\]\s*$")
_ANY_LIST = re.compile(r"\[([^\[\]]*)\]")


def parse_terms_response(reply: str) -> list[str]:
    """Pull the term list out of a model reply.

    The last ``Terms: [...]`` line wins; failing that, the last bracketed
    list anywhere in the reply. Raises ParseFailure when there is none.
    """
    interior = None
    for line in reply.splitlines():
        m = _TERMS_LINE.match(line)
        if m:
            interior = m.group(1)
    if interior is None:
        lists = _ANY_LIST.findall(reply)
        if not lists:
            raise ParseFailure(f"no term list in reply: {reply[:80]!r}")
        interior = lists[-1]
    return [t.strip() for t in interior.split(",") if t.strip()]


def parse_paraphrase_response(reply: str) -> str:
    for line in reply.splitlines():
        line = line.strip()
        if line.startswith(PARAPHRASE_ANSWER_LABEL):
            line = line[len(PARAPHRASE_ANSWER_LABEL):].strip()
        if line:
            return line
    return ""
