"""Deterministic identifier extraction from prose, code and context.

Follow-up alignment is lexical: a suggestion is on-topic when it names an
identifier the conversation is actually about. A token counts as a code
identifier when it looks like one (camelCase, snake_case, digits) or when it
is already known from the debugger context, so plain words like "string" do
not create accidental overlap.
"""

from __future__ import annotations

import re
from collections.abc import Iterable

TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

_CODE_SHAPE_RE = re.compile(r"(?:[a-z0-9_][A-Z])|_|[0-9]")

# Common prose words never count as anchors, even when they happen to appear
# in exception messages or rendered values.
STOPWORDS = frozenset(
    """a an and are as at be but by can could did do does during for from had has have
    how i if in is it its let me my new no not of off on one or our out over should so
    some that the their them then there these they this to too until up use var was we
    were what when where which while who why will with would yes you your""".split()
)


def tokens(text: str) -> list[str]:
    return TOKEN_RE.findall(text or "")


def looks_like_identifier(token: str) -> bool:
    """Heuristic: inner uppercase, underscore or digit marks a code token."""
    return bool(_CODE_SHAPE_RE.search(token))


def extract_identifiers(text: str, universe: frozenset[str] = frozenset()) -> tuple[str, ...]:
    """Code-identifier tokens of `text`, in first-appearance order.

    A token qualifies if it is shaped like a code identifier or appears in
    `universe` (identifiers already known from context or conversation).
    """
    seen: dict[str, None] = {}
    for tok in tokens(text):
        if tok in seen or tok.lower() in STOPWORDS:
            continue
        if looks_like_identifier(tok) or tok in universe:
            seen[tok] = None
    return tuple(seen)


def path_tokens(path: str) -> tuple[str, ...]:
    """Identifier-ish tokens of a file path, e.g. the file stem components."""
    return tuple(tokens(path))


def merge_universe(*parts: Iterable[str]) -> frozenset[str]:
    out: set[str] = set()
    for part in parts:
        out.update(part)
    return frozenset(out)
