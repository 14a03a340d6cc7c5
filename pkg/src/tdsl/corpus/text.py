"""Tokenization: lowercase, whitespace split, edge punctuation stripped,
URLs and @-mentions collapsed to sentinel tokens."""

from __future__ import annotations

import re

URL_TOKEN = "<url>"
USER_TOKEN = "<user>"

_URL_PREFIXES = ("http://", "https://", "www.")
_EDGE_PUNCT = re.compile(r"^\W+|\W+$", re.UNICODE)


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    for piece in text.split():
        lowered = piece.lower()
        if lowered.startswith(_URL_PREFIXES):
            tokens.append(URL_TOKEN)
            continue
        if piece.startswith("@") and len(piece) > 1:
            tokens.append(USER_TOKEN)
            continue
        stripped = _EDGE_PUNCT.sub("", lowered)
        if stripped:
            tokens.append(stripped)
    return tokens
