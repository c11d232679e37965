"""Tokenizer shared by the annotator, the knowledge loaders, and the grammar.

Every surface string in the system (grammar terminals, lexicon terms,
documents, query constraints) goes through the same tokenizer so that
matching is always token-wise and case-insensitive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# Word characters, decimal numbers, the operators "/<>" kept as tokens,
# and "-" kept only between digits (range expressions like "1-5").
_TOKEN_RE = re.compile(r"\d+(?:\.\d+)?|[^\W\d_]+|[/<>]|(?<=\d)-(?=\d)")


@dataclass(frozen=True)
class Token:
    surface: str
    norm: str
    char_start: int
    char_end: int
    index: int


def tokenize(text: str) -> list[Token]:
    """Split text into tokens with exact character offsets.

    Punctuation is dropped except "/", "<", ">" (kept as tokens), "."
    inside decimals, and "-" between digits. Alpha/digit boundaries
    split, so "32mg" becomes ["32", "mg"].
    """
    out: list[Token] = []
    for i, m in enumerate(_TOKEN_RE.finditer(text)):
        s = m.group(0)
        out.append(Token(surface=s, norm=s.lower(), char_start=m.start(), char_end=m.end(), index=i))
    return out


def norm_tuple(text: str) -> tuple[str, ...]:
    """Lowercased token tuple of a surface string."""
    return tuple(t.norm for t in tokenize(text))
