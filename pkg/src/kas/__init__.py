"""Template-driven domain search over annotated corpora."""

from .grammar import Grammar, TemplatePattern, language_of, load_grammar, validate_user_query
from .knowledge import KnowledgeModel, expand_entity, load_knowledge, terms_of
from .quantrules import (
    DosageConstraint, DosageMention, build_tables, match_dosage, match_frequency,
    match_interval, parse_amount, parse_dosage_constraint, satisfies,
)
from .tokens import Token, tokenize

__all__ = [
    "Grammar", "TemplatePattern", "language_of", "load_grammar", "validate_user_query",
    "KnowledgeModel", "expand_entity", "load_knowledge", "terms_of",
    "DosageConstraint", "DosageMention", "build_tables", "match_dosage",
    "match_frequency", "match_interval", "parse_amount", "parse_dosage_constraint",
    "satisfies", "Token", "tokenize",
]
