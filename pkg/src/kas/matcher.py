"""Two-step retrieval: pattern-keyed candidates, then an ordered filter chain.

Each query element contributes one filter over its class component. A filter
keeps an annotation iff the component's payload or surface satisfies the
element's predicate; the trace records the candidate count after retrieval
and after every filter. Results stay in corpus order (no ranking).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .errors import QueryError
from .index import AnnotationIndex
from .quantrules import DosageMention, Quantity, RuleTables, satisfies
from .queryproc import ParsedQuery, Translation

DEFAULT_SNIPPET_CONTEXT = 6


@dataclass(frozen=True)
class FilterSpec:
    class_name: str
    position: int
    kind: str  # pass | terms | dosage | interval | frequency
    translation: Translation

    def keeps(self, tables: RuleTables, annotation) -> bool:
        if self.kind == "pass":
            return True
        component = annotation.components[self.position]
        payload = component.payload_dict()
        t = self.translation
        if self.kind == "terms":
            return tuple(payload.get("surface", "").split(" ")) in t.term_set
        if self.kind == "dosage":
            mg = payload.get("normalized_mg")
            mention = DosageMention(
                quantity=Quantity(Fraction(payload["value"]), (), False),
                unit=payload.get("unit", ""),
                normalized_mg=Fraction(mg) if mg is not None else None,
                qualifier=payload.get("qualifier", "exact"),
                first=component.span.first, last=component.span.last,
            )
            return satisfies(tables, mention, t.dosage_constraint)
        if self.kind == "interval":
            if t.interval_units is not None and payload.get("unit") not in t.interval_units:
                return False
            if t.interval_period is not None and payload.get("period") != t.interval_period:
                return False
            return True
        if self.kind == "frequency":
            if t.frequency_units is not None and payload.get("per_unit") not in t.frequency_units:
                return False
            return True
        raise QueryError(f"unknown filter kind {self.kind!r}")


def build_filters(query: ParsedQuery) -> list[FilterSpec]:
    filters = []
    for pos, t in enumerate(query.translations):
        e = t.element
        if e.kind == "class":
            kind = "pass"
        elif t.term_set is not None:
            kind = "terms"
        elif t.rule_class == "DOSAGE":
            kind = "dosage"
        elif t.rule_class == "INTERVAL":
            kind = "interval"
        elif t.rule_class == "FREQUENCY":
            kind = "frequency"
        else:
            raise QueryError(f"cannot build a filter for {e}")
        filters.append(FilterSpec(class_name=e.class_name, position=pos, kind=kind, translation=t))
    return filters


@dataclass(frozen=True)
class SearchResult:
    doc: str
    annotation_id: str
    snippet: str
    snippet_cs: int  # offset of the snippet in the full document
    span_cs: int
    span_ce: int
    highlights: tuple[tuple[str, int, int, str], ...]  # class, cs, ce, surface
    payloads: tuple[dict, ...]


def _within_ranges(annotation, ranges: tuple[int, ...]) -> bool:
    comps = annotation.components
    for i, max_gap in enumerate(ranges):
        gap = comps[i + 1].span.first - comps[i].span.last - 1
        if not 0 <= gap <= max_gap:
            return False
    return True


def make_snippet(doc_text: str, token_offsets: list[list[int]], annotation,
                 context_tokens: int = DEFAULT_SNIPPET_CONTEXT):
    """Snippet of context_tokens tokens either side of the annotation,
    with per-component highlight ranges relative to the snippet."""
    first = max(0, annotation.span.first - context_tokens)
    last = min(len(token_offsets) - 1, annotation.span.last + context_tokens)
    cs, ce = token_offsets[first][0], token_offsets[last][1]
    snippet = doc_text[cs:ce]
    highlights = tuple(
        (c.class_name, c.span.cs - cs, c.span.ce - cs, doc_text[c.span.cs : c.span.ce])
        for c in annotation.components
    )
    return snippet, highlights, cs


def search(index: AnnotationIndex, tables: RuleTables, query: ParsedQuery,
           snippet_context: int = DEFAULT_SNIPPET_CONTEXT,
           filter_order: list[int] | None = None) -> tuple[list[SearchResult], list[int]]:
    """Execute a parsed query; returns (results, per-filter count trace).

    filter_order permutes filter application (the trace changes, the final
    set must not); it exists for order-invariance checks.
    """
    candidates = [a for a in index.lookup(query.pattern.id) if _within_ranges(a, query.ranges)]
    trace = [len(candidates)]
    filters = build_filters(query)
    order = filter_order if filter_order is not None else range(len(filters))
    for i in order:
        candidates = [a for a in candidates if filters[i].keeps(tables, a)]
        trace.append(len(candidates))

    results = []
    seen_docs: set[str] = set()
    for a in candidates:
        if query.distinct_docs:
            if a.doc in seen_docs:
                continue
            seen_docs.add(a.doc)
        doc = index.doc(a.doc)
        snippet, highlights, snippet_cs = make_snippet(doc["text"], doc["tokens"], a, snippet_context)
        results.append(SearchResult(
            doc=a.doc, annotation_id=a.id, snippet=snippet, snippet_cs=snippet_cs,
            span_cs=a.span.cs, span_ce=a.span.ce, highlights=highlights,
            payloads=tuple(c.payload_dict() for c in a.components),
        ))
        if query.limit is not None and len(results) >= query.limit:
            break
    return results, trace


# ---------------------------------------------------------------------------
# Wire format


def results_to_dict(results: list[SearchResult], trace: list[int]) -> dict:
    return {
        "trace": list(trace),
        "results": [
            {
                "doc": r.doc,
                "annotation": r.annotation_id,
                "snippet": r.snippet,
                "snippet_cs": r.snippet_cs,
                "span": {"cs": r.span_cs, "ce": r.span_ce},
                "highlights": [
                    {"class": cls, "cs": cs, "ce": ce, "surface": surface}
                    for cls, cs, ce, surface in r.highlights
                ],
                "payloads": list(r.payloads),
            }
            for r in results
        ],
    }


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def render_results(results: list[SearchResult], trace: list[int]) -> str:
    return canonical_json(results_to_dict(results, trace))
