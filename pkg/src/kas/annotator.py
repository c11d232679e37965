"""Offline semantic metadata extraction.

Documents are tokenized once, then each registered pattern's match plan is
evaluated as a small view algebra: gazetteer matches and rule matches build
per-class base views, token-window joins chain them in pattern order, and
consolidation drops spans contained in larger ones. Surviving rows become
annotations carrying semantic payloads (concept id, normalized dosage,
interval unit, polarity subcategory).

Per-document evaluation is pure and independent, so output is deterministic
and byte-identical regardless of worker count.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .errors import KasError
from .quantrules import match_dosage, match_frequency, match_interval, satisfies
from .queryproc import MatchPlan, SlotMatcher
from .tokens import Token, tokenize

log = logging.getLogger(__name__)

Payload = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class Span:
    doc: str
    first: int
    last: int
    cs: int
    ce: int


@dataclass(frozen=True)
class Component:
    class_name: str
    span: Span
    payload: Payload

    def payload_dict(self) -> dict[str, str]:
        return dict(self.payload)


@dataclass(frozen=True)
class Row:
    span: Span
    components: tuple[Component, ...]

    def sort_key(self):
        return (self.span.doc, self.span.first, self.span.last,
                tuple((c.span.first, c.span.last, c.payload) for c in self.components))


@dataclass
class View:
    name: str
    schema: tuple[str, ...]
    rows: list[Row]

    def sorted(self) -> "View":
        return View(self.name, self.schema, sorted(set(self.rows), key=Row.sort_key))


@dataclass(frozen=True)
class Annotation:
    id: str
    pattern: str
    doc: str
    span: Span
    components: tuple[Component, ...]


def _payload(**kwargs) -> Payload:
    out = []
    for k, v in kwargs.items():
        if v is None:
            continue
        out.append((k, str(v)))
    return tuple(sorted(out))


def _span(doc: str, tokens: list[Token], first: int, last: int) -> Span:
    return Span(doc=doc, first=first, last=last,
                cs=tokens[first].char_start, ce=tokens[last].char_end)


# ---------------------------------------------------------------------------
# Algebra operators


def gazetteer_match(name: str, terms, tokens: list[Token], doc: str = "") -> View:
    """All occurrences of the given token sequences, overlaps included."""
    if isinstance(terms, dict):
        term_attrs = terms
    else:
        term_attrs = {t: {} for t in terms}
    by_head: dict[str, list[tuple[tuple[str, ...], dict]]] = {}
    for term, attrs in term_attrs.items():
        by_head.setdefault(term[0], []).append((term, attrs))
    norms = [t.norm for t in tokens]
    rows: list[Row] = []
    for i, norm in enumerate(norms):
        for term, attrs in by_head.get(norm, ()):
            if tuple(norms[i : i + len(term)]) != term:
                continue
            span = _span(doc, tokens, i, i + len(term) - 1)
            payload = _payload(surface=" ".join(term), **attrs)
            rows.append(Row(span=span, components=(Component(name, span, payload),)))
    return View(name=name, schema=(name,), rows=sorted(rows, key=Row.sort_key))


def rule_match(slot: SlotMatcher, tokens: list[Token], doc: str = "") -> View:
    """Base view for a rule-backed class, honoring the slot's restriction."""
    tables = slot.tables
    norms = [t.norm for t in tokens]
    rows: list[Row] = []
    for i in range(len(norms)):
        if slot.rule == "DOSAGE":
            m = match_dosage(tables, norms, i)
            if m is None or m.first != i:
                continue
            if slot.dosage_constraint is not None and not satisfies(tables, m, slot.dosage_constraint):
                continue
            span = _span(doc, tokens, m.first, m.last)
            payload = _payload(
                surface=" ".join(norms[m.first : m.last + 1]), value=m.quantity.value,
                unit=m.unit, qualifier=m.qualifier, normalized_mg=m.normalized_mg,
            )
        elif slot.rule == "INTERVAL":
            m = match_interval(tables, norms, i)
            if m is None:
                continue
            if slot.interval_units is not None and m.unit_class not in slot.interval_units:
                continue
            if slot.interval_period is not None and m.period != slot.interval_period:
                continue
            span = _span(doc, tokens, m.first, m.last)
            payload = _payload(
                surface=" ".join(norms[m.first : m.last + 1]), kind=m.kind,
                amount=m.amount.value if m.amount else None, unit=m.unit_class, period=m.period,
            )
        elif slot.rule == "FREQUENCY":
            m = match_frequency(tables, norms, i)
            if m is None:
                continue
            if slot.frequency_units is not None and m.per_unit not in slot.frequency_units:
                continue
            span = _span(doc, tokens, m.first, m.last)
            payload = _payload(
                surface=" ".join(norms[m.first : m.last + 1]),
                amount=m.amount.value if m.amount else None, per_unit=m.per_unit,
            )
        else:
            raise KasError(f"unknown rule class {slot.rule!r}")
        rows.append(Row(span=span, components=(Component(slot.class_name, span, payload),)))
    return View(name=slot.class_name, schema=(slot.class_name,), rows=sorted(rows, key=Row.sort_key))


def follows_tok(left: View, right: View, min_gap: int, max_gap: int) -> View:
    """Join rows of ``right`` that follow rows of ``left`` within a token window."""
    if min_gap > max_gap:
        raise KasError(f"invalid window ({min_gap}, {max_gap})")
    rows: list[Row] = []
    by_doc: dict[str, list[Row]] = {}
    for r in right.rows:
        by_doc.setdefault(r.span.doc, []).append(r)
    for l in left.rows:
        for r in by_doc.get(l.span.doc, ()):
            gap = r.span.first - l.span.last - 1
            if min_gap <= gap <= max_gap:
                hull = Span(doc=l.span.doc, first=l.span.first, last=r.span.last,
                            cs=l.span.cs, ce=r.span.ce)
                rows.append(Row(span=hull, components=l.components + r.components))
    return View(name=f"{left.name}+{right.name}", schema=left.schema + right.schema,
                rows=sorted(rows, key=Row.sort_key))


def union_all(views: list[View]) -> View:
    if not views:
        return View(name="union", schema=(), rows=[])
    schema = views[0].schema
    for v in views[1:]:
        if v.schema != schema:
            raise KasError(f"schema mismatch in union: {schema} vs {v.schema}")
    rows = [r for v in views for r in v.rows]
    return View(name="union", schema=schema, rows=sorted(set(rows), key=Row.sort_key))


def consolidate(view: View) -> View:
    """Drop rows strictly contained in another row; leftmost-longest on ties."""
    rows = sorted(set(view.rows), key=Row.sort_key)
    kept: list[Row] = []
    seen_spans: set[tuple[str, int, int]] = set()
    for r in rows:
        key = (r.span.doc, r.span.first, r.span.last)
        if key in seen_spans:
            continue
        contained = any(
            o.span.doc == r.span.doc
            and o.span.first <= r.span.first and r.span.last <= o.span.last
            and (o.span.first, o.span.last) != (r.span.first, r.span.last)
            for o in rows
        )
        if not contained:
            kept.append(r)
            seen_spans.add(key)
    return View(name=view.name, schema=view.schema, rows=kept)


# ---------------------------------------------------------------------------
# Plan execution


def base_view(slot: SlotMatcher, tokens: list[Token], doc: str = "") -> View:
    if slot.rule is not None:
        return consolidate(rule_match(slot, tokens, doc))
    return consolidate(gazetteer_match(slot.class_name, slot.term_map(), tokens, doc))


def execute_plan(plan: MatchPlan, tokens: list[Token] | list[str], doc: str = "") -> list[Row]:
    """Evaluate a plan over one token sequence: consolidated base views
    chained with follows_tok; joined rows are returned unconsolidated."""
    if tokens and isinstance(tokens[0], str):
        tokens = tokenize(" ".join(tokens))
    current = base_view(plan.slots[0], tokens, doc)
    for slot, gap in zip(plan.slots[1:], plan.gaps):
        if not current.rows:
            return []
        nxt = base_view(slot, tokens, doc)
        current = follows_tok(current, nxt, 0, gap)
    return current.rows


# ---------------------------------------------------------------------------
# Corpus annotation


def read_corpus(path) -> list[dict]:
    docs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                log.warning("skipping unreadable corpus line %d", lineno)
                continue
            if not isinstance(rec, dict) or "id" not in rec or "text" not in rec:
                log.warning("skipping malformed document at line %d", lineno)
                continue
            docs.append(rec)
    return docs


def annotate_document(plans: list[MatchPlan], doc: dict) -> list[Annotation]:
    tokens = tokenize(doc["text"])
    out: list[Annotation] = []
    for plan in plans:
        rows = consolidate(View("p", (), execute_plan(plan, tokens, doc["id"]))).rows
        for seq, row in enumerate(rows):
            out.append(Annotation(
                id=f"{plan.pattern_id}:{doc['id']}:{seq}",
                pattern=plan.pattern_id, doc=doc["id"], span=row.span,
                components=row.components,
            ))
    return out


def _annotate_chunk(plans: list[MatchPlan], docs: list[dict]) -> list[Annotation]:
    out = []
    for doc in docs:
        out.extend(annotate_document(plans, doc))
    return out


def annotate_corpus(plans: list[MatchPlan], docs: list[dict],
                    workers: int = 1) -> tuple[list[Annotation], dict[str, int]]:
    """Annotate every document with every plan; deterministic across workers."""
    if workers <= 1 or len(docs) < 2:
        annotations = _annotate_chunk(plans, docs)
    else:
        chunk = max(1, (len(docs) + workers - 1) // workers)
        batches = [docs[i : i + chunk] for i in range(0, len(docs), chunk)]
        annotations = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(_annotate_chunk, [plans] * len(batches), batches):
                annotations.extend(result)
    stats = {p.pattern_id: 0 for p in plans}
    for a in annotations:
        stats[a.pattern] += 1
    return annotations, stats


def format_stats(stats: dict[str, int]) -> str:
    lines = [f"{pid}\t{count}" for pid, count in stats.items()]
    lines.append(f"total\t{sum(stats.values())}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Annotation wire format (JSON lines)


def annotation_to_dict(a: Annotation) -> dict:
    return {
        "id": a.id,
        "pattern": a.pattern,
        "doc": a.doc,
        "span": {"cs": a.span.cs, "ce": a.span.ce, "first": a.span.first, "last": a.span.last},
        "components": [
            {"class": c.class_name, "cs": c.span.cs, "ce": c.span.ce,
             "first": c.span.first, "last": c.span.last, "payload": c.payload_dict()}
            for c in a.components
        ],
    }


def annotation_from_dict(rec: dict) -> Annotation:
    doc = rec["doc"]
    span = Span(doc=doc, first=rec["span"]["first"], last=rec["span"]["last"],
                cs=rec["span"]["cs"], ce=rec["span"]["ce"])
    components = tuple(
        Component(
            class_name=c["class"],
            span=Span(doc=doc, first=c["first"], last=c["last"], cs=c["cs"], ce=c["ce"]),
            payload=tuple(sorted((k, str(v)) for k, v in c["payload"].items())),
        )
        for c in rec["components"]
    )
    return Annotation(id=rec["id"], pattern=rec["pattern"], doc=doc, span=span,
                      components=components)


def dumps_annotation(a: Annotation) -> str:
    return json.dumps(annotation_to_dict(a), sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


def write_annotations(path, annotations: list[Annotation]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for a in annotations:
            f.write(dumps_annotation(a) + "\n")


def read_annotations(path) -> list[Annotation]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(annotation_from_dict(json.loads(line)))
    return out


def payload_fraction(payload: dict[str, str], key: str) -> Fraction | None:
    v = payload.get(key)
    return Fraction(v) if v is not None else None
