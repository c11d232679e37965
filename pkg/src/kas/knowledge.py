"""Knowledge sources: ontology, lexicons, and lexico-ontology term sets.

File formats:
  - ontology: JSON array of {id, kind, label, slang: [...], parent?}
  - lexicon: sections headed by ``@category NAME``, one term per line
  - lexico-ontology: tab-separated ``term<TAB>category<TAB>concept_id?``

All terms are normalized through the shared tokenizer at load, so lookups
are case-insensitive token sequences. The model is immutable after load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import KnowledgeError
from .grammar import Grammar
from .tokens import norm_tuple

Term = tuple[str, ...]


@dataclass(frozen=True)
class OntologyConcept:
    id: str
    kind: str  # "class" | "instance"
    label: str
    slang_labels: tuple[str, ...]
    parent: str | None


@dataclass
class KnowledgeModel:
    concepts: dict[str, OntologyConcept]
    children: dict[str, tuple[str, ...]]
    surface_owner: dict[Term, str]
    category_terms: dict[str, tuple[Term, ...]]
    category_links: dict[str, dict[Term, str]]
    binds: dict[str, str]
    reachable_bound: dict[str, tuple[str, ...]] = field(default_factory=dict)
    _label_index: dict[str, str] = field(default_factory=dict, repr=False)
    _expand_cache: dict[str, frozenset[Term]] = field(default_factory=dict, repr=False)

    def resolve_concept(self, text: str) -> OntologyConcept | None:
        """Find a concept by id, label, or (unique) slang surface form."""
        if text in self.concepts:
            return self.concepts[text]
        key = " ".join(norm_tuple(text))
        cid = self._label_index.get(key)
        if cid is None:
            cid = self.surface_owner.get(norm_tuple(text))
        return self.concepts.get(cid) if cid else None

    def roots(self) -> list[OntologyConcept]:
        return [c for c in self.concepts.values() if c.parent is None]


def expand_entity(model: KnowledgeModel, concept_id: str) -> frozenset[Term]:
    """Surface forms of a concept, its transitive subconcepts, and their slang."""
    if concept_id not in model.concepts:
        raise KnowledgeError(f"unknown concept {concept_id!r}")
    cached = model._expand_cache.get(concept_id)
    if cached is not None:
        return cached
    terms: set[Term] = set()
    stack = [concept_id]
    while stack:
        c = model.concepts[stack.pop()]
        terms.add(norm_tuple(c.label))
        terms.update(norm_tuple(s) for s in c.slang_labels)
        stack.extend(model.children.get(c.id, ()))
    result = frozenset(terms)
    model._expand_cache[concept_id] = result
    return result


def terms_of(model: KnowledgeModel, category: str) -> tuple[Term, ...]:
    """Stored terms of a bound category, direct plus bound subcategories."""
    if category not in model.binds:
        raise KnowledgeError(f"category {category!r} is not bound to a knowledge source")
    terms: set[Term] = set(model.category_terms.get(category, ()))
    for sub in model.reachable_bound.get(category, ()):
        terms.update(model.category_terms.get(sub, ()))
    return tuple(sorted(terms))


def concept_of_term(model: KnowledgeModel, category: str, term: Term) -> str | None:
    return model.category_links.get(category, {}).get(term)


# ---------------------------------------------------------------------------
# Loading


def _load_ontology(path: Path) -> tuple[dict[str, OntologyConcept], dict[Term, str]]:
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise KnowledgeError(f"{path}: invalid JSON: {e}") from e
    if not isinstance(records, list):
        raise KnowledgeError(f"{path}: expected a JSON array of concept records")
    concepts: dict[str, OntologyConcept] = {}
    for rec in records:
        cid = rec.get("id")
        if not cid:
            raise KnowledgeError(f"{path}: concept record without id: {rec}")
        if cid in concepts:
            raise KnowledgeError(f"{path}: duplicate concept id {cid!r}")
        label = rec.get("label") or ""
        if not label.strip():
            raise KnowledgeError(f"{path}: concept {cid!r} has an empty label")
        kind = rec.get("kind", "instance")
        if kind not in ("class", "instance"):
            raise KnowledgeError(f"{path}: concept {cid!r} has unknown kind {kind!r}")
        concepts[cid] = OntologyConcept(
            id=cid, kind=kind, label=label,
            slang_labels=tuple(rec.get("slang", ())), parent=rec.get("parent"),
        )
    for c in concepts.values():
        if c.parent is not None and c.parent not in concepts:
            raise KnowledgeError(f"{path}: concept {c.id!r} has dangling parent {c.parent!r}")
    # parent links must be acyclic
    for c in concepts.values():
        seen = {c.id}
        cur = c.parent
        while cur is not None:
            if cur in seen:
                raise KnowledgeError(f"{path}: parent cycle through {cur!r}")
            seen.add(cur)
            cur = concepts[cur].parent
    owner: dict[Term, str] = {}
    for c in concepts.values():
        for surface in (c.label, *c.slang_labels):
            t = norm_tuple(surface)
            if not t:
                raise KnowledgeError(f"{path}: surface {surface!r} of {c.id!r} normalizes to nothing")
            prior = owner.get(t)
            if prior is not None and prior != c.id:
                raise KnowledgeError(
                    f"{path}: surface {surface!r} maps to both {prior!r} and {c.id!r}"
                )
            owner[t] = c.id
    return concepts, owner


def _load_lexicon(path: Path, terms: dict[str, list[Term]]) -> None:
    category = None
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("@category"):
            parts = line.split()
            if len(parts) != 2:
                raise KnowledgeError(f"{path}:{lineno}: @category takes one name")
            category = parts[1]
            terms.setdefault(category, [])
            continue
        if category is None:
            raise KnowledgeError(f"{path}:{lineno}: term before any @category header")
        t = norm_tuple(line)
        if not t:
            raise KnowledgeError(f"{path}:{lineno}: term normalizes to nothing")
        terms[category].append(t)


def _load_lexico_ontology(path: Path, terms: dict[str, list[Term]],
                          links: dict[str, dict[Term, str]]) -> None:
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) not in (2, 3):
            raise KnowledgeError(f"{path}:{lineno}: expected term<TAB>category[<TAB>concept]")
        term, category = cols[0].strip(), cols[1].strip()
        t = norm_tuple(term)
        if not t:
            raise KnowledgeError(f"{path}:{lineno}: term normalizes to nothing")
        bucket = terms.setdefault(category, [])
        if t in bucket:
            raise KnowledgeError(f"{path}:{lineno}: duplicate term {term!r} in {category}")
        bucket.append(t)
        if len(cols) == 3 and cols[2].strip():
            links.setdefault(category, {})[t] = cols[2].strip()


def load_knowledge(grammar: Grammar, ontology_path: str | Path,
                   lexicon_paths: list[str | Path],
                   lexico_ontology_paths: list[str | Path]) -> KnowledgeModel:
    """Load all knowledge sources and cross-check them against the grammar."""
    concepts, owner = _load_ontology(Path(ontology_path))

    lex_terms: dict[str, list[Term]] = {}
    for p in lexicon_paths:
        _load_lexicon(Path(p), lex_terms)
    lexico_terms: dict[str, list[Term]] = {}
    links: dict[str, dict[Term, str]] = {}
    for p in lexico_ontology_paths:
        _load_lexico_ontology(Path(p), lexico_terms, links)

    nonterminals = grammar.nonterminals()
    for category, expected in ((c, "lexicon") for c in lex_terms):
        if category not in nonterminals:
            raise KnowledgeError(f"lexicon category {category!r} does not exist in the grammar")
        if grammar.binds.get(category) != expected:
            raise KnowledgeError(f"category {category!r} is not bound as {expected} in the grammar")
    for category in lexico_terms:
        if category not in nonterminals:
            raise KnowledgeError(f"category {category!r} does not exist in the grammar")
        if grammar.binds.get(category) != "lexico-ontology":
            raise KnowledgeError(f"category {category!r} is not bound as lexico-ontology")
    for category, term_links in links.items():
        for term, cid in term_links.items():
            if cid not in concepts:
                raise KnowledgeError(
                    f"term {' '.join(term)!r} in {category} links to unknown concept {cid!r}"
                )

    category_terms: dict[str, tuple[Term, ...]] = {}
    for category, items in {**lex_terms, **lexico_terms}.items():
        if not items:
            raise KnowledgeError(f"category {category!r} declared but has no terms")
        category_terms[category] = tuple(sorted(set(items)))

    # Every bound category must end up populated, directly or through
    # bound subcategories reachable in the grammar.
    reachable_bound: dict[str, tuple[str, ...]] = {}
    for category, source in grammar.binds.items():
        if source == "ontology":
            if not concepts:
                raise KnowledgeError(f"category {category!r} bound to an empty ontology")
            continue
        subs = tuple(sorted(
            nt for nt in grammar.reachable(category)
            if nt != category and nt in category_terms
        ))
        reachable_bound[category] = subs
        if category not in category_terms and not subs:
            raise KnowledgeError(f"category {category!r} bound to {source} but no file provides terms")

    children: dict[str, list[str]] = {}
    for c in concepts.values():
        if c.parent is not None:
            children.setdefault(c.parent, []).append(c.id)

    model = KnowledgeModel(
        concepts=concepts,
        children={k: tuple(sorted(v)) for k, v in children.items()},
        surface_owner=owner,
        category_terms=category_terms,
        category_links=links,
        binds=dict(grammar.binds),
        reachable_bound=reachable_bound,
    )
    model._label_index.update(
        {" ".join(norm_tuple(c.label)): c.id for c in concepts.values()}
    )
    return model
