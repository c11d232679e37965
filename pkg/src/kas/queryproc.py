"""Query translation: validated elements become executable match plans.

A validated query element translates to either a finite term set (ontology
expansion, lexicon lookup, enumeration) or a restricted rule recognizer
(dosage constraint, interval/frequency subcategory). Slot translations plus
token-window gaps form a system-query seed family, whose compiled form is a
MatchPlan executable by the annotator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import QueryError
from .grammar import BoundElement, Grammar, TemplatePattern, validate_user_query
from .knowledge import KnowledgeModel, expand_entity, terms_of
from .quantrules import DosageConstraint, RuleTables, match_interval, parse_dosage_constraint
from .tokens import norm_tuple

Term = tuple[str, ...]

RULE_CLASSES = ("DOSAGE", "INTERVAL", "FREQUENCY")
DEFAULT_RANGE_CEILING = 10


@dataclass(frozen=True)
class RangeSpec:
    max: int
    min: int = 0

    def __post_init__(self):
        if self.min != 0 or self.max < 0:
            raise QueryError(f"invalid range [{self.min}, {self.max}]")


@dataclass(frozen=True)
class Translation:
    element: BoundElement
    term_set: frozenset[Term] | None = None
    rule_class: str | None = None
    dosage_constraint: DosageConstraint | None = None
    interval_units: frozenset[str] | None = None
    interval_period: str | None = None
    frequency_units: frozenset[str] | None = None
    operator_phrases: frozenset[str] = frozenset()
    tables: RuleTables | None = field(default=None, repr=False, compare=False)

    @property
    def is_finite(self) -> bool:
        return self.term_set is not None


@dataclass(frozen=True)
class SystemQuerySeed:
    slots: tuple[Translation, ...]
    gaps: tuple[RangeSpec, ...]

    def __post_init__(self):
        if len(self.gaps) != len(self.slots) - 1:
            raise QueryError("need exactly one gap between consecutive slots")


@dataclass(frozen=True)
class SeedFamily:
    seed: SystemQuerySeed
    size: int | None  # exact count for all-finite slots, None when unbounded

    def matches(self, tokens) -> bool:
        from .annotator import execute_plan  # local import to avoid a cycle

        plan = compile_plan(self.seed)
        return bool(execute_plan(plan, list(tokens)))


@dataclass(frozen=True)
class SlotMatcher:
    class_name: str
    terms: tuple[tuple[Term, tuple[tuple[str, str], ...]], ...] | None  # term -> attrs
    rule: str | None
    tables: RuleTables | None
    dosage_constraint: DosageConstraint | None = None
    interval_units: frozenset[str] | None = None
    interval_period: str | None = None
    frequency_units: frozenset[str] | None = None

    def term_map(self) -> dict[Term, dict[str, str]]:
        return {t: dict(attrs) for t, attrs in (self.terms or ())}


@dataclass(frozen=True)
class MatchPlan:
    pattern_id: str
    slots: tuple[SlotMatcher, ...]
    gaps: tuple[int, ...]  # max token gap between consecutive slots


# ---------------------------------------------------------------------------
# Class vocabularies


def class_term_attrs(grammar: Grammar, model: KnowledgeModel, cls: str) -> dict[Term, dict[str, str]]:
    """Every matchable surface of a simple template class, with attributes."""
    if grammar.binds.get(cls) == "ontology":
        return {t: {"concept": cid} for t, cid in model.surface_owner.items()}
    out: dict[Term, dict[str, str]] = {}

    def add(term: Term, subcat: str) -> None:
        attrs = out.setdefault(term, {})
        cats = attrs.get("subcats", "")
        names = cats.split("|") if cats else []
        if subcat not in names:
            names.append(subcat)
            attrs["subcats"] = "|".join(sorted(names))

    for alt in grammar.productions.get(cls, ()):
        if len(alt) == 1 and alt[0].is_nt:
            sub = alt[0].name
            for term in _subcategory_terms(grammar, model, sub):
                add(term, sub)
        else:
            for sym in alt:
                if not sym.is_nt:
                    add(sym.tokens, cls)
    if not out:
        raise QueryError(f"class {cls} has no term source")
    return out


def _subcategory_terms(grammar: Grammar, model: KnowledgeModel, name: str) -> set[Term]:
    terms: set[Term] = set()
    if name in model.binds:
        terms.update(terms_of(model, name))
    if name in grammar.productions and not grammar.is_generative(name):
        terms.update(grammar.enumerate_language(name))
    return terms


def _freeze_attrs(terms: dict[Term, dict[str, str]]):
    return tuple(sorted((t, tuple(sorted(a.items()))) for t, a in terms.items()))


# ---------------------------------------------------------------------------
# Translation (Defs. of contextual compilation and nonterminal expansion)


def contextual_compile(grammar: Grammar, tables: RuleTables, terminal: str, cls: str) -> Translation:
    """Expand a terminal according to the class it instantiates.

    Constraint terminals under rule-backed classes decompose into operator,
    amount, and unit, each with its synonym vocabulary; plain terminals with
    no compilation entry stay as their own singleton.
    """
    element = BoundElement(cls, "constraint" if grammar.is_generative(cls) else "terminal", terminal)
    if cls == "DOSAGE":
        constraint = parse_dosage_constraint(tables, terminal)
        return Translation(
            element=element, rule_class=cls, dosage_constraint=constraint,
            operator_phrases=tables.operator_phrases(constraint.operator), tables=tables,
        )
    if cls == "INTERVAL":
        toks = list(norm_tuple(terminal))
        mention = match_interval(tables, toks, 0)
        if mention is None or mention.last != len(toks) - 1:
            raise QueryError(f"{terminal!r} is not an interval expression")
        return Translation(
            element=element, rule_class=cls, tables=tables,
            interval_units=frozenset({mention.unit_class}), interval_period=mention.period,
        )
    if cls == "FREQUENCY":
        from .quantrules import match_frequency

        toks = list(norm_tuple(terminal))
        mention = match_frequency(tables, toks, 0)
        if mention is None or mention.last != len(toks) - 1:
            raise QueryError(f"{terminal!r} is not a frequency expression")
        units = frozenset({mention.per_unit}) if mention.per_unit else None
        return Translation(element=element, rule_class=cls, frequency_units=units, tables=tables)
    toks = norm_tuple(terminal)
    if not toks:
        raise QueryError(f"terminal {terminal!r} normalizes to nothing")
    return Translation(element=element, term_set=frozenset({toks}))


def translate(grammar: Grammar, model: KnowledgeModel, tables: RuleTables,
              element: BoundElement) -> Translation:
    """Turn one bound query element into a term set or restricted recognizer."""
    cls = element.class_name
    if element.kind == "class":
        if cls in RULE_CLASSES:
            return Translation(element=element, rule_class=cls, tables=tables)
        terms = frozenset(class_term_attrs(grammar, model, cls))
        return Translation(element=element, term_set=terms)

    if element.kind == "concept":
        terms = expand_entity(model, element.value)
        if not terms:
            raise QueryError(f"concept {element.value} expands to no terms")
        return Translation(element=element, term_set=frozenset(terms))

    if element.kind == "subnonterminal":
        parts = element.parts or (element.value,)
        if cls == "INTERVAL":
            units: set[str] = set()
            for p in parts:
                if not p.startswith("BY_") or p[3:] not in _interval_unit_classes(grammar):
                    raise QueryError(f"unsupported interval subcategory {p}")
                units.add(p[3:])
            return Translation(element=element, rule_class=cls, interval_units=frozenset(units),
                               tables=tables)
        if cls == "FREQUENCY":
            units = set()
            for p in parts:
                if not p.startswith("PER_") or p[4:] not in _interval_unit_classes(grammar):
                    raise QueryError(f"unsupported frequency subcategory {p}")
                units.add(p[4:])
            return Translation(element=element, rule_class=cls, frequency_units=frozenset(units),
                               tables=tables)
        if cls == "DOSAGE":
            raise QueryError("dosage accepts constraints, not subcategories")
        terms = set()
        for p in parts:
            terms.update(_subcategory_terms(grammar, model, p))
        if not terms:
            raise QueryError(f"no terms for {element.value}")
        return Translation(element=element, term_set=frozenset(terms))

    return contextual_compile(grammar, tables, element.value, cls)


def _interval_unit_classes(grammar: Grammar) -> set[str]:
    return {alt[0].name for alt in grammar.productions["TIME_INDICATOR"]} | \
           {alt[0].name for alt in grammar.productions["DURATION_INDICATOR"]} | {"DAY"}


# ---------------------------------------------------------------------------
# Seeds and plans


def build_seeds(translations: list[Translation], ranges: list[RangeSpec]) -> SeedFamily:
    """Symbolic cross-product of per-slot translations with token-window gaps."""
    if len(ranges) != len(translations) - 1:
        raise QueryError("need exactly one range per adjacent slot pair")
    seed = SystemQuerySeed(slots=tuple(translations), gaps=tuple(ranges))
    size: int | None = 1
    for t in translations:
        if not t.is_finite:
            size = None
            break
        size *= len(t.term_set)
    return SeedFamily(seed=seed, size=size)


def compile_plan(seed: SystemQuerySeed, pattern_id: str = "",
                 grammar: Grammar | None = None, model: KnowledgeModel | None = None,
                 tables: RuleTables | None = None) -> MatchPlan:
    """Compile a seed into slot matchers plus gap windows."""
    slots = []
    for t in seed.slots:
        if t.is_finite:
            attrs: dict[Term, dict[str, str]] = {}
            if t.element.kind == "concept":
                attrs = {term: {"concept": t.element.value} for term in t.term_set}
            elif grammar is not None and model is not None:
                cls_attrs = class_term_attrs(grammar, model, t.element.class_name)
                attrs = {term: cls_attrs.get(term, {}) for term in t.term_set}
            else:
                attrs = {term: {} for term in t.term_set}
            slots.append(SlotMatcher(
                class_name=t.element.class_name, terms=_freeze_attrs(attrs),
                rule=None, tables=None,
            ))
        else:
            slot_tables = t.tables or tables
            if slot_tables is None:
                raise QueryError("rule-backed slot requires rule tables")
            slots.append(SlotMatcher(
                class_name=t.element.class_name, terms=None, rule=t.rule_class, tables=slot_tables,
                dosage_constraint=t.dosage_constraint, interval_units=t.interval_units,
                interval_period=t.interval_period, frequency_units=t.frequency_units,
            ))
    return MatchPlan(pattern_id=pattern_id, slots=tuple(slots),
                     gaps=tuple(r.max for r in seed.gaps))


def build_pattern_plans(grammar: Grammar, model: KnowledgeModel,
                        tables: RuleTables) -> list[MatchPlan]:
    """One broadest-match plan per registered pattern (whole-class slots)."""
    plans = []
    for pid in grammar.pattern_order:
        pattern = grammar.patterns[pid]
        slots = []
        for cls in pattern.classes:
            if cls in RULE_CLASSES:
                slots.append(SlotMatcher(class_name=cls, terms=None, rule=cls, tables=tables))
            else:
                attrs = class_term_attrs(grammar, model, cls)
                slots.append(SlotMatcher(class_name=cls, terms=_freeze_attrs(attrs),
                                         rule=None, tables=None))
        plans.append(MatchPlan(pattern_id=pid, slots=tuple(slots), gaps=pattern.gaps))
    return plans


# ---------------------------------------------------------------------------
# Wire format


@dataclass(frozen=True)
class ParsedQuery:
    pattern: TemplatePattern
    elements: tuple[BoundElement, ...]
    translations: tuple[Translation, ...]
    ranges: tuple[int, ...]
    distinct_docs: bool = False
    limit: int | None = None


def parse_query(grammar: Grammar, model: KnowledgeModel, tables: RuleTables,
                obj: dict, range_ceiling: int = DEFAULT_RANGE_CEILING) -> ParsedQuery:
    """Validate and translate the JSON wire form of a user query."""
    if not isinstance(obj, dict):
        raise QueryError("query must be a JSON object")
    elements = obj.get("elements")
    if not isinstance(elements, list) or not elements:
        raise QueryError("query needs a non-empty elements list")
    validated = validate_user_query(grammar, elements, model)
    if obj.get("pattern") and obj["pattern"] != validated.pattern.id:
        raise QueryError(
            f"query matches pattern {validated.pattern.id}, not {obj['pattern']}"
        )
    ranges = obj.get("ranges")
    if ranges is None:
        gap_maxes = validated.pattern.gaps
    else:
        if len(ranges) != len(validated.elements) - 1:
            raise QueryError("ranges must have one entry per adjacent element pair")
        for r in ranges:
            if not isinstance(r, int) or not 0 <= r <= range_ceiling:
                raise QueryError(f"range {r!r} outside [0, {range_ceiling}]")
        gap_maxes = tuple(ranges)
    translations = tuple(translate(grammar, model, tables, e) for e in validated.elements)
    limit = obj.get("limit")
    if limit is not None and (not isinstance(limit, int) or limit < 0):
        raise QueryError("limit must be a non-negative integer")
    return ParsedQuery(
        pattern=validated.pattern, elements=validated.elements, translations=translations,
        ranges=gap_maxes, distinct_docs=bool(obj.get("distinct_docs", False)), limit=limit,
    )
