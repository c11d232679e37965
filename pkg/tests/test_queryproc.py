from __future__ import annotations

import random

import pytest

from kas.errors import QueryError
from kas.grammar import BoundElement, validate_user_query
from kas.queryproc import (
    RangeSpec, Translation, build_seeds, class_term_attrs, compile_plan,
    contextual_compile, parse_query, translate,
)
from kas.tokens import norm_tuple
from kas.annotator import execute_plan


def _translations(resources, elements):
    vq = validate_user_query(resources.grammar, elements, resources.model)
    return vq, [translate(resources.grammar, resources.model, resources.tables, e)
                for e in vq.elements]


# ---------------------------------------------------------------------------
# Contextual compilation


def test_cc_dosage_constraint(grammar, tables):
    t = contextual_compile(grammar, tables, ">4mg", "DOSAGE")
    assert t.dosage_constraint.operator == "gt"
    assert t.dosage_constraint.threshold.value == 4
    assert t.operator_phrases >= {">", "greater than", "more than", "above", "in excess of"}


def test_cc_daily_restricts_to_day_words(grammar, tables):
    t = contextual_compile(grammar, tables, "daily", "INTERVAL")
    assert t.interval_units == {"DAY"}
    day_words = {s for s in (" ".join(x) for x in grammar.enumerate_language("DAY"))}
    assert day_words >= {"day", "night", "morning", "afternoon"}


def test_cc_identity_for_plain_terminal(grammar, tables):
    t = contextual_compile(grammar, tables, "patch", "ROA")
    assert t.term_set == {("patch",)}
    t = contextual_compile(grammar, tables, "foo", "PRONOUN")
    assert t.term_set == {("foo",)}


def test_cc_unparseable_constraint(grammar, tables):
    with pytest.raises(QueryError):
        contextual_compile(grammar, tables, "4>mg", "DOSAGE")


def test_cc_constraint_covers_its_own_surface(grammar, tables, resources):
    # the compiled form of ">4mg" accepts the literal ">4mg" token sequence
    t = contextual_compile(grammar, tables, ">4mg", "DOSAGE")
    fam = build_seeds([t], [])
    assert fam.matches(norm_tuple(">4mg"))


# ---------------------------------------------------------------------------
# Translation


def test_translate_concept(resources):
    _, trs = _translations(resources, ["Buprenorphine", "PERSONAL_PRONOUN", "NEGATIVE"])
    assert len(trs[0].term_set) == 21


def test_translate_pronoun_subcategory(resources):
    _, trs = _translations(resources, ["Buprenorphine", "PERSONAL_PRONOUN", "NEGATIVE"])
    assert trs[1].term_set >= {("i",), ("me",), ("you",)}
    assert trs[2].term_set >= {("horrible",), ("threw", "up")}


def test_translate_interval_union(resources):
    _, trs = _translations(resources, ["Buprenorphine", "PERSONAL_PRONOUN", ">4mg", "BY_DAY|BY_HOUR"])
    assert trs[3].interval_units == {"DAY", "HOUR"}
    assert not trs[3].is_finite


def test_translation_never_empty(resources):
    g, m, t = resources.grammar, resources.model, resources.tables
    for cls in g.classes:
        tr = translate(g, m, t, BoundElement(cls, "class", cls))
        assert tr.is_finite and len(tr.term_set) >= 1 or tr.rule_class == cls


# ---------------------------------------------------------------------------
# Seeds


def _term_translation(cls, terms):
    return Translation(element=BoundElement(cls, "subnonterminal", "X"),
                       term_set=frozenset(norm_tuple(t) for t in terms))


def test_seed_family_size_is_cross_product():
    a = _term_translation("ROA", ["sniff", "snort", "railing"])
    b = _term_translation("DRUGFORM", ["pill", "tablet", "powder", "syrup"])
    fam = build_seeds([a, b], [RangeSpec(2)])
    assert fam.size == 12


def test_seed_family_singleton():
    fam = build_seeds([_term_translation("ROA", ["sniff"])], [])
    assert fam.size == 1


def test_seed_family_unbounded(resources):
    _, trs = _translations(resources, ["Buprenorphine", "PERSONAL_PRONOUN", ">4mg", "BY_DAY|BY_HOUR"])
    fam = build_seeds(trs, [RangeSpec(0), RangeSpec(2), RangeSpec(0)])
    assert fam.size is None


def test_seed_family_contains_reference_system_query(resources):
    _, trs = _translations(resources, ["Buprenorphine", "PERSONAL_PRONOUN", ">4mg", "BY_DAY|BY_HOUR"])
    fam = build_seeds(trs, [RangeSpec(0), RangeSpec(2), RangeSpec(0)])
    assert fam.matches(norm_tuple("Subs I was taking 32mg a day"))
    assert not fam.matches(norm_tuple("Subs I was honestly truly surely taking 32mg a day"))
    assert not fam.matches(norm_tuple("Subs I was taking 2mg a day"))


def test_gap_count_must_match():
    a = _term_translation("ROA", ["sniff"])
    with pytest.raises(QueryError):
        build_seeds([a, a], [])


# ---------------------------------------------------------------------------
# Plan semantics vs brute-force window scan


def brute_rows(slot_occurrences, gaps):
    """All slot-span combinations whose inter-slot gaps fit the windows."""
    results = []

    def rec(i, chosen):
        if i == len(slot_occurrences):
            results.append(tuple(chosen))
            return
        for first, last in slot_occurrences[i]:
            if chosen:
                gap = first - chosen[-1][1] - 1
                if not 0 <= gap <= gaps[i - 1]:
                    continue
            rec(i + 1, chosen + [(first, last)])

    rec(0, [])
    return set(results)


def test_plan_matches_equal_brute_force_scan():
    rng = random.Random(7)
    vocab = ["aa", "bb", "cc", "dd", "ee"]
    for _ in range(200):
        n_slots = rng.randint(1, 3)
        slot_terms = [rng.sample(vocab, rng.randint(1, 2)) for _ in range(n_slots)]
        gaps = [rng.randint(0, 3) for _ in range(n_slots - 1)]
        tokens = [rng.choice(vocab + ["zz", "yy"]) for _ in range(rng.randint(0, 20))]

        translations = [_term_translation("ROA", ts) for ts in slot_terms]
        fam = build_seeds(translations, [RangeSpec(g) for g in gaps])
        plan = compile_plan(fam.seed)
        rows = execute_plan(plan, tokens)
        got = {tuple((c.span.first, c.span.last) for c in r.components) for r in rows}

        occurrences = []
        for ts in slot_terms:
            occ = [(i, i) for i, tok in enumerate(tokens) if tok in ts]
            occurrences.append(occ)
        expected = brute_rows(occurrences, gaps)
        assert got == expected


def test_compile_plan_carries_gaps(resources):
    _, trs = _translations(resources, ["Buprenorphine", "PERSONAL_PRONOUN", ">4mg", "BY_DAY|BY_HOUR"])
    fam = build_seeds(trs, [RangeSpec(0), RangeSpec(2), RangeSpec(0)])
    plan = compile_plan(fam.seed, "EPDI")
    assert plan.gaps == (0, 2, 0)
    assert [s.class_name for s in plan.slots] == ["ENTITY", "PRONOUN", "DOSAGE", "INTERVAL"]


# ---------------------------------------------------------------------------
# Numeral / worded symmetry


def test_numeral_and_worded_constraints_are_interchangeable(resources, tables):
    from kas.quantrules import match_dosage, parse_dosage_constraint, satisfies
    from tests.test_quantrules import worded_table

    by_value: dict[int, tuple[str, ...]] = {}
    for phrase, value in worded_table().items():
        by_value.setdefault(value, phrase)
    for n in range(1, 100):
        worded_next = by_value[n + 1]
        con = parse_dosage_constraint(tables, f">{n}mg")
        mention = match_dosage(tables, list(worded_next) + ["mg"], 0)
        assert mention is not None and satisfies(tables, mention, con), n

        worded_n = by_value[n]
        con = parse_dosage_constraint(tables, "> " + " ".join(worded_n) + " mg")
        assert con.threshold.value == n
        mention = match_dosage(tables, [str(n + 1), "mg"], 0)
        assert satisfies(tables, mention, con), n


# ---------------------------------------------------------------------------
# Wire format


def _scenario1_obj():
    return {
        "pattern": "EPDI",
        "elements": [
            {"class": "ENTITY", "binding_kind": "concept", "value": "Buprenorphine"},
            {"class": "PRONOUN", "binding_kind": "subnonterminal", "value": "PERSONAL_PRONOUN"},
            {"class": "DOSAGE", "binding_kind": "constraint", "value": ">4mg"},
            {"class": "INTERVAL", "binding_kind": "subnonterminal", "value": "BY_DAY|BY_HOUR"},
        ],
    }


def test_parse_query_defaults_ranges_to_pattern_gaps(resources):
    q = parse_query(resources.grammar, resources.model, resources.tables, _scenario1_obj())
    assert q.pattern.id == "EPDI"
    assert q.ranges == (4, 4, 4)


def test_parse_query_explicit_ranges(resources):
    obj = _scenario1_obj() | {"ranges": [0, 2, 0]}
    q = parse_query(resources.grammar, resources.model, resources.tables, obj)
    assert q.ranges == (0, 2, 0)


def test_parse_query_range_ceiling(resources):
    obj = _scenario1_obj() | {"ranges": [0, 99, 0]}
    with pytest.raises(QueryError, match="outside"):
        parse_query(resources.grammar, resources.model, resources.tables, obj)


def test_parse_query_pattern_mismatch(resources):
    obj = _scenario1_obj() | {"pattern": "EPS"}
    with pytest.raises(QueryError, match="matches pattern"):
        parse_query(resources.grammar, resources.model, resources.tables, obj)


def test_class_term_attrs_entity_carries_concepts(resources):
    attrs = class_term_attrs(resources.grammar, resources.model, "ENTITY")
    assert attrs[("subs",)] == {"concept": "Buprenorphine"}
    assert attrs[("dope",)] == {"concept": "Heroin"}


def test_class_term_attrs_subcategories(resources):
    attrs = class_term_attrs(resources.grammar, resources.model, "PRONOUN")
    assert "PERSONAL_PRONOUN" in attrs[("i",)]["subcats"]
    assert set(attrs[("that",)]["subcats"].split("|")) == {"DEMONSTRATIVE_PRONOUN", "RELATIVE_PRONOUN"}
