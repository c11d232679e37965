"""Rule-backed recognizers for the three compound template classes.

DOSAGE, INTERVAL, and FREQUENCY expressions cannot be enumerated (their
languages contain numbers), so they are matched by hand-written rules.
All vocabulary (unit words, determiners, comparison phrases, worded
numbers) is pulled out of the loaded grammar so the grammar file stays
the single editable artifact.

All arithmetic is exact: values are fractions, conversions never touch
floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import KasError, QueryError
from .grammar import Grammar
from .tokens import norm_tuple

QUAL_EXACT = "exact"
QUAL_APPROX = "approx"
QUAL_MORE = "more"
QUAL_LESS = "less"

# Operator kind (from @op marks) -> corpus-side qualifier.
_OP_QUALIFIER = {"gt": QUAL_MORE, "lt": QUAL_LESS, "approx": QUAL_APPROX,
                 "ge": QUAL_EXACT, "le": QUAL_EXACT, "eq": QUAL_EXACT}

_WORD_VALUES = {
    "one": 1, "once": 1, "two": 2, "twice": 2, "three": 3, "thrice": 3,
    "four": 4, "five": 5, "six": 6, "seven": 7, "eight": 8, "nine": 9,
    "ten": 10, "eleven": 11, "twelve": 12, "thirteen": 13, "fourteen": 14,
    "fifteen": 15, "sixteen": 16, "seventeen": 17, "eighteen": 18,
    "nineteen": 19, "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50,
    "sixty": 60, "seventy": 70, "eighty": 80, "ninety": 90, "nintey": 90,
    "hundred": 100,
}

_UNIT_CLASSES = ("SECOND", "MINUTE", "HOUR", "DAY", "WEEK", "MONTH", "YEAR", "DECADE")
_TIME_CLASSES = frozenset({"SECOND", "MINUTE", "HOUR"})


class AmountParseError(KasError):
    pass


@dataclass(frozen=True)
class Quantity:
    value: Fraction
    surface: tuple[str, ...]
    worded: bool


@dataclass(frozen=True)
class DosageMention:
    quantity: Quantity
    unit: str
    normalized_mg: Fraction | None
    qualifier: str
    first: int
    last: int


@dataclass(frozen=True)
class DosageConstraint:
    operator: str  # gt | lt | ge | le | eq
    threshold: Quantity
    unit: str

    def threshold_mg(self, tables: "RuleTables") -> Fraction:
        factor = tables.symbol_factors[self.unit]
        return self.threshold.value * factor


@dataclass(frozen=True)
class IntervalMention:
    kind: str
    amount: Quantity | None
    unit_class: str
    period: str | None
    first: int
    last: int


@dataclass(frozen=True)
class FrequencyMention:
    amount: Quantity | None
    per_unit: str | None  # unit class, or None for bare "N times"
    first: int
    last: int


class RuleTables:
    """Vocabulary extracted from a loaded grammar."""

    def __init__(self, grammar: Grammar):
        self.worded_words = self._words(grammar, "WORDED_AMOUNT")
        unknown = self.worded_words - set(_WORD_VALUES)
        if unknown:
            raise KasError(f"worded amounts without a value: {sorted(unknown)}")
        self.tens_words = self._words(grammar, "WORDED_TENS_WORD")
        self.ones_words = self._words(grammar, "WORDED_UNIT_WORD")
        self.teen_words = self._words(grammar, "WORDED_TEEN_WORD")

        # unit word sequence -> (canonical symbol, mg factor or None)
        self.unit_words: dict[tuple[str, ...], tuple[str, Fraction | None]] = {}
        for alt in grammar.productions["UNIT"]:
            child = alt[0].name
            spec = grammar.units.get(child)
            for seq in grammar.enumerate_language(child):
                if spec is not None:
                    self.unit_words[seq] = (spec.symbol, spec.mg_factor)
                else:
                    self.unit_words[seq] = (" ".join(seq), None)
        self.symbol_factors: dict[str, Fraction] = {
            spec.symbol: spec.mg_factor for spec in grammar.units.values() if spec.mg_factor is not None
        }

        # comparison phrases -> operator kind, longest first
        self.op_phrases: dict[tuple[str, ...], str] = {}
        for name, kind in grammar.ops.items():
            for seq in grammar.enumerate_language(name):
                self.op_phrases[seq] = kind
        self.op_phrase_lengths = sorted({len(p) for p in self.op_phrases}, reverse=True)

        # interval vocabulary
        self.unit_class_words: dict[str, str] = {}
        for cls in _UNIT_CLASSES:
            for seq in grammar.enumerate_language(cls):
                self.unit_class_words[seq[0]] = cls
        self.general_unit_words = {
            w: c for w, c in self.unit_class_words.items() if c != "DAY"
        }
        self.determiners: dict[str, str] = {}
        for name, period in (("PAST_DETERMINER", "past"), ("PRESENT_DETERMINER", "present"),
                             ("FUTURE_DETERMINER", "future")):
            for seq in grammar.enumerate_language(name):
                self.determiners[seq[0]] = period
        self.by_indicators = self._words(grammar, "BY_INDICATOR")
        self.by_named: dict[tuple[str, ...], str] = {}
        for cls in _UNIT_CLASSES:
            by = f"BY_{cls}"
            for alt in grammar.productions.get(by, ()):
                if len(alt) == 1 and not alt[0].is_nt:
                    self.by_named[alt[0].tokens] = cls

        # frequency vocabulary
        self.per_phrases = sorted(grammar.enumerate_language("PER_INDICATOR"), key=len, reverse=True)
        self.freq_indicator_phrases = sorted(
            grammar.enumerate_language("FREQUENCY_INDICATOR"), key=len, reverse=True
        )

    @staticmethod
    def _words(grammar: Grammar, name: str) -> set[str]:
        return {seq[0] for seq in grammar.enumerate_language(name)}

    def operator_phrases(self, kind: str) -> frozenset[str]:
        return frozenset(" ".join(p) for p, k in self.op_phrases.items() if k == kind)


def build_tables(grammar: Grammar) -> RuleTables:
    return RuleTables(grammar)


# ---------------------------------------------------------------------------
# Amounts


def _try_amount(tables: RuleTables, toks: list[str], at: int) -> tuple[Quantity, int] | None:
    """Greedy longest amount starting exactly at ``at``; None if absent."""
    n = len(toks)
    if at >= n:
        return None
    tok = toks[at]
    if tok.isdigit():
        return Quantity(Fraction(int(tok)), (tok,), worded=False), 1
    head, dot, tail = tok.partition(".")
    if dot and head.isdigit() and tail.isdigit():
        return Quantity(Fraction(tok), (tok,), worded=False), 1

    best: tuple[int, int] | None = None  # (consumed, value)

    def consider(consumed: int, value: int) -> None:
        nonlocal best
        if best is None or consumed > best[0]:
            best = (consumed, value)

    if tok in tables.worded_words:
        consider(1, _WORD_VALUES[tok])
    if tok in tables.tens_words and at + 1 < n and toks[at + 1] in tables.ones_words:
        consider(2, _WORD_VALUES[tok] + _WORD_VALUES[toks[at + 1]])

    # hundred forms: [a|one] hundred [and] [sub]
    j = at
    if tok in ("a", "one") and at + 1 < n and toks[at + 1] == "hundred":
        j = at + 2
    elif tok == "hundred":
        j = at + 1
    else:
        j = -1
    if j > 0:
        consider(j - at, 100)
        k = j + 1 if j < n and toks[j] == "and" else j
        sub = None
        if k < n and toks[k] in tables.tens_words and k + 1 < n and toks[k + 1] in tables.ones_words:
            sub = (_WORD_VALUES[toks[k]] + _WORD_VALUES[toks[k + 1]], k + 2)
        elif k < n and (toks[k] in tables.ones_words or toks[k] in tables.teen_words
                        or toks[k] in tables.tens_words):
            sub = (_WORD_VALUES[toks[k]], k + 1)
        if sub is not None:
            consider(sub[1] - at, 100 + sub[0])

    if best is None:
        return None
    consumed, value = best
    return Quantity(Fraction(value), tuple(toks[at : at + consumed]), worded=True), consumed


def parse_amount(tables: RuleTables, tokens) -> tuple[Quantity, int]:
    """Parse a numeral, decimal, or worded amount at the head of ``tokens``."""
    toks = [t if isinstance(t, str) else t.norm for t in tokens]
    if not toks:
        raise AmountParseError("no tokens")
    got = _try_amount(tables, toks, 0)
    if got is None:
        raise AmountParseError(f"no amount at {toks[0]!r}")
    return got


# ---------------------------------------------------------------------------
# Dosage


def _match_qualifier(tables: RuleTables, toks: list[str], at: int) -> tuple[str, int] | None:
    """Comparison phrase with optional a/an prefix and optional trailing 'than'."""
    n = len(toks)
    for start in (at + 1, at) if at < n and toks[at] in ("a", "an") else (at,):
        for length in tables.op_phrase_lengths:
            phrase = tuple(toks[start : start + length])
            if len(phrase) != length:
                continue
            kind = tables.op_phrases.get(phrase)
            if kind is None:
                continue
            end = start + length
            if end < n and toks[end] == "than":
                end += 1
            return _OP_QUALIFIER[kind], end
    return None


def _match_unit(tables: RuleTables, toks: list[str], at: int) -> tuple[str, Fraction | None, int] | None:
    for length in (2, 1):
        seq = tuple(toks[at : at + length])
        if len(seq) == length and seq in tables.unit_words:
            sym, factor = tables.unit_words[seq]
            return sym, factor, at + length
    return None


def match_dosage(tables: RuleTables, tokens, at: int) -> DosageMention | None:
    toks = [t if isinstance(t, str) else t.norm for t in tokens]
    if not 0 <= at < len(toks):
        return None
    qualifier = QUAL_EXACT
    i = at
    q = _match_qualifier(tables, toks, at)
    if q is not None:
        qualifier, i = q

    got = _try_amount(tables, toks, i)
    if got is None:
        if q is None:
            return None
        # qualifier with no amount: retry treating the phrase as plain text
        qualifier, i = QUAL_EXACT, at
        got = _try_amount(tables, toks, i)
        if got is None:
            return None
    quantity, consumed = got
    j = i + consumed

    # hyphenated range "1-5 grams": keep the upper bound, approximately
    if (not quantity.worded and j + 1 < len(toks) and toks[j] == "-" and toks[j + 1].replace(".", "", 1).isdigit()):
        upper = _try_amount(tables, toks, j + 1)
        if upper is not None and _match_unit(tables, toks, j + 1 + upper[1]) is not None:
            quantity = Quantity(upper[0].value, tuple(toks[i : j + 1 + upper[1]]), worded=False)
            qualifier = QUAL_APPROX
            j = j + 1 + upper[1]

    unit = _match_unit(tables, toks, j)
    if unit is None:
        return None
    symbol, factor, end = unit
    normalized = quantity.value * factor if factor is not None else None
    return DosageMention(
        quantity=quantity, unit=symbol, normalized_mg=normalized,
        qualifier=qualifier, first=at, last=end - 1,
    )


def satisfies(tables: RuleTables, mention: DosageMention, constraint: DosageConstraint) -> bool:
    """Compare a corpus mention against a query constraint, in milligrams.

    A mention qualified 'more' satisfies a strict > at equality (and 'less'
    symmetrically for <); non-convertible units never satisfy.
    """
    if mention.normalized_mg is None:
        return False
    v = mention.normalized_mg
    t = constraint.threshold_mg(tables)
    q = mention.qualifier
    op = constraint.operator
    if op == "gt":
        return v > t or (v == t and q == QUAL_MORE)
    if op == "lt":
        return v < t or (v == t and q == QUAL_LESS)
    if op == "ge":
        return v > t or (v == t and q != QUAL_LESS)
    if op == "le":
        return v < t or (v == t and q != QUAL_MORE)
    if op == "eq":
        return v == t and q not in (QUAL_MORE, QUAL_LESS)
    raise QueryError(f"unknown operator {op!r}")


_SYMBOL_OPS = [(">=", "ge"), ("<=", "le"), (">", "gt"), ("<", "lt"), ("=", "eq"), ("~", "approx")]


def parse_dosage_constraint(tables: RuleTables, text: str) -> DosageConstraint:
    """Parse a query-side constraint like ">4mg", "at least ten milligrams"."""
    raw = text.strip()
    op = None
    for sym, kind in _SYMBOL_OPS:
        if raw.startswith(sym):
            op = kind
            raw = raw[len(sym):]
            break
    toks = list(norm_tuple(raw))
    i = 0
    if op is None:
        for length in tables.op_phrase_lengths:
            kind = tables.op_phrases.get(tuple(toks[:length]))
            if kind is not None:
                op = kind
                i = length
                if i < len(toks) and toks[i] == "than":
                    i += 1
                break
    if op is None or op == "approx":
        op = "eq"
    got = _try_amount(tables, toks, i)
    if got is None:
        raise QueryError(f"constraint {text!r}: no amount")
    quantity, consumed = got
    unit = _match_unit(tables, toks, i + consumed)
    if unit is None:
        raise QueryError(f"constraint {text!r}: no unit")
    symbol, factor, end = unit
    if end != len(toks):
        raise QueryError(f"constraint {text!r}: trailing tokens {toks[end:]}")
    if factor is None:
        raise QueryError(f"constraint {text!r}: unit {symbol!r} is not mass-convertible")
    return DosageConstraint(operator=op, threshold=quantity, unit=symbol)


# ---------------------------------------------------------------------------
# Interval


def match_interval(tables: RuleTables, tokens, at: int) -> IntervalMention | None:
    toks = [t if isinstance(t, str) else t.norm for t in tokens]
    n = len(toks)
    if not 0 <= at < n:
        return None
    candidates: list[IntervalMention] = []

    # "a day", "every night", "per hour"
    if toks[at] in tables.by_indicators and at + 1 < n and toks[at + 1] in tables.unit_class_words:
        candidates.append(IntervalMention(
            kind="by-unit", amount=None, unit_class=tables.unit_class_words[toks[at + 1]],
            period=None, first=at, last=at + 1,
        ))
    # "daily", "bi-weekly"
    for seq, cls in tables.by_named.items():
        if tuple(toks[at : at + len(seq)]) == seq:
            candidates.append(IntervalMention(
                kind="by-unit", amount=None, unit_class=cls, period=None,
                first=at, last=at + len(seq) - 1,
            ))

    # [determiner] [amount] unit [determiner], at least one optional present
    i = at
    dets: list[str] = []
    lead = toks[i] in tables.determiners
    if lead:
        dets.append(tables.determiners[toks[i]])
        i += 1
    got = _try_amount(tables, toks, i)
    amount = None
    if got is not None:
        amount = got[0]
        i += got[1]
    if i < n and toks[i] in tables.general_unit_words:
        cls = tables.general_unit_words[toks[i]]
        last = i
        if i + 1 < n and toks[i + 1] in tables.determiners:
            dets.append(tables.determiners[toks[i + 1]])
            last = i + 1
        if amount is not None or dets:
            family = "time" if cls in _TIME_CLASSES else "duration"
            if amount is None:
                if lead and last > i:
                    kind = f"period-{family}-period"
                elif lead:
                    kind = f"period-{family}"
                else:
                    kind = f"{family}-period"
            else:
                if lead:
                    kind = f"period-amount-{family}"
                elif last > i:
                    kind = f"amount-{family}-period"
                else:
                    kind = f"amount-{family}"
            candidates.append(IntervalMention(
                kind=kind, amount=amount, unit_class=cls,
                period=dets[-1] if dets else None, first=at, last=last,
            ))

    if not candidates:
        return None
    return max(candidates, key=lambda m: m.last)


# ---------------------------------------------------------------------------
# Frequency


def match_frequency(tables: RuleTables, tokens, at: int) -> FrequencyMention | None:
    toks = [t if isinstance(t, str) else t.norm for t in tokens]
    n = len(toks)
    if not 0 <= at < n:
        return None
    amount = None
    i = at
    got = _try_amount(tables, toks, i)
    if got is not None:
        amount = got[0]
        i += got[1]

    best: FrequencyMention | None = None

    def consider(m: FrequencyMention) -> None:
        nonlocal best
        if best is None or m.last > best.last:
            best = m

    for seq, cls in tables.by_named.items():
        if tuple(toks[i : i + len(seq)]) == seq:
            consider(FrequencyMention(amount=amount, per_unit=cls, first=at, last=i + len(seq) - 1))
    for phrase in tables.per_phrases:
        if tuple(toks[i : i + len(phrase)]) != phrase:
            continue
        j = i + len(phrase)
        if j < n and toks[j] in tables.unit_class_words:
            consider(FrequencyMention(
                amount=amount, per_unit=tables.unit_class_words[toks[j]], first=at, last=j,
            ))
    if amount is not None:
        for phrase in tables.freq_indicator_phrases:
            if tuple(toks[i : i + len(phrase)]) == phrase:
                consider(FrequencyMention(amount=amount, per_unit=None, first=at, last=i + len(phrase) - 1))
                break
    return best
