"""Two-level grammar: loading, validation, enumeration, and recognition.

The grammar file format (``.kag``) is line-oriented BNF. One production per
line, ``LHS -> alt | alt``, nonterminals written ``<NAME>``, terminals bare
or double-quoted. Directives:

    @class <NAME>              template class (start-symbol alphabet)
    @generative <NAME> <rule>  infinite language backed by a primitive rule
    @bind <NAME> <source>      terms come from an external knowledge source
    @pattern <id> <NAME>...    registered template pattern (start production)
    @unit <NAME> <sym> <factor>  unit nonterminal with mg conversion factor
    @op <NAME> <kind>          comparison-operator nonterminal (gt/lt/ge/le/eq/approx)
    @standalone <NAME>         exempt from start-reachability check
    # comment

Terminals are normalized through the shared tokenizer, so matching is
case-insensitive and multi-word terminals are token sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import GrammarError
from .tokens import norm_tuple

START = "TEMPLATE_PATTERN"

NT_KIND_CLASS = "nonterminal-NS"
NT_KIND_SUPPORT = "nonterminal-NP"

# Primitive rules backing @generative nonterminals. Each decides whether a
# single token belongs to the language; "range" is a query-side construct
# and never matches corpus tokens; "dash" is the hyphen token the tokenizer
# keeps between digits.
_GENERATIVE_RULES = {"nat", "real", "range", "dash"}


def _rule_accepts_token(rule: str, tok: str) -> bool:
    if rule == "nat":
        return tok.isdigit()
    if rule == "real":
        if tok.isdigit():
            return True
        head, dot, tail = tok.partition(".")
        return bool(dot) and head.isdigit() and tail.isdigit()
    if rule == "dash":
        return tok == "-"
    return False


@dataclass(frozen=True)
class Sym:
    """One RHS symbol: a nonterminal reference or a terminal token sequence."""

    is_nt: bool
    name: str = ""
    tokens: tuple[str, ...] = ()

    @staticmethod
    def nt(name: str) -> "Sym":
        return Sym(is_nt=True, name=name)

    @staticmethod
    def term(tokens: tuple[str, ...]) -> "Sym":
        return Sym(is_nt=False, tokens=tokens)


Alternative = tuple[Sym, ...]


@dataclass(frozen=True)
class TemplatePattern:
    id: str
    classes: tuple[str, ...]
    gaps: tuple[int, ...]  # max gap between consecutive classes


@dataclass(frozen=True)
class UnitSpec:
    nonterminal: str
    symbol: str
    mg_factor: Fraction | None  # None: recognized but not mass-convertible


@dataclass
class Grammar:
    """Immutable after load; safe for shared concurrent reads."""

    classes: tuple[str, ...]
    productions: dict[str, list[Alternative]]
    production_order: list[str]
    generative: dict[str, str]
    binds: dict[str, str]
    units: dict[str, UnitSpec]
    ops: dict[str, str]
    patterns: dict[str, TemplatePattern]
    pattern_order: list[str]
    standalone: frozenset[str]
    _reach_cache: dict[str, frozenset[str]] = field(default_factory=dict, repr=False, compare=False)
    _enum_cache: dict[str, frozenset[tuple[str, ...]]] = field(default_factory=dict, repr=False, compare=False)

    # -- structure ---------------------------------------------------------

    def nonterminals(self) -> set[str]:
        names = set(self.productions)
        names.update(self.generative)
        names.update(self.binds)
        names.update(self.classes)
        names.update(self.standalone)
        return names

    def kind_of(self, name: str) -> str:
        return NT_KIND_CLASS if name in self.classes else NT_KIND_SUPPORT

    def terminals(self) -> set[tuple[str, ...]]:
        out: set[tuple[str, ...]] = set()
        for alts in self.productions.values():
            for alt in alts:
                out.update(sym.tokens for sym in alt if not sym.is_nt)
        return out

    def reachable(self, name: str) -> frozenset[str]:
        """All nonterminals reachable from ``name`` (inclusive)."""
        cached = self._reach_cache.get(name)
        if cached is not None:
            return cached
        seen: set[str] = set()
        stack = [name]
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            for alt in self.productions.get(cur, ()):
                stack.extend(sym.name for sym in alt if sym.is_nt)
        result = frozenset(seen)
        self._reach_cache[name] = result
        return result

    def classes_reaching(self, name: str) -> list[str]:
        return [c for c in self.classes if name in self.reachable(c)]

    def is_generative(self, name: str) -> bool:
        return any(nt in self.generative for nt in self.reachable(name))

    # -- language ----------------------------------------------------------

    def enumerate_language(self, name: str, bound: int = 10_000) -> frozenset[tuple[str, ...]]:
        """Exact token-tuple language of a finite nonterminal."""
        if name not in self.nonterminals():
            raise GrammarError(f"unknown nonterminal {name!r}")
        if self.is_generative(name):
            raise GrammarError(f"{name} has an infinite language; use recognizer()")
        if name not in self.productions:
            raise GrammarError(f"{name} has no productions (terms come from a knowledge source)")
        result = self._enumerate(name)
        if len(result) > bound:
            raise GrammarError(f"language of {name} exceeds bound {bound}")
        return result

    def _enumerate(self, name: str) -> frozenset[tuple[str, ...]]:
        cached = self._enum_cache.get(name)
        if cached is not None:
            return cached
        strings: set[tuple[str, ...]] = set()
        for alt in self.productions[name]:
            partial: list[tuple[str, ...]] = [()]
            for sym in alt:
                sub = [sym.tokens] if not sym.is_nt else sorted(self._enumerate(sym.name))
                partial = [p + s for p in partial for s in sub]
            strings.update(partial)
        result = frozenset(strings)
        self._enum_cache[name] = result
        return result

    def recognizer(self, name: str) -> "Recognizer":
        if name not in self.nonterminals():
            raise GrammarError(f"unknown nonterminal {name!r}")
        return Recognizer(self, name)

    # -- serialization -----------------------------------------------------

    def serialize(self) -> str:
        lines: list[str] = []
        for c in self.classes:
            lines.append(f"@class {c}")
        for name, rule in sorted(self.generative.items()):
            lines.append(f"@generative {name} {rule}")
        for name, src in sorted(self.binds.items()):
            lines.append(f"@bind {name} {src}")
        for name, spec in sorted(self.units.items()):
            factor = "-" if spec.mg_factor is None else str(spec.mg_factor)
            lines.append(f"@unit {name} {spec.symbol} {factor}")
        for name, kind in sorted(self.ops.items()):
            lines.append(f"@op {name} {kind}")
        for name in sorted(self.standalone):
            lines.append(f"@standalone {name}")
        for pid in self.pattern_order:
            pat = self.patterns[pid]
            gaps = ",".join(str(g) for g in pat.gaps)
            lines.append(f"@pattern {pid} {' '.join(pat.classes)} gaps={gaps}")
        for name in self.production_order:
            alts = " | ".join(self._fmt_alt(alt) for alt in self.productions[name])
            lines.append(f"<{name}> -> {alts}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def _fmt_alt(alt: Alternative) -> str:
        import re

        parts = []
        for sym in alt:
            if sym.is_nt:
                parts.append(f"<{sym.name}>")
            elif len(sym.tokens) == 1 and re.fullmatch(r"[\w./-]+", sym.tokens[0]):
                parts.append(sym.tokens[0])
            else:
                parts.append('"' + " ".join(sym.tokens) + '"')
        return " ".join(parts)

    def structure(self):
        """Comparable structural view (round-trip identity checks)."""
        return (
            self.classes,
            {n: tuple(a) for n, a in self.productions.items()},
            dict(self.generative),
            dict(self.binds),
            dict(self.units),
            dict(self.ops),
            dict(self.patterns),
            set(self.standalone),
        )


class Recognizer:
    """Decides membership of a token sequence in the language of one nonterminal."""

    def __init__(self, grammar: Grammar, name: str):
        self.grammar = grammar
        self.name = name

    def accepts(self, tokens: tuple[str, ...] | list[str]) -> bool:
        toks = tuple(tokens)
        memo: dict[tuple[str, int], frozenset[int]] = {}
        return len(toks) in self._derive(self.name, toks, 0, memo)

    __call__ = accepts

    def _derive(self, name: str, toks: tuple[str, ...], i: int, memo) -> frozenset[int]:
        key = (name, i)
        cached = memo.get(key)
        if cached is not None:
            return cached
        memo[key] = frozenset()  # cycle guard; grammar has no productive cycles
        ends: set[int] = set()
        rule = self.grammar.generative.get(name)
        if rule is not None:
            if i < len(toks) and _rule_accepts_token(rule, toks[i]):
                ends.add(i + 1)
        for alt in self.grammar.productions.get(name, ()):
            for end in self._derive_seq(alt, 0, toks, i, memo):
                ends.add(end)
        result = frozenset(ends)
        memo[key] = result
        return result

    def _derive_seq(self, alt: Alternative, k: int, toks, i: int, memo) -> frozenset[int]:
        if k == len(alt):
            return frozenset({i})
        sym = alt[k]
        ends: set[int] = set()
        if sym.is_nt:
            mids = self._derive(sym.name, toks, i, memo)
        else:
            n = len(sym.tokens)
            mids = frozenset({i + n}) if toks[i : i + n] == sym.tokens else frozenset()
        for mid in mids:
            ends.update(self._derive_seq(alt, k + 1, toks, mid, memo))
        return frozenset(ends)


@dataclass(frozen=True)
class LanguageResult:
    finite: bool
    strings: frozenset[str] | None
    recognizer: Recognizer | None


def language_of(grammar: Grammar, name: str, bound: int = 10_000) -> LanguageResult:
    """Enumerate a finite nonterminal, or hand back a recognizer for an infinite one."""
    if name not in grammar.nonterminals():
        raise GrammarError(f"unknown nonterminal {name!r}")
    if grammar.is_generative(name):
        return LanguageResult(finite=False, strings=None, recognizer=grammar.recognizer(name))
    strings = frozenset(" ".join(t) for t in grammar.enumerate_language(name, bound))
    return LanguageResult(finite=True, strings=strings, recognizer=grammar.recognizer(name))


# ---------------------------------------------------------------------------
# Loading


def _strip_comment(line: str) -> str:
    out = []
    in_quote = False
    for ch in line:
        if ch == '"':
            in_quote = not in_quote
        if ch == "#" and not in_quote:
            break
        out.append(ch)
    return "".join(out).rstrip()


def _split_alternatives(body: str, lineno: int) -> list[str]:
    alts: list[str] = []
    cur: list[str] = []
    in_quote = False
    for ch in body:
        if ch == '"':
            in_quote = not in_quote
            cur.append(ch)
        elif ch == "|" and not in_quote:
            alts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if in_quote:
        raise GrammarError("unterminated quote", lineno)
    alts.append("".join(cur))
    return alts


def _parse_symbols(alt_text: str, lineno: int) -> Alternative:
    syms: list[Sym] = []
    i = 0
    text = alt_text.strip()
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "<":
            j = text.find(">", i)
            if j < 0:
                raise GrammarError("unterminated nonterminal reference", lineno, i + 1)
            syms.append(Sym.nt(text[i + 1 : j]))
            i = j + 1
        elif ch == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise GrammarError("unterminated quoted terminal", lineno, i + 1)
            toks = norm_tuple(text[i + 1 : j])
            if not toks:
                raise GrammarError("terminal normalizes to nothing", lineno, i + 1)
            syms.append(Sym.term(toks))
            i = j + 1
        else:
            j = i
            while j < len(text) and not text[j].isspace():
                j += 1
            word = text[i:j]
            toks = norm_tuple(word)
            if not toks:
                raise GrammarError(f"terminal {word!r} normalizes to nothing", lineno, i + 1)
            syms.append(Sym.term(toks))
            i = j
    if not syms:
        raise GrammarError("empty alternative", lineno)
    return tuple(syms)


def load_grammar(source: str) -> Grammar:
    """Parse and validate a grammar file; raises GrammarError on any defect."""
    classes: list[str] = []
    productions: dict[str, list[Alternative]] = {}
    production_order: list[str] = []
    generative: dict[str, str] = {}
    binds: dict[str, str] = {}
    units: dict[str, UnitSpec] = {}
    ops: dict[str, str] = {}
    patterns: dict[str, TemplatePattern] = {}
    pattern_order: list[str] = []
    standalone: set[str] = set()
    pattern_gap_default = 4

    raw_patterns: list[tuple[int, list[str]]] = []

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("@"):
            parts = line.split()
            directive = parts[0]
            if directive == "@class":
                if len(parts) != 2:
                    raise GrammarError("@class takes one name", lineno)
                if parts[1] in classes:
                    raise GrammarError(f"duplicate @class {parts[1]}", lineno)
                classes.append(parts[1])
            elif directive == "@generative":
                if len(parts) != 3:
                    raise GrammarError("@generative takes name and rule id", lineno)
                if parts[2] not in _GENERATIVE_RULES:
                    raise GrammarError(f"unknown generative rule {parts[2]!r}", lineno)
                generative[parts[1]] = parts[2]
            elif directive == "@bind":
                if len(parts) != 3 or parts[2] not in ("ontology", "lexicon", "lexico-ontology"):
                    raise GrammarError("@bind takes name and ontology|lexicon|lexico-ontology", lineno)
                binds[parts[1]] = parts[2]
            elif directive == "@unit":
                if len(parts) != 4:
                    raise GrammarError("@unit takes name, symbol, factor", lineno)
                factor = None if parts[3] == "-" else Fraction(parts[3])
                units[parts[1]] = UnitSpec(parts[1], parts[2], factor)
            elif directive == "@op":
                if len(parts) != 3 or parts[2] not in ("gt", "lt", "ge", "le", "eq", "approx"):
                    raise GrammarError("@op takes name and gt|lt|ge|le|eq|approx", lineno)
                ops[parts[1]] = parts[2]
            elif directive == "@standalone":
                if len(parts) != 2:
                    raise GrammarError("@standalone takes one name", lineno)
                standalone.add(parts[1])
            elif directive == "@pattern":
                if len(parts) < 3:
                    raise GrammarError("@pattern takes an id and class names", lineno)
                raw_patterns.append((lineno, parts[1:]))
            else:
                raise GrammarError(f"unknown directive {directive}", lineno)
            continue
        if not line.startswith("<"):
            raise GrammarError("expected directive or production", lineno, 1)
        close = line.find(">")
        if close < 0:
            raise GrammarError("unterminated nonterminal name", lineno, 1)
        lhs = line[1:close]
        rest = line[close + 1 :].lstrip()
        merge = rest.startswith("->+")
        if merge:
            rest = rest[3:]
        elif rest.startswith("->"):
            rest = rest[2:]
        else:
            raise GrammarError("expected '->' after LHS", lineno, close + 2)
        alts = [_parse_symbols(a, lineno) for a in _split_alternatives(rest, lineno)]
        if lhs in productions and not merge:
            raise GrammarError(f"redefinition of <{lhs}> (use '->+' to merge)", lineno)
        if lhs not in productions:
            productions[lhs] = []
            production_order.append(lhs)
        productions[lhs].extend(alts)

    # Resolve @pattern directives now that classes are known.
    for lineno, parts in raw_patterns:
        pid = parts[0]
        names = parts[1:]
        gaps: tuple[int, ...] | None = None
        if names and names[-1].startswith("gaps="):
            gaps = tuple(int(x) for x in names[-1][5:].split(","))
            names = names[:-1]
        if pid in patterns:
            raise GrammarError(f"duplicate pattern id {pid}", lineno)
        if not 2 <= len(names) <= 6:
            raise GrammarError(f"pattern {pid} must have 2-6 classes", lineno)
        for n in names:
            if n not in classes:
                raise GrammarError(f"pattern {pid} uses non-class symbol {n}", lineno)
        if gaps is None:
            gaps = tuple(pattern_gap_default for _ in range(len(names) - 1))
        if len(gaps) != len(names) - 1:
            raise GrammarError(f"pattern {pid} needs {len(names) - 1} gaps", lineno)
        seq = tuple(names)
        if any(p.classes == seq for p in patterns.values()):
            raise GrammarError(f"pattern {pid} duplicates an existing class sequence", lineno)
        patterns[pid] = TemplatePattern(pid, seq, gaps)
        pattern_order.append(pid)

    g = Grammar(
        classes=tuple(classes),
        productions=productions,
        production_order=production_order,
        generative=generative,
        binds=binds,
        units=units,
        ops=ops,
        patterns=patterns,
        pattern_order=pattern_order,
        standalone=frozenset(standalone),
    )
    _validate(g)
    return g


def _validate(g: Grammar) -> None:
    declared = g.nonterminals()
    for name, alts in g.productions.items():
        for alt in alts:
            for sym in alt:
                if sym.is_nt and sym.name not in declared:
                    raise GrammarError(f"undeclared symbol <{sym.name}> referenced from <{name}>")
    for name in g.generative:
        if name in g.productions:
            raise GrammarError(f"@generative {name} must not also have productions")
    for name, spec in g.units.items():
        if name not in declared:
            raise GrammarError(f"@unit names undeclared nonterminal {name}")
    for name in g.ops:
        if name not in declared:
            raise GrammarError(f"@op names undeclared nonterminal {name}")
    for name in g.binds:
        if name not in declared:
            raise GrammarError(f"@bind names undeclared nonterminal {name}")

    # Reachability: every nonterminal must be reachable from some registered
    # pattern class, or be marked standalone.
    reachable: set[str] = set()
    for pat in g.patterns.values():
        for c in pat.classes:
            reachable.update(g.reachable(c))
    for c in g.classes:
        reachable.update(g.reachable(c))
    unreachable = declared - reachable - g.standalone
    for name in g.standalone:
        reachable.update(g.reachable(name))
    unreachable -= reachable
    if unreachable:
        raise GrammarError(f"unreachable nonterminals: {', '.join(sorted(unreachable))}")

    # Finiteness: a production cycle not broken by a generative mark would
    # make a language infinite with no rule to recognize it.
    color: dict[str, int] = {}

    def visit(name: str, trail: list[str]) -> None:
        state = color.get(name, 0)
        if state == 1:
            cycle = trail[trail.index(name):] + [name]
            if not any(n in g.generative for n in cycle):
                raise GrammarError(f"cycle without generative mark: {' -> '.join(cycle)}")
            return
        if state == 2:
            return
        color[name] = 1
        trail.append(name)
        for alt in g.productions.get(name, ()):
            for sym in alt:
                if sym.is_nt:
                    visit(sym.name, trail)
        trail.pop()
        color[name] = 2

    for name in g.productions:
        visit(name, [])


# ---------------------------------------------------------------------------
# User query validation (Def. 2: elements range over template classes,
# their sub-nonterminals, concepts, and special terminals)


@dataclass(frozen=True)
class BoundElement:
    class_name: str
    kind: str  # class | subnonterminal | concept | constraint | terminal
    value: str
    parts: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValidatedQuery:
    pattern: TemplatePattern
    elements: tuple[BoundElement, ...]


def _candidates_for(g: Grammar, element, model) -> list[BoundElement]:
    """All (class, binding) readings of one query element."""
    if isinstance(element, dict):
        cls = element.get("class")
        kind = element.get("binding_kind", "class")
        value = element.get("value", "")
        if cls not in g.classes:
            raise QueryElementError(f"unknown template class {cls!r}")
        if kind == "class":
            return [BoundElement(cls, "class", cls)]
        if kind == "concept":
            if model is None:
                raise QueryElementError("concept binding requires a knowledge model")
            concept = model.resolve_concept(value)
            if concept is None:
                raise QueryElementError(f"unknown concept {value!r}")
            if g.binds.get(cls) != "ontology":
                raise QueryElementError(f"class {cls} is not ontology-bound")
            return [BoundElement(cls, "concept", concept.id)]
        if kind == "subnonterminal":
            parts = tuple(p.strip() for p in value.split("|") if p.strip())
            for p in parts:
                if p not in g.nonterminals():
                    raise QueryElementError(f"unknown nonterminal {p!r}")
                if p != cls and p not in g.reachable(cls):
                    raise QueryElementError(f"{p} is not derivable from {cls}")
            return [BoundElement(cls, "subnonterminal", "|".join(parts), parts)]
        if kind in ("constraint", "terminal"):
            return [BoundElement(cls, kind, value)]
        raise QueryElementError(f"unknown binding kind {kind!r}")

    text = str(element).strip()
    if not text:
        raise QueryElementError("empty query element")
    out: list[BoundElement] = []
    names = [p.strip() for p in text.split("|")]
    if all(n in g.nonterminals() for n in names):
        if len(names) == 1 and names[0] in g.classes:
            return [BoundElement(names[0], "class", names[0])]
        shared = None
        for n in names:
            owners = set(g.classes_reaching(n))
            shared = owners if shared is None else shared & owners
        for cls in sorted(shared or ()):
            out.append(BoundElement(cls, "subnonterminal", "|".join(names), tuple(names)))
        if out:
            return out
    if model is not None:
        concept = model.resolve_concept(text)
        if concept is not None:
            for cls, src in g.binds.items():
                if src == "ontology" and cls in g.classes:
                    out.append(BoundElement(cls, "concept", concept.id))
    toks = norm_tuple(text)
    if toks:
        for cls in g.classes:
            if cls in g.productions and g.recognizer(cls).accepts(toks):
                kind = "constraint" if g.is_generative(cls) else "terminal"
                out.append(BoundElement(cls, kind, text))
    if not out:
        raise QueryElementError(f"element {text!r} resolves under no template class")
    return out


class QueryElementError(GrammarError):
    pass


def validate_user_query(g: Grammar, elements, model=None) -> ValidatedQuery:
    """Bind query elements to the unique registered template pattern they instantiate."""
    if not elements:
        raise QueryElementError("no registered pattern matches an empty query")
    candidates = [_candidates_for(g, e, model) for e in elements]
    matching = [
        pat
        for pat in (g.patterns[pid] for pid in g.pattern_order)
        if len(pat.classes) == len(candidates)
        and all(any(c.class_name == cls for c in cands) for cls, cands in zip(pat.classes, candidates))
    ]
    if not matching:
        shapes = [sorted({c.class_name for c in cands}) for cands in candidates]
        raise QueryElementError(f"no registered pattern matches element classes {shapes}")
    if len(matching) > 1:
        ids = ", ".join(p.id for p in matching)
        raise QueryElementError(f"query is ambiguous between patterns: {ids}")
    pattern = matching[0]
    bound: list[BoundElement] = []
    for cls, cands in zip(pattern.classes, candidates):
        fits = [c for c in cands if c.class_name == cls]
        if len(fits) > 1:
            readings = ", ".join(f"{c.kind}:{c.value}" for c in fits)
            raise QueryElementError(f"element is ambiguous under {cls}: {readings}")
        bound.append(fits[0])
    return ValidatedQuery(pattern=pattern, elements=tuple(bound))
