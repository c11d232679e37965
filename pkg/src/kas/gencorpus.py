"""Deterministic synthetic corpus generator.

Documents are assembled token-by-token from curated vocabulary pools so the
annotator finds exactly the planted pattern instances and nothing else: the
filler vocabulary matches no class, slot terms only appear inside their slot,
and inter-slot gaps stay within each pattern's window. Ground truth (planted
counts, and the filter trace for the scenario fixture) is recorded alongside
the corpus.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

# Verified class-free filler (tests assert no class matches any of these).
FILLER = [
    "the", "was", "taking", "went", "to", "from", "with", "and", "then",
    "into", "some", "stuff", "thing", "things", "post", "forum", "talk",
    "said", "told", "folks", "kinda", "sorta", "totally", "honestly",
    "basically", "anyway", "still", "also", "just", "maybe", "started",
    "tried", "using", "usin", "gettin", "got", "doc", "bro", "dude",
    "man", "yeah", "lol", "idk", "tbh", "okay", "tho", "on",
]

BUP_SURFACES = ["subs", "sub", "subutex", "suboxone", "buprenorphine", "subbies",
                "zubsolv", "temgesic", "probuphine", "buprenex"]
OTHER_ENTITIES = ["vicodin", "vike", "vikes", "vicos", "heroin", "dope", "smack",
                  "skag", "junk", "oxycontin", "oxy", "oxys", "oc", "kickers",
                  "methadone", "methadose", "dolophine", "amidone", "loperamide",
                  "imodium", "lope", "lopes", "adderall", "addy", "addys"]
PERSONAL_PRONOUNS = ["i", "me", "you", "he", "she", "we", "they", "him", "her"]
OTHER_PRONOUNS = ["this", "those", "these", "what", "which"]
DOSAGE_GT4 = ["6mg", "8 mg", "12mg", "16 mg", "24mg", "32mg", "0.5 g", "500 mg",
              "ten milligrams", "twenty five mg", "about 8mgs", "more than 30mg"]
DOSAGE_LE4 = ["1mg", "2 mg", "3mg", "4mg", "4 mg", "500 mcg", "2000 mcg",
              "one mg", "two mg", "2 tablets", "3 pills", "less than 2mg"]
INTERVAL_DAY_HOUR = ["a day", "an hour", "every morning", "each night",
                     "5 hours ago", "a nite"]
INTERVAL_OTHER = ["a week", "every month", "3 weeks ago", "2 years",
                  "several months ago", "a decade"]
ROA_TERMS = ["snorted", "sniffed", "smoked", "injected", "railing"]
SENTIMENT_TERMS = ["horrible", "awful", "terrible", "hated", "nauseous",
                   "threw up", "felt pretty good", "awesome", "amazing", "luckily"]
SIDEFFECT_TERMS = ["vomiting", "chills", "bruising", "tingling", "sweating",
                   "bone pain", "chest pain", "drowsiness"]
INTENSITY_TERMS = ["excessive", "highest", "largest", "low", "lowest", "small", "average"]
EMOTION_TERMS = ["depressed", "anxiety", "rage", "excited", "relief",
                 "confused", "ashamed", "jealous"]
FREQUENCY_TERMS = ["per day", "per week", "3 times a day", "twice daily", "5 per min"]
DRUGFORM_TERMS = ["powder", "pills", "tablets", "syrup", "capsules"]

_SLOT_POOLS = {
    "ENTITY": BUP_SURFACES + OTHER_ENTITIES,
    "PRONOUN": PERSONAL_PRONOUNS + OTHER_PRONOUNS,
    "DOSAGE": DOSAGE_GT4 + DOSAGE_LE4,
    "INTERVAL": INTERVAL_DAY_HOUR + INTERVAL_OTHER,
    "ROA": ROA_TERMS,
    "SENTIMENT": SENTIMENT_TERMS,
    "SIDEFFECT": SIDEFFECT_TERMS,
    "INTENSITY": INTENSITY_TERMS,
    "EMOTION": EMOTION_TERMS,
    "FREQUENCY": FREQUENCY_TERMS,
    "DRUGFORM": DRUGFORM_TERMS,
}

_PATTERN_CLASSES = {
    "EPDI": ("ENTITY", "PRONOUN", "DOSAGE", "INTERVAL"),
    "EPDN": ("ENTITY", "PRONOUN", "DOSAGE", "INTENSITY"),
    "EPS": ("ENTITY", "PRONOUN", "SENTIMENT"),
    "ERD": ("ENTITY", "ROA", "DOSAGE"),
    "EIS": ("ENTITY", "INTERVAL", "SIDEFFECT"),
    "EDF": ("ENTITY", "DOSAGE", "FREQUENCY"),
    "EPE": ("ENTITY", "PRONOUN", "EMOTION"),
    "EFD": ("ENTITY", "DRUGFORM", "DOSAGE"),
}
_PATTERN_GAPS = {"ERD": (0, 4)}

SCENARIO1_TRACE = [518, 97, 90, 40, 21]


def _doc_text(rng: random.Random, slot_texts: list[str], gaps: tuple[int, ...]) -> str:
    words: list[str] = []
    for _ in range(rng.randint(0, 3)):
        words.append(rng.choice(FILLER))
    for i, slot in enumerate(slot_texts):
        if i > 0:
            for _ in range(rng.randint(0, gaps[i - 1])):
                words.append(rng.choice(FILLER))
        words.append(slot)
    for _ in range(rng.randint(0, 3)):
        words.append(rng.choice(FILLER))
    return " ".join(words)


def _filler_doc(rng: random.Random) -> str:
    return " ".join(rng.choice(FILLER) for _ in range(rng.randint(4, 12)))


def generate_random(seed: int, n_docs: int) -> tuple[list[dict], dict]:
    """Corpus with one planted pattern instance in ~80% of documents."""
    rng = random.Random(seed)
    pattern_ids = sorted(_PATTERN_CLASSES)
    counts = {pid: 0 for pid in pattern_ids}
    docs = []
    for i in range(n_docs):
        doc_id = f"d{i + 1:06d}"
        if rng.random() < 0.8:
            pid = rng.choice(pattern_ids)
            classes = _PATTERN_CLASSES[pid]
            gaps = _PATTERN_GAPS.get(pid, tuple(4 for _ in classes[1:]))
            slots = [rng.choice(_SLOT_POOLS[c]) for c in classes]
            text = _doc_text(rng, slots, gaps)
            counts[pid] += 1
        else:
            text = _filler_doc(rng)
        docs.append({"id": doc_id, "source": "synthetic", "text": text})
    truth = {"seed": seed, "docs": n_docs, "pattern_counts": counts}
    return docs, truth


def generate_scenario1(seed: int) -> tuple[list[dict], dict]:
    """Corpus whose EPDI filter trace is exactly 518 / 97 / 90 / 40 / 21."""
    rng = random.Random(seed)
    gaps = (4, 4, 4)
    specs: list[tuple[str, str, str, str]] = []

    # 21 hits: known entity, personal pronoun, >4mg, day/hour interval
    hit_surfaces = ["subs"] * 12 + ["sub"] * 2 + ["subutex"] * 2 + ["suboxone"] * 3 + ["buprenorphine"] * 2
    for surface in hit_surfaces:
        specs.append((surface, rng.choice(PERSONAL_PRONOUNS), rng.choice(DOSAGE_GT4),
                      rng.choice(INTERVAL_DAY_HOUR)))
    # 19 drop at the interval filter
    for _ in range(19):
        specs.append((rng.choice(BUP_SURFACES), rng.choice(PERSONAL_PRONOUNS),
                      rng.choice(DOSAGE_GT4), rng.choice(INTERVAL_OTHER)))
    # 50 drop at the dosage filter
    for _ in range(50):
        specs.append((rng.choice(BUP_SURFACES), rng.choice(PERSONAL_PRONOUNS),
                      rng.choice(DOSAGE_LE4), rng.choice(INTERVAL_DAY_HOUR + INTERVAL_OTHER)))
    # 7 drop at the pronoun filter
    for _ in range(7):
        specs.append((rng.choice(BUP_SURFACES), rng.choice(OTHER_PRONOUNS),
                      rng.choice(DOSAGE_GT4 + DOSAGE_LE4),
                      rng.choice(INTERVAL_DAY_HOUR + INTERVAL_OTHER)))
    # 421 drop at the entity filter
    for _ in range(421):
        specs.append((rng.choice(OTHER_ENTITIES),
                      rng.choice(PERSONAL_PRONOUNS + OTHER_PRONOUNS),
                      rng.choice(DOSAGE_GT4 + DOSAGE_LE4),
                      rng.choice(INTERVAL_DAY_HOUR + INTERVAL_OTHER)))

    texts = [_doc_text(rng, list(s), gaps) for s in specs]
    texts.extend(_filler_doc(rng) for _ in range(82))
    rng.shuffle(texts)
    docs = [
        {"id": f"d{i + 1:06d}", "source": "synthetic", "text": text}
        for i, text in enumerate(texts)
    ]
    truth = {
        "seed": seed,
        "docs": len(docs),
        "pattern_counts": {pid: 0 for pid in sorted(_PATTERN_CLASSES)} | {"EPDI": 518},
        "scenario1_trace": SCENARIO1_TRACE,
    }
    return docs, truth


def write_corpus(path: str | Path, docs: list[dict], truth: dict) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        for d in docs:
            f.write(json.dumps(d, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n")
    truth_path = path.with_suffix(path.suffix + ".truth.json")
    truth_path.write_text(
        json.dumps(truth, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return truth_path
