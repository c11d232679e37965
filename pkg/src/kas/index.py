"""Persistent positional annotation index.

Single-file container, little-endian length-prefixed sections (manifest,
documents, annotations) behind a fixed header, with a whole-file SHA-256
trailer. Documents keep their verbatim text and token offsets so snippets
and gap arithmetic need no re-tokenization. Immutable once built or loaded.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

from .annotator import Annotation, annotation_from_dict, annotation_to_dict
from .errors import IndexFormatError, KasError
from .tokens import tokenize

MAGIC = b"KASKIX\x00\x00"
FORMAT_VERSION = 1
_TRAILER = b"SHA2"


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def corpus_digest(docs: list[dict]) -> str:
    h = hashlib.sha256()
    for d in docs:
        h.update(_canonical({"id": d["id"], "source": d.get("source", ""), "text": d["text"]}).encode())
        h.update(b"\n")
    return h.hexdigest()


@dataclass
class AnnotationIndex:
    manifest: dict
    doc_order: list[str]
    docs: dict[str, dict]  # id -> {source, text, tokens: [[cs, ce], ...]}
    postings: dict[str, list[Annotation]]
    _doc_pos: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._doc_pos:
            self._doc_pos = {d: i for i, d in enumerate(self.doc_order)}

    def lookup(self, pattern_id: str) -> list[Annotation]:
        """All annotations for a pattern, in corpus order."""
        if pattern_id not in self.postings:
            raise KasError(f"unknown pattern {pattern_id!r}")
        return list(self.postings[pattern_id])

    def pattern_ids(self) -> list[str]:
        return list(self.postings)

    def doc(self, doc_id: str) -> dict:
        if doc_id not in self.docs:
            raise KasError(f"unknown document {doc_id!r}")
        return self.docs[doc_id]

    def doc_position(self, doc_id: str) -> int:
        return self._doc_pos[doc_id]


def build_index(annotations: list[Annotation], corpus_docs: list[dict],
                pattern_ids: list[str] | None = None) -> AnnotationIndex:
    """Index annotations over their corpus; validates referential integrity."""
    doc_order = [d["id"] for d in corpus_docs]
    if len(set(doc_order)) != len(doc_order):
        raise KasError("duplicate document ids in corpus")
    docs: dict[str, dict] = {}
    for d in corpus_docs:
        toks = tokenize(d["text"])
        docs[d["id"]] = {
            "source": d.get("source", ""),
            "text": d["text"],
            "tokens": [[t.char_start, t.char_end] for t in toks],
        }
    pos = {did: i for i, did in enumerate(doc_order)}

    seen_ids: set[str] = set()
    postings: dict[str, list[Annotation]] = {pid: [] for pid in (pattern_ids or [])}
    for a in annotations:
        if a.id in seen_ids:
            raise KasError(f"duplicate annotation id {a.id!r}")
        seen_ids.add(a.id)
        if a.doc not in docs:
            raise KasError(f"annotation {a.id} references unknown document {a.doc!r}")
        postings.setdefault(a.pattern, []).append(a)
    for pid in postings:
        postings[pid].sort(key=lambda a: (pos[a.doc], a.span.first, a.id))

    manifest = {
        "format_version": FORMAT_VERSION,
        "corpus_digest": corpus_digest(corpus_docs),
        "doc_count": len(doc_order),
        "patterns": {pid: len(rows) for pid, rows in postings.items()},
    }
    return AnnotationIndex(manifest=manifest, doc_order=doc_order, docs=docs, postings=postings)


# ---------------------------------------------------------------------------
# File format


def _pack_section(name: str, payload: bytes) -> bytes:
    n = name.encode()
    return struct.pack("<I", len(n)) + n + struct.pack("<Q", len(payload)) + payload


def save(index: AnnotationIndex, path: str | Path) -> None:
    annotations_blob = "\n".join(
        _canonical(annotation_to_dict(a))
        for pid in sorted(index.postings)
        for a in index.postings[pid]
    ).encode()
    body = MAGIC + struct.pack("<H", FORMAT_VERSION)
    body += _pack_section("manifest", _canonical(index.manifest).encode())
    body += _pack_section("docs", _canonical(
        {"order": index.doc_order, "docs": index.docs}
    ).encode())
    body += _pack_section("annotations", annotations_blob)
    digest = hashlib.sha256(body).digest()
    Path(path).write_bytes(body + _TRAILER + digest)


def load(path: str | Path) -> AnnotationIndex:
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 2 + len(_TRAILER) + 32:
        raise IndexFormatError(f"{path}: truncated index file")
    if raw[: len(MAGIC)] != MAGIC:
        raise IndexFormatError(f"{path}: not an index file")
    (version,) = struct.unpack_from("<H", raw, len(MAGIC))
    if version > FORMAT_VERSION:
        raise IndexFormatError(
            f"{path}: format version {version} is newer than supported {FORMAT_VERSION}"
        )
    body, trailer = raw[:-36], raw[-36:]
    if trailer[:4] != _TRAILER or hashlib.sha256(body).digest() != trailer[4:]:
        raise IndexFormatError(f"{path}: digest mismatch, file is corrupt")

    sections: dict[str, bytes] = {}
    off = len(MAGIC) + 2
    while off < len(body):
        (name_len,) = struct.unpack_from("<I", body, off)
        off += 4
        name = body[off : off + name_len].decode()
        off += name_len
        (payload_len,) = struct.unpack_from("<Q", body, off)
        off += 8
        sections[name] = body[off : off + payload_len]
        off += payload_len
    for required in ("manifest", "docs", "annotations"):
        if required not in sections:
            raise IndexFormatError(f"{path}: missing section {required!r}")

    manifest = json.loads(sections["manifest"])
    doc_blob = json.loads(sections["docs"])
    doc_order, docs = doc_blob["order"], doc_blob["docs"]
    pos = {did: i for i, did in enumerate(doc_order)}
    postings: dict[str, list[Annotation]] = {pid: [] for pid in manifest["patterns"]}
    blob = sections["annotations"].decode()
    for line in blob.splitlines():
        if line:
            a = annotation_from_dict(json.loads(line))
            postings.setdefault(a.pattern, []).append(a)
    for pid, rows in postings.items():
        rows.sort(key=lambda a: (pos[a.doc], a.span.first, a.id))
        if manifest["patterns"].get(pid) != len(rows):
            raise IndexFormatError(f"{path}: manifest count mismatch for pattern {pid}")
    return AnnotationIndex(manifest=manifest, doc_order=doc_order, docs=docs, postings=postings)
