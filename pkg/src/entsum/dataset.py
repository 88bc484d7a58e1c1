"""Entity descriptions, ground-truth summaries and benchmark manifests.

The on-disk inputs are deliberately small:

* description files hold one ``<subj> <pred> <obj> .`` statement per line
  (an N-Triples compatible subset, no prefixes, no multi-line literals),
* gold-summary files use the same grammar and must repeat statements of
  the description file verbatim,
* a JSON manifest ties entities, gold files and fold assignments together.

Everything is immutable after ingestion and safe to share across threads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    EmptyDescription,
    GoldNotSubset,
    GoldTooLarge,
    InvalidFold,
    InvalidManifest,
    MalformedLine,
    MissingFile,
    NoGoldForK,
    UnknownEntity,
)

RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label"


class NodeKind(Enum):
    IRI = "iri"
    BLANK = "blank"
    LITERAL = "literal"


@dataclass(frozen=True)
class Resource:
    """One RDF term: an IRI, a blank node, or a literal.

    ``raw`` holds the full IRI, the blank-node id, or the literal's lexical
    form (language tag and datatype already stripped).  ``label`` carries the
    object of an ``rdfs:label`` statement about this resource when the input
    document provided one; literals never carry labels.
    """

    kind: NodeKind
    raw: str
    label: str | None = None

    def __post_init__(self):
        if not self.raw:
            raise ValueError("resource with empty raw form")
        if self.kind is NodeKind.LITERAL and self.label is not None:
            raise ValueError("literal resources cannot carry a label")


@dataclass(frozen=True)
class Triple:
    """One statement of an entity description.

    ``val`` is the subject or object that is not the described entity.  Ids
    are assigned in document order starting at 0 and are stable for the
    lifetime of the description.
    """

    id: int
    subject: Resource
    predicate: Resource
    object: Resource
    val: Resource

    @property
    def prop(self) -> Resource:
        return self.predicate


@dataclass(frozen=True)
class GoldSummary:
    annotator: str
    triple_ids: frozenset[int]


@dataclass(frozen=True)
class EntityDescription:
    """All candidate triples of one entity plus its ground-truth summaries.

    ``gold`` maps a size budget k to the human summaries recorded for that
    budget.  Every summary references triples by id and holds at most k ids.
    """

    entity: Resource
    triples: tuple[Triple, ...]
    gold: Mapping[int, tuple[GoldSummary, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for i, t in enumerate(self.triples):
            if t.id != i:
                raise ValueError(f"triple ids must be contiguous from 0, got {t.id} at {i}")
        n = len(self.triples)
        for k, summaries in self.gold.items():
            for g in summaries:
                if len(g.triple_ids) > k:
                    raise GoldTooLarge(
                        f"{self.entity.raw}: summary by {g.annotator} has "
                        f"{len(g.triple_ids)} triples for k={k}"
                    )
                unknown = [i for i in g.triple_ids if not (0 <= i < n)]
                if unknown:
                    raise GoldNotSubset(
                        f"{self.entity.raw}: summary by {g.annotator} references "
                        f"unknown triple ids {sorted(unknown)}"
                    )


@dataclass(frozen=True)
class FoldSpec:
    index: int
    train: tuple[str, ...]
    valid: tuple[str, ...]
    test: tuple[str, ...]


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    entities: tuple[EntityDescription, ...]
    folds: tuple[FoldSpec, ...]

    def entity(self, iri: str) -> EntityDescription:
        for e in self.entities:
            if e.entity.raw == iri:
                return e
        raise UnknownEntity(iri)

    @property
    def triple_count(self) -> int:
        return sum(len(e.triples) for e in self.entities)

    @property
    def gold_count(self) -> int:
        return sum(len(gs) for e in self.entities for gs in e.gold.values())


# --------------------------------------------------------------------------
# statement-level parsing
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Term:
    kind: NodeKind
    value: str            # IRI string, blank-node id, or unescaped lexical form
    lang: str | None = None
    datatype: str | None = None

    def key(self) -> str:
        """Canonical serialization used for statement-identity matching."""
        if self.kind is NodeKind.IRI:
            return f"<{self.value}>"
        if self.kind is NodeKind.BLANK:
            return f"_:{self.value}"
        body = _escape_literal(self.value)
        if self.lang:
            return f'"{body}"@{self.lang}'
        if self.datatype:
            return f'"{body}"^^<{self.datatype}>'
        return f'"{body}"'


@dataclass(frozen=True)
class _Statement:
    line_no: int
    subject: _Term
    predicate: _Term
    object: _Term

    def key(self) -> tuple[str, str, str]:
        return (self.subject.key(), self.predicate.key(), self.object.key())


_IRI_RE = re.compile(r'<([^<>"\s]+)>')
_BNODE_RE = re.compile(r'_:([A-Za-z0-9_][A-Za-z0-9._\-]*)')
_LITERAL_RE = re.compile(
    r'"((?:[^"\\\n]|\\.)*)"(?:@([A-Za-z][A-Za-z0-9\-]*)|\^\^<([^<>"\s]+)>)?'
)

_ESCAPES = {
    "t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f",
    '"': '"', "'": "'", "\\": "\\",
}


def _unescape_literal(body: str, line_no: int) -> str:
    if "\\" not in body:
        return body
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(body):
            raise MalformedLine(line_no, "dangling escape in literal")
        nxt = body[i + 1]
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt == "u" or nxt == "U":
            width = 4 if nxt == "u" else 8
            hexpart = body[i + 2: i + 2 + width]
            if len(hexpart) != width:
                raise MalformedLine(line_no, "truncated unicode escape")
            try:
                out.append(chr(int(hexpart, 16)))
            except ValueError:
                raise MalformedLine(line_no, f"bad unicode escape \\{nxt}{hexpart}")
            i += 2 + width
        else:
            raise MalformedLine(line_no, f"unknown escape \\{nxt}")
    return "".join(out)


def _escape_literal(value: str) -> str:
    out = value.replace("\\", "\\\\").replace('"', '\\"')
    return out.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")


def _parse_term(line: str, pos: int, line_no: int) -> tuple[_Term, int]:
    if pos >= len(line):
        raise MalformedLine(line_no, "statement ended early")
    ch = line[pos]
    if ch == "<":
        m = _IRI_RE.match(line, pos)
        if not m:
            raise MalformedLine(line_no, f"bad IRI at column {pos + 1}")
        return _Term(NodeKind.IRI, m.group(1)), m.end()
    if ch == "_":
        m = _BNODE_RE.match(line, pos)
        if not m:
            raise MalformedLine(line_no, f"bad blank node at column {pos + 1}")
        return _Term(NodeKind.BLANK, m.group(1)), m.end()
    if ch == '"':
        m = _LITERAL_RE.match(line, pos)
        if not m:
            raise MalformedLine(line_no, f"bad literal at column {pos + 1}")
        value = _unescape_literal(m.group(1), line_no)
        if not value:
            raise MalformedLine(line_no, "empty literal")
        return _Term(NodeKind.LITERAL, value, lang=m.group(2), datatype=m.group(3)), m.end()
    raise MalformedLine(line_no, f"unexpected character {ch!r} at column {pos + 1}")


def _skip_ws(line: str, pos: int) -> int:
    while pos < len(line) and line[pos] in " \t":
        pos += 1
    return pos


def parse_statements(text: str) -> list[_Statement]:
    """Parse all statements of a document; blank lines and ``#`` comments skip."""
    statements = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        pos = _skip_ws(line, 0)
        subject, pos = _parse_term(line, pos, line_no)
        if subject.kind is NodeKind.LITERAL:
            raise MalformedLine(line_no, "literal in subject position")
        pos = _skip_ws(line, pos)
        predicate, pos = _parse_term(line, pos, line_no)
        if predicate.kind is not NodeKind.IRI:
            raise MalformedLine(line_no, "predicate must be an IRI")
        pos = _skip_ws(line, pos)
        obj, pos = _parse_term(line, pos, line_no)
        pos = _skip_ws(line, pos)
        if pos >= len(line) or line[pos] != ".":
            raise MalformedLine(line_no, "missing terminating '.'")
        if line[pos + 1:].strip():
            raise MalformedLine(line_no, "trailing content after '.'")
        statements.append(_Statement(line_no, subject, predicate, obj))
    return statements


def _collect_labels(statements: Iterable[_Statement]) -> dict[tuple[NodeKind, str], str]:
    # first label in document order wins
    labels: dict[tuple[NodeKind, str], str] = {}
    for st in statements:
        if st.predicate.value == RDFS_LABEL and st.object.kind is NodeKind.LITERAL:
            key = (st.subject.kind, st.subject.value)
            labels.setdefault(key, st.object.value)
    return labels


def _to_resource(term: _Term, labels: Mapping[tuple[NodeKind, str], str]) -> Resource:
    if term.kind is NodeKind.LITERAL:
        return Resource(NodeKind.LITERAL, term.value)
    return Resource(term.kind, term.value, label=labels.get((term.kind, term.value)))


@dataclass(frozen=True)
class ParsedDescription:
    """Candidate triples plus the statement-identity index used for gold matching."""

    triples: tuple[Triple, ...]
    key_to_ids: Mapping[tuple[str, str, str], tuple[int, ...]]


def parse_description(text: str, entity_iri: str) -> ParsedDescription:
    statements = parse_statements(text)
    labels = _collect_labels(statements)

    triples: list[Triple] = []
    key_to_ids: dict[tuple[str, str, str], list[int]] = {}
    for st in statements:
        subject_is_entity = st.subject.kind is NodeKind.IRI and st.subject.value == entity_iri
        object_is_entity = st.object.kind is NodeKind.IRI and st.object.value == entity_iri
        if not (subject_is_entity or object_is_entity):
            continue
        subject = _to_resource(st.subject, labels)
        predicate = _to_resource(st.predicate, labels)
        obj = _to_resource(st.object, labels)
        # a self-referential statement keeps the object side as its value
        val = obj if subject_is_entity else subject
        tid = len(triples)
        triples.append(Triple(tid, subject, predicate, obj, val))
        key_to_ids.setdefault(st.key(), []).append(tid)

    if not triples:
        raise EmptyDescription(f"no statement mentions <{entity_iri}>")
    frozen = {k: tuple(v) for k, v in key_to_ids.items()}
    return ParsedDescription(tuple(triples), frozen)


def parse_triples_document(text: str, entity_iri: str) -> list[Triple]:
    """All statements whose subject or object is the entity, ids in document order."""
    return list(parse_description(text, entity_iri).triples)


# --------------------------------------------------------------------------
# manifest loading
# --------------------------------------------------------------------------

def _read_text(path: Path) -> str:
    if not path.is_file():
        raise MissingFile(path)
    return path.read_text(encoding="utf-8")


def _match_gold_statements(
    parsed: ParsedDescription, gold_text: str, entity_iri: str, source: str
) -> frozenset[int]:
    ids = set()
    for st in parse_statements(gold_text):
        matches = parsed.key_to_ids.get(st.key())
        if not matches:
            raise GoldNotSubset(
                f"{source}: statement on line {st.line_no} does not occur in the "
                f"description of <{entity_iri}>"
            )
        # duplicated description statements share a key; take the earliest id
        ids.add(matches[0])
    return frozenset(ids)


def validate_folds(folds: Iterable[FoldSpec], entity_iris: Iterable[str]) -> None:
    """Check fold assignments against the manifest's entity set.

    The test list must be disjoint from both train and valid, train and test
    must be non-empty, every listed IRI must be a known entity, and the three
    lists together must cover every entity.  Train and valid may overlap so
    that tiny corpora can reuse training entities for validation.
    """
    known = set(entity_iris)
    for fold in folds:
        for name, part in (("train", fold.train), ("valid", fold.valid), ("test", fold.test)):
            if len(set(part)) != len(part):
                raise InvalidFold(fold.index, f"duplicate entity in {name} list")
            unknown = [iri for iri in part if iri not in known]
            if unknown:
                raise InvalidFold(fold.index, f"unknown entity in {name} list: {unknown[0]}")
        if not fold.train:
            raise InvalidFold(fold.index, "empty train list")
        if not fold.test:
            raise InvalidFold(fold.index, "empty test list")
        leaked = set(fold.test) & (set(fold.train) | set(fold.valid))
        if leaked:
            raise InvalidFold(fold.index, f"test entity also in train/valid: {sorted(leaked)[0]}")
        uncovered = known - set(fold.train) - set(fold.valid) - set(fold.test)
        if uncovered:
            raise InvalidFold(fold.index, f"entity not assigned: {sorted(uncovered)[0]}")


def _require(mapping: Mapping, key: str, context: str):
    if key not in mapping:
        raise InvalidManifest(f"{context}: missing field {key!r}")
    return mapping[key]


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and fully validate a JSON manifest and all files it references."""
    path = Path(path)
    try:
        doc = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InvalidManifest(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise InvalidManifest(f"{path}: top-level value must be an object")

    base = path.parent
    name = _require(doc, "name", str(path))
    entity_docs = _require(doc, "entities", str(path))
    fold_docs = _require(doc, "folds", str(path))

    entities = []
    for ent in entity_docs:
        iri = _require(ent, "iri", f"{path} entity")
        desc_file = base / _require(ent, "desc_file", iri)
        parsed = parse_description(_read_text(desc_file), iri)

        gold: dict[int, tuple[GoldSummary, ...]] = {}
        for k_str, summaries in ent.get("gold", {}).items():
            try:
                k = int(k_str)
            except ValueError:
                raise InvalidManifest(f"{iri}: gold key {k_str!r} is not an integer")
            if k < 1:
                raise InvalidManifest(f"{iri}: gold key {k} must be positive")
            if not summaries:
                raise InvalidManifest(f"{iri}: empty gold list for k={k}")
            loaded = []
            for g in summaries:
                annotator = _require(g, "annotator", f"{iri} gold k={k}")
                gold_file = base / _require(g, "file", f"{iri} gold k={k}")
                ids = _match_gold_statements(
                    parsed, _read_text(gold_file), iri, str(gold_file)
                )
                if len(ids) > k:
                    raise GoldTooLarge(
                        f"{gold_file}: {len(ids)} triples exceed k={k}"
                    )
                loaded.append(GoldSummary(str(annotator), ids))
            gold[k] = tuple(loaded)

        entities.append(
            EntityDescription(Resource(NodeKind.IRI, iri), parsed.triples, gold)
        )

    iris = [e.entity.raw for e in entities]
    if len(set(iris)) != len(iris):
        raise InvalidManifest(f"{path}: duplicate entity iri")

    folds = []
    for f in fold_docs:
        folds.append(
            FoldSpec(
                index=int(_require(f, "index", f"{path} fold")),
                train=tuple(_require(f, "train", f"{path} fold")),
                valid=tuple(f.get("valid", [])),
                test=tuple(_require(f, "test", f"{path} fold")),
            )
        )
    validate_folds(folds, iris)

    return DatasetManifest(str(name), tuple(entities), tuple(folds))


# --------------------------------------------------------------------------
# supervision targets
# --------------------------------------------------------------------------

def supervision_label(
    desc: EntityDescription, t: Triple, k: int, mode: str = "frequency"
) -> float:
    """Regression target for one triple under size budget k.

    ``frequency`` is the fraction of ground-truth summaries containing the
    triple; ``binary`` collapses that to membership in at least one summary.
    """
    if k not in desc.gold:
        raise NoGoldForK(k)
    summaries = desc.gold[k]
    count = sum(1 for g in summaries if t.id in g.triple_ids)
    if mode == "frequency":
        return count / len(summaries)
    if mode == "binary":
        return 1.0 if count > 0 else 0.0
    raise ValueError(f"unknown label mode {mode!r}")
