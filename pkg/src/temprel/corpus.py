"""Documents, edges, candidate windows, and the JSON-lines corpus format."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .algebra import FULL_MASK, CompositionTable, LabelSet, RelLabel, inverse
from .network import Conflict, ConstraintNetwork, EdgeKey, network_for

log = logging.getLogger(__name__)

FORMAT_NAME = "temprel-corpus"
FORMAT_VERSION = 1

SPLITS = ("train", "dev", "test")
COVERAGES = ("full", "partial")
PROVENANCES = ("gold", "bootstrapped", "predicted")


class CorpusError(ValueError):
    """Malformed corpus record; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(CorpusError):
    pass


@dataclass(frozen=True)
class EventNode:
    id: int
    sentence: int


@dataclass(frozen=True)
class EdgeRecord:
    src: int
    dst: int
    label: RelLabel | None = None
    annotated: bool = False
    provenance: str | None = None
    features: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.src < self.dst:
            raise ValidationError(f"edge ({self.src}, {self.dst}) is not in canonical src < dst orientation")
        if self.annotated and (self.label is None or self.provenance != "gold"):
            raise ValidationError(f"annotated edge ({self.src}, {self.dst}) needs a gold label")
        if self.label is None and self.provenance is not None:
            raise ValidationError(f"unlabeled edge ({self.src}, {self.dst}) carries provenance")
        if self.label is not None and self.provenance not in PROVENANCES:
            raise ValidationError(f"bad provenance {self.provenance!r}")

    @property
    def key(self) -> EdgeKey:
        return self.src, self.dst


@dataclass(frozen=True)
class Document:
    doc_id: str
    coverage: str
    nodes: tuple[EventNode, ...]
    edges: Mapping[EdgeKey, EdgeRecord]
    window: int = 1
    split: str = "train"

    def __post_init__(self):
        validate_document(self)

    def sentence_distance(self, key: EdgeKey) -> int:
        return abs(self.nodes[key[0]].sentence - self.nodes[key[1]].sentence)

    def label(self, i: int, j: int) -> RelLabel | None:
        """Label of ``(i, j)`` in either orientation."""
        if i < j:
            rec = self.edges.get((i, j))
            return None if rec is None else rec.label
        rec = self.edges.get((j, i))
        if rec is None or rec.label is None:
            return None
        return inverse(rec.label)

    def annotated(self) -> dict[EdgeKey, RelLabel]:
        return {k: e.label for k, e in self.edges.items() if e.annotated}

    def labeled(self) -> dict[EdgeKey, RelLabel]:
        return {k: e.label for k, e in self.edges.items() if e.label is not None}

    def with_edges(self, edges: Mapping[EdgeKey, EdgeRecord], **changes) -> "Document":
        return replace(self, edges=dict(sorted(edges.items())), **changes)


@dataclass
class Corpus:
    documents: list[Document] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for d in self.documents:
            if d.doc_id in seen:
                raise ValidationError(f"duplicate doc_id {d.doc_id!r}")
            seen.add(d.doc_id)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __len__(self) -> int:
        return len(self.documents)

    def split(self, *names: str) -> "Corpus":
        return Corpus([d for d in self.documents if d.split in names])

    def __add__(self, other: "Corpus") -> "Corpus":
        return Corpus(self.documents + other.documents)


def candidate_edges(doc: Document) -> list[EdgeKey]:
    """Event pairs within the sentence window, lexicographic."""
    nodes = doc.nodes
    out = []
    for a in nodes:
        for b in nodes:
            if a.id < b.id and abs(a.sentence - b.sentence) <= doc.window:
                out.append((a.id, b.id))
    out.sort()
    return out


def validate_document(doc: Document) -> None:
    if doc.coverage not in COVERAGES:
        raise ValidationError(f"{doc.doc_id}: unknown coverage {doc.coverage!r}")
    if doc.split not in SPLITS:
        raise ValidationError(f"{doc.doc_id}: unknown split {doc.split!r}")
    if doc.window < 0:
        raise ValidationError(f"{doc.doc_id}: negative window")
    prev = -1
    for n, node in enumerate(doc.nodes):
        if node.id != n:
            raise ValidationError(f"{doc.doc_id}: event ids must be dense 0..n-1")
        if node.sentence < prev or node.sentence < 0:
            raise ValidationError(f"{doc.doc_id}: sentence indices must be non-decreasing")
        prev = node.sentence
    n = len(doc.nodes)
    for key, rec in doc.edges.items():
        if key != rec.key:
            raise ValidationError(f"{doc.doc_id}: edge stored under wrong key {key}")
        if rec.dst >= n:
            raise ValidationError(f"{doc.doc_id}: edge {key} references a missing event")
        if doc.sentence_distance(key) > doc.window:
            raise ValidationError(f"{doc.doc_id}: edge {key} lies outside the sentence window")
    if doc.coverage == "full":
        for key in candidate_edges(doc):
            rec = doc.edges.get(key)
            if rec is None or rec.label is None:
                raise ValidationError(f"{doc.doc_id}: full coverage but edge {key} is unlabeled")


# -- constraint propagation ---------------------------------------------------


def document_network(doc: Document, table: CompositionTable) -> ConstraintNetwork:
    return network_for(candidate_edges(doc), table)


def propagate_domains(doc: Document, table: CompositionTable) -> dict[EdgeKey, LabelSet]:
    """Path-consistent domains given the document's annotated edges.

    Annotated edges start as singletons, the rest as the full set.  An empty
    domain in the result marks an inconsistent document.
    """
    net = document_network(doc, table)
    domains = _initial_domains(doc, net)
    try:
        net.propagate(domains)
    except Conflict as exc:
        t = net.index[exc.edges[0]]
        domains[t] = 0
    return {e: LabelSet(m) for e, m in zip(net.edges, domains)}


def _initial_domains(doc: Document, net: ConstraintNetwork) -> list[int]:
    domains = []
    for key in net.edges:
        rec = doc.edges.get(key)
        domains.append(rec.label.bit if rec is not None and rec.annotated else FULL_MASK)
    return domains


def check_consistency(doc: Document, table: CompositionTable) -> list[EdgeKey]:
    """Empty list when the annotations are consistent, else the conflict edges."""
    net = document_network(doc, table)
    try:
        net.propagate(_initial_domains(doc, net))
    except Conflict as exc:
        return sorted(set(exc.edges))
    return []


# -- serialization --------------------------------------------------------------


def document_to_record(doc: Document) -> dict:
    edges = []
    for key in sorted(doc.edges):
        rec = doc.edges[key]
        out: dict = {"src": rec.src, "dst": rec.dst}
        if rec.label is not None:
            out["label"] = str(rec.label)
        out["annotated"] = rec.annotated
        if rec.label is not None and not rec.annotated:
            out["provenance"] = rec.provenance
        out["features"] = list(rec.features)
        edges.append(out)
    return {
        "doc_id": doc.doc_id,
        "split": doc.split,
        "coverage": doc.coverage,
        "window": doc.window,
        "events": [{"id": n.id, "sentence": n.sentence} for n in doc.nodes],
        "edges": edges,
    }


def _need(rec: dict, key: str, kind, line: int):
    if key not in rec:
        raise CorpusError(f"missing field {key!r}", line)
    value = rec[key]
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        raise CorpusError(f"field {key!r} has wrong type {type(value).__name__}", line)
    return value


def document_from_record(rec: dict, line: int | None = None) -> Document:
    if not isinstance(rec, dict):
        raise CorpusError("document record must be a JSON object", line)
    try:
        nodes = tuple(
            EventNode(_need(ev, "id", int, line), _need(ev, "sentence", int, line))
            for ev in _need(rec, "events", list, line)
        )
        edges = {}
        for e in _need(rec, "edges", list, line):
            if not isinstance(e, dict):
                raise CorpusError("edge record must be a JSON object", line)
            label = e.get("label")
            if label is not None:
                if not isinstance(label, str):
                    raise ValidationError(f"label must be a string, got {label!r}")
                label = RelLabel.parse(label)
            annotated = _need(e, "annotated", bool, line)
            prov = e.get("provenance")
            if label is not None and prov is None:
                prov = "gold" if annotated else "bootstrapped"
            feats = _need(e, "features", list, line)
            if not all(isinstance(f, str) for f in feats):
                raise CorpusError("features must be strings", line)
            edge = EdgeRecord(
                _need(e, "src", int, line), _need(e, "dst", int, line),
                label, annotated, prov, tuple(feats),
            )
            if edge.key in edges:
                raise ValidationError(f"duplicate edge {edge.key}")
            edges[edge.key] = edge
        return Document(
            doc_id=_need(rec, "doc_id", str, line),
            coverage=_need(rec, "coverage", str, line),
            nodes=nodes,
            edges=dict(sorted(edges.items())),
            window=_need(rec, "window", int, line),
            split=_need(rec, "split", str, line),
        )
    except CorpusError as exc:
        if exc.line is None and line is not None:
            raise type(exc)(str(exc), line) from None
        raise
    except ValueError as exc:
        raise ValidationError(str(exc), line) from None


def header_record() -> dict:
    return {"format": FORMAT_NAME, "version": FORMAT_VERSION}


def dumps_corpus(corpus: Corpus) -> str:
    lines = [json.dumps(header_record())]
    lines += [json.dumps(document_to_record(d)) for d in corpus]
    return "\n".join(lines) + "\n"


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(dumps_corpus(corpus), encoding="utf-8")


def loads_corpus(text: str) -> Corpus:
    lines = text.splitlines()
    docs = []
    header_seen = False
    for n, raw in enumerate(lines, 1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"invalid JSON ({exc.msg})", n) from None
        if not header_seen:
            if not isinstance(rec, dict) or rec.get("format") != FORMAT_NAME:
                raise CorpusError(f"expected {FORMAT_NAME!r} header", n)
            if rec.get("version") != FORMAT_VERSION:
                raise CorpusError(f"unsupported version {rec.get('version')!r}", n)
            header_seen = True
            continue
        docs.append(document_from_record(rec, n))
    if not header_seen:
        raise CorpusError("empty file: missing header")
    try:
        return Corpus(docs)
    except ValidationError as exc:
        raise CorpusError(str(exc)) from None


def load_corpus(path: str | Path) -> Corpus:
    return loads_corpus(Path(path).read_text(encoding="utf-8"))


def make_document(
    doc_id: str,
    sentences: Iterable[int],
    labels: Mapping[EdgeKey, RelLabel] | None = None,
    *,
    coverage: str | None = None,
    window: int = 1,
    split: str = "train",
    features: Mapping[EdgeKey, Iterable[str]] | None = None,
) -> Document:
    """Convenience builder: all candidate edges, ``labels`` marked gold."""
    labels = labels or {}
    features = features or {}
    nodes = tuple(EventNode(i, s) for i, s in enumerate(sentences))
    probe = Document(doc_id, "partial", nodes, {}, window, split)
    edges = {}
    for key in candidate_edges(probe):
        lab = labels.get(key)
        edges[key] = EdgeRecord(
            key[0], key[1], lab, lab is not None, "gold" if lab is not None else None,
            tuple(features.get(key, ())),
        )
    if coverage is None:
        coverage = "full" if edges and all(e.label is not None for e in edges.values()) else "partial"
    return Document(doc_id, coverage, nodes, edges, window, split)
