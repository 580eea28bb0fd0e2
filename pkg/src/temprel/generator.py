"""Synthetic corpora from latent timelines.

Each document is a sequence of events with integer intervals; every
candidate edge is labeled by the interval oracle, so gold graphs are
consistent by construction.  Edge features abstract lexical evidence:
``lexical_features`` discriminative ids, each drawn from the vocabulary block
of a label (the gold label with probability ``informativeness``), an optional
sentence-distance id, and a few noise ids.  Discriminative ids follow a Zipf
law inside each block, so a small training set covers only the frequent ones.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .algebra import LABELS, Interval, RelLabel, oracle_relation
from .corpus import Corpus, Document, EdgeRecord, EventNode, candidate_edges

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimelineShape:
    """Interval sampler constants, tuned once against the target label mix
    (about 43% vague, 29% before, 21% after, 7% other)."""

    width: int = 40
    drift: float = 0.22
    sigma: float = 7.0
    min_duration: int = 4
    duration_span: int = 3
    p_long: float = 0.07
    long_extra: int = 13
    p_copy: float = 0.01


@dataclass(frozen=True)
class GenParams:
    n_docs: int = 220
    events_per_doc: tuple[int, int] = (8, 12)
    sentences_per_doc: tuple[int, int] = (4, 6)
    window: int = 1
    feature_dim: int = 1800
    informativeness: float = 0.75
    lexical_features: int = 2
    zipf_exponent: float = 1.1
    noise_features: int = 1
    distance_feature: bool = False
    noise_vocab: int = 400
    mask_ratio: float = 0.12
    nonvague_bias: float = 20.0
    seed: int = 0
    # document roles, as fractions of n_docs
    full_fraction: float = 30 / 220
    dev_fraction_of_full: float = 6 / 30
    test_fraction: float = 20 / 220
    shape: TimelineShape = field(default_factory=TimelineShape)

    def __post_init__(self):
        for name in ("informativeness", "mask_ratio", "full_fraction", "dev_fraction_of_full", "test_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("events_per_doc", "sentences_per_doc"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise ValueError(f"{name} must be a non-empty range, got {(lo, hi)}")
        if self.nonvague_bias < 1.0:
            raise ValueError("nonvague_bias must be >= 1")
        if self.n_docs < 0 or self.window < 0 or self.noise_features < 0 or self.lexical_features < 1:
            raise ValueError("counts must be non-negative")
        if self.feature_dim < len(LABELS):
            raise ValueError("feature_dim must cover every label block")
        if self.full_fraction + self.test_fraction > 1.0:
            raise ValueError("full and test fractions exceed 1")

    @classmethod
    def from_dict(cls, rec: dict) -> "GenParams":
        rec = dict(rec)
        known = {f.name for f in fields(cls)}
        unknown = set(rec) - known
        if unknown:
            raise ValueError(f"unknown GenParams keys {sorted(unknown)}")
        if "shape" in rec:
            rec["shape"] = TimelineShape(**rec["shape"])
        for name in ("events_per_doc", "sentences_per_doc"):
            if name in rec:
                rec[name] = tuple(rec[name])
        return cls(**rec)

    def to_dict(self) -> dict:
        out = asdict(self)
        for name in ("events_per_doc", "sentences_per_doc"):
            out[name] = list(out[name])
        return out


LatentTimeline = list[Interval]


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng([int(k) for k in key])


def sample_timeline(rng: np.random.Generator, n: int, shape: TimelineShape) -> LatentTimeline:
    """Narrative-ordered intervals: centers drift with event index."""
    out: LatentTimeline = []
    w = shape.width
    for i in range(n):
        if out and rng.random() < shape.p_copy:
            out.append(out[-1])
            continue
        center = w * (0.5 + ((i + 0.5) / n - 0.5) * shape.drift) + rng.normal(0.0, shape.sigma)
        dur = shape.min_duration + int(rng.integers(0, shape.duration_span + 1))
        if rng.random() < shape.p_long:
            dur += shape.long_extra
        dur = min(dur, w - 1)
        start = int(np.clip(round(center - dur / 2), 0, w - dur))
        out.append(Interval(start, start + dur))
    return out


def _zipf_cdf(size: int, exponent: float) -> np.ndarray:
    weights = 1.0 / np.arange(1, size + 1) ** exponent
    return np.cumsum(weights / weights.sum())


def edge_features(
    rng: np.random.Generator, gold: RelLabel, distance: int, params: GenParams, cdf: np.ndarray
) -> tuple[str, ...]:
    feats = []
    for _ in range(params.lexical_features):
        if rng.random() < params.informativeness:
            shown = gold
        else:
            shown = LABELS[int(rng.integers(0, len(LABELS)))]
        rank = int(np.searchsorted(cdf, rng.random(), side="right"))
        feats.append(f"lex:{shown}:{min(rank, len(cdf) - 1)}")
    if params.distance_feature:
        feats.append(f"dist:{distance}")
    for _ in range(params.noise_features):
        feats.append(f"noise:{int(rng.integers(0, params.noise_vocab))}")
    return tuple(feats)


def gen_document(params: GenParams, doc_index: int, split: str = "train") -> tuple[Document, LatentTimeline]:
    """Fully labeled document plus the timeline that generated it."""
    rng = _rng(params.seed, doc_index, 0)
    n = int(rng.integers(params.events_per_doc[0], params.events_per_doc[1] + 1))
    n_sent = int(rng.integers(params.sentences_per_doc[0], params.sentences_per_doc[1] + 1))
    sentences = np.sort(rng.integers(0, n_sent, size=n))
    timeline = sample_timeline(rng, n, params.shape)
    nodes = tuple(EventNode(i, int(s)) for i, s in enumerate(sentences))
    probe = Document(f"doc{doc_index:05d}", "partial", nodes, {}, params.window, split)
    cdf = _zipf_cdf(params.feature_dim // len(LABELS), params.zipf_exponent)
    edges = {}
    for i, j in candidate_edges(probe):
        gold = oracle_relation(timeline[i], timeline[j])
        feats = edge_features(rng, gold, int(abs(sentences[i] - sentences[j])), params, cdf)
        edges[i, j] = EdgeRecord(i, j, gold, True, "gold", feats)
    doc = Document(probe.doc_id, "full", nodes, edges, params.window, split)
    return doc, timeline


def mask_to_partial(doc: Document, ratio: float, bias: float, seed: int) -> Document:
    """Keep ``round(ratio * |E|)`` annotations, favoring non-vague edges.

    Selection is weighted sampling without replacement: weight ``bias`` for
    non-vague gold labels and 1 for vague.
    """
    if doc.coverage != "full":
        raise ValueError(f"{doc.doc_id}: masking needs a fully annotated document")
    keys = sorted(doc.edges)
    keep_n = int(math.floor(ratio * len(keys) + 0.5))
    if keep_n < 1 and keys:
        log.warning("%s: ratio %.3f keeps no edges", doc.doc_id, ratio)
    kept: set = set()
    if keep_n > 0:
        w = np.array([bias if doc.edges[k].label.definite else 1.0 for k in keys], dtype=float)
        rng = np.random.default_rng([int(seed), _stable_id(doc.doc_id)])
        picks = rng.choice(len(keys), size=keep_n, replace=False, p=w / w.sum())
        kept = {keys[int(p)] for p in picks}
    edges = {}
    for k in keys:
        e = doc.edges[k]
        if k in kept:
            edges[k] = EdgeRecord(e.src, e.dst, e.label, True, "gold", e.features)
        else:
            edges[k] = EdgeRecord(e.src, e.dst, None, False, None, e.features)
    return doc.with_edges(edges, coverage="partial")


def _stable_id(text: str) -> int:
    h = 0
    for ch in text.encode("utf-8"):
        h = (h * 131 + ch) % (2**31 - 1)
    return h


def split_sizes(params: GenParams) -> tuple[int, int, int, int]:
    """(full-train, dev, partial, test) document counts."""
    n = params.n_docs
    full = int(math.floor(n * params.full_fraction + 0.5))
    test = int(math.floor(n * params.test_fraction + 0.5))
    dev = int(math.floor(full * params.dev_fraction_of_full + 0.5))
    partial = max(n - full - test, 0)
    return full - dev, dev, partial, test


def gen_corpus(params: GenParams) -> tuple[Corpus, Corpus, Corpus]:
    """Generate (F, P, test).  F carries train and dev splits."""
    n_train, n_dev, n_partial, n_test = split_sizes(params)
    full, partial, test = [], [], []
    idx = 0
    for _ in range(n_train):
        full.append(gen_document(params, idx, "train")[0])
        idx += 1
    for _ in range(n_dev):
        full.append(gen_document(params, idx, "dev")[0])
        idx += 1
    for _ in range(n_partial):
        doc = gen_document(params, idx, "train")[0]
        partial.append(mask_to_partial(doc, params.mask_ratio, params.nonvague_bias, params.seed))
        idx += 1
    for _ in range(n_test):
        test.append(gen_document(params, idx, "test")[0])
        idx += 1
    return Corpus(full), Corpus(partial), Corpus(test)


def corpus_stats(corpus: Corpus) -> dict:
    """Document count, annotated edge count, and annotation ratio."""
    docs = len(corpus)
    total = sum(len(candidate_edges(d)) for d in corpus)
    annotated = sum(1 for d in corpus for e in d.edges.values() if e.annotated)
    return {
        "docs": docs,
        "edges": total,
        "annotated": annotated,
        "ratio": annotated / total if total else 0.0,
    }
