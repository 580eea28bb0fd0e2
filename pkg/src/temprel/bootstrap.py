"""Learning from full and partial corpora: union baselines and bootstrapping.

The nine training systems::

    1  F                  plain training
    2  P_full             P with missing edges filled by vague
    3  P                  annotated edges of P only
    4  F + P_full
    5  F + P              annotated edges of P added to F
    6  F + P_empty        bootstrapping, local fill-in
    7  F + P_empty        bootstrapping, global fill-in
    8  F + P              bootstrapping, local fill-in
    9  F + P              bootstrapping, global fill-in
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .algebra import CompositionTable, RelLabel, default_table
from .corpus import Corpus, Document, EdgeRecord, candidate_edges, check_consistency, propagate_domains
from .inference import Assignment, InferenceProblem, SolverStats, infer_global, infer_local
from .learner import Perceptron, feature_vector, score, train

log = logging.getLogger(__name__)

Example = tuple[dict, RelLabel]


@dataclass(frozen=True)
class SystemConfig:
    id: int
    composition: str
    bootstrap: str
    p_variant: str

    @property
    def name(self) -> str:
        data = {"F": "F", "P_full": "P^Full", "P": "P", "F+P_full": "F+P^Full", "F+P": "F+P"}[self.composition]
        if self.p_variant == "emptied":
            data = "F+P^Empty"
        return data if self.bootstrap == "none" else f"{data}/{self.bootstrap}"


SYSTEMS: dict[int, SystemConfig] = {
    1: SystemConfig(1, "F", "none", "as_is"),
    2: SystemConfig(2, "P_full", "none", "filled_vague"),
    3: SystemConfig(3, "P", "none", "as_is"),
    4: SystemConfig(4, "F+P_full", "none", "filled_vague"),
    5: SystemConfig(5, "F+P", "none", "as_is"),
    6: SystemConfig(6, "F+P", "local", "emptied"),
    7: SystemConfig(7, "F+P", "global", "emptied"),
    8: SystemConfig(8, "F+P", "local", "as_is"),
    9: SystemConfig(9, "F+P", "global", "as_is"),
}


def system_config(system_id: int) -> SystemConfig:
    try:
        return SYSTEMS[system_id]
    except KeyError:
        raise ValueError(f"unknown system id {system_id}") from None


@dataclass(frozen=True)
class ConvergenceCriteria:
    max_iterations: int = 10
    change_threshold: float = 0.01

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0.0 <= self.change_threshold <= 1.0:
            raise ValueError("change_threshold must lie in [0, 1]")


@dataclass
class TrainedSystem:
    model: Perceptron
    changes: list[float] = field(default_factory=list)
    iterations: int = 0
    log: list[dict] = field(default_factory=list)
    filled: list[Document] = field(default_factory=list)
    fallbacks: list[str] = field(default_factory=list)


# -- dataset transforms ---------------------------------------------------------


def fill_vague(doc: Document) -> Document:
    """Label every unannotated candidate edge vague (bootstrapped provenance)."""
    if doc.coverage != "partial":
        raise ValueError(f"{doc.doc_id}: fill_vague expects a partial document")
    edges = dict(doc.edges)
    for key in candidate_edges(doc):
        e = edges.get(key)
        feats = e.features if e is not None else ()
        if e is None or not e.annotated:
            edges[key] = EdgeRecord(key[0], key[1], RelLabel.VAGUE, False, "bootstrapped", feats)
    return doc.with_edges(edges, coverage="full")


def strip_annotations(doc: Document) -> Document:
    """Drop every label; events and features stay."""
    edges = {k: EdgeRecord(e.src, e.dst, None, False, None, e.features) for k, e in doc.edges.items()}
    return doc.with_edges(edges, coverage="partial")


def with_labels(doc: Document, labels: dict, provenance: str = "bootstrapped") -> Document:
    """Fully labeled copy: annotated edges keep gold, others take ``labels``."""
    edges = {}
    for key in candidate_edges(doc):
        e = doc.edges.get(key)
        feats = e.features if e is not None else ()
        if e is not None and e.annotated:
            edges[key] = e
        else:
            edges[key] = EdgeRecord(key[0], key[1], labels[key], False, provenance, feats)
    return doc.with_edges(edges, coverage="full")


def examples_from(docs: Iterable[Document], annotated_only: bool = False) -> list[Example]:
    """Training pairs from labeled edges (gold, or bootstrapped unless excluded)."""
    out = []
    for doc in docs:
        for key in sorted(doc.edges):
            e = doc.edges[key]
            if e.label is None:
                continue
            if annotated_only and not e.annotated:
                continue
            if not e.annotated and e.provenance != "bootstrapped":
                continue
            out.append((feature_vector(e.features), e.label))
    return out


# -- inference over documents -----------------------------------------------------


def edge_scores(doc: Document, model: Perceptron) -> tuple[list, list[list[float]]]:
    prep = prepare(doc)
    return prep.edges, [score(model, x) for x in prep.xs]


@dataclass(frozen=True)
class Prepared:
    """Per-document inputs that do not depend on the model."""

    doc: Document
    edges: list
    xs: list[dict]
    clamps: dict
    domains: dict | None
    conflict: list


def prepare(doc: Document, table: CompositionTable | None = None, use_clamps: bool = True) -> Prepared:
    edges = candidate_edges(doc)
    xs = []
    for key in edges:
        e = doc.edges.get(key)
        xs.append(feature_vector(e.features if e is not None else ()))
    clamps = doc.annotated() if use_clamps else {}
    domains, conflict = None, []
    if clamps and table is not None:
        conflict = check_consistency(doc, table)
        if not conflict:
            domains = propagate_domains(doc, table)
    return Prepared(doc, edges, xs, clamps, domains, conflict)


def infer_prepared(
    prep: Prepared,
    model: Perceptron,
    mode: str,
    table: CompositionTable,
    stats: SolverStats | None = None,
) -> tuple[Assignment, bool]:
    scores = [score(model, x) for x in prep.xs]
    if mode == "local":
        return infer_local(InferenceProblem(prep.edges, scores, table, prep.clamps)), False
    if mode != "global":
        raise ValueError(f"unknown inference mode {mode!r}")
    if prep.conflict:
        log.warning("%s: inconsistent annotations on %s; using local inference", prep.doc.doc_id, prep.conflict)
        return infer_local(InferenceProblem(prep.edges, scores, table, prep.clamps)), True
    problem = InferenceProblem(prep.edges, scores, table, prep.clamps, prep.domains)
    return infer_global(problem, stats=stats), False


def infer_document(
    doc: Document,
    model: Perceptron,
    mode: str = "global",
    table: CompositionTable | None = None,
    use_clamps: bool = True,
    stats: SolverStats | None = None,
) -> tuple[Assignment, bool]:
    """Label every candidate edge of ``doc``.

    Returns the assignment and whether global inference had to fall back to
    local because the document's annotations are inconsistent.
    """
    table = table or default_table()
    prep = prepare(doc, table if mode == "global" else None, use_clamps)
    return infer_prepared(prep, model, mode, table, stats)


# -- training -----------------------------------------------------------------------


def _changed_fraction(prev: list[dict] | None, cur: list[dict]) -> float:
    total = sum(len(c) for c in cur)
    if total == 0:
        return 0.0
    if prev is None:
        return 1.0
    changed = sum(1 for p, c in zip(prev, cur) for k in c if p.get(k) != c[k])
    return changed / total


def bootstrap(
    F: Corpus | Sequence[Document],
    P: Corpus | Sequence[Document],
    mode: str,
    criteria: ConvergenceCriteria = ConvergenceCriteria(),
    seed: int = 0,
    epochs: int = 5,
    table: CompositionTable | None = None,
) -> TrainedSystem:
    """Self-training on F plus model-filled P, repeated to convergence."""
    F, P = list(F), list(P)
    if not F:
        raise ValueError("bootstrapping needs a non-empty F")
    if mode not in ("local", "global"):
        raise ValueError(f"unknown bootstrap mode {mode!r}")
    table = table or default_table()
    f_examples = examples_from(F)
    if not f_examples:
        raise ValueError("F has no labeled edges")
    model = train(f_examples, epochs, seed)
    result = TrainedSystem(model)
    if not any(candidate_edges(p) for p in P):
        return result
    prepared = [prepare(p, table if mode == "global" else None) for p in P]
    prev: list[dict] | None = None
    for it in range(1, criteria.max_iterations + 1):
        t0 = time.perf_counter()
        filled, labels = [], []
        for p, prep in zip(P, prepared):
            a, fell_back = infer_prepared(prep, model, mode, table)
            if fell_back and p.doc_id not in result.fallbacks:
                result.fallbacks.append(p.doc_id)
            filled.append(with_labels(p, a.labels))
            labels.append(a.labels)
        examples = f_examples + examples_from(filled)
        model = train(examples, epochs, seed)
        change = _changed_fraction(prev, labels)
        prev = labels
        result.model = model
        result.iterations = it
        result.changes.append(change)
        result.filled = filled
        record = {
            "iteration": it,
            "changed_fraction": change,
            "train_examples": len(examples),
            "wall_time": round(time.perf_counter() - t0, 6),
        }
        result.log.append(record)
        log.info("bootstrap %s", record)
        if change < criteria.change_threshold:
            break
    return result


def run_system(
    cfg: SystemConfig | int,
    F: Corpus | Sequence[Document],
    P: Corpus | Sequence[Document],
    criteria: ConvergenceCriteria = ConvergenceCriteria(),
    seed: int = 0,
    epochs: int = 5,
    table: CompositionTable | None = None,
) -> TrainedSystem:
    """Train one of the nine systems on the given F and P documents."""
    if isinstance(cfg, int):
        cfg = system_config(cfg)
    F, P = list(F), list(P)
    if cfg.p_variant == "filled_vague":
        P = [fill_vague(p) for p in P]
    elif cfg.p_variant == "emptied":
        P = [strip_annotations(p) for p in P]
    if cfg.bootstrap != "none":
        return bootstrap(F, P, cfg.bootstrap, criteria, seed, epochs, table)
    if cfg.composition == "F":
        examples = examples_from(F)
    elif cfg.composition == "P_full":
        examples = examples_from(P)
    elif cfg.composition == "P":
        examples = examples_from(P, annotated_only=True)
    elif cfg.composition in ("F+P_full", "F+P"):
        examples = examples_from(F) + examples_from(P, annotated_only=cfg.composition == "F+P")
    else:
        raise ValueError(f"unknown composition {cfg.composition!r}")
    return TrainedSystem(train(examples, epochs, seed))
