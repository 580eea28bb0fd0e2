"""Pairwise P/R/F by sentence bucket, temporal awareness, McNemar, reports."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .algebra import LABELS, CompositionTable, RelLabel, inverse
from .corpus import Corpus, Document, candidate_edges
from .network import EdgeKey

log = logging.getLogger(__name__)

BUCKETS = ("same", "nearby", "overall")
REPORT_GROUPS = ("same", "nearby", "overall", "awareness")
_VAGUE = int(RelLabel.VAGUE)

Graph = Mapping[EdgeKey, RelLabel]
Predictions = Mapping[str, Graph]


class EvaluationError(ValueError):
    pass


class InconsistentGraph(EvaluationError):
    pass


@dataclass(frozen=True)
class PRF:
    P: float
    R: float
    F: float
    undefined: bool = False

    @classmethod
    def from_counts(cls, correct: float, predicted: float, gold: float) -> "PRF":
        p = correct / predicted if predicted else 0.0
        r = correct / gold if gold else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f, undefined=not predicted or not gold)

    def as_dict(self) -> dict:
        return {"P": self.P, "R": self.R, "F": self.F}


@dataclass
class ConfusionCounts:
    """Non-vague counts per bucket plus a gold x predicted label matrix."""

    predicted: dict[str, int] = field(default_factory=lambda: dict.fromkeys(BUCKETS, 0))
    gold: dict[str, int] = field(default_factory=lambda: dict.fromkeys(BUCKETS, 0))
    correct: dict[str, int] = field(default_factory=lambda: dict.fromkeys(BUCKETS, 0))
    matrix: np.ndarray = field(default_factory=lambda: np.zeros((len(LABELS), len(LABELS)), dtype=int))

    def add(self, bucket: str, gold: RelLabel, pred: RelLabel) -> None:
        for b in (bucket, "overall"):
            self.predicted[b] += pred != RelLabel.VAGUE
            self.gold[b] += gold != RelLabel.VAGUE
            self.correct[b] += gold == pred and gold != RelLabel.VAGUE
        self.matrix[gold, pred] += 1

    def prf(self, bucket: str) -> PRF:
        return PRF.from_counts(self.correct[bucket], self.predicted[bucket], self.gold[bucket])


def bucket_of(doc: Document, key: EdgeKey) -> str:
    return "same" if doc.sentence_distance(key) == 0 else "nearby"


def confusion(pred: Predictions, gold: Corpus) -> ConfusionCounts:
    """Counts over gold's candidate edges; ``pred`` must cover exactly those."""
    counts = ConfusionCounts()
    if set(pred) != {d.doc_id for d in gold}:
        raise EvaluationError("predictions and gold cover different documents")
    for doc in gold:
        graph = pred[doc.doc_id]
        keys = candidate_edges(doc)
        if set(graph) != set(keys):
            raise EvaluationError(f"{doc.doc_id}: predictions do not cover the candidate edges")
        for key in keys:
            g = doc.edges[key].label
            if g is None:
                raise EvaluationError(f"{doc.doc_id}: gold edge {key} is unlabeled")
            counts.add(bucket_of(doc, key), g, graph[key])
    return counts


def pairwise_prf(pred: Predictions, gold: Corpus, bucket: str = "overall") -> PRF:
    if bucket not in BUCKETS:
        raise ValueError(f"unknown bucket {bucket!r}")
    return confusion(pred, gold).prf(bucket)


# -- temporal awareness -----------------------------------------------------------


def _forcing(table: CompositionTable) -> list[list[int]]:
    """forced[r1][r2]: the unique definite composition, or -1."""
    out = [[-1] * len(LABELS) for _ in LABELS]
    for r1 in LABELS:
        for r2 in LABELS:
            if not (r1.definite and r2.definite):
                continue
            s = table.compose(r1, r2)
            if len(s) == 1:
                (r,) = s
                if r.definite:
                    out[r1][r2] = int(r)
    return out


def _matrix(graph: Graph, n: int) -> list[list[int]]:
    rel = [[-1] * n for _ in range(n)]
    for (i, j), r in graph.items():
        if r == RelLabel.VAGUE:
            continue
        rel[i][j] = int(r)
        rel[j][i] = int(inverse(r))
    return rel


def _close(rel: list[list[int]], forced: list[list[int]], strict: bool = True) -> None:
    n = len(rel)
    changed = True
    while changed:
        changed = False
        for j in range(n):
            row_j = rel[j]
            for i in range(n):
                a = rel[i][j]
                if a < 0 or i == j:
                    continue
                fa = forced[a]
                row_i = rel[i]
                for k in range(n):
                    b = row_j[k]
                    if b < 0 or k == i or k == j:
                        continue
                    r = fa[b]
                    if r < 0:
                        continue
                    cur = row_i[k]
                    if cur < 0:
                        row_i[k] = r
                        rel[k][i] = int(inverse(LABELS[r]))
                        changed = True
                    elif cur != r and strict:
                        raise InconsistentGraph(f"edge ({i}, {k}) forced to {LABELS[r]} but labeled {LABELS[cur]}")


def _n_events(graph: Graph, n: int | None) -> int:
    if n is not None:
        return n
    return 1 + max((max(k) for k in graph), default=-1)


def closure(graph: Graph, table: CompositionTable, n: int | None = None, strict: bool = True) -> dict[EdgeKey, RelLabel]:
    """Definite edges plus every edge forced to a single definite label.

    A forced label that contradicts an existing one raises
    :class:`InconsistentGraph`; with ``strict=False`` the existing label wins.
    """
    n = _n_events(graph, n)
    rel = _matrix(graph, n)
    _close(rel, _forcing(table), strict)
    return {(i, j): LABELS[rel[i][j]] for i in range(n) for j in range(i + 1, n) if rel[i][j] >= 0}


def reduce(graph: Graph, table: CompositionTable, n: int | None = None, strict: bool = True) -> dict[EdgeKey, RelLabel]:
    """Greedy transitive reduction of the closure, in canonical edge order.

    An edge is dropped when the closure of the edges still kept forces its
    label.  Reducing the closure, not the input, makes the result depend only
    on what the graph implies.
    """
    n = _n_events(graph, n)
    forced = _forcing(table)
    full = closure(graph, table, n, strict)
    rel = _matrix(full, n)
    removed: list[EdgeKey] = []
    kept = dict(full)
    for key in sorted(full):
        i, k = key
        rel[i][k] = rel[k][i] = -1
        if _rederivable(rel, key, removed, full, forced):
            removed.append(key)
            del kept[key]
        else:
            rel[i][k] = int(full[key])
            rel[k][i] = int(inverse(full[key]))
    return kept


def _one_step(rel: list[list[int]], i: int, k: int, forced: list[list[int]], full_label: int) -> int:
    row_i = rel[i]
    for j in range(len(rel)):
        a = row_i[j]
        if a < 0 or j == k:
            continue
        b = rel[j][k]
        if b >= 0 and forced[a][b] == full_label:
            return full_label
    return -1


def _rederivable(rel, target: EdgeKey, removed: Sequence[EdgeKey], full, forced) -> bool:
    """Does the closure of the present edges restore ``target``?

    Every edge derivable from the present ones belongs to the full closure,
    and the only closure edges absent are ``target`` and those already
    removed, so it suffices to re-derive members of that set.
    """
    missing = list(removed) + [target]
    added: list[EdgeKey] = []
    ok = False
    progress = True
    while progress and not ok:
        progress = False
        for key in missing:
            i, k = key
            if rel[i][k] >= 0:
                continue
            r = _one_step(rel, i, k, forced, int(full[key]))
            if r < 0:
                continue
            rel[i][k] = r
            rel[k][i] = int(inverse(LABELS[r]))
            added.append(key)
            progress = True
            if key == target:
                ok = True
                break
    for i, k in added:
        rel[i][k] = rel[k][i] = -1
    return ok


@dataclass
class AwarenessCounts:
    pred_matched: int = 0
    pred_total: int = 0
    gold_matched: int = 0
    gold_total: int = 0

    def add(self, other: "AwarenessCounts") -> None:
        self.pred_matched += other.pred_matched
        self.pred_total += other.pred_total
        self.gold_matched += other.gold_matched
        self.gold_total += other.gold_total

    def prf(self) -> PRF:
        p = self.pred_matched / self.pred_total if self.pred_total else 0.0
        r = self.gold_matched / self.gold_total if self.gold_total else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return PRF(p, r, f, undefined=not self.pred_total or not self.gold_total)


def awareness_counts(
    pred: Graph, gold: Graph, table: CompositionTable, n: int | None = None, strict: bool = True
) -> AwarenessCounts:
    """Matched and total reduced edges on both sides.

    Gold must be consistent.  With ``strict=False`` an inconsistent
    prediction (possible under local inference) is closed leniently.
    """
    n = max(_n_events(pred, n), _n_events(gold, n))
    try:
        pred_red, pred_cl = reduce(pred, table, n), closure(pred, table, n)
    except InconsistentGraph:
        if strict:
            raise
        log.info("inconsistent predicted graph; closing it leniently")
        pred_red, pred_cl = reduce(pred, table, n, False), closure(pred, table, n, False)
    gold_red, gold_cl = reduce(gold, table, n), closure(gold, table, n)
    return AwarenessCounts(
        sum(1 for e, r in pred_red.items() if gold_cl.get(e) == r),
        len(pred_red),
        sum(1 for e, r in gold_red.items() if pred_cl.get(e) == r),
        len(gold_red),
    )


def temporal_awareness(pred: Graph, gold: Graph, table: CompositionTable, n: int | None = None) -> PRF:
    """Closure/reduction precision and recall for one pair of graphs."""
    return awareness_counts(pred, gold, table, n).prf()


def corpus_awareness(pred: Predictions, gold: Corpus, table: CompositionTable) -> PRF:
    """Micro-average over documents (counts summed before dividing)."""
    total = AwarenessCounts()
    for doc in gold:
        total.add(awareness_counts(pred[doc.doc_id], doc.labeled(), table, len(doc.nodes), strict=False))
    return total.prf()


# -- significance -------------------------------------------------------------------


@dataclass(frozen=True)
class PairedCorrectness:
    a: tuple[bool, ...]
    b: tuple[bool, ...]

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise ValueError("correctness vectors differ in length")

    @classmethod
    def align(cls, pred_a: Predictions, pred_b: Predictions, gold: Corpus) -> "PairedCorrectness":
        a, b = [], []
        for doc in sorted(gold, key=lambda d: d.doc_id):
            for key in candidate_edges(doc):
                g = doc.edges[key].label
                a.append(pred_a[doc.doc_id][key] == g)
                b.append(pred_b[doc.doc_id][key] == g)
        return cls(tuple(a), tuple(b))


def mcnemar(pc: PairedCorrectness) -> float:
    """Continuity-corrected McNemar test; p-value from chi-square(1)."""
    b = sum(1 for x, y in zip(pc.a, pc.b) if x and not y)
    c = sum(1 for x, y in zip(pc.a, pc.b) if y and not x)
    return mcnemar_counts(b, c)


def mcnemar_counts(b: int, c: int) -> float:
    if b + c == 0:
        return 1.0
    chi2 = (abs(b - c) - 1) ** 2 / (b + c)
    return float(stats.chi2.sf(chi2, df=1))


# -- reports --------------------------------------------------------------------------


def evaluate(pred: Predictions, gold: Corpus, table: CompositionTable) -> dict[str, PRF]:
    counts = confusion(pred, gold)
    out = {b: counts.prf(b) for b in BUCKETS}
    out["awareness"] = corpus_awareness(pred, gold, table)
    return out


def _pct(x: float) -> str:
    # half-up on the percentage, so 0.4904 -> 49.0 and 0.4125 -> 41.3
    return f"{math.floor(x * 1000 + 0.5) / 10:.1f}"


def render_report(rows: Sequence[tuple], title: str | None = None) -> tuple[str, list[dict]]:
    """Fixed-width table and one machine-readable record per (row, group).

    ``rows`` holds ``(label, metrics)`` or ``(label, metrics, system_id)``
    entries where ``label`` is a SystemConfig or string and ``metrics`` maps
    each report group to a PRF.
    """
    head1 = f"{'No.':>4} {'Training':<18}" + "".join(f"| {g.capitalize():^17}" for g in REPORT_GROUPS)
    head2 = f"{'':>4} {'':<18}" + "".join(f"| {'P':>5} {'R':>5} {'F':>5}" for _ in REPORT_GROUPS)
    lines = ([title] if title else []) + [head1, head2, "-" * len(head1)]
    records = []
    for row in rows:
        cfg, metrics = row[0], row[1]
        sid = row[2] if len(row) > 2 else getattr(cfg, "id", None)
        name = getattr(cfg, "name", str(cfg))
        cells = ""
        for g in REPORT_GROUPS:
            m = metrics[g]
            cells += f"| {_pct(m.P):>5} {_pct(m.R):>5} {_pct(m.F):>5}"
            records.append({"system_id": sid, "bucket": g, "P": m.P, "R": m.R, "F": m.F})
        lines.append(f"{'' if sid is None else sid:>4} {name:<18}" + cells)
    return "\n".join(lines), records


def records_to_jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
