"""Per-document label assignment: local argmax, exact global search, brute force.

Global inference maximizes the summed softmax score of the chosen labels
subject to one label per edge, the composition rules on every triangle of
candidate edges, and fixed labels on clamped edges.  Among equal-objective
optima the lexicographically smallest label vector (canonical edge order,
fixed label order) wins, so the exact search and brute force agree on the
assignment and not just the objective.
"""
from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import FULL_MASK, LABELS, CompositionTable, LabelSet, RelLabel
from .network import Conflict, ConstraintNetwork, EdgeKey, network_for

log = logging.getLogger(__name__)

DEFAULT_NODE_CAP = 10**7
BRUTE_FORCE_LIMIT = 7
_EPS = 1e-9


class InfeasibleError(ValueError):
    def __init__(self, edges: Sequence[EdgeKey]):
        self.edges = list(edges)
        super().__init__(f"clamps are inconsistent on edges {self.edges}")


class SolverLimitError(RuntimeError):
    pass


@dataclass
class InferenceProblem:
    edges: list[EdgeKey]
    scores: list[list[float]]
    table: CompositionTable
    clamps: dict[EdgeKey, RelLabel] = field(default_factory=dict)
    domains: dict[EdgeKey, LabelSet] | None = None

    def __post_init__(self):
        if len(self.edges) != len(self.scores):
            raise ValueError("one score vector per edge required")
        known = set(self.edges)
        for key in self.clamps:
            if key not in known:
                raise ValueError(f"clamp on unknown edge {key}")

    def network(self) -> ConstraintNetwork:
        return network_for(self.edges, self.table)

    def objective(self, labels: Sequence[int]) -> float:
        return math.fsum(self.scores[n][r] for n, r in enumerate(labels))

    def free(self) -> list[int]:
        return [n for n, e in enumerate(self.edges) if e not in self.clamps]


@dataclass
class Assignment:
    labels: dict[EdgeKey, RelLabel]
    objective: float

    def as_list(self, edges: Sequence[EdgeKey]) -> list[int]:
        return [int(self.labels[e]) for e in edges]


@dataclass
class SolverStats:
    nodes: int = 0
    propagations: int = 0
    proven_optimal: bool = False
    wall_time: float = 0.0

    def record(self) -> dict:
        return {
            "nodes": self.nodes,
            "propagations": self.propagations,
            "proven_optimal": self.proven_optimal,
            "wall_time": round(self.wall_time, 6),
        }


def _assignment(p: InferenceProblem, labels: Sequence[int]) -> Assignment:
    return Assignment({e: LABELS[r] for e, r in zip(p.edges, labels)}, p.objective(labels))


def _best_label(scores: Sequence[float], mask: int = FULL_MASK) -> int:
    best = -1
    for r in range(len(LABELS)):
        if mask >> r & 1 and (best < 0 or scores[r] > scores[best]):
            best = r
    return best


def infer_local(p: InferenceProblem) -> Assignment:
    """Independent argmax per free edge; clamps kept, no transitivity."""
    labels = []
    for e, s in zip(p.edges, p.scores):
        clamp = p.clamps.get(e)
        labels.append(int(clamp) if clamp is not None else _best_label(s))
    return _assignment(p, labels)


def initial_domains(p: InferenceProblem, net: ConstraintNetwork) -> list[int]:
    domains = []
    for e in p.edges:
        m = FULL_MASK
        if p.domains is not None and e in p.domains:
            m = p.domains[e].mask
        clamp = p.clamps.get(e)
        if clamp is not None:
            m &= clamp.bit
        domains.append(m)
    return domains


class _Escalate(Exception):
    pass


_NEG = -1.0e4
_MASK_INDEX = [np.array([r for r in range(len(LABELS)) if m >> r & 1], dtype=np.intp) for m in range(FULL_MASK + 1)]


class _Search:
    """Depth-first branch and bound over label domains.

    Two upper bounds are available.  The cheap one packs edge-disjoint
    triangles and scores each by its best feasible triple.  When the cheap
    search exceeds ``escalate_after`` nodes the search restarts, keeping its
    incumbent, under a triangle-decomposition bound whose potentials are
    tightened at the root by max-product coordinate descent.
    """

    def __init__(self, p: InferenceProblem, net: ConstraintNetwork, node_cap: int, escalate_after: int):
        self.p = p
        self.net = net
        self.node_cap = node_cap
        self.escalate_after = escalate_after
        self.stats = SolverStats()
        n_masks = FULL_MASK + 1
        # best in-domain score per (edge, mask), and label order per edge
        self.best = []
        self.order = []
        for s in p.scores:
            row = [-math.inf] * n_masks
            for m in range(1, n_masks):
                low = m & -m
                v = s[low.bit_length() - 1]
                rest = row[m ^ low]
                row[m] = v if v > rest else rest
            self.best.append(row)
            self.order.append(sorted(range(len(LABELS)), key=lambda r, s=s: (-s[r], r)))
        self.incumbent: list[int] | None = None
        self.inc_value = -math.inf
        self._pack_triangles()
        self.bound = self._packed_bound

    def _pack_triangles(self) -> None:
        """Greedy edge-disjoint triangle packing, most tightening first."""
        tris = self.net.triangles
        self.packed = []
        if not tris:
            self.singles = list(range(len(self.p.scores)))
            return
        scores = np.asarray(self.p.scores, dtype=float)
        ax, ay, az = self.net.allowed_arrays()
        idx = np.asarray(tris, dtype=np.intp)
        sums = scores[idx[:, 0]][:, ax] + scores[idx[:, 1]][:, ay] + scores[idx[:, 2]][:, az]
        top = scores.max(axis=1)
        slack = top[idx].sum(axis=1) - sums.max(axis=1)
        used: set[int] = set()
        for t in np.argsort(-slack, kind="stable"):
            if slack[t] <= 0:
                break
            tri = tris[t]
            if used.intersection(tri):
                continue
            used.update(tri)
            order = np.argsort(-sums[t], kind="stable")
            triples = [(float(sums[t, o]), int(ax[o]), int(ay[o]), int(az[o])) for o in order]
            self.packed.append((tri, triples, {}))
        self.singles = [n for n in range(len(self.p.scores)) if n not in used]

    def _packed_bound(self, domains: list[int]) -> float:
        best = self.best
        total = 0.0
        for n in self.singles:
            total += best[n][domains[n]]
        for (a, b, c), triples, cache in self.packed:
            key = (domains[a], domains[b], domains[c])
            v = cache.get(key)
            if v is None:
                ma, mb, mc = key
                v = -math.inf
                for s, x, y, z in triples:
                    if ma >> x & 1 and mb >> y & 1 and mc >> z & 1:
                        v = s
                        break
                cache[key] = v
            total += v
        return total

    def tighten(self, root: list[int], sweeps: int = 60, tol: float = 1e-7) -> None:
        """Max-product coordinate descent on triangle/edge potentials.

        Every update moves score mass between an edge and its triangles, so
        the potentials always sum to the objective on feasible labelings and
        any sum of per-factor maxima stays an upper bound.
        """
        tris = self.net.triangles
        n_edges = len(self.p.scores)
        feasible = np.full((len(LABELS),) * 3, _NEG)
        for x, y, z in self.net._allowed:
            feasible[x, y, z] = 0.0
        theta_t = np.repeat(feasible[None], len(tris), axis=0)
        theta_e = np.array(self.p.scores, dtype=float)
        for n, m in enumerate(root):
            out = np.ones(len(LABELS), dtype=bool)
            out[_MASK_INDEX[m]] = False
            theta_e[n, out] = _NEG
        members: list[list[tuple[int, int]]] = [[] for _ in range(n_edges)]
        for t, tri in enumerate(tris):
            for axis, e in enumerate(tri):
                members[e].append((t, axis))
        others = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
        shapes = {0: (6, 1, 1), 1: (1, 6, 1), 2: (1, 1, 6)}
        prev = math.inf
        for _ in range(sweeps):
            for e in range(n_edges):
                mem = members[e]
                if not mem:
                    continue
                msgs = [theta_t[t].max(axis=others[ax]) for t, ax in mem]
                belief = theta_e[e] + sum(msgs)
                share = belief / (len(mem) + 1)
                theta_e[e] = share
                for (t, ax), msg in zip(mem, msgs):
                    theta_t[t] += (share - msg).reshape(shapes[ax])
            value = float(theta_e.max(axis=1).sum() + theta_t.reshape(len(tris), -1).max(axis=1).sum())
            if prev - value < tol:
                break
            prev = value
        self.theta_t = theta_t
        self.theta_e_best = [[float(row[_MASK_INDEX[m]].max()) if m else -math.inf for m in range(FULL_MASK + 1)] for row in theta_e]
        self.tri_cache: list[dict] = [{} for _ in tris]
        self.bound = self._lp_bound

    def _lp_bound(self, domains: list[int]) -> float:
        total = 0.0
        for n, row in enumerate(self.theta_e_best):
            total += row[domains[n]]
        idx = _MASK_INDEX
        for t, (a, b, c) in enumerate(self.net.triangles):
            key = (domains[a], domains[b], domains[c])
            cache = self.tri_cache[t]
            v = cache.get(key)
            if v is None:
                v = cache[key] = float(self.theta_t[t][np.ix_(idx[key[0]], idx[key[1]], idx[key[2]])].max())
            total += v
        # packed bound is valid too; keep the tighter of the two
        return min(total, self._packed_bound(domains))

    def _pick(self, domains: list[int]) -> int:
        pick, pick_gap = -1, -1.0
        for n, m in enumerate(domains):
            if m & (m - 1) == 0:
                continue
            top = second = -math.inf
            for r in self.order[n]:
                if m >> r & 1:
                    if top == -math.inf:
                        top = self.p.scores[n][r]
                    else:
                        second = self.p.scores[n][r]
                        break
            gap = top - second
            if gap > pick_gap:
                pick, pick_gap = n, gap
        return pick

    def _no_smaller(self, domains: list[int]) -> bool:
        """True when no labeling inside ``domains`` precedes the incumbent."""
        inc = self.incumbent
        for n, m in enumerate(domains):
            low = (m & -m).bit_length() - 1
            if low != inc[n]:
                return low > inc[n]
        return True

    def _offer(self, domains: list[int]) -> None:
        labels = [m.bit_length() - 1 for m in domains]
        value = self.p.objective(labels)
        if self.incumbent is None or value > self.inc_value or (
            value == self.inc_value and labels < self.incumbent
        ):
            self.incumbent, self.inc_value = labels, value

    def run(self, domains: list[int]) -> None:
        self.stats.nodes += 1
        if self.stats.nodes > self.node_cap:
            raise SolverLimitError(f"node cap {self.node_cap} exceeded")
        if self.stats.nodes > self.escalate_after:
            raise _Escalate
        bound = self.bound(domains)
        if bound < self.inc_value - _EPS:
            return
        if self.incumbent is not None and bound <= self.inc_value + _EPS and self._no_smaller(domains):
            # nothing better here, and no tie that wins the lexicographic order
            return
        n = self._pick(domains)
        if n < 0:
            self._offer(domains)
            return
        m = domains[n]
        for r in self.order[n]:
            if not m >> r & 1:
                continue
            child = list(domains)
            child[n] = 1 << r
            try:
                self.stats.propagations += self.net.propagate(child, (n,))
            except Conflict:
                continue
            self.run(child)

    def solve(self, root: list[int]) -> None:
        try:
            self.run(list(root))
        except _Escalate:
            self.tighten(root)
            self.escalate_after = math.inf
            self.run(list(root))


def infer_global(
    p: InferenceProblem,
    node_cap: int = DEFAULT_NODE_CAP,
    stats: SolverStats | None = None,
    escalate_after: int = 2000,
) -> Assignment:
    """Exact branch-and-bound maximization under transitivity and clamps."""
    t0 = time.perf_counter()
    net = p.network()
    domains = initial_domains(p, net)
    try:
        fired = net.propagate(domains)
    except Conflict as exc:
        raise InfeasibleError(exc.edges) from None
    # per-edge argmax inside the root domains is optimal whenever it is
    # jointly feasible; it is also the lexicographically smallest optimum
    greedy = [_best_label(s, m) for s, m in zip(p.scores, domains)]
    if net.feasible(greedy):
        if stats is not None:
            stats.nodes, stats.propagations, stats.proven_optimal = 1, fired, True
            stats.wall_time = time.perf_counter() - t0
        return _assignment(p, greedy)
    search = _Search(p, net, node_cap, escalate_after)
    search.stats.propagations += fired
    search.solve(domains)
    if search.incumbent is None:
        # path consistency can leave an unsatisfiable residue only on inconsistent clamps
        raise InfeasibleError(sorted(p.clamps))
    search.stats.proven_optimal = True
    search.stats.wall_time = time.perf_counter() - t0
    if stats is not None:
        for k, v in vars(search.stats).items():
            setattr(stats, k, v)
    return _assignment(p, search.incumbent)


def brute_force(p: InferenceProblem) -> Assignment:
    """Enumerate every labeling of the free edges; verification only."""
    free = p.free()
    if len(free) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force refused: {len(free)} free edges > {BRUTE_FORCE_LIMIT}")
    net = p.network()
    labels = [int(p.clamps[e]) if e in p.clamps else 0 for e in p.edges]
    best: list[int] | None = None
    best_value = -math.inf
    for combo in itertools.product(range(len(LABELS)), repeat=len(free)):
        for n, r in zip(free, combo):
            labels[n] = r
        if not net.feasible(labels):
            continue
        value = p.objective(labels)
        # product() is lexicographic, so the first maximizer is the smallest
        if value > best_value:
            best, best_value = list(labels), value
    if best is None:
        raise InfeasibleError(sorted(p.clamps))
    return _assignment(p, best)


def is_consistent(p: InferenceProblem, a: Assignment) -> bool:
    labels = a.as_list(p.edges)
    if any(a.labels[e] != r for e, r in p.clamps.items()):
        return False
    return not p.network().violations(labels)
