"""Path-consistency propagation over an edge set, on label bitmasks.

Shared by corpus-level domain propagation and the branch-and-bound solver.
Only triangles whose three edges are all present are constrained.
"""
from __future__ import annotations

from collections import deque
from functools import lru_cache

import numpy as np
from typing import Sequence

from .algebra import FULL_MASK, INVERSE_MASK, CompositionTable

EdgeKey = tuple[int, int]

_INV_LABEL = tuple(INVERSE_MASK[1 << r].bit_length() - 1 for r in range(6))


class Conflict(Exception):
    """Raised when propagation empties a domain."""

    def __init__(self, edges: Sequence[EdgeKey]):
        self.edges = list(edges)
        super().__init__(f"inconsistent constraints on edges {self.edges}")


class ConstraintNetwork:
    """Triangle constraints for a fixed list of canonical edges (``src < dst``).

    For the triangle ``i < j < k`` with ``a=(i,j)``, ``b=(j,k)``, ``c=(i,k)``
    a label triple is allowed when it passes all three composition checks::

        c in a . b
        a in c . inv(b)
        b in inv(a) . c

    Propagation keeps, on each edge, only labels that extend to an allowed
    triple with the other two domains.  Composing label sets alone is weaker
    here because a vague input composes to the full set.
    """

    def __init__(self, edges: Sequence[EdgeKey], table: CompositionTable):
        self.edges = list(edges)
        self.index = {e: n for n, e in enumerate(self.edges)}
        if len(self.index) != len(self.edges):
            raise ValueError("duplicate edges")
        for s, d in self.edges:
            if not s < d:
                raise ValueError(f"edge ({s}, {d}) is not canonical")
        self.table = table
        self._allowed = _allowed_triples(table)
        sup_a, sup_b, sup_c = _support_tables(self._allowed)
        # rule = (target, x, y, support[x_mask][y_mask])
        self.rules: list[tuple[int, int, int, tuple]] = []
        self.watch: list[list[int]] = [[] for _ in self.edges]
        self.triangles: list[tuple[int, int, int]] = []
        out: dict[int, list[int]] = {}
        for s, d in self.edges:
            out.setdefault(s, []).append(d)
        for i, js in out.items():
            for j in js:
                for k in out.get(j, ()):
                    c = self.index.get((i, k))
                    if c is None:
                        continue
                    a = self.index[i, j]
                    b = self.index[j, k]
                    self.triangles.append((a, b, c))
                    for rule in ((c, a, b, sup_c), (a, b, c, sup_a), (b, a, c, sup_b)):
                        rid = len(self.rules)
                        self.rules.append(rule)
                        self.watch[rule[1]].append(rid)
                        self.watch[rule[2]].append(rid)
        self.triangles.sort()

    def __len__(self) -> int:
        return len(self.edges)

    def propagate(self, domains: list[int], changed: Sequence[int] | None = None) -> int:
        """Refine ``domains`` in place to the path-consistent fixpoint.

        ``changed`` limits the initial work list to rules watching those edges
        (all rules when ``None``).  Returns the number of rule firings.
        Raises :class:`Conflict` with the offending triangle on a wipeout.
        """
        rules, watch = self.rules, self.watch
        if changed is None:
            queue = deque(range(len(rules)))
        else:
            queue = deque(rid for e in changed for rid in watch[e])
        queued = [False] * len(rules)
        for rid in queue:
            queued[rid] = True
        fired = 0
        while queue:
            rid = queue.popleft()
            queued[rid] = False
            t, x, y, sup = rules[rid]
            old = domains[t]
            new = old & sup[domains[x]][domains[y]]
            fired += 1
            if new == old:
                continue
            domains[t] = new
            if not new:
                raise Conflict([self.edges[t], self.edges[x], self.edges[y]])
            for r2 in watch[t]:
                if not queued[r2]:
                    queued[r2] = True
                    queue.append(r2)
        return fired

    def allowed_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Feasible triangle triples as three index arrays, lexicographic."""
        arr = np.array(sorted(self._allowed), dtype=np.intp)
        return arr[:, 0], arr[:, 1], arr[:, 2]

    def feasible(self, labels: Sequence[int]) -> bool:
        allowed = self._allowed
        return all((labels[a], labels[b], labels[c]) in allowed for a, b, c in self.triangles)

    def violations(self, labels: Sequence[int]) -> list[tuple[EdgeKey, EdgeKey, EdgeKey]]:
        """Triangles whose single-label assignment breaks a composition rule."""
        allowed = self._allowed
        return [
            (self.edges[a], self.edges[b], self.edges[c])
            for a, b, c in self.triangles
            if (labels[a], labels[b], labels[c]) not in allowed
        ]


@lru_cache(maxsize=4096)
def _cached_network(edges: tuple[EdgeKey, ...], table: CompositionTable) -> ConstraintNetwork:
    return ConstraintNetwork(edges, table)


def network_for(edges: Sequence[EdgeKey], table: CompositionTable) -> ConstraintNetwork:
    """Shared network for an edge list; networks are read-only after build."""
    return _cached_network(tuple(edges), table)


def _allowed_triples(table: CompositionTable) -> frozenset[tuple[int, int, int]]:
    """Label triples (a, b, c) on a triangle that satisfy all three rules."""
    comp = table.rows()
    inv = _INV_LABEL
    return frozenset(
        (la, lb, lc)
        for la in range(6) for lb in range(6) for lc in range(6)
        if comp[la][lb] >> lc & 1 and comp[lc][inv[lb]] >> la & 1 and comp[inv[la]][lc] >> lb & 1
    )


@lru_cache(maxsize=8)
def _support_tables(allowed: frozenset) -> tuple[tuple, tuple, tuple]:
    """Supported labels of one triangle position given masks of the other two.

    Returns tables for ``a`` indexed ``[b][c]``, ``b`` indexed ``[a][c]`` and
    ``c`` indexed ``[a][b]``.
    """
    n = FULL_MASK + 1
    single = [[[0] * 6 for _ in range(6)] for _ in range(3)]
    for x, y, z in allowed:
        single[0][y][z] |= 1 << x
        single[1][x][z] |= 1 << y
        single[2][x][y] |= 1 << z
    out = []
    for pos in range(3):
        rows = []
        for m1 in range(n):
            row = []
            for m2 in range(n):
                acc = 0
                for u in range(6):
                    if m1 >> u & 1:
                        for v in range(6):
                            if m2 >> v & 1:
                                acc |= single[pos][u][v]
                row.append(acc)
            rows.append(tuple(row))
        out.append(tuple(rows))
    return out[0], out[1], out[2]
