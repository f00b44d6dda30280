"""Prim-based constrained heuristic, exhaustive enumeration oracle, random instances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .netmodel import (
    ConstraintReport,
    ConstraintSet,
    Network,
    SpanningTree,
    check_constraints,
    tree_cost,
)
from .solver import INFEASIBLE, OPTIMAL, SolveOutcome

MAX_ENUMERATION_NODES = 10

FEASIBLE = "feasible"
FAILED = "failed"


@dataclass
class HeuristicOutcome:
    status: str
    start: int
    tree: SpanningTree | None = None
    cost: float | None = None
    report: ConstraintReport | None = None
    eliminated: list = field(default_factory=list)  # edge pairs dropped on violation
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return self.tree is not None

    def to_dict(self, net: Network) -> dict:
        d = {
            "status": self.status,
            "start": net.labels[self.start],
            "edges": [[net.labels[i], net.labels[j]] for i, j in self.tree.edges] if self.tree else None,
            "total_cost": self.cost,
        }
        if self.report is not None:
            d["constraints"] = self.report.to_list(net)
        d["eliminated_edges"] = [[net.labels[i], net.labels[j]] for i, j in self.eliminated]
        if self.reason:
            d["reason"] = self.reason
        return d


def prim_constrained(net: Network, C: ConstraintSet | None = None, start: int = 0) -> HeuristicOutcome:
    """Grow a tree from ``start``, skipping frontier edges that break a constraint.

    Before node ``j`` joins through edge ``(i, j)``, every constrained pair
    between ``j`` and a node already in the tree is checked; paths between
    tree nodes never change afterwards, so this is the only time a pair needs
    checking. A rejected edge is dropped for good, which makes the method
    incomplete: it can fail on feasible instances.
    """
    C = ConstraintSet() if C is None else C
    C.validate(net)
    if not 0 <= start < net.n:
        raise ValueError(f"start node {start} outside the network")
    n = net.n
    W = np.full((n, n), np.inf)
    for k, (i, j) in enumerate(net.edges):
        W[i, j] = W[j, i] = net.costs[k]

    partners: list[list] = [[] for _ in range(n)]
    for c in C:
        if c.bounded:
            partners[c.a].append((c.b, c))
            partners[c.b].append((c.a, c))

    in_tree = np.zeros(n, dtype=bool)
    in_tree[start] = True
    key = W[start].copy()
    key[start] = np.inf
    via = np.full(n, start)
    tree_parent = [-1] * n
    parent_len = [0.0] * n
    depth = [0] * n
    edges = []
    eliminated = []

    def path_to(u, v):
        """Edge lengths on the tree path between two tree nodes."""
        out = []
        while depth[u] > depth[v]:
            out.append(parent_len[u])
            u = tree_parent[u]
        while depth[v] > depth[u]:
            out.append(parent_len[v])
            v = tree_parent[v]
        while u != v:
            out.append(parent_len[u])
            out.append(parent_len[v])
            u, v = tree_parent[u], tree_parent[v]
        return out

    for _ in range(n - 1):
        while True:
            j = int(np.argmin(key))
            if not math.isfinite(key[j]):
                return HeuristicOutcome(
                    FAILED, start, eliminated=eliminated,
                    reason=f"frontier exhausted with {int(in_tree.sum())} of {n} nodes connected "
                           f"after eliminating {len(eliminated)} edge(s)",
                )
            i = int(via[j])
            lij = net.lengths[net.edge_index(i, j)]
            ok = True
            for u, c in partners[j]:
                if in_tree[u]:
                    segs = path_to(i, u)
                    segs.append(lij)
                    if math.fsum(segs) > c.max_length or len(segs) > c.max_hops:
                        ok = False
                        break
            if ok:
                break
            eliminated.append((min(i, j), max(i, j)))
            W[i, j] = W[j, i] = np.inf
            col = np.where(in_tree, W[:, j], np.inf)
            via[j] = int(np.argmin(col))
            key[j] = col[via[j]]

        in_tree[j] = True
        tree_parent[j], parent_len[j], depth[j] = i, lij, depth[i] + 1
        edges.append((i, j))
        key[j] = np.inf
        row = np.where(in_tree, np.inf, W[j])
        better = row < key
        key[better] = row[better]
        via[better] = j

    tree = SpanningTree(n, tuple(edges))
    report = check_constraints(tree, net, C)
    return HeuristicOutcome(FEASIBLE, start, tree, tree_cost(tree, net), report, eliminated)


def sweep_starts(net: Network, C: ConstraintSet | None = None) -> HeuristicOutcome:
    """Run from every start node and keep the cheapest feasible tree (lowest start wins ties)."""
    best = None
    for s in range(net.n):
        out = prim_constrained(net, C, s)
        if best is None or (out.feasible and (not best.feasible or out.cost < best.cost)):
            best = out
    return best


def enumerate_trees(net: Network) -> Iterator[SpanningTree]:
    """Yield every spanning tree of ``net`` exactly once.

    Include/exclude recursion over edges in index order. An edge is included
    only if it joins two components and excluded only if the remaining edges
    still connect the graph, so every branch ends in a spanning tree.
    """
    if net.n > MAX_ENUMERATION_NODES:
        raise ValueError(f"enumeration is limited to {MAX_ENUMERATION_NODES} nodes, got {net.n}")
    n, m = net.n, net.m
    edges = net.edges

    def find(parent, x):
        while parent[x] != x:
            x = parent[x]
        return x

    def connected(chosen, start):
        adj = [[] for _ in range(n)]
        for k in chosen:
            i, j = edges[k]
            adj[i].append(j)
            adj[j].append(i)
        for k in range(start, m):
            i, j = edges[k]
            adj[i].append(j)
            adj[j].append(i)
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == n

    def rec(k, chosen, parent):
        if len(chosen) == n - 1:
            yield SpanningTree(n, tuple(edges[e] for e in chosen))
            return
        if k == m:
            return
        i, j = edges[k]
        ri, rj = find(parent, i), find(parent, j)
        if ri != rj:
            p2 = list(parent)
            p2[ri] = rj
            chosen.append(k)
            yield from rec(k + 1, chosen, p2)
            chosen.pop()
        if connected(chosen, k + 1):
            yield from rec(k + 1, chosen, parent)

    yield from rec(0, [], list(range(n)))


def brute_force_optimum(net: Network, C: ConstraintSet | None = None) -> SolveOutcome:
    """Minimum-cost constrained tree by exhaustive enumeration (n <= 10)."""
    C = ConstraintSet() if C is None else C
    C.validate(net)
    best, best_cost = None, math.inf
    total = feasible = 0
    for tree in enumerate_trees(net):
        total += 1
        if check_constraints(tree, net, C).satisfied:
            feasible += 1
            cost = tree_cost(tree, net)
            if cost < best_cost:
                best, best_cost = tree, cost
    stats = {"trees_enumerated": total, "trees_feasible": feasible}
    if best is None:
        return SolveOutcome(INFEASIBLE, reason=f"none of the {total} spanning trees satisfies the constraints",
                            stats=stats)
    return SolveOutcome(OPTIMAL, best, best_cost, check_constraints(best, net, C), stats=stats)


def random_points(n: int, seed: int, side: float = 500.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, side, size=(n, 2))


def random_instance(n: int, seed: int, side: float = 500.0) -> Network:
    """Complete graph on ``n`` uniform points in ``[0, side]^2`` with Euclidean lengths as costs."""
    if n < 2:
        raise ValueError("need at least two nodes")
    pts = random_points(n, seed, side)
    rows = []
    for i in range(n):
        for j in range(i + 1, n):
            d = float(math.hypot(*(pts[i] - pts[j])))
            rows.append((str(i), str(j), d, d))
    return Network.from_rows(rows, labels=[str(i) for i in range(n)])
