"""Exact branch-and-bound for the latency-constrained minimum spanning tree.

Search nodes fix edges in or out. The Kruskal completion of the fixed
decisions is both the lower bound and, when it satisfies every constraint,
the optimum of the subtree. Otherwise the cheapest undecided completion edge
is branched on, include-branch first.
"""

from __future__ import annotations

import heapq
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .netmodel import (
    ConstraintReport,
    ConstraintSet,
    Network,
    SpanningTree,
    check_constraints,
    tree_cost,
)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
BUDGET_EXHAUSTED = "budget_exhausted"

# admissibility slack for comparing a float shortest-path bound with a threshold
_SP_RTOL = 1e-9


@dataclass(frozen=True)
class Budget:
    seconds: float = 60.0
    nodes: int = 10_000_000


@dataclass(frozen=True)
class SearchNode:
    forced_in: frozenset
    forced_out: frozenset
    bound: float = 0.0


@dataclass
class SearchStats:
    nodes_expanded: int = 0
    incumbent_updates: int = 0
    max_depth: int = 0
    prunes: dict = field(default_factory=lambda: {
        "bound": 0, "feasibility": 0, "shortest_path": 0, "disconnected": 0,
    })

    def to_dict(self) -> dict:
        return {
            "nodes_expanded": self.nodes_expanded,
            "incumbent_updates": self.incumbent_updates,
            "max_depth": self.max_depth,
            "prunes": dict(self.prunes),
        }


@dataclass
class SolveOutcome:
    status: str
    tree: SpanningTree | None = None
    cost: float | None = None
    report: ConstraintReport | None = None
    reason: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def feasible(self) -> bool:
        return self.tree is not None

    def to_dict(self, net: Network) -> dict:
        d = {"status": self.status}
        if self.tree is not None:
            d["edges"] = [[net.labels[i], net.labels[j]] for i, j in self.tree.edges]
            d["total_cost"] = self.cost
            d["constraints"] = self.report.to_list(net) if self.report is not None else []
        else:
            d["edges"] = None
            d["total_cost"] = None
        if self.reason:
            d["reason"] = self.reason
        d["stats"] = dict(self.stats)
        return d


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def _edge_order(net: Network) -> list[int]:
    return sorted(range(net.m), key=lambda k: (net.costs[k], k))


def kruskal_completion(net: Network, forced_in: Iterable[int] = (), forced_out: Iterable[int] = (),
                       order: list[int] | None = None) -> list[int] | None:
    """Edge indices of the cheapest spanning tree honoring the decisions, or None."""
    forced_in = list(forced_in)
    forced_out = set(forced_out)
    if forced_out.intersection(forced_in):
        raise ValueError("an edge cannot be forced both in and out")
    uf = _UnionFind(net.n)
    chosen = []
    for k in sorted(forced_in):
        i, j = net.edges[k]
        if not uf.union(i, j):
            raise ValueError("forced-in edges contain a cycle")
        chosen.append(k)
    fin = set(forced_in)
    for k in (order if order is not None else _edge_order(net)):
        if len(chosen) == net.n - 1:
            break
        if k in fin or k in forced_out:
            continue
        i, j = net.edges[k]
        if uf.union(i, j):
            chosen.append(k)
    if len(chosen) != net.n - 1:
        return None
    return chosen


def kruskal_bound(net: Network, forced_in: Iterable[int] = (), forced_out: Iterable[int] = ()) -> float:
    """Cost of the minimum spanning completion; ``inf`` signals that none exists."""
    comp = kruskal_completion(net, forced_in, forced_out)
    if comp is None:
        return math.inf
    return math.fsum(net.costs[k] for k in comp)


def _forest_path(net: Network, adj: dict, a: int, b: int):
    """(length, hops) of the a-b path in a forest given as adjacency, or None."""
    if a not in adj:
        return None
    prev = {a: None}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        if u == b:
            break
        for v, k in adj.get(u, ()):
            if v not in prev:
                prev[v] = (u, k)
                queue.append(v)
    if b not in prev:
        return None
    ks = []
    u = b
    while prev[u] is not None:
        u, k = prev[u]
        ks.append(k)
    return math.fsum(net.lengths[k] for k in ks), len(ks)


def _graph_distances(net: Network, forced_out: frozenset, sources: set[int]):
    """Shortest-path lengths and hop distances from each source, skipping excluded edges."""
    lengths, hops = {}, {}
    for s in sources:
        dist = [math.inf] * net.n
        dist[s] = 0.0
        heap = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, k in net.neighbors(u):
                if k in forced_out:
                    continue
                nd = d + net.lengths[k]
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        hop = [math.inf] * net.n
        hop[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v, k in net.neighbors(u):
                if k not in forced_out and hop[v] == math.inf:
                    hop[v] = hop[u] + 1
                    queue.append(v)
        lengths[s], hops[s] = dist, hop
    return lengths, hops


def solve_exact(net: Network, C: ConstraintSet | None = None, budget: Budget | None = None, *,
                forced_in: Iterable[int] = (), forced_out: Iterable[int] = ()) -> SolveOutcome:
    """Provably optimal constrained spanning tree, infeasibility, or the best incumbent on budget exhaustion.

    ``forced_in``/``forced_out`` (edge indices) restrict the search to trees
    honoring those decisions.
    """
    C = ConstraintSet() if C is None else C
    C.validate(net)
    budget = budget or Budget()
    active = [c for c in C if c.bounded]
    order = _edge_order(net)
    stats = SearchStats()
    t0 = time.perf_counter()
    deadline = t0 + budget.seconds

    best_cost = math.inf
    best: list[int] | None = None
    root_reason = ""
    sp_cache: dict = {}
    sources = {c.a for c in active}

    root = SearchNode(frozenset(forced_in), frozenset(forced_out))
    if root.forced_in & root.forced_out:
        raise ValueError("an edge cannot be forced both in and out")
    stack = [(root, 0)]
    exhausted = False

    while stack:
        if stats.nodes_expanded >= budget.nodes or time.perf_counter() > deadline:
            exhausted = True
            break
        node, depth = stack.pop()
        stats.nodes_expanded += 1
        stats.max_depth = max(stats.max_depth, depth)
        is_root = depth == 0

        comp = kruskal_completion(net, node.forced_in, node.forced_out, order)
        if comp is None:
            stats.prunes["disconnected"] += 1
            if is_root:
                root_reason = "the forced edge decisions admit no spanning tree"
            continue
        bound = math.fsum(net.costs[k] for k in comp)
        if bound >= best_cost:
            stats.prunes["bound"] += 1
            continue

        # (b) pairs already joined by forced-in edges have a fixed path
        violated = None
        if node.forced_in and active:
            adj: dict = {}
            for k in node.forced_in:
                i, j = net.edges[k]
                adj.setdefault(i, []).append((j, k))
                adj.setdefault(j, []).append((i, k))
            for c in active:
                fp = _forest_path(net, adj, c.a, c.b)
                if fp is not None and (fp[0] > c.max_length or fp[1] > c.max_hops):
                    violated = c
                    break
        if violated is not None:
            stats.prunes["feasibility"] += 1
            continue

        # (c) no tree path can beat the graph shortest path
        if active:
            key = node.forced_out
            if key not in sp_cache:
                sp_cache[key] = _graph_distances(net, key, sources)
            dist, hop = sp_cache[key]
            blocked = None
            for c in active:
                d = dist[c.a][c.b]
                if d > c.max_length * (1.0 + _SP_RTOL) or hop[c.a][c.b] > c.max_hops:
                    blocked = (c, d, hop[c.a][c.b])
                    break
            if blocked is not None:
                stats.prunes["shortest_path"] += 1
                if is_root:
                    c, d, h = blocked
                    la, lb = net.labels[c.a], net.labels[c.b]
                    if d > c.max_length * (1.0 + _SP_RTOL):
                        root_reason = (f"shortest {la}-{lb} path in the graph is {d:.2f} km, "
                                       f"above the {c.max_length:g} km limit")
                    else:
                        root_reason = (f"fewest-hop {la}-{lb} path in the graph has {h} hops, "
                                       f"above the {c.max_hops:g} hop limit")
                continue

        tree = SpanningTree.from_edge_indices(net, comp)
        if check_constraints(tree, net, ConstraintSet(active)).satisfied:
            best_cost, best = bound, comp
            stats.incumbent_updates += 1
            continue

        undecided = [k for k in comp if k not in node.forced_in]
        if not undecided:
            stats.prunes["feasibility"] += 1
            continue
        e = min(undecided, key=lambda k: (net.costs[k], k))
        # LIFO: push exclude first so include is explored first
        stack.append((SearchNode(node.forced_in, node.forced_out | {e}, bound), depth + 1))
        stack.append((SearchNode(node.forced_in | {e}, node.forced_out, bound), depth + 1))

    stats_d = stats.to_dict()
    if best is not None:
        tree = SpanningTree.from_edge_indices(net, best)
        out = SolveOutcome(
            BUDGET_EXHAUSTED if exhausted else OPTIMAL,
            tree,
            tree_cost(tree, net),
            check_constraints(tree, net, C),
            "budget exhausted; best incumbent returned" if exhausted else "",
            stats_d,
        )
        return out
    if exhausted:
        return SolveOutcome(BUDGET_EXHAUSTED, reason="budget exhausted before any feasible tree was found",
                            stats=stats_d)
    return SolveOutcome(INFEASIBLE, reason=root_reason or "no spanning tree satisfies the constraints",
                        stats=stats_d)
