"""Networks, spanning trees, tree paths and per-pair latency constraints.

Nodes are indexed ``0..n-1`` internally and carry string labels for I/O.
Edges are unordered pairs stored as ``(i, j)`` with ``i < j``. Every sum of
lengths or costs goes through :func:`math.fsum`, so the same edge multiset
yields bit-identical totals regardless of the route that produced it.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

UNBOUNDED = math.inf
CASE_STUDY_RATE_USD_PER_KM = 24_000.0


def _norm(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True, eq=False)
class Network:
    labels: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]
    lengths: tuple[float, ...]
    costs: tuple[float, ...]
    _index: dict = field(default_factory=dict, repr=False)
    _adj: tuple = field(default=(), repr=False)

    def __post_init__(self):
        n = len(self.labels)
        if n < 2:
            raise ValueError("a network needs at least two nodes")
        if len(set(self.labels)) != n:
            raise ValueError("node labels must be unique")
        if not (len(self.edges) == len(self.lengths) == len(self.costs)):
            raise ValueError("edges, lengths and costs differ in length")
        index = {}
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        edges = []
        for k, (i, j) in enumerate(self.edges):
            if i == j:
                raise ValueError(f"self-loop at node {self.labels[i]}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) references an unknown node")
            e = _norm(i, j)
            if e in index:
                raise ValueError(f"duplicate edge {self.labels[e[0]]}-{self.labels[e[1]]}")
            for what, v in (("length", self.lengths[k]), ("cost", self.costs[k])):
                if not (math.isfinite(v) and v > 0):
                    raise ValueError(f"edge {self.labels[e[0]]}-{self.labels[e[1]]} has invalid {what} {v}")
            index[e] = k
            edges.append(e)
            adj[i].append((j, k))
            adj[j].append((i, k))
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "lengths", tuple(float(v) for v in self.lengths))
        object.__setattr__(self, "costs", tuple(float(v) for v in self.costs))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_adj", tuple(tuple(a) for a in adj))
        if not self.is_connected():
            raise ValueError("network is not connected")

    @classmethod
    def from_rows(cls, rows: Iterable[tuple], rate_per_km: float = 1.0,
                  labels: Sequence[str] | None = None) -> "Network":
        """Build from ``(a, b, length_km[, cost])`` rows keyed by label.

        A missing or ``None`` cost is derived from the length at ``rate_per_km``.
        Node order follows ``labels`` if given, else first appearance.
        """
        rows = list(rows)
        order = list(labels) if labels is not None else []
        pos = {lab: k for k, lab in enumerate(order)}
        if labels is None:
            for r in rows:
                for lab in (r[0], r[1]):
                    if lab not in pos:
                        pos[lab] = len(order)
                        order.append(lab)
        edges, lengths, costs = [], [], []
        for r in rows:
            a, b, length = r[0], r[1], float(r[2])
            cost = r[3] if len(r) > 3 else None
            if a not in pos or b not in pos:
                raise ValueError(f"edge {a}-{b} references an unknown node")
            edges.append((pos[a], pos[b]))
            lengths.append(length)
            costs.append(cost_from_length(length, rate_per_km) if cost is None else float(cost))
        return cls(tuple(order), tuple(edges), tuple(lengths), tuple(costs))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def m(self) -> int:
        return len(self.edges)

    def node(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown node {label!r}") from None

    def edge_index(self, i: int, j: int) -> int:
        try:
            return self._index[_norm(i, j)]
        except KeyError:
            raise KeyError(f"no edge between {i} and {j}") from None

    def has_edge(self, i: int, j: int) -> bool:
        return _norm(i, j) in self._index

    def neighbors(self, i: int) -> tuple[tuple[int, int], ...]:
        """``(neighbor, edge_index)`` pairs of node ``i``."""
        return self._adj[i]

    def is_connected(self, excluded: Iterable[int] = ()) -> bool:
        excluded = set(excluded)
        seen = [False] * self.n
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            for v, k in self._adj[u]:
                if not seen[v] and k not in excluded:
                    seen[v] = True
                    stack.append(v)
        return all(seen)

    def with_costs(self, costs: Sequence[float]) -> "Network":
        return Network(self.labels, self.edges, self.lengths, tuple(costs))

    def length_matrix(self) -> np.ndarray:
        """Dense matrix of direct edge lengths, ``inf`` where no edge exists."""
        W = np.full((self.n, self.n), np.inf)
        for (i, j), length in zip(self.edges, self.lengths):
            W[i, j] = W[j, i] = length
        np.fill_diagonal(W, 0.0)
        return W


@dataclass(frozen=True)
class Constraint:
    """Upper bounds on the tree path between ``a`` and ``b``."""

    a: int
    b: int
    max_length: float = UNBOUNDED
    max_hops: float = UNBOUNDED

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("a constraint needs two distinct nodes")
        if not self.max_length > 0:
            raise ValueError(f"max_length must be positive, got {self.max_length}")
        if not self.max_hops > 0:
            raise ValueError(f"max_hops must be positive, got {self.max_hops}")
        if math.isfinite(self.max_hops) and self.max_hops != int(self.max_hops):
            raise ValueError(f"max_hops must be an integer, got {self.max_hops}")

    @property
    def pair(self) -> tuple[int, int]:
        return _norm(self.a, self.b)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.max_length) or math.isfinite(self.max_hops)


class ConstraintSet(tuple):
    """Immutable collection of constraints with at most one entry per pair."""

    def __new__(cls, entries: Iterable[Constraint] = ()):
        entries = tuple(entries)
        seen = set()
        for c in entries:
            if c.pair in seen:
                raise ValueError(f"duplicate constraint for pair {c.pair}")
            seen.add(c.pair)
        return super().__new__(cls, entries)

    def __repr__(self):
        return f"ConstraintSet({list(self)!r})"

    def validate(self, net: Network) -> None:
        for c in self:
            if not (0 <= c.a < net.n and 0 <= c.b < net.n):
                raise ValueError(f"constraint ({c.a}, {c.b}) references a node outside the network")

    def union(self, other: "ConstraintSet") -> "ConstraintSet":
        return ConstraintSet(tuple(self) + tuple(other))


@dataclass(frozen=True, eq=False)
class SpanningTree:
    """Edge set of a spanning tree over nodes ``0..n-1``."""

    n: int
    edges: tuple[tuple[int, int], ...]
    _adj: tuple = field(default=(), repr=False)

    def __post_init__(self):
        edges = tuple(sorted(_norm(i, j) for i, j in self.edges))
        if len(edges) != self.n - 1:
            raise ValueError(f"a spanning tree on {self.n} nodes has {self.n - 1} edges, got {len(edges)}")
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate tree edge")
        parent = list(range(self.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in edges:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"tree edge ({i}, {j}) outside node range")
            ri, rj = find(i), find(j)
            if ri == rj:
                raise ValueError("tree edges contain a cycle")
            parent[ri] = rj
            adj[i].append(j)
            adj[j].append(i)
        # n - 1 acyclic edges on n nodes are connected
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))

    def __eq__(self, other):
        return isinstance(other, SpanningTree) and (self.n, self.edges) == (other.n, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges))

    def path_nodes(self, a: int, b: int) -> list[int]:
        """Nodes on the unique tree path from ``a`` to ``b``, inclusive."""
        prev = {a: None}
        queue = deque([a])
        while queue:
            u = queue.popleft()
            if u == b:
                break
            for v in self._adj[u]:
                if v not in prev:
                    prev[v] = u
                    queue.append(v)
        path = [b]
        while path[-1] != a:
            path.append(prev[path[-1]])
        return path[::-1]

    def side(self, i: int, j: int) -> frozenset[int]:
        """Nodes on ``j``'s side once tree edge ``(i, j)`` is removed."""
        if _norm(i, j) not in self.edges:
            raise ValueError(f"({i}, {j}) is not a tree edge")
        seen = {j}
        stack = [j]
        while stack:
            u = stack.pop()
            for v in self._adj[u]:
                if v not in seen and not (u == j and v == i):
                    seen.add(v)
                    stack.append(v)
        return frozenset(seen)

    def edge_indices(self, net: Network) -> tuple[int, ...]:
        if net.n != self.n:
            raise ValueError("tree and network differ in node count")
        try:
            return tuple(net.edge_index(i, j) for i, j in self.edges)
        except KeyError as exc:
            raise ValueError(f"tree uses an edge missing from the network: {exc}") from None

    @classmethod
    def from_edge_indices(cls, net: Network, indices: Iterable[int]) -> "SpanningTree":
        return cls(net.n, tuple(net.edges[k] for k in indices))


@dataclass(frozen=True)
class TreePath:
    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    length_km: float

    @property
    def hops(self) -> int:
        return len(self.edges)

    def reversed(self) -> "TreePath":
        return TreePath(self.nodes[::-1], tuple((v, u) for u, v in self.edges[::-1]), self.length_km)


def tree_path(tree: SpanningTree, net: Network, a: int, b: int) -> TreePath:
    nodes = tree.path_nodes(a, b)
    edges = tuple(zip(nodes, nodes[1:]))
    length = math.fsum(net.lengths[net.edge_index(u, v)] for u, v in edges)
    return TreePath(tuple(nodes), edges, length)


@dataclass(frozen=True)
class ConstraintCheck:
    constraint: Constraint
    length_km: float
    hops: int

    @property
    def length_ok(self) -> bool:
        return self.length_km <= self.constraint.max_length

    @property
    def hops_ok(self) -> bool:
        return self.hops <= self.constraint.max_hops

    @property
    def satisfied(self) -> bool:
        return self.length_ok and self.hops_ok


@dataclass(frozen=True)
class ConstraintReport:
    checks: tuple[ConstraintCheck, ...]

    @property
    def satisfied(self) -> bool:
        return all(c.satisfied for c in self.checks)

    @property
    def violations(self) -> tuple[ConstraintCheck, ...]:
        return tuple(c for c in self.checks if not c.satisfied)

    def to_list(self, net: Network) -> list[dict]:
        return [
            {
                "a": net.labels[c.constraint.a],
                "b": net.labels[c.constraint.b],
                "max_length_km": _json_bound(c.constraint.max_length),
                "max_hops": _json_bound(c.constraint.max_hops),
                "length_km": c.length_km,
                "hops": c.hops,
                "satisfied": c.satisfied,
            }
            for c in self.checks
        ]


def _json_bound(v: float):
    if not math.isfinite(v):
        return None
    return int(v) if float(v).is_integer() else v


def check_constraints(tree: SpanningTree, net: Network, C: ConstraintSet) -> ConstraintReport:
    checks = []
    for c in C:
        p = tree_path(tree, net, c.a, c.b)
        checks.append(ConstraintCheck(c, p.length_km, p.hops))
    return ConstraintReport(tuple(checks))


def tree_cost(tree: SpanningTree, net: Network) -> float:
    return math.fsum(net.costs[k] for k in tree.edge_indices(net))


def tree_length(tree: SpanningTree, net: Network) -> float:
    return math.fsum(net.lengths[k] for k in tree.edge_indices(net))


def cost_from_length(length_km: float, rate_per_km: float) -> float:
    if length_km < 0:
        raise ValueError("length must be nonnegative")
    if not rate_per_km > 0:
        raise ValueError("rate must be positive")
    return length_km * rate_per_km


def fit_rate(lengths: Sequence[float], costs: Sequence[float], rel_tol: float = 0.01) -> float:
    """Least-squares cost-per-km rate through the origin.

    Rows whose cost/length ratio deviates from the median ratio by more than
    ``rel_tol`` are treated as inconsistent and left out of the fit.
    """
    L = np.asarray(lengths, dtype=float)
    K = np.asarray(costs, dtype=float)
    ratio = K / L
    med = np.median(ratio)
    keep = np.abs(ratio / med - 1.0) <= rel_tol
    return float(np.dot(L[keep], K[keep]) / np.dot(L[keep], L[keep]))
