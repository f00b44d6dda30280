"""Martin-style ILP for the latency-constrained spanning tree.

Variables
    x_e          edge e = (i, j) is in the tree
    y_{ij}^k     edge (i, j) is in the tree and k lies on j's side (k not in {i, j})
    z_{ij}^{ab}  = y_{ij}^a * y_{ji}^b: edge (i, j) lies on the a-b tree path,
                 with a on j's side

Row families
    cardinality     sum x = n - 1
    side            y_{ij}^k + y_{ji}^k = x_ij
    connectivity    sum_{k != j} y_{ik}^j + x_ij = 1, once per edge orientation
    length / hops   path-length and hop bounds per constrained pair, via z
    linearization   four rows per z tying it to its two y operands

The endpoint cases of a side operand are not variables: y_{ij}^j is x_ij and
y_{ij}^i is the constant 0.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

from .netmodel import ConstraintSet, Network, SpanningTree

FAMILIES = ("cardinality", "side", "connectivity", "length", "hops", "linearization")


@dataclass(frozen=True)
class Row:
    family: str
    name: str
    coeffs: tuple[tuple[int, float], ...]
    sense: str  # "=", "<=", ">="
    rhs: float

    def holds(self, lhs: float) -> bool:
        if self.sense == "=":
            return lhs == self.rhs
        if self.sense == "<=":
            return lhs <= self.rhs
        return lhs >= self.rhs


@dataclass(frozen=True, eq=False)
class IlpModel:
    net: Network
    constraints: ConstraintSet
    variables: tuple[str, ...]
    objective: tuple[float, ...]
    rows: tuple[Row, ...]
    var_index: dict = field(repr=False)

    def var(self, name: str) -> int:
        return self.var_index[name]

    def family_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(FAMILIES, 0)
        for r in self.rows:
            counts[r.family] += 1
        return counts

    def variable_counts(self) -> dict[str, int]:
        counts = {"x": 0, "y": 0, "z": 0}
        for v in self.variables:
            counts[v[0]] += 1
        return counts


def _lbl(i: int) -> int:
    return i + 1  # 1-based node ids in variable names


def x_name(i: int, j: int) -> str:
    i, j = min(i, j), max(i, j)
    return f"x_{_lbl(i)}_{_lbl(j)}"


def y_name(i: int, j: int, k: int) -> str:
    return f"y_{_lbl(i)}_{_lbl(j)}_{_lbl(k)}"


def z_name(i: int, j: int, a: int, b: int) -> str:
    return f"z_{_lbl(i)}_{_lbl(j)}_{_lbl(a)}_{_lbl(b)}"


def _variable_layout(net: Network, C: ConstraintSet) -> list[str]:
    names = [x_name(i, j) for i, j in net.edges]
    for i, j in net.edges:
        for k in range(net.n):
            if k != i and k != j:
                names.append(y_name(i, j, k))
                names.append(y_name(j, i, k))
    for c in C:
        if not c.bounded:
            continue
        for i, j in net.edges:
            names.append(z_name(i, j, c.a, c.b))
            names.append(z_name(j, i, c.a, c.b))
    return names


def build_model(net: Network, C: ConstraintSet | None = None) -> IlpModel:
    C = ConstraintSet() if C is None else C
    C.validate(net)
    names = _variable_layout(net, C)
    index = {v: k for k, v in enumerate(names)}
    objective = [0.0] * len(names)
    for k, (i, j) in enumerate(net.edges):
        objective[index[x_name(i, j)]] = net.costs[k]

    def side(i, j, k):
        """Linear form of 'k lies on j's side of edge (i, j)'."""
        if k == j:
            return {index[x_name(i, j)]: 1.0}
        if k == i:
            return {}
        return {index[y_name(i, j, k)]: 1.0}

    rows: list[Row] = []

    def add(family, name, terms: dict, sense, rhs):
        coeffs = tuple(sorted((v, c) for v, c in terms.items() if c != 0.0))
        rows.append(Row(family, name, coeffs, sense, rhs))

    add("cardinality", "card", {index[x_name(i, j)]: 1.0 for i, j in net.edges}, "=", float(net.n - 1))

    for i, j in net.edges:
        xv = index[x_name(i, j)]
        for k in range(net.n):
            if k == i or k == j:
                continue
            add("side", f"side_{_lbl(i)}_{_lbl(j)}_{_lbl(k)}",
                {index[y_name(i, j, k)]: 1.0, index[y_name(j, i, k)]: 1.0, xv: -1.0}, "=", 0.0)

    for i, j in net.edges:
        xv = index[x_name(i, j)]
        for s, t in ((i, j), (j, i)):
            terms = {xv: 1.0}
            for k, _ in net.neighbors(s):
                if k != t:
                    terms[index[y_name(s, k, t)]] = 1.0
            add("connectivity", f"conn_{_lbl(s)}_{_lbl(t)}", terms, "=", 1.0)

    for c in C:
        if not c.bounded:
            continue
        a, b = c.a, c.b
        tag = f"{_lbl(a)}_{_lbl(b)}"
        if math.isfinite(c.max_length):
            terms = {}
            for k, (i, j) in enumerate(net.edges):
                terms[index[z_name(i, j, a, b)]] = net.lengths[k]
                terms[index[z_name(j, i, a, b)]] = net.lengths[k]
            add("length", f"len_{tag}", terms, "<=", float(c.max_length))
        if math.isfinite(c.max_hops):
            terms = {}
            for i, j in net.edges:
                terms[index[z_name(i, j, a, b)]] = 1.0
                terms[index[z_name(j, i, a, b)]] = 1.0
            add("hops", f"hop_{tag}", terms, "<=", float(c.max_hops))
        for i, j in net.edges:
            for s, t in ((i, j), (j, i)):
                zv = index[z_name(s, t, a, b)]
                p = side(s, t, a)  # a on t's side
                q = side(t, s, b)  # b on s's side
                base = f"lin_{_lbl(s)}_{_lbl(t)}_{tag}"
                # z <= p + q ; z >= p + q - 1 ; z <= 1 - p + q ; z <= 1 + p - q
                add("linearization", base + "_1", _combine(zv, p, -1.0, q, -1.0), "<=", 0.0)
                add("linearization", base + "_2", _combine(zv, p, -1.0, q, -1.0), ">=", -1.0)
                add("linearization", base + "_3", _combine(zv, p, 1.0, q, -1.0), "<=", 1.0)
                add("linearization", base + "_4", _combine(zv, p, -1.0, q, 1.0), "<=", 1.0)

    return IlpModel(net, C, tuple(names), tuple(objective), tuple(rows), index)


def _combine(zv: int, p: dict, cp: float, q: dict, cq: float) -> dict:
    terms = {zv: 1.0}
    for form, coef in ((p, cp), (q, cq)):
        for v, c in form.items():
            terms[v] = terms.get(v, 0.0) + coef * c
    return terms


@dataclass(frozen=True)
class SizeReport:
    """Model size: the closed-form counts quoted for the formulation, next to the generated model."""

    n_nodes: int
    n_edges: int
    n_constraints: int
    formula_variables: int
    formula_constraints: int
    actual_variables: int
    actual_rows: int
    variables_by_kind: dict
    rows_by_family: dict

    def to_dict(self) -> dict:
        return {
            "nodes": self.n_nodes,
            "edges": self.n_edges,
            "latency_constraints": self.n_constraints,
            "formula": {"variables": self.formula_variables, "constraints": self.formula_constraints},
            "generated": {
                "variables": self.actual_variables,
                "rows": self.actual_rows,
                "variables_by_kind": dict(self.variables_by_kind),
                "rows_by_family": dict(self.rows_by_family),
            },
        }


def count_report(net: Network, C: ConstraintSet | None = None) -> SizeReport:
    C = ConstraintSet() if C is None else C
    V, E, K = net.n, net.m, len(C)
    model = build_model(net, C)
    return SizeReport(
        n_nodes=V,
        n_edges=E,
        n_constraints=K,
        formula_variables=E + E * (V - 2) + 2 * E * K,
        formula_constraints=1 + 2 * E + 9 * K,
        actual_variables=len(model.variables),
        actual_rows=len(model.rows),
        variables_by_kind=model.variable_counts(),
        rows_by_family=model.family_counts(),
    )


def _num(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def _expr(model: IlpModel, coeffs, per_line: int = 6) -> str:
    parts = []
    for k, (v, c) in enumerate(coeffs):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        term = model.variables[v] if mag == 1.0 else f"{_num(mag)} {model.variables[v]}"
        if k == 0:
            parts.append(term if sign == "+" else f"- {term}")
        else:
            parts.append(f"{sign} {term}")
    lines = [" ".join(parts[s:s + per_line]) for s in range(0, len(parts), per_line)] or ["0"]
    return "\n   ".join(lines)


def export_lp(model: IlpModel) -> str:
    """Render the model in CPLEX LP format (deterministic)."""
    out = io.StringIO()
    out.write("\\ latency-constrained spanning tree\n")
    out.write("\\ nodes: " + " ".join(f"{_lbl(i)}={lab}" for i, lab in enumerate(model.net.labels)) + "\n")
    out.write("Minimize\n")
    obj = tuple((v, c) for v, c in enumerate(model.objective) if c != 0.0)
    out.write(f" obj: {_expr(model, obj)}\n")
    out.write("Subject To\n")
    for r in model.rows:
        out.write(f" {r.name}: {_expr(model, r.coeffs)} {r.sense} {_num(r.rhs)}\n")
    out.write("Binaries\n")
    for s in range(0, len(model.variables), 8):
        out.write(" " + " ".join(model.variables[s:s + 8]) + "\n")
    out.write("End\n")
    return out.getvalue()


@dataclass(frozen=True)
class VariableAssignment:
    values: dict  # variable name -> 0 or 1

    def __getitem__(self, name: str) -> int:
        return self.values[name]


def assignment_from_tree(tree: SpanningTree, net: Network, C: ConstraintSet | None = None) -> VariableAssignment:
    C = ConstraintSet() if C is None else C
    tree.edge_indices(net)  # membership check
    names = _variable_layout(net, C)
    values = dict.fromkeys(names, 0)
    sides = {}
    for i, j in tree.edges:
        values[x_name(i, j)] = 1
        sides[(i, j)] = tree.side(i, j)
        sides[(j, i)] = tree.side(j, i)
        for k in range(net.n):
            if k == i or k == j:
                continue
            values[y_name(i, j, k)] = int(k in sides[(i, j)])
            values[y_name(j, i, k)] = int(k in sides[(j, i)])
    for c in C:
        if not c.bounded:
            continue
        for i, j in tree.edges:
            for s, t in ((i, j), (j, i)):
                values[z_name(s, t, c.a, c.b)] = int(c.a in sides[(s, t)] and c.b in sides[(t, s)])
    return VariableAssignment(values)


@dataclass(frozen=True)
class Verification:
    satisfied: bool
    row: Row | None = None
    lhs: float | None = None
    reason: str = ""


def verify_assignment(model: IlpModel, asg: VariableAssignment) -> Verification:
    """Evaluate every row; report the first one that fails."""
    vals = []
    for name in model.variables:
        if name not in asg.values:
            return Verification(False, reason=f"variable {name} unassigned")
        v = asg.values[name]
        if v not in (0, 1):
            return Verification(False, reason=f"variable {name} = {v} is not binary")
        vals.append(v)
    for r in model.rows:
        lhs = math.fsum(c * vals[v] for v, c in r.coeffs)
        if not r.holds(lhs):
            return Verification(False, r, lhs, f"row {r.name} ({r.family}): {lhs} {r.sense} {r.rhs} fails")
    return Verification(True)


def objective_value(model: IlpModel, asg: VariableAssignment) -> float:
    return math.fsum(c * asg.values[name] for name, c in zip(model.variables, model.objective) if c != 0.0)


def tree_from_assignment(model: IlpModel, asg: VariableAssignment) -> SpanningTree:
    """Decode the x variables; raises ValueError if they do not form a spanning tree."""
    net = model.net
    edges = [e for e in net.edges if asg.values.get(x_name(*e), 0) == 1]
    return SpanningTree(net.n, tuple(edges))
