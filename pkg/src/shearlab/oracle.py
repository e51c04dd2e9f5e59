"""Consistency of literal diagrams in the random graph and clique-free hypergraphs.

All three theories are free-amalgamation theories, so a conjunction of
edge literals, non-edge literals and disequalities over named parameters is
consistent exactly when it has no direct sign clash, no disequality of a
variable with itself, and (for clique-free theories) adding the positive
atoms to the parameter edges creates no forbidden clique.  Free variables are
then realized by fresh distinct vertices.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from .structures import cliques

RG = "random-graph"
TN1 = "Tn1"
TNK = "Tnk"

POS, NEG, NEQ = "+", "-", "!="


@dataclass(frozen=True)
class TheoryDescriptor:
    kind: str
    n: Optional[int] = None
    k: Optional[int] = None

    def __post_init__(self):
        if self.kind == RG:
            if self.n is not None or self.k is not None:
                raise ValueError("random graph takes no n, k")
        elif self.kind == TN1:
            if self.n is None or self.n < 2:
                raise ValueError("Tn1 needs n >= 2")
            if self.k not in (None, 1):
                raise ValueError("Tn1 has k = 1")
            object.__setattr__(self, "k", 1)
        elif self.kind == TNK:
            if self.n is None or self.k is None or not self.n > self.k >= 2:
                raise ValueError(f"Tnk needs n > k >= 2, got n={self.n}, k={self.k}")
        else:
            raise ValueError(f"unknown theory kind {self.kind!r}")

    @classmethod
    def random_graph(cls) -> "TheoryDescriptor":
        return cls(RG)

    @classmethod
    def tn1(cls, n: int) -> "TheoryDescriptor":
        return cls(TN1, n, 1)

    @classmethod
    def tnk(cls, n: int, k: int) -> "TheoryDescriptor":
        return cls(TNK, n, k)

    @property
    def edge_arity(self) -> int:
        return 2 if self.kind == RG else self.k + 1

    @property
    def clique_bound(self) -> Optional[int]:
        return None if self.kind == RG else self.n + 1

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "k": self.k}

    @classmethod
    def from_dict(cls, data: dict) -> "TheoryDescriptor":
        return cls(data["kind"], data.get("n"), data.get("k"))


@dataclass(frozen=True)
class Literal:
    """sign is "+" (edge), "-" (non-edge) or "!=" (two-place disequality)."""

    sign: str
    args: Tuple[str, ...]

    @property
    def atom(self) -> FrozenSet[str]:
        return frozenset(self.args)

    def to_list(self) -> list:
        return [self.sign, list(self.args)]

    @classmethod
    def from_list(cls, data) -> "Literal":
        sign, args = data
        return cls(str(sign), tuple(str(a) for a in args))

    def __str__(self):
        if self.sign == NEQ:
            return f"{self.args[0]}!={self.args[1]}"
        return f"{'' if self.sign == POS else '~'}R({','.join(self.args)})"


def pos(*args) -> Literal:
    return Literal(POS, tuple(args))


def neg(*args) -> Literal:
    return Literal(NEG, tuple(args))


def neq(a, b) -> Literal:
    return Literal(NEQ, (a, b))


class MalformedDiagram(ValueError):
    pass


@dataclass(frozen=True)
class Diagram:
    theory: TheoryDescriptor
    params: Tuple[str, ...] = ()
    param_edges: FrozenSet[FrozenSet[str]] = frozenset()
    free_vars: Tuple[str, ...] = ("x",)
    literals: Tuple[Literal, ...] = ()

    @classmethod
    def make(cls, theory, params=(), param_edges=(), free_vars=("x",), literals=()) -> "Diagram":
        return cls(
            theory,
            tuple(params),
            frozenset(frozenset(e) for e in param_edges),
            tuple(free_vars),
            tuple(literals),
        )

    def validate(self) -> None:
        names = set(self.params)
        if len(names) != len(self.params):
            raise MalformedDiagram("duplicate parameter id")
        if names & set(self.free_vars) or len(set(self.free_vars)) != len(self.free_vars):
            raise MalformedDiagram("free variables must be distinct from each other and from params")
        every = names | set(self.free_vars)
        arity = self.theory.edge_arity
        for e in self.param_edges:
            if len(e) != arity or not e <= names:
                raise MalformedDiagram(f"parameter edge {sorted(e)} is not an arity-{arity} set of params")
        for lit in self.literals:
            if lit.sign not in (POS, NEG, NEQ):
                raise MalformedDiagram(f"unknown literal sign {lit.sign!r}")
            if any(a not in every for a in lit.args):
                raise MalformedDiagram(f"literal {lit} mentions an unknown id")
            if lit.sign == NEQ:
                if len(lit.args) != 2 or not set(lit.args) & set(self.free_vars):
                    raise MalformedDiagram(f"disequality {lit} must involve a free variable")
            else:
                if len(lit.args) != arity:
                    raise MalformedDiagram(f"atom {lit} must have {arity} arguments")
                if not set(lit.args) & set(self.free_vars):
                    raise MalformedDiagram(f"atom {lit} mentions no free variable")
        bound = self.theory.clique_bound
        if bound is not None:
            bad = cliques(sorted(self.params), self.param_edges, arity, bound)
            if bad:
                raise MalformedDiagram(f"parameter edges contain a forbidden clique {list(bad[0])}")

    def conjoin(self, other: "Diagram") -> "Diagram":
        if other.theory != self.theory:
            raise MalformedDiagram("cannot conjoin diagrams of different theories")
        params = self.params + tuple(p for p in other.params if p not in set(self.params))
        free = self.free_vars + tuple(v for v in other.free_vars if v not in set(self.free_vars))
        return Diagram(self.theory, params, self.param_edges | other.param_edges, free, self.literals + other.literals)

    def to_dict(self) -> dict:
        return {
            "theory": self.theory.to_dict(),
            "params": list(self.params),
            "param_edges": sorted(sorted(e) for e in self.param_edges),
            "free_vars": list(self.free_vars),
            "literals": [lit.to_list() for lit in self.literals],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Diagram":
        return cls.make(
            TheoryDescriptor.from_dict(data["theory"]),
            [str(p) for p in data.get("params", [])],
            [[str(a) for a in e] for e in data.get("param_edges", [])],
            [str(v) for v in data.get("free_vars", ["x"])],
            [Literal.from_list(lit) for lit in data.get("literals", [])],
        )


def conjunction(family: Sequence[Diagram]) -> Diagram:
    if not family:
        raise MalformedDiagram("empty family")
    out = family[0]
    for d in family[1:]:
        out = out.conjoin(d)
    return out


OK = "ok"
SIGN_CONFLICT = "sign-conflict"
FORBIDDEN_CLIQUE = "forbidden-clique"
EQUALITY_CONFLICT = "equality-conflict"


@dataclass(frozen=True)
class ConsistencyVerdict:
    consistent: bool
    reason: str = OK
    witness: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"consistent": self.consistent, "reason": self.reason, "witness": list(self.witness)}

    @classmethod
    def from_dict(cls, data: dict) -> "ConsistencyVerdict":
        return cls(data["consistent"], data["reason"], tuple(data.get("witness", ())))


def _vertex_order(d: Diagram) -> List[str]:
    return list(d.free_vars) + sorted(d.params)


def _conflicts(d: Diagram):
    """Yield (reason, witness, literal indices) for every minimal conflict.

    A conflict is a set of literals that cannot hold together; the third
    component lists, for each requirement of the conflict, the literal
    indices able to supply it.
    """
    pos_atoms = {}
    neg_atoms = {}
    for idx, lit in enumerate(d.literals):
        if lit.sign == NEQ:
            if lit.args[0] == lit.args[1]:
                yield EQUALITY_CONFLICT, lit.args, [[idx]]
        elif len(lit.atom) != len(lit.args):
            if lit.sign == POS:
                yield EQUALITY_CONFLICT, lit.args, [[idx]]
        elif lit.sign == POS:
            pos_atoms.setdefault(lit.atom, []).append(idx)
        else:
            neg_atoms.setdefault(lit.atom, []).append(idx)
    for atom in sorted(pos_atoms, key=sorted):
        if atom in neg_atoms:
            yield SIGN_CONFLICT, tuple(sorted(atom)), [pos_atoms[atom], neg_atoms[atom]]
    bound = d.theory.clique_bound
    if bound is not None and pos_atoms:
        arity = d.theory.edge_arity
        edges = set(d.param_edges) | set(pos_atoms)
        for clique in cliques(_vertex_order(d), edges, arity, bound, must_meet=set(d.free_vars)):
            needs = [
                pos_atoms[frozenset(sub)]
                for sub in combinations(clique, arity)
                if frozenset(sub) in pos_atoms and frozenset(sub) not in d.param_edges
            ]
            yield FORBIDDEN_CLIQUE, tuple(clique), needs


def consistent(d: Diagram) -> ConsistencyVerdict:
    d.validate()
    for reason, witness, _ in _conflicts(d):
        return ConsistencyVerdict(False, reason, witness)
    return ConsistencyVerdict(True)


def minimal_inconsistent_subfamilies(family: Sequence[Diagram], max_size: int) -> List[Tuple[int, ...]]:
    """Index sets of minimal inconsistent subfamilies up to max_size.

    Enumerated by size, then lexicographically.  Every conflict of a
    subfamily is a conflict of the whole conjunction, so the conflicts of the
    whole family are computed once and each candidate subset is tested by
    checking whether it supplies every requirement of some conflict.
    """
    if not family:
        return []
    if len({(d.params, d.param_edges) for d in family}) > 1:
        return _minimal_by_brute_force(family, max_size)
    owner: List[int] = []
    for i, d in enumerate(family):
        owner.extend([i] * len(d.literals))
    whole = conjunction(family)
    whole.validate()
    conflicts = []
    for _, _, needs in _conflicts(whole):
        masks = []
        for supply in needs:
            m = 0
            for idx in supply:
                m |= 1 << owner[idx]
            masks.append(m)
        conflicts.append(masks)
    if not conflicts:
        return []
    found: List[int] = []
    out: List[Tuple[int, ...]] = []
    for size in range(1, min(max_size, len(family)) + 1):
        for combo in combinations(range(len(family)), size):
            mask = 0
            for i in combo:
                mask |= 1 << i
            if any(f & mask == f for f in found):
                continue
            if any(all(req & mask for req in masks) for masks in conflicts):
                found.append(mask)
                out.append(combo)
    return out


def _minimal_by_brute_force(family: Sequence[Diagram], max_size: int) -> List[Tuple[int, ...]]:
    # members carry different parameter data, so conflicts are not shared
    found: List[frozenset] = []
    out: List[Tuple[int, ...]] = []
    for size in range(1, min(max_size, len(family)) + 1):
        for combo in combinations(range(len(family)), size):
            s = frozenset(combo)
            if any(f <= s for f in found):
                continue
            if not consistent(conjunction([family[i] for i in combo])).consistent:
                found.append(s)
                out.append(combo)
    return out


@dataclass(frozen=True)
class FiniteStructure:
    """Explicit finite structure: named vertices and edges of the theory's arity."""

    theory: TheoryDescriptor
    vertices: Tuple[str, ...]
    edges: FrozenSet[FrozenSet[str]]
    assignment: Tuple[Tuple[str, str], ...]

    def value(self, name: str) -> str:
        return dict(self.assignment)[name]

    def forbidden_cliques(self) -> List[tuple]:
        bound = self.theory.clique_bound
        if bound is None:
            return []
        return cliques(list(self.vertices), self.edges, self.theory.edge_arity, bound)

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": sorted(sorted(e) for e in self.edges),
            "assignment": dict(self.assignment),
        }


@dataclass(frozen=True)
class Refusal:
    verdict: ConsistencyVerdict

    def to_dict(self) -> dict:
        return {"refusal": self.verdict.to_dict()}


def realize_in_model(d: Diagram) -> Union[FiniteStructure, Refusal]:
    verdict = consistent(d)
    if not verdict.consistent:
        return Refusal(verdict)
    names = list(d.params) + list(d.free_vars)
    edges = set(d.param_edges)
    for lit in d.literals:
        if lit.sign == POS:
            edges.add(lit.atom)
    return FiniteStructure(d.theory, tuple(names), frozenset(edges), tuple((n, n) for n in names))


def evaluate(structure: FiniteStructure, d: Diagram) -> bool:
    """Direct evaluation of every literal and of the forbidden configuration."""
    val = dict(structure.assignment)
    for lit in d.literals:
        image = [val[a] for a in lit.args]
        if lit.sign == NEQ:
            if image[0] == image[1]:
                return False
            continue
        atom = frozenset(image)
        holds = len(atom) == len(image) and atom in structure.edges
        if holds != (lit.sign == POS):
            return False
    for e in d.param_edges:
        if frozenset(val[a] for a in e) not in structure.edges:
            return False
    arity = d.theory.edge_arity
    for e in structure.edges:
        if len(e) != arity:
            return False
    params = set(val[p] for p in d.params)
    for combo in combinations(sorted(params), arity):
        if frozenset(combo) in structure.edges and frozenset(combo) not in {
            frozenset(val[a] for a in e) for e in d.param_edges
        }:
            return False
    return not structure.forbidden_cliques()


def clique_cap(theory: TheoryDescriptor) -> int:
    if theory.clique_bound is None:
        return 0
    return comb(theory.n, theory.k) + 1


# Column arrays: rows of an indiscernible sequence laid out as columns


def column_edge_types(width: int, arity: int, max_columns: int) -> List[Tuple[Tuple[int, int], ...]]:
    """Edge shapes of an indiscernible column array.

    A shape is a sorted tuple of (column rank, row) pairs; ranks form an
    initial segment 0..c-1 and rows inside one column are distinct.  The
    shape is placed on every increasing choice of c columns.
    """
    cells = [(rank, row) for rank in range(min(arity, max_columns)) for row in range(width)]
    out = []
    for combo in combinations(cells, arity):
        ranks = sorted({rank for rank, _ in combo})
        if ranks == list(range(len(ranks))):
            out.append(tuple(combo))
    return out


def column_array(
    theory: TheoryDescriptor,
    columns: int,
    width: int,
    shapes: Iterable[Tuple[Tuple[int, int], ...]],
    atoms: Sequence[Tuple[int, ...]],
) -> List[Diagram]:
    """One diagram per column: positive atoms R(x, rows of that column),
    over parameters a{row}_{column} carrying the edges of the given shapes."""
    names = [f"a{row}_{col}" for col in range(columns) for row in range(width)]
    edges = set()
    for shape in shapes:
        used = max(rank for rank, _ in shape) + 1
        for cols in combinations(range(columns), used):
            edges.add(frozenset(f"a{row}_{cols[rank]}" for rank, row in shape))
    return [
        Diagram.make(theory, names, edges, ("x",), [pos("x", *[f"a{row}_{col}" for row in atom]) for atom in atoms])
        for col in range(columns)
    ]
