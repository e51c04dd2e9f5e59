"""Finite index models: ordered vertices with predicate labels and hyperedges.

Coordinates and predicate labels are exact rationals.  Quantifier-free types
of a tuple over a parameter sequence are encoded canonically as bytes so that
type equality is byte equality.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, cmp_to_key
from itertools import combinations
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple

ORDERS = "linear-orders"
PREDICATES = "linear-orders-with-predicates"
HYPERGRAPH = "hypergraph-class"

DEFAULT_BUDGET = 64


class BudgetExhausted(RuntimeError):
    """Raised when an extension would exceed the fresh-vertex budget."""


class NotRealizable(ValueError):
    """Raised by extend_realizing when the target type cannot be realized."""


def parse_rational(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise ValueError(f"not a rational: {value!r}")


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class ClassDescriptor:
    kind: str
    n: Optional[int] = None
    k: Optional[int] = None

    def __post_init__(self):
        if self.kind == HYPERGRAPH:
            if self.n is None or self.k is None:
                raise ValueError("hypergraph class needs n and k")
            if not self.n > self.k >= 2:
                raise ValueError(f"hypergraph class needs n > k >= 2, got n={self.n}, k={self.k}")
        elif self.kind in (ORDERS, PREDICATES):
            if self.n is not None or self.k is not None:
                raise ValueError(f"{self.kind} takes no n, k")
        else:
            raise ValueError(f"unknown class kind {self.kind!r}")

    @classmethod
    def orders(cls) -> "ClassDescriptor":
        return cls(ORDERS)

    @classmethod
    def predicates(cls) -> "ClassDescriptor":
        return cls(PREDICATES)

    @classmethod
    def hypergraph(cls, n: int, k: int) -> "ClassDescriptor":
        return cls(HYPERGRAPH, n, k)

    @property
    def edge_arity(self) -> Optional[int]:
        return self.k + 1 if self.kind == HYPERGRAPH else None

    @property
    def clique_bound(self) -> Optional[int]:
        return self.n + 1 if self.kind == HYPERGRAPH else None

    @property
    def has_predicates(self) -> bool:
        return self.kind != ORDERS

    def to_dict(self) -> dict:
        return {"kind": self.kind, "k": self.k, "n": self.n}

    @classmethod
    def from_dict(cls, data: dict) -> "ClassDescriptor":
        return cls(data["kind"], data.get("n"), data.get("k"))


@dataclass(frozen=True)
class Vertex:
    id: int
    coord: Fraction
    pred: Fraction = Fraction(0)


@dataclass(frozen=True)
class IndexModel:
    """A finite structure of an index class.

    Vertices are kept sorted by id; edges are frozensets of vertex ids.
    Construction does not validate; use validate_structure.
    """

    cls: ClassDescriptor
    vertices: Tuple[Vertex, ...] = ()
    edges: FrozenSet[FrozenSet[int]] = frozenset()

    @classmethod
    def build(cls, klass: ClassDescriptor, points: Iterable, edges: Iterable = ()) -> "IndexModel":
        """points: iterable of (id, coord) or (id, coord, pred)."""
        verts = []
        for p in points:
            vid, coord = p[0], parse_rational(p[1])
            pred = parse_rational(p[2]) if len(p) > 2 else Fraction(0)
            verts.append(Vertex(int(vid), coord, pred))
        verts.sort(key=lambda v: v.id)
        return cls(klass, tuple(verts), frozenset(frozenset(e) for e in edges))

    @cached_property
    def _index(self) -> Dict[int, Vertex]:
        return {v.id: v for v in self.vertices}

    @cached_property
    def by_coord(self) -> Tuple[int, ...]:
        return tuple(v.id for v in sorted(self.vertices, key=lambda v: (v.coord, v.id)))

    @property
    def ids(self) -> Tuple[int, ...]:
        return tuple(v.id for v in self.vertices)

    def __contains__(self, vid) -> bool:
        return vid in self._index

    def __len__(self) -> int:
        return len(self.vertices)

    def vertex(self, vid: int) -> Vertex:
        try:
            return self._index[vid]
        except KeyError:
            raise KeyError(f"unknown vertex id {vid!r}") from None

    def coord(self, vid: int) -> Fraction:
        return self.vertex(vid).coord

    def pred(self, vid: int) -> Fraction:
        return self.vertex(vid).pred

    def has_edge(self, vids: Iterable[int]) -> bool:
        return frozenset(vids) in self.edges

    def with_additions(self, new_vertices: Iterable[Vertex], new_edges: Iterable) -> "IndexModel":
        verts = sorted(self.vertices + tuple(new_vertices), key=lambda v: v.id)
        return IndexModel(self.cls, tuple(verts), self.edges | frozenset(frozenset(e) for e in new_edges))

    def restrict(self, vids: Iterable[int]) -> "IndexModel":
        keep = set(vids)
        return IndexModel(
            self.cls,
            tuple(v for v in self.vertices if v.id in keep),
            frozenset(e for e in self.edges if e <= keep),
        )

    def fresh_ids(self, count: int) -> List[int]:
        out, used, candidate = [], set(self._index), 0
        while len(out) < count:
            if candidate not in used:
                out.append(candidate)
            candidate += 1
        return out

    def to_dict(self) -> dict:
        return {
            "class": self.cls.to_dict(),
            "vertices": [
                {"id": v.id, "coord": format_rational(v.coord), "pred": format_rational(v.pred)}
                for v in self.vertices
            ],
            "edges": sorted(sorted(e) for e in self.edges),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IndexModel":
        klass = ClassDescriptor.from_dict(data["class"])
        points = [(v["id"], v["coord"], v.get("pred", "0/1")) for v in data.get("vertices", [])]
        return cls.build(klass, points, [tuple(e) for e in data.get("edges", [])])


def context_cut(klass: ClassDescriptor, coords: Iterable) -> IndexModel:
    """Finite piece of the rationals with singleton predicates and no edges.

    Vertex i sits at the i-th listed coordinate and carries the predicate
    labelled by that same coordinate.
    """
    pts = [(i, q, q) for i, q in enumerate(parse_rational(c) for c in coords)]
    if not klass.has_predicates:
        raise ValueError("singleton predicates need a class with predicates")
    return IndexModel.build(klass, pts)


def dense_order(coords: Iterable) -> IndexModel:
    return IndexModel.build(ClassDescriptor.orders(), [(i, c) for i, c in enumerate(coords)])


# Cliques


def cliques(vertices: Sequence[Hashable], edges, arity: int, size: int, must_meet=None) -> List[tuple]:
    """All vertex sets of the given size whose arity-subsets are all edges.

    vertices fixes the enumeration order; results are tuples in that order.
    If must_meet is given, only cliques meeting it are returned.
    """
    if size < arity:
        return []
    incident = set()
    for e in edges:
        incident |= set(e)
    pool = [v for v in vertices if v in incident]
    out: List[tuple] = []

    def grow(current: List, start: int):
        if len(current) == size:
            if must_meet is None or any(v in must_meet for v in current):
                out.append(tuple(current))
            return
        for idx in range(start, len(pool)):
            v = pool[idx]
            if len(current) >= arity - 1:
                if not all(frozenset(sub + (v,)) in edges for sub in combinations(current, arity - 1)):
                    continue
            current.append(v)
            grow(current, idx + 1)
            current.pop()

    grow([], 0)
    return out


# Validation


@dataclass(frozen=True)
class Violation:
    kind: str
    vertices: Tuple[int, ...]
    detail: str = ""

    def __str__(self):
        return f"{self.kind} {list(self.vertices)} {self.detail}".rstrip()


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_structure(model: IndexModel) -> ValidationReport:
    out: List[Violation] = []
    seen: Dict[int, int] = {}
    ids = [v.id for v in model.vertices]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        out.append(Violation("duplicate id", tuple(dup)))
    by_coord: Dict[Fraction, int] = {}
    for v in model.vertices:
        if v.coord in by_coord:
            out.append(Violation("coord not injective", (by_coord[v.coord], v.id), format_rational(v.coord)))
        else:
            by_coord[v.coord] = v.id
        if not model.cls.has_predicates and v.pred != 0:
            out.append(Violation("predicate on pure order", (v.id,)))
        seen[v.id] = 1
    arity = model.cls.edge_arity
    for e in sorted(model.edges, key=sorted):
        members = tuple(sorted(e))
        if arity is None:
            out.append(Violation("edge in edgeless class", members))
            continue
        if len(e) != arity:
            out.append(Violation("edge arity", members, f"expected {arity}"))
        missing = [v for v in members if v not in seen]
        if missing:
            out.append(Violation("edge on unknown vertex", tuple(missing)))
    if arity is not None:
        bound = model.cls.clique_bound
        for c in cliques(sorted(seen), model.edges, arity, bound):
            out.append(Violation(f"forbidden {bound}-clique", tuple(c)))
    return ValidationReport(tuple(out))


# Quantifier-free types


def _sign(a: Fraction, b: Fraction) -> int:
    return (a > b) - (a < b)


@dataclass(frozen=True)
class QfType:
    """Quantifier-free type of a tuple over a parameter sequence.

    Positions 0..length-1 are the tuple, the rest are the parameters.
    order[i][j] is -1, 0, 1 as position i is below, equal to, above j.
    edges lists sorted position sets whose (distinct) vertices carry an edge.
    """

    length: int
    n_params: int
    order: Tuple[Tuple[int, ...], ...]
    preds: Tuple[Fraction, ...]
    edges: Tuple[Tuple[int, ...], ...]
    arity: Optional[int] = None

    @property
    def width(self) -> int:
        return self.length + self.n_params

    @cached_property
    def code(self) -> bytes:
        payload = [
            self.length,
            self.n_params,
            self.arity,
            [list(row) for row in self.order],
            [format_rational(p) for p in self.preds],
            [list(e) for e in self.edges],
        ]
        return json.dumps(payload, separators=(",", ":")).encode()

    def hex(self) -> str:
        return self.code.hex()

    @classmethod
    def from_code(cls, code: bytes) -> "QfType":
        length, n_params, arity, order, preds, edges = json.loads(code.decode())
        return cls(
            length,
            n_params,
            tuple(tuple(r) for r in order),
            tuple(Fraction(p) for p in preds),
            tuple(tuple(e) for e in edges),
            arity,
        )

    @classmethod
    def from_hex(cls, text: str) -> "QfType":
        return cls.from_code(bytes.fromhex(text))

    def __eq__(self, other):
        return isinstance(other, QfType) and self.code == other.code

    def __hash__(self):
        return hash(self.code)

    def check_wellformed(self) -> None:
        w = self.width
        if self.length < 0 or self.n_params < 0:
            raise ValueError("negative length")
        if len(self.order) != w or any(len(r) != w for r in self.order) or len(self.preds) != w:
            raise ValueError("pattern sizes do not match length + params")
        for i in range(w):
            if self.order[i][i] != 0:
                raise ValueError(f"position {i} not equal to itself")
            for j in range(w):
                if self.order[i][j] not in (-1, 0, 1) or self.order[i][j] != -self.order[j][i]:
                    raise ValueError(f"order pattern not antisymmetric at {i},{j}")
                for m in range(w):
                    a, b = self.order[i][j], self.order[j][m]
                    c = self.order[i][m]
                    if a == b == 0 and c != 0:
                        raise ValueError(f"equality not transitive at {i},{j},{m}")
                    if a <= 0 and b <= 0 and (a, b) != (0, 0) and c != -1:
                        raise ValueError(f"order not transitive at {i},{j},{m}")
        for e in self.edges:
            if any(p < 0 or p >= w for p in e):
                raise ValueError(f"edge pattern {e} refers to positions out of range")
            if self.arity is None or len(e) != self.arity:
                raise ValueError(f"edge pattern {e} has wrong arity")


def _check_ids(model: IndexModel, vids: Iterable[int]) -> None:
    for v in vids:
        model.vertex(v)


def qf_type_of(model: IndexModel, tup: Sequence[int], params: Sequence[int] = ()) -> QfType:
    seq = tuple(tup) + tuple(params)
    _check_ids(model, seq)
    coords = [model.coord(v) for v in seq]
    order = tuple(tuple(_sign(a, b) for b in coords) for a in coords)
    preds = tuple(model.pred(v) for v in seq)
    arity = model.cls.edge_arity
    edges: List[Tuple[int, ...]] = []
    if arity is not None and model.edges:
        for pos in combinations(range(len(seq)), arity):
            verts = frozenset(seq[p] for p in pos)
            if len(verts) == arity and verts in model.edges:
                edges.append(pos)
    return QfType(len(tup), len(params), order, preds, tuple(edges), arity)


def _position_ok(model, target: QfType, assigned: List[int], params: Sequence[int], i: int, v: int) -> bool:
    """Whether vertex v can sit at tuple position i given earlier positions."""
    L = target.length
    if model.pred(v) != target.preds[i]:
        return False
    c = model.coord(v)
    row = target.order[i]
    for j, p in enumerate(params):
        if _sign(c, model.coord(p)) != row[L + j]:
            return False
    for j, u in enumerate(assigned):
        if _sign(c, model.coord(u)) != row[j]:
            return False
    return True


def enumerate_realizations(model: IndexModel, r: QfType, params: Sequence[int] = ()) -> List[Tuple[int, ...]]:
    """All tuples realizing r over params, in lexicographic order of coordinates."""
    if r.length < 1:
        raise ValueError("type length must be at least 1")
    params = tuple(params)
    if len(params) != r.n_params:
        raise ValueError("parameter count does not match the type")
    _check_ids(model, params)
    if qf_type_of(model, (), params).code != _param_part(r).code:
        return []
    order = model.by_coord
    out: List[Tuple[int, ...]] = []
    assigned: List[int] = []

    def walk(i: int):
        if i == r.length:
            tup = tuple(assigned)
            if qf_type_of(model, tup, params).code == r.code:
                out.append(tup)
            return
        for v in order:
            if _position_ok(model, r, assigned, params, i, v):
                assigned.append(v)
                walk(i + 1)
                assigned.pop()

    walk(0)
    return out


def _param_part(r: QfType) -> QfType:
    """The type of the empty tuple over the same parameters."""
    L = r.length
    order = tuple(tuple(row[L:]) for row in r.order[L:])
    edges = tuple(tuple(p - L for p in e) for e in r.edges if min(e) >= L)
    return QfType(0, r.n_params, order, r.preds[L:], edges, r.arity)


def _plan(model: IndexModel, target: QfType, params: Sequence[int]):
    """Build the free-amalgamation extension realizing target, or return None.

    Positions equal to a parameter are sent to it; every other equality
    class of positions becomes one fresh vertex placed just above the
    nearest parameter below it.
    """
    target.check_wellformed()
    params = tuple(params)
    if len(params) != target.n_params:
        raise ValueError("parameter count does not match the type")
    _check_ids(model, params)
    L = target.length
    if target.arity != model.cls.edge_arity:
        return None
    if not model.cls.has_predicates and any(p != 0 for p in target.preds):
        return None

    # group positions
    mapped: List[Optional[int]] = [None] * L
    group_of: List[int] = [-1] * L
    groups: List[List[int]] = []
    for i in range(L):
        for j, p in enumerate(params):
            if target.order[i][L + j] == 0:
                mapped[i] = p
                break
        if mapped[i] is not None:
            continue
        for g, members in enumerate(groups):
            if target.order[i][members[0]] == 0:
                group_of[i] = g
                members.append(i)
                break
        else:
            group_of[i] = len(groups)
            groups.append([i])

    for members in groups:
        if len({target.preds[i] for i in members}) != 1:
            return None

    new_ids = model.fresh_ids(len(groups))
    coords = sorted(model.coord(v) for v in model.ids)
    param_coords = [model.coord(p) for p in params]

    def bounds(i):
        lo = hi = None
        for j, c in enumerate(param_coords):
            s = target.order[i][L + j]
            if s > 0 and (lo is None or c > lo):
                lo = c
            if s < 0 and (hi is None or c < hi):
                hi = c
        return lo, hi

    buckets: Dict[tuple, List[int]] = {}
    for g, members in enumerate(groups):
        buckets.setdefault(bounds(members[0]), []).append(g)
    new_coords: Dict[int, Fraction] = {}
    for (lo, hi), gs in buckets.items():
        if lo is not None and hi is not None and not lo < hi:
            return None
        gs.sort(key=cmp_to_key(lambda a, b: target.order[groups[a][0]][groups[b][0]]))
        m = len(gs)
        if lo is None:
            nxt = coords[0] if coords else None
            points = [Fraction(j) for j in range(m)] if nxt is None else [nxt - m + j for j in range(m)]
        else:
            above = [c for c in coords if c > lo]
            nxt = above[0] if above else None
            points = [lo + 1 + j for j in range(m)] if nxt is None else [lo + (nxt - lo) * (j + 1) / (m + 1) for j in range(m)]
        for g, c in zip(gs, points):
            new_coords[g] = c

    fresh = [Vertex(new_ids[g], new_coords[g], target.preds[groups[g][0]]) for g in range(len(groups))]
    tup = tuple(mapped[i] if mapped[i] is not None else new_ids[group_of[i]] for i in range(L))
    seq = tup + params
    fresh_set = set(new_ids)
    new_edges = set()
    for e in target.edges:
        verts = frozenset(seq[p] for p in e)
        if len(verts) != len(e):
            return None
        if verts & fresh_set:
            new_edges.add(verts)
        elif verts not in model.edges:
            return None
    extended = model.with_additions(fresh, new_edges)
    if qf_type_of(extended, tup, params).code != target.code:
        return None
    arity = model.cls.edge_arity
    if arity is not None and new_edges:
        local = sorted(set(seq), key=lambda v: extended.coord(v))
        if cliques(local, extended.edges, arity, model.cls.clique_bound, must_meet=fresh_set):
            return None
    return extended, tup, len(groups)


def realizable(model: IndexModel, target: QfType, params: Sequence[int] = ()) -> bool:
    return _plan(model, target, params) is not None


def extend_realizing(
    model: IndexModel, target: QfType, params: Sequence[int] = (), budget: Optional[int] = DEFAULT_BUDGET
) -> Tuple[IndexModel, Tuple[int, ...]]:
    """Add fresh vertices so that a new tuple realizes target over params.

    Raises NotRealizable or BudgetExhausted.
    """
    plan = _plan(model, target, params)
    if plan is None:
        raise NotRealizable("target type is not realizable over the given parameters")
    extended, tup, used = plan
    if budget is not None and used > budget:
        raise BudgetExhausted(f"needs {used} fresh vertices, budget {budget}")
    return extended, tup


def fresh_count(model: IndexModel, target: QfType, params: Sequence[int] = ()) -> int:
    plan = _plan(model, target, params)
    if plan is None:
        raise NotRealizable("target type is not realizable over the given parameters")
    return plan[2]


def make_type(
    model: IndexModel,
    params: Sequence[int],
    order_slots: Sequence,
    preds: Sequence,
    edges=(),
) -> QfType:
    """Assemble a target type for a tuple over params.

    order_slots[i] is a coordinate used only to place position i relative to
    the params and the other positions (a slot equal to a param coordinate
    makes the position equal to that param); preds[i] is its label.  edges is
    either an iterable of position sets (params start at len(order_slots)) or
    a callable on frozensets of labels, where a fresh position i has label
    ("new", i) and a position equal to a param has that param's id.  Sets of
    params alone always follow the model.
    """
    params = tuple(params)
    L = len(order_slots)
    slots = [parse_rational(c) for c in order_slots]
    coords = slots + [model.coord(p) for p in params]
    order = tuple(tuple(_sign(a, b) for b in coords) for a in coords)
    labels = tuple(parse_rational(p) for p in preds) + tuple(model.pred(p) for p in params)
    by_coord = {model.coord(p): p for p in params}
    names = [by_coord.get(c, ("new", i)) for i, c in enumerate(slots)] + list(params)
    arity = model.cls.edge_arity
    if callable(edges):
        decide = edges
    else:
        marked = set()
        for e in edges:
            marked.add(frozenset(names[p] for p in e))
        decide = marked.__contains__
    edge_list = []
    if arity:
        for pos in combinations(range(len(names)), arity):
            verts = frozenset(names[p] for p in pos)
            if len(verts) != arity:
                continue
            if all(not isinstance(v, tuple) for v in verts):
                if verts in model.edges:
                    edge_list.append(pos)
            elif decide(verts):
                edge_list.append(pos)
    return QfType(L, len(params), order, labels, tuple(edge_list), arity)
