"""Imaginary-sort expansions of index models and bounded closure checks.

An eq-extension adds, for each listed equivalence relation E on n-tuples, one
element per E-class, a map F sending a tuple to its class, a predicate for
the base sort, and lifted predicates on classes.  Equality on single
vertices is always present and its classes are the vertices themselves.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

from .relations import InvariantRelation, pair_code
from .structures import (
    IndexModel,
    NotRealizable,
    enumerate_realizations,
    extend_realizing,
    format_rational,
    qf_type_of,
)

EQUALITY = InvariantRelation.from_equalities(1, 1, 0, [(0, 0)])

INSIDE = "inside"
OUTSIDE = "outside"
UNDETERMINED = "undetermined-at-bound"


class NotAnEquivalence(ValueError):
    pass


class NotInvariant(ValueError):
    pass


def _is_equality(rel: InvariantRelation) -> bool:
    return rel.arity_left == 1 and rel.arity_right == 1 and rel.equalities == ((0, 0),)


@dataclass(frozen=True)
class Lifted:
    """P_phi on classes of the listed sorts; phi is read on the concatenated
    representative tuples (a unary phi has arity_right 0)."""

    name: str
    sorts: Tuple[int, ...]
    phi: InvariantRelation

    def holds(self, model: IndexModel, reps: Sequence[Tuple[int, ...]]) -> bool:
        if len(reps) == 1:
            return self.phi.holds(pair_code(model, reps[0], (), ()))
        return self.phi.holds(pair_code(model, reps[0], reps[1], ()))

    def to_dict(self) -> dict:
        return {"name": self.name, "sorts": list(self.sorts), "phi": self.phi.to_dict()}


@dataclass
class EqExtension:
    base: IndexModel
    relations: List[InvariantRelation]
    lifted: List[Lifted]
    # sort index -> list of (class id, representative tuple, members)
    sorts: Dict[int, List[Tuple[int, Tuple[int, ...], Tuple[Tuple[int, ...], ...]]]] = field(default_factory=dict)
    maps: Dict[int, Dict[Tuple[int, ...], int]] = field(default_factory=dict)
    lifted_values: Dict[str, frozenset] = field(default_factory=dict)

    @property
    def P_star(self) -> frozenset:
        return frozenset(self.base.ids)

    def sort_of(self, element: int) -> int:
        if element in self.base:
            return 0
        for i, classes in self.sorts.items():
            if any(cid == element for cid, _, _ in classes):
                return i
        raise KeyError(f"unknown element {element}")

    def representative(self, element: int) -> Tuple[int, ...]:
        if element in self.base:
            return (element,)
        for classes in self.sorts.values():
            for cid, rep, _ in classes:
                if cid == element:
                    return rep
        raise KeyError(f"unknown element {element}")

    def elements(self) -> List[int]:
        """Class elements sort by sort, then base vertices by coordinate."""
        out = [cid for i in sorted(self.sorts) for cid, _, _ in self.sorts[i]]
        return out + list(self.base.by_coord)

    def apply(self, i: int, tup: Sequence[int]) -> int:
        if i == 0:
            return tup[0]
        return self.maps[i][tuple(tup)]

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "relations": [r.to_dict() for r in self.relations],
            "lifted": [l.to_dict() for l in self.lifted],
            "sorts": [
                {
                    "sort": i,
                    "classes": [{"id": cid, "representative": list(rep), "size": len(mem)} for cid, rep, mem in self.sorts[i]],
                }
                for i in sorted(self.sorts)
            ],
            "lifted_values": {k: sorted(list(v) for v in vals) for k, vals in sorted(self.lifted_values.items())},
        }


def _tuple_codes(model: IndexModel, tuples) -> Dict[Tuple[int, ...], bytes]:
    return {t: qf_type_of(model, t).code for t in tuples}


def build_eq_extension(base: IndexModel, relations: Sequence[InvariantRelation], lifted: Sequence[Lifted] = ()) -> EqExtension:
    """Materialize classes of all base tuples for each relation.

    Sort 0 is the base itself (equality).  Relations equal to equality on
    single vertices are identified with sort 0.  Class ids follow the largest
    base id, assigned sort by sort in order of least representative tuple.
    """
    rels = [EQUALITY] + [r for r in relations if not _is_equality(r)]
    ids = sorted(base.ids)
    next_id = (max(ids) + 1) if ids else 0
    ext = EqExtension(base, rels, list(lifted))
    for i, rel in enumerate(rels):
        if i == 0:
            continue
        if rel.arity_left != rel.arity_right or rel.n_params:
            raise NotAnEquivalence(f"relation {i} must compare two tuples of equal length without parameters")
        n = rel.arity_left
        tuples = list(product(ids, repeat=n))
        holds = {(a, b): rel.holds(pair_code(base, a, b, ())) for a in tuples for b in tuples}
        for a in tuples:
            if not holds[(a, a)]:
                raise NotAnEquivalence(f"relation {i} is not reflexive at {a}")
            for b in tuples:
                if holds[(a, b)] != holds[(b, a)]:
                    raise NotAnEquivalence(f"relation {i} is not symmetric at {a}, {b}")
        classes, mapping = [], {}
        for a in tuples:
            if a in mapping:
                continue
            members = tuple(b for b in tuples if holds[(a, b)])
            for b in members:
                if b in mapping:
                    raise NotAnEquivalence(f"relation {i} is not transitive at {a}, {b}")
                mapping[b] = next_id
            classes.append((next_id, a, members))
            next_id += 1
        for cid, rep, members in classes:
            for b in members:
                for c in members:
                    if not holds[(b, c)]:
                        raise NotAnEquivalence(f"relation {i} is not transitive inside the class of {rep}")
        ext.sorts[i] = classes
        ext.maps[i] = mapping
    for lift in ext.lifted:
        ext.lifted_values[lift.name] = _lift_values(ext, lift)
    return ext


def _members(ext: EqExtension, sort: int):
    if sort == 0:
        return [(v, ((v,),)) for v in sorted(ext.base.ids)]
    return [(cid, mem) for cid, _, mem in ext.sorts[sort]]


def _lift_values(ext: EqExtension, lift: Lifted) -> frozenset:
    if not 1 <= len(lift.sorts) <= 2:
        raise ValueError("lifted predicates are unary or binary")
    pools = [_members(ext, srt) for srt in lift.sorts]
    out = set()
    for combo in product(*pools):
        values = {lift.holds(ext.base, reps) for reps in product(*[mem for _, mem in combo])}
        if len(values) != 1:
            raise NotInvariant(f"lifted {lift.name} is not invariant on classes {[c for c, _ in combo]}")
        if values.pop():
            out.add(tuple(c for c, _ in combo))
    return frozenset(out)


def coordinate_relation(length: int, coords: Sequence[int]) -> InvariantRelation:
    """Tuples of the given length are equivalent when they agree on coords."""
    return InvariantRelation.from_equalities(length, length, 0, [(c, c) for c in coords])


def predicate_lifts(base: IndexModel, relations: Sequence[InvariantRelation]) -> List[Lifted]:
    """For each coordinate-agreement relation and each coordinate it fixes,
    lift every predicate value seen in the base to the classes."""
    if not base.cls.has_predicates:
        return []
    rels = [EQUALITY] + [r for r in relations if not _is_equality(r)]
    ids = sorted(base.ids)
    preds = sorted({base.pred(v) for v in ids})
    out = []
    for i, rel in enumerate(rels):
        if i == 0 or rel.equalities is None or any(a != b for a, b in rel.equalities):
            continue
        n = rel.arity_left
        codes = _tuple_codes(base, product(ids, repeat=n))
        for m in sorted({a for a, _ in rel.equalities}):
            for q in preds:
                acc = frozenset(c for t, c in codes.items() if base.pred(t[m]) == q)
                phi = InvariantRelation(n, 0, 0, acc)
                out.append(Lifted(f"P{format_rational(q)}@{i}.{m}", (i,), phi))
    return out


# Indistinguishable pairs


def element_type(ext: EqExtension, s: Sequence[int], e: int) -> bytes:
    """Code of the quantifier-free type of e over s in the expanded signature.

    Terms: the entries of s, e itself, and F_i applied to every tuple of
    base-sort terms among them.  Atoms: sorts, equalities, order and
    predicates on base-sort terms, lifted predicates on class terms.
    """
    base = ext.base
    terms: List[Tuple[object, int]] = [(("s", i), v) for i, v in enumerate(s)] + [(("e",), e)]
    base_terms = [k for k, (_, v) in enumerate(terms) if v in base]
    for i in sorted(ext.sorts):
        n = ext.relations[i].arity_left
        for combo in product(base_terms, repeat=n):
            terms.append((("F", i, combo), ext.apply(i, [terms[k][1] for k in combo])))
    vals = [v for _, v in terms]
    sorts = [ext.sort_of(v) for v in vals]
    eq = [[int(a == b) for b in vals] for a in vals]
    order, preds = [], []
    for k, v in enumerate(vals):
        if sorts[k] == 0:
            preds.append(format_rational(base.pred(v)))
            order.append([(base.coord(v) > base.coord(u)) - (base.coord(v) < base.coord(u)) if sorts[kk] == 0 else None for kk, u in enumerate(vals)])
        else:
            preds.append(None)
            order.append(None)
    lifted = []
    for lift in ext.lifted:
        vals_l = ext.lifted_values[lift.name]
        if len(lift.sorts) == 1:
            lifted.append([int((v,) in vals_l) if sorts[k] == lift.sorts[0] else None for k, v in enumerate(vals)])
        else:
            lifted.append([
                [int((v, u) in vals_l) if sorts[k] == lift.sorts[0] and sorts[kk] == lift.sorts[1] else None for kk, u in enumerate(vals)]
                for k, v in enumerate(vals)
            ])
    labels = [repr(t) for t, _ in terms]
    return json.dumps([labels, sorts, eq, order, preds, lifted], separators=(",", ":")).encode()


@dataclass(frozen=True)
class PairResult:
    pair: Optional[Tuple[int, int]]
    s: Tuple[int, ...]
    scanned: int
    bounds: Dict[str, int]

    @property
    def found(self) -> bool:
        return self.pair is not None

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "verdict": "pair" if self.found else "none-up-to-bounds",
            "pair": None if self.pair is None else list(self.pair),
            "s": list(self.s),
            "scanned": self.scanned,
            "bounds": dict(self.bounds),
        }


def find_indistinguishable_pair(ext: EqExtension, s: Sequence[int] = (), max_elements: Optional[int] = None) -> PairResult:
    """First r0 != r1 with equal type codes over s, scanning class sorts
    first and then base vertices; max_elements caps the scan."""
    s = tuple(s)
    seen: Dict[bytes, int] = {}
    elements = [e for e in ext.elements() if e not in s]
    if max_elements is not None:
        elements = elements[:max_elements]
    bounds = {"elements": len(elements), "base": len(ext.base), "sorts": len(ext.sorts) + 1}
    for count, e in enumerate(elements, 1):
        code = element_type(ext, s, e)
        if code in seen:
            return PairResult((seen[code], e), s, count, bounds)
        seen[code] = e
    return PairResult(None, s, len(elements), bounds)


# Bounded closure


@dataclass(frozen=True)
class ClosureReport:
    kind: str
    element: int
    status: str
    bound_used: int
    s: Tuple[int, ...] = ()
    witnesses: Tuple[int, ...] = ()
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "element": self.element,
            "s": list(self.s),
            "status": self.status,
            "bound_used": self.bound_used,
            "witnesses": list(self.witnesses),
            "reason": self.reason,
        }


def singleton_predicates(model: IndexModel) -> bool:
    if not model.cls.has_predicates or not len(model):
        return False
    preds = [model.pred(v) for v in model.ids]
    return len(set(preds)) == len(preds)


def closure(
    model: IndexModel,
    s: Sequence[int],
    element: int,
    kind: str = "dcl",
    bound: int = 2,
    keep_singleton_predicates: Optional[bool] = None,
) -> ClosureReport:
    """Decide membership of element in dcl(s) or acl(s) by bounded search.

    Outside: an extension holds 2 (dcl) or bound-many (acl) distinct
    realizations of the type of element over s.  Inside: no second
    realization can exist, because element is in s or its predicate may not
    be reused.  keep_singleton_predicates restricts extensions to those that
    keep every predicate class a singleton; by default it is on exactly
    when the model already has that shape.
    """
    if kind not in ("dcl", "acl"):
        raise ValueError(f"unknown closure kind {kind!r}")
    s = tuple(s)
    if keep_singleton_predicates is None:
        keep_singleton_predicates = singleton_predicates(model)
    need = 2 if kind == "dcl" else bound
    if element in s:
        return ClosureReport(kind, element, INSIDE, 1, s, (element,), "element is a parameter")
    if keep_singleton_predicates and model.cls.has_predicates:
        return ClosureReport(kind, element, INSIDE, 1, s, (element,), "its predicate holds of no other vertex")
    r = qf_type_of(model, (element,), s)
    J = model
    found = [t[0] for t in enumerate_realizations(J, r, s)]
    used = 0
    while len(found) < need and used < bound:
        try:
            J, (fresh,) = extend_realizing(J, r, s, budget=None)
        except NotRealizable:
            return ClosureReport(kind, element, INSIDE, used, s, tuple(found), "no further realization exists")
        used += 1
        found.append(fresh)
    if len(found) >= need:
        return ClosureReport(kind, element, OUTSIDE, max(used, need), s, tuple(found[:need]), "distinct realizations found")
    return ClosureReport(kind, element, UNDETERMINED, bound, s, tuple(found), "bound reached")
