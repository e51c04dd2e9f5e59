"""The circle property: witness checking, bounded search and the two bridges
to random-graph shearing."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from typing import Dict, List, Optional, Tuple

from .oracle import TheoryDescriptor, consistent
from .relations import InvariantRelation, pair_code
from .shearing import (
    PROJECTION,
    Formula,
    Labeling,
    ShearingInstance,
    instantiate_family,
    parameter_names,
)
from .structures import (
    DEFAULT_BUDGET,
    BudgetExhausted,
    ClassDescriptor,
    IndexModel,
    NotRealizable,
    enumerate_realizations,
    extend_realizing,
    fresh_count,
    qf_type_of,
)

__all__ = [
    "InvariantRelation",
    "CircleWitness",
    "CircleCheck",
    "check_circle_witness",
    "ensure_two_realizations",
    "search_circle_witness",
    "SearchResult",
    "circle_to_shearing",
    "shearing_to_circle",
    "strong_pairwise",
    "NoCollision",
    "witnesses_agree",
]


@dataclass(frozen=True)
class CircleWitness:
    s: Tuple[int, ...]
    t: Tuple[int, ...]
    E1: InvariantRelation
    E2: InvariantRelation
    F: InvariantRelation

    @classmethod
    def from_equalities(cls, s, t, e1, e2, f) -> "CircleWitness":
        L, P = len(t), len(s)
        mk = lambda pairs: InvariantRelation.from_equalities(L, L, P, pairs)
        return cls(tuple(s), tuple(t), mk(e1), mk(e2), mk(f))

    def materialized(self, J: IndexModel) -> "CircleWitness":
        """Same witness with accepted sets filled in over the realizations in J."""
        Y = enumerate_realizations(J, qf_type_of(J, self.t, self.s), self.s)
        return CircleWitness(
            self.s,
            self.t,
            self.E1.materialize(J, Y, Y, self.s),
            self.E2.materialize(J, Y, Y, self.s),
            self.F.materialize(J, Y, Y, self.s),
        )

    def to_dict(self) -> dict:
        return {
            "s": list(self.s),
            "t": list(self.t),
            "E1": self.E1.to_dict(),
            "E2": self.E2.to_dict(),
            "F": self.F.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CircleWitness":
        return cls(
            tuple(int(v) for v in data.get("s", [])),
            tuple(int(v) for v in data["t"]),
            InvariantRelation.from_dict(data["E1"]),
            InvariantRelation.from_dict(data["E2"]),
            InvariantRelation.from_dict(data["F"]),
        )


@dataclass(frozen=True)
class CircleCheck:
    violations: Tuple[Tuple[str, str], ...] = ()
    realizations: int = 0
    e1_classes: int = 0
    e2_classes: int = 0
    f_pairs: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def kinds(self) -> List[str]:
        return sorted({k for k, _ in self.violations})

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [{"kind": k, "detail": d} for k, d in self.violations],
            "realizations": self.realizations,
            "e1_classes": self.e1_classes,
            "e2_classes": self.e2_classes,
            "f_pairs": self.f_pairs,
        }


def _truth_table(rel: InvariantRelation, codes) -> List[List[bool]]:
    return [[rel.holds(c) for c in row] for row in codes]


def _equivalence_violations(name: str, m, Y, limit: int) -> List[Tuple[str, str]]:
    out = []
    n = len(Y)
    for a in range(n):
        if not m[a][a]:
            out.append(("equivalence", f"{name} not reflexive at {Y[a]}"))
            if len(out) >= limit:
                return out
    for a in range(n):
        for b in range(a + 1, n):
            if m[a][b] != m[b][a]:
                out.append(("equivalence", f"{name} not symmetric at {Y[a]}, {Y[b]}"))
                if len(out) >= limit:
                    return out
    for a in range(n):
        related = [b for b in range(n) if m[a][b]]
        for b in related:
            for c in range(n):
                if m[b][c] and not m[a][c]:
                    out.append(("equivalence", f"{name} not transitive at {Y[a]}, {Y[b]}, {Y[c]}"))
                    if len(out) >= limit:
                        return out
    return out


def _classes(m, n) -> List[int]:
    cls, seen = [-1] * n, 0
    for a in range(n):
        if cls[a] < 0:
            for b in range(n):
                if cls[b] < 0 and m[a][b]:
                    cls[b] = seen
            cls[a] = seen
            seen += 1
    return cls


def check_circle_witness(w: CircleWitness, J: IndexModel, limit: int = 5) -> CircleCheck:
    """Clauses (i)-(iii) over the realizations Y of the type of t over s in J."""
    r = qf_type_of(J, w.t, w.s)
    Y = enumerate_realizations(J, r, w.s)
    if len(Y) < 2:
        return CircleCheck((("insufficient realizations", f"{len(Y)} realization(s) of the type of {w.t} over {w.s}"),), len(Y))
    codes = [[pair_code(J, a, b, w.s) for b in Y] for a in Y]
    return _check_tables(_truth_table(w.E1, codes), _truth_table(w.E2, codes), _truth_table(w.F, codes), Y, limit)


def _check_tables(e1, e2, f, Y, limit=5) -> CircleCheck:
    n = len(Y)
    out = _equivalence_violations("E1", e1, Y, limit) + _equivalence_violations("E2", e2, Y, limit)
    if out:
        return CircleCheck(tuple(out), n)
    c1, c2 = _classes(e1, n), _classes(e2, n)
    pairs = [(a, b) for a in range(n) for b in range(n) if f[a][b]]
    for a in range(n):
        if f[a][a]:
            out.append(("fixed point", f"F({Y[a]}, {Y[a]})"))
            break
    if not pairs:
        out.append(("empty", "F holds of no pair"))
    # F is a union of E1-class x E2-class blocks
    for a, b in pairs:
        for a2 in range(n):
            if c1[a2] != c1[a]:
                continue
            for b2 in range(n):
                if c2[b2] == c2[b] and not f[a2][b2]:
                    out.append(("well-defined", f"F({Y[a]}, {Y[b]}) but not F({Y[a2]}, {Y[b2]})"))
                    break
            if len(out) >= limit:
                break
        if len(out) >= limit:
            break
    image: Dict[int, int] = {}
    preimage: Dict[int, int] = {}
    for a, b in pairs:
        if image.setdefault(c1[a], c2[b]) != c2[b]:
            out.append(("function", f"E1-class of {Y[a]} is sent to two E2-classes"))
        if preimage.setdefault(c2[b], c1[a]) != c1[a]:
            out.append(("injective", f"E2-class of {Y[b]} is hit by two E1-classes"))
    return CircleCheck(tuple(out[: 4 * limit]), n, max(c1) + 1, max(c2) + 1, len(pairs))


def ensure_two_realizations(J: IndexModel, t, s, budget: int = DEFAULT_BUDGET) -> Tuple[IndexModel, int]:
    """Duplication rule: extend J until the type of t over s has two realizations."""
    r = qf_type_of(J, t, s)
    if len(enumerate_realizations(J, r, s)) >= 2:
        return J, 0
    need = fresh_count(J, r, s)
    if need == 0 or need > budget:
        return J, 0
    J, _ = extend_realizing(J, r, s, budget=budget)
    return J, need


# Bounded search over the coordinate-equality fragment


def equality_pair_sets(length: int) -> List[Tuple[Tuple[int, int], ...]]:
    """All sets of (left, right) position pairs, by size then lexicographically."""
    pairs = list(product(range(length), repeat=2))
    out = []
    for size in range(len(pairs) + 1):
        out.extend(combinations(pairs, size))
    return out


@dataclass
class SearchResult:
    witness: Optional[CircleWitness]
    J: Optional[IndexModel]
    bounds: Dict[str, int]
    coverage: Dict[str, int] = field(default_factory=dict)
    candidates: int = 0

    @property
    def found(self) -> bool:
        return self.witness is not None

    def to_dict(self) -> dict:
        out = {
            "found": self.found,
            "verdict": "witness" if self.found else "none-up-to-bounds",
            "bounds": dict(self.bounds),
            "candidates": self.candidates,
            "coverage": dict(sorted(self.coverage.items())),
        }
        if self.found:
            out["witness"] = self.witness.to_dict()
            out["equalities"] = {
                name: [list(p) for p in getattr(self.witness, name).equalities]
                for name in ("E1", "E2", "F")
            }
            out["J"] = self.J.to_dict()
        return out


def working_model(base: IndexModel, t, s, max_size: int) -> IndexModel:
    """Grow base toward max_size by repeatedly realizing the type of t over s."""
    J = base
    r = qf_type_of(base, t, s)
    while True:
        try:
            need = fresh_count(J, r, s)
        except NotRealizable:
            return J
        if need == 0 or len(J) + need > max_size:
            return J
        J, _ = extend_realizing(J, r, s, budget=None)


def search_circle_witness(
    klass: ClassDescriptor,
    base: IndexModel,
    max_length: int = 2,
    max_s: int = 2,
    max_size: int = 8,
) -> SearchResult:
    """First witness in a fixed order, or none-up-to-bounds.

    Order: |s| then s (combinations by coordinate), then length of t, then t
    (permutations by coordinate), then E1, E2, F over equality_pair_sets.
    """
    if base.cls != klass:
        raise ValueError("base does not belong to the given class")
    ids = base.by_coord
    bounds = {"L": max_length, "S": max_s, "N": max_size}
    result = SearchResult(None, None, bounds)
    for s_size in range(0, max_s + 1):
        for s in combinations(ids, s_size):
            key = "s=" + ",".join(map(str, s))
            result.coverage.setdefault(key, 0)
            for length in range(1, max_length + 1):
                rel_sets = equality_pair_sets(length)
                for t in permutations(ids, length):
                    J = working_model(base, t, s, max_size)
                    r = qf_type_of(J, t, s)
                    Y = enumerate_realizations(J, r, s)
                    if len(Y) < 2:
                        continue
                    codes = [[pair_code(J, a, b, s) for b in Y] for a in Y]
                    tables = {}
                    for pairs in rel_sets:
                        rel = InvariantRelation.from_equalities(length, length, len(s), pairs)
                        tables[pairs] = _truth_table(rel, codes)
                    equivalences = [p for p in rel_sets if not _equivalence_violations("E", tables[p], Y, 1)]
                    for e1, e2 in product(equivalences, repeat=2):
                        for fp in rel_sets:
                            result.candidates += 1
                            result.coverage[key] += 1
                            f = tables[fp]
                            if any(f[a][a] for a in range(len(Y))):
                                continue
                            if _check_tables(tables[e1], tables[e2], f, Y, 1).ok:
                                result.witness = CircleWitness.from_equalities(s, t, e1, e2, fp)
                                result.J = J
                                return result
    return result


# Bridges


def circle_to_shearing(w: CircleWitness, J: IndexModel, check: bool = True) -> ShearingInstance:
    """Width-2 collision labeling: position 0 per E1, position 1 per E2,
    0 against 1 per F; formula R(x, b0) and not R(x, b1)."""
    if check:
        rep = check_circle_witness(w, J)
        if not rep.ok:
            raise ValueError("invalid circle witness: " + "; ".join(f"{k}: {d}" for k, d in rep.violations))
    Y = enumerate_realizations(J, qf_type_of(J, w.t, w.s), w.s)
    mat = lambda rel: rel.materialize(J, Y, Y, w.s)
    lab = Labeling.collision(
        2,
        {
            (0, 0): mat(w.E1),
            (1, 1): mat(w.E2),
            (0, 1): mat(w.F),
            (1, 0): w.F.mirror(J, Y, Y, w.s),
        },
    )
    return ShearingInstance(
        J,
        w.s,
        w.t,
        TheoryDescriptor.random_graph(),
        lab,
        Formula.make(positive=[(0,)], negative=[(1,)]),
        (),
        "from-circle",
    )


class NoCollision(ValueError):
    pass


def _names_relation(per, Y, J, s, i, j) -> InvariantRelation:
    L = len(Y[0])
    acc = frozenset(pair_code(J, Y[a], Y[b], s) for a in range(len(Y)) for b in range(len(Y)) if per[a][i] == per[b][j])
    return InvariantRelation(L, L, len(s), acc)


def shearing_to_circle(inst: ShearingInstance, J: IndexModel) -> CircleWitness:
    """Extract E1, E2, F from the first positive/negative parameter collision."""
    if inst.theory.clique_bound is not None or inst.theory.edge_arity != 2:
        raise ValueError("shearing_to_circle needs a random-graph instance")
    Y = enumerate_realizations(J, inst.r, inst.s)
    per, _, _ = parameter_names(inst, J, Y)
    pos_p = sorted({a[0] for a in inst.formula.positive})
    neg_p = sorted({a[0] for a in inst.formula.negative})
    hit = None
    for a in range(len(Y)):
        for b in range(len(Y)):
            for i in pos_p:
                for j in neg_p:
                    if per[a][i] == per[b][j]:
                        hit = (i, j)
                        break
                if hit:
                    break
            if hit:
                break
        if hit:
            break
    if hit is None:
        raise NoCollision("no positive/negative parameter collision among the realizations")
    i, j = hit
    lab = inst.labeling
    L, P = len(inst.t), len(inst.s)
    if lab.kind == PROJECTION:
        ci, cj = lab.coord_map[i], lab.coord_map[j]
        mk = lambda pairs: InvariantRelation.from_equalities(L, L, P, pairs)
        return CircleWitness(inst.s, inst.t, mk([(ci, ci)]), mk([(cj, cj)]), mk([(ci, cj)]))
    rel = lambda x, y: lab.relation(x, y) or _names_relation(per, Y, J, inst.s, x, y)
    return CircleWitness(inst.s, inst.t, rel(i, i), rel(j, j), rel(i, j))


@dataclass
class StrongPairwise:
    ok: bool
    partners: Dict[Tuple[int, ...], Tuple[int, ...]]
    missing: List[Tuple[int, ...]]
    J: IndexModel
    fresh_used: int

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "partners": [[list(a), list(b)] for a, b in sorted(self.partners.items())],
            "missing": [list(a) for a in self.missing],
            "fresh_used": self.fresh_used,
        }


def strong_pairwise(inst: ShearingInstance, J: IndexModel, budget: int = DEFAULT_BUDGET) -> StrongPairwise:
    """For every realization t* in J find t** with {phi(t*), phi(t**)} inconsistent.

    A partner is looked up among the realizations already in J; failing that,
    J is extended by transporting a known colliding pair (w', w'') to t*.
    """
    Y0 = enumerate_realizations(J, inst.r, inst.s)
    fam = instantiate_family(inst, J, Y0)
    model = (None, None)
    for a in range(len(Y0)):
        for b in range(len(Y0)):
            if not consistent(fam[a].conjoin(fam[b])).consistent:
                model = (Y0[a], Y0[b])
                break
        if model[0] is not None:
            break
    partners: Dict[Tuple[int, ...], Tuple[int, ...]] = {}
    missing = []
    used = 0
    Y = Y0
    for tstar in Y0:
        ia = Y.index(tstar)
        found = next((Y[b] for b in range(len(Y)) if not consistent(fam[ia].conjoin(fam[b])).consistent), None)
        if found is None and model[0] is not None:
            wp, wpp = model
            target = qf_type_of(J, wpp, tuple(wp) + inst.s)
            try:
                need = fresh_count(J, target, tuple(tstar) + inst.s)
                if used + need <= budget:
                    J, cand = extend_realizing(J, target, tuple(tstar) + inst.s, budget=None)
                    used += need
                    Y = enumerate_realizations(J, inst.r, inst.s)
                    fam = instantiate_family(inst, J, Y)
                    if not consistent(fam[Y.index(tstar)].conjoin(fam[Y.index(cand)])).consistent:
                        found = cand
            except (NotRealizable, BudgetExhausted):
                pass
        if found is None:
            missing.append(tstar)
        else:
            partners[tstar] = found
    return StrongPairwise(not missing, partners, missing, J, used)


def accepted_agree(x: InvariantRelation, y: InvariantRelation, codes) -> bool:
    return all(x.holds(c) == y.holds(c) for c in codes)


def witness_codes(w: CircleWitness, J: IndexModel) -> List[bytes]:
    Y = enumerate_realizations(J, qf_type_of(J, w.t, w.s), w.s)
    return sorted({pair_code(J, a, b, w.s) for a in Y for b in Y})


def witnesses_agree(w1: CircleWitness, w2: CircleWitness, J: IndexModel) -> bool:
    codes = witness_codes(w1, J)
    return all(accepted_agree(getattr(w1, n), getattr(w2, n), codes) for n in ("E1", "E2", "F"))
