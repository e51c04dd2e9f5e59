"""Shearing instances: labelings, families of formulas, demos and chains.

An indiscernible parameter family indexed by realizations of a qf-type is
never built as an infinite object.  A labeling says which parameter sits at
each position of the tuple attached to an index tuple:

* projection labelings name the parameter after a vertex of the index model
  (optionally tagged by a row), and parameter edges follow an edge rule;
* collision labelings attach abstract, edgeless parameters and identify
  position instances whenever the type code of the two index tuples lies in
  the relation for that pair of positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

from .oracle import (
    Diagram,
    TheoryDescriptor,
    clique_cap,
    conjunction,
    consistent,
    minimal_inconsistent_subfamilies,
    neg,
    neq,
    pos,
)
from .relations import InvariantRelation, pair_code
from .structures import (
    DEFAULT_BUDGET,
    Vertex,
    BudgetExhausted,
    ClassDescriptor,
    IndexModel,
    QfType,
    context_cut,
    dense_order,
    enumerate_realizations,
    extend_realizing,
    fresh_count,
    make_type,
    qf_type_of,
)

PROJECTION = "projection"
COLLISION = "collision"

SKELETON = "skeleton"
NO_EDGES = "none"
MATCHING_COMPLEMENT = "matching-complement"


class IncoherentLabeling(ValueError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class Labeling:
    kind: str
    width: int
    coord_map: Tuple[int, ...] = ()
    rows: Optional[Tuple[int, ...]] = None
    edge_rule: str = SKELETON
    relations: Tuple[Tuple[Tuple[int, int], InvariantRelation], ...] = ()

    @classmethod
    def projection(cls, coord_map, rows=None, edge_rule=SKELETON) -> "Labeling":
        coord_map = tuple(coord_map)
        if rows is not None:
            rows = tuple(rows)
            if len(rows) != len(coord_map):
                raise ValueError("rows and coord_map differ in length")
        if edge_rule not in (SKELETON, NO_EDGES, MATCHING_COMPLEMENT):
            raise ValueError(f"unknown edge rule {edge_rule!r}")
        if edge_rule == MATCHING_COMPLEMENT and rows is None:
            raise ValueError("matching-complement edges need row tags")
        return cls(PROJECTION, len(coord_map), coord_map, rows, edge_rule)

    @classmethod
    def collision(cls, width: int, relations: Dict[Tuple[int, int], InvariantRelation]) -> "Labeling":
        for (i, j) in relations:
            if not (0 <= i < width and 0 <= j < width):
                raise ValueError(f"relation index {(i, j)} outside width {width}")
        return cls(COLLISION, width, relations=tuple(sorted(relations.items())))

    def relation(self, i: int, j: int) -> Optional[InvariantRelation]:
        for key, rel in self.relations:
            if key == (i, j):
                return rel
        return None

    def collides(self, code: bytes, i: int, j: int) -> bool:
        rel = self.relation(i, j)
        return rel is not None and rel.holds(code)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "width": self.width}
        if self.kind == PROJECTION:
            out.update(coord_map=list(self.coord_map), edge_rule=self.edge_rule)
            if self.rows is not None:
                out["rows"] = list(self.rows)
        else:
            out["relations"] = [
                {"positions": [i, j], **rel.to_dict()} for (i, j), rel in self.relations
            ]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Labeling":
        if data["kind"] == PROJECTION:
            return cls.projection(data["coord_map"], data.get("rows"), data.get("edge_rule", SKELETON))
        if data["kind"] == COLLISION:
            rels = {}
            for item in data.get("relations", []):
                i, j = item["positions"]
                rels[(int(i), int(j))] = InvariantRelation.from_dict(item)
            return cls.collision(int(data["width"]), rels)
        raise ValueError(f"unknown labeling kind {data['kind']!r}")


@dataclass(frozen=True)
class Formula:
    """Conjunction of edge atoms, non-edge atoms and disequalities with x.

    Atoms are tuples of parameter positions of length edge arity minus one.
    """

    positive: Tuple[Tuple[int, ...], ...] = ()
    negative: Tuple[Tuple[int, ...], ...] = ()
    distinct: Tuple[int, ...] = ()

    @classmethod
    def make(cls, positive=(), negative=(), distinct=()) -> "Formula":
        norm = lambda atoms: tuple(tuple(a) if isinstance(a, (tuple, list)) else (a,) for a in atoms)
        f = cls(norm(positive), norm(negative), tuple(distinct))
        if set(f.positive) & set(f.negative):
            raise ValueError("positive and negative atoms overlap")
        return f

    @property
    def size(self) -> int:
        return len(self.positive) + len(self.negative)

    def positions(self) -> List[int]:
        out = set(self.distinct)
        for a in self.positive + self.negative:
            out |= set(a)
        return sorted(out)

    def to_dict(self) -> dict:
        return {
            "positive": [list(a) for a in self.positive],
            "negative": [list(a) for a in self.negative],
            "distinct": list(self.distinct),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Formula":
        return cls.make(data.get("positive", []), data.get("negative", []), data.get("distinct", []))


@dataclass(frozen=True)
class Extension:
    """One deterministic extend_realizing step replayed when preparing J."""

    target: QfType
    params: Tuple[int, ...]

    def to_dict(self) -> dict:
        return {"target": self.target.hex(), "params": list(self.params)}

    @classmethod
    def from_dict(cls, data: dict) -> "Extension":
        return cls(QfType.from_hex(data["target"]), tuple(int(p) for p in data["params"]))


@dataclass(frozen=True)
class ShearingInstance:
    base: IndexModel
    s: Tuple[int, ...]
    t: Tuple[int, ...]
    theory: TheoryDescriptor
    labeling: Labeling
    formula: Formula
    extensions: Tuple[Extension, ...] = ()
    name: str = ""
    witness_hint: Tuple[Tuple[int, ...], ...] = ()

    @property
    def cls(self) -> ClassDescriptor:
        return self.base.cls

    @property
    def r(self) -> QfType:
        return qf_type_of(self.base, self.t, self.s)

    def validate(self) -> None:
        if self.labeling.kind == PROJECTION:
            if any(c < 0 or c >= len(self.t) for c in self.labeling.coord_map):
                raise ValueError("coord_map points outside the index tuple")
        elif self.theory.clique_bound is not None:
            raise ValueError("collision labelings are for the random graph only")
        arity = self.theory.edge_arity - 1
        for atom in self.formula.positive + self.formula.negative:
            if len(atom) != arity:
                raise ValueError(f"atom {atom} should list {arity} positions")
        if any(p < 0 or p >= self.labeling.width for p in self.formula.positions()):
            raise ValueError("formula refers to a position outside the labeling width")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "class": self.cls.to_dict(),
            "base": self.base.to_dict(),
            "s": list(self.s),
            "t": list(self.t),
            "r": self.r.hex(),
            "theory": self.theory.to_dict(),
            "labeling": self.labeling.to_dict(),
            "formula": self.formula.to_dict(),
            "extensions": [e.to_dict() for e in self.extensions],
            "witness_hint": [list(w) for w in self.witness_hint],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ShearingInstance":
        return cls(
            IndexModel.from_dict(data["base"]),
            tuple(int(v) for v in data.get("s", [])),
            tuple(int(v) for v in data["t"]),
            TheoryDescriptor.from_dict(data["theory"]),
            Labeling.from_dict(data["labeling"]),
            Formula.from_dict(data["formula"]),
            tuple(Extension.from_dict(e) for e in data.get("extensions", [])),
            data.get("name", ""),
            tuple(tuple(int(v) for v in w) for w in data.get("witness_hint", [])),
        )


@dataclass(frozen=True)
class Prepared:
    J: IndexModel
    used: int
    exhausted: bool


def prepare(inst: ShearingInstance, budget: int = DEFAULT_BUDGET) -> Prepared:
    """Replay the instance's extension steps on its base, within budget."""
    J, used = inst.base, 0
    for ext in inst.extensions:
        need = fresh_count(J, ext.target, ext.params)
        if used + need > budget:
            return Prepared(J, used, True)
        J, _ = extend_realizing(J, ext.target, ext.params, budget=budget - used)
        used += need
    return Prepared(J, used, False)


# Coherence


@dataclass(frozen=True)
class CoherenceReport:
    violations: Tuple[Tuple[str, str], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def _code_matrix(J, reals, s):
    return [[pair_code(J, a, b, s) for b in reals] for a in reals]


def check_labeling_coherence(lab: Labeling, J: IndexModel, s: Sequence[int], r: QfType, limit: int = 5) -> CoherenceReport:
    """Reflexivity, symmetry and transitivity of the induced equality.

    Projection labelings induce vertex equality, which is always coherent;
    only the coord_map range is checked.  limit caps the violations reported.
    """
    s = tuple(s)
    if lab.kind == PROJECTION:
        bad = [c for c in lab.coord_map if not 0 <= c < r.length]
        if bad:
            return CoherenceReport((("range", f"coord_map entries {bad} outside tuple length {r.length}"),))
        return CoherenceReport()
    reals = enumerate_realizations(J, r, s)
    codes = _code_matrix(J, reals, s)
    w = lab.width
    rel = {(i, j): lab.relation(i, j) for i in range(w) for j in range(w)}
    n = len(reals)

    memo = {}

    def eq(a, i, b, j):
        key = (a, i, b, j)
        if key not in memo:
            rr = rel[(i, j)]
            memo[key] = rr is not None and rr.holds(codes[a][b])
        return memo[key]

    out = []
    for a in range(n):
        for i in range(w):
            if not eq(a, i, a, i):
                out.append(("reflexivity", f"position {i} at {reals[a]}"))
                if len(out) >= limit:
                    return CoherenceReport(tuple(out))
    for a in range(n):
        for b in range(n):
            for i in range(w):
                for j in range(w):
                    if eq(a, i, b, j) != eq(b, j, a, i):
                        out.append(("symmetry", f"({reals[a]},{i}) vs ({reals[b]},{j})"))
                        if len(out) >= limit:
                            return CoherenceReport(tuple(out))
    if out:
        return CoherenceReport(tuple(out))
    # transitivity through classes: build components and compare with eq
    linked = [[(b, j) for b in range(n) for j in range(w) if eq(a, i, b, j)] for a in range(n) for i in range(w)]
    for a in range(n):
        for i in range(w):
            for (b, j) in linked[a * w + i]:
                for (c, l) in linked[b * w + j]:
                    if not eq(a, i, c, l):
                        out.append(("transitivity", f"({reals[a]},{i})~({reals[b]},{j})~({reals[c]},{l})"))
                        if len(out) >= limit:
                            return CoherenceReport(tuple(out))
    return CoherenceReport(tuple(out))


# Families


def _projection_names(lab: Labeling, tup: Sequence[int]) -> Tuple[str, ...]:
    if lab.rows is None:
        return tuple(f"a{tup[c]}" for c in lab.coord_map)
    return tuple(f"a{row}_{tup[c]}" for row, c in zip(lab.rows, lab.coord_map))


def _projection_edges(lab: Labeling, J: IndexModel, theory: TheoryDescriptor, names_vertices) -> set:
    """Parameter edges under the labeling's edge rule.

    names_vertices maps parameter name -> (row, vertex).
    """
    edges = set()
    items = sorted(names_vertices.items())
    if lab.edge_rule == SKELETON:
        if J.cls.edge_arity != theory.edge_arity:
            return edges
        for e in J.edges:
            hit = [n for n, (_, v) in items if v in e]
            if len(hit) == len(e):
                edges.add(frozenset(hit))
    elif lab.edge_rule == MATCHING_COMPLEMENT:
        if theory.edge_arity != 2:
            raise ValueError("matching-complement edges are binary")
        for (n1, (r1, v1)), (n2, (r2, v2)) in combinations(items, 2):
            if r1 != r2 and v1 != v2:
                edges.add(frozenset((n1, n2)))
    return edges


def _literals(formula: Formula, names: Sequence[str]):
    out = []
    for atom in formula.positive:
        out.append(pos("x", *[names[p] for p in atom]))
    for atom in formula.negative:
        out.append(neg("x", *[names[p] for p in atom]))
    for p in formula.distinct:
        out.append(neq("x", names[p]))
    return out


def parameter_names(inst: ShearingInstance, J: IndexModel, reals: Sequence[Tuple[int, ...]], cache=None):
    """Parameter names for each realization, the shared pool and its edges.

    cache, if given, maps a collision relation to the realization index
    pairs where it holds; it is only valid for one fixed (J, reals, s).
    """
    lab = inst.labeling
    if lab.kind == PROJECTION:
        per = [_projection_names(lab, t) for t in reals]
        where = {}
        for t, names in zip(reals, per):
            for p, nm in enumerate(names):
                row = None if lab.rows is None else lab.rows[p]
                where[nm] = (row, t[lab.coord_map[p]])
        edges = _projection_edges(lab, J, inst.theory, where)
        pool = sorted(where)
        return per, pool, edges
    if cache is None:
        cache = {}
    codes = None
    w = lab.width
    parent = list(range(len(reals) * w))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (i, j), rel in lab.relations:
        if rel not in cache:
            if codes is None:
                codes = _code_matrix(J, reals, inst.s)
            n = len(reals)
            cache[rel] = [(a, b) for a in range(n) for b in range(n) if rel.holds(codes[a][b])]
        for a, b in cache[rel]:
            ra, rb = find(a * w + i), find(b * w + j)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    label: Dict[int, str] = {}
    per = []
    for a in range(len(reals)):
        names = []
        for i in range(w):
            root = find(a * w + i)
            if root not in label:
                label[root] = f"b{len(label)}"
            names.append(label[root])
        per.append(tuple(names))
    pool = [label[k] for k in sorted(label, key=lambda k: int(label[k][1:]))]
    return per, pool, set()


def instantiate_family(inst: ShearingInstance, J: IndexModel, reals=None, check=True, cache=None) -> List[Diagram]:
    """One diagram per realization of r over s in J, over one shared pool."""
    inst.validate()
    if reals is None:
        reals = enumerate_realizations(J, inst.r, inst.s)
        if check and inst.labeling.kind == COLLISION:
            rep = check_labeling_coherence(inst.labeling, J, inst.s, inst.r)
            if not rep.ok:
                raise IncoherentLabeling("; ".join(f"{k}: {d}" for k, d in rep.violations))
    per, pool, edges = parameter_names(inst, J, reals, cache)
    return [
        Diagram.make(inst.theory, pool, edges, ("x",), _literals(inst.formula, names))
        for names in per
    ]


@dataclass(frozen=True)
class ShearingReport:
    single_consistent: bool
    family_inconsistent: bool
    witness_subfamily: Tuple[Tuple[int, ...], ...]
    realization_count: int
    extension_budget_used: int
    budget_exhausted: bool = False
    realizations: Tuple[Tuple[int, ...], ...] = ()
    t_index: int = -1
    single_reason: str = "ok"
    witness_reasons: Tuple[Tuple[str, Tuple[str, ...]], ...] = ()
    cap: int = 0

    @property
    def valid(self) -> bool:
        return self.single_consistent and self.family_inconsistent

    @property
    def witness_size(self) -> int:
        return min((len(w) for w in self.witness_subfamily), default=0)

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "single_consistent": self.single_consistent,
            "single_reason": self.single_reason,
            "family_inconsistent": self.family_inconsistent,
            "witness_subfamily": [list(w) for w in self.witness_subfamily],
            "witness_tuples": [[list(self.realizations[i]) for i in w] for w in self.witness_subfamily],
            "witness_reasons": [{"reason": r, "witness": list(v)} for r, v in self.witness_reasons],
            "realization_count": self.realization_count,
            "extension_budget_used": self.extension_budget_used,
            "budget_exhausted": self.budget_exhausted,
            "inconsistency_cap": self.cap,
        }


def inconsistency_cap(inst: ShearingInstance) -> int:
    extra = clique_cap(inst.theory)
    if not extra and inst.cls.clique_bound is not None:
        extra = comb(inst.cls.n, inst.cls.k) + 1
    return max(inst.formula.size, extra)


def check_shearing(inst: ShearingInstance, budget: int = DEFAULT_BUDGET, cap: Optional[int] = None) -> ShearingReport:
    prep = prepare(inst, budget)
    J = prep.J
    reals = enumerate_realizations(J, inst.r, inst.s)
    family = instantiate_family(inst, J, reals)
    t_index = reals.index(tuple(inst.t))
    single = consistent(family[t_index])
    cap = inconsistency_cap(inst) if cap is None else cap
    subs = minimal_inconsistent_subfamilies(family, cap)
    whole = consistent(conjunction(family))
    reasons = []
    for w in subs:
        v = consistent(conjunction([family[i] for i in w]))
        reasons.append((v.reason, v.witness))
    return ShearingReport(
        single_consistent=single.consistent,
        family_inconsistent=not whole.consistent,
        witness_subfamily=tuple(subs),
        realization_count=len(reals),
        extension_budget_used=prep.used,
        budget_exhausted=prep.exhausted and len(reals) <= 1,
        realizations=tuple(reals),
        t_index=t_index,
        single_reason=single.reason,
        witness_reasons=tuple(reasons),
        cap=cap,
    )


# Demo constructions


def _v_sequence_extensions(J: IndexModel, s: Sequence[int], t: Sequence[int], k: int):
    """Extension steps choosing v_i just above t_i with the predicate of t_i,
    carrying an edge with every k-set of earlier v's and no other edge."""
    steps = []
    vs: List[int] = []
    for i, ti in enumerate(t):
        params = tuple(s) + tuple(t) + tuple(vs)
        earlier = set(vs)
        target = make_type(
            J,
            params,
            [J.coord(ti) + Fraction(1, 2)],
            [J.pred(ti)],
            lambda labels, earlier=earlier: len(labels & earlier) == k and len(labels) == k + 1,
        )
        J, (v,) = extend_realizing(J, target, params, budget=None)
        steps.append(Extension(target, params))
        vs.append(v)
    return steps, J, vs


def _substituted(t, v, u):
    return tuple(v[i] if i in u else t[i] for i in range(len(t)))


def build_demo_instance(kind: str, n: int = 3, k: int = 2, m: int = 4) -> Tuple[ShearingInstance, IndexModel]:
    """Named constructions: "t32", "tnk", "tn1" (dividing array) and "rg-linear"."""
    if kind in ("tnk", "t32"):
        if kind == "t32":
            n, k = 3, 2
        K = ClassDescriptor.hypergraph(n, k)
        base = context_cut(K, range(n))
        t = tuple(range(n))
        if kind == "t32":
            steps, J, vs = _t32_extension(base)
        else:
            steps, J, vs = _v_sequence_extensions(base, (), t, k)
        hint = tuple(_substituted(t, vs, u) for u in combinations(range(n), k))
        inst = ShearingInstance(
            base,
            (),
            t,
            TheoryDescriptor.tnk(n, k),
            Labeling.projection(range(n)),
            Formula.make(positive=list(combinations(range(n), k))),
            tuple(steps),
            f"{kind}({n},{k})" if kind == "tnk" else "t32",
            hint,
        )
        return inst, J
    if kind == "tn1":
        if n < 2 or m < 2:
            raise ValueError("tn1 needs n >= 2 and m >= 2")
        base = dense_order(range(m))
        inst = ShearingInstance(
            base,
            (),
            (0,),
            TheoryDescriptor.tn1(n),
            Labeling.projection([0] * n, rows=range(n), edge_rule=MATCHING_COMPLEMENT),
            Formula.make(positive=[(row,) for row in range(n)]),
            (),
            f"tn1({n},{m})",
            tuple((i,) for i in range(m)),
        )
        return inst, base
    if kind == "rg-linear":
        base = dense_order(range(m))
        inst = ShearingInstance(
            base,
            (),
            (0, 1),
            TheoryDescriptor.random_graph(),
            Labeling.projection([0, 1], edge_rule=NO_EDGES),
            Formula.make(positive=[(0,)], negative=[(1,)]),
            (),
            "rg-linear",
            ((0, 1), (1, 2)),
        )
        return inst, base
    raise ValueError(f"unknown demo {kind!r}")


def _t32_extension(base: IndexModel):
    """Add v0, v1, v2 at once: v_i just above t_i with the predicate of t_i,
    and a single edge on {v0, v1, v2}."""
    t = (0, 1, 2)
    target = make_type(
        base,
        t,
        [base.coord(i) + Fraction(1, 2) for i in t],
        [base.pred(i) for i in t],
        [(0, 1, 2)],
    )
    J, vs = extend_realizing(base, target, t, budget=None)
    return [Extension(target, t)], J, list(vs)


# Unsuperstability chains


@dataclass(frozen=True)
class ChainStep:
    I: Tuple[int, ...]
    instance: ShearingInstance
    pool_tuple: Tuple[int, ...]


def build_unsuperstable_chain(n: int, k: int, steps: int) -> List[ChainStep]:
    """Grow I_m by n fresh singleton-predicate points per step.

    I_0 is one point; step m takes t above I_m, shears via a fresh v-sequence
    over I_m, and contributes phi(x, a_t) to the running partial type.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    K = ClassDescriptor.hypergraph(n, k)
    base = context_cut(K, range(1 + steps * n))
    J = base
    I_m: Tuple[int, ...] = (0,)
    chain = []
    for step in range(steps):
        t = tuple(range(1 + step * n, 1 + (step + 1) * n))
        exts, J_next, vs = _v_sequence_extensions(J, I_m, t, k)
        hint = tuple(_substituted(t, vs, u) for u in combinations(range(n), k))
        inst = ShearingInstance(
            J,
            I_m,
            t,
            TheoryDescriptor.tnk(n, k),
            Labeling.projection(range(n)),
            Formula.make(positive=list(combinations(range(n), k))),
            tuple(exts),
            f"chain({n},{k}) step {step}",
            hint,
        )
        chain.append(ChainStep(I_m, inst, t))
        J = J_next
        I_m = I_m + t
    return chain


@dataclass(frozen=True)
class ChainReport:
    steps: Tuple[ShearingReport, ...]
    union_consistent: bool
    union_reason: str
    increasing: bool

    @property
    def valid(self) -> bool:
        return self.increasing and self.union_consistent and all(r.valid for r in self.steps)

    @property
    def verdict(self) -> str:
        if self.valid:
            return f"unsuperstable at desk scale for {len(self.steps)} steps"
        return "chain does not verify"

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "verdict": self.verdict,
            "union_consistent": self.union_consistent,
            "union_reason": self.union_reason,
            "increasing": self.increasing,
            "steps": [r.to_dict() for r in self.steps],
        }


def union_type(chain: Sequence[ChainStep], budget: int = DEFAULT_BUDGET) -> Diagram:
    """The conjunction of the step formulas at their pool tuples, over the final J."""
    J = prepare(chain[-1].instance, budget).J
    diagrams = []
    for step in chain:
        inst = step.instance
        diagrams.extend(instantiate_family(inst, J, [step.pool_tuple]))
    # give every conjunct the same pool so cross-step edges are visible
    names = set()
    for d in diagrams:
        names |= set(d.params)
    lab = chain[0].instance.labeling
    where = {}
    for step in chain:
        for p, nm in enumerate(_projection_names(step.instance.labeling, step.pool_tuple)):
            where[nm] = (None, step.pool_tuple[step.instance.labeling.coord_map[p]])
    edges = _projection_edges(lab, J, chain[0].instance.theory, where)
    whole = conjunction(diagrams)
    return Diagram.make(whole.theory, sorted(names), edges, whole.free_vars, whole.literals)


def verify_chain(chain: Sequence[ChainStep], budget: int = DEFAULT_BUDGET) -> ChainReport:
    reports = tuple(check_shearing(step.instance, budget) for step in chain)
    sizes = [len(set(step.I)) for step in chain]
    increasing = all(set(a.I) < set(b.I) for a, b in zip(chain, chain[1:]))
    increasing = increasing and all(sizes[i + 1] == sizes[i] + len(chain[i].instance.t) for i in range(len(chain) - 1))
    verdict = consistent(union_type(chain, budget))
    return ChainReport(reports, verdict.consistent, verdict.reason, increasing)


# Self-collision pipeline


def _crossings(J: IndexModel, v: Sequence[int], w: Sequence[int]) -> List[Tuple[int, int]]:
    """Pairs (a, b) with v_a, w_b off the shared elements, in one interval, w_b below v_a."""
    shared = sorted(set(v) & set(w), key=J.coord)
    cuts = [J.coord(u) for u in shared]

    def interval(x):
        c = J.coord(x)
        return sum(1 for u in cuts if u < c)

    out = []
    for a, va in enumerate(v):
        if va in shared:
            continue
        for b, wb in enumerate(w):
            if wb in shared:
                continue
            if interval(va) == interval(wb) and J.coord(wb) <= J.coord(va):
                out.append((a, b))
    return out


def _adjacent_crossing(J, v, w):
    """First interval with a crossing; inside it, the first w-element
    immediately followed (in the merged order) by a v-element."""
    shared = set(v) & set(w)
    cuts = sorted(J.coord(u) for u in shared)
    groups: Dict[int, List[Tuple[Fraction, str, int]]] = {}
    for tag, seq in (("v", v), ("w", w)):
        for idx, x in enumerate(seq):
            if x in shared:
                continue
            c = J.coord(x)
            groups.setdefault(sum(1 for u in cuts if u < c), []).append((c, tag, idx))
    for key in sorted(groups):
        merged = sorted(groups[key])
        for (c1, tag1, i1), (c2, tag2, i2) in zip(merged, merged[1:]):
            if tag1 == "w" and tag2 == "v":
                return i2, i1
    return None


def _mirrored_edges(J: IndexModel, mapping, avoid=()):
    """Edge rule copying the edges of the vertices a fresh label stands for."""
    avoid = set(avoid)

    def decide(labels):
        if avoid & labels:
            return False
        image = {mapping.get(x, x) for x in labels}
        return len(image) == len(labels) and J.has_edge(image)

    return decide


@dataclass(frozen=True)
class SelfCollision:
    z: Tuple[int, ...]
    J: IndexModel
    trace: Tuple[dict, ...]
    crossings_before: int
    v: Tuple[int, ...]
    w: Tuple[int, ...]
    i: int
    j: int
    fresh_used: int

    def to_dict(self) -> dict:
        return {
            "z": list(self.z),
            "v": list(self.v),
            "w": list(self.w),
            "i": self.i,
            "j": self.j,
            "crossings_before": self.crossings_before,
            "fresh_used": self.fresh_used,
            "trace": list(self.trace),
            "J": self.J.to_dict(),
        }


def derive_self_collision(
    lab: Labeling,
    J: IndexModel,
    s: Sequence[int],
    r: QfType,
    v: Sequence[int],
    w: Sequence[int],
    i: int,
    j: int,
    formula: Optional[Formula] = None,
    budget: int = DEFAULT_BUDGET,
) -> SelfCollision:
    """Turn a positive/negative collision between v and w into one inside z.

    Moves: remove w-before-v crossings inside intervals of the shared
    elements by substituting fresh copies, then copy the w-elements of each
    interval just below the w-block to obtain z with
    type(v^w) = type(v^z) = type(z^w), and close the equalities by
    transitivity.
    """
    s, v, w = tuple(s), tuple(v), tuple(w)
    if lab.kind != COLLISION:
        raise PreconditionError("self-collision needs a collision labeling")
    if formula is not None:
        pos_positions = {a[0] for a in formula.positive}
        neg_positions = {a[0] for a in formula.negative}
        if i not in pos_positions or j not in neg_positions:
            raise PreconditionError(f"positions ({i}, {j}) are not a positive/negative pair")
    for tup in (v, w):
        if qf_type_of(J, tup, s) != r:
            raise PreconditionError(f"{tup} does not realize r over s")
        if len(set(tup)) != len(tup):
            raise PreconditionError(f"{tup} repeats a vertex")
    start_code = pair_code(J, v, w, s)
    if not lab.collides(start_code, i, j):
        raise PreconditionError(f"no collision between ({v},{i}) and ({w},{j})")

    trace: List[dict] = []
    used = 0
    crossings = _crossings(J, v, w)
    before = len(crossings)
    trace.append({"move": "start", "v": list(v), "w": list(w), "i": i, "j": j, "code": start_code.hex(), "crossings": before})

    def spend(model, target, params):
        nonlocal used
        need = fresh_count(model, target, params)
        if used + need > budget:
            raise BudgetExhausted(f"self-collision needs more than {budget} fresh vertices")
        used += need
        return extend_realizing(model, target, params, budget=None)

    # move 1: crossing normalization
    while crossings:
        a, b = _adjacent_crossing(J, v, w)
        va, wb = v[a], w[b]
        rest_v = tuple(x for p, x in enumerate(v) if p != a)
        params = rest_v + w + s
        target_v = make_type(
            J, params, [(J.coord(wb) + J.coord(va)) / 2], [J.pred(va)],
            _mirrored_edges(J, {("new", 0): va}),
        )
        J, (va2,) = spend(J, target_v, params)
        rest_w = tuple(x for p, x in enumerate(w) if p != b)
        params_w = v + rest_w + s + (va2,)
        target_w = make_type(
            J, params_w, [(J.coord(va2) + J.coord(va)) / 2], [J.pred(wb)],
            _mirrored_edges(J, {("new", 0): wb}, avoid=(va2,)),
        )
        J, (wb2,) = spend(J, target_w, params_w)
        v2 = v[:a] + (va2,) + v[a + 1:]
        w2 = w[:b] + (wb2,) + w[b + 1:]
        code = pair_code(J, v, w, s)
        if pair_code(J, v2, w, s) != code or pair_code(J, v, w2, s) != code:
            raise RuntimeError("crossing substitution changed the pair type")
        new_crossings = _crossings(J, v2, w2)
        trace.append({
            "move": "crossing",
            "v_position": a,
            "w_position": b,
            "replace_v": [va, va2],
            "replace_w": [wb, wb2],
            "equal_codes": [[list(v), list(w)], [list(v2), list(w)], [list(v), list(w2)]],
            "derived": {
                "chain": [[list(v2), i], [list(w), j], [list(v), i], [list(w2), j]],
                "conclusion": [[list(v2), i], [list(w2), j]],
                "by": "transitivity",
            },
            "crossings": len(new_crossings),
        })
        if len(new_crossings) >= len(crossings):
            raise RuntimeError("crossing count did not decrease")
        v, w, crossings = v2, w2, new_crossings

    # move 2 and 3: density of copies, then copy the w-blocks to the left
    shared = set(v) & set(w)
    cuts = sorted(J.coord(u) for u in shared)

    def interval(x):
        c = J.coord(x)
        return sum(1 for u in cuts if u < c)

    slots, copies = [], []
    for p, x in enumerate(w):
        if x in shared:
            slots.append(J.coord(x))
            continue
        key = interval(x)
        block = sorted((J.coord(y) for y in w if y not in shared and interval(y) == key))
        lows = [J.coord(y) for y in v if y not in shared and interval(y) == key]
        if key > 0:
            lows.append(cuts[key - 1])
        low = max(lows) if lows else block[0] - 1
        rank = block.index(J.coord(x))
        slots.append(low + (block[0] - low) * Fraction(rank + 1, len(block) + 1))
        copies.append(p)
    v_set, w_set = set(v), set(w)
    to_w = {("new", p): w[p] for p in range(len(w))}
    to_v = {("new", p): v[p] for p in range(len(v))}

    def z_edge(labels):
        olds = [x for x in labels if not isinstance(x, tuple)]
        answers = []
        if all(x in v_set for x in olds):
            image = {to_w.get(x, x) for x in labels}
            answers.append(len(image) == len(labels) and J.has_edge(image))
        if all(x in w_set for x in olds):
            image = {to_v.get(x, x) for x in labels}
            answers.append(len(image) == len(labels) and J.has_edge(image))
        if len(set(answers)) > 1:
            raise RuntimeError("copy-left edge requirements disagree")
        return bool(answers and answers[0])

    params = v + w + s
    target_z = make_type(J, params, slots, [J.pred(x) for x in w], z_edge)
    J, z = spend(J, target_z, params)
    trace.append({
        "move": "density",
        "copied_positions": copies,
        "fresh": [z[p] for p in copies],
    })
    trace.append({
        "move": "copy-left",
        "z": list(z),
        "copies": [[p, w[p], z[p]] for p in copies],
        "equal_codes": [[list(v), list(w)], [list(v), list(z)], [list(z), list(w)]],
    })
    trace.append({
        "move": "transitivity",
        "steps": [
            [[list(v), i], [list(w), j]],
            [[list(z), i], [list(w), j]],
            [[list(v), i], [list(z), j]],
        ],
        "conclusion": [[list(z), i], [list(z), j]],
    })
    if qf_type_of(J, z, s) != r:
        raise RuntimeError("copy-left tuple does not realize r")
    code = pair_code(J, v, w, s)
    if pair_code(J, v, z, s) != code or pair_code(J, z, w, s) != code:
        raise RuntimeError("copy-left tuple changed a pair type")
    trace.append({"move": "self-collision", "z": list(z), "realizes_r": True, "i": i, "j": j})
    return SelfCollision(z, J, tuple(trace), before, tuple(trace[0]["v"]), tuple(trace[0]["w"]), i, j, used)


def pos_neg_collisions(inst: ShearingInstance, J: IndexModel, reals=None, cache=None):
    """All (a, b, i, j) with realization a's position i (positive) equal to
    realization b's position j (negative), in enumeration order."""
    if reals is None:
        reals = enumerate_realizations(J, inst.r, inst.s)
    per, _, _ = parameter_names(inst, J, reals, cache)
    pos_positions = sorted({x for atom in inst.formula.positive for x in atom})
    neg_positions = sorted({x for atom in inst.formula.negative for x in atom})
    out = []
    for a in range(len(reals)):
        for b in range(len(reals)):
            for i in pos_positions:
                for j in neg_positions:
                    if per[a][i] == per[b][j]:
                        out.append((a, b, i, j))
    return reals, out


def merge_pools(chain: Sequence[ChainStep]) -> List[ChainStep]:
    """Defective chain: every step reuses the first step's sheared tuples as its pool."""
    hints = chain[0].instance.witness_hint
    return [replace(step, pool_tuple=hints[m % len(hints)]) for m, step in enumerate(chain)]


# Exhaustive sweep over the coordinate-equality fragment of collision labelings


def coordinate_patterns(length: int) -> List[Tuple[int, ...]]:
    """Nonempty sequences of distinct positions of a tuple of the given length."""
    from itertools import permutations

    out = []
    for size in range(1, length + 1):
        out.extend(permutations(range(length), size))
    return out


def equality_labeling(patterns: Sequence[Tuple[int, ...]], length: int, n_params: int) -> Labeling:
    """Position p of the tuple attached to t is named by t restricted to patterns[p];
    two position instances collide iff those restrictions agree."""
    rels = {}
    for i, pi in enumerate(patterns):
        for j, pj in enumerate(patterns):
            if len(pi) == len(pj):
                rels[(i, j)] = InvariantRelation.from_equalities(length, length, n_params, zip(pi, pj))
    return Labeling.collision(len(patterns), rels)


def sweep_model(klass: ClassDescriptor, length: int, s_positions: Sequence[int]):
    """Context cut 0..length-1 plus a copy just below and just above each
    non-s position (same predicate), with every arity-set of upper copies an edge."""
    base = context_cut(klass, range(length))
    t = tuple(range(length))
    s = tuple(t[p] for p in s_positions)
    free = [p for p in range(length) if p not in set(s_positions)]
    ids = iter(range(length, length + 2 * len(free)))
    verts, uppers = [], []
    for p in free:
        lo, hi = next(ids), next(ids)
        verts.append(Vertex(lo, Fraction(p) - Fraction(1, 3), base.pred(p)))
        verts.append(Vertex(hi, Fraction(p) + Fraction(1, 3), base.pred(p)))
        uppers.append(hi)
    edges = []
    arity = klass.edge_arity
    if arity and len(uppers) >= arity:
        edges = [frozenset(c) for c in combinations(uppers, arity)]
    J = base.with_additions(verts, edges)
    return base, J, t, s


@dataclass
class SweepReport:
    configurations: int = 0
    inconsistent_families: int = 0
    shearing_instances: List[dict] = field(default_factory=list)
    collisions: int = 0
    derivations: List[Tuple[Labeling, IndexModel, Tuple[int, ...], QfType, SelfCollision]] = field(default_factory=list)
    failures: List[dict] = field(default_factory=list)
    incoherent: List[dict] = field(default_factory=list)
    models: int = 0

    @property
    def counterexamples(self) -> int:
        return len(self.shearing_instances) + len(self.failures) + len(self.incoherent)

    def to_dict(self) -> dict:
        return {
            "configurations": self.configurations,
            "models": self.models,
            "inconsistent_families": self.inconsistent_families,
            "shearing_instances": self.shearing_instances,
            "pos_neg_collisions": self.collisions,
            "derivations": len(self.derivations),
            "derivation_failures": self.failures,
            "incoherent_models": self.incoherent,
            "counterexamples": self.counterexamples,
        }


def sweep_collision_fragment(
    n: int = 3,
    k: int = 2,
    max_length: int = 3,
    max_s: int = 2,
    max_width: int = 3,
    budget: int = 6,
    keep_derivations: bool = True,
    derive_budget: int = DEFAULT_BUDGET,
) -> SweepReport:
    """Look for random-graph shearing under the singleton-predicate context.

    Every labeling whose positions are named by coordinate patterns of t is
    tried with every sign assignment, over every s that is a subsequence of t.
    A labeling is a set of (pattern, sign) items, so repeated items are skipped.
    budget bounds the fresh vertices of each working model J; derive_budget
    bounds the fresh vertices a single self-collision derivation may add.
    Coherence is checked once per model for the labeling using all patterns:
    reflexivity, symmetry and transitivity quantify over positions, so every
    restriction to fewer positions inherits it.
    """
    klass = ClassDescriptor.hypergraph(n, k)
    theory = TheoryDescriptor.random_graph()
    rep = SweepReport()
    for length in range(1, max_length + 1):
        patterns = coordinate_patterns(length)
        items = [(pi, sign) for pi in patterns for sign in "+-"]
        for s_size in range(0, min(max_s, length) + 1):
            for s_positions in combinations(range(length), s_size):
                base, J, t, s = sweep_model(klass, length, s_positions)
                if len(J) - len(base) > budget:
                    continue
                rep.models += 1
                r = qf_type_of(base, t, s)
                reals = enumerate_realizations(J, r, s)
                t_index = reals.index(t)
                whole = equality_labeling(patterns, length, len(s))
                coh = check_labeling_coherence(whole, J, s, r)
                if not coh.ok:
                    rep.incoherent.append({"length": length, "s": list(s), "violations": [list(v) for v in coh.violations]})
                    continue
                cache: dict = {}
                seen = set()
                for width in range(1, max_width + 1):
                    for chosen in combinations(items, width):
                        pats = [pi for pi, _ in chosen]
                        lab = equality_labeling(pats, length, len(s))
                        formula = Formula.make(
                            positive=[(p,) for p, (_, sg) in enumerate(chosen) if sg == "+"],
                            negative=[(p,) for p, (_, sg) in enumerate(chosen) if sg == "-"],
                        )
                        inst = ShearingInstance(base, s, t, theory, lab, formula, name="sweep")
                        rep.configurations += 1
                        family = instantiate_family(inst, J, reals, cache=cache)
                        if consistent(conjunction(family)).consistent:
                            continue
                        rep.inconsistent_families += 1
                        config = {"length": length, "s": list(s), "items": [[list(pi), sg] for pi, sg in chosen]}
                        if consistent(family[t_index]).consistent:
                            rep.shearing_instances.append(config)
                        _, hits = pos_neg_collisions(inst, J, reals, cache)
                        for a, b, i, j in hits:
                            rep.collisions += 1
                            key = (length, s, pair_code(J, reals[a], reals[b], s), pats[i], pats[j])
                            if key in seen:
                                continue
                            seen.add(key)
                            try:
                                sc = derive_self_collision(lab, J, s, r, reals[a], reals[b], i, j, formula, budget=derive_budget)
                            except Exception as exc:  # recorded, not raised: the sweep reports counterexamples
                                rep.failures.append({**config, "v": list(reals[a]), "w": list(reals[b]), "error": repr(exc)})
                                continue
                            if keep_derivations:
                                rep.derivations.append((lab, J, s, r, sc))
    return rep
