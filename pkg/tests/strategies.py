"""Hypothesis strategies for small index models and diagrams."""

from fractions import Fraction
from itertools import combinations

from hypothesis import strategies as st

from shearlab.oracle import Diagram, TheoryDescriptor, neg, neq, pos
from shearlab.structures import ClassDescriptor, IndexModel, Vertex

CLASSES = [
    ClassDescriptor.orders(),
    ClassDescriptor.predicates(),
    ClassDescriptor.hypergraph(3, 2),
    ClassDescriptor.hypergraph(4, 2),
]


def drop_cliques(edges, arity, bound):
    """Greedily remove edges until no bound-clique remains."""
    edges = list(edges)
    while True:
        verts = sorted({v for e in edges for v in e})
        es = set(edges)
        bad = None
        for combo in combinations(verts, bound):
            if all(frozenset(c) in es for c in combinations(combo, arity)):
                bad = combo
                break
        if bad is None:
            return edges
        edges.remove(frozenset(bad[:arity]))


@st.composite
def index_models(draw, classes=CLASSES, min_size=0, max_size=6):
    klass = draw(st.sampled_from(classes))
    size = draw(st.integers(min_size, max_size))
    coords = draw(st.lists(st.integers(-20, 20), min_size=size, max_size=size, unique=True))
    ids = draw(st.lists(st.integers(0, 30), min_size=size, max_size=size, unique=True))
    if klass.has_predicates:
        preds = draw(st.lists(st.integers(0, 2), min_size=size, max_size=size))
    else:
        preds = [0] * size
    verts = tuple(sorted((Vertex(i, Fraction(c), Fraction(p)) for i, c, p in zip(ids, coords, preds)), key=lambda v: v.id))
    edges = []
    if klass.edge_arity and size >= klass.edge_arity:
        cand = [frozenset(c) for c in combinations(sorted(ids), klass.edge_arity)]
        chosen = draw(st.lists(st.sampled_from(cand), unique=True, max_size=len(cand)))
        edges = drop_cliques(chosen, klass.edge_arity, klass.clique_bound)
    return IndexModel(klass, verts, frozenset(edges))


THEORIES = [TheoryDescriptor.random_graph(), TheoryDescriptor.tnk(3, 2)]


@st.composite
def diagrams(draw, theories=THEORIES, max_params=6, max_free=2, max_literals=6):
    theory = draw(st.sampled_from(theories))
    params = [f"p{i}" for i in range(draw(st.integers(0, max_params)))]
    free = ["x", "y"][: draw(st.integers(1, max_free))]
    arity = theory.edge_arity
    cand = [frozenset(c) for c in combinations(params, arity)]
    edges = draw(st.lists(st.sampled_from(cand), unique=True)) if cand else []
    if theory.clique_bound is not None:
        edges = drop_cliques(edges, arity, theory.clique_bound)
    names = free + params
    lits = []
    for _ in range(draw(st.integers(0, max_literals))):
        kind = draw(st.sampled_from("+-!"))
        x = draw(st.sampled_from(free))
        if kind == "!":
            other = draw(st.sampled_from([n for n in names if n != x] or [x]))
            if other == x:
                continue
            lits.append(neq(x, other))
            continue
        rest = draw(st.lists(st.sampled_from(names), min_size=arity - 1, max_size=arity - 1))
        args = [x] + rest
        if len(set(args)) != arity:
            continue
        lits.append(pos(*args) if kind == "+" else neg(*args))
    return Diagram.make(theory, params, edges, free, lits)


def random_circle_candidate(rng, sizes=(4, 5), lengths=(1, 2, 3)):
    """A coordinate-equality witness candidate on a small dense order: t
    increasing, E1 and E2 nonempty sets of diagonal pairs, F a single pair."""
    from shearlab.circle import CircleWitness
    from shearlab.structures import dense_order

    n = rng.choice(sizes)
    J = dense_order(range(n))
    length = rng.choice(lengths)
    s = tuple(sorted(rng.sample(range(n), rng.randint(0, 1))))
    rest = [i for i in range(n) if i not in s]
    t = tuple(sorted(rng.sample(rest, length)))
    diag = [(i, i) for i in range(length)]
    e1 = tuple(sorted(rng.sample(diag, rng.randint(1, length))))
    e2 = tuple(sorted(rng.sample(diag, rng.randint(1, length))))
    f = ((rng.randrange(length), rng.randrange(length)),)
    return J, CircleWitness.from_equalities(s, t, e1, e2, f), (e1, e2, f)


def passing_circle_witnesses(seed, count, **kw):
    """The first `count` seeded candidates that pass check_circle_witness."""
    import random

    from shearlab.circle import check_circle_witness

    rng = random.Random(seed)
    out, tried = [], 0
    while len(out) < count:
        tried += 1
        J, w, eqs = random_circle_candidate(rng, **kw)
        if check_circle_witness(w, J).ok:
            out.append((J, w, eqs))
    return out, tried
