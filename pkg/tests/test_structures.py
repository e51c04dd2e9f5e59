import json
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import brute
from strategies import index_models
from shearlab.structures import (
    BudgetExhausted,
    ClassDescriptor,
    IndexModel,
    NotRealizable,
    QfType,
    Vertex,
    context_cut,
    dense_order,
    enumerate_realizations,
    extend_realizing,
    fresh_count,
    make_type,
    parse_rational,
    qf_type_of,
    realizable,
    validate_structure,
)

K32 = ClassDescriptor.hypergraph(3, 2)


# class descriptors


def test_hypergraph_class_requires_n_above_k_at_least_two():
    with pytest.raises(ValueError):
        ClassDescriptor.hypergraph(2, 2)
    with pytest.raises(ValueError):
        ClassDescriptor.hypergraph(3, 1)
    c = ClassDescriptor.hypergraph(4, 2)
    assert (c.edge_arity, c.clique_bound) == (3, 5)
    assert c.clique_bound > c.edge_arity >= 3


def test_orders_have_no_edges_or_bound():
    c = ClassDescriptor.orders()
    assert c.edge_arity is None and c.clique_bound is None
    with pytest.raises(ValueError):
        ClassDescriptor("linear-orders", 3, 2)


def test_parse_rational_accepts_fractions_and_rejects_floats():
    assert parse_rational("3/4") == Fraction(3, 4)
    assert parse_rational(2) == Fraction(2)
    with pytest.raises(ValueError):
        parse_rational(0.5)


# validate_structure


def test_context_cut_on_three_points_validates():
    m = context_cut(K32, [0, 1, 2])
    assert validate_structure(m).ok
    assert not m.edges
    assert [m.pred(i) for i in m.ids] == [0, 1, 2]


def test_empty_model_validates():
    assert validate_structure(IndexModel(K32)).ok


def test_four_clique_is_reported():
    m = IndexModel.build(K32, [(i, i) for i in range(4)], combinations(range(4), 3))
    rep = validate_structure(m)
    assert not rep.ok
    assert [v.kind for v in rep.violations] == ["forbidden 4-clique"]
    assert rep.violations[0].vertices == (0, 1, 2, 3)


def test_other_violations_are_named():
    m = IndexModel(
        ClassDescriptor.orders(),
        (Vertex(0, Fraction(1)), Vertex(1, Fraction(1)), Vertex(2, Fraction(2), Fraction(5))),
        frozenset({frozenset({0, 1})}),
    )
    kinds = {v.kind for v in validate_structure(m).violations}
    assert kinds == {"coord not injective", "predicate on pure order", "edge in edgeless class"}
    bad = IndexModel.build(K32, [(0, 0), (1, 1)], [(0, 1), (0, 1, 9)])
    kinds = {v.kind for v in validate_structure(bad).violations}
    assert kinds == {"edge arity", "edge on unknown vertex"}


@given(index_models())
def test_validate_matches_brute_force(m):
    assert validate_structure(m).ok == brute.structure_ok(m)


# qf_type_of


def test_increasing_pairs_share_a_code():
    m = dense_order([0, 1, 2, 3])
    assert qf_type_of(m, (0, 1)).code == qf_type_of(m, (2, 3)).code
    assert qf_type_of(m, (0, 1)).code != qf_type_of(m, (1, 0)).code


def test_distinct_singletons_of_context_cut_differ():
    m = context_cut(K32, [0, 1, 2])
    assert qf_type_of(m, (0,)).code != qf_type_of(m, (1,)).code


def test_edge_changes_the_code():
    # v0,v1,v2 carry an edge, t0,t1,t2 do not; same order and predicates
    m = IndexModel.build(K32, [(0, 0), (1, 1), (2, 2), (3, 10), (4, 11), (5, 12)], [(0, 1, 2)])
    a, b = qf_type_of(m, (0, 1, 2)), qf_type_of(m, (3, 4, 5))
    assert a.order == b.order and a.preds == b.preds
    assert a.code != b.code
    assert brute.signature(m, (0, 1, 2))[4] != brute.signature(m, (3, 4, 5))[4]


def test_unknown_vertex_is_an_error():
    with pytest.raises(KeyError):
        qf_type_of(dense_order([0]), (7,))


def test_repeated_vertices_are_recorded_as_equalities():
    m = IndexModel.build(K32, [(0, 0), (1, 1), (2, 2)], [(0, 1, 2)])
    r = qf_type_of(m, (0, 0, 1, 2))
    assert r.order[0][1] == 0
    # the edge needs three distinct vertices
    assert (0, 1, 2) not in r.edges and (1, 2, 3) in r.edges


def test_hex_round_trip_and_wellformedness():
    m = IndexModel.build(K32, [(0, 0, 1), (1, 1), (2, 2)], [(0, 1, 2)])
    r = qf_type_of(m, (2, 0), (1,))
    assert QfType.from_hex(r.hex()) == r
    r.check_wellformed()
    broken = QfType(1, 0, ((0,),), (Fraction(0),), ((0, 5, 6),), 3)
    with pytest.raises(ValueError):
        broken.check_wellformed()


@given(index_models(max_size=5), st.data())
def test_codes_agree_with_brute_force_signatures(m, data):
    assume(len(m) >= 1)
    ids = list(m.ids)
    t1 = data.draw(st.lists(st.sampled_from(ids), min_size=1, max_size=3))
    t2 = data.draw(st.lists(st.sampled_from(ids), min_size=len(t1), max_size=len(t1)))
    s = data.draw(st.lists(st.sampled_from(ids), max_size=2))
    same_code = qf_type_of(m, t1, s) == qf_type_of(m, t2, s)
    assert same_code == (brute.signature(m, t1, s) == brute.signature(m, t2, s))


@given(index_models(max_size=5), st.data())
def test_codes_are_invariant_under_relabeling_and_rescaling(m, data):
    assume(len(m) >= 1)
    ids = list(m.ids)
    new_ids = data.draw(st.permutations(range(100, 100 + len(ids))))
    rename = dict(zip(ids, new_ids))
    scale = data.draw(st.integers(1, 7))
    shift = data.draw(st.integers(-5, 5))
    verts = tuple(sorted((Vertex(rename[v.id], v.coord * scale + shift, v.pred) for v in m.vertices), key=lambda v: v.id))
    m2 = IndexModel(m.cls, verts, frozenset(frozenset(rename[x] for x in e) for e in m.edges))
    tup = data.draw(st.lists(st.sampled_from(ids), min_size=1, max_size=3))
    s = data.draw(st.lists(st.sampled_from(ids), max_size=2))
    assert qf_type_of(m, tup, s).code == qf_type_of(m2, [rename[x] for x in tup], [rename[x] for x in s]).code


# enumerate_realizations


def test_increasing_pairs_in_three_points():
    m = dense_order([5, 7, 9])
    a, b, c = 0, 1, 2
    assert enumerate_realizations(m, qf_type_of(m, (a, b))) == [(a, b), (a, c), (b, c)]


def test_singleton_predicates_pin_the_tuple():
    m = context_cut(K32, [0, 1, 2, 3])
    assert enumerate_realizations(m, qf_type_of(m, (1, 3))) == [(1, 3)]


def test_empty_type_is_rejected():
    m = dense_order([0])
    with pytest.raises(ValueError):
        enumerate_realizations(m, QfType(0, 0, (), (), (), None))


@settings(max_examples=60)
@given(index_models(max_size=5), st.data())
def test_enumeration_equals_exhaustive_scan(m, data):
    assume(len(m) >= 1)
    ids = list(m.ids)
    tup = tuple(data.draw(st.lists(st.sampled_from(ids), min_size=1, max_size=3)))
    s = tuple(data.draw(st.lists(st.sampled_from(ids), max_size=2)))
    got = enumerate_realizations(m, qf_type_of(m, tup, s), s)
    assert tup in got
    assert sorted(got) == sorted(brute.realizations(m, tup, s))
    keys = [tuple(m.coord(x) for x in t) for t in got]
    assert keys == sorted(keys)


# realizable and extend_realizing


def test_fresh_point_between_params_with_fresh_predicate():
    m = context_cut(K32, [0, 1, 2])
    target = make_type(m, (0, 1), ["1/2"], ["7/2"])
    assert realizable(m, target, (0, 1))
    J, (v,) = extend_realizing(m, target, (0, 1))
    assert J.coord(v) == Fraction(1, 2) and J.pred(v) == Fraction(7, 2)
    assert v == 3


def test_fresh_point_completing_a_forbidden_clique_is_refused():
    # three params pairwise fully edged in T(3,2): the single edge {0,1,2}
    m = IndexModel.build(K32, [(0, 0), (1, 1), (2, 2)], [(0, 1, 2)])
    target = make_type(m, (0, 1, 2), ["5"], ["0"], [(0, 1, 2), (0, 1, 3), (0, 2, 3)])
    assert not realizable(m, target, (0, 1, 2))
    with pytest.raises(NotRealizable):
        extend_realizing(m, target, (0, 1, 2))
    assert not brute.realizable_by_search(m, target, (0, 1, 2))


def test_realized_type_still_extends_with_fresh_vertices():
    m = IndexModel.build(K32, [(0, 0), (1, 1), (2, 2)], [(0, 1, 2)])
    r = qf_type_of(m, (0, 2), (1,))
    assert realizable(m, r, (1,))
    # extensions always use fresh vertices, one per position class
    assert fresh_count(m, r, (1,)) == 2
    J, tup = extend_realizing(m, r, (1,))
    assert len(enumerate_realizations(J, r, (1,))) == 2
    assert validate_structure(J).ok


def test_iterated_v_choice_gives_a_complete_edge_pattern():
    # t0<...<t(n-1) edgeless; v_i just above t_i, same predicate, edges on every k-set of earlier v's
    for n, k in [(3, 2), (4, 2), (4, 3), (5, 2)]:
        K = ClassDescriptor.hypergraph(n, k)
        J = context_cut(K, range(n))
        t = tuple(range(n))
        vs = []
        for i in t:
            params = t + tuple(vs)
            earlier = set(vs)
            target = make_type(
                J, params, [J.coord(i) + Fraction(1, 2)], [J.pred(i)],
                lambda labels, e=earlier: len(labels & e) == k and len(labels) == k + 1,
            )
            J, (v,) = extend_realizing(J, target, params)
            assert validate_structure(J).ok
            assert v in [x for tup in enumerate_realizations(J, target, params) for x in tup]
            vs.append(v)
        assert all(J.has_edge(c) for c in combinations(vs, k + 1))
        assert len(J.edges) == len(list(combinations(vs, k + 1)))
        assert all(J.coord(t[i]) < J.coord(vs[i]) for i in range(n))
        assert all(J.coord(vs[i]) < J.coord(t[i + 1]) for i in range(n - 1))


def test_copy_between_neighbours_in_pure_order():
    m = dense_order([0, 1, 2])
    target = qf_type_of(m, (1,), (0, 2))
    J, (v,) = extend_realizing(m, make_type(m, (0, 1), ["1/2"], ["0"]), (0, 1))
    assert J.coord(v) == Fraction(1, 2)
    assert validate_structure(J).ok
    assert len({J.coord(x) for x in J.ids}) == len(J)
    assert (v,) in enumerate_realizations(J, qf_type_of(J, (v,), (0, 1)), (0, 1))
    J2, (u,) = extend_realizing(m, target, (0, 2))
    # midpoint between the lower param and the next existing point
    assert J2.coord(u) == Fraction(1, 2)
    assert enumerate_realizations(J2, target, (0, 2)) == [(u,), (1,)]


def test_budget_is_enforced():
    m = dense_order([0, 1])
    target = make_type(m, (), ["5", "6", "7"], ["0", "0", "0"])
    assert fresh_count(m, target) == 3
    with pytest.raises(BudgetExhausted):
        extend_realizing(m, target, (), budget=2)
    J, tup = extend_realizing(m, target, (), budget=3)
    assert len(J) == len(m) + 3
    # fresh ids are the least unused
    assert sorted(tup) == [2, 3, 4]


def test_malformed_target_positions():
    m = dense_order([0, 1])
    bad = QfType(1, 1, ((0, 0), (0, 0)), (Fraction(0),), ((0, 7),), 2)
    with pytest.raises(ValueError):
        realizable(m, bad, (0,))


@st.composite
def realization_problems(draw):
    """A model, params, and a target of length <= 3 that may or may not be realizable."""
    m = draw(index_models(max_size=5))
    ids = list(m.ids)
    params = tuple(draw(st.lists(st.sampled_from(ids), unique=True, max_size=3))) if ids else ()
    L = draw(st.integers(1, 3))
    pc = sorted(m.coord(p) for p in params)
    spots = brute.coordinate_grid(m.restrict(params), extra=3) + pc
    slots = [draw(st.sampled_from(spots)) for _ in range(L)]
    if m.cls.has_predicates:
        preds = [draw(st.integers(0, 2)) for _ in range(L)]
    else:
        preds = [0] * L
    edges = ()
    if m.cls.edge_arity:
        cand = list(combinations(range(L + len(params)), m.cls.edge_arity))
        edges = draw(st.lists(st.sampled_from(cand), unique=True)) if cand else ()
    return m, params, make_type(m, params, slots, preds, edges)


@settings(max_examples=150, deadline=None)
@given(realization_problems())
def test_realizable_agrees_with_exhaustive_extension_search(problem):
    m, params, target = problem
    expected = brute.realizable_by_search(m, target, params)
    assert realizable(m, target, params) == expected
    if expected:
        J, tup = extend_realizing(m, target, params)
        assert validate_structure(J).ok
        assert qf_type_of(J, tup, params) == target
        assert tup in enumerate_realizations(J, target, params)
        assert len(J) - len(m) == fresh_count(m, target, params) <= target.length
        assert set(m.ids) <= set(J.ids) and m.edges <= J.edges


@settings(max_examples=60, deadline=None)
@given(realization_problems())
def test_extension_is_deterministic(problem):
    m, params, target = problem
    assume(realizable(m, target, params))
    assert extend_realizing(m, target, params) == extend_realizing(m, target, params)


# serialization


@given(index_models())
def test_model_json_round_trip(m):
    data = json.loads(json.dumps(m.to_dict()))
    assert IndexModel.from_dict(data) == m
    for v in data["vertices"]:
        assert "/" in v["coord"] and "/" in v["pred"]
