import json
from itertools import combinations, product

import pytest
from hypothesis import given, settings

import brute
from strategies import index_models
from shearlab.eq_extension import (
    EQUALITY,
    INSIDE,
    OUTSIDE,
    UNDETERMINED,
    Lifted,
    NotAnEquivalence,
    NotInvariant,
    build_eq_extension,
    closure,
    coordinate_relation,
    element_type,
    find_indistinguishable_pair,
    predicate_lifts,
)
from shearlab.relations import InvariantRelation, pair_code
from shearlab.structures import ClassDescriptor, context_cut, dense_order

PREDICATES = ClassDescriptor.predicates()
FIRST = coordinate_relation(2, [0])
SECOND = coordinate_relation(2, [1])


def dense():
    return dense_order(range(4))


def singleton_context():
    return context_cut(PREDICATES, range(4))


# build_eq_extension


def test_equality_alone_adds_nothing():
    base = dense()
    for rels in ([], [EQUALITY], [coordinate_relation(1, [0])]):
        ext = build_eq_extension(base, rels)
        assert ext.sorts == {} and ext.elements() == [0, 1, 2, 3]
        assert ext.P_star == frozenset(base.ids)
        assert all(ext.sort_of(v) == 0 and ext.apply(0, (v,)) == v for v in base.ids)
    assert build_eq_extension(base, []).to_dict() == build_eq_extension(base, [EQUALITY]).to_dict()


def test_first_coordinate_classes_match_vertices():
    ext = build_eq_extension(dense(), [FIRST])
    classes = ext.sorts[1]
    assert len(classes) == len({a for a, _ in product(range(4), repeat=2)}) == 4
    assert [(cid, rep) for cid, rep, _ in classes] == [(4, (0, 0)), (5, (1, 0)), (6, (2, 0)), (7, (3, 0))]
    assert ext.elements() == [4, 5, 6, 7, 0, 1, 2, 3]
    assert not ext.P_star & {4, 5, 6, 7}


def test_class_maps_are_total_and_constant_on_classes():
    base = dense()
    ext = build_eq_extension(base, [FIRST, SECOND])
    for i, coord in ((1, 0), (2, 1)):
        assert set(ext.maps[i]) == set(product(base.ids, repeat=2))
        for cid, rep, members in ext.sorts[i]:
            assert set(members) == {t for t in product(base.ids, repeat=2) if t[coord] == rep[coord]}
            assert {ext.apply(i, t) for t in members} == {cid}


def test_non_equivalences_are_rejected():
    with pytest.raises(NotAnEquivalence):
        build_eq_extension(dense(), [InvariantRelation.from_equalities(2, 2, 0, [(0, 1)])])
    with pytest.raises(NotAnEquivalence):
        build_eq_extension(dense(), [InvariantRelation.from_equalities(2, 1, 0, [(0, 0)])])


def _first_less(base):
    pairs = list(product(base.ids, repeat=2))
    acc = frozenset(pair_code(base, a, b, ()) for a in pairs for b in pairs if base.coord(a[0]) < base.coord(b[0]))
    return InvariantRelation(2, 2, 0, acc)


def _pair_less(base):
    pairs = list(product(base.ids, repeat=2))
    acc = frozenset(pair_code(base, a, (), ()) for a in pairs if base.coord(a[0]) < base.coord(a[1]))
    return InvariantRelation(2, 0, 0, acc)


def test_invariant_lift_is_accepted():
    base = dense()
    ext = build_eq_extension(base, [FIRST], [Lifted("lt", (1, 1), _first_less(base))])
    assert ext.lifted_values["lt"] == frozenset((4 + a, 4 + b) for a in range(4) for b in range(4) if a < b)


def test_non_invariant_lift_is_rejected():
    base = dense()
    with pytest.raises(NotInvariant):
        build_eq_extension(base, [FIRST], [Lifted("lt", (1,), _pair_less(base))])


def test_extension_serializes_deterministically():
    base = singleton_context()
    rels = [FIRST, SECOND]
    a = build_eq_extension(base, rels, predicate_lifts(base, rels)).to_dict()
    b = build_eq_extension(base, rels, predicate_lifts(base, rels)).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert [len(x["classes"]) for x in a["sorts"]] == [4, 4]


def test_predicate_lifts_name_each_fixed_coordinate():
    base = singleton_context()
    lifts = predicate_lifts(base, [FIRST, SECOND])
    assert len(lifts) == 2 * 4
    assert predicate_lifts(dense(), [FIRST]) == []


# closure


def test_singleton_predicate_pins_its_vertex():
    rep = closure(singleton_context(), (), 1, "dcl")
    assert rep.status == INSIDE


def test_pure_order_pins_nothing():
    for kind, bound in (("dcl", 2), ("acl", 3)):
        rep = closure(dense(), (), 1, kind, bound=bound)
        assert rep.status == OUTSIDE and len(set(rep.witnesses)) == (2 if kind == "dcl" else 3)


def test_point_between_two_parameters_has_a_second_copy():
    rep = closure(dense(), (0, 2), 1, "dcl")
    assert rep.status == OUTSIDE and rep.bound_used == 2
    assert rep.witnesses[0] == 1 and rep.witnesses[1] not in dense().ids


def test_parameters_are_inside_and_zero_bound_is_undetermined():
    assert closure(dense(), (0, 2), 2, "acl").status == INSIDE
    assert closure(dense(), (0, 2), 1, "dcl", bound=0).status == UNDETERMINED
    with pytest.raises(ValueError):
        closure(dense(), (), 1, "bogus")


def test_predicate_reuse_is_allowed_when_asked():
    rep = closure(singleton_context(), (), 1, "dcl", keep_singleton_predicates=False)
    assert rep.status == OUTSIDE


def test_closure_report_json():
    rep = closure(dense(), (0, 2), 1, "dcl")
    assert json.loads(json.dumps(rep.to_dict()))["status"] == OUTSIDE


ORDERED = [ClassDescriptor.orders(), PREDICATES]


@settings(max_examples=60, deadline=None)
@given(index_models(classes=ORDERED, min_size=1, max_size=4))
def test_enlarging_parameters_never_moves_inside_to_outside(model):
    ids = sorted(model.ids)
    for e in ids:
        for k in range(len(ids)):
            for s in combinations(ids, k):
                if closure(model, s, e, "dcl", bound=2).status != INSIDE:
                    continue
                for x in ids:
                    if x not in s:
                        assert closure(model, s + (x,), e, "dcl", bound=2).status == INSIDE


@settings(max_examples=60, deadline=None)
@given(index_models(classes=ORDERED, min_size=1, max_size=4))
def test_definable_implies_algebraic(model):
    ids = sorted(model.ids)
    for e in ids:
        for s in [()] + [(x,) for x in ids]:
            if closure(model, s, e, "dcl", bound=3).status == INSIDE:
                assert closure(model, s, e, "acl", bound=3).status == INSIDE


# indistinguishable pairs


def test_dense_order_has_a_pair_over_every_small_parameter_set():
    base = dense()
    ext = build_eq_extension(base, [FIRST, SECOND])
    coords = {1: (0,), 2: (1,)}
    for k in range(3):
        for s in combinations(base.by_coord, k):
            res = find_indistinguishable_pair(ext, s)
            assert res.found, s
            a, b = res.pair
            assert a != b and ext.sort_of(a) == ext.sort_of(b) != 0
            assert element_type(ext, s, a) == element_type(ext, s, b)
            assert brute.eq_description(ext, s, a, coords) == brute.eq_description(ext, s, b, coords)
    assert find_indistinguishable_pair(ext, ()).pair == (4, 5)


def test_singleton_predicates_with_lifts_separate_everything():
    base = singleton_context()
    rels = [FIRST, SECOND]
    ext = build_eq_extension(base, rels, predicate_lifts(base, rels))
    coords = {1: (0,), 2: (1,)}
    for k in range(3):
        for s in combinations(base.by_coord, k):
            assert not find_indistinguishable_pair(ext, s).found, s
            descs = [brute.eq_description(ext, s, e, coords, with_predicates=True) for e in ext.elements() if e not in s]
            assert len(set(descs)) == len(descs)


def test_without_lifts_classes_are_not_separated():
    base = singleton_context()
    ext = build_eq_extension(base, [FIRST, SECOND])
    assert find_indistinguishable_pair(ext, ()).pair == (4, 5)


def test_equality_only_context_has_no_pair():
    res = find_indistinguishable_pair(build_eq_extension(singleton_context(), []), ())
    assert not res.found and res.scanned == 4
    assert res.to_dict()["verdict"] == "none-up-to-bounds"


def test_single_total_class_has_no_partner():
    ext = build_eq_extension(dense_order([0]), [coordinate_relation(1, [])])
    assert len(ext.sorts[1]) == 1
    assert not find_indistinguishable_pair(ext, ()).found


def test_scan_cap_is_respected():
    ext = build_eq_extension(dense(), [FIRST, SECOND])
    res = find_indistinguishable_pair(ext, (), max_elements=1)
    assert not res.found and res.scanned == 1
