"""Relations between index tuples that depend only on quantifier-free type.

A relation R(t1, t2; s) is stored as the set of type codes of t1^t2 over s
that satisfy it.  Relations generated by coordinate equalities
("left_a = right_b" for listed pairs) also keep that description, so they can
be evaluated on codes that were not enumerated when the set was built.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple

from .structures import IndexModel, QfType, qf_type_of


@lru_cache(maxsize=None)
def _decoded(code: bytes) -> QfType:
    return QfType.from_code(code)


def pair_code(model: IndexModel, t1: Sequence[int], t2: Sequence[int], params: Sequence[int]) -> bytes:
    return qf_type_of(model, tuple(t1) + tuple(t2), params).code


def equalities_hold(code: bytes, left: int, pairs: Iterable[Tuple[int, int]]) -> bool:
    order = _decoded(code).order
    return all(order[a][left + b] == 0 for a, b in pairs)


@dataclass(frozen=True)
class InvariantRelation:
    arity_left: int
    arity_right: int
    n_params: int
    accepted: FrozenSet[bytes] = frozenset()
    equalities: Optional[Tuple[Tuple[int, int], ...]] = None

    @classmethod
    def from_equalities(cls, arity_left: int, arity_right: int, n_params: int, pairs) -> "InvariantRelation":
        return cls(arity_left, arity_right, n_params, frozenset(), tuple(sorted(set(map(tuple, pairs)))))

    def holds(self, code: bytes) -> bool:
        if self.equalities is not None:
            return equalities_hold(code, self.arity_left, self.equalities)
        return code in self.accepted

    def holds_on(self, model: IndexModel, t1, t2, params) -> bool:
        return self.holds(pair_code(model, t1, t2, params))

    def materialize(self, model: IndexModel, left: Sequence, right: Sequence, params) -> "InvariantRelation":
        """Accepted set over the enumerated pairs, keeping any equality description."""
        acc = set(self.accepted)
        for t1, t2 in product(left, right):
            code = pair_code(model, t1, t2, params)
            if self.holds(code):
                acc.add(code)
        return InvariantRelation(self.arity_left, self.arity_right, self.n_params, frozenset(acc), self.equalities)

    def extensional(self) -> "InvariantRelation":
        return InvariantRelation(self.arity_left, self.arity_right, self.n_params, self.accepted, None)

    def mirror(self, model: IndexModel, left: Sequence, right: Sequence, params) -> "InvariantRelation":
        """The relation R'(t2, t1) iff R(t1, t2), over the enumerated pairs."""
        eqs = None if self.equalities is None else tuple(sorted((b, a) for a, b in self.equalities))
        acc = set()
        for t1, t2 in product(left, right):
            if self.holds(pair_code(model, t1, t2, params)):
                acc.add(pair_code(model, t2, t1, params))
        return InvariantRelation(self.arity_right, self.arity_left, self.n_params, frozenset(acc), eqs)

    def accepted_on(self, codes: Iterable[bytes]) -> FrozenSet[bytes]:
        return frozenset(c for c in codes if self.holds(c))

    def to_dict(self) -> dict:
        out = {
            "arity_left": self.arity_left,
            "arity_right": self.arity_right,
            "n_params": self.n_params,
            "accepted": sorted(c.hex() for c in self.accepted),
        }
        if self.equalities is not None:
            out["equalities"] = [list(p) for p in self.equalities]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "InvariantRelation":
        eqs = data.get("equalities")
        return cls(
            int(data["arity_left"]),
            int(data["arity_right"]),
            int(data.get("n_params", 0)),
            frozenset(bytes.fromhex(h) for h in data.get("accepted", [])),
            None if eqs is None else tuple(tuple(int(x) for x in p) for p in eqs),
        )
