"""Finite abelian groups as direct sums of cyclic groups.

Elements are plain tuples of residues, one per cyclic factor.  Groups here are
tiny (a few dozen elements), so homomorphisms are stored as full tables and
everything is checked by exhaustive loops.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Mapping

from .report import InputError, Report

GroupElem = tuple


@dataclass(frozen=True)
class Group:
    orders: tuple[int, ...] = ()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(int(o) for o in self.orders))
        if any(o < 2 for o in self.orders):
            raise InputError(f"cyclic orders must be >= 2, got {self.orders}")

    def __repr__(self) -> str:
        if self.name:
            return self.name
        if not self.orders:
            return "0"
        return "+".join(f"Z{o}" for o in self.orders)

    @property
    def size(self) -> int:
        return math.prod(self.orders)

    @cached_property
    def elements(self) -> tuple[GroupElem, ...]:
        return tuple(itertools.product(*(range(o) for o in self.orders)))

    @cached_property
    def _index(self) -> dict[GroupElem, int]:
        return {g: i for i, g in enumerate(self.elements)}

    def index(self, g: GroupElem) -> int:
        return self._index[g]

    @property
    def zero(self) -> GroupElem:
        return (0,) * len(self.orders)

    def reduce(self, coords: Iterable[int]) -> GroupElem:
        coords = tuple(coords)
        if len(coords) != len(self.orders):
            raise InputError(f"element {coords} does not match {self!r}")
        return tuple(c % o for c, o in zip(coords, self.orders))

    def add(self, x: GroupElem, y: GroupElem) -> GroupElem:
        return tuple((a + b) % o for a, b, o in zip(x, y, self.orders))

    def neg(self, x: GroupElem) -> GroupElem:
        return tuple((-a) % o for a, o in zip(x, self.orders))

    def sub(self, x: GroupElem, y: GroupElem) -> GroupElem:
        return tuple((a - b) % o for a, b, o in zip(x, y, self.orders))

    def scale(self, c: int, x: GroupElem) -> GroupElem:
        return tuple((c * a) % o for a, o in zip(x, self.orders))

    def order_of(self, x: GroupElem) -> int:
        return math.lcm(1, *(o // math.gcd(a, o) for a, o in zip(x, self.orders)))

    def basis(self) -> list[GroupElem]:
        out = []
        for i in range(len(self.orders)):
            e = [0] * len(self.orders)
            e[i] = 1
            out.append(tuple(e))
        return out

    def to_json(self) -> list[int]:
        return list(self.orders)


def cyclic(n: int) -> Group:
    return Group((n,), name=f"Z{n}")


TRIVIAL = Group((), name="0")


def enumerate_elements(G: Group) -> list[GroupElem]:
    """All elements of ``G`` exactly once, in lexicographic order."""
    return list(G.elements)


def direct_sum(G: Group, H: Group) -> Group:
    name = ""
    if G.name and H.name:
        name = f"{G.name}+{H.name}" if G.orders and H.orders else (G.name if G.orders else H.name)
    return Group(G.orders + H.orders, name=name)


@dataclass(frozen=True)
class GroupHom:
    domain: Group
    codomain: Group
    table: Mapping[GroupElem, GroupElem]

    def __call__(self, x: GroupElem) -> GroupElem:
        return self.table[x]

    @classmethod
    def from_function(cls, G: Group, H: Group, fn: Callable[[GroupElem], GroupElem]) -> "GroupHom":
        return cls(G, H, {g: H.reduce(fn(g)) for g in G.elements})

    def to_json(self) -> list:
        return [[list(g), list(self.table[g])] for g in self.domain.elements]


def _check_total(f: GroupHom) -> None:
    missing = [g for g in f.domain.elements if g not in f.table]
    if missing:
        raise InputError(f"homomorphism table not total: missing {missing[0]}")
    bad = [v for v in f.table.values() if v not in f.codomain._index]
    if bad:
        raise InputError(f"table value {bad[0]} is not an element of {f.codomain!r}")


def is_hom(f: GroupHom) -> Report:
    _check_total(f)
    G, H = f.domain, f.codomain
    rep = Report("is-hom")
    checked = 0
    for x in G.elements:
        for y in G.elements:
            checked += 1
            if f(G.add(x, y)) != H.add(f(x), f(y)):
                rep.fail(f"f({x}+{y}) != f({x})+f({y})", {"pair": [x, y]})
                rep.counts["pairs"] = checked
                return rep
    rep.counts["pairs"] = checked
    return rep


def kernel(f: GroupHom) -> frozenset:
    if not is_hom(f):
        raise InputError("kernel of a non-homomorphism")
    H = f.codomain
    ker = frozenset(g for g in f.domain.elements if f(g) == H.zero)
    G = f.domain
    assert all(G.add(a, b) in ker for a in ker for b in ker)
    return ker


def zero_hom(G: Group, H: Group) -> GroupHom:
    return GroupHom(G, H, {g: H.zero for g in G.elements})


def identity_hom(G: Group) -> GroupHom:
    return GroupHom(G, G, {g: g for g in G.elements})


# -- decomposition of abstract finite abelian groups -------------------------

def _invariant_factor_candidates(n: int) -> list[tuple[int, ...]]:
    """All tuples d1 | d2 | ... | dr (each >= 2) with product n."""
    out = []

    def rec(rest: int, prev: int, acc: tuple[int, ...]):
        if rest == 1:
            out.append(acc)
            return
        for d in range(2, rest + 1):
            if rest % d == 0 and (prev == 0 or d % prev == 0):
                rec(rest // d, d, acc + (d,))

    rec(n, 0, ())
    return out


def decompose(
    elements: Iterable[Hashable],
    add: Callable[[Hashable, Hashable], Hashable],
    zero: Hashable,
    name: str = "",
) -> tuple[Group, dict]:
    """Present a finite abelian group (given by its element set and addition)
    as a direct sum of cyclic groups.

    Returns the cyclic group together with a map ``element -> coordinates``
    that is a group isomorphism.
    """
    elems = list(elements)
    n = len(elems)
    if n == 1:
        return Group((), name=name or "0"), {zero: ()}

    def order(x) -> int:
        k, y = 1, x
        while y != zero:
            y = add(y, x)
            k += 1
        return k

    orders = {x: order(x) for x in elems}
    stats = sorted(orders.values())
    target = None
    for cand in _invariant_factor_candidates(n):
        G = Group(cand)
        if sorted(G.order_of(g) for g in G.elements) == stats:
            target = cand
            break
    if target is None:
        raise InputError("element set with this addition is not a finite abelian group")

    # assign generators, largest order first, so that spans grow freely
    slots = sorted(range(len(target)), key=lambda i: -target[i])

    def span(gens: list) -> dict:
        table = {zero: ()}
        for g in gens:
            new = {}
            for x, c in table.items():
                y = x
                for j in range(orders[g]):
                    new[y] = c + (j,)
                    y = add(y, g)
            table = new
        return table

    chosen: list = []

    def search(depth: int) -> dict | None:
        if depth == len(slots):
            tbl = span(chosen)
            return tbl if len(tbl) == n else None
        want = target[slots[depth]]
        for g in elems:
            if orders[g] != want:
                continue
            chosen.append(g)
            if len(span(chosen)) == math.prod(target[slots[i]] for i in range(depth + 1)):
                res = search(depth + 1)
                if res is not None:
                    return res
            chosen.pop()
        return None

    tbl = search(0)
    assert tbl is not None
    # coordinates came out in slot order; permute back to ascending invariant factors
    perm = [slots.index(i) for i in range(len(target))]
    coords = {x: tuple(c[p] for p in perm) for x, c in tbl.items()}
    return Group(target, name=name), coords


def find_isomorphism(G: Group, H: Group) -> GroupHom | None:
    """A group isomorphism ``G -> H`` by search over basis images, or None."""
    if G.size != H.size:
        return None
    if sorted(G.order_of(g) for g in G.elements) != sorted(H.order_of(h) for h in H.elements):
        return None
    basis = G.basis()
    images: list[GroupElem] = []

    def build() -> dict:
        table = {}
        for g in G.elements:
            acc = H.zero
            for c, h in zip(g, images):
                acc = H.add(acc, H.scale(c, h))
            table[g] = acc
        return table

    def search(i: int) -> dict | None:
        if i == len(basis):
            t = build()
            return t if len(set(t.values())) == H.size else None
        for h in H.elements:
            if H.order_of(h) != G.orders[i]:
                continue
            images.append(h)
            res = search(i + 1)
            if res is not None:
                return res
            images.pop()
        return None

    table = search(0)
    return None if table is None else GroupHom(G, H, table)
