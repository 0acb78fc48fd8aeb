"""Named small nilspaces, the two worked examples, and seeded random
instances for the property suites.

Constructors are memoised so that repeated calls share cube caches.
"""
from __future__ import annotations

import math
import random
from fractions import Fraction
from functools import lru_cache

from .dynamics import ProductMetric
from .grp import cyclic
from .maps import (
    NilMap,
    compose,
    from_function,
    identity,
    is_fibration,
    product_map,
    to_point,
    tran_group,
)
from .nilspace import Nilspace, build_dk, build_power, build_product, factor, point_space, step


@lru_cache(maxsize=None)
def dk(n: int, k: int) -> Nilspace:
    return build_dk(cyclic(n), k)


@lru_cache(maxsize=None)
def pt() -> Nilspace:
    return point_space()


@lru_cache(maxsize=None)
def product(*names: tuple) -> Nilspace:
    """Left-nested product of D_k(Z_n) factors given as (n, k) pairs."""
    X = dk(*names[0])
    for nk in names[1:]:
        X = build_product(X, dk(*nk))
    return X


def x_star() -> Nilspace:
    """D_1(Z_2) x D_2(Z_2)."""
    return product((2, 1), (2, 2))


def clear_caches() -> None:
    """Drop every memoised space and map so the next call starts cold."""
    from . import nilspace

    for fn in (dk, pt, product, example_2_1, example_2_2, fibrations_from, translations_of):
        fn.cache_clear()
    nilspace._PRODUCT_CACHE.clear()


# -- the first worked example -----------------------------------------------------

def _alpha0(p):
    return ((p[0] + 1) % 2, (p[1] + p[0]) % 2)


@lru_cache(maxsize=None)
def example_2_1() -> dict:
    X = x_star()
    Y = dk(2, 2)
    psi = from_function(X, Y, lambda p: (p[1],), "psi")
    alpha = from_function(X, X, _alpha0, "alpha")
    tau = from_function(X, X, lambda p: ((p[0] + p[1] + 1) % 2, p[1]), "tau")
    X1, pi1 = factor(X, 1)
    return {"X": X, "Y": Y, "psi": psi, "alpha": alpha, "tau": tau, "X1": X1, "pi1": pi1}


# -- the second worked example, truncated to m factors ------------------------------

@lru_cache(maxsize=None)
def example_2_2(m: int) -> dict:
    """X = X0^m with the coordinatewise translation and psi_i = id^i x psi x const."""
    ex = example_2_1()
    X0, psi0, alpha0 = ex["X"], ex["psi"], ex["alpha"]
    X = build_power(X0, m)
    alpha = product_map([alpha0] * m, name="alpha")
    psis = {}
    for i in range(1, m):
        comps = [identity(X0)] * i + [psi0] + [to_point(X0)] * (m - i - 1)
        psis[i] = product_map(comps, name=f"psi{i}")
    metric = ProductMetric.dyadic(m, block=2)
    zero = (0,) * (2 * m)
    witnesses = {}
    for i in psis:
        x = list(zero)
        x[2 * i] = 1  # x_{i+1} = (1, 0)
        witnesses[i] = (tuple(x), zero)
    return {"X0": X0, "X": X, "alpha": alpha, "psi": psis, "metric": metric,
            "witness": witnesses, "m": m}


def truncated_sup_diameter(i: int, m: int) -> Fraction:
    """2^-i - 2^-m: the free coordinates of a psi_i fiber are factors i+1..m."""
    return Fraction(1, 2 ** i) - Fraction(1, 2 ** m)


# -- seeded corpora ---------------------------------------------------------------------

# (name, factors); every space has at most 16 points and a small top cube set
CORPUS = [
    ("D1(Z2)", ((2, 1),)),
    ("D2(Z2)", ((2, 2),)),
    ("D1(Z3)", ((3, 1),)),
    ("D2(Z3)", ((3, 2),)),
    ("D1(Z4)", ((4, 1),)),
    ("D2(Z4)", ((4, 2),)),
    ("X*", ((2, 1), (2, 2))),
    ("D1(Z2)^2", ((2, 1), (2, 1))),
    ("D2(Z2)^2", ((2, 2), (2, 2))),
    ("D2(Z2)xD1(Z2)", ((2, 2), (2, 1))),
    ("D1(Z2)^3", ((2, 1), (2, 1), (2, 1))),
    ("D1(Z3)xD1(Z2)", ((3, 1), (2, 1))),
    ("X*xD1(Z2)", ((2, 1), (2, 2), (2, 1))),
    ("D1(Z2)^4", ((2, 1), (2, 1), (2, 1), (2, 1))),
    ("D1(Z4)^2", ((4, 1), (4, 1))),
    ("D1(Z2)^2xD1(Z4)", ((2, 1), (2, 1), (4, 1))),
]


def corpus_space(name: str) -> Nilspace:
    for nm, fac in CORPUS:
        if nm == name:
            X = product(*fac)
            X.name = X.name or nm
            return X
    raise KeyError(name)


def corpus(max_points: int = 16) -> list[Nilspace]:
    out = []
    for name, fac in CORPUS:
        X = product(*fac)
        if X.size <= max_points:
            out.append(X)
    return out


def _factor_slices(X: Nilspace) -> list[tuple[int, int, Nilspace]]:
    """(start, stop, factor) coordinate ranges of a left-nested product."""
    if not X.parts or not isinstance(X.parts[0], Nilspace) or not isinstance(X.parts[1], Nilspace):
        return [(0, len(X.points[0]), X)]
    L, R = X.parts
    left = _factor_slices(L)
    w = len(L.points[0])
    return left + [(w + a, w + b, F) for a, b, F in _factor_slices(R)]


def projection(X: Nilspace, keep: list[int]) -> NilMap:
    """Projection of a product onto the factors listed in ``keep``."""
    sl = _factor_slices(X)
    if not keep:
        return to_point(X)
    target = sl[keep[0]][2]
    for j in keep[1:]:
        target = build_product(target, sl[j][2])

    def fn(p):
        out = ()
        for j in keep:
            a, b, _ = sl[j]
            out += tuple(p[a:b])
        return out

    return from_function(X, target, fn, name="p" + "".join(str(j + 1) for j in keep))


@lru_cache(maxsize=None)
def fibrations_from(X: Nilspace) -> tuple[NilMap, ...]:
    """A deterministic stock of fibrations out of X: identity, the map to a
    point, characteristic-factor projections, factor projections of products
    and their composites with factor projections."""
    out = [identity(X), to_point(X)]
    for i in range(step(X)):
        out.append(factor(X, i)[1])
    sl = _factor_slices(X)
    if len(sl) > 1:
        for r in range(1, len(sl)):
            for j in range(len(sl) - r + 1):
                out.append(projection(X, list(range(j, j + r))))
    for p in list(out[2:]):
        Y = p.codomain
        for i in range(1, step(Y)):
            Yi, pi = factor(Y, i)
            if Yi is not Y:
                out.append(compose(pi, p))
    seen, uniq = set(), []
    for f in out:
        key = (f.partition, f.codomain.size)
        if key in seen:
            continue
        if not is_fibration(f):
            continue
        seen.add(key)
        uniq.append(f)
    return tuple(uniq)


@lru_cache(maxsize=None)
def translations_of(X: Nilspace) -> tuple[NilMap, ...]:
    """Tran(X) by search for |X| <= 8, product translations above that."""
    if X.size <= 8:
        return tuple(tran_group(X).elements)
    sl = _factor_slices(X)
    comps = [translations_of(F) for _, _, F in sl]
    # shifts in each factor; enough to generate a rich subgroup
    gens = []
    for j, ts in enumerate(comps):
        for t in ts[1:3]:
            parts = [identity(F) for _, _, F in sl]
            parts[j] = t
            gens.append(product_map(parts))
    return tuple([identity(X)] + [NilMap(X, X, g.idx, name=f"t{j + 1}") for j, g in enumerate(gens)])


def _size(fac) -> int:
    out = 1
    for n, _ in fac:
        out *= n
    return out


def cube_count(fac, n: int) -> int:
    """|C^n| of a product of D_k(Z_m) factors: m to the number of monomials."""
    out = 1
    for m, k in fac:
        out *= m ** sum(math.comb(n, d) for d in range(k + 1))
    return out


def random_fiber_product_instance(rng: random.Random, max_points: int = 16,
                                  max_cubes: int = 50_000):
    """Two fibrations into a common base B, built from factor projections.

    The fiber product is B x E1 x E2 up to isomorphism; it has at most
    ``max_points`` points and at most ``max_cubes`` cubes in dimension step+1.
    """
    bases = [((2, 1),), ((2, 2),), ((3, 1),), ((2, 1), (2, 1))]
    extras = [(), ((2, 1),), ((2, 2),), ((3, 1),), ((4, 1),)]
    while True:
        base = rng.choice(bases)
        e1, e2 = rng.choice(extras), rng.choice(extras)
        fac = base + e1 + e2
        top = max(k for _, k in fac) + 1
        if _size(fac) <= max_points and cube_count(fac, top) <= max_cubes:
            break
    maps = []
    for extra in (e1, e2):
        if rng.random() < 0.5:
            fac, keep = base + extra, list(range(len(base)))
        else:
            fac, keep = extra + base, list(range(len(extra), len(extra) + len(base)))
        X = product(*fac)
        p = projection(X, keep)
        maps.append(p)
    B = maps[0].codomain
    # same point set; re-target the second map at the first map's codomain object
    p2 = NilMap(maps[1].domain, B, maps[1].idx, name="p2")
    maps[0].name = "p1"
    return maps[0], p2


def random_refinement_pair(rng: random.Random, max_points: int = 16):
    """(psi, R) fibrations out of one space with psi <~ R."""
    X = rng.choice(corpus(max_points))
    fibs = fibrations_from(X)
    while True:
        psi, R = rng.choice(fibs), rng.choice(fibs)
        if R.partition.refines(psi.partition):
            return X, psi, R


def random_h_instance(rng: random.Random, max_points: int = 16):
    """(psi', H) with psi' a stock fibration and H one or two translations."""
    X = rng.choice([S for S in corpus(max_points) if S.size > 1])
    fibs = fibrations_from(X)
    psi = rng.choice(fibs[2:] or fibs)
    ts = [t for t in translations_of(X) if t.idx != tuple(range(X.size))]
    H = rng.sample(ts, min(len(ts), rng.choice((1, 2))))
    return X, psi, H
