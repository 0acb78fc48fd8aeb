"""Finite nilspace systems: consistency of a map with a translation, induced
translations on the codomain, metrics and fiber diameters, orbits."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .maps import NilMap, is_translation
from .nilspace import Nilspace
from .report import InputError, NotConsistent, Report, ResourceError, timed

CLOSURE_CAP = 10_000


def _consistency_violation(psi: NilMap, alpha: NilMap):
    """Lexicographically least (x, y) with psi(x) = psi(y) but psi(a x) != psi(a y)."""
    X = psi.domain
    if alpha.domain.points != X.points:
        raise InputError("map and translation must share the domain")
    p, a = psi.idx, alpha.idx
    for x in range(X.size):
        for y in range(x + 1, X.size):
            if p[x] == p[y] and p[a[x]] != p[a[y]]:
                return x, y
    return None


def is_consistent(psi: NilMap, alpha: NilMap) -> Report:
    """psi(x) = psi(y) implies psi(alpha(x)) = psi(alpha(y))."""
    rep = Report("consistency", details={"map": psi.name, "translation": alpha.name})
    with timed(rep):
        bad = _consistency_violation(psi, alpha)
        rep.counts["points"] = psi.domain.size
        if bad is not None:
            X, Y = psi.domain, psi.codomain
            x, y = bad
            ax, ay = alpha.idx[x], alpha.idx[y]
            rep.fail(f"{psi.name or 'psi'} is not {alpha.name or 'alpha'}-consistent", {
                "kind": "consistency",
                "pair": [list(X.points[x]), list(X.points[y])],
                "psi": [list(Y.points[psi.idx[x]]), list(Y.points[psi.idx[y]])],
                "psi_alpha": [list(Y.points[psi.idx[ax]]), list(Y.points[psi.idx[ay]])],
            })
    return rep


def is_consistent_all(psi: NilMap, H: Sequence[NilMap]) -> Report:
    rep = Report("consistency", details={"map": psi.name, "translations": [a.name for a in H]})
    for a in H:
        r = is_consistent(psi, a)
        if not r:
            return rep.fail(r.message, *r.witnesses)
    return rep


def induced_translation(psi: NilMap, alpha: NilMap, check: bool = True) -> NilMap:
    """beta on the codomain with beta(psi(x)) = psi(alpha(x))."""
    bad = _consistency_violation(psi, alpha)
    if bad is not None:
        r = is_consistent(psi, alpha)
        raise NotConsistent(r.message, r.witnesses[0])
    Y = psi.codomain
    table: list[int | None] = [None] * Y.size
    for x in range(psi.domain.size):
        table[psi.idx[x]] = psi.idx[alpha.idx[x]]
    if any(t is None for t in table):
        raise InputError(f"{psi!r} is not surjective; the induced map is not total")
    beta = NilMap(Y, Y, tuple(table), name=f"{psi.name}^({alpha.name})" if psi.name else "")
    if check:
        r = is_translation(Y, beta)
        if not r:
            raise InputError(f"induced map is not a translation: {r.message}")
    return beta


def hat_hom_check(psi: NilMap, S: Sequence[NilMap]) -> Report:
    """For all a1, a2 in S: psi is a1 a2-consistent, hat(a1 a2) = hat(a1) hat(a2),
    and psi o a = hat(a) o psi pointwise."""
    rep = Report("hat-hom", details={"map": psi.name, "translations": len(S)})
    with timed(rep):
        hats = {}
        for a in S:
            try:
                hats[a.idx] = induced_translation(psi, a)
            except NotConsistent as e:
                return rep.fail(str(e), e.witness)
        pairs = equiv = 0
        for a in S:
            b = hats[a.idx]
            for x in range(psi.domain.size):
                equiv += 1
                if psi.idx[a.idx[x]] != b.idx[psi.idx[x]]:
                    return rep.fail("equivariance fails", {"translation": a.name,
                                                           "point": list(psi.domain.points[x])})
        for a1 in S:
            for a2 in S:
                pairs += 1
                prod = NilMap(a1.domain, a1.codomain, tuple(a1.idx[j] for j in a2.idx),
                              name=f"{a1.name}{a2.name}")
                try:
                    h = induced_translation(psi, prod, check=False)
                except NotConsistent as e:
                    return rep.fail("psi is not consistent with a product", e.witness)
                h1, h2 = hats[a1.idx], hats[a2.idx]
                if h.idx != tuple(h1.idx[j] for j in h2.idx):
                    return rep.fail("hat(a1 a2) != hat(a1) hat(a2)",
                                    {"a1": a1.name, "a2": a2.name})
        rep.counts.update(pairs=pairs, equivariance=equiv)
    return rep


# -- systems -------------------------------------------------------------------

@dataclass
class NilspaceSystem:
    space: Nilspace
    generators: list[NilMap]
    closure: list[NilMap] | None = field(default=None)

    def __post_init__(self):
        for g in self.generators:
            r = is_translation(self.space, g)
            if not r:
                raise InputError(f"generator {g.name} is not a translation: {r.message}")

    def close(self, cap: int = CLOSURE_CAP) -> list[NilMap]:
        if self.closure is None:
            self.closure = closure(self.space, self.generators, cap)
        return self.closure


def closure(X: Nilspace, gens: Sequence[NilMap], cap: int = CLOSURE_CAP) -> list[NilMap]:
    """The group generated by gens, by breadth-first multiplication."""
    ident = tuple(range(X.size))
    seen = {ident}
    order = [ident]
    frontier = [ident]
    while frontier:
        nxt = []
        for g in frontier:
            for a in gens:
                h = tuple(a.idx[j] for j in g)
                if h not in seen:
                    seen.add(h)
                    order.append(h)
                    nxt.append(h)
                    if len(seen) > cap:
                        raise ResourceError(f"generated group exceeds {cap} elements", partial=len(seen))
        frontier = nxt
    return [NilMap(X, X, t, name=f"h{j}") for j, t in enumerate(sorted(order))]


def orbits(X: Nilspace, gens: Sequence[NilMap]) -> list[tuple[int, ...]]:
    seen = [False] * X.size
    out = []
    for s in range(X.size):
        if seen[s]:
            continue
        orb, stack = [], [s]
        seen[s] = True
        while stack:
            x = stack.pop()
            orb.append(x)
            for a in gens:
                for y in (a.idx[x], a.idx.index(x)):
                    if not seen[y]:
                        seen[y] = True
                        stack.append(y)
        out.append(tuple(sorted(orb)))
    return out


def is_transitive(sys: NilspaceSystem) -> Report:
    """Under the uniform measure on a finite space, ergodicity is a single orbit."""
    X = sys.space
    rep = Report("transitive", details={"space": X.name, "generators": [g.name for g in sys.generators]})
    with timed(rep):
        orbs = orbits(X, sys.generators)
        rep.counts["orbits"] = len(orbs)
        rep.details["orbits"] = [[list(X.points[x]) for x in o] for o in orbs]
        if len(orbs) > 1:
            rep.fail(f"{len(orbs)} orbits", {"kind": "invariant-set",
                                              "orbit": [list(X.points[x]) for x in orbs[0]]})
    return rep


# -- metrics ---------------------------------------------------------------------

@dataclass(frozen=True)
class ProductMetric:
    """d(x, y) = sum_i w_i d0(x_i, y_i), d0 discrete on each block of coordinates.

    ``block`` is the number of point coordinates per factor (2 for points of
    D_1(Z_2) x D_2(Z_2)).
    """

    weights: tuple[Fraction, ...]
    block: int = 1

    @classmethod
    def dyadic(cls, m: int, block: int = 1) -> "ProductMetric":
        return cls(tuple(Fraction(1, 2 ** i) for i in range(1, m + 1)), block)

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(Fraction(w) for w in self.weights))
        if any(w <= 0 for w in self.weights):
            raise InputError("metric weights must be positive")

    def __call__(self, x: Sequence, y: Sequence) -> Fraction:
        b = self.block
        if len(x) != len(y) or len(x) != b * len(self.weights):
            raise InputError(f"point shape {len(x)} does not match metric ({len(self.weights)} x {b})")
        d = Fraction(0)
        for i, w in enumerate(self.weights):
            if tuple(x[i * b:(i + 1) * b]) != tuple(y[i * b:(i + 1) * b]):
                d += w
        return d


def fiber_diameters(psi: NilMap, d: ProductMetric) -> tuple[dict, Fraction]:
    """Exact diameter of every nonempty fiber, and their supremum."""
    X, Y = psi.domain, psi.codomain
    fibers: dict[int, list] = {}
    for x in range(X.size):
        fibers.setdefault(psi.idx[x], []).append(X.points[x])
    diams = {}
    for y, pts in sorted(fibers.items()):
        diams[Y.points[y]] = max((d(a, b) for a in pts for b in pts), default=Fraction(0))
    return diams, max(diams.values())
