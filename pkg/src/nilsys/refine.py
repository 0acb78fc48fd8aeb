"""Factorization toolkit: fiber products, coarse fibration factors, common
refinements, the diagonal-product fibration over a fiber product, kernel
witnesses, refinement to a translation-consistent fibration, and towers of
such refinements."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from more_itertools import set_partitions

from . import grp
from .dynamics import _consistency_violation, is_consistent
from .maps import (
    NilMap,
    Partition,
    compose,
    diagonal,
    find_isomorphism,
    identity,
    induced_factor_map,
    is_fibration,
    is_morphism,
    refines,
)
from .nilspace import (
    FiberProductExpr,
    Nilspace,
    build_product,
    build_quotient,
    build_sub,
    factor,
    step,
    structure_group,
    verify_axioms,
)
from .report import (
    InputError,
    InternalConsistencyError,
    Report,
    ResourceError,
    timed,
)

EXHAUSTIVE_BOUND = 8


def _require(rep: Report, what: str) -> None:
    if not rep:
        raise InputError(f"{what}: {rep.message}")


def descend(f: NilMap, g: NilMap, name: str = "") -> NilMap:
    """The map h on f's codomain with h o f = g (f surjective, g constant on f-fibers)."""
    if f.domain.points != g.domain.points:
        raise InputError("descend() needs a common domain")
    table: list = [None] * f.codomain.size
    for x in range(f.domain.size):
        a, v = f.idx[x], g.idx[x]
        if table[a] is None:
            table[a] = v
        elif table[a] != v:
            raise InputError(f"{g!r} is not constant on the fibers of {f!r}")
    if any(t is None for t in table):
        raise InputError(f"{f!r} is not surjective")
    return NilMap(f.codomain, g.codomain, tuple(table), name=name)


# -- fiber products ---------------------------------------------------------------

@dataclass
class FiberProduct:
    space: Nilspace
    p1: NilMap
    p2: NilMap
    psi1: NilMap
    psi2: NilMap
    report: Report

    def complete(self, corner: Sequence[int]) -> int:
        """Complete a corner of the fiber product (point indices): complete
        the second coordinate, then lift the first through psi1."""
        Q, psi1, psi2 = self.space, self.psi1, self.psi2
        X1, X2 = psi1.domain, psi2.domain
        c1 = tuple(self.p1.idx[i] for i in corner)
        c2 = tuple(self.p2.idx[i] for i in corner)
        n = (len(corner) + 1).bit_length() - 1
        done2 = X2.completion_table(n).get(c2, ())
        if not done2:
            raise InternalConsistencyError("second coordinate of a fiber-product corner has no completion")
        y2 = done2[0]
        target = psi2.idx[y2]
        for x1 in X1.completion_table(n).get(c1, ()):
            if psi1.idx[x1] == target:
                point = X1.points[x1] + X2.points[y2]
                j = Q.idx(point)
                if not Q.is_cube_idx(tuple(corner) + (j,)):
                    raise InternalConsistencyError("complete-then-lift produced a non-cube")
                return j
        raise InternalConsistencyError("complete-then-lift found no lift through psi1")


def fiber_product(psi1: NilMap, psi2: NilMap, name: str = "") -> FiberProduct:
    """{(x1, x2) : psi1(x1) = psi2(x2)} with the cubes of X1 x X2 that take values in it."""
    if psi1.codomain.points != psi2.codomain.points:
        raise InputError("fiber product needs a common codomain")
    _require(is_fibration(psi1), "psi1 is not a fibration")
    _require(is_fibration(psi2), "psi2 is not a fibration")
    X1, X2 = psi1.domain, psi2.domain
    P = build_product(X1, X2)
    carrier = [x1 + x2 for i, x1 in enumerate(X1.points) for j, x2 in enumerate(X2.points)
               if psi1.idx[i] == psi2.idx[j]]

    def enum(n: int):
        # pairs of cubes with equal images in the base
        by_image: dict[tuple, list] = {}
        for q2 in X2.cubes(n):
            by_image.setdefault(psi2.image(q2), []).append(q2)
        for q1 in X1.cubes(n):
            for q2 in by_image.get(psi1.image(q1), ()):
                yield tuple(X1.points[a] + X2.points[b] for a, b in zip(q1, q2))

    Q = build_sub(P, carrier, name=name or f"{X1.name}x_{psi1.codomain.name}{X2.name}",
                  expr=FiberProductExpr(X1.expr, X2.expr, psi1.codomain.expr), enum=enum)
    n1 = len(X1.points[0])
    p1 = NilMap(Q, X1, {q: q[:n1] for q in Q.points}, name="p1")
    p2 = NilMap(Q, X2, {q: q[n1:] for q in Q.points}, name="p2")
    rep = verify_axioms(Q)
    if not rep:
        raise InternalConsistencyError(f"fiber product fails the axioms: {rep.message}")
    return FiberProduct(Q, p1, p2, psi1, psi2, rep)


def check_complete_then_lift(fp: FiberProduct, nmax: int | None = None) -> Report:
    """Run the complete-then-lift algorithm on every corner up to nmax and
    compare with the fiber product's own completions."""
    Q = fp.space
    nmax = step(Q) + 1 if nmax is None else nmax
    rep = Report("complete-then-lift", details={"space": Q.name, "nmax": nmax})
    with timed(rep):
        for n in range(1, nmax + 1):
            table = Q.completion_table(n)
            corners = Q.corners(n)
            rep.counts[f"Cor{n}"] = len(corners)
            for c in corners:
                j = fp.complete(c)
                if j not in table.get(c, ()):
                    return rep.fail("algorithmic completion is not a completion",
                                    {"n": n, "corner": [list(p) for p in Q.to_points(c)]})
    return rep


# -- coarse fibration factors ---------------------------------------------------

@dataclass
class Factorization:
    mid: Nilspace
    first: NilMap
    second: NilMap
    report: Report = field(default_factory=lambda: Report("factor"))

    def to_json(self) -> dict:
        return {"mid": {"name": self.mid.name, "points": [list(p) for p in self.mid.points]},
                "first": self.first.to_json(), "second": self.second.to_json(),
                "report": self.report.to_json()}


def _partition_key(P: Partition) -> tuple:
    return (len(P), P.labels)


def _candidates_exhaustive(target: Partition):
    """Every partition refining ``target``, coarsest first, ties by label encoding."""
    per_cell = [[tuple(tuple(b) for b in part) for part in set_partitions(list(cell))]
                for cell in target.blocks]
    out = []
    for choice in itertools.product(*per_cell):
        out.append(Partition(tuple(sorted(b for part in choice for b in part))))
    out.sort(key=_partition_key)
    return out


def quotient_fibration(X: Nilspace, P: Partition):
    """(Q, pi) if X/P is a nilspace and pi a fibration, else None."""
    if len(P) == X.size:
        return X, identity(X)
    try:
        Q, pi = build_quotient(X, P)
        if not verify_axioms(Q):
            return None
        if not is_fibration(pi):
            return None
    except ResourceError:
        return None
    return Q, pi


def coarsest_fibration_factor(m: NilMap, bound: int = EXHAUSTIVE_BOUND) -> Factorization:
    """m = second o first with first a fibration onto a quotient of the domain.

    Among partitions refining m's partition, the one with fewest cells whose
    quotient is a nilspace with fibration projection is chosen (exhaustive
    search when |X| <= bound, greedy merging otherwise).  The identity
    partition always qualifies.
    """
    X = m.domain
    _require(is_morphism(m), "coarsest_fibration_factor needs a morphism")
    rep = Report("coarsest-factor", details={"map": m.name})
    with timed(rep):
        target = m.partition
        tried = 0
        found = None
        if X.size <= bound:
            rep.details["search"] = "exhaustive"
            for P in _candidates_exhaustive(target):
                tried += 1
                res = quotient_fibration(X, P)
                if res is not None:
                    found = (P, res)
                    break
        else:
            rep.details["search"] = "greedy"
            found, tried = _greedy(X, target)
        P, (Q, pi) = found
        second = descend(pi, m, name=f"{m.name}'" if m.name else "")
        _require(is_morphism(second), "induced second map is not a morphism")
        rep.counts.update(candidates=tried, cells=len(P))
    pi.name = pi.name if pi.name != "pi" else "q"
    return Factorization(Q, pi, second, rep)


def _greedy(X: Nilspace, target: Partition):
    tried = 1
    res = quotient_fibration(X, target)
    if res is not None:
        return (target, res), tried
    cur = Partition.singletons(X.size)
    best = (cur, (X, identity(X)))
    tlab = target.labels
    improved = True
    while improved:
        improved = False
        blocks = list(cur.blocks)
        for i, j in itertools.combinations(range(len(blocks)), 2):
            if tlab[blocks[i][0]] != tlab[blocks[j][0]]:
                continue
            merged = [b for k, b in enumerate(blocks) if k not in (i, j)]
            merged.append(tuple(sorted(blocks[i] + blocks[j])))
            P = Partition(tuple(sorted(merged)))
            tried += 1
            res = quotient_fibration(X, P)
            if res is not None:
                cur, best = P, (P, res)
                improved = True
                break
    return best, tried


# -- common refinement -------------------------------------------------------------

@dataclass
class CommonRefinement:
    mid: Nilspace
    fibration: NilMap
    factors: list[NilMap]
    report: Report


def common_refinement(ms: Sequence[NilMap], bound: int = EXHAUSTIVE_BOUND) -> CommonRefinement:
    """One fibration m with every m_i = m_i' o m, each m_i' a fibration."""
    if not ms:
        raise InputError("common refinement of no maps")
    for g in ms:
        _require(is_fibration(g), f"{g.name or 'input'} is not a fibration")
    rep = Report("common-refinement", details={"maps": [g.name for g in ms]})
    with timed(rep):
        D = diagonal(list(ms))
        fac = coarsest_fibration_factor(D, bound)
        outs = []
        for j, g in enumerate(ms):
            h = descend(fac.first, g, name=f"{g.name}'" if g.name else "")
            _require(is_fibration(h), f"factor {j} is not a fibration")
            outs.append(h)
        rep.counts["cells"] = fac.mid.size
    return CommonRefinement(fac.mid, fac.first, outs, rep)


# -- the diagonal-product fibration --------------------------------------------------

@dataclass
class DeltaResult:
    psi: NilMap
    space: Nilspace
    fiber: FiberProduct
    report: Report
    factor_iso: NilMap | None = None
    group_iso: grp.GroupHom | None = None


def delta_fibration(psi1: NilMap, psi2: NilMap, psi3: NilMap, structure: bool = True) -> DeltaResult:
    """psi = Delta(psi1, psi2) as a fibration onto Y x_{Y_{k-1}} W, with its
    accompanying claims verified (image, fibration, factor equivalence,
    Q_{k-1} = W, A_k(Q) = A_k(Y))."""
    X, Y, W = psi1.domain, psi1.codomain, psi2.codomain
    k = step(X)
    rep = Report("delta-fibration", details={"k": k})
    with timed(rep):
        if k < 1:
            raise InputError("the domain must have step >= 1")
        _require(is_fibration(psi1), "psi1 is not a fibration")
        _require(is_fibration(psi2), "psi2 is not a fibration")
        _require(is_fibration(psi3), "psi3 is not a fibration")
        Xk, pix = factor(X, k - 1)
        if not refines(psi2, pix):
            raise InputError("psi2 does not factor through pi_{k-1}")
        Yk, piy = factor(Y, k - 1)
        if psi3.codomain.points != Yk.points:
            raise InputError("psi3 must map into the (k-1)-factor of Y")
        lhs = compose(piy, psi1).idx
        rhs = tuple(psi3.idx[j] for j in psi2.idx)
        if lhs != rhs:
            x = next(i for i in range(X.size) if lhs[i] != rhs[i])
            raise InputError(f"pi_(k-1),Y o psi1 != psi3 o psi2 at {X.points[x]}")
        fp = fiber_product(piy, psi3)
        Q = fp.space
        D = diagonal([psi1, psi2])
        image = {D.codomain.points[j] for j in D.idx}
        claims = {}
        claims["image"] = image == set(Q.points)
        if not claims["image"]:
            rep.fail("psi(X) differs from the fiber product", {"image": sorted(image),
                                                              "fiber_product": list(Q.points)})
            return DeltaResult(D, Q, fp, rep)
        psi = NilMap(X, Q, {x: D.codomain.points[D.idx[i]] for i, x in enumerate(X.points)}, name="psi")
        fib = is_fibration(psi)
        claims["fibration"] = fib.ok
        if not fib:
            rep.fail("psi is not a fibration: " + fib.message, *fib.witnesses[:1])
            rep.details["claims"] = claims
            return DeltaResult(psi, Q, fp, rep)
        a = induced_factor_map(psi, k - 1)
        b = induced_factor_map(psi2, k - 1)
        claims["factor_equivalent"] = a.partition == b.partition
        Qk, _ = factor(Q, k - 1)
        iso = find_isomorphism(W, Qk)
        claims["factor_isomorphic"] = iso is not None
        giso = None
        if structure:
            AQ = structure_group(Q, k)[0]
            AY = structure_group(Y, k)[0]
            giso = grp.find_isomorphism(AQ, AY)
            claims["structure_group_isomorphic"] = giso is not None
            rep.details["groups"] = [list(AQ.orders), list(AY.orders)]
        rep.details["claims"] = claims
        bad = [c for c, ok in claims.items() if not ok]
        if bad:
            rep.fail("claims fail: " + ", ".join(bad))
        else:
            rep.details["factor_iso"] = iso.table()
            if giso is not None:
                rep.details["group_iso"] = giso.to_json()
    return DeltaResult(psi, Q, fp, rep, iso, giso)


# -- kernel witness ----------------------------------------------------------------------

def ker_witness(psi: NilMap, R: NilMap, x, y):
    """If x ~_phi y for phi = Delta(psi, (R)_(k-1) o pi_{k-1}), a z in the kernel
    of psi's k-th structure morphism with R(x) = R(y + z); None otherwise."""
    from .maps import structure_morphism

    X = psi.domain
    if not refines(psi, R):
        raise InputError("ker_witness needs psi <~ R")
    k = step(X)
    if k < 1:
        return () if psi(x) == psi(y) else None
    Xk, pix = factor(X, k - 1)
    Rk = induced_factor_map(R, k - 1)
    phi = diagonal([psi, compose(Rk, pix)])
    ix, iy = X.idx(x), X.idx(y)
    if phi.idx[ix] != phi.idx[iy]:
        return None
    phik = structure_morphism(psi, k)
    _, L, _ = structure_group(X, k)
    for z in sorted(grp.kernel(phik)):
        if R.idx[ix] == R.idx[L.act(iy, z)]:
            return z
    raise InternalConsistencyError(f"no kernel witness for {x} ~ {y}")


# -- refinement to a consistent fibration --------------------------------------------

@dataclass
class Refinement:
    psi: NilMap
    p: NilMap
    report: Report

    @property
    def space(self) -> Nilspace:
        return self.psi.codomain


def h_consistent_refinement(psi0: NilMap, H: Sequence[NilMap], bound: int = EXHAUSTIVE_BOUND,
                            _depth: int = 0) -> Refinement:
    """An H-consistent fibration psi and a fibration p with psi0 = p o psi.

    Recursion on the step: refine psi0 together with every psi0 o alpha,
    solve the problem one step down for the induced maps, and recombine with
    :func:`delta_fibration`.
    """
    X = psi0.domain
    _require(is_fibration(psi0), "psi' is not a fibration")
    k = step(X)
    rep = Report("h-consistent-refinement", details={"k": k, "depth": _depth,
                                                     "translations": len(H)})
    with timed(rep):
        if k == 0 or not H:
            out = Refinement(psi0, identity(psi0.codomain), rep)
            rep.details["route"] = "base"
        else:
            cr = common_refinement([psi0] + [compose(psi0, a) for a in H], bound)
            q1 = cr.fibration
            m1 = cr.factors[0]
            Xk, pix = factor(X, k - 1)
            Hk = [induced_factor_map(a, k - 1) for a in H]
            q1k = induced_factor_map(q1, k - 1)
            inner = h_consistent_refinement(q1k, Hk, bound, _depth + 1)
            q2, pw = inner.psi, inner.p
            psi3 = compose(induced_factor_map(m1, k - 1), pw)
            psi2 = compose(q2, pix)
            for a in H:
                if _consistency_violation(psi2, a) is not None:
                    raise InternalConsistencyError("psi_2 is not consistent with a translation in H")
            delta = delta_fibration(psi0, psi2, psi3)
            if not delta.report:
                raise InternalConsistencyError(f"delta fibration failed: {delta.report.message}")
            psi = delta.psi
            psi.name = "psi"
            p = compose(delta.fiber.p1, identity(delta.space))
            p.name = "p"
            rep.details["route"] = "delta"
            rep.counts["cells"] = delta.space.size
            out = Refinement(psi, p, rep)
        _check_refinement(psi0, H, out)
    return out


def _check_refinement(psi0: NilMap, H: Sequence[NilMap], out: Refinement) -> None:
    _require(is_fibration(out.psi), "refined psi is not a fibration")
    _require(is_fibration(out.p), "p is not a fibration")
    if compose(out.p, out.psi).idx != psi0.idx:
        raise InternalConsistencyError("p o psi != psi'")
    for a in H:
        r = is_consistent(out.psi, a)
        if not r:
            raise InternalConsistencyError(f"refined psi is not consistent: {r.message}")


# -- towers -------------------------------------------------------------------------------

@dataclass
class Tower:
    stages: list[NilMap]
    connectors: dict = field(default_factory=dict)   # (i, j) -> map X_j -> X_i, i <= j
    factors: list[NilMap] = field(default_factory=list)  # X_i -> rough_i codomain
    report: Report = field(default_factory=lambda: Report("tower"))

    def to_json(self) -> dict:
        return {"stages": [s.to_json() for s in self.stages],
                "connectors": {f"{i},{j}": c.to_json() for (i, j), c in sorted(self.connectors.items())},
                "factors": [f.to_json() for f in self.factors],
                "report": self.report.to_json()}


def consistent_tower(X: Nilspace, H: Sequence[NilMap], rough: Sequence[NilMap],
                     bound: int = EXHAUSTIVE_BOUND) -> Tower:
    """Stage maps psi_i: X -> X_i, each H-consistent fibration, each factoring
    rough[i] and refining the previous stage, with connectors between stages."""
    rep = Report("tower", details={"stages": len(rough), "translations": len(H)})
    stages: list[NilMap] = []
    with timed(rep):
        for i, r in enumerate(rough):
            if r.domain.points != X.points:
                raise InputError(f"rough stage {i} is not defined on the space")
            if not stages:
                target = r
            else:
                cr = common_refinement([stages[-1], r], bound)
                target = cr.fibration
            ref = h_consistent_refinement(target, H, bound)
            psi = ref.psi
            psi.name = f"psi{i + 1}"
            stages.append(psi)
        tower = Tower(stages, report=rep)
        for j, s in enumerate(stages):
            tower.connectors[j, j] = identity(s.codomain)
            for i in range(j):
                c = descend(s, stages[i], name=f"psi{i + 1},{j + 1}")
                _require(is_fibration(c), f"connector ({i + 1},{j + 1}) is not a fibration")
                tower.connectors[i, j] = c
            f = descend(s, rough[j], name=f"q{j + 1}")
            _require(is_fibration(f), f"stage {j + 1} does not factor its rough map by a fibration")
            tower.factors.append(f)
        check_tower(tower, H)
        rep.counts["stages"] = len(stages)
        rep.details["sizes"] = [s.codomain.size for s in stages]
    return tower


def check_tower(tower: Tower, H: Sequence[NilMap]) -> Report:
    rep = Report("tower-check")
    st = tower.stages
    for j, s in enumerate(st):
        if tower.connectors[j, j].idx != tuple(range(s.codomain.size)):
            raise InternalConsistencyError(f"connector ({j + 1},{j + 1}) is not the identity")
        for i in range(j + 1):
            if compose(tower.connectors[i, j], s).idx != st[i].idx:
                raise InternalConsistencyError(f"psi_{i + 1},{j + 1} o psi_{j + 1} != psi_{i + 1}")
        for a in H:
            r = is_consistent(s, a)
            if not r:
                raise InternalConsistencyError(f"stage {j + 1} is not consistent: {r.message}")
    for i, j, l in itertools.combinations_with_replacement(range(len(st)), 3):
        lhs = compose(tower.connectors[i, j], tower.connectors[j, l])
        if lhs.idx != tower.connectors[i, l].idx:
            raise InternalConsistencyError(f"psi_{i + 1},{j + 1} o psi_{j + 1},{l + 1} != psi_{i + 1},{l + 1}")
    return rep
