"""Finite nilspaces: constructions, cube enumeration, axioms, factors and
structure groups.

Points are coordinate tuples kept in canonical (lexicographic) order.
Internally every cube is a tuple of point *indices* in vertex order (see
:mod:`nilsys.cube`); the public helpers convert to and from points.

Cube membership is an oracle ``member(n, q)`` derived from the construction:

* ``D_k(A)``: every (k+1)-face has vanishing Gray-code sum,
* products: both coordinate projections are cubes,
* sub-spaces: cubes of the ambient space with values in the carrier,
* quotients: images of cubes of the source space (for ``n <= step+1``;
  above that, every (step+1)-face must be such an image).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

from . import cube as cb
from .grp import TRIVIAL, Group, GroupElem, decompose, direct_sum
from .report import (
    InputError,
    InternalConsistencyError,
    Report,
    ResourceError,
    StructureError,
    timed,
)

Point = tuple
DEFAULT_BUDGET = 5_000_000


# -- construction provenance -------------------------------------------------

@dataclass(frozen=True)
class DkExpr:
    group: Group
    k: int

    def to_json(self):
        return {"dk": [list(self.group.orders), self.k]}


@dataclass(frozen=True)
class PointExpr:
    def to_json(self):
        return {"point": True}


@dataclass(frozen=True)
class ProductExpr:
    left: object
    right: object

    def to_json(self):
        return {"product": [self.left.to_json(), self.right.to_json()]}


@dataclass(frozen=True)
class SubExpr:
    ambient: object
    points: tuple

    def to_json(self):
        return {"sub": {"space": self.ambient.to_json(), "points": [list(p) for p in self.points]}}


@dataclass(frozen=True)
class QuotientExpr:
    source: object
    cells: tuple

    def to_json(self):
        return {"quotient": {"space": self.source.to_json(),
                             "cells": [[list(p) for p in c] for c in self.cells]}}


@dataclass(frozen=True)
class FiberProductExpr:
    left: object
    right: object
    base: object

    def to_json(self):
        return {"fiber_product": [self.left.to_json(), self.right.to_json(), self.base.to_json()]}


@dataclass(frozen=True)
class RawExpr:
    base: object
    note: str

    def to_json(self):
        return {"raw": {"space": self.base.to_json(), "note": self.note}}


# -- structure data ------------------------------------------------------------

@dataclass
class Level:
    """A structure group with its action on the points (by index)."""

    group: Group
    action: tuple  # action[group index][point index] -> point index

    def act(self, x: int, z: GroupElem) -> int:
        return self.action[self.group.index(z)][x]


# -- the space -------------------------------------------------------------------

class Nilspace:
    """A finite cubespace given by a point list and a cube-membership oracle.

    Nothing about the nilspace axioms is assumed at construction time;
    :func:`verify_axioms` checks them.  Cube lists, corner lists and factor
    relations are memoised per instance.
    """

    def __init__(
        self,
        points: Sequence[Point],
        member: Callable[[int, tuple], bool],
        *,
        step_hint: int,
        expr,
        name: str = "",
        enum: Callable[[int], Iterable[tuple]] | None = None,
        levels: Callable[["Nilspace"], dict] | dict | None = None,
        parts: tuple = (),
    ):
        points = [tuple(p) for p in points]
        if not points:
            raise InputError("a nilspace needs at least one point")
        if len(set(points)) != len(points):
            raise InputError("duplicate points")
        if points != sorted(points):
            raise InputError("points must be given in canonical (sorted) order")
        self.points: tuple[Point, ...] = tuple(points)
        self.index = {p: i for i, p in enumerate(self.points)}
        self._member = member
        self._enum = enum
        self.step_hint = step_hint
        self.expr = expr
        self.name = name
        self.parts = parts
        self.budget = DEFAULT_BUDGET
        self.nmax_override: int | None = None
        self._levels_src = levels
        self._cubes: dict[int, list] = {}
        self._cube_sets: dict[int, frozenset] = {}
        self._corners: dict[int, list] = {}
        self._completions: dict[int, dict] = {}
        self._relations: dict[int, "object"] = {}
        self._factors: dict[int, tuple] = {}
        self._step: int | None = None
        self._structure: dict[int, tuple] = {}
        self.verified: Report | None = None

    def __repr__(self) -> str:
        return f"Nilspace({self.name or self.expr!r}, |X|={self.size})"

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def nmax(self) -> int:
        if self.nmax_override is not None:
            return self.nmax_override
        return self.step_hint + 1

    def idx(self, p) -> int:
        try:
            return self.index[tuple(p)]
        except KeyError:
            raise InputError(f"{tuple(p)} is not a point of {self!r}") from None

    def to_points(self, q: Sequence[int]) -> tuple:
        return tuple(self.points[i] for i in q)

    def to_idx(self, values: Sequence) -> tuple:
        return tuple(self.idx(p) for p in values)

    # membership -------------------------------------------------------------

    def is_cube_idx(self, q: tuple) -> bool:
        n = len(q).bit_length() - 1
        s = self._cube_sets.get(n)
        if s is not None:
            return q in s
        return self._member(n, q)

    def is_cube(self, values: Sequence) -> bool:
        N = len(values)
        if N == 0 or N & (N - 1):
            raise InputError(f"a cube map needs 2^n values, got {N}")
        return self.is_cube_idx(self.to_idx(values))

    # enumeration ---------------------------------------------------------

    def cubes(self, n: int) -> list[tuple]:
        """C^n as sorted index tuples."""
        if n not in self._cubes:
            if self._enum is not None:
                found = sorted(set(self._enum(n)))
            else:
                found = self._search(n, full=True)
            self._cubes[n] = found
            self._cube_sets[n] = frozenset(found)
        return self._cubes[n]

    def cube_set(self, n: int) -> frozenset:
        self.cubes(n)
        return self._cube_sets[n]

    def corners(self, n: int) -> list[tuple]:
        """Cor^n: maps on {0,1}^n minus 1^n whose faces avoiding 1^n are cubes."""
        if n not in self._corners:
            if n == 0:
                self._corners[0] = [()]
            else:
                self._corners[n] = self._search(n, full=False)
        return self._corners[n]

    def completion_table(self, n: int) -> dict[tuple, tuple]:
        """corner -> completions (top values), for corners that have one."""
        if n not in self._completions:
            table: dict[tuple, list] = {}
            for q in self.cubes(n):
                table.setdefault(q[:-1], []).append(q[-1])
            self._completions[n] = {c: tuple(v) for c, v in table.items()}
        return self._completions[n]

    def _search(self, n: int, full: bool, candidates: Sequence[int] | None = None) -> list[tuple]:
        """Backtracking over vertices in lexicographic order.

        Every face whose top vertex has just been assigned is tested, so
        partial maps that already contain a non-cube face are pruned.  This
        relies on faces of cubes being cubes; :func:`verify_axioms` checks
        that independently through the composition axiom.
        """
        N = 1 << n
        last = N if full else N - 1
        checks = [cb.faces_with_top(n, v) for v in range(last)]
        if full and n == 0:
            checks = [((0,),)]
        cand = range(self.size) if candidates is None else tuple(candidates)
        allowed = None if candidates is None else set(candidates)
        # values at v are drawn from the completions of one lower face with
        # top v, of dimension < n so its table does not depend on this search
        lead: list = [None] * last
        for v in range(1, last):
            ones = [j for j in range(n) if (v >> (n - 1 - j)) & 1]
            d = len(ones) if len(ones) < n else n - 1
            if d >= 1:
                face = next(f for f in checks[v] if len(f) == 1 << d)
                lead[v] = (face[:-1], self.completion_table(d))
        q = [0] * N
        out: list[tuple] = []
        nodes = 0
        budget = self.budget
        is_cube = self.is_cube_idx

        def rec(v: int) -> None:
            nonlocal nodes
            if v == last:
                out.append(tuple(q[:last]))
                return
            fs = checks[v]
            xs = cand
            if lead[v] is not None:
                face, table = lead[v]
                xs = table.get(tuple(q[i] for i in face), ())
                if allowed is not None:
                    xs = [x for x in xs if x in allowed]
            for x in xs:
                nodes += 1
                if nodes > budget:
                    raise ResourceError(
                        f"cube search on {self!r} at n={n} exceeded budget {budget}", partial=len(out)
                    )
                q[v] = x
                for face in fs:
                    if not is_cube(tuple(q[i] for i in face)):
                        break
                else:
                    rec(v + 1)

        rec(0)
        return out

    # structure -------------------------------------------------------------

    @cached_property
    def levels(self) -> dict[int, Level | None]:
        src = self._levels_src
        if src is None:
            return {}
        if callable(src):
            return src(self)
        return dict(src)

    def top_level(self) -> int:
        known = [i for i in self.levels]
        return max(known) if known else 0


# -- D_k(A) ------------------------------------------------------------------------

def point_space(name: str = "pt") -> Nilspace:
    """The one-point nilspace (step 0)."""
    return Nilspace([()], lambda n, q: True, step_hint=0, expr=PointExpr(), name=name,
                    enum=lambda n: [(0,) * (1 << n)])


def build_dk(A: Group, k: int, name: str = "") -> Nilspace:
    """The degree-k structure on A: q is a cube iff every (k+1)-face of q has
    vanishing Gray-code alternating sum."""
    if k < 1:
        raise InputError("D_k needs k >= 1")
    if A.size == 1:
        return point_space(name or f"D{k}(0)")
    elems = A.elements
    orders = A.orders
    r = len(orders)

    def member(n: int, q: tuple) -> bool:
        if n <= k:
            return True
        sg = cb.signs(k + 1)
        for face in cb.faces(n, k + 1):
            for j in range(r):
                s = 0
                for sign, v in zip(sg, face):
                    s += sign * elems[q[v]][j]
                if s % orders[j]:
                    return False
        return True

    def enum(n: int):
        # degree <= k polynomial maps: free coefficients on monomials of degree <= k
        mons = cb.monomials(n, k)
        for coeffs in itertools.product(range(A.size), repeat=len(mons)):
            vals = []
            for vi in range(1 << n):
                acc = [0] * r
                for c, mon in zip(coeffs, mons):
                    if mon[vi]:
                        e = elems[c]
                        for j in range(r):
                            acc[j] += e[j]
                vals.append(A.index(tuple(a % o for a, o in zip(acc, orders))))
            yield tuple(vals)

    def levels(X: Nilspace) -> dict:
        action = tuple(tuple(A.index(A.add(x, z)) for x in elems) for z in elems)
        return {k: Level(A, action)}

    return Nilspace(elems, member, step_hint=k, expr=DkExpr(A, k), name=name or f"D{k}({A!r})",
                    enum=enum, levels=levels)


# -- products ------------------------------------------------------------------------

_PRODUCT_CACHE: dict = {}


def build_product(X: Nilspace, Y: Nilspace, name: str = "") -> Nilspace:
    """Cartesian product; q is a cube iff both coordinate projections are.

    Points are concatenated coordinate tuples.  Results are memoised so that
    repeated products of the same spaces share their cube caches.
    """
    key = (id(X), id(Y))
    hit = _PRODUCT_CACHE.get(key)
    if hit is not None and hit[0] is X and hit[1] is Y:
        return hit[2]
    ny = Y.size
    points = [x + y for x in X.points for y in Y.points]

    def split(q):
        return tuple(i // ny for i in q), tuple(i % ny for i in q)

    def member(n: int, q: tuple) -> bool:
        qx, qy = split(q)
        return X.is_cube_idx(qx) and Y.is_cube_idx(qy)

    def enum(n: int):
        cy = Y.cubes(n)
        for qx in X.cubes(n):
            base = [i * ny for i in qx]
            for qy in cy:
                yield tuple(b + j for b, j in zip(base, qy))

    def levels(P: Nilspace) -> dict:
        out = {}
        for i in sorted(set(X.levels) | set(Y.levels)):
            lx, ly = X.levels.get(i), Y.levels.get(i)
            if (i in X.levels and lx is None) or (i in Y.levels and ly is None):
                out[i] = None
                continue
            gx = lx.group if lx else TRIVIAL
            gy = ly.group if ly else TRIVIAL
            G = direct_sum(gx, gy)
            action = []
            for z in G.elements:
                zx, zy = z[: len(gx.orders)], z[len(gx.orders):]
                row = []
                for p in range(P.size):
                    ix, iy = divmod(p, ny)
                    if lx:
                        ix = lx.act(ix, zx)
                    if ly:
                        iy = ly.act(iy, zy)
                    row.append(ix * ny + iy)
                action.append(tuple(row))
            out[i] = Level(G, tuple(action))
        return out

    if points != sorted(points):
        raise InputError("product points are not canonically ordered (mixed point lengths?)")
    P = Nilspace(points, member, step_hint=max(X.step_hint, Y.step_hint),
                 expr=ProductExpr(X.expr, Y.expr), name=name or f"{X.name}x{Y.name}",
                 enum=enum, levels=levels, parts=(X, Y))
    _PRODUCT_CACHE[key] = (X, Y, P)
    return P


def build_power(X: Nilspace, m: int) -> Nilspace:
    if m < 1:
        return point_space()
    P = X
    for _ in range(m - 1):
        P = build_product(P, X)
    return P


# -- sub-spaces ------------------------------------------------------------------------

def build_sub(X: Nilspace, points: Iterable, name: str = "", expr=None, enum=None) -> Nilspace:
    """Restriction of X's cube structure to a subset of its points.

    ``enum(n)``, if given, must yield exactly the n-cubes of the result as
    ambient point tuples; it replaces the backtracking search.
    """
    carrier = sorted({X.idx(p) for p in points})
    if not carrier:
        raise InputError("empty sub-space")
    sub_points = [X.points[i] for i in carrier]
    inv = {c: j for j, c in enumerate(carrier)}
    carrier_set = set(carrier)

    def member(n: int, q: tuple) -> bool:
        return X.is_cube_idx(tuple(carrier[i] for i in q))

    def levels(S: Nilspace) -> dict:
        out = {}
        for i, L in X.levels.items():
            if L is None:
                out[i] = None
                continue
            keep = [z for z in L.group.elements
                    if all(L.act(c, z) in carrier_set for c in carrier)]
            if len(keep) == 1:
                continue
            G, coords = decompose(keep, L.group.add, L.group.zero)
            back = {c: z for z, c in coords.items()}
            action = tuple(
                tuple(inv[L.act(c, back[g])] for c in carrier) for g in G.elements
            )
            out[i] = Level(G, action)
        return out

    def sub_enum(n: int):
        for q in enum(n):
            yield tuple(inv[X.idx(p)] for p in q)

    return Nilspace(sub_points, member, step_hint=X.step_hint,
                    expr=expr or SubExpr(X.expr, tuple(sub_points)), name=name or f"sub({X.name})",
                    enum=sub_enum if enum is not None else None, levels=levels, parts=(X, tuple(carrier)))


# -- quotients -------------------------------------------------------------------------

def build_quotient(X: Nilspace, partition, name: str = ""):
    """Quotient of X by a partition of its points.

    Each cell is labelled by its least member; the quotient's cubes are the
    images of X's cubes.  The result is NOT assumed to be a nilspace, and the
    projection is not assumed to be a fibration: run :func:`verify_axioms`
    and :func:`nilsys.maps.is_fibration`.

    Returns ``(Q, pi)``.
    """
    from .maps import NilMap, Partition

    P = partition if isinstance(partition, Partition) else Partition.from_cells(
        [[X.idx(p) for p in cell] for cell in partition], X.size)
    if P.n != X.size:
        raise InputError("partition does not cover the space")
    blocks = P.blocks
    labels = [X.points[b[0]] for b in blocks]
    block_of = P.labels
    k = X.step_hint
    images: dict[int, frozenset] = {}

    def image_set(n: int) -> frozenset:
        if n not in images:
            images[n] = frozenset(tuple(block_of[i] for i in q) for q in X.cubes(n))
        return images[n]

    def member(n: int, q: tuple) -> bool:
        if n <= k + 1:
            return q in image_set(n)
        top = image_set(k + 1)
        return all(tuple(q[i] for i in face) in top for face in cb.faces(n, k + 1))

    def enum(n: int):
        if n <= k + 1:
            return image_set(n)
        return Q._search(n, full=True)

    def levels(Qs: Nilspace) -> dict:
        out = {}
        for i, L in X.levels.items():
            if L is None:
                out[i] = None
                continue
            G = L.group
            acts = {}
            ok = True
            for z in G.elements:
                row = []
                for b in blocks:
                    imgs = {block_of[L.act(x, z)] for x in b}
                    if len(imgs) != 1:
                        ok = False
                        break
                    row.append(imgs.pop())
                if not ok:
                    break
                acts[z] = tuple(row)
            if not ok:
                out[i] = None
                continue
            ident = tuple(range(len(blocks)))
            K = [z for z in G.elements if acts[z] == ident]
            if len(K) == G.size:
                continue
            cosets = {}
            for z in G.elements:
                key = min(G.add(z, w) for w in K)
                cosets.setdefault(key, z)
            reps = sorted(cosets)

            def cadd(a, b, G=G, K=K):
                s = G.add(a, b)
                return min(G.add(s, w) for w in K)

            Gq, coords = decompose(reps, cadd, G.zero)
            back = {c: z for z, c in coords.items()}
            action = tuple(acts[back[g]] for g in Gq.elements)
            out[i] = Level(Gq, action)
        return out

    cells = tuple(tuple(X.points[i] for i in b) for b in blocks)
    Q = Nilspace(labels, member, step_hint=k, expr=QuotientExpr(X.expr, cells),
                 name=name or f"{X.name}/P", enum=enum, levels=levels, parts=(X, P))
    pi = NilMap(X, Q, tuple(block_of), name="pi")
    return Q, pi


def remove_cubes(X: Nilspace, cubes: Iterable[Sequence], name: str = "") -> Nilspace:
    """A copy of X whose membership oracle rejects the given cubes.

    Used to build negative controls; the result is generally not a nilspace.
    """
    removed = {X.to_idx(c) for c in cubes}

    def member(n: int, q: tuple) -> bool:
        if q in removed:
            return False
        return X.is_cube_idx(q)

    return Nilspace(X.points, member, step_hint=X.step_hint,
                    expr=RawExpr(X.expr, f"{len(removed)} cube(s) removed"),
                    name=name or f"{X.name}-broken", levels=None)


# -- queries -------------------------------------------------------------------------

def enumerate_cubes(X: Nilspace, n: int) -> list[tuple]:
    """C^n(X) as point tuples in vertex order, canonical order."""
    return [X.to_points(q) for q in X.cubes(n)]


def _bad_corner_face(X: Nilspace, c: tuple) -> tuple | None:
    N = len(c) + 1
    n = N.bit_length() - 1
    full = c + (0,)
    for v in range(N - 1):
        for face in cb.faces_with_top(n, v):
            if not X.is_cube_idx(tuple(full[i] for i in face)):
                return face
    return None


def completions(X: Nilspace, corner: Sequence) -> set:
    """All x such that the corner extended by x at 1^n is a cube."""
    N = len(corner) + 1
    if N & (N - 1):
        raise InputError(f"a corner needs 2^n - 1 values, got {len(corner)}")
    c = X.to_idx(corner)
    n = N.bit_length() - 1
    bad = _bad_corner_face(X, c)
    if bad is not None:
        verts = [cb.vertex_str(cb.vertices(n)[i]) for i in bad]
        raise InputError(f"not a corner: the face {{{', '.join(verts)}}} is not a cube")
    return {X.points[x] for x in range(X.size) if X.is_cube_idx(c + (x,))}


def _witness_cube(X: Nilspace, q: tuple, n: int) -> dict:
    return {"n": n, "cube": [list(p) for p in X.to_points(q)]}


def verify_axioms(X: Nilspace, nmax: int | None = None, exhaustive: bool = False) -> Report:
    """Check C^0, ergodicity, composition and corner completion for n <= nmax.

    Composition is checked against a generating set of cube morphisms
    (transpositions, a reflection, face restriction, diagonal, degeneracy);
    ``exhaustive=True`` checks every cube morphism between dimensions <= nmax.
    """
    nmax = X.nmax if nmax is None else nmax
    rep = Report("verify-nilspace", details={"space": X.name, "nmax": nmax})
    with timed(rep):
        c0 = X.cubes(0)
        rep.counts["C0"] = len(c0)
        if len(c0) != X.size:
            missing = sorted(set(range(X.size)) - {q[0] for q in c0})[0]
            rep.fail("C^0 is not the full point set", {"kind": "C0", "point": list(X.points[missing])})
            return rep
        if nmax >= 1:
            c1 = X.cubes(1)
            rep.counts["C1"] = len(c1)
            if len(c1) != X.size ** 2:
                have = set(c1)
                pair = next((x, y) for x in range(X.size) for y in range(X.size) if (x, y) not in have)
                rep.fail("ergodicity fails: C^1 is not all pairs",
                         {"kind": "ergodicity", "pair": [list(X.points[i]) for i in pair]})
                return rep
        for n in range(2, nmax + 1):
            rep.counts[f"C{n}"] = len(X.cubes(n))
        # composition
        for n in range(0, nmax + 1):
            if exhaustive:
                morphs = [(repr(phi), phi) for m in range(0, nmax + 1) for phi in cb.all_morphisms(m, n)]
            else:
                morphs = list(cb.generating_morphisms(n, nmax))
            for q in X.cubes(n):
                for label, phi in morphs:
                    img = cb.precompose(q, phi)
                    if not X.is_cube_idx(img):
                        w = _witness_cube(X, q, n)
                        w.update(kind="composition", morphism=phi.to_json(), label=label,
                                 image=[list(p) for p in X.to_points(img)])
                        rep.fail(f"composition fails at n={n} under {label}", w)
                        return rep
        # completion
        unique_at = None
        for n in range(1, nmax + 1):
            table = X.completion_table(n)
            corners = X.corners(n)
            rep.counts[f"Cor{n}"] = len(corners)
            for c in corners:
                if c not in table:
                    w = {"kind": "completion", "n": n, "corner": [list(p) for p in X.to_points(c)]}
                    rep.fail(f"corner without completion at n={n}", w)
                    return rep
            if unique_at is None and all(len(v) == 1 for v in table.values()):
                unique_at = n
        if unique_at is None:
            rep.fail(f"no dimension <= {nmax} with unique corner completion")
            return rep
        rep.details["unique_completion_from"] = unique_at
    X.verified = rep
    return rep


def step(X: Nilspace, k_max: int | None = None) -> int:
    """Least k such that every (k+1)-corner has exactly one completion."""
    if X._step is not None:
        return X._step
    k_max = X.step_hint + 1 if k_max is None else k_max
    for k in range(0, k_max + 1):
        n = k + 1
        table = X.completion_table(n)
        corners = X.corners(n)
        if all(len(table.get(c, ())) == 1 for c in corners):
            X._step = k
            return k
    raise InputError(f"no unique corner completion up to dimension {k_max + 1}")


# -- characteristic factors ------------------------------------------------------

def relation(X: Nilspace, n: int):
    """The partition of X into ~_n classes.

    x ~_n y iff every (n+1)-cube with top value x stays a cube when that
    value is replaced by y.  Cross-checked against the single test "the
    constant-x corner completed by y is a cube"; both must agree and yield an
    equivalence relation.
    """
    from .maps import Partition

    if n in X._relations:
        return X._relations[n]
    N = 1 << (n + 1)
    cset = X.cube_set(n + 1)
    by_top: dict[int, list] = {x: [] for x in range(X.size)}
    for q in X.cubes(n + 1):
        by_top[q[-1]].append(q[:-1])
    rel = [[all(c + (y,) in cset for c in by_top[x]) for y in range(X.size)] for x in range(X.size)]
    for x in range(X.size):
        const = (x,) * (N - 1)
        for y in range(X.size):
            if X.is_cube_idx(const + (y,)) != rel[x][y]:
                raise InternalConsistencyError(
                    f"~_{n} value-replacement and constant-corner tests disagree on "
                    f"{X.points[x]}, {X.points[y]}")
    for x in range(X.size):
        if not rel[x][x]:
            raise InternalConsistencyError(f"~_{n} is not reflexive at {X.points[x]}")
        for y in range(X.size):
            if rel[x][y] != rel[y][x]:
                raise InternalConsistencyError(f"~_{n} is not symmetric")
            if rel[x][y]:
                for z in range(X.size):
                    if rel[y][z] and not rel[x][z]:
                        raise InternalConsistencyError(f"~_{n} is not transitive")
    labels = [min(y for y in range(X.size) if rel[x][y]) for x in range(X.size)]
    P = Partition.from_labels(labels)
    X._relations[n] = P
    return P


def factor(X: Nilspace, n: int):
    """The n-th characteristic factor X_n and the projection pi_n: X -> X_n.

    For n >= step(X) the relation is equality and ``(X, identity)`` is returned.
    The projection is verified to be a fibration.
    """
    from .maps import identity, is_fibration

    if n < 0:
        raise InputError("factor index must be >= 0")
    if n in X._factors:
        return X._factors[n]
    P = relation(X, n)
    if len(P.blocks) == X.size:
        res = (X, identity(X))
    else:
        Q, pi = build_quotient(X, P, name=f"{X.name}_{n}")
        rep = is_fibration(pi)
        if not rep:
            raise InternalConsistencyError(f"pi_{n} on {X!r} is not a fibration: {rep.message}")
        res = (Q, pi)
    X._factors[n] = res
    return res


# -- structure groups ------------------------------------------------------------

def verify_structure(X: Nilspace, i: int, L: Level) -> Report:
    """Check that L acts freely and transitively on every ~_{i-1} class,
    is compatible with cubes (q + g is a cube for q in C^n(X), g a cube of
    D_i(A_i), n <= i+1), and that each class with its induced cubes is
    isomorphic to D_i(A_i) via x0 + z -> z."""
    A = L.group
    rep = Report("structure", details={"space": X.name, "level": i, "group": list(A.orders)})
    P = relation(X, i - 1)
    for block in P.blocks:
        bset = set(block)
        x0 = block[0]
        orbit = [L.act(x0, z) for z in A.elements]
        if set(orbit) != bset or len(orbit) != len(bset):
            return rep.fail("action is not free and transitive on a fiber",
                            {"fiber": [list(X.points[x]) for x in block]})
        for z in A.elements:
            for x in block:
                if L.act(x, z) not in bset:
                    return rep.fail("action leaves a fiber", {"point": list(X.points[x]), "z": list(z)})
    # cube compatibility: add generators of the D_i cube group
    gens = A.basis()
    for n in range(1, i + 2):
        for mon in cb.monomials(n, i):
            for g in gens:
                for q in X.cubes(n):
                    moved = tuple(L.act(x, g) if m else x for x, m in zip(q, mon))
                    if not X.is_cube_idx(moved):
                        return rep.fail("action is not compatible with cubes",
                                        {"n": n, "cube": [list(p) for p in X.to_points(q)],
                                         "monomial": list(mon), "z": list(g)})
    # each fiber is a copy of D_i(A)
    D = build_dk(A, i) if A.size > 1 else point_space()
    lab = P.labels
    inside: dict[int, dict[int, set]] = {}
    for n in range(1, i + 2):
        per = inside[n] = {b: set() for b in range(len(P.blocks))}
        for q in X.cubes(n):
            b = lab[q[0]]
            if all(lab[x] == b for x in q):
                per[b].add(q)
    for bi, block in enumerate(P.blocks):
        x0 = block[0]
        to_x = [L.act(x0, z) for z in A.elements]
        for n in range(1, i + 2):
            want = {tuple(to_x[j] for j in c) for c in D.cubes(n)}
            if want != inside[n][bi]:
                return rep.fail("fiber is not isomorphic to D_i(A_i)",
                                {"fiber": [list(X.points[x]) for x in block], "n": n})
    rep.counts["fibers"] = len(P.blocks)
    return rep


def structure_group(X: Nilspace, i: int):
    """The i-th structure group A_i with its action on the points of X_i.

    Returns ``(Group, Level, space)`` where ``space`` is X itself for the top
    level and the factor X_i otherwise.  The group comes from construction
    provenance and is verified before it is returned.
    """
    s = step(X)
    if i < 1:
        raise InputError("structure groups are indexed from 1")
    if i > s:
        return TRIVIAL, None, X
    Z = X if i == s else factor(X, i)[0]
    if i in Z._structure:
        return Z._structure[i]
    if i not in Z.levels:
        raise StructureError(f"structure data missing for level {i} of {Z!r}")
    L = Z.levels[i]
    if L is None:
        raise StructureError(f"level-{i} structure of {Z!r} did not survive the construction")
    rep = verify_structure(Z, i, L)
    if not rep:
        raise StructureError(f"level-{i} structure of {Z!r} fails verification: {rep.message}")
    Z._structure[i] = (L.group, L, Z)
    return Z._structure[i]


def sub_fiber(psi, y) -> Nilspace:
    """The preimage of y under a fibration, with restricted cubes."""
    from .maps import is_fibration

    rep = is_fibration(psi)
    if not rep:
        raise InputError(f"sub_fiber needs a fibration: {rep.message}")
    j = psi.codomain.idx(y)
    pts = [psi.domain.points[i] for i in range(psi.domain.size) if psi.idx[i] == j]
    S = build_sub(psi.domain, pts, name=f"{psi.domain.name}|fiber")
    r = verify_axioms(S)
    if not r:
        raise InternalConsistencyError(f"fiber of a fibration fails the axioms: {r.message}")
    return S
