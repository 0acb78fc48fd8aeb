"""Maps between finite nilspaces: morphisms, fibrations, translations,
induced factor maps, structure morphisms, diagonal products and the
partition order on maps with a common domain."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

from . import cube as cb
from .grp import TRIVIAL, GroupHom
from .nilspace import Nilspace, build_product, factor, point_space, relation, step, structure_group
from .report import (
    InputError,
    InternalConsistencyError,
    Report,
    ResourceError,
    StructureError,
    timed,
)


@dataclass(frozen=True)
class Partition:
    """A set partition of ``range(n)``; blocks sorted, ordered by least member."""

    blocks: tuple[tuple[int, ...], ...]

    @classmethod
    def from_labels(cls, labels: Sequence) -> "Partition":
        groups: dict = {}
        for i, lab in enumerate(labels):
            groups.setdefault(lab, []).append(i)
        return cls(tuple(sorted(tuple(g) for g in groups.values())))

    @classmethod
    def from_cells(cls, cells, n: int) -> "Partition":
        seen = sorted(i for c in cells for i in c)
        if seen != list(range(n)):
            raise InputError("cells are not an exact cover of the points")
        if any(len(c) == 0 for c in cells):
            raise InputError("empty cell")
        return cls(tuple(sorted(tuple(sorted(c)) for c in cells)))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(tuple((i,) for i in range(n)))

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    @cached_property
    def labels(self) -> tuple[int, ...]:
        lab = [0] * self.n
        for j, b in enumerate(self.blocks):
            for i in b:
                lab[i] = j
        return tuple(lab)

    def __len__(self) -> int:
        return len(self.blocks)

    def refines(self, other: "Partition") -> bool:
        """Every block of self lies inside a block of other."""
        lab = other.labels
        return all(len({lab[i] for i in b}) == 1 for b in self.blocks)

    def meet(self, other: "Partition") -> "Partition":
        return Partition.from_labels(list(zip(self.labels, other.labels)))

    def cells(self, X: Nilspace) -> list[list]:
        return [[X.points[i] for i in b] for b in self.blocks]


class NilMap:
    """A total point map between two spaces, stored by point index.

    ``status`` caches verification reports keyed by check name; caches only
    skip recomputation, they never change a verdict.
    """

    def __init__(self, domain: Nilspace, codomain: Nilspace, table, name: str = "",
                 components: Sequence["NilMap"] | None = None):
        self.domain = domain
        self.codomain = codomain
        self.name = name
        if isinstance(table, Mapping):
            idx = []
            for p in domain.points:
                if p not in table:
                    raise InputError(f"map {name!r} is not total: no value at {p}")
                idx.append(codomain.idx(table[p]))
            self.idx = tuple(idx)
        else:
            self.idx = tuple(table)
            if len(self.idx) != domain.size:
                raise InputError(f"map {name!r} is not total on {domain!r}")
            if any(not 0 <= j < codomain.size for j in self.idx):
                raise InputError(f"map {name!r} has values outside {codomain!r}")
        self.components = tuple(components) if components else None
        self.status: dict[str, Report] = {}

    def __repr__(self) -> str:
        return f"NilMap({self.name or '?'}: {self.domain.name} -> {self.codomain.name})"

    def __call__(self, p):
        return self.codomain.points[self.idx[self.domain.idx(p)]]

    def __eq__(self, other) -> bool:
        return (isinstance(other, NilMap) and self.domain is other.domain
                and self.codomain is other.codomain and self.idx == other.idx)

    def __hash__(self) -> int:
        return hash((id(self.domain), id(self.codomain), self.idx))

    def image(self, q: Sequence[int]) -> tuple:
        idx = self.idx
        return tuple(idx[i] for i in q)

    @cached_property
    def partition(self) -> Partition:
        return Partition.from_labels(self.idx)

    def is_bijective(self) -> bool:
        return self.domain.size == self.codomain.size and len(set(self.idx)) == self.domain.size

    def is_surjective(self) -> bool:
        return len(set(self.idx)) == self.codomain.size

    def inverse(self) -> "NilMap":
        if not self.is_bijective():
            raise InputError(f"{self!r} is not bijective")
        inv = [0] * self.codomain.size
        for i, j in enumerate(self.idx):
            inv[j] = i
        return NilMap(self.codomain, self.domain, tuple(inv), name=f"{self.name}^-1")

    def table(self) -> list:
        return [[list(p), list(self.codomain.points[j])] for p, j in zip(self.domain.points, self.idx)]

    def to_json(self) -> dict:
        return {"name": self.name, "domain": self.domain.name, "codomain": self.codomain.name,
                "table": self.table()}


def identity(X: Nilspace) -> NilMap:
    return NilMap(X, X, tuple(range(X.size)), name="id")


def constant(X: Nilspace, Y: Nilspace, y=None) -> NilMap:
    j = 0 if y is None else Y.idx(y)
    return NilMap(X, Y, (j,) * X.size, name="const")


def to_point(X: Nilspace) -> NilMap:
    return constant(X, point_space())


def compose(g: NilMap, f: NilMap) -> NilMap:
    """``g o f``."""
    if f.codomain is not g.domain:
        if f.codomain.points != g.domain.points:
            raise InputError(f"cannot compose {g!r} after {f!r}")
    return NilMap(f.domain, g.codomain, tuple(g.idx[j] for j in f.idx),
                  name=f"{g.name}.{f.name}" if g.name and f.name else "")


def from_function(X: Nilspace, Y: Nilspace, fn, name: str = "") -> NilMap:
    return NilMap(X, Y, {p: tuple(fn(p)) for p in X.points}, name=name)


def _default_nmax(f: NilMap, nmax: int | None) -> int:
    if nmax is not None:
        return nmax
    return max(f.domain.nmax, f.codomain.nmax)


def _pts(X: Nilspace, q) -> list:
    return [list(p) for p in X.to_points(q)]


def is_morphism(f: NilMap, nmax: int | None = None) -> Report:
    """f o q is a cube of the codomain for every cube q of the domain, n <= nmax."""
    nmax = _default_nmax(f, nmax)
    key = f"morphism:{nmax}"
    if key in f.status:
        return f.status[key]
    rep = Report("morphism", details={"map": f.name, "nmax": nmax})
    with timed(rep):
        X, Y = f.domain, f.codomain
        for n in range(0, nmax + 1):
            cubes = X.cubes(n)
            rep.counts[f"C{n}"] = len(cubes)
            for q in cubes:
                img = f.image(q)
                if not Y.is_cube_idx(img):
                    rep.fail(f"image of a {n}-cube is not a cube",
                             {"kind": "morphism", "map": f.name, "n": n,
                              "cube": _pts(X, q), "image": _pts(Y, img)})
                    f.status[key] = rep
                    return rep
    f.status[key] = rep
    return rep


def corner_lifting(f: NilMap, nmax: int) -> Report:
    """For every n-corner c of the domain and every completion y of f o c,
    some completion x of c has f(x) = y (n <= nmax)."""
    X, Y = f.domain, f.codomain
    rep = Report("corner-lifting")
    for n in range(0, nmax + 1):
        if n == 0:
            missing = sorted(set(range(Y.size)) - set(f.idx))
            if missing:
                return rep.fail("not surjective", {"kind": "corner-lifting", "n": 0, "corner": [],
                                                    "target": list(Y.points[missing[0]])})
            continue
        xt = X.completion_table(n)
        yt = Y.completion_table(n)
        idx = f.idx
        corners = X.corners(n)
        rep.counts[f"Cor{n}"] = len(corners)
        for c in corners:
            want = yt.get(f.image(c), ())
            have = {idx[x] for x in xt.get(c, ())}
            for y in want:
                if y not in have:
                    return rep.fail(f"a completion of an image {n}-corner does not lift",
                                    {"kind": "corner-lifting", "n": n, "corner": _pts(X, c),
                                     "target": list(Y.points[y])})
    return rep


def fiber_to_fiber(f: NilMap, nmax: int) -> Report:
    """For every n, f maps each ~_n class of the domain onto a ~_n class."""
    X, Y = f.domain, f.codomain
    rep = Report("fiber-to-fiber")
    for n in range(0, nmax + 1):
        PX, PY = relation(X, n), relation(Y, n)
        ylab = PY.labels
        for b in PX.blocks:
            img = {f.idx[x] for x in b}
            cell = set(PY.blocks[ylab[next(iter(img))]])
            if img != cell:
                return rep.fail(f"a pi_{n}-fiber is not mapped onto a pi_{n}-fiber",
                                {"kind": "fiber-to-fiber", "n": n,
                                 "fiber": [list(X.points[x]) for x in b],
                                 "image": [list(Y.points[y]) for y in sorted(img)],
                                 "target_fiber": [list(Y.points[y]) for y in sorted(cell)]})
    return rep


def is_fibration(f: NilMap, nmax: int | None = None, componentwise: bool = False) -> Report:
    """Decide whether f is a fibration.

    Both characterisations are evaluated: corner lifting for n <= nmax and
    fiber-to-fiber for n < nmax.  They must agree; disagreement raises
    :class:`InternalConsistencyError` (n_max too small for the spaces).

    With ``componentwise=True`` and a map built by :func:`product_map`, each
    component is checked instead (a product of fibrations is a fibration).
    """
    if componentwise:
        return _fibration_components(f)
    nmax = _default_nmax(f, nmax)
    key = f"fibration:{nmax}"
    if key in f.status:
        return f.status[key]
    rep = Report("fibration", details={"map": f.name, "nmax": nmax})
    with timed(rep):
        mor = is_morphism(f, nmax)
        if not mor:
            rep.fail("not a morphism: " + mor.message, *mor.witnesses[:1])
            f.status[key] = rep
            return rep
        a = corner_lifting(f, nmax)
        b = fiber_to_fiber(f, max(nmax - 1, 0))
        rep.details["corner_lifting"] = a.verdict
        rep.details["fiber_to_fiber"] = b.verdict
        rep.counts.update(a.counts)
        if a.verdict != b.verdict:
            raise InternalConsistencyError(
                f"fibration criteria disagree on {f!r}: corner-lifting {a.verdict} "
                f"({a.message}), fiber-to-fiber {b.verdict} ({b.message})")
        if not a:
            rep.fail(a.message, *a.witnesses)
            rep.witnesses.extend(b.witnesses)
    f.status[key] = rep
    return rep


def _fibration_components(f: NilMap) -> Report:
    if not f.components:
        raise InputError(f"{f!r} was not built as a product of maps")
    rep = Report("fibration", details={"map": f.name, "method": "components",
                                       "components": len(f.components)})
    with timed(rep):
        for j, g in enumerate(f.components):
            r = is_fibration(g)
            if not r:
                return rep.fail(f"component {j} is not a fibration: {r.message}", *r.witnesses[:1])
    return rep


def product_map(fs: Sequence[NilMap], name: str = "") -> NilMap:
    """``f1 x ... x fr`` between product spaces (left-nested products)."""
    if not fs:
        raise InputError("empty product of maps")
    dom, cod, idx = fs[0].domain, fs[0].codomain, fs[0].idx
    for g in fs[1:]:
        nd, nc = build_product(dom, g.domain), build_product(cod, g.codomain)
        gs = g.codomain.size
        idx = tuple(idx[i] * gs + g.idx[j] for i in range(dom.size) for j in range(g.domain.size))
        dom, cod = nd, nc
    return NilMap(dom, cod, idx, name=name or "x".join(g.name for g in fs), components=fs)


# -- translations -------------------------------------------------------------

def _translation_dims(X: Nilspace, paranoid: int | None) -> range:
    s = step(X)
    top = s + 1 if paranoid is None else max(paranoid, s + 1)
    return range(s + 1, top + 1)


def modify_on_face(alpha: NilMap, q: tuple, face: tuple[int, int]) -> tuple:
    n = len(q).bit_length() - 1
    idx = alpha.idx
    m = list(q)
    for v in cb.face_vertices(n, tuple(face)):
        m[v] = idx[m[v]]
    return tuple(m)


def is_translation(X: Nilspace, alpha: NilMap, paranoid: int | None = None,
                   componentwise: bool = False) -> Report:
    """alpha^F(q) is a cube for every (step+1)-cube q and codimension-1 face F.

    ``paranoid`` extends the check to every dimension up to that value.
    ``componentwise`` checks each factor of a product map instead.
    """
    if alpha.domain is not X or alpha.codomain is not X:
        if alpha.domain.points != X.points or alpha.codomain.points != X.points:
            raise InputError("translation must map the space to itself")
    if not alpha.is_bijective():
        raise InputError(f"{alpha!r} is not bijective")
    if componentwise:
        rep = Report("translation", details={"map": alpha.name, "method": "components"})
        for j, g in enumerate(alpha.components or ()):
            r = is_translation(g.domain, g, paranoid)
            if not r:
                return rep.fail(f"component {j} is not a translation: {r.message}", *r.witnesses)
        if not alpha.components:
            raise InputError(f"{alpha!r} was not built as a product of maps")
        return rep
    key = f"translation:{paranoid}"
    if key in alpha.status:
        return alpha.status[key]
    rep = Report("translation", details={"map": alpha.name})
    with timed(rep):
        dims = _translation_dims(X, paranoid)
        top = dims[0]
        rep.details["dims"] = list(dims)
        # quick reject in lower dimensions; a failure there lifts to dimension
        # step+1 by ignoring the extra coordinates
        for n in list(range(2, top)) + list(dims):
            bad = _first_bad_face(X, alpha, n)
            if n in dims:
                rep.counts[f"C{n}"] = len(X.cubes(n))
            if bad is None:
                continue
            q, face = bad
            if n < top:
                q = tuple(q[v >> (top - n)] for v in range(1 << top))
                n = top
            m = modify_on_face(alpha, q, face)
            rep.fail(f"alpha^F(q) is not a cube for F={cb.face_str(face)}",
                     {"kind": "translation-certificate", "map": alpha.name, "n": n,
                      "cube": _pts(X, q), "face": list(face),
                      "face_str": cb.face_str(face), "modified": _pts(X, m)})
            break
    alpha.status[key] = rep
    return rep


def _first_bad_face(X: Nilspace, alpha: NilMap, n: int):
    """First (q, F) in canonical order with alpha^F(q) not a cube, or None."""
    cset = X.cube_set(n)
    idx = alpha.idx
    faces = [(f, cb.face_vertices(n, f)) for f in cb.codim1_faces(n)]
    for q in X.cubes(n):
        for face, fv in faces:
            m = list(q)
            for v in fv:
                m[v] = idx[m[v]]
            if tuple(m) not in cset:
                return q, face
    return None


def replay_translation_certificate(X: Nilspace, alpha: NilMap, cube, face) -> bool:
    """True iff (cube, face) certifies that alpha is not a translation:
    cube is a cube of X and alpha^F(cube) is not."""
    q = X.to_idx([tuple(p) for p in cube])
    if not X.is_cube_idx(q):
        return False
    return not X.is_cube_idx(modify_on_face(alpha, q, tuple(face)))


@dataclass
class TranGroup:
    space: Nilspace
    elements: list[NilMap]
    table: dict  # (i, j) -> index of elements[i] o elements[j]
    candidates: int = 0

    @property
    def order(self) -> int:
        return len(self.elements)

    def index_of(self, f: NilMap) -> int:
        return [g.idx for g in self.elements].index(f.idx)

    def __contains__(self, f: NilMap) -> bool:
        return any(g.idx == f.idx for g in self.elements)

    def is_abelian(self) -> bool:
        return all(self.table[i, j] == self.table[j, i]
                   for i in range(self.order) for j in range(self.order))


def tran_group(X: Nilspace, bound: int = 8, candidates: Sequence[NilMap] | None = None,
               method: str = "auto") -> TranGroup:
    """All translations of X; closure and inverses are asserted.

    Without candidates every bijection of X is considered (|X| <= bound):
    ``method="filter"`` runs :func:`is_translation` on each of the |X|!
    permutations, ``method="backtrack"`` assigns values point by point and
    prunes a partial bijection as soon as some (cube, face) test whose points
    are all assigned fails.  ``auto`` filters up to 7 points.
    """
    tried = 0
    if candidates is None:
        if X.size > bound:
            raise ResourceError(f"|X| = {X.size} exceeds the brute-force bound {bound}; "
                                "supply candidate maps instead")
        if method == "auto":
            method = "filter" if X.size <= 7 else "backtrack"
        if method == "filter":
            cands = [NilMap(X, X, perm) for perm in itertools.permutations(range(X.size))]
        else:
            cands = [NilMap(X, X, perm) for perm in _translation_backtrack(X)]
    else:
        cands = list(candidates)
    members = []
    for a in cands:
        tried += 1
        if not a.is_bijective():
            continue
        if is_translation(X, a):
            members.append(a)
    members.sort(key=lambda g: g.idx)
    for j, g in enumerate(members):
        g.name = g.name or f"t{j}"
    pos = {g.idx: j for j, g in enumerate(members)}
    table = {}
    for i, a in enumerate(members):
        for j, b in enumerate(members):
            c = tuple(a.idx[x] for x in b.idx)
            if c not in pos:
                raise InternalConsistencyError("translation set is not closed under composition")
            table[i, j] = pos[c]
    if tuple(range(X.size)) not in pos:
        raise InternalConsistencyError("identity is not a translation")
    for a in members:
        inv = [0] * X.size
        for x, y in enumerate(a.idx):
            inv[y] = x
        if tuple(inv) not in pos:
            raise InternalConsistencyError("translation set is not closed under inverses")
    return TranGroup(X, members, table, tried)


def _translation_backtrack(X: Nilspace) -> list[tuple]:
    """Bijections passing every (cube, face) test at n = step+1.

    Only the face {v1 = 1} is needed here: a coordinate permutation or
    reflection carries any codimension-1 face onto it, and cube sets are
    closed under those.  Survivors are re-checked by :func:`is_translation`.
    """
    n = step(X) + 1
    fv = cb.face_vertices(n, (0, 1))
    cset = X.cube_set(n)
    buckets: list[list] = [[] for _ in range(X.size)]
    for q in X.cubes(n):
        buckets[max(q[v] for v in fv)].append(q)
    assign = [-1] * X.size
    used = [False] * X.size
    out = []

    def rec(i: int) -> None:
        if i == X.size:
            out.append(tuple(assign))
            return
        for y in range(X.size):
            if used[y]:
                continue
            assign[i] = y
            for q in buckets[i]:
                m = list(q)
                for v in fv:
                    m[v] = assign[m[v]]
                if tuple(m) not in cset:
                    break
            else:
                used[y] = True
                rec(i + 1)
                used[y] = False
        assign[i] = -1

    rec(0)
    return out


# -- factor maps and structure morphisms ---------------------------------------

def induced_factor_map(f: NilMap, i: int) -> NilMap:
    """(f)_(i): X_i -> Y_i with (f)_(i) o pi_i,X = pi_i,Y o f."""
    Xi, px = factor(f.domain, i)
    Yi, py = factor(f.codomain, i)
    table = [None] * Xi.size
    for x in range(f.domain.size):
        a = px.idx[x]
        val = py.idx[f.idx[x]]
        if table[a] is None:
            table[a] = val
        elif table[a] != val:
            raise InputError(f"(f)_({i}) is not well defined: f does not respect ~_{i}")
    g = NilMap(Xi, Yi, tuple(table), name=f"({f.name})_({i})" if f.name else "")
    rep = f.status.get(f"fibration:{_default_nmax(f, None)}")
    if rep is not None and rep.ok:
        r = is_fibration(g)
        if not r:
            raise InternalConsistencyError(f"induced map of a fibration is not a fibration: {r.message}")
    return g


def structure_morphism(f: NilMap, k: int) -> GroupHom:
    """phi_k: A_k(X) -> A_k(Y) with f(x + z) = f(x) + phi_k(z) for all x, z."""
    X, Y = f.domain, f.codomain
    if step(X) != k:
        raise StructureError(f"structure morphism at level {k} needs a {k}-step domain")
    A, LX, _ = structure_group(X, k)
    if step(Y) < k:
        B, LY = TRIVIAL, None
    else:
        B, LY, _ = structure_group(Y, k)
    table = {}
    x0 = 0
    for z in A.elements:
        target = f.idx[LX.act(x0, z)]
        if LY is None:
            cands = [B.zero] if target == f.idx[x0] else []
        else:
            cands = [w for w in B.elements if LY.act(f.idx[x0], w) == target]
        if len(cands) != 1:
            raise InputError(f"no unique phi_{k}({z}) at the base point")
        table[z] = cands[0]
    for x in range(X.size):
        for z in A.elements:
            lhs = f.idx[LX.act(x, z)]
            rhs = f.idx[x] if LY is None else LY.act(f.idx[x], table[z])
            if lhs != rhs:
                raise InputError(f"phi_{k} depends on the base point (at {X.points[x]}, z={z})")
    phi = GroupHom(A, B, table)
    if f.status.get(f"fibration:{_default_nmax(f, None)}", Report("x", "fail")).ok:
        if len(set(table.values())) != B.size:
            raise InternalConsistencyError("structure morphism of a fibration is not surjective")
    return phi


# -- diagonal products and the partition order --------------------------------

def diagonal(fs: Sequence[NilMap], name: str = "") -> NilMap:
    """x -> (f1(x), ..., fr(x)) into the product of the codomains."""
    if not fs:
        raise InputError("empty diagonal product")
    X = fs[0].domain
    for g in fs:
        if g.domain is not X and g.domain.points != X.points:
            raise InputError("diagonal product needs a common domain")
    if len(fs) == 1:
        return NilMap(X, fs[0].codomain, fs[0].idx, name=name or fs[0].name)
    cod, idx = fs[0].codomain, fs[0].idx
    for g in fs[1:]:
        gs = g.codomain.size
        idx = tuple(a * gs + b for a, b in zip(idx, g.idx))
        cod = build_product(cod, g.codomain)
    out = NilMap(X, cod, idx, name=name or "D(" + ",".join(g.name for g in fs) + ")")
    if all(g.status.get(f"morphism:{_default_nmax(g, None)}", Report("x", "fail")).ok for g in fs):
        r = is_morphism(out)
        if not r:
            raise InternalConsistencyError("diagonal of morphisms is not a morphism")
    return out


def refines(f: NilMap, g: NilMap) -> bool:
    """f <~ g: the partition of g refines that of f."""
    if f.domain.points != g.domain.points:
        raise InputError("refines() needs a common domain")
    return g.partition.refines(f.partition)


def equivalent(f: NilMap, g: NilMap) -> bool:
    return refines(f, g) and refines(g, f)


def is_isomorphism(f: NilMap, nmax: int | None = None) -> bool:
    return f.is_bijective() and bool(is_morphism(f, nmax)) and bool(is_morphism(f.inverse(), nmax))


def find_isomorphism(X: Nilspace, Y: Nilspace, nmax: int | None = None) -> NilMap | None:
    """A cube-preserving bijection X -> Y with cube-preserving inverse, by
    backtracking over point assignments; None if there is none."""
    if X.size != Y.size:
        return None
    nmax = max(X.nmax, Y.nmax) if nmax is None else nmax
    for n in range(nmax + 1):
        if len(X.cubes(n)) != len(Y.cubes(n)):
            return None
    # bucket each cube by the largest point index it uses
    buckets: list[list] = [[] for _ in range(X.size)]
    for n in range(1, nmax + 1):
        for q in X.cubes(n):
            buckets[max(q)].append(q)
    sets = {n: Y.cube_set(n) for n in range(nmax + 1)}
    assign = [-1] * X.size
    used = [False] * Y.size

    def rec(i: int) -> bool:
        if i == X.size:
            return True
        for y in range(Y.size):
            if used[y]:
                continue
            assign[i] = y
            ok = True
            for q in buckets[i]:
                n = len(q).bit_length() - 1
                if tuple(assign[x] for x in q) not in sets[n]:
                    ok = False
                    break
            if ok:
                used[y] = True
                if rec(i + 1):
                    return True
                used[y] = False
        assign[i] = -1
        return False

    if not rec(0):
        return None
    # equal cube counts + injective image on cubes => bijection on cube sets
    return NilMap(X, Y, tuple(assign), name="iso")
