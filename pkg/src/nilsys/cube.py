"""Discrete cubes {0,1}^n, cube morphisms, faces and the Gray-code alternating sum.

Vertices of {0,1}^n are enumerated in lexicographic order of their bit tuples,
so vertex ``(b0, ..., b_{n-1})`` has index ``sum(b_i << (n-1-i))`` and the
all-ones vertex 1^n is last.  A map on the cube is stored as a tuple of values
in this vertex order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .grp import Group, GroupElem
from .report import InputError

Vertex = tuple

CONST0 = ("0",)
CONST1 = ("1",)


def coord(i: int) -> tuple:
    return ("x", i)


def negcoord(i: int) -> tuple:
    return ("~x", i)


@lru_cache(maxsize=None)
def vertices(n: int) -> tuple[Vertex, ...]:
    return tuple(itertools.product((0, 1), repeat=n))


def vertex_index(v: Sequence[int]) -> int:
    i = 0
    for b in v:
        i = (i << 1) | b
    return i


def weight(v: Sequence[int]) -> int:
    return sum(v)


def vertex_str(v: Sequence[int]) -> str:
    return "".join(str(b) for b in v)


@dataclass(frozen=True)
class CubeMorphism:
    """Map {0,1}^m -> {0,1}^n; each output coordinate is 0, 1, x_i or 1-x_i."""

    src_dim: int
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(tuple(e) for e in self.entries))
        for e in self.entries:
            if e in (CONST0, CONST1):
                continue
            if len(e) != 2 or e[0] not in ("x", "~x") or not 0 <= e[1] < self.src_dim:
                raise InputError(f"bad cube-morphism entry {e!r} for source dimension {self.src_dim}")

    @property
    def dst_dim(self) -> int:
        return len(self.entries)

    def __call__(self, v: Vertex) -> Vertex:
        return apply(self, v)

    @property
    def index_map(self) -> tuple[int, ...]:
        """Target vertex index for each source vertex index."""
        return _index_map(self)

    def is_injective(self) -> bool:
        return len(set(self.index_map)) == 2 ** self.src_dim

    def to_json(self) -> list:
        return [self.src_dim, ["".join(map(str, e)) for e in self.entries]]

    def __repr__(self) -> str:
        parts = []
        for e in self.entries:
            parts.append(e[0] if len(e) == 1 else f"{e[0]}{e[1]}")
        return f"CubeMorphism({self.src_dim}->{self.dst_dim}: {', '.join(parts)})"


@lru_cache(maxsize=None)
def _index_map(phi: CubeMorphism) -> tuple[int, ...]:
    return tuple(vertex_index(apply(phi, v)) for v in vertices(phi.src_dim))


def apply(phi: CubeMorphism, v: Vertex) -> Vertex:
    if len(v) != phi.src_dim:
        raise InputError(f"vertex {v} has dimension {len(v)}, morphism expects {phi.src_dim}")
    out = []
    for e in phi.entries:
        if e == CONST0:
            out.append(0)
        elif e == CONST1:
            out.append(1)
        elif e[0] == "x":
            out.append(v[e[1]])
        else:
            out.append(1 - v[e[1]])
    return tuple(out)


def compose(psi: CubeMorphism, phi: CubeMorphism) -> CubeMorphism:
    """``psi o phi``."""
    if phi.dst_dim != psi.src_dim:
        raise InputError("cube morphism dimensions do not compose")
    entries = []
    for e in psi.entries:
        if e in (CONST0, CONST1):
            entries.append(e)
            continue
        inner = phi.entries[e[1]]
        if e[0] == "x":
            entries.append(inner)
        elif inner == CONST0:
            entries.append(CONST1)
        elif inner == CONST1:
            entries.append(CONST0)
        else:
            entries.append(("~x" if inner[0] == "x" else "x", inner[1]))
    return CubeMorphism(phi.src_dim, tuple(entries))


def identity(n: int) -> CubeMorphism:
    return CubeMorphism(n, tuple(coord(i) for i in range(n)))


def precompose(values: Sequence, phi: CubeMorphism) -> tuple:
    """The map ``q o phi`` for ``q`` given by its values in vertex order."""
    return tuple(values[i] for i in phi.index_map)


@lru_cache(maxsize=None)
def face_maps(m: int, n: int) -> tuple[CubeMorphism, ...]:
    """Injective morphisms {0,1}^m -> {0,1}^n without reflections.

    Output coordinates are the m source coordinates placed on distinct target
    coordinates (in any order) and constants elsewhere, giving
    n!/(n-m)! * 2^(n-m) maps.
    """
    if m > n:
        raise InputError(f"no face maps from dimension {m} into {n}")
    out = []
    for placed in itertools.permutations(range(n), m):
        free = [j for j in range(n) if j not in placed]
        for consts in itertools.product((CONST0, CONST1), repeat=len(free)):
            entries: list = [None] * n
            for src, tgt in enumerate(placed):
                entries[tgt] = coord(src)
            for j, c in zip(free, consts):
                entries[j] = c
            out.append(CubeMorphism(m, tuple(entries)))
    return tuple(out)


@lru_cache(maxsize=None)
def faces(n: int, d: int) -> tuple[tuple[int, ...], ...]:
    """Vertex-index lists of the d-dimensional faces of {0,1}^n, as sets.

    One entry per face (free coordinates in increasing order), vertices
    listed in the face's own lexicographic order.
    """
    out = []
    for free in itertools.combinations(range(n), d):
        fixed = [j for j in range(n) if j not in free]
        for vals in itertools.product((0, 1), repeat=len(fixed)):
            idx = []
            for u in vertices(d):
                v = [0] * n
                for j, b in zip(fixed, vals):
                    v[j] = b
                for j, b in zip(free, u):
                    v[j] = b
                idx.append(vertex_index(v))
            out.append(tuple(idx))
    return tuple(out)


@lru_cache(maxsize=None)
def faces_with_top(n: int, top: int) -> tuple[tuple[int, ...], ...]:
    """All faces of dimension >= 1 whose largest vertex is ``top``.

    The face with free coordinates S and the remaining coordinates fixed to
    those of ``top`` has ``top`` as its maximum exactly when top is 1 on S.
    Such a face contains 1^n only if top == 1^n.
    """
    v = vertices(n)[top]
    ones = [j for j in range(n) if v[j] == 1]
    out = []
    for d in range(1, len(ones) + 1):
        for free in itertools.combinations(ones, d):
            idx = []
            for u in vertices(d):
                w = list(v)
                for j, b in zip(free, u):
                    w[j] = b
                idx.append(vertex_index(w))
            out.append(tuple(idx))
    return tuple(out)


@lru_cache(maxsize=None)
def codim1_faces(n: int) -> tuple[tuple[int, int], ...]:
    """Codimension-1 faces as (coordinate, value) pairs, coordinate-major."""
    return tuple((i, c) for i in range(n) for c in (0, 1))


@lru_cache(maxsize=None)
def face_vertices(n: int, face: tuple[int, int]) -> tuple[int, ...]:
    """Vertex indices of the codimension-1 face {v_i = c}, ascending."""
    i, c = face
    return tuple(k for k, v in enumerate(vertices(n)) if v[i] == c)


def face_vertex_set(n: int, face: tuple[int, int]) -> frozenset[int]:
    i, c = face
    return frozenset(k for k, v in enumerate(vertices(n)) if v[i] == c)


def face_str(face: tuple[int, int]) -> str:
    return f"{{v{face[0] + 1}={face[1]}}}"


@lru_cache(maxsize=None)
def signs(n: int) -> tuple[int, ...]:
    return tuple(-1 if weight(v) % 2 else 1 for v in vertices(n))


def sigma(values: Sequence[GroupElem], G: Group) -> GroupElem:
    """Gray-code alternating sum: sum over v of (-1)^|v| q(v)."""
    N = len(values)
    n = N.bit_length() - 1
    if 1 << n != N:
        raise InputError(f"cube map has {N} values, not a power of two")
    acc = [0] * len(G.orders)
    for s, x in zip(signs(n), values):
        for j, a in enumerate(x):
            acc[j] += s * a
    return G.reduce(acc)


def cube_map(n: int, assignment: dict, default=None) -> tuple:
    """Build a value tuple from a {vertex-string or vertex tuple: value} dict."""
    out = []
    for v in vertices(n):
        key_s = vertex_str(v)
        if key_s in assignment:
            out.append(assignment[key_s])
        elif v in assignment:
            out.append(assignment[v])
        elif default is not None:
            out.append(default)
        else:
            raise InputError(f"cube map missing vertex {key_s}")
    return tuple(out)


@lru_cache(maxsize=None)
def generating_morphisms(n: int, nmax: int) -> tuple[tuple[str, CubeMorphism], ...]:
    """Cube morphisms into {0,1}^n that generate, under composition, every
    cube morphism between dimensions <= nmax.

    Adjacent transpositions, reflection of the first coordinate, restriction
    to the faces x_{n-1}=0/1, the diagonal x_{n-1}=x_{n-2} and the
    degeneracy that ignores a new last coordinate.
    """
    out = []
    for i in range(n - 1):
        e = [coord(j) for j in range(n)]
        e[i], e[i + 1] = e[i + 1], e[i]
        out.append((f"swap({i},{i + 1})", CubeMorphism(n, tuple(e))))
    if n >= 1:
        e = [coord(j) for j in range(n)]
        e[0] = negcoord(0)
        out.append(("reflect(0)", CubeMorphism(n, tuple(e))))
        for c, const in ((0, CONST0), (1, CONST1)):
            e = [coord(j) for j in range(n - 1)] + [const]
            out.append((f"restrict(x{n - 1}={c})", CubeMorphism(n - 1, tuple(e))))
    if n >= 2:
        e = [coord(j) for j in range(n - 1)] + [coord(n - 2)]
        out.append((f"diagonal(x{n - 2}=x{n - 1})", CubeMorphism(n - 1, tuple(e))))
    if n + 1 <= nmax:
        e = [coord(j) for j in range(n)]
        out.append(("degenerate", CubeMorphism(n + 1, tuple(e))))
    return tuple(out)


def all_morphisms(m: int, n: int):
    """Every cube morphism {0,1}^m -> {0,1}^n ((2+2m)^n of them)."""
    choices = [CONST0, CONST1] + [coord(i) for i in range(m)] + [negcoord(i) for i in range(m)]
    for entries in itertools.product(choices, repeat=n):
        yield CubeMorphism(m, entries)


def monomials(n: int, max_degree: int) -> list[tuple[int, ...]]:
    """Indicator vectors of the upper faces {v_S = 1}, |S| <= max_degree.

    As integer-valued functions on {0,1}^n these span the degree <= k
    polynomial maps, i.e. the cubes of D_k.
    """
    out = []
    for d in range(0, min(n, max_degree) + 1):
        for S in itertools.combinations(range(n), d):
            out.append(tuple(1 if all(v[j] for j in S) else 0 for v in vertices(n)))
    return out
