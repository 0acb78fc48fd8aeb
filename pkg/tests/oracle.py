"""Independent brute-force reference implementations.

Nothing here imports nilsys.  A space is a list of (m, k) pairs standing for
D_k(Z_m) x ... ; a point is a tuple with one coordinate per factor.  A cube
of D_k(Z_m) is a map {0,1}^n -> Z_m whose alternating sum vanishes on every
(k+1)-dimensional face; cubes of a product are tuples of factor cubes.
"""
from __future__ import annotations

import itertools
from functools import lru_cache


def verts(n):
    return list(itertools.product((0, 1), repeat=n))


def points(spec):
    return list(itertools.product(*[range(m) for m, _ in spec]))


def _face_sums_vanish(vals, n, k, m):
    vs = verts(n)
    pos = {v: i for i, v in enumerate(vs)}
    for S in itertools.combinations(range(n), k + 1):
        rest = [j for j in range(n) if j not in S]
        for fixed in itertools.product((0, 1), repeat=len(rest)):
            total = 0
            for bits in itertools.product((0, 1), repeat=k + 1):
                v = [0] * n
                for j, b in zip(rest, fixed):
                    v[j] = b
                for j, b in zip(S, bits):
                    v[j] = b
                total += (-1) ** sum(bits) * vals[pos[tuple(v)]]
            if total % m:
                return False
    return True


@lru_cache(maxsize=None)
def factor_cubes(m, k, n):
    """All cubes of D_k(Z_m) in dimension n, by filtering every map."""
    return tuple(vals for vals in itertools.product(range(m), repeat=2 ** n)
                 if _face_sums_vanish(vals, n, k, m))


@lru_cache(maxsize=None)
def cubes(spec, n):
    """C^n of the product, as tuples of points in lexicographic vertex order."""
    spec = tuple(spec)
    per = [factor_cubes(m, k, n) for m, k in spec]
    out = []
    for combo in itertools.product(*per):
        out.append(tuple(tuple(c[v] for c in combo) for v in range(2 ** n)))
    return frozenset(out)


def is_cube(spec, q):
    n = (len(q)).bit_length() - 1
    return tuple(q) in cubes(tuple(spec), n)


def step(spec):
    return max(k for _, k in spec)


def is_translation(spec, alpha: dict):
    """alpha modified on any codimension-1 face maps cubes to cubes, n <= step+1."""
    spec = tuple(spec)
    top = step(spec) + 1
    for n in range(1, top + 1):
        cs = cubes(spec, n)
        vs = verts(n)
        for q in cs:
            for i in range(n):
                for c in (0, 1):
                    r = tuple(alpha[p] if v[i] == c else p for v, p in zip(vs, q))
                    if r not in cs:
                        return False
    return True


def translations(spec):
    pts = points(spec)
    out = []
    for img in itertools.permutations(pts):
        a = dict(zip(pts, img))
        if is_translation(spec, a):
            out.append(a)
    return out


def is_morphism(specX, specY, f: dict, nmax):
    for n in range(nmax + 1):
        for q in cubes(tuple(specX), n):
            if tuple(f[p] for p in q) not in cubes(tuple(specY), n):
                return False
    return True


def is_fibration(specX, specY, f: dict, nmax):
    """Morphism plus corner lifting; corners are restrictions of cubes (the
    domain is a nilspace, so every corner completes)."""
    if not is_morphism(specX, specY, f, nmax):
        return False
    if set(f.values()) != set(points(specY)):
        return False
    ptsY = points(specY)
    for n in range(1, nmax + 1):
        CX, CY = cubes(tuple(specX), n), cubes(tuple(specY), n)
        completions = {}
        for q in CX:
            completions.setdefault(q[:-1], set()).add(f[q[-1]])
        for corner, lifted in completions.items():
            img = tuple(f[p] for p in corner)
            for y in ptsY:
                if img + (y,) in CY and y not in lifted:
                    return False
    return True


def is_consistent(f: dict, alpha: dict):
    pts = list(f)
    return all(f[alpha[x]] == f[alpha[y]] for x in pts for y in pts if f[x] == f[y])


def brute_count(spec, n):
    """|C^n| by testing every map {0,1}^n -> X coordinate by coordinate."""
    spec = tuple(spec)
    total = 0
    for q in itertools.product(points(spec), repeat=2 ** n):
        if all(_face_sums_vanish([p[j] for p in q], n, k, m) for j, (m, k) in enumerate(spec)):
            total += 1
    return total
