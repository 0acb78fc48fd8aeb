import itertools
import math

import pytest
from hypothesis import given, strategies as st

from nilsys import cube as cb
from nilsys.grp import cyclic
from nilsys.report import InputError


def test_vertex_order_is_lexicographic():
    assert cb.vertices(2) == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert cb.vertex_index((1, 0, 1)) == 5
    assert cb.vertices(3)[-1] == (1, 1, 1)


def test_sigma_examples():
    Z2 = cyclic(2)
    # q(00)=q(01)=q(10)=0, q(11)=1 sums to 1
    assert cb.sigma([(0,), (0,), (0,), (1,)], Z2) == (1,)
    assert cb.sigma([(1,), (1,), (1,), (1,)], Z2) == (0,)
    assert cb.sigma([(1,), (2,)], cyclic(5)) == (4,)


def test_sigma_rejects_non_power_of_two():
    with pytest.raises(InputError):
        cb.sigma([(0,)] * 3, cyclic(2))


@pytest.mark.parametrize("n,d", [(2, 1), (3, 1), (3, 2), (4, 2), (4, 0)])
def test_face_counts(n, d):
    assert len(cb.faces(n, d)) == math.comb(n, d) * 2 ** (n - d)
    for f in cb.faces(n, d):
        assert len(set(f)) == 2 ** d


def test_face_maps_count():
    # n!/(n-m)! * 2^(n-m)
    assert len(cb.face_maps(1, 2)) == 2 * 2
    assert len(cb.face_maps(2, 3)) == 6 * 2
    with pytest.raises(InputError):
        cb.face_maps(3, 2)


def test_faces_with_top_never_contain_larger_vertices():
    n = 3
    for top in range(2 ** n):
        for f in cb.faces_with_top(n, top):
            assert max(f) == top


def test_codim1_face_vertices():
    assert cb.face_vertices(2, (0, 1)) == (2, 3)
    assert cb.face_vertices(2, (1, 0)) == (0, 2)
    assert cb.face_str((0, 1)) == "{v1=1}"


def test_bad_morphism_entry():
    with pytest.raises(InputError):
        cb.CubeMorphism(1, (("x", 3),))


def test_all_morphisms_count():
    assert sum(1 for _ in cb.all_morphisms(1, 2)) == (2 + 2) ** 2


entry = st.integers(0, 5)


def morphisms(m, n):
    choices = [cb.CONST0, cb.CONST1] + [cb.coord(i) for i in range(m)] + [cb.negcoord(i) for i in range(m)]
    return st.lists(st.sampled_from(choices), min_size=n, max_size=n).map(lambda e: cb.CubeMorphism(m, tuple(e)))


@given(st.data())
def test_precompose_respects_composition(data):
    l, m, n = (data.draw(st.integers(0, 3)) for _ in range(3))
    phi = data.draw(morphisms(l, m))
    psi = data.draw(morphisms(m, n))
    q = tuple(range(2 ** n))
    lhs = cb.precompose(cb.precompose(q, psi), phi)
    rhs = cb.precompose(q, cb.compose(psi, phi))
    assert lhs == rhs


@given(st.integers(0, 4))
def test_identity_morphism(n):
    q = tuple(range(2 ** n))
    assert cb.precompose(q, cb.identity(n)) == q


def test_monomials_span_dk():
    # the Z-span of the degree <= 1 monomials on {0,1}^2 reduced mod 2 has 2^3 maps
    mons = cb.monomials(2, 1)
    span = {tuple(sum(c * m[v] for c, m in zip(cs, mons)) % 2 for v in range(4))
            for cs in itertools.product(range(2), repeat=len(mons))}
    assert len(span) == 8
    assert all(cb.sigma([(x,) for x in q], cyclic(2)) == (0,) for q in span)


def test_cube_map_from_strings():
    q = cb.cube_map(2, {"11": 5}, default=0)
    assert q == (0, 0, 0, 5)
    with pytest.raises(InputError):
        cb.cube_map(1, {"0": 1})


def test_generating_morphisms_land_in_dimension():
    for n in range(4):
        for label, phi in cb.generating_morphisms(n, 3):
            assert phi.dst_dim == n, label
