"""Property-based invariants across modules."""
import json

from hypothesis import given, settings, strategies as st

import oracle
from nilsys import cube as cb
from nilsys import dynamics as dyn
from nilsys import instances as inst
from nilsys import maps as mp
from nilsys import nilspace as ns
from nilsys import refine as rf
from nilsys.document import Context
from nilsys.grp import cyclic

SMALL_FAC = [fac for _, fac in inst.CORPUS if len(oracle.points(fac)) <= 8]
small_facs = st.sampled_from(SMALL_FAC)
small_spaces = small_facs.map(lambda fac: inst.product(*fac))
FEW = settings(max_examples=25)


def maps_between(X, Y):
    return st.lists(st.integers(0, Y.size - 1), min_size=X.size, max_size=X.size).map(
        lambda t: mp.NilMap(X, Y, tuple(t)))


@FEW
@given(small_facs)
def test_corpus_spaces_are_nilspaces(fac):
    X = inst.product(*fac)
    assert ns.verify_axioms(X)
    assert ns.step(X) == oracle.step(fac)


@FEW
@given(small_spaces, st.data())
def test_fibration_criteria_agree(X, data):
    Y = data.draw(st.sampled_from([f.codomain for f in inst.fibrations_from(X)]))
    f = data.draw(maps_between(X, Y))
    if not mp.is_morphism(f):
        return
    nmax = max(X.nmax, Y.nmax)
    a = mp.corner_lifting(f, nmax).verdict
    b = mp.fiber_to_fiber(f, nmax - 1).verdict
    assert a == b


@FEW
@given(small_spaces, st.data())
def test_translations_form_a_group(X, data):
    T = inst.translations_of(X)
    a, b = data.draw(st.sampled_from(T)), data.draw(st.sampled_from(T))
    ab = mp.NilMap(X, X, tuple(a.idx[j] for j in b.idx))
    assert mp.is_translation(X, ab)
    if X.size <= 8:
        inv = [0] * X.size
        for x, y in enumerate(a.idx):
            inv[y] = x
        assert mp.is_translation(X, mp.NilMap(X, X, tuple(inv)))


@FEW
@given(small_spaces, st.data())
def test_translations_are_morphisms(X, data):
    a = data.draw(st.sampled_from(inst.translations_of(X)))
    assert mp.is_morphism(a)


@FEW
@given(small_spaces, st.data())
def test_consistency_is_closed_under_composition(X, data):
    T = inst.translations_of(X)
    f = data.draw(st.sampled_from(inst.fibrations_from(X)))
    a, b = data.draw(st.sampled_from(T)), data.draw(st.sampled_from(T))
    ab = mp.NilMap(X, X, tuple(a.idx[j] for j in b.idx))
    if dyn.is_consistent(f, a) and dyn.is_consistent(f, b):
        assert dyn.is_consistent(f, ab)
        ha, hb = dyn.induced_translation(f, a), dyn.induced_translation(f, b)
        hab = dyn.induced_translation(f, ab, check=False)
        assert hab.idx == tuple(ha.idx[j] for j in hb.idx)


@FEW
@given(small_spaces, st.data())
def test_induced_translation_is_equivariant(X, data):
    f = data.draw(st.sampled_from(inst.fibrations_from(X)))
    a = data.draw(st.sampled_from(inst.translations_of(X)))
    if dyn.is_consistent(f, a):
        b = dyn.induced_translation(f, a)
        for x in X.points:
            assert f(a(x)) == b(f(x))
        assert mp.is_translation(f.codomain, b)


@FEW
@given(small_spaces, st.data())
def test_diagonal_partition_is_the_meet(X, data):
    fs = inst.fibrations_from(X)
    f, g = data.draw(st.sampled_from(fs)), data.draw(st.sampled_from(fs))
    D = mp.diagonal([f, g])
    assert D.partition == f.partition.meet(g.partition)
    assert mp.refines(f, D) and mp.refines(g, D)


@FEW
@given(small_spaces, st.data())
def test_common_refinement_contract(X, data):
    fs = inst.fibrations_from(X)
    f, g = data.draw(st.sampled_from(fs)), data.draw(st.sampled_from(fs))
    cr = rf.common_refinement([f, g])
    assert mp.is_fibration(cr.fibration)
    for m, h in zip([f, g], cr.factors):
        assert mp.compose(h, cr.fibration).idx == m.idx
        assert mp.is_fibration(h)


@FEW
@given(small_spaces, st.integers(0, 2))
def test_factor_is_idempotent(X, n):
    Xn, pi = ns.factor(X, n)
    assert mp.is_fibration(pi)
    assert ns.step(Xn) <= n
    Xnn, pi2 = ns.factor(Xn, n)
    assert Xnn.size == Xn.size


@settings(max_examples=15)
@given(st.integers(0, 50))
def test_fiber_product_is_the_equalizer(seed):
    import random

    p1, p2 = inst.random_fiber_product_instance(random.Random(seed))
    fp = rf.fiber_product(p1, p2)
    assert mp.compose(p1, fp.p1).idx == mp.compose(p2, fp.p2).idx
    want = {x1 + x2 for x1 in p1.domain.points for x2 in p2.domain.points if p1(x1) == p2(x2)}
    assert set(fp.space.points) == want


@given(st.integers(1, 3), st.integers(1, 2), st.integers(2, 4), st.data())
def test_dk_cubes_have_vanishing_face_sums(n, k, m, data):
    X = inst.dk(m, k)
    q = data.draw(st.sampled_from(X.cubes(n)))
    G = cyclic(m)
    for f in cb.faces(n, k + 1) if k + 1 <= n else ():
        assert cb.sigma([X.points[q[i]] for i in f], G) == (0,)
    assert tuple(X.points[i] for i in q) in oracle.cubes(((m, k),), n)


@FEW
@given(small_facs, st.data())
def test_document_tables_round_trip(fac, data):
    X = inst.product(*fac)
    f = data.draw(st.sampled_from(inst.fibrations_from(X)))
    doc = {"spaces": {}, "maps": {}}
    # rebuild the space and the fibration's quotient through a document
    names = []
    for j, (m, k) in enumerate(fac):
        doc["spaces"][f"F{j}"] = {"dk": [[m], k]}
        names.append(f"F{j}")
    doc["spaces"]["X"] = {"product": names} if len(names) > 1 else {"sub": {"space": "F0", "points": [list(p) for p in X.points]}}
    doc["spaces"]["Y"] = {"quotient": {"space": "X", "cells": [[list(X.points[i]) for i in b] for b in f.partition.blocks]}}
    ctx = Context(json.loads(json.dumps(doc)))
    Xd = ctx.space("X")
    assert Xd.points == X.points
    Yd = ctx.space("Y")
    pi = ctx.map("Y.pi")
    assert pi.partition == f.partition
    assert mp.find_isomorphism(Yd, f.codomain) is not None
