import random

import pytest

from nilsys import dynamics as dyn
from nilsys import instances as inst
from nilsys import maps as mp
from nilsys import nilspace as ns
from nilsys import refine as rf
from nilsys.report import InputError, StructureError


@pytest.fixture(scope="module")
def ex():
    return inst.example_2_1()


def idmap(X, Y):
    return mp.NilMap(X, Y, {p: p for p in X.points}, name="id")


# -- fiber products --------------------------------------------------------------

def test_fiber_product_over_a_point_is_the_product():
    X1, X2 = inst.dk(2, 2), inst.dk(2, 1)
    fp = rf.fiber_product(mp.to_point(X1), mp.to_point(X2))
    assert fp.space.size == 4
    assert mp.find_isomorphism(fp.space, inst.x_star()) is not None
    assert rf.check_complete_then_lift(fp)


def test_fiber_product_of_identities_is_the_diagonal(ex):
    X = ex["X"]
    fp = rf.fiber_product(mp.identity(X), mp.identity(X))
    assert fp.space.size == 4
    assert mp.find_isomorphism(fp.space, X) is not None
    assert fp.p1.is_bijective() and fp.p2.is_bijective()


def test_fiber_product_requires_fibrations():
    D1, D2 = inst.dk(2, 1), inst.dk(2, 2)
    with pytest.raises((InputError, StructureError)):
        rf.fiber_product(idmap(D1, D2), mp.identity(D2))


def test_fiber_product_over_a_nontrivial_base(ex):
    fp = rf.fiber_product(ex["pi1"], ex["pi1"])
    assert fp.space.size == 8
    assert rf.check_complete_then_lift(fp)
    assert mp.is_fibration(fp.p1) and mp.is_fibration(fp.p2)


@pytest.mark.parametrize("seed", range(5))
def test_random_fiber_products(seed):
    p1, p2 = inst.random_fiber_product_instance(random.Random(seed))
    fp = rf.fiber_product(p1, p2)
    assert fp.space.size <= 16 * 16
    assert ns.verify_axioms(fp.space)
    assert rf.check_complete_then_lift(fp)


# -- coarsest factors and common refinements -----------------------------------------------

def test_coarsest_factor_of_a_fibration_is_itself(ex):
    fac = rf.coarsest_fibration_factor(ex["psi"])
    assert mp.equivalent(fac.first, ex["psi"])
    assert fac.mid.size == 2


def test_coarsest_factor_of_a_non_fibration():
    D1, D2 = inst.dk(2, 1), inst.dk(2, 2)
    m = idmap(D1, D2)
    fac = rf.coarsest_fibration_factor(m)
    assert fac.first.is_bijective()
    assert mp.compose(fac.second, fac.first).idx == m.idx


def test_coarsest_factor_of_a_constant(ex):
    fac = rf.coarsest_fibration_factor(mp.to_point(ex["X"]))
    assert fac.mid.size == 1


def test_greedy_agrees_with_exhaustive_on_small_cases(ex):
    for f in inst.fibrations_from(ex["X"]):
        a = rf.coarsest_fibration_factor(f)
        b = rf.coarsest_fibration_factor(f, bound=0)
        assert a.report.details["search"] == "exhaustive"
        assert b.report.details["search"] == "greedy"
        assert len(a.first.partition) == len(b.first.partition)


def test_common_refinement_examples(ex):
    cr = rf.common_refinement([ex["psi"]])
    assert mp.equivalent(cr.fibration, ex["psi"])
    cr = rf.common_refinement([ex["psi"], ex["pi1"]])
    assert cr.fibration.is_bijective()
    assert mp.find_isomorphism(cr.mid, ex["X"]) is not None
    cr = rf.common_refinement([ex["pi1"], ex["pi1"]])
    assert mp.equivalent(cr.fibration, ex["pi1"])
    for m, f in zip([ex["pi1"], ex["pi1"]], cr.factors):
        assert mp.compose(f, cr.fibration).idx == m.idx


def test_descend(ex):
    h = rf.descend(ex["pi1"], mp.to_point(ex["X"]))
    assert h.domain.size == 2
    with pytest.raises(InputError):
        rf.descend(ex["pi1"], ex["psi"])


# -- the diagonal-product fibration -------------------------------------------------------

def test_delta_fibration_on_x_star(ex):
    W = ex["X1"]
    Y1 = ns.factor(ex["Y"], 1)[0]
    psi3 = mp.constant(W, Y1, Y1.points[0])
    res = rf.delta_fibration(ex["psi"], ex["pi1"], psi3)
    assert res.report
    assert res.psi.is_bijective()
    assert all(res.report.details["claims"].values())
    assert len(res.report.details["claims"]) == 5
    assert res.factor_iso is not None and res.group_iso is not None


def test_delta_fibration_with_induced_maps(ex):
    # psi2 = pi_{k-1} and psi3 = (psi1)_(k-1) always fit
    X = ex["X"]
    for f in inst.fibrations_from(X):
        res = rf.delta_fibration(f, ex["pi1"], mp.induced_factor_map(f, 1))
        assert res.report, f.name


def test_delta_fibration_over_a_point_base(ex):
    X = ex["X"]
    W = ns.point_space()
    to_w = mp.to_point(X)
    Y1 = ns.factor(ex["Y"], 1)[0]
    res = rf.delta_fibration(ex["psi"], to_w, mp.constant(W, Y1, Y1.points[0]))
    assert res.report
    assert res.space.size == ex["Y"].size
    assert mp.find_isomorphism(res.space, ex["Y"]) is not None


def test_delta_fibration_precondition(ex):
    with pytest.raises(InputError):
        rf.delta_fibration(ex["psi"], mp.identity(ex["X"]), mp.identity(ex["X"]))


def test_ker_witness_examples(ex):
    X = ex["X"]
    c = mp.to_point(X)
    assert rf.ker_witness(c, ex["psi"], (0, 0), (0, 1)) == (1,)
    assert rf.ker_witness(c, ex["psi"], (1, 0), (1, 0)) == (0,)
    ident = mp.identity(X)
    for x in X.points:
        for y in X.points:
            z = rf.ker_witness(ident, ident, x, y)
            assert z is None or z == (0,)
    with pytest.raises(InputError):
        rf.ker_witness(ex["psi"], c, (0, 0), (0, 1))


def test_ker_witness_contract_on_random_instances():
    rng = random.Random(3)
    related = 0
    for _ in range(30):
        X, psi, R = inst.random_refinement_pair(rng)
        x, y = rng.choice(X.points), rng.choice(X.points)
        z = rf.ker_witness(psi, R, x, y)
        if z is not None:
            related += 1
            _, L, _ = ns.structure_group(X, ns.step(X)) if ns.step(X) else (None, None, None)
            if L is not None:
                assert R(x) == R(X.points[L.act(X.idx(y), z)])
    assert related > 0


# -- refinement and towers --------------------------------------------------------------

def test_h_refinement_on_psi_star(ex):
    res = rf.h_consistent_refinement(ex["psi"], [ex["alpha"]])
    assert res.psi.is_bijective()
    assert dyn.is_consistent(res.psi, ex["alpha"])
    assert mp.is_fibration(res.psi) and mp.is_fibration(res.p)
    assert mp.compose(res.p, res.psi).idx == ex["psi"].idx


def test_h_refinement_with_no_translations(ex):
    res = rf.h_consistent_refinement(ex["psi"], [])
    assert res.psi is ex["psi"]
    assert res.p.idx == tuple(range(ex["psi"].codomain.size))


def test_h_refinement_of_an_already_consistent_map(ex):
    res = rf.h_consistent_refinement(ex["pi1"], [ex["alpha"]])
    assert mp.compose(res.p, res.psi).idx == ex["pi1"].idx
    assert dyn.is_consistent(res.psi, ex["alpha"])


@pytest.mark.parametrize("seed", range(4))
def test_h_refinement_random(seed):
    X, psi, H = inst.random_h_instance(random.Random(seed))
    res = rf.h_consistent_refinement(psi, H)
    assert mp.compose(res.p, res.psi).idx == psi.idx
    for a in H:
        assert dyn.is_consistent(res.psi, a)


def test_tower_examples(ex):
    X, a = ex["X"], ex["alpha"]
    tw = rf.consistent_tower(X, [a], [ex["psi"]])
    assert len(tw.stages) == 1 and dyn.is_consistent(tw.stages[0], a)
    assert mp.compose(tw.factors[0], tw.stages[0]).idx == ex["psi"].idx
    assert rf.consistent_tower(X, [a], []).stages == []
    tw = rf.consistent_tower(X, [a], [ex["pi1"], ex["psi"]])
    assert len(tw.stages) == 2
    assert mp.is_fibration(tw.connectors[0, 1])
    assert mp.refines(ex["pi1"], tw.stages[1]) and mp.refines(ex["psi"], tw.stages[1])
    for i in range(2):
        for j in range(i, 2):
            assert mp.compose(tw.connectors[i, j], tw.stages[j]).idx == tw.stages[i].idx
