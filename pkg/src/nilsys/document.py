"""Scenario documents: JSON files naming groups, spaces, maps, metrics and a
list of tasks.  :class:`Context` resolves names lazily; :func:`run_task`
executes one task and returns its :class:`Report`.
"""
from __future__ import annotations

import json
import random
from fractions import Fraction
from importlib import resources
from typing import Any

from . import cube as cb
from . import dynamics as dyn
from . import maps as mp
from . import nilspace as ns
from . import refine as rf
from .grp import Group
from .report import (
    ERROR,
    FAIL,
    PASS,
    InputError,
    NilspaceError,
    NotConsistent,
    Report,
    ResourceError,
    jsonable,
    timed,
)

SCENARIOS = ("example-2-1", "example-2-2-m2", "example-2-2-m3", "lemma-4-4-demo", "theorem-4-2-demo")


class DocumentError(InputError):
    pass


def parse_document(text: str, source: str = "<document>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"{source}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise DocumentError(f"{source}: top level must be an object")
    unknown = set(doc) - {"name", "description", "groups", "spaces", "maps", "translations",
                          "metrics", "tasks"}
    if unknown:
        raise DocumentError(f"{source}: unknown sections {sorted(unknown)}")
    return doc


def load_document(path: str) -> dict:
    if path.startswith("scenario:"):
        return scenario_document(path.split(":", 1)[1])
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise DocumentError(f"cannot read {path}: {e.strerror}") from None
    return parse_document(text, path)


def scenario_document(name: str) -> dict:
    if name not in SCENARIOS:
        raise DocumentError(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}")
    text = resources.files("nilsys").joinpath("scenarios", f"{name}.json").read_text()
    return parse_document(text, f"scenario:{name}")


def _point(p) -> tuple:
    if isinstance(p, int):
        return (p,)
    if not isinstance(p, list) or not all(isinstance(a, int) for a in p):
        raise DocumentError(f"a point must be a list of integers, got {p!r}")
    return tuple(p)


def _fraction(w) -> Fraction:
    try:
        return Fraction(w)
    except (ValueError, TypeError):
        raise DocumentError(f"bad rational {w!r}") from None


class Context:
    """Name resolution for one document; objects are built on first use."""

    def __init__(self, doc: dict, nmax: int | None = None, budget: int | None = None,
                 seed: int = 0, paranoid: int | None = None):
        self.doc = doc
        self.nmax = nmax
        self.budget = budget
        self.seed = seed
        self.paranoid = paranoid
        self._groups: dict[str, Group] = {}
        self._spaces: dict[str, ns.Nilspace] = {}
        self._maps: dict[str, mp.NilMap] = {}
        self._fps: dict[str, rf.FiberProduct] = {}
        self._busy: set = set()
        self._budgets: dict[int, tuple] = {}
        self.defs = {**doc.get("maps", {}), **doc.get("translations", {})}

    # groups -----------------------------------------------------------------

    def group(self, g) -> Group:
        if isinstance(g, list):
            return Group(tuple(g))
        if isinstance(g, str):
            if g in self._groups:
                return self._groups[g]
            lit = self.doc.get("groups", {}).get(g)
            if lit is None:
                if g.startswith("Z") and g[1:].isdigit():
                    lit = [int(g[1:])]
                else:
                    raise DocumentError(f"unknown group {g!r}")
            G = Group(tuple(lit), name=g)
            self._groups[g] = G
            return G
        raise DocumentError(f"bad group literal {g!r}")

    # spaces -----------------------------------------------------------------

    def space(self, name: str) -> ns.Nilspace:
        if not isinstance(name, str):
            raise DocumentError(f"space reference must be a name, got {name!r}")
        if name in self._spaces:
            return self._spaces[name]
        spec = self.doc.get("spaces", {}).get(name)
        if spec is None:
            raise DocumentError(f"unknown space {name!r}")
        if name in self._busy:
            raise DocumentError(f"circular definition of {name!r}")
        self._busy.add(name)
        try:
            X = self._build_space(name, spec)
        finally:
            self._busy.discard(name)
        if self.budget is not None:
            # spaces may be shared through constructor caches; undone by release()
            self._budgets.setdefault(id(X), (X, X.budget))
            X.budget = self.budget
        self._spaces[name] = X
        return X

    def _build_space(self, name: str, spec: dict) -> ns.Nilspace:
        if not isinstance(spec, dict) or len(spec) != 1:
            raise DocumentError(f"space {name!r}: expected a single-key object")
        (kind, arg), = spec.items()
        if kind == "dk":
            G, k = self.group(arg[0]), int(arg[1])
            return ns.build_dk(G, k, name=name)
        if kind == "point":
            return ns.point_space(name)
        if kind == "product":
            parts = [self.space(a) for a in arg]
            X = parts[0]
            for Y in parts[1:]:
                X = ns.build_product(X, Y)
            return _renamed(X, name)
        if kind == "power":
            return _renamed(ns.build_power(self.space(arg[0]), int(arg[1])), name)
        if kind == "sub":
            X = self.space(arg["space"])
            return ns.build_sub(X, [_point(p) for p in arg["points"]], name=name)
        if kind == "quotient":
            X = self.space(arg["space"])
            cells = [[_point(p) for p in c] for c in arg["cells"]]
            Q, pi = ns.build_quotient(X, cells, name=name)
            self._maps.setdefault(f"{name}.pi", pi)
            return Q
        if kind == "factor":
            X = self.space(arg[0])
            Q, pi = ns.factor(X, int(arg[1]))
            self._maps.setdefault(f"{name}.pi", pi)
            return Q
        if kind == "fiber_product":
            fp = rf.fiber_product(self.map(arg[0]), self.map(arg[1]), name=name)
            self._fps[name] = fp
            self._maps.setdefault(f"{name}.p1", fp.p1)
            self._maps.setdefault(f"{name}.p2", fp.p2)
            return fp.space
        if kind == "remove_cubes":
            X = self.space(arg["space"])
            return ns.remove_cubes(X, [[_point(p) for p in c] for c in arg["cubes"]], name=name)
        raise DocumentError(f"space {name!r}: unknown construction {kind!r}")

    # maps -------------------------------------------------------------------

    def map(self, name: str) -> mp.NilMap:
        if not isinstance(name, str):
            raise DocumentError(f"map reference must be a name, got {name!r}")
        if name in self._maps:
            return self._maps[name]
        spec = self.defs.get(name)
        if spec is None:
            base = name.rsplit(".", 1)[0]
            if "." in name and base in self.doc.get("spaces", {}):
                self.space(base)
                if name in self._maps:
                    return self._maps[name]
            raise DocumentError(f"unknown map {name!r}")
        if name in self._busy:
            raise DocumentError(f"circular definition of {name!r}")
        self._busy.add(name)
        try:
            f = self._build_map(name, spec)
        finally:
            self._busy.discard(name)
        f.name = name
        self._maps[name] = f
        return f

    def _build_map(self, name: str, spec: dict) -> mp.NilMap:
        if "table" in spec:
            X, Y = self.space(spec["from"]), self.space(spec.get("to", spec["from"]))
            table = {}
            for row in spec["table"]:
                if not isinstance(row, list) or len(row) != 2:
                    raise DocumentError(f"map {name!r}: each table row is [point, value]")
                p = _point(row[0])
                if p in table:
                    raise DocumentError(f"map {name!r}: duplicate row for {p}")
                table[p] = _point(row[1])
            for p in table:
                X.idx(p)
            return mp.NilMap(X, Y, table, name=name)
        if "identity" in spec:
            return mp.identity(self.space(spec["identity"]))
        if "to_point" in spec:
            return mp.to_point(self.space(spec["to_point"]))
        if "constant" in spec:
            c = spec["constant"]
            return mp.constant(self.space(c["from"]), self.space(c["to"]), _point(c["value"]))
        if "product" in spec:
            return mp.product_map([self.map(m) for m in spec["product"]], name=name)
        if "compose" in spec:
            fs = [self.map(m) for m in spec["compose"]]
            g = fs[-1]
            for f in reversed(fs[:-1]):
                g = mp.compose(f, g)
            return g
        if "diagonal" in spec:
            return mp.diagonal([self.map(m) for m in spec["diagonal"]], name=name)
        if "factor_map" in spec:
            X, n = spec["factor_map"]
            return ns.factor(self.space(X), int(n))[1]
        if "induced" in spec:
            f, i = spec["induced"]
            return mp.induced_factor_map(self.map(f), int(i))
        if "retarget" in spec:
            # same table, codomain replaced by a space with the same points
            f = self.map(spec["retarget"])
            Y = self.space(spec["to"])
            if Y.points != f.codomain.points:
                raise DocumentError(f"map {name!r}: retarget needs identical point sets")
            return mp.NilMap(f.domain, Y, f.idx, name=name)
        raise DocumentError(f"map {name!r}: unknown definition {sorted(spec)}")

    def maps(self, names) -> list[mp.NilMap]:
        if isinstance(names, str):
            names = [names]
        return [self.map(m) for m in names]

    def metric(self, name: str) -> dyn.ProductMetric:
        spec = self.doc.get("metrics", {}).get(name)
        if spec is None:
            raise DocumentError(f"unknown metric {name!r}")
        block = int(spec.get("block", 1))
        if "dyadic" in spec:
            return dyn.ProductMetric.dyadic(int(spec["dyadic"]), block)
        return dyn.ProductMetric(tuple(_fraction(w) for w in spec["weights"]), block)

    def release(self) -> None:
        for X, b in self._budgets.values():
            X.budget = b
        self._budgets.clear()

    def fiber_product(self, name: str) -> rf.FiberProduct:
        self.space(name)
        if name not in self._fps:
            raise DocumentError(f"{name!r} is not a fiber product")
        return self._fps[name]


def _renamed(X: ns.Nilspace, name: str) -> ns.Nilspace:
    X.name = name
    return X


# -- tasks ---------------------------------------------------------------------------

def _need(task: dict, key: str):
    if key not in task:
        raise DocumentError(f"task {task.get('command')!r} needs {key!r}")
    return task[key]


def _pts(X, q):
    return [list(X.points[i]) for i in q]


def _translations(ctx: Context, task: dict) -> list[mp.NilMap]:
    if "translations" in task:
        return ctx.maps(task["translations"])
    if "translation" in task:
        return ctx.maps(task["translation"])
    return []


def task_verify_nilspace(ctx, task):
    X = ctx.space(_need(task, "space"))
    return ns.verify_axioms(X, ctx.nmax, exhaustive=bool(task.get("exhaustive")))


def task_cube_count(ctx, task):
    X = ctx.space(_need(task, "space"))
    n = int(_need(task, "n"))
    rep = Report("cube-count", details={"space": X.name, "n": n})
    with timed(rep):
        rep.counts[f"C{n}"] = len(X.cubes(n))
    return rep


def task_completions(ctx, task):
    X = ctx.space(_need(task, "space"))
    corner = [_point(p) for p in _need(task, "corner")]
    rep = Report("completions", details={"space": X.name})
    with timed(rep):
        done = sorted(ns.completions(X, corner))
        rep.details["completions"] = [list(p) for p in done]
        rep.counts["completions"] = len(done)
        if not done:
            n = (len(corner) + 1).bit_length() - 1
            rep.fail("corner has no completion", {"kind": "completion", "n": n,
                                                  "corner": [list(p) for p in corner]})
    return rep


def task_step(ctx, task):
    X = ctx.space(_need(task, "space"))
    rep = Report("step", details={"space": X.name})
    with timed(rep):
        rep.details["step"] = ns.step(X)
    return rep


def task_factor(ctx, task):
    X = ctx.space(_need(task, "space"))
    n = int(_need(task, "n"))
    rep = Report("factor", details={"space": X.name, "n": n})
    with timed(rep):
        Q, pi = ns.factor(X, n)
        rep.counts["points"] = Q.size
        rep.details["cells"] = [[list(X.points[i]) for i in b] for b in pi.partition.blocks]
        rep.details["projection"] = pi.table()
    return rep


def task_structure_group(ctx, task):
    X = ctx.space(_need(task, "space"))
    i = int(_need(task, "i"))
    rep = Report("structure-group", details={"space": X.name, "i": i})
    with timed(rep):
        G, L, Z = ns.structure_group(X, i)
        rep.details["group"] = list(G.orders)
        rep.counts["order"] = G.size
        if L is not None:
            rep.details["action"] = {str(list(z)): [list(Z.points[L.act(x, z)]) for x in range(Z.size)]
                                     for z in G.elements}
    return rep


def task_morphism(ctx, task):
    return mp.is_morphism(ctx.map(_need(task, "map")), ctx.nmax)


def task_fibration(ctx, task):
    f = ctx.map(_need(task, "map"))
    return mp.is_fibration(f, ctx.nmax, componentwise=bool(task.get("componentwise")))


def task_translation(ctx, task):
    a = ctx.map(_need(task, "translation"))
    X = ctx.space(task["space"]) if "space" in task else a.domain
    return mp.is_translation(X, a, ctx.paranoid, componentwise=bool(task.get("componentwise")))


def task_tran_group(ctx, task):
    X = ctx.space(_need(task, "space"))
    rep = Report("tran-group", details={"space": X.name})
    with timed(rep):
        T = mp.tran_group(X, bound=int(task.get("bound", 8)), method=task.get("method", "auto"))
        rep.counts.update(order=T.order, candidates=T.candidates)
        rep.details["abelian"] = T.is_abelian()
        rep.details["elements"] = [[list(X.points[y]) for y in g.idx] for g in T.elements]
        for a in ctx.maps(task.get("contains", [])):
            if a not in T:
                rep.fail(f"{a.name} is not in Tran")
    return rep


def task_consistency(ctx, task):
    psi = ctx.map(_need(task, "map"))
    H = _translations(ctx, task)
    if len(H) == 1:
        return dyn.is_consistent(psi, H[0])
    return dyn.is_consistent_all(psi, H)


def task_check_pair(ctx, task):
    """Does the given pair witness a consistency failure?"""
    psi = ctx.map(_need(task, "map"))
    a = ctx.map(_need(task, "translation"))
    x, y = (_point(p) for p in _need(task, "pair"))
    rep = Report("check-pair", details={"map": psi.name, "translation": a.name,
                                        "pair": [list(x), list(y)]})
    same = psi(x) == psi(y)
    moved = psi(a(x)) == psi(a(y))
    rep.details.update(same_image=same, same_after_translation=moved)
    if same and not moved:
        rep.fail("the pair violates consistency", {"kind": "consistency", "pair": [list(x), list(y)]})
    return rep


def task_induced_translation(ctx, task):
    psi = ctx.map(_need(task, "map"))
    a = ctx.map(_need(task, "translation"))
    rep = Report("induced-translation", details={"map": psi.name, "translation": a.name})
    with timed(rep):
        try:
            beta = dyn.induced_translation(psi, a)
        except NotConsistent as e:
            return rep.fail(str(e), e.witness)
        rep.details["table"] = beta.table()
    return rep


def task_hat_hom(ctx, task):
    psi = ctx.map(_need(task, "map"))
    if task.get("translations") == "all":
        S = mp.tran_group(psi.domain).elements
    else:
        S = _translations(ctx, task)
    return dyn.hat_hom_check(psi, S)


def task_transitive(ctx, task):
    X = ctx.space(_need(task, "space"))
    return dyn.is_transitive(dyn.NilspaceSystem(X, _translations(ctx, task)))


def task_fiber_diameters(ctx, task):
    psi = ctx.map(_need(task, "map"))
    d = ctx.metric(_need(task, "metric"))
    rep = Report("fiber-diameters", details={"map": psi.name})
    with timed(rep):
        diams, sup = dyn.fiber_diameters(psi, d)
        rep.details["sup"] = sup
        rep.details["diameters"] = [[list(y), v] for y, v in diams.items()]
        rep.counts["fibers"] = len(diams)
    return rep


def task_fiber_product(ctx, task):
    f1, f2 = ctx.maps(_need(task, "maps"))
    rep = Report("fiber-product", details={"maps": [f1.name, f2.name]})
    with timed(rep):
        fp = rf.fiber_product(f1, f2)
        rep.counts["points"] = fp.space.size
        rep.details["points"] = [list(p) for p in fp.space.points]
        r = rf.check_complete_then_lift(fp)
        rep.counts.update(r.counts)
        if not r:
            rep.fail(r.message, *r.witnesses[:1])
    return rep


def _factorization_json(fac) -> dict:
    return {"mid": [list(p) for p in fac.mid.points], "first": fac.first.table(),
            "second": fac.second.table()}


def task_coarsest_factor(ctx, task):
    m = ctx.map(_need(task, "map"))
    fac = rf.coarsest_fibration_factor(m)
    rep = fac.report
    rep.details.update(_factorization_json(fac))
    return rep


def task_common_refinement(ctx, task):
    ms = ctx.maps(_need(task, "maps"))
    cr = rf.common_refinement(ms)
    rep = cr.report
    rep.details["mid"] = [list(p) for p in cr.mid.points]
    rep.details["fibration"] = cr.fibration.table()
    rep.details["factors"] = [f.table() for f in cr.factors]
    return rep


def task_delta_fibration(ctx, task):
    psi1, psi2, psi3 = ctx.maps(_need(task, "maps"))
    res = rf.delta_fibration(psi1, psi2, psi3)
    res.report.details["psi"] = res.psi.table()
    return res.report


def task_ker_witness(ctx, task):
    psi, R = ctx.maps(_need(task, "maps"))
    x, y = _point(_need(task, "x")), _point(_need(task, "y"))
    rep = Report("ker-witness", details={"x": list(x), "y": list(y)})
    with timed(rep):
        z = rf.ker_witness(psi, R, x, y)
        rep.details["related"] = z is not None
        rep.details["z"] = None if z is None else list(z)
    return rep


def task_h_refinement(ctx, task):
    psi0 = ctx.map(_need(task, "map"))
    H = _translations(ctx, task)
    res = rf.h_consistent_refinement(psi0, H)
    rep = res.report
    rep.details["psi"] = res.psi.table()
    rep.details["p"] = res.p.table()
    rep.counts["cells"] = res.psi.codomain.size
    rep.details["injective"] = len(set(res.psi.idx)) == res.psi.domain.size
    return rep


def task_tower(ctx, task):
    X = ctx.space(_need(task, "space"))
    rough = ctx.maps(task.get("maps", []))
    tw = rf.consistent_tower(X, _translations(ctx, task), rough)
    rep = tw.report
    rep.details["stage_maps"] = [s.table() for s in tw.stages]
    rep.details["connectors"] = {f"{i + 1},{j + 1}": c.table() for (i, j), c in sorted(tw.connectors.items())}
    return rep


def task_refines(ctx, task):
    f, g = ctx.maps(_need(task, "maps"))
    rep = Report("refines", details={"maps": [f.name, g.name]})
    rep.details["equivalent"] = mp.equivalent(f, g)
    if not mp.refines(f, g):
        rep.fail(f"{f.name} <~ {g.name} does not hold")
    return rep


def task_induced_factor_map(ctx, task):
    f = ctx.map(_need(task, "map"))
    i = int(_need(task, "i"))
    rep = Report("induced-factor-map", details={"map": f.name, "i": i})
    with timed(rep):
        rep.details["table"] = mp.induced_factor_map(f, i).table()
    return rep


def task_structure_morphism(ctx, task):
    f = ctx.map(_need(task, "map"))
    k = int(_need(task, "k"))
    rep = Report("structure-morphism", details={"map": f.name, "k": k})
    with timed(rep):
        mp.is_fibration(f)
        rep.details["table"] = mp.structure_morphism(f, k).to_json()
    return rep


def task_sub_fiber(ctx, task):
    f = ctx.map(_need(task, "map"))
    y = _point(_need(task, "y"))
    rep = Report("sub-fiber", details={"map": f.name, "y": list(y)})
    with timed(rep):
        S = ns.sub_fiber(f, y)
        rep.details["points"] = [list(p) for p in S.points]
        rep.counts["points"] = S.size
    return rep


def task_isomorphic(ctx, task):
    X, Y = (ctx.space(s) for s in _need(task, "spaces"))
    rep = Report("isomorphic", details={"spaces": [X.name, Y.name]})
    with timed(rep):
        iso = mp.find_isomorphism(X, Y)
        if iso is None:
            rep.fail("no isomorphism")
        else:
            rep.details["table"] = iso.table()
    return rep


def task_replay(ctx, task):
    """Re-check a witness emitted by an earlier report; verdict fail means
    the witnessed violation is confirmed."""
    w = _need(task, "witness")
    kind = w.get("kind")
    rep = Report("replay", details={"kind": kind})
    confirmed = False
    if kind in ("composition", "completion", "C0", "ergodicity"):
        X = ctx.space(_need(task, "space"))
        if kind == "composition":
            q = X.to_idx([_point(p) for p in w["cube"]])
            m, entries = w["morphism"]
            phi = cb.CubeMorphism(m, tuple(_entry(e) for e in entries))
            confirmed = X.is_cube_idx(q) and not X.is_cube_idx(cb.precompose(q, phi))
        elif kind == "completion":
            c = X.to_idx([_point(p) for p in w["corner"]])
            try:
                confirmed = not ns.completions(X, [X.points[i] for i in c])
            except InputError:
                confirmed = False
        elif kind == "C0":
            confirmed = not X.is_cube_idx((X.idx(_point(w["point"])),))
        else:
            confirmed = not X.is_cube_idx(X.to_idx([_point(p) for p in w["pair"]]))
    elif kind == "morphism":
        f = ctx.map(_need(task, "map"))
        q = f.domain.to_idx([_point(p) for p in w["cube"]])
        confirmed = f.domain.is_cube_idx(q) and not f.codomain.is_cube_idx(f.image(q))
    elif kind == "translation-certificate":
        a = ctx.map(_need(task, "translation"))
        confirmed = mp.replay_translation_certificate(a.domain, a, w["cube"], w["face"])
    elif kind == "consistency":
        psi = ctx.map(_need(task, "map"))
        a = ctx.map(_need(task, "translation"))
        x, y = (_point(p) for p in w["pair"])
        confirmed = psi(x) == psi(y) and psi(a(x)) != psi(a(y))
    elif kind == "corner-lifting":
        f = ctx.map(_need(task, "map"))
        X, Y = f.domain, f.codomain
        n = int(w["n"])
        target = _point(w["target"])
        if n == 0:
            confirmed = target not in {Y.points[j] for j in f.idx}
        else:
            c = X.to_idx([_point(p) for p in w["corner"]])
            is_corner = c in set(X.corners(n))
            lifts = {f.idx[x] for x in X.completion_table(n).get(c, ())}
            confirmed = (is_corner and Y.is_cube_idx(f.image(c) + (Y.idx(target),))
                         and Y.idx(target) not in lifts)
    elif kind == "fiber-to-fiber":
        f = ctx.map(_need(task, "map"))
        X, Y = f.domain, f.codomain
        n = int(w["n"])
        block = tuple(sorted(X.idx(_point(p)) for p in w["fiber"]))
        img = {f.idx[x] for x in block}
        PY = ns.relation(Y, n)
        cell = set(PY.blocks[PY.labels[next(iter(img))]])
        confirmed = block in set(ns.relation(X, n).blocks) and img != cell
    else:
        raise DocumentError(f"cannot replay a witness of kind {kind!r}")
    rep.details["confirmed"] = confirmed
    if confirmed:
        rep.fail("witness confirmed", w)
    return rep


def _entry(e: str) -> tuple:
    if e in ("0", "1"):
        return (e,)
    if e.startswith("~x"):
        return ("~x", int(e[2:]))
    if e.startswith("x"):
        return ("x", int(e[1:]))
    raise DocumentError(f"bad cube-morphism entry {e!r}")


def task_suite(ctx, task):
    """Seeded random instances of one property family."""
    from . import instances as inst

    kind = _need(task, "kind")
    count = int(task.get("count", 10))
    seed = int(task.get("seed", ctx.seed))
    rng = random.Random(seed)
    rep = Report("suite", details={"kind": kind}, seed=seed)
    with timed(rep):
        ok = related = 0
        for j in range(count):
            if kind == "fiber-product":
                p1, p2 = inst.random_fiber_product_instance(rng)
                fp = rf.fiber_product(p1, p2)
                r = rf.check_complete_then_lift(fp)
                if not r:
                    return rep.fail(f"instance {j}: {r.message}", *r.witnesses[:1])
            elif kind == "ker-witness":
                X, psi, R = inst.random_refinement_pair(rng)
                x, y = rng.choice(X.points), rng.choice(X.points)
                z = rf.ker_witness(psi, R, x, y)
                related += z is not None
            elif kind == "h-refinement":
                X, psi, H = inst.random_h_instance(rng)
                rf.h_consistent_refinement(psi, H)
            else:
                raise DocumentError(f"unknown suite kind {kind!r}")
            ok += 1
        rep.counts.update(instances=ok)
        if kind == "ker-witness":
            rep.counts["related"] = related
    return rep


TASKS = {
    "verify-nilspace": task_verify_nilspace,
    "cube-count": task_cube_count,
    "completions": task_completions,
    "step": task_step,
    "factor": task_factor,
    "structure-group": task_structure_group,
    "sub-fiber": task_sub_fiber,
    "morphism": task_morphism,
    "fibration": task_fibration,
    "translation": task_translation,
    "tran-group": task_tran_group,
    "consistency": task_consistency,
    "check-pair": task_check_pair,
    "induced-translation": task_induced_translation,
    "hat-hom": task_hat_hom,
    "transitive": task_transitive,
    "fiber-diameters": task_fiber_diameters,
    "fiber-product": task_fiber_product,
    "coarsest-factor": task_coarsest_factor,
    "common-refinement": task_common_refinement,
    "delta-fibration": task_delta_fibration,
    "ker-witness": task_ker_witness,
    "h-refinement": task_h_refinement,
    "tower": task_tower,
    "refines": task_refines,
    "induced-factor-map": task_induced_factor_map,
    "structure-morphism": task_structure_morphism,
    "isomorphic": task_isomorphic,
    "replay": task_replay,
    "suite": task_suite,
}


def run_task(ctx: Context, task: dict) -> Report:
    """Run one task; package errors become verdict ``error`` reports."""
    cmd = task.get("command")
    fn = TASKS.get(cmd)
    if fn is None:
        rep = Report(str(cmd), verdict=ERROR, message=f"unknown command {cmd!r}")
        rep.details["error"] = "InputError"
        return rep
    try:
        rep = fn(ctx, task)
    except NotConsistent as e:
        rep = Report(cmd, verdict=FAIL, message=str(e), witnesses=[e.witness])
    except (NilspaceError, KeyError, ValueError, TypeError, IndexError) as e:
        rep = Report(cmd, verdict=ERROR, message=str(e) if isinstance(e, NilspaceError) else f"{type(e).__name__}: {e}")
        rep.details["error"] = type(e).__name__
        if isinstance(e, ResourceError) and e.partial is not None:
            rep.counts["partial"] = e.partial
    rep.command = cmd
    if rep.seed is None and cmd == "suite":
        rep.seed = ctx.seed
    if "expect" in task:
        met, why = check_expectation(rep.to_json(), task["expect"])
        rep.details["expectation"] = "met" if met else "unmet"
        if not met:
            rep.details["expectation_failure"] = why
    return rep


def check_expectation(got: Any, want: Any, path: str = "") -> tuple[bool, str]:
    """Subset match: every key in ``want`` must match in ``got``; lists match
    element-wise with equal length."""
    if isinstance(want, dict):
        if not isinstance(got, dict):
            return False, f"{path or '.'}: expected an object"
        for k, v in want.items():
            if k not in got:
                return False, f"{path}.{k}: missing"
            ok, why = check_expectation(got[k], v, f"{path}.{k}")
            if not ok:
                return ok, why
        return True, ""
    if isinstance(want, list) and isinstance(got, list):
        if len(want) != len(got):
            return False, f"{path}: length {len(got)} != {len(want)}"
        for j, (a, b) in enumerate(zip(got, want)):
            ok, why = check_expectation(a, b, f"{path}[{j}]")
            if not ok:
                return ok, why
        return True, ""
    if got != want:
        return False, f"{path}: got {got!r}, expected {want!r}"
    return True, ""


def run_document(doc: dict, nmax=None, budget=None, seed: int = 0, paranoid=None,
                 only: list[str] | None = None) -> list[Report]:
    ctx = Context(doc, nmax=nmax, budget=budget, seed=seed, paranoid=paranoid)
    reports = []
    try:
        for task in doc.get("tasks", []):
            if only and task.get("command") not in only:
                continue
            reports.append(run_task(ctx, task))
    finally:
        ctx.release()
    return reports


def exit_code(reports: list[Report], expectations: bool = False) -> int:
    if any(r.verdict == ERROR for r in reports):
        return 2
    if expectations:
        return 0 if all(r.details.get("expectation", "met") == "met" for r in reports) else 1
    return 0 if all(r.verdict == PASS for r in reports) else 1


def machine_report(doc: dict, reports: list[Report], code: int, seed: int, timing: bool = False) -> str:
    out = {"document": doc.get("name", ""), "seed": seed, "exit": code,
           "reports": [r.to_json(timing=timing) for r in reports]}
    return json.dumps(jsonable(out), sort_keys=True)
