"""Indexing sets, defining systems and higher operadic Massey products.

Sign convention used throughout (checked by the cycle property):

    d a_{b,K} = -P(b; K)        cycle(Γ) = +P(Γ; (1..r))

where P(b; K) sums, over the terms (ζ; b_1..b_m; σ) of D(b), the value
ζ(a_{b_1,K_1}, ..., a_{b_m,K_m}) times the coefficient and the Koszul sign of
rewriting b_1..b_m ⊗ x_K as (b_1 ⊗ x_{K_1}) ⊗ ... ⊗ (b_m ⊗ x_{K_m}), with the
cooperations carrying their suspended degree.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .algebra import AlgebraMorphism, DgAlgebra, HomologyData, homology_data, restrict
from .kdual import (
    ID_REF,
    BasisRef,
    Cooperation,
    SplitTerm,
    _cell_possible,
    induced_map,
    induced_terms,
    kdual_cell,
    massey_D,
    massey_D_ref,
    ref_degree,
)
from .linalg import (
    Echelon,
    ImageSolver,
    StructuralError,
    Subspace,
    Vec,
    add_into,
    inverse,
    scaled,
)
from .operad import OperadMorphism
from .trees import Tree, is_leaf, reorder_sign

Key = Tuple[BasisRef, Tuple[int, ...]]


class ConsistencyError(RuntimeError):
    """An identity that must hold by theory failed; signals a sign bug."""


class PreconditionError(ValueError):
    pass


def key_name(key: Key) -> str:
    ref, slots = key
    return "(" + ", ".join([ref.name] + [str(k) for k in slots]) + ")"


def parse_key(pres, text: str) -> Key:
    from .kdual import lookup

    body = text.strip()
    if not (body.startswith("(") and body.endswith(")")):
        raise ValueError(f"bad key {text!r}")
    parts = [p.strip() for p in body[1:-1].split(",")]
    return lookup(pres, parts[0]), tuple(int(p) for p in parts[1:])


def _key_order(key: Key):
    ref, slots = key
    return (ref.weight, ref.arity, ref.index, slots)


def _part_keys(st: SplitTerm, slots: Tuple[int, ...]) -> List[Key]:
    return [(p, tuple(slots[l - 1] for l in blk)) for p, blk in zip(st.parts, st.blocks())]


# ---------------------------------------------------------------- indexing sets


@dataclass
class IndexingSet:
    root: Cooperation
    keys: List[Key]
    top: List[SplitTerm]

    @property
    def arity(self) -> int:
        return self.root.arity

    def non_identity(self) -> List[Key]:
        return [k for k in self.keys if not k[0].is_id]

    def to_json(self) -> list:
        return [key_name(k) for k in self.keys]


def indexing_set(g: Cooperation) -> IndexingSet:
    """Close the keys produced by D(g) under D, over the decomposition bases."""
    if g.weight < 1:
        raise StructuralError("indexing sets need a cooperation of weight >= 1")
    top = massey_D(g)
    root = tuple(range(1, g.arity + 1))
    seen = set()
    stack: List[Key] = []
    for st in top:
        for k in _part_keys(st, root):
            if k not in seen:
                seen.add(k)
                stack.append(k)
    while stack:
        ref, slots = stack.pop()
        if ref.is_id:
            continue
        for st in massey_D_ref(g.pres, ref):
            for k in _part_keys(st, slots):
                if k not in seen:
                    seen.add(k)
                    stack.append(k)
    return IndexingSet(g, sorted(seen, key=_key_order), top)


# ---------------------------------------------------------------- assembly


def _term_sign(pres, st: SplitTerm, slots: Tuple[int, ...], xdeg: Dict[int, int]) -> int:
    parts = _part_keys(st, slots)
    flat = [k for _, s in parts for k in s]
    sign = reorder_sign([xdeg[k] for k in slots], [slots.index(k) for k in flat])
    e, seen = 0, 0
    for ref, s in parts:
        e += ref_degree(pres, ref) * seen
        seen += sum(xdeg[k] for k in s)
    return -sign if e % 2 else sign


def assemble(a: DgAlgebra, terms: Sequence[SplitTerm], slots: Tuple[int, ...], xdeg: Dict[int, int],
             value) -> Vec:
    """P(terms; slots) with ``value(key)`` supplying the inner elements."""
    out: Vec = {}
    for st in terms:
        args = [value(k) for k in _part_keys(st, slots)]
        if any(not v for v in args):
            continue
        s = _term_sign(a.operad, st, slots, xdeg)
        add_into(out, a.evaluate(st.zeta, args), st.coeff * s)
    return out


def key_degree(pres, key: Key, xdeg: Dict[int, int]) -> int:
    ref, slots = key
    return ref_degree(pres, ref) + sum(xdeg[k] for k in slots)


def _homogeneous_part(a: DgAlgebra, v: Vec, deg: int) -> Vec:
    return {i: c for i, c in v.items() if a.degrees[i] == deg}


# ---------------------------------------------------------------- defining systems


@dataclass
class DefiningSystem:
    algebra: DgAlgebra
    index: IndexingSet
    degrees: List[int]
    values: Dict[Key, Vec]

    @property
    def root(self) -> Cooperation:
        return self.index.root

    @property
    def xdeg(self) -> Dict[int, int]:
        return {i + 1: d for i, d in enumerate(self.degrees)}

    def reps(self) -> List[Vec]:
        return [self.values.get((ID_REF, (i,)), {}) for i in range(1, self.index.arity + 1)]

    def get(self, key: Key) -> Vec:
        return self.values.get(key, {})

    def relation_rhs(self, key: Key) -> Vec:
        """The required boundary of a_key, i.e. -P(key)."""
        ref, slots = key
        p = assemble(self.algebra, massey_D_ref(self.algebra.operad, ref), slots, self.xdeg, self.get)
        return scaled(p, -1)

    def to_json(self) -> dict:
        a = self.algebra
        return {
            "cooperation": _coop_label(self.root),
            "degrees": list(self.degrees),
            "values": {key_name(k): _vec_json(a, self.values.get(k, {})) for k in self.index.keys},
        }


def _coop_label(g: Cooperation) -> str:
    cell = kdual_cell(g.pres, g.arity, g.weight)
    parts = []
    for i, c in enumerate(g.coords()):
        if c:
            parts.append(cell.names[i] if c == 1 else f"{c}*{cell.names[i]}")
    return " + ".join(parts) or "0"


def _vec_json(a: DgAlgebra, v: Vec) -> list:
    return [[a.names[i], c.numerator, c.denominator] for i, c in sorted(v.items())]


def _vec_from_json(a: DgAlgebra, rows) -> Vec:
    out: Vec = {}
    for row in rows:
        name, num = row[0], row[1]
        den = row[2] if len(row) > 2 else 1
        add_into(out, {a.index(name): Fraction(num, den)})
    return out


def system_from_json(a: DgAlgebra, g: Cooperation, obj: dict) -> DefiningSystem:
    index = indexing_set(g)
    values = {}
    for text, rows in obj.get("values", {}).items():
        values[parse_key(a.operad, text)] = _vec_from_json(a, rows)
    return DefiningSystem(a, index, list(obj["degrees"]), values)


@dataclass
class Report:
    ok: bool
    violations: List[dict]

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": self.violations}


def verify_defining_system(ds: DefiningSystem) -> Report:
    a = ds.algebra
    bad: List[dict] = []
    for key in ds.index.keys:
        name = key_name(key)
        if key not in ds.values:
            bad.append({"key": name, "problem": "missing"})
            continue
        v = ds.values[key]
        deg = key_degree(a.operad, key, ds.xdeg)
        if v and a.degree(v) != deg:
            bad.append({"key": name, "problem": f"not homogeneous of degree {deg}"})
            continue
        if key[0].is_id:
            dv = a.apply_d(v)
            if dv:
                bad.append({"key": name, "problem": "not a cycle", "residual": _vec_json(a, dv)})
            continue
        res = dict(a.apply_d(v))
        add_into(res, ds.relation_rhs(key), -1)
        if res:
            bad.append({"key": name, "problem": "boundary relation fails", "residual": _vec_json(a, res)})
    return Report(not bad, bad)


@dataclass
class Obstruction:
    key: Key
    rhs: Vec
    hclass: Vec

    def to_json(self, a: DgAlgebra, hd: HomologyData) -> dict:
        return {"key": key_name(self.key),
                "class": {hd.names[i]: [c.numerator, c.denominator] for i, c in sorted(self.hclass.items())}}


@dataclass
class BuildResult:
    system: Optional[DefiningSystem]
    obstruction: Optional[Obstruction] = None

    @property
    def ok(self) -> bool:
        return self.system is not None


class _Solver:
    """Cached image solver and homology data for an algebra."""

    def __init__(self, a: DgAlgebra, hd: Optional[HomologyData] = None):
        self.a = a
        self.hd = hd or homology_data(a)
        self.img = ImageSolver(a.d)

    def solve(self, rhs: Vec, deg: int) -> Optional[Vec]:
        if not rhs:
            return {}
        x = self.img.solve(rhs)
        if x is None:
            return None
        return _homogeneous_part(self.a, x, deg)

    def params(self, deg: int) -> List[int]:
        return [i for i, d in enumerate(self.hd.degrees) if d == deg]


def _solver(a: DgAlgebra, hd: Optional[HomologyData] = None) -> _Solver:
    cache = a.__dict__.setdefault("_massey_solver", {})
    if hd is None:
        if None not in cache:
            cache[None] = _Solver(a)
        return cache[None]
    return _Solver(a, hd)


def infer_degrees(a: DgAlgebra, reps: Sequence[Vec], degrees: Optional[Sequence[int]]) -> List[int]:
    if degrees is not None:
        if len(degrees) != len(reps):
            raise PreconditionError("one degree per class is needed")
        return list(degrees)
    out = []
    for v in reps:
        d = a.degree(v)
        if d is None:
            raise PreconditionError("classes must be homogeneous and nonzero, or carry explicit degrees")
        out.append(d)
    return out


def build_defining_system(a: DgAlgebra, g: Cooperation, reps: Sequence[Vec],
                          degrees: Optional[Sequence[int]] = None,
                          choices: Optional[Dict[Key, Vec]] = None,
                          index: Optional[IndexingSet] = None,
                          hd: Optional[HomologyData] = None,
                          extra: Optional[Callable[[Key, int], Vec]] = None) -> BuildResult:
    """Solve the boundary relations key by key in order of increasing weight.

    ``choices`` maps keys to homology coordinates whose lifts are added to
    the particular solution; ``extra(key, degree)`` may add any further cycle.
    The default adds nothing.
    """
    if len(reps) != g.arity:
        raise PreconditionError(f"{g.arity} classes are needed, got {len(reps)}")
    degs = infer_degrees(a, reps, degrees)
    for i, v in enumerate(reps):
        if v and a.degree(v) != degs[i]:
            raise PreconditionError(f"class {i + 1} is not homogeneous of degree {degs[i]}")
        if a.apply_d(v):
            raise PreconditionError(f"representative {i + 1} is not a cycle")
    index = index or indexing_set(g)
    sol = _solver(a, hd)
    ds = DefiningSystem(a, index, degs, {})
    for i, v in enumerate(reps):
        ds.values[(ID_REF, (i + 1,))] = dict(v)
    choices = choices or {}
    for key in index.non_identity():
        deg = key_degree(a.operad, key, ds.xdeg)
        rhs = ds.relation_rhs(key)
        x = sol.solve(rhs, deg)
        if x is None:
            return BuildResult(None, Obstruction(key, rhs, sol.hd.classify(rhs)))
        h = choices.get(key)
        if h:
            lift = sol.hd.lift(h)
            if lift and a.degree(lift) != deg:
                raise PreconditionError(f"choice for {key_name(key)} has the wrong degree")
            add_into(x, lift)
        if extra is not None:
            z = extra(key, deg)
            if z and (a.apply_d(z) or a.degree(z) != deg):
                raise PreconditionError(f"extra term for {key_name(key)} is not a cycle of degree {deg}")
            add_into(x, z or {})
        ds.values[key] = x
    return BuildResult(ds)


# ---------------------------------------------------------------- products


@dataclass
class MasseyOutcome:
    cycle: Vec
    hclass: Vec
    system: DefiningSystem

    def to_json(self, hd: HomologyData) -> dict:
        a = self.system.algebra
        return {
            "cycle": _vec_json(a, self.cycle),
            "class": {hd.names[i]: [c.numerator, c.denominator] for i, c in sorted(self.hclass.items())},
        }


def massey_cycle(ds: DefiningSystem) -> Vec:
    return assemble(ds.algebra, ds.index.top, tuple(range(1, ds.index.arity + 1)), ds.xdeg, ds.get)


def massey_product(ds: DefiningSystem, hd: Optional[HomologyData] = None) -> MasseyOutcome:
    a = ds.algebra
    cyc = massey_cycle(ds)
    if a.apply_d(cyc):
        raise ConsistencyError("the assembled Massey element is not a cycle")
    hd = hd or _solver(a).hd
    return MasseyOutcome(cyc, hd.classify(cyc), ds)


@dataclass
class MasseySample:
    classes: List[Vec]
    outcomes: List[MasseyOutcome]
    indeterminacy: Optional[Subspace]
    obstruction: Optional[Obstruction] = None

    @property
    def defined(self) -> bool:
        return bool(self.outcomes)

    def contains(self, h: Vec) -> bool:
        """Exact for weight two; sample membership otherwise."""
        if self.indeterminacy is not None and self.classes:
            diff = dict(h)
            add_into(diff, self.classes[0], -1)
            return self.indeterminacy.contains(diff)
        return h in self.classes


def _param_keys(ds: DefiningSystem, sol: _Solver) -> List[Tuple[Key, int]]:
    out = []
    for key in ds.index.non_identity():
        deg = key_degree(ds.algebra.operad, key, ds.xdeg)
        for i in sol.params(deg):
            out.append((key, i))
    return out


def massey_set_sample(a: DgAlgebra, g: Cooperation, reps: Sequence[Vec],
                      degrees: Optional[Sequence[int]] = None, budget: int = 64) -> MasseySample:
    """Default system plus one-at-a-time homology parameters, up to ``budget``."""
    sol = _solver(a)
    index = indexing_set(g)
    base = build_defining_system(a, g, reps, degrees, index=index)
    if not base.ok:
        return MasseySample([], [], None, base.obstruction)
    first = massey_product(base.system)
    outcomes = [first]
    classes = [first.hclass]
    gens: List[Vec] = []
    for key, i in _param_keys(base.system, sol)[: max(budget - 1, 0)]:
        res = build_defining_system(a, g, reps, degrees, choices={key: {i: Fraction(1)}}, index=index)
        if not res.ok:
            continue
        out = massey_product(res.system)
        outcomes.append(out)
        diff = dict(out.hclass)
        add_into(diff, first.hclass, -1)
        gens.append(diff)
        if out.hclass not in classes:
            classes.append(out.hclass)
    indet = Subspace(sol.hd.dim, gens) if g.weight == 2 else None
    return MasseySample(classes, outcomes, indet)


# ---------------------------------------------------------------- oracles


def classical_massey(a: DgAlgebra, reps: Sequence[Vec], gen: str = "mu",
                     choices: Optional[Dict[Tuple[int, int], Vec]] = None) -> Optional[Vec]:
    """Classical associative Massey cycle from b_{ij} with the standard signs.

    Returns the cycle, or None when some b_{ij} cannot be found.
    """
    n = len(reps)
    img = ImageSolver(a.d)
    b: Dict[Tuple[int, int], Vec] = {(i - 1, i): dict(reps[i - 1]) for i in range(1, n + 1)}
    bdeg: Dict[Tuple[int, int], int] = {(i - 1, i): a.degree(reps[i - 1]) for i in range(1, n + 1)}
    choices = choices or {}

    def rhs(i: int, j: int) -> Vec:
        out: Vec = {}
        for k in range(i + 1, j):
            c = -1 if bdeg[(i, k)] % 2 == 0 else 1
            add_into(out, a.act(gen, [b[(i, k)], b[(k, j)]]), c)
        return out

    for length in range(2, n):
        for i in range(0, n - length + 1):
            j = i + length
            r = rhs(i, j)
            deg = bdeg[(i, i + 1)] + sum(bdeg[(k, k + 1)] for k in range(i + 1, j)) + length - 1
            x = img.solve(r) if r else {}
            if x is None:
                return None
            x = _homogeneous_part(a, x, deg)
            add_into(x, choices.get((i, j), {}))
            b[(i, j)] = x
            bdeg[(i, j)] = deg
    return rhs(0, n)


def classical_massey_set(a: DgAlgebra, reps: Sequence[Vec], gen: str = "mu") -> Optional[Tuple[Vec, Subspace]]:
    """Triple product set as (class, indeterminacy), varying b_02 and b_13 by cycles."""
    if len(reps) != 3:
        raise PreconditionError("the exact classical set is implemented for triple products")
    hd = homology_data(a)
    base = classical_massey(a, reps, gen)
    if base is None:
        return None
    c0 = hd.classify(base)
    gens = []
    degs = [a.degree(v) for v in reps]
    for (i, j), deg in (((0, 2), degs[0] + degs[1] + 1), ((1, 3), degs[1] + degs[2] + 1)):
        for h, hdg in enumerate(hd.degrees):
            if hdg != deg:
                continue
            cyc = classical_massey(a, reps, gen, {(i, j): hd.lift({h: Fraction(1)})})
            diff = hd.classify(cyc)
            add_into(diff, c0, -1)
            gens.append(diff)
    return c0, Subspace(hd.dim, gens)


def relation_from_cooperation(g: Cooperation) -> Dict[Tree, Fraction]:
    """Desuspend a weight-two cooperation into the matching relation."""
    if g.weight != 2:
        raise PreconditionError("a relation has weight two")
    out: Dict[Tree, Fraction] = {}
    for t, c in g.terms.items():
        s = -1 if g.pres.table.degree(t[0]) % 2 else 1
        add_into(out, {t: c * s})
    return out


def _muro_terms(rel: Dict[Tree, Fraction]):
    """Read each monomial as (μ1 ∘_k μ2)·σ: yields (coeff, μ1, μ2, k, planar labels)."""
    for t, c in sorted(rel.items(), key=lambda kv: repr(kv[0])):
        if is_leaf(t):
            raise PreconditionError("a relation cannot contain the identity")
        outer, kids = t
        inner_pos = [p for p, ch in enumerate(kids) if not is_leaf(ch)]
        if len(inner_pos) != 1:
            raise PreconditionError("relation monomials must have weight two")
        k = inner_pos[0]
        inner = kids[k]
        if any(not is_leaf(ch) for ch in inner[1]):
            raise PreconditionError("relation monomials must have weight two")
        planar = [ch for ch in kids[:k]] + list(inner[1]) + [ch for ch in kids[k + 1:]]
        yield c, outer, inner[0], k + 1, len(inner[1]), planar


def muro_first_order(a: DgAlgebra, rel: Dict[Tree, Fraction], reps: Sequence[Vec],
                     degrees: Optional[Sequence[int]] = None) -> Optional[Tuple[Vec, Subspace]]:
    """First-order product set (class, indeterminacy) read directly off a relation.

    One ρ is chosen per distinct inner operation and inner inputs; the set
    is obtained by varying each ρ through the homology of its degree.
    """
    hd = homology_data(a)
    img = ImageSolver(a.d)
    degs = infer_degrees(a, reps, degrees)
    table = a.operad.table
    terms = list(_muro_terms(rel))
    rho: Dict[tuple, Vec] = {}
    rho_deg: Dict[tuple, int] = {}
    for _, mu1, mu2, k, r2, planar in terms:
        rk = (mu2, tuple(planar[k - 1:k - 1 + r2]))
        if rk in rho:
            continue
        target = a.act(mu2, [reps[l - 1] for l in rk[1]])
        deg = table.degree(mu2) + sum(degs[l - 1] for l in rk[1]) + 1
        x = img.solve(target) if target else {}
        if x is None:
            return None
        rho[rk] = _homogeneous_part(a, x, deg)
        rho_deg[rk] = deg

    def cycle(extra: Dict[tuple, Vec]) -> Vec:
        out: Vec = {}
        for c, mu1, mu2, k, r2, planar in terms:
            rk = (mu2, tuple(planar[k - 1:k - 1 + r2]))
            r = dict(rho[rk])
            add_into(r, extra.get(rk, {}))
            # planar position p holds label σ^{-1}(p)
            sigma_inv = planar
            alpha = 0
            r_tot = len(planar)
            pos = {l: p for p, l in enumerate(planar, 1)}
            for i in range(1, r_tot + 1):
                for j in range(i + 1, r_tot + 1):
                    if pos[i] > pos[j]:
                        alpha += degs[i - 1] * degs[j - 1]
            gamma = alpha + table.degree(mu1) + (table.degree(mu2) - 1) * sum(
                degs[sigma_inv[m - 1] - 1] for m in range(1, k))
            args = [reps[l - 1] for l in planar[:k - 1]] + [r] + [reps[l - 1] for l in planar[k - 1 + r2:]]
            add_into(out, a.act(mu1, args), c * (-1 if gamma % 2 else 1))
        return out

    base = cycle({})
    if a.apply_d(base):
        raise ConsistencyError("the first-order oracle produced a non-cycle")
    c0 = hd.classify(base)
    gens = []
    for rk, deg in rho_deg.items():
        for h, hdg in enumerate(hd.degrees):
            if hdg == deg:
                diff = hd.classify(cycle({rk: hd.lift({h: Fraction(1)})}))
                add_into(diff, c0, -1)
                gens.append(diff)
    return c0, Subspace(hd.dim, gens)


def same_set_up_to_sign(p: Tuple[Vec, Subspace], q: Tuple[Vec, Subspace]) -> Optional[int]:
    """The sign ε with p = ε q as affine subspaces, or None."""
    (c1, s1), (c2, s2) = p, q
    if s1 != s2:
        return None
    for eps in (1, -1):
        diff = dict(c1)
        add_into(diff, c2, -eps)
        if s1.contains(diff):
            return eps
    return None


# ---------------------------------------------------------------- morphisms


def pushforward_system(f: AlgebraMorphism, ds: DefiningSystem) -> DefiningSystem:
    if f.source is not ds.algebra:
        raise PreconditionError("the morphism does not start at the system's algebra")
    vals = {k: f(v) for k, v in ds.values.items()}
    return DefiningSystem(f.target, ds.index, list(ds.degrees), vals)


def _telescope(a: DgAlgebra, terms: Sequence[SplitTerm], slots, xdeg, fa, cc, bb) -> Vec:
    """Σ_terms Σ_j ± ζ(f a.., c_j, b..), the sign being that of d passing ζ and the left inputs."""
    pres = a.operad
    out: Vec = {}
    for st in terms:
        keys = _part_keys(st, slots)
        base_sign = _term_sign(pres, st, slots, xdeg)
        zdeg = next(iter(_zeta_degrees(pres, st)))
        left = zdeg
        for j, kj in enumerate(keys):
            args = [fa(k) for k in keys[:j]] + [cc(kj)] + [bb(k) for k in keys[j + 1:]]
            if all(args):
                s = -1 if left % 2 else 1
                add_into(out, a.evaluate(st.zeta, args), st.coeff * base_sign * s)
            left += key_degree(pres, kj, xdeg)
    return out


def _zeta_degrees(pres, st: SplitTerm):
    return {sum(pres.table.degree(v) for v in _vertices(t)) for t in st.zeta}


def _vertices(t: Tree):
    if is_leaf(t):
        return []
    out = [t[0]]
    for c in t[1]:
        out.extend(_vertices(c))
    return out


def lift_defining_system(f: AlgebraMorphism, target: DefiningSystem) -> DefiningSystem:
    """A source system whose pushforward is homologous to ``target`` at the top."""
    if target.algebra is not f.target:
        raise PreconditionError("the system does not live on the morphism's target")
    A, B = f.source, f.target
    m, hA, hB = f.on_homology()
    if not f.is_quasi_iso():
        raise PreconditionError("lifting needs a quasi-isomorphism")
    minv = inverse(m)
    solA, solB = _solver(A), _solver(B)
    xdeg = target.xdeg
    a_vals: Dict[Key, Vec] = {}
    c_vals: Dict[Key, Vec] = {}

    def pull_class(e: Vec) -> Vec:
        # a cycle e' of A with f(e') homologous to the cycle e
        return hA.lift(minv.apply(hB.classify(e)))

    def fa(k):
        return f(a_vals.get(k, {}))

    index = target.index
    for key in index.keys:
        if not key[0].is_id:
            continue
        b = target.get(key)
        a = pull_class(b)
        diff = f(a)
        add_into(diff, b, -1)
        c = solB.solve(diff, key_degree(B.operad, key, xdeg) + 1)
        if c is None:
            raise ConsistencyError("f(a) - b is not a boundary")
        a_vals[key], c_vals[key] = a, c
    for key in index.non_identity():
        ref, slots = key
        deg = key_degree(A.operad, key, xdeg)
        terms = massey_D_ref(A.operad, ref)
        Q = _telescope(B, terms, slots, xdeg, fa, lambda k: c_vals.get(k, {}), target.get)
        rhsA = scaled(assemble(A, terms, slots, xdeg, lambda k: a_vals.get(k, {})), -1)
        a1 = solA.solve(rhsA, deg)
        if a1 is None:
            raise ConsistencyError(f"lift: relation at {key_name(key)} does not bound in the source")
        e = f(a1)
        add_into(e, target.get(key), -1)
        add_into(e, Q)
        if B.apply_d(e):
            raise ConsistencyError(f"lift: correction at {key_name(key)} is not a cycle")
        e1 = pull_class(e)
        rhs_c = dict(e)
        add_into(rhs_c, f(e1), -1)
        c = solB.solve(rhs_c, deg + 1)
        if c is None:
            raise ConsistencyError(f"lift: {key_name(key)} has no homotopy")
        a = dict(a1)
        add_into(a, e1, -1)
        a_vals[key], c_vals[key] = a, c
    return DefiningSystem(A, index, list(target.degrees), a_vals)


# ---------------------------------------------------------------- pullback


def adapted_target(m: OperadMorphism, arity: int, weight: int):
    """A copy of the target whose cell bases start with independent images f^¡(μ).

    Returns the copy and, per cell, the source basis index behind each leading
    target basis element (the linear section on the image).
    """
    tgt = dataclasses.replace(m.target, _cache={})
    section: Dict[Tuple[int, int], List[int]] = {}
    for w in range(1, weight + 1):
        for n in range(1, arity + 1):
            if not _cell_possible(tgt, n, w):
                continue
            tc = kdual_cell(tgt, n, w)
            vecs, names, picks = [], [], []
            ech = Echelon()
            if _cell_possible(m.source, n, w):
                sc = kdual_cell(m.source, n, w)
                for k in range(sc.dim):
                    v = tc.monos.to_vec(induced_terms(m, sc.terms_of(k)))
                    if v and ech.add(v):
                        vecs.append(v)
                        names.append(f"f({sc.names[k]})")
                        picks.append(k)
            for v, nm in zip(list(tc.basis), list(tc.names)):
                if ech.add(v):
                    vecs.append(v)
                    names.append(nm)
            tc.set_basis(vecs, names)
            section[(n, w)] = picks
            reg = tgt._cache.setdefault("kd_names", {})
            for r in tc.refs():
                reg[r.name] = r
    return tgt, section


def pullback_system(m: OperadMorphism, b: DgAlgebra, src: DefiningSystem) -> DefiningSystem:
    """Convert a system on f^*(b) for Γ into a system on b for f^¡(Γ).

    The target system lives over a copy of the target operad whose cell bases
    begin with the images of source basis elements; b_{f(μ),K} := b_{μ,K}.
    """
    g = src.root
    g_img = induced_map(m, g)
    if g_img.is_zero():
        raise PreconditionError("f^¡ kills the cooperation")
    tgt, section = adapted_target(m, g.arity, g.weight)
    bb = DgAlgebra(tgt, b.names, b.degrees, b.d, b.actions, name=b.name)
    index = indexing_set(Cooperation(tgt, g.arity, g.weight, dict(g_img.terms)))
    vals = {}
    for key in index.keys:
        ref, slots = key
        if ref.is_id:
            vals[key] = src.get(key)
            continue
        picks = section[(ref.arity, ref.weight)]
        if ref.index >= len(picks):
            raise PreconditionError(f"{key_name(key)} is not an image element")
        skey = (kdual_cell(m.source, ref.arity, ref.weight).ref(picks[ref.index]), slots)
        if skey not in src.values:
            raise PreconditionError(f"the source system has no value at {key_name(skey)}")
        vals[key] = src.get(skey)
    return DefiningSystem(bb, index, list(src.degrees), vals)


@dataclass
class PullbackReport:
    ok: bool
    checked: int
    failures: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"ok": self.ok, "checked": self.checked, "failures": self.failures}


def pullback_massey(m: OperadMorphism, b: DgAlgebra, g: Cooperation, reps: Sequence[Vec],
                    degrees: Optional[Sequence[int]] = None, budget: int = 32) -> PullbackReport:
    """Check ⟨x⟩_Γ ⊆ ⟨x⟩_{f^¡(Γ)} on the sampled source systems."""
    if g.pres is not m.source:
        raise PreconditionError("the cooperation must belong to the source operad")
    if induced_map(m, g).is_zero():
        raise PreconditionError("f^¡(Γ) = 0")
    fb = restrict(b, m)
    sample = massey_set_sample(fb, g, reps, degrees, budget)
    fails = []
    for out in sample.outcomes:
        tgt = pullback_system(m, b, out.system)
        rep = verify_defining_system(tgt)
        if not rep.ok:
            fails.append(f"converted system fails at {rep.violations[0]['key']}")
            continue
        cyc = massey_cycle(tgt)
        if cyc != out.cycle:
            diff = dict(cyc)
            add_into(diff, out.cycle, -1)
            if _solver(b).hd.classify(diff):
                fails.append("converted system gives a different class")
    return PullbackReport(not fails and bool(sample.outcomes), len(sample.outcomes), fails)
