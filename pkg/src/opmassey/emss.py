"""Operadic chain complex P^¡(A) and its weight spectral sequence.

Elements of P^¡(V) are stored as decorated trees: a suspended tree monomial
whose leaves carry basis indices of V.  A coderivation is determined by its
components φ: P^¡(V) → V and acts by replacing one full subtree U (a vertex
with all its descendants, or a single leaf) by φ(U), with the Koszul sign of
moving φ past everything read before U in preorder.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .algebra import DgAlgebra
from .kdual import SHIFT, Cooperation, kdual_cell, _cell_possible
from .linalg import Echelon, Mat, Quotient, Vec, add_into, kernel
from .trees import Tree, canonical, is_leaf, relabel, reorder_sign, tokens, vertices

DVec = Dict[Tree, Fraction]


class PartialPageWarning(UserWarning):
    pass


# ---------------------------------------------------------------- decorated trees


class DecoratedModel:
    """P^¡(V) for a graded vector space V with the given basis degrees."""

    def __init__(self, pres, degrees: Sequence[int], max_weight: Optional[int] = None):
        self.pres = pres
        self.degrees = list(degrees)
        self.max_weight = pres.max_weight if max_weight is None else min(max_weight, pres.max_weight)
        self._index: Dict[Tree, int] = {}
        self._monos: List[Tree] = []
        self._cells: Dict[Tuple[int, int], List[Vec]] = {}

    # -- monomials

    def ldeg(self, i: int) -> int:
        return self.degrees[i]

    def index(self, t: Tree) -> int:
        i = self._index.get(t)
        if i is None:
            i = self._index[t] = len(self._monos)
            self._monos.append(t)
        return i

    def mono(self, i: int) -> Tree:
        return self._monos[i]

    def weight_of(self, i: int) -> int:
        return len(vertices(self._monos[i]))

    def to_vec(self, v: DVec) -> Vec:
        out: Vec = {}
        for t, c in v.items():
            add_into(out, {self.index(t): c})
        return out

    def to_trees(self, v: Vec) -> DVec:
        return {self._monos[i]: c for i, c in v.items()}

    def degree(self, t: Tree) -> int:
        if is_leaf(t):
            return self.degrees[t]
        return self.pres.table.degree(t[0], SHIFT) + sum(self.degree(c) for c in t[1])

    def canon(self, v: DVec) -> DVec:
        out: DVec = {}
        for t, c in v.items():
            s, ct = canonical(t, self.pres.table, SHIFT, self.ldeg, decorated=True)
            if s:
                add_into(out, {ct: c}, s)
        return out

    # -- building elements

    def decorate(self, terms: Dict[Tree, Fraction], args: Sequence[Vec]) -> DVec:
        """The element (terms) ⊗ args_1 ⊗ ... ⊗ args_r written as decorated trees."""
        out: DVec = {}
        table = self.pres.table
        for t, c in terms.items():
            if is_leaf(t):
                for i, x in args[0].items():
                    add_into(out, {i: c * x})
                continue
            vdeg = [table.degree(v, SHIFT) for v in vertices(t)]
            nv = len(vdeg)
            order = [x if kind == "v" else nv + x - 1 for kind, x in tokens(t)]
            for combo in itertools.product(*[sorted(a.items()) for a in args]):
                idx = [i for i, _ in combo]
                coef = c
                for _, x in combo:
                    coef *= x
                sign = reorder_sign(vdeg + [self.degrees[i] for i in idx], order)
                dt = relabel(t, lambda l: idx[l - 1])
                s, ct = canonical(dt, table, SHIFT, self.ldeg, decorated=True)
                if s:
                    add_into(out, {ct: coef}, s * sign)
        return out

    def arities(self, w: int) -> List[int]:
        if w == 0:
            return [1]
        return [n for n in range(1, self.pres.max_arity + 1) if _cell_possible(self.pres, n, w)]

    def complete_weight(self) -> int:
        """Largest weight whose cells exist in every needed arity."""
        best = 0
        for w in range(1, self.max_weight + 1):
            ars = [g.arity for g in self.pres.generators]
            hi = 1 + w * (max(ars) - 1)
            if hi > self.pres.max_arity:
                break
            best = w
        return best

    def cell(self, w: int, n: int) -> List[Vec]:
        """RREF basis of P^¡(V)^{(w)} in total degree n, in monomial coordinates."""
        key = (w, n)
        if key in self._cells:
            return self._cells[key]
        ech = Echelon()
        for r in self.arities(w):
            kc = kdual_cell(self.pres, r, w)
            for i in range(kc.dim):
                terms = kc.terms_of(i)
                bdeg = self.degree_of_terms(terms)
                for tup in self._tuples(r, n - bdeg):
                    v = self.to_vec(self.decorate(terms, [{j: Fraction(1)} for j in tup]))
                    if v:
                        ech.add(v)
        basis = ech.rref()
        self._cells[key] = basis
        return basis

    def degree_of_terms(self, terms) -> int:
        t = next(iter(terms))
        if is_leaf(t):
            return 0
        return sum(self.pres.table.degree(v, SHIFT) for v in vertices(t))

    def _tuples(self, r: int, total: int) -> Iterable[Tuple[int, ...]]:
        # nondecreasing tuples suffice since each cell is closed under S_r
        dim = len(self.degrees)

        def rec(start, left, acc):
            if left == 0:
                if sum(self.degrees[i] for i in acc) == total:
                    yield tuple(acc)
                return
            for i in range(start, dim):
                yield from rec(i, left - 1, acc + [i])

        yield from rec(0, r, [])

    # -- coderivations and morphisms

    def coderivation(self, phi: Callable[[Tree], Vec]) -> Callable[[DVec], DVec]:
        """Extend φ (on decorated trees, leaves included) to a coderivation."""

        def apply_tree(t: Tree) -> DVec:
            out: DVec = {}
            for before, path, sub in _positions(t, self):
                val = phi(sub)
                if not val:
                    continue
                s = -1 if before % 2 else 1
                for i, c in val.items():
                    add_into(out, {_replace(t, path, i): c * s})
            return self.canon(out)

        def apply(v: DVec) -> DVec:
            out: DVec = {}
            for t, c in v.items():
                add_into(out, apply_tree(t), c)
            return out

        return apply

    def morphism(self, target: "DecoratedModel", f1: Callable[[Tree], Vec]) -> Callable[[DVec], DVec]:
        """Extend a degree-zero F_1: P^¡(V) → W to a morphism P^¡(V) → P^¡(W)."""

        def apply_tree(t: Tree) -> DVec:
            out: DVec = {}
            for shape, cuts in _cut_sets(t):
                vals = [f1(u) for u in cuts]
                if any(not v for v in vals):
                    continue
                for combo in itertools.product(*[sorted(v.items()) for v in vals]):
                    coef = Fraction(1)
                    for _, x in combo:
                        coef *= x
                    idx = [i for i, _ in combo]
                    add_into(out, {_fill(shape, idx): coef})
            return target.canon(out)

        def apply(v: DVec) -> DVec:
            out: DVec = {}
            for t, c in v.items():
                add_into(out, apply_tree(t), c)
            return out

        return apply


def _positions(t: Tree, model: DecoratedModel):
    """Yield (degree read before, path, full subtree) for every node of t."""
    table = model.pres.table
    acc = [0]

    def walk(s, path):
        yield acc[0], path, s
        if is_leaf(s):
            acc[0] += model.degrees[s]
            return
        acc[0] += table.degree(s[0], SHIFT)
        for k, c in enumerate(s[1]):
            yield from walk(c, path + (k,))

    yield from walk(t, ())


def _replace(t: Tree, path: Tuple[int, ...], leaf: int) -> Tree:
    if not path:
        return leaf
    name, kids = t
    k = path[0]
    return (name, kids[:k] + (_replace(kids[k], path[1:], leaf),) + kids[k + 1:])


def _cut_sets(t: Tree):
    """(shape with leaves 1..m in preorder, [cut subtrees]) over all cuts of t."""
    if is_leaf(t):
        yield 1, [t]
        return
    yield 1, [t]
    name, kids = t
    for choice in itertools.product(*[list(_cut_sets(c)) for c in kids]):
        shapes, cuts, off = [], [], 0
        for shape, cs in choice:
            shapes.append(relabel(shape, lambda l, o=off: l + o))
            cuts.extend(cs)
            off += len(cs)
        yield (name, tuple(shapes)), cuts


def _fill(shape: Tree, idx: Sequence[int]) -> Tree:
    return relabel(shape, lambda l: idx[l - 1])


# ---------------------------------------------------------------- the operadic complex


class FilteredComplex:
    """(P^¡(A), δ) truncated at weight W, filtered by weight."""

    def __init__(self, a: DgAlgebra, max_weight: Optional[int] = None):
        self.algebra = a
        self.model = DecoratedModel(a.operad, a.degrees, max_weight)
        self.max_weight = self.model.max_weight
        self.complete = min(self.model.complete_weight(), self.max_weight)
        self.delta = self.model.coderivation(self._phi)
        self._dcells: Dict[Tuple[int, int], List[Vec]] = {}

    def _phi(self, u: Tree) -> Vec:
        a = self.algebra
        if is_leaf(u):
            return a.d.column(u)
        name, kids = u
        if all(is_leaf(k) for k in kids):
            return a.act(name, [{k: Fraction(1)} for k in kids])
        return {}

    # -- pieces of δ

    def d_internal(self, v: DVec) -> DVec:
        """Weight-preserving part (the differential of A on decorations)."""
        return self._weight_part(v, 0)

    def d_kappa(self, v: DVec) -> DVec:
        """Weight-lowering part (contraction of one vertex)."""
        return self._weight_part(v, -1)

    def _weight_part(self, v: DVec, shift: int) -> DVec:
        out: DVec = {}
        for t, c in v.items():
            w = len(vertices(t))
            for s, x in self.delta({t: c}).items():
                if len(vertices(s)) == w + shift:
                    add_into(out, {s: x})
        return out

    def delta_vec(self, v: Vec) -> Vec:
        return self.model.to_vec(self.delta(self.model.to_trees(v)))

    def _cell_deltas(self, w: int, n: int) -> List[Vec]:
        if (w, n) not in self._dcells:
            self._dcells[(w, n)] = [self.delta_vec(b) for b in self.model.cell(w, n)]
        return self._dcells[(w, n)]

    # -- filtration pieces in one total degree

    def filtered_basis(self, p: int, n: int) -> List[Vec]:
        out: List[Vec] = []
        for w in range(0, min(p, self.max_weight) + 1):
            out.extend(self.model.cell(w, n))
        return out

    def _filtered_deltas(self, p: int, n: int) -> List[Vec]:
        out: List[Vec] = []
        for w in range(0, min(p, self.max_weight) + 1):
            out.extend(self._cell_deltas(w, n))
        return out

    def cycles_rel(self, r: int, p: int, n: int) -> List[Vec]:
        """Z^r_p in degree n: elements of F_p whose boundary lies in F_{p−r}."""
        if p < 0:
            return []
        basis = self.filtered_basis(p, n)
        if r <= 0:
            return basis
        cols = []
        for db in self._filtered_deltas(p, n):
            cols.append({i: c for i, c in db.items() if self.model.weight_of(i) > p - r})
        rows = sorted({i for c in cols for i in c})
        pos = {i: k for k, i in enumerate(rows)}
        m = Mat.from_columns(len(rows), [{pos[i]: c for i, c in col.items()} for col in cols])
        out = []
        for kv in kernel(m).basis:
            z: Vec = {}
            for j, c in kv.items():
                add_into(z, basis[j], c)
            out.append(z)
        return out

    def boundaries_rel(self, r: int, p: int, n: int) -> List[Vec]:
        """D^r_p in degree n: δ(Z^r_{p+r}) taken from degree n+1."""
        if r < 0:
            return []
        return [self.delta_vec(z) for z in self.cycles_rel(r, p + r, n + 1)]

    def is_partial(self, r: int, p: int) -> bool:
        return r >= 1 and p + r - 1 > self.complete or p > self.complete


@dataclass
class PageCell:
    p: int
    n: int
    quotient: Quotient
    partial: bool

    @property
    def q(self) -> int:
        return self.n - self.p

    @property
    def dim(self) -> int:
        return self.quotient.dim


@dataclass
class SpectralPage:
    r: int
    cells: Dict[Tuple[int, int], PageCell]
    differentials: Dict[Tuple[int, int], Mat] = field(default_factory=dict)

    def dims(self) -> Dict[Tuple[int, int], int]:
        return {k: c.dim for k, c in self.cells.items()}

    def to_json(self) -> dict:
        return {
            "page": self.r,
            "cells": [{"p": p, "q": q, "dim": c.dim, "partial": c.partial}
                      for (p, q), c in sorted(self.cells.items())],
            "differentials": [{"from": [p, q], "to": [p - self.r, q + self.r - 1],
                               "matrix": [[[x.numerator, x.denominator] for x in row] for row in m.to_dense()]}
                              for (p, q), m in sorted(self.differentials.items()) if m.nrows and m.ncols],
        }


def page_cell(fc: FilteredComplex, r: int, p: int, n: int) -> PageCell:
    num = fc.cycles_rel(r, p, n)
    den = fc.cycles_rel(r - 1, p - 1, n) + fc.boundaries_rel(r - 1, p, n)
    partial = fc.is_partial(r, p)
    if partial:
        warnings.warn(f"E^{r}_({p},{n - p}) needs data beyond the truncation", PartialPageWarning)
    return PageCell(p, n, Quotient(num, den), partial)


def page(fc: FilteredComplex, r: int, window: Tuple[Tuple[int, int], Tuple[int, int]]) -> SpectralPage:
    """E^r on the (p, q) window together with d_r between window cells."""
    (pmin, pmax), (qmin, qmax) = window
    cells: Dict[Tuple[int, int], PageCell] = {}
    for p in range(max(pmin, 0), min(pmax, fc.max_weight) + 1):
        for q in range(qmin, qmax + 1):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", PartialPageWarning)
                cells[(p, q)] = page_cell(fc, r, p, p + q)
    pg = SpectralPage(r, cells)
    for (p, q), cell in cells.items():
        tgt_key = (p - r, q + r - 1)
        if r == 0 or tgt_key[0] < 0:
            continue
        tgt = cells.get(tgt_key)
        if tgt is None:
            tgt = page_cell(fc, r, tgt_key[0], tgt_key[0] + tgt_key[1]) if tgt_key[0] >= 0 else None
        if tgt is None:
            continue
        m = Mat(tgt.dim, cell.dim)
        for j, z in enumerate(cell.quotient.reps):
            for i, x in enumerate(tgt.quotient.coords(fc.delta_vec(z))):
                if x:
                    m.data.setdefault(i, {})[j] = x
        pg.differentials[(p, q)] = m
    return pg


def operadic_complex(a: DgAlgebra, max_weight: Optional[int] = None) -> FilteredComplex:
    return FilteredComplex(a, max_weight)


# ---------------------------------------------------------------- staircases


@dataclass
class StaircaseReport:
    ok: bool
    problems: List[str]
    top: Optional[Vec] = None  # δ of the assembled chain, i.e. (−1)^{n−1} d'c_n

    def to_json(self) -> dict:
        return {"ok": self.ok, "problems": self.problems}


def staircase(fc: FilteredComplex, chain: Sequence[DVec]) -> StaircaseReport:
    """Check d''c_1 = 0 and d'c_s = d''c_{s+1}; return δ(Σ (−1)^{s−1} c_s)."""
    probs = []
    if fc.d_internal(chain[0]):
        probs.append("d'' c_1 != 0")
    for s in range(len(chain) - 1):
        lhs = fc.d_kappa(chain[s])
        rhs = fc.d_internal(chain[s + 1])
        diff = dict(lhs)
        add_into(diff, rhs, -1)
        if diff:
            probs.append(f"d' c_{s + 1} != d'' c_{s + 2}")
    x: DVec = {}
    for s, c in enumerate(chain):
        add_into(x, c, -1 if s % 2 else 1)
    top = fc.delta(x)
    expect = fc.d_kappa(chain[-1])
    diff = dict(top)
    add_into(diff, expect, 1 if (len(chain) - 1) % 2 else -1)
    if not probs and diff:
        probs.append("δ of the assembled chain is not ±d'c_n")
    return StaircaseReport(not probs, probs, fc.model.to_vec(top))


def massey_chain(fc: FilteredComplex, ds) -> List[DVec]:
    """c_1, ..., c_w from a weight-w defining system: c_s has outer weight w−s+1.

    c_s is (−1)^{s−1} times the outer-weight-(w−s+1) part of Δ(Γ) with the inner
    parts replaced by their defining-system elements; the alternation
    compensates the sign in d a = −P.
    """
    from .kdual import SplitTerm, coproduct_plus, ref_terms
    from .massey import _part_keys, _term_sign

    g: Cooperation = ds.root
    model = fc.model
    slots = tuple(range(1, g.arity + 1))
    chain = []
    for k in range(g.weight, 0, -1):
        alt = -1 if (g.weight - k) % 2 else 1
        out: DVec = {}
        for coeff, outer, parts, sigma in coproduct_plus(g, k):
            st = SplitTerm(coeff, {}, outer, parts, sigma)
            keys = _part_keys(st, slots)
            args = [ds.get(key) for key in keys]
            if any(not v for v in args):
                continue
            s = _term_sign(g.pres, st, slots, ds.xdeg)
            add_into(out, model.decorate(ref_terms(g.pres, outer), args), coeff * s * alt)
        chain.append(out)
    return chain


@dataclass
class MasseyDifferentialReport:
    ok: bool
    problems: List[str]
    page: int
    sign: Optional[int]
    staircase: StaircaseReport

    def to_json(self) -> dict:
        return {"ok": self.ok, "problems": self.problems, "page": self.page, "sign": self.sign,
                "staircase": self.staircase.to_json()}


def check_massey_differential(fc: FilteredComplex, ds) -> MasseyDifferentialReport:
    """[Γ⊗x] survives to E^w and d^w of it is ±[id⊗x] for the system's class x."""
    from .massey import massey_product

    g = ds.root
    w = g.weight
    chain = massey_chain(fc, ds)
    sc = staircase(fc, chain)
    probs = list(sc.problems)
    out = massey_product(ds)
    model = fc.model
    n = model.degree(next(iter(chain[0]))) if chain[0] else None
    sign = None
    if chain[0] and not probs:
        # the assembled chain lies in Z^w_w and its boundary represents d^w[c_1]
        zvec = {}
        for s, c in enumerate(chain):
            add_into(zvec, model.to_vec(c), -1 if s % 2 else 1)
        zrel = fc.cycles_rel(w, w, n)
        if not Echelon(zrel).contains(zvec):
            probs.append("the assembled chain is not in Z^w_w")
        with warnings.catch_warnings():
            # only the lead cell can be truncated here, which makes its check conservative
            warnings.simplefilter("ignore", PartialPageWarning)
            tgt = page_cell(fc, w, 0, n - 1)
            lead = page_cell(fc, w, w, n)
        img = fc.delta_vec(zvec)
        massey = model.to_vec(model.decorate({1: Fraction(1)}, [out.cycle]))
        for eps in (1, -1):
            diff = dict(img)
            add_into(diff, massey, -eps)
            if tgt.quotient.is_zero(diff):
                sign = eps
                break
        if sign is None:
            probs.append("d^w[Γ⊗x] differs from ±[id⊗x]")
        if lead.quotient.is_zero(zvec) and not tgt.quotient.is_zero(massey):
            probs.append("[Γ⊗x] vanishes on page w but its differential does not")
    return MasseyDifferentialReport(not probs, probs, w, sign, sc)
