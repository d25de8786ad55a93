"""Truncated Koszul dual cooperads, the decomposition map and the Massey map D.

Cells of P^¡ = F^c(sE, s²R) live inside the span of canonical tree monomials
read with suspended generator degrees (shift 1).  A cell is computed
recursively: an element of arity n and weight w is a sum over root
generators of (g; X) with X in a tensor product of lower cells, and the only
new conditions are the co-restrictions at the edges touching the root.

Each cell carries a *decomposition basis*: named elements and their
symmetric-group translates first, completed by RREF vectors.  Defining
systems are indexed by these basis elements.
"""
from __future__ import annotations

import itertools
import json
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .linalg import Echelon, Mat, StructuralError, Subspace, Vec, add_into, inverse, kernel
from .operad import MARK, MonomialBasis, OperadMorphism, Presentation, edge_splits, substitute
from .trees import (
    Perm,
    Tree,
    _ordered_partitions,
    _set_partitions_sorted,
    _weight_splits,
    act,
    all_perms,
    arity,
    canonical,
    compose_sign,
    is_leaf,
    leaves,
    min_label,
    relabel,
    standardize,
    tree_degree,
    vertices,
    weight,
)

SHIFT = 1
ID_NAME = "id"

TermDict = Dict[Tree, Fraction]


@dataclass(frozen=True)
class BasisRef:
    """A decomposition-basis element of the cell (arity, weight)."""

    arity: int
    weight: int
    index: int
    name: str

    @property
    def is_id(self) -> bool:
        return self.weight == 0

    def __repr__(self) -> str:
        return self.name


ID_REF = BasisRef(1, 0, 0, ID_NAME)


@dataclass(eq=False)
class Cooperation:
    """An element of P^¡(arity)^(weight), as canonical suspended monomials."""

    pres: Presentation
    arity: int
    weight: int
    terms: TermDict

    def coords(self) -> List[Fraction]:
        return kdual_cell(self.pres, self.arity, self.weight).coords(self.terms)

    def degree(self) -> int:
        t = next(iter(self.terms), None)
        return 0 if t is None else tree_degree(t, self.pres.table, SHIFT)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "Cooperation") -> "Cooperation":
        out = dict(self.terms)
        add_into(out, other.terms)
        return Cooperation(self.pres, self.arity, self.weight, out)

    def scale(self, c) -> "Cooperation":
        return Cooperation(self.pres, self.arity, self.weight,
                           {t: Fraction(c) * x for t, x in self.terms.items()} if c else {})

    def act(self, sigma: Perm) -> "Cooperation":
        return Cooperation(self.pres, self.arity, self.weight, act_coop(self.pres, sigma, self.terms))


@dataclass
class SplitTerm:
    """One term (ζ; parts; σ) of D, with ζ = κ(outer) an operad element."""

    coeff: Fraction
    zeta: TermDict
    outer: BasisRef
    parts: Tuple[BasisRef, ...]
    sigma: Perm

    def blocks(self) -> List[Tuple[int, ...]]:
        """Global labels of each part, increasing inside a block."""
        inv = self.sigma.inverse()
        out, pos = [], 1
        for p in self.parts:
            out.append(tuple(inv(i) for i in range(pos, pos + p.arity)))
            pos += p.arity
        return out


# ---------------------------------------------------------------- cells


class CooperadCell:
    def __init__(self, pres: Presentation, n: int, w: int, monos: MonomialBasis, space: Subspace):
        self.pres = pres
        self.arity = n
        self.weight = w
        self.monos = monos
        self.space = space
        self.basis: List[Vec] = []
        self.names: List[str] = []
        self._inv: Optional[Mat] = None

    @property
    def dim(self) -> int:
        return self.space.dim

    def set_basis(self, vectors: Sequence[Vec], names: Sequence[str]) -> None:
        if len(vectors) != self.dim:
            raise StructuralError("decomposition basis has the wrong size")
        m = Mat(self.dim, self.dim)
        for j, b in enumerate(vectors):
            for i, p in enumerate(self.space.pivots):
                x = b.get(p)
                if x:
                    m.data.setdefault(i, {})[j] = x
        self._inv = inverse(m)
        self.basis = list(vectors)
        self.names = list(names)

    def ref(self, i: int) -> BasisRef:
        return BasisRef(self.arity, self.weight, i, self.names[i])

    def refs(self) -> List[BasisRef]:
        return [self.ref(i) for i in range(self.dim)]

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def element(self, i: int) -> Cooperation:
        return Cooperation(self.pres, self.arity, self.weight, self.monos.to_trees(self.basis[i]))

    def terms_of(self, i: int) -> TermDict:
        return self.monos.to_trees(self.basis[i])

    def contains(self, terms: TermDict) -> bool:
        try:
            v = self.monos.to_vec(terms)
        except KeyError:
            return False
        return self.space.contains(v)

    def coords(self, terms: TermDict) -> List[Fraction]:
        """Coordinates on the decomposition basis; raises if outside the cell."""
        try:
            v = self.monos.to_vec(terms)
        except KeyError as e:
            raise StructuralError(f"term {e} is not a canonical monomial of this cell") from e
        if not self.space.contains(v):
            raise StructuralError(f"element is not in P^¡({self.arity})^({self.weight})")
        piv = {i: v[p] for i, p in enumerate(self.space.pivots) if p in v}
        c = self._inv.apply(piv)
        return [c.get(i, Fraction(0)) for i in range(self.dim)]

    def combine(self, coords: Sequence) -> TermDict:
        out: Vec = {}
        for i, c in enumerate(coords):
            if c:
                add_into(out, self.basis[i], Fraction(c))
        return self.monos.to_trees(out)


def _canon(pres: Presentation, t: Tree) -> Tuple[int, Optional[Tree]]:
    return canonical(t, pres.table, SHIFT)


def canon_terms(pres: Presentation, v: TermDict) -> TermDict:
    out: TermDict = {}
    for t, c in v.items():
        s, ct = _canon(pres, t)
        if s:
            add_into(out, {ct: c}, s)
    return out


def act_coop(pres: Presentation, sigma: Perm, v: TermDict) -> TermDict:
    return canon_terms(pres, {act(sigma, t): c for t, c in v.items()})


def suspended_relations(pres: Presentation, k: int) -> Subspace:
    """s²R(k) inside the suspended weight-2 monomials, closed under S_k."""
    key = ("s2R", k)
    if key not in pres._cache:
        basis = pres.monomials(k, 2)
        ech = Echelon()
        for rel in pres.relations:
            if arity(next(iter(rel))) != k:
                continue
            # s²(u ∘ v) = (−1)^|u| (su ∘ sv) with u the root
            susp = {t: c * (-1 if pres.table.degree(t[0]) & 1 else 1) for t, c in rel.items()}
            for s in all_perms(k):
                ech.add(basis.to_vec(act_coop(pres, s, susp)))
        pres._cache[key] = Subspace(len(basis), _rref=ech.rref())
    return pres._cache[key]


def root_splits(t: Tree, pres: Presentation) -> Iterable[Tuple[Tree, Tree]]:
    for ctx, piece in edge_splits(t, pres.table, SHIFT):
        if ctx[0] == MARK:
            yield ctx, piece


def kdual_cell(pres: Presentation, n: int, w: int) -> CooperadCell:
    """P^¡(n)^(w), computed (and cached) within the presentation's bounds."""
    key = ("kd", n, w)
    if key in pres._cache:
        return pres._cache[key]
    if n < 1 or w < 0:
        raise StructuralError(f"no cell of arity {n} and weight {w}")
    pres.check_bounds(n, w)
    cell = _load_cached(pres, n, w)
    if cell is None:
        cell = _compute_cell(pres, n, w)
        _choose_basis(cell)
        _store_cached(cell)
    pres._cache[key] = cell
    names = pres._cache.setdefault("kd_names", {})
    for r in cell.refs():
        names[r.name] = r
    return cell


def _compute_cell(pres: Presentation, n: int, w: int) -> CooperadCell:
    if w == 0:
        monos = MonomialBasis([1] if n == 1 else [])
        return CooperadCell(pres, n, w, monos, Subspace(len(monos), [{0: Fraction(1)}] if n == 1 else []))
    monos = pres.monomials(n, w)
    if w == 1:
        full = [{i: Fraction(1)} for i in range(len(monos))]
        return CooperadCell(pres, n, w, monos, Subspace(len(monos), _rref=full))
    cands = _candidates(pres, n, w)
    rows: Dict[Tuple[Tree, int], Vec] = {}
    for j, cand in enumerate(cands):
        per_ctx: Dict[Tree, TermDict] = {}
        for t, c in cand.items():
            for ctx, piece in root_splits(t, pres):
                s, t2 = substitute(ctx, piece, pres.table, SHIFT)
                if t2 != t:
                    raise StructuralError("edge split does not reassemble its tree")
                add_into(per_ctx.setdefault(ctx, {}), {piece: c}, s)
        for ctx, pv in per_ctx.items():
            k = len(ctx[1])
            res = suspended_relations(pres, k).reduce(pres.monomials(k, 2).to_vec(pv))
            for i, x in res.items():
                rows.setdefault((ctx, i), {})[j] = x
    m = Mat(len(rows), len(cands), {r: v for r, v in enumerate(rows.values())})
    vecs = []
    for kv in kernel(m).basis:
        out: TermDict = {}
        for j, c in kv.items():
            add_into(out, cands[j], c)
        vecs.append(monos.to_vec(out))
    return CooperadCell(pres, n, w, monos, Subspace(len(monos), vecs))


def _candidates(pres: Presentation, n: int, w: int) -> List[TermDict]:
    table = pres.table
    labels = tuple(range(1, n + 1))
    out: List[TermDict] = []
    for name in table.names():
        k = table.arity(name)
        if k > n:
            continue
        parts = _set_partitions_sorted(labels, k) if table.sym.get(name) is not None else _ordered_partitions(labels, k)
        for blocks in parts:
            for wts in _weight_splits(w - 1, [len(b) for b in blocks]):
                factors = []
                for b, bw in zip(blocks, wts):
                    sub = kdual_cell(pres, len(b), bw)
                    rel = dict(zip(range(1, len(b) + 1), b))
                    factors.append([{relabel(t, rel.__getitem__): c for t, c in sub.monos.to_trees(v).items()}
                                    for v in sub.space.basis])
                for combo in itertools.product(*factors):
                    cand: TermDict = {}
                    for kids in itertools.product(*[list(f.items()) for f in combo]):
                        coef = Fraction(1)
                        for _, c in kids:
                            coef *= c
                        s, t = _canon(pres, (name, tuple(kt for kt, _ in kids)))
                        if s:
                            add_into(cand, {t: coef}, s)
                    if cand:
                        out.append(cand)
    return out


# ---------------------------------------------------------------- named elements


def _identity_order_element(cell: CooperadCell) -> Optional[Vec]:
    ident = tuple(range(1, cell.arity + 1))
    others = [i for i, t in enumerate(cell.monos.monos) if tuple(leaves(t)) != ident]
    return _unique_with_zeros(cell, others)


def _unique_with_zeros(cell: CooperadCell, zero_at: Sequence[int]) -> Optional[Vec]:
    """The unique (up to scale) cell vector vanishing at the given monomials."""
    if cell.dim == 0:
        return None
    m = Mat(len(zero_at), cell.dim)
    for r, i in enumerate(zero_at):
        for j, b in enumerate(cell.space.basis):
            if i in b:
                m.data.setdefault(r, {})[j] = b[i]
    ker = kernel(m)
    if ker.dim != 1:
        return None
    v: Vec = {}
    for j, c in ker.basis[0].items():
        add_into(v, cell.space.basis[j], c)
    return v


def _d_coeff(pres: Presentation, terms: TermDict, outer_gen: str, parts: Tuple[str, ...]) -> Fraction:
    """Coefficient in D(terms) of (outer_gen; parts; identity)."""
    total = Fraction(0)
    for st in _split_terms(pres, terms, only_outer_weight=1):
        if not st.sigma.is_identity() or tuple(p.name for p in st.parts) != parts:
            continue
        (ot, oc), = st.zeta.items()
        if ot == (outer_gen, tuple(range(1, len(parts) + 1))):
            total += st.coeff * oc
    return total


def _normalize(v: Vec, c: Fraction) -> Vec:
    if not c:
        raise StructuralError("normalising coefficient vanishes")
    return {i: x / c for i, x in v.items()}


def _named_elements(cell: CooperadCell) -> List[Tuple[str, Vec]]:
    pres, n, w = cell.pres, cell.arity, cell.weight
    kind = pres.name.lower()
    out: List[Tuple[str, Vec]] = []
    if w == 0:
        return [(ID_NAME, {0: Fraction(1)})] if n == 1 else []
    if kind in ("ass", "lie") and n == w + 1:
        stem = "mu" if kind == "ass" else "tau"
        gen = pres.generators[0].name
        v = _identity_order_element(cell) if kind == "ass" else (cell.space.basis[0] if cell.dim == 1 else None)
        if v is not None:
            if n == 2:
                c = v[cell.monos.index[(gen, (1, 2))]]
            else:
                c = _d_coeff(pres, cell.monos.to_trees(v), gen, (ID_NAME, f"{stem}{n - 1}c"))
            out.append((f"{stem}{n}c", _normalize(v, c)))
        return out
    if kind == "dual" and n == 1:
        t = ("tri", (1,))
        for _ in range(w - 1):
            t = ("tri", (t,))
        if cell.dim == 1 and t in cell.monos.index:
            v = {cell.monos.index[t]: Fraction(1)}
            if cell.space.contains(v):
                out.append((f"delta{w}", v))
        return out
    if kind == "pois" and n == 3 and w == 2:
        lead = ("br", (("wedge", (1, 2)), 3))
        avoid = {("br", (("wedge", (1, 3)), 2)), ("br", (1, ("wedge", (2, 3))))}
        zero_at = [i for i, t in enumerate(cell.monos.monos)
                   if t in avoid or len(set(vertices(t))) == 1]
        v = _unique_with_zeros(cell, zero_at)
        if v is not None and cell.monos.index.get(lead) in v:
            out.append(("pois3", _normalize(v, v[cell.monos.index[lead]])))
        return out
    if w == 1:
        for g in pres.generators:
            if g.arity == n:
                stem = "mu2c" if kind == "com" and g.name == "mu" else f"{g.name}c"
                out.append((stem, {cell.monos.index[(g.name, tuple(range(1, n + 1)))]: Fraction(1)}))
    return out


def _choose_basis(cell: CooperadCell) -> None:
    ech = Echelon()
    vecs: List[Vec] = []
    names: List[str] = []

    def push(v: Vec, name: str) -> None:
        if ech.add(v):
            vecs.append(v)
            names.append(name)

    for name, v in _named_elements(cell):
        push(v, name)
        for s in all_perms(cell.arity):
            if len(vecs) == cell.dim:
                break
            if s.is_identity():
                continue
            moved = cell.monos.to_vec(act_coop(cell.pres, s, cell.monos.to_trees(v)))
            push(moved, f"{name}^{''.join(map(str, s.images))}")
    i = 0
    for b in cell.space.basis:
        if len(vecs) == cell.dim:
            break
        if not ech.contains(b):
            push(b, f"c{cell.arity}w{cell.weight}.{i}")
            i += 1
    cell.set_basis(vecs, names)


def lookup(pres: Presentation, name: str) -> BasisRef:
    """Find a decomposition-basis element by name, computing cells as needed."""
    if name == ID_NAME:
        return ID_REF
    names = pres._cache.setdefault("kd_names", {})
    if name in names:
        return names[name]
    for w in range(1, pres.max_weight + 1):
        for n in range(1, pres.max_arity + 1):
            if _cell_possible(pres, n, w):
                kdual_cell(pres, n, w)
                if name in names:
                    return names[name]
    raise KeyError(f"unknown cooperation {name!r} for operad {pres.name}")


def _cell_possible(pres: Presentation, n: int, w: int) -> bool:
    # an n-ary tree of weight w needs 1 + Σ(arity−1) = n
    ars = [g.arity for g in pres.generators]
    lo = 1 + w * (min(ars) - 1)
    hi = 1 + w * (max(ars) - 1)
    return lo <= n <= hi


def cooperation(pres: Presentation, name: str) -> Cooperation:
    r = lookup(pres, name)
    if r.is_id:
        return Cooperation(pres, 1, 0, {1: Fraction(1)})
    return kdual_cell(pres, r.arity, r.weight).element(r.index)


def ref_terms(pres: Presentation, r: BasisRef) -> TermDict:
    if r.is_id:
        return {1: Fraction(1)}
    return kdual_cell(pres, r.arity, r.weight).terms_of(r.index)


def ref_degree(pres: Presentation, r: BasisRef) -> int:
    if r.is_id:
        return 0
    t = next(iter(ref_terms(pres, r)))
    return tree_degree(t, pres.table, SHIFT)


# ---------------------------------------------------------------- decomposition


def _top_subtrees(t: Tree) -> Iterable[Tuple[Tree, List[Tree]]]:
    """Yield (S, blocks): S a top subtree with leaf j marking blocks[j-1]."""

    def rec(s, counter):
        # returns list of (shape_with_placeholder_leaves, blocks)
        name, kids = s
        options = []
        for c in kids:
            opts = [("cut", c)]
            if not is_leaf(c):
                opts += [("keep", r) for r in rec(c, counter)]
            options.append(opts)
        res = []
        for choice in itertools.product(*options):
            shape_kids, blocks = [], []
            for kind, val in choice:
                if kind == "cut":
                    shape_kids.append(None)
                    blocks.append(val)
                else:
                    shape_kids.append(val[0])
                    blocks.extend(val[1])
            res.append(((name, tuple(shape_kids)), blocks))
        return res

    for shape, blocks in rec(t, None):
        it = iter(range(1, len(blocks) + 1))

        def fill(s):
            if s is None:
                return next(it)
            return (s[0], tuple(fill(c) for c in s[1]))

        yield fill(shape), blocks


def _split_monomial(pres: Presentation, t: Tree, only_outer_weight: Optional[int] = None):
    """Terms of Δ⁺(t) in normal form: blocks ordered by minimum label.

    Yields (sign, S, standardized blocks, σ) with t = sign·(S; blocks; σ).
    """
    table = pres.table
    for S, blocks in _top_subtrees(t):
        if only_outer_weight is not None and weight(S) != only_outer_weight:
            continue
        order = sorted(range(len(blocks)), key=lambda j: min_label(blocks[j]))
        rank = {j: r for r, j in enumerate(order, 1)}
        s_rank = relabel(S, lambda l: rank[l - 1])
        bdeg = {rank[j]: tree_degree(b, table, SHIFT) for j, b in enumerate(blocks)}
        sign = compose_sign(s_rank, table, SHIFT, bdeg)
        c, s_can = _canon(pres, s_rank)
        if not c:
            continue
        ordered = [blocks[j] for j in order]
        concat: List[int] = []
        for b in ordered:
            concat.extend(sorted(leaves(b)))
        sigma = Perm(tuple(concat)).inverse()
        yield sign * c, s_can, tuple(1 if is_leaf(b) else standardize(b) for b in ordered), sigma


def coproduct_plus_terms(pres: Presentation, terms: TermDict, only_outer_weight: Optional[int] = None):
    """Δ⁺ in monomial form: {(S, blocks, σ): coeff}."""
    out: Dict[tuple, Fraction] = {}
    for t, c in terms.items():
        for s, S, blocks, sigma in _split_monomial(pres, t, only_outer_weight):
            add_into(out, {(S, blocks, sigma.images): c}, s)
    return out


def _tensor_coords(pres: Presentation, mono_terms: Dict[tuple, Fraction], cells: Sequence[Tuple[int, int]]):
    """Rewrite {(m_1..m_k): c} over decomposition bases, factor by factor."""
    cur: Dict[tuple, Fraction] = dict(mono_terms)
    for pos, (n, w) in enumerate(cells):
        cell = kdual_cell(pres, n, w)
        groups: Dict[tuple, TermDict] = {}
        for key, c in cur.items():
            rest = key[:pos] + (None,) + key[pos + 1:]
            add_into(groups.setdefault(rest, {}), {key[pos]: c})
        nxt: Dict[tuple, Fraction] = {}
        for rest, v in groups.items():
            for i, x in enumerate(cell.coords(v)):
                if x:
                    nxt[rest[:pos] + (cell.ref(i),) + rest[pos + 1:]] = x
        cur = nxt
    return cur


def _cell_of(t: Tree) -> Tuple[int, int]:
    return (1, 0) if is_leaf(t) else (arity(t), weight(t))


def coproduct_plus(g: Cooperation, only_outer_weight: Optional[int] = None) -> List[Tuple[Fraction, BasisRef, Tuple[BasisRef, ...], Perm]]:
    """Δ⁺(g) over decomposition bases: (coeff, outer, inner parts, σ).

    The (id; g) term is absent and (g; id, ..., id) is kept.
    """
    if g.weight < 1:
        raise StructuralError("Δ⁺ needs weight >= 1")
    pres = g.pres
    raw = coproduct_plus_terms(pres, g.terms, only_outer_weight)
    groups: Dict[tuple, Dict[tuple, Fraction]] = {}
    for (S, blocks, sig), c in raw.items():
        shape = (sig, _cell_of(S)) + tuple(_cell_of(b) for b in blocks)
        add_into(groups.setdefault(shape, {}), {(S,) + blocks: c})
    out = []
    for shape, v in sorted(groups.items(), key=lambda kv: repr(kv[0])):
        sig, cells = shape[0], shape[1:]
        for refs, c in sorted(_tensor_coords(pres, v, cells).items(), key=lambda kv: repr(kv[0])):
            out.append((c, refs[0], tuple(refs[1:]), Perm(sig)))
    return out


def kappa_terms(pres: Presentation, terms: TermDict) -> TermDict:
    """κ: projection to weight 1 followed by desuspension; zero above."""
    return {t: c for t, c in terms.items() if weight(t) == 1}


def kappa(g: Cooperation) -> TermDict:
    return kappa_terms(g.pres, g.terms) if g.weight == 1 else {}


def _split_terms(pres: Presentation, terms: TermDict, only_outer_weight: int = 1) -> List[SplitTerm]:
    if not terms:
        return []
    t0 = next(iter(terms))
    g = Cooperation(pres, arity(t0), weight(t0), terms)
    out = []
    for c, outer, parts, sigma in coproduct_plus(g, only_outer_weight):
        out.append(SplitTerm(c, kappa_terms(pres, ref_terms(pres, outer)), outer, parts, sigma))
    return out


def massey_D(g: Cooperation) -> List[SplitTerm]:
    """D = (κ ∘ id) Δ⁺: outer factor of weight one, inner parts of lower weight."""
    if g.weight < 1:
        raise StructuralError("D needs weight >= 1")
    if not g.terms:
        return []
    return _split_terms(g.pres, g.terms, 1)


def massey_D_ref(pres: Presentation, r: BasisRef) -> List[SplitTerm]:
    key = ("D", r)
    if key not in pres._cache:
        pres._cache[key] = _split_terms(pres, ref_terms(pres, r), 1)
    return pres._cache[key]


def split_to_tree(pres: Presentation, st: SplitTerm) -> TermDict:
    """Flatten (ζ; parts; σ) into one tree with marked outer vertices.

    Outer vertices are renamed ``op:g`` (unsuspended) and inner ones ``co:g``;
    the result is canonical under a joint generator table, which gives a
    normal form for comparing split expansions written in different ways.
    """
    table = flat_table(pres)
    out: TermDict = {}
    part_terms = [ref_terms(pres, p) for p in st.parts]
    for z, zc in st.zeta.items():
        for combo in itertools.product(*[list(p.items()) for p in part_terms]):
            coef = st.coeff * zc
            kids = []
            base = 0
            for (pt, pc), p in zip(combo, st.parts):
                coef *= pc
                kids.append(_rename(relabel(pt, lambda l, b=base: l + b), "co:"))
                base += p.arity
            flat = _graft_all(("op:" + z[0], z[1]), kids)
            flat = act(st.sigma, flat)
            s, ct = canonical(flat, table, 0)
            if s:
                add_into(out, {ct: coef}, s)
    return out


def _rename(t: Tree, prefix: str) -> Tree:
    if is_leaf(t):
        return t
    return (prefix + t[0], tuple(_rename(c, prefix) for c in t[1]))


def _graft_all(outer: Tree, kids: Sequence[Tree]) -> Tree:
    if is_leaf(outer):
        return kids[outer - 1]
    return (outer[0], tuple(_graft_all(c, kids) for c in outer[1]))


def flat_table(pres: Presentation):
    from .trees import GenSym, GenTable

    gens, sym = {}, {}
    for g in pres.generators:
        gens["op:" + g.name] = GenSym("op:" + g.name, g.arity, g.degree)
        gens["co:" + g.name] = GenSym("co:" + g.name, g.arity, g.degree + SHIFT)
        sym["op:" + g.name] = sym["co:" + g.name] = pres.sym.get(g.name)
    return GenTable(gens, sym)


# ---------------------------------------------------------------- morphisms


def induced_terms(m: OperadMorphism, terms: TermDict) -> TermDict:
    out: TermDict = {}
    for t, c in terms.items():
        if is_leaf(t):
            add_into(out, {t: c})
        else:
            add_into(out, m.map_tree(t, SHIFT), c)
    return out


def induced_map(m: OperadMorphism, g: Cooperation) -> Cooperation:
    """f^¡(g), checked to land in the target cell."""
    img = induced_terms(m, g.terms)
    if g.weight > 0:
        cell = kdual_cell(m.target, g.arity, g.weight)
        if img and not cell.contains(img):
            raise StructuralError("f^¡(g) is not in the target Koszul dual cell; the morphism is broken")
    return Cooperation(m.target, g.arity, g.weight, img)


# ---------------------------------------------------------------- disk cache


def cache_dir() -> Optional[Path]:
    d = os.environ.get("OPMASSEY_CACHE")
    return Path(d) if d else None


def _cache_file(pres: Presentation, n: int, w: int) -> Optional[Path]:
    d = cache_dir()
    if d is None:
        return None
    return d / f"{pres.content_hash}-{n}-{w}.json"


def _vec_json(v: Vec) -> list:
    return [[i, x.numerator, x.denominator] for i, x in sorted(v.items())]


def _vec_from_json(rows) -> Vec:
    return {int(i): Fraction(int(a), int(b)) for i, a, b in rows}


def _load_cached(pres: Presentation, n: int, w: int) -> Optional[CooperadCell]:
    path = _cache_file(pres, n, w)
    if path is None or not path.exists():
        return None
    try:
        obj = json.loads(path.read_text())
        monos = pres.monomials(n, w) if w else MonomialBasis([1] if n == 1 else [])
        if obj["monomials"] != len(monos):
            return None
        space = Subspace(len(monos), _rref=[_vec_from_json(r) for r in obj["space"]])
        cell = CooperadCell(pres, n, w, monos, space)
        cell.set_basis([_vec_from_json(r) for r in obj["basis"]], obj["names"])
        return cell
    except (OSError, ValueError, KeyError, StructuralError):
        return None


def _store_cached(cell: CooperadCell) -> None:
    path = _cache_file(cell.pres, cell.arity, cell.weight)
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    obj = {
        "monomials": len(cell.monos),
        "space": [_vec_json(b) for b in cell.space.basis],
        "basis": [_vec_json(b) for b in cell.basis],
        "names": cell.names,
    }
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(obj, fh)
    os.replace(tmp, path)
