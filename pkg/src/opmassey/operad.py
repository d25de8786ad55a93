"""Quadratic operad presentations and their truncated quotient cells."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .linalg import Echelon, StructuralError, Subspace, Vec, add_into, frac
from .trees import (
    GenSym,
    GenTable,
    Perm,
    Tree,
    act,
    all_perms,
    arity,
    canonical,
    canonical_monomials,
    canonicalize_vec,
    compose_sign,
    from_json_tree,
    graft,
    is_leaf,
    min_label,
    tree_degree,
    vertices,
    weight,
)

MARK = "*"

DEFAULT_MAX_ARITY = 5
DEFAULT_MAX_WEIGHT = 4


class UnsupportedFeature(ValueError):
    pass


class ParseError(ValueError):
    pass


class MonomialBasis:
    """Canonical monomials of one (arity, weight) cell with index lookup."""

    def __init__(self, monos: Sequence[Tree]):
        self.monos = list(monos)
        self.index = {m: i for i, m in enumerate(self.monos)}

    def __len__(self) -> int:
        return len(self.monos)

    def to_vec(self, v: Dict[Tree, Fraction]) -> Vec:
        return {self.index[t]: c for t, c in v.items()}

    def to_trees(self, v: Vec) -> Dict[Tree, Fraction]:
        return {self.monos[i]: c for i, c in v.items()}


@dataclass
class Presentation:
    name: str
    generators: List[GenSym]
    sym: Dict[str, Optional[int]]
    relations: List[Dict[Tree, Fraction]]
    max_arity: int = DEFAULT_MAX_ARITY
    max_weight: int = DEFAULT_MAX_WEIGHT
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.generators:
            raise ParseError("no generators")
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise ParseError("duplicate generator names")
        if MARK in names or "id" in names:
            raise ParseError(f"generator names {MARK!r} and 'id' are reserved")
        for rel in self.relations:
            for t in rel:
                if weight(t) != 2:
                    raise ParseError("relations must have weight exactly 2")
                for v in vertices(t):
                    if v not in names:
                        raise ParseError(f"relation uses unknown generator {v!r}")
            degs = {tree_degree(t, self.table) for t in rel}
            if len(degs) > 1:
                raise ParseError("relation is not homogeneous in degree")

    # -- basic data

    @cached_property
    def table(self) -> GenTable:
        return GenTable({g.name: g for g in self.generators}, dict(self.sym))

    @cached_property
    def content_hash(self) -> str:
        import hashlib

        blob = json.dumps(presentation_to_json(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def gen(self, name: str) -> GenSym:
        return self.table.gens[name]

    def is_reduced(self) -> bool:
        return all(g.arity >= 2 for g in self.generators)

    def monomials(self, n: int, w: int) -> MonomialBasis:
        key = ("monos", n, w)
        if key not in self._cache:
            self._cache[key] = MonomialBasis(canonical_monomials(self.table, n, w))
        return self._cache[key]

    def canon(self, v: Dict[Tree, Fraction], shift: int = 0) -> Dict[Tree, Fraction]:
        return canonicalize_vec(v, self.table, shift)

    # -- relations

    def relation_space(self, k: int) -> Subspace:
        """S_k-closed span of the relations of arity k, canonical coordinates."""
        key = ("rel", k)
        if key not in self._cache:
            basis = self.monomials(k, 2)
            ech = Echelon()
            for rel in self.relations:
                if arity(next(iter(rel))) != k:
                    continue
                for s in all_perms(k):
                    moved = {act(s, t): c for t, c in rel.items()}
                    ech.add(basis.to_vec(self.canon(moved)))
            self._cache[key] = Subspace(len(basis), _rref=ech.rref())
        return self._cache[key]

    def relation_arities(self) -> List[int]:
        ks = set()
        for g in self.generators:
            for h in self.generators:
                ks.add(g.arity + h.arity - 1)
        return sorted(ks)

    # -- ideal and quotient cells

    def ideal_cell(self, n: int, w: int) -> Subspace:
        if w < 2:
            raise StructuralError("ideal cells start at weight 2")
        key = ("ideal", n, w)
        if key not in self._cache:
            basis = self.monomials(n, w)
            ech = Echelon()
            for ctx in contexts(self, n, w):
                k = len(ctx_children(ctx))
                rel = self.relation_space(k)
                pieces = self.monomials(k, 2)
                for r in rel.basis:
                    out: Dict[Tree, Fraction] = {}
                    for i, c in r.items():
                        s, t = substitute(ctx, pieces.monos[i], self.table, 0)
                        if s:
                            add_into(out, {t: c}, s)
                    if out:
                        ech.add(basis.to_vec(out))
            self._cache[key] = Subspace(len(basis), _rref=ech.rref())
        return self._cache[key]

    def operad_cell(self, n: int, w: int) -> "OperadCell":
        key = ("cell", n, w)
        if key not in self._cache:
            basis = self.monomials(n, w)
            if w >= 2:
                ideal = self.ideal_cell(n, w)
            else:
                ideal = Subspace(len(basis))
            self._cache[key] = OperadCell(self, n, w, basis, ideal)
        return self._cache[key]

    def check_bounds(self, n: int, w: int) -> None:
        if n > self.max_arity or w > self.max_weight:
            raise StructuralError(f"cell ({n},{w}) outside truncation bounds A={self.max_arity}, W={self.max_weight}")


class OperadCell:
    """P(n)^(w) as the span of standard (non-ideal-pivot) monomials."""

    def __init__(self, pres: Presentation, n: int, w: int, basis: MonomialBasis, ideal: Subspace):
        self.pres = pres
        self.arity = n
        self.weight = w
        self.monos = basis
        self.ideal = ideal
        piv = set(ideal.pivots)
        self.standard = [i for i in range(len(basis)) if i not in piv]
        self._pos = {i: j for j, i in enumerate(self.standard)}

    @property
    def dim(self) -> int:
        return len(self.standard)

    @property
    def basis(self) -> List[Vec]:
        return [{i: Fraction(1)} for i in self.standard]

    def reduce(self, v: Dict[Tree, Fraction]) -> Dict[Tree, Fraction]:
        """Normal form of a tree combination modulo the ideal."""
        cv = self.pres.canon(v)
        r = self.ideal.reduce(self.monos.to_vec(cv))
        return self.monos.to_trees(r)

    def coords(self, v: Dict[Tree, Fraction]) -> List[Fraction]:
        r = self.monos.to_vec(self.reduce(v))
        out = [Fraction(0)] * self.dim
        for i, c in r.items():
            out[self._pos[i]] = c
        return out

    def is_zero(self, v: Dict[Tree, Fraction]) -> bool:
        return not self.reduce(v)


def compose(pres: Presentation, outer: Dict[Tree, Fraction], slot: int, inner: Dict[Tree, Fraction]) -> Dict[Tree, Fraction]:
    """outer ∘_slot inner, reduced to normal form."""
    out: Dict[Tree, Fraction] = {}
    n = None
    for s, a in outer.items():
        n = arity(s)
        if not 1 <= slot <= n:
            raise StructuralError(f"slot {slot} out of range 1..{n}")
        for t, b in inner.items():
            sg, g = graft(s, slot, t, pres.table, 0)
            add_into(out, {g: a * b}, sg)
    if not out:
        return {}
    t0 = next(iter(out))
    return pres.operad_cell(arity(t0), weight(t0)).reduce(out)


# ---------------------------------------------------------------- contexts


def ctx_children(ctx: Tree) -> Tuple[Tree, ...]:
    """Children of the marked vertex of a context."""
    if is_leaf(ctx):
        return ()
    if ctx[0] == MARK:
        return ctx[1]
    for c in ctx[1]:
        r = ctx_children(c)
        if r:
            return r
    return ()


def edge_splits(t: Tree, table: GenTable, shift: int) -> Iterable[Tuple[Tree, Tree]]:
    """Yield (context, piece) for every internal edge of a canonical monomial.

    The marked vertex lists its blocks by increasing minimum label; the piece
    is the two-vertex tree on labels 1..k numbering those blocks.
    """

    def rec(s):
        if is_leaf(s):
            return
        name, kids = s
        for i, v in enumerate(kids):
            if is_leaf(v):
                continue
            blocks = list(kids[:i]) + list(v[1]) + list(kids[i + 1:])
            order = sorted(range(len(blocks)), key=lambda j: min_label(blocks[j]))
            rank = {}
            for r, j in enumerate(order, 1):
                rank[j] = r
            inner = (v[0], tuple(rank[i + j] for j in range(len(v[1]))))
            piece_kids = []
            for j in range(len(kids)):
                if j < i:
                    piece_kids.append(rank[j])
                elif j == i:
                    piece_kids.append(inner)
                else:
                    piece_kids.append(rank[j + len(v[1]) - 1])
            piece = (name, tuple(piece_kids))
            yield (MARK, tuple(blocks[j] for j in order)), piece
        for j, c in enumerate(kids):
            for sub_ctx, piece in rec(c):
                yield (name, kids[:j] + (sub_ctx,) + kids[j + 1:]), piece

    yield from rec(t)


def contexts(pres: Presentation, n: int, w: int) -> List[Tree]:
    key = ("ctx", n, w)
    if key not in pres._cache:
        seen = {}
        for t in pres.monomials(n, w).monos:
            for ctx, _ in edge_splits(t, pres.table, 0):
                seen[ctx] = None
        pres._cache[key] = list(seen)
    return pres._cache[key]


def substitute(ctx: Tree, piece: Tree, table: GenTable, shift: int) -> Tuple[int, Optional[Tree]]:
    """Replace the marked vertex of ctx by piece (leaf j gets block j)."""
    blocks = ctx_children(ctx)
    bdeg = {j: tree_degree(b, table, shift) for j, b in enumerate(blocks, 1)}
    sign = compose_sign(piece, table, shift, bdeg)

    def fill(s):
        if is_leaf(s):
            return blocks[s - 1]
        return (s[0], tuple(fill(c) for c in s[1]))

    def rec(s):
        if is_leaf(s):
            return s
        if s[0] == MARK:
            return fill(piece)
        return (s[0], tuple(rec(c) for c in s[1]))

    c, t = canonical(rec(ctx), table, shift)
    return sign * c, t


# ---------------------------------------------------------------- morphisms


@dataclass
class OperadMorphism:
    source: Presentation
    target: Presentation
    images: Dict[str, Dict[Tree, Fraction]]

    def __post_init__(self):
        for g in self.source.generators:
            if g.name not in self.images:
                raise ParseError(f"morphism misses generator {g.name!r}")
            for t in self.images[g.name]:
                if weight(t) != 1 or arity(t) != g.arity:
                    raise ParseError(f"image of {g.name!r} must be a weight-1 element of arity {g.arity}")
                if self.target.gen(t[0]).degree != g.degree:
                    raise ParseError(f"image of {g.name!r} changes degree")

    def map_tree(self, t: Tree, shift: int = 0) -> Dict[Tree, Fraction]:
        """Apply generator images vertexwise (canonical target coordinates)."""
        tt = self.target.table

        def rec(s) -> Dict[Tree, Fraction]:
            if is_leaf(s):
                return {s: Fraction(1)}
            kid_vecs = [rec(c) for c in s[1]]
            out: Dict[Tree, Fraction] = {}
            for h, a in self.images[s[0]].items():
                for combo in itertools.product(*[list(k.items()) for k in kid_vecs]):
                    coeff = a
                    kids = []
                    for ct, cc in combo:
                        coeff *= cc
                        kids.append(ct)
                    bdeg = {j: tree_degree(k, tt, shift) for j, k in enumerate(kids, 1)}
                    sg = compose_sign(h, tt, shift, bdeg)
                    new = (h[0], tuple(kids[l - 1] for l in h[1]))
                    add_into(out, {new: coeff}, sg)
            return out

        return canonicalize_vec(rec(t), tt, shift)

    def map_vec(self, v: Dict[Tree, Fraction], shift: int = 0) -> Dict[Tree, Fraction]:
        out: Dict[Tree, Fraction] = {}
        for t, c in v.items():
            add_into(out, self.map_tree(t, shift), c)
        return out


@dataclass
class MorphismReport:
    ok: bool
    failures: List[str]


def check_morphism(m: OperadMorphism, max_arity: int = 4) -> MorphismReport:
    fails: List[str] = []
    src, tgt = m.source, m.target
    for g in src.generators:
        sym = src.sym.get(g.name)
        if sym is None or g.arity < 2:
            continue
        corolla = (g.name, tuple(range(1, g.arity + 1)))
        for i in range(1, g.arity):
            s = Perm.from_cycles(g.arity, (i, i + 1))
            img = m.map_tree(corolla)
            moved = tgt.canon({act(s, t): c for t, c in img.items()})
            diff = dict(moved)
            add_into(diff, img, -sym)
            if diff:
                fails.append(f"generator {g.name}: image does not respect the symmetry under s_{i}")
    for k in src.relation_arities():
        if k > max_arity:
            continue
        rel = src.relation_space(k)
        basis = src.monomials(k, 2)
        cell = tgt.operad_cell(k, 2)
        for r in rel.basis:
            img = m.map_vec(basis.to_trees(r))
            if not cell.is_zero(img):
                fails.append(f"relation of arity {k} does not map into the target ideal")
                break
    return MorphismReport(not fails, fails)


# ---------------------------------------------------------------- JSON


def parse_coeff(c) -> Fraction:
    try:
        return frac(c)
    except (TypeError, ValueError, ZeroDivisionError, IndexError) as e:
        raise ParseError(f"bad coefficient {c!r}") from e


def presentation_from_json(obj: dict, max_arity: int = DEFAULT_MAX_ARITY, max_weight: int = DEFAULT_MAX_WEIGHT) -> Presentation:
    if not isinstance(obj, dict):
        raise ParseError("operad file must be a JSON object")
    try:
        name = str(obj.get("name", "operad"))
        gens = []
        for i, g in enumerate(obj.get("generators", [])):
            if int(g["arity"]) < 1:
                raise ParseError(f"generators[{i}]: arity must be >= 1 (P(0) = 0)")
            gens.append(GenSym(str(g["name"]), int(g["arity"]), int(g.get("degree", 0))))
    except KeyError as e:
        raise ParseError(f"generator entry missing field {e}") from e
    if not gens:
        raise ParseError("no generators")
    sym: Dict[str, Optional[int]] = {g.name: None for g in gens}
    for gname, acts in obj.get("symmetry", {}).items():
        if gname not in sym:
            raise ParseError(f"symmetry for unknown generator {gname!r}")
        signs = set()
        for tr, img in acts.items():
            if len(img) != 1 or img[0].get("gen") != gname:
                raise UnsupportedFeature(
                    f"symmetry of {gname!r} under s_{tr}: only generators spanning a one-dimensional "
                    "representation (symmetric or antisymmetric) are supported")
            c = parse_coeff(img[0].get("coeff", 1))
            if c not in (1, -1):
                raise UnsupportedFeature(f"symmetry coefficient {c} for {gname!r} is not +-1")
            signs.add(int(c))
        arity_g = next(g.arity for g in gens if g.name == gname)
        if len(acts) != arity_g - 1:
            raise ParseError(f"symmetry of {gname!r} must list all {arity_g - 1} adjacent transpositions")
        if len(signs) != 1:
            raise ParseError(f"symmetry of {gname!r} is not a representation of the symmetric group")
        sym[gname] = signs.pop()
    rels = []
    for i, rel in enumerate(obj.get("relations", [])):
        v: Dict[Tree, Fraction] = {}
        for term in rel:
            try:
                t = from_json_tree(term["tree"])
            except (KeyError, TypeError, StructuralError) as e:
                raise ParseError(f"relations[{i}]: bad tree ({e})") from e
            add_into(v, {t: parse_coeff(term.get("coeff", 1))})
        if v:
            rels.append(v)
    return Presentation(name, gens, sym, rels, max_arity, max_weight)


def presentation_to_json(p: Presentation) -> dict:
    from .trees import to_json_tree

    def coeff(c: Fraction):
        return [c.numerator, c.denominator]

    out = {
        "name": p.name,
        "generators": [{"name": g.name, "arity": g.arity, "degree": g.degree} for g in p.generators],
        "symmetry": {},
        "relations": [[{"coeff": coeff(c), "tree": to_json_tree(t)} for t, c in sorted(rel.items(), key=repr)] for rel in p.relations],
    }
    for g in p.generators:
        s = p.sym.get(g.name)
        if s is not None:
            out["symmetry"][g.name] = {str(i): [{"gen": g.name, "coeff": s}] for i in range(1, g.arity)}
    return out


def morphism_from_json(obj: dict, source: Presentation, target: Presentation) -> OperadMorphism:
    images = {}
    for gname, terms in obj.get("images", {}).items():
        v: Dict[Tree, Fraction] = {}
        for term in terms:
            add_into(v, {from_json_tree(term["tree"]): parse_coeff(term.get("coeff", 1))})
        images[gname] = target.canon(v)
    return OperadMorphism(source, target, images)


def _data_path(*parts: str):
    return resources.files("opmassey").joinpath("data", *parts)


BUILTIN_OPERADS = ("ass", "com", "lie", "pois", "dual")


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def builtin(name: str, max_arity: int = DEFAULT_MAX_ARITY, max_weight: int = DEFAULT_MAX_WEIGHT) -> Presentation:
    key = (name, max_arity, max_weight)
    if key not in _BUILTIN_CACHE:
        obj = json.loads(_data_path("operads", f"{name}.json").read_text())
        _BUILTIN_CACHE[key] = presentation_from_json(obj, max_arity, max_weight)
    return _BUILTIN_CACHE[key]


_BUILTIN_CACHE: Dict[tuple, Presentation] = {}


def builtin_morphism(name: str, max_arity: int = DEFAULT_MAX_ARITY, max_weight: int = DEFAULT_MAX_WEIGHT) -> OperadMorphism:
    obj = json.loads(_data_path("morphisms", f"{name}.json").read_text())
    return morphism_from_json(obj, builtin(obj["source"], max_arity, max_weight),
                              builtin(obj["target"], max_arity, max_weight))
