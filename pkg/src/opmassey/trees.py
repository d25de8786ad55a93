"""Tree monomials, permutations and Koszul signs.

A tree monomial is a nested tuple.  An internal vertex is ``(name, children)``
with ``children`` a tuple; a leaf is an ``int``.  In an operation tree the leaf
integer is an input label, in a decorated tree (elements of P^¡(A)) it is the
index of an algebra basis vector.

Every sign in this package comes from one rule: symbols of a tree are read in
preorder (vertex, then its children left to right), and moving graded symbols
past each other costs the Koszul sign.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .linalg import StructuralError, add_into

Tree = Union[int, Tuple[str, tuple]]

# weight 0 token standing for the identity cooperation
ID = "id"


# ---------------------------------------------------------------- permutations


@dataclass(frozen=True)
class Perm:
    """A permutation of {1..n} stored as the image tuple (σ(1), ..., σ(n))."""

    images: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.images) != list(range(1, len(self.images) + 1)):
            raise StructuralError(f"not a permutation: {self.images}")

    @classmethod
    def identity(cls, n: int) -> "Perm":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_cycles(cls, n: int, *cycles: Sequence[int]) -> "Perm":
        img = list(range(1, n + 1))
        for cyc in cycles:
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                img[a - 1] = b
        return cls(tuple(img))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "Perm") -> "Perm":
        # (σ τ)(i) = σ(τ(i))
        if self.n != other.n:
            raise StructuralError("size mismatch")
        return Perm(tuple(self(other(i)) for i in range(1, self.n + 1)))

    def inverse(self) -> "Perm":
        inv = [0] * self.n
        for i, j in enumerate(self.images, 1):
            inv[j - 1] = i
        return Perm(tuple(inv))

    def is_identity(self) -> bool:
        return self.images == tuple(range(1, self.n + 1))

    def parity(self) -> int:
        return inversion_count(self.images) % 2

    def __repr__(self) -> str:
        return f"Perm{self.images}"


def all_perms(n: int) -> List[Perm]:
    return [Perm(p) for p in itertools.permutations(range(1, n + 1))]


def inversion_count(seq: Sequence) -> int:
    return sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])


def reorder_sign(degrees: Sequence[int], order: Sequence[int]) -> int:
    """Koszul sign of listing symbols in ``order`` (new position -> old index)."""
    odd = 0
    for a in range(len(order)):
        da = degrees[order[a]] & 1
        if not da:
            continue
        oa = order[a]
        for b in range(a + 1, len(order)):
            if order[b] < oa and degrees[order[b]] & 1:
                odd ^= 1
    return -1 if odd else 1


def koszul_sign(degrees: Sequence[int], sigma: Perm) -> int:
    """(−1) to the sum of |x_i||x_j| over inversions i<j, σ(i)>σ(j)."""
    if len(degrees) != sigma.n:
        raise StructuralError("length mismatch")
    odd = 0
    for i in range(sigma.n):
        if degrees[i] & 1:
            for j in range(i + 1, sigma.n):
                if degrees[j] & 1 and sigma.images[i] > sigma.images[j]:
                    odd ^= 1
    return -1 if odd else 1


# ---------------------------------------------------------------- generators


@dataclass(frozen=True)
class GenSym:
    name: str
    arity: int
    degree: int = 0
    suspended: bool = False

    def __post_init__(self):
        if self.arity < 1:
            raise StructuralError(f"generator {self.name!r} must have arity >= 1")

    @property
    def effective_degree(self) -> int:
        return self.degree + (1 if self.suspended else 0)


@dataclass
class GenTable:
    """Generator data shared by operad and cooperad trees.

    ``sym[name]`` is +1 (symmetric), -1 (antisymmetric) or None (no symmetry,
    so every planar order of the inputs is a separate basis element).
    """

    gens: Dict[str, GenSym]
    sym: Dict[str, Optional[int]] = field(default_factory=dict)

    def degree(self, name: str, shift: int = 0) -> int:
        return self.gens[name].degree + shift

    def arity(self, name: str) -> int:
        return self.gens[name].arity

    def names(self) -> List[str]:
        return sorted(self.gens)


# ---------------------------------------------------------------- tree basics


def is_leaf(t: Tree) -> bool:
    return not isinstance(t, tuple)


def leaves(t: Tree) -> List[int]:
    if is_leaf(t):
        return [t]
    out: List[int] = []
    for c in t[1]:
        out.extend(leaves(c))
    return out


def arity(t: Tree) -> int:
    return len(leaves(t))


def weight(t: Tree) -> int:
    if is_leaf(t):
        return 0
    return 1 + sum(weight(c) for c in t[1])


def vertices(t: Tree) -> List[str]:
    """Vertex labels in preorder."""
    if is_leaf(t):
        return []
    out = [t[0]]
    for c in t[1]:
        out.extend(vertices(c))
    return out


def min_label(t: Tree) -> int:
    if is_leaf(t):
        return t
    return min(min_label(c) for c in t[1])


def leaf_perm(t: Tree) -> Perm:
    """Perm whose value at planar position p is the label of the p-th leaf."""
    return Perm(tuple(leaves(t)))


def tree_degree(t: Tree, table: GenTable, shift: int = 0, leaf_deg: Optional[Callable[[int], int]] = None) -> int:
    if is_leaf(t):
        return leaf_deg(t) if leaf_deg else 0
    return table.degree(t[0], shift) + sum(tree_degree(c, table, shift, leaf_deg) for c in t[1])


def relabel(t: Tree, f: Callable[[int], int]) -> Tree:
    if is_leaf(t):
        return f(t)
    return (t[0], tuple(relabel(c, f) for c in t[1]))


def standardize(t: Tree) -> Tree:
    """Relabel leaves order-preservingly onto 1..arity."""
    labs = sorted(leaves(t))
    pos = {l: i for i, l in enumerate(labs, 1)}
    return relabel(t, pos.__getitem__)


def encode(t: Tree):
    """Total-order key for trees whose leaves may repeat (decorated trees)."""
    if is_leaf(t):
        return (0, t)
    return (1, t[0], tuple(encode(c) for c in t[1]))


def tokens(t: Tree) -> List[Tuple[str, object]]:
    """Preorder symbol list: ('v', vertex index in preorder) or ('l', leaf)."""
    out: List[Tuple[str, object]] = []
    count = [0]

    def walk(s):
        if is_leaf(s):
            out.append(("l", s))
            return
        out.append(("v", count[0]))
        count[0] += 1
        for c in s[1]:
            walk(c)

    walk(t)
    return out


def compose_sign(m: Tree, table: GenTable, shift: int, block_degrees: Dict[int, int]) -> int:
    """Sign of γ(m; C_1, ..., C_k) with C_j grafted at the leaf labelled j.

    Reference order is [vertices of m in preorder, C_1, ..., C_k]; the grafted
    tree is read in preorder.
    """
    vdeg = [table.degree(v, shift) for v in vertices(m)]
    labels = sorted(block_degrees)
    degs = vdeg + [block_degrees[l] for l in labels]
    where = {l: len(vdeg) + i for i, l in enumerate(labels)}
    order = [idx if kind == "v" else where[idx] for kind, idx in tokens(m)]
    return reorder_sign(degs, order)


# ---------------------------------------------------------------- canonical forms


def canonical(
    t: Tree,
    table: GenTable,
    shift: int = 0,
    leaf_deg: Optional[Callable[[int], int]] = None,
    decorated: bool = False,
) -> Tuple[int, Optional[Tree]]:
    """Bring t to the canonical representative of its line.

    Children of (anti)symmetric vertices are sorted, by minimum leaf label for
    operation trees and by ``encode`` for decorated trees.  Returns (sign, tree)
    or (0, None) when the element vanishes.
    """
    key = encode if decorated else min_label

    def rec(s) -> Tuple[int, Optional[Tree], int]:
        if is_leaf(s):
            return 1, s, (leaf_deg(s) if leaf_deg else 0)
        name, kids = s
        c = 1
        new, degs = [], []
        for k in kids:
            ck, tk, dk = rec(k)
            if ck == 0:
                return 0, None, 0
            c *= ck
            new.append(tk)
            degs.append(dk)
        total = table.degree(name, shift) + sum(degs)
        sym = table.sym.get(name)
        if sym is None:
            return c, (name, tuple(new)), total
        keys = [key(k) for k in new]
        order = sorted(range(len(new)), key=keys.__getitem__)
        c *= reorder_sign(degs, order)
        if sym == -1 and inversion_count(order) % 2:
            c = -c
        kids2 = tuple(new[i] for i in order)
        if decorated:
            for a in range(len(kids2) - 1):
                if kids2[a] == kids2[a + 1]:
                    d = degs[order[a]]
                    if sym * (-1 if d & 1 else 1) == -1:
                        return 0, None, 0
        return c, (name, kids2), total

    c, out, _ = rec(t)
    return c, out


def canonicalize_vec(
    v: Dict[Tree, Fraction],
    table: GenTable,
    shift: int = 0,
    leaf_deg: Optional[Callable[[int], int]] = None,
    decorated: bool = False,
) -> Dict[Tree, Fraction]:
    out: Dict[Tree, Fraction] = {}
    for t, c in v.items():
        s, ct = canonical(t, table, shift, leaf_deg, decorated)
        if s:
            add_into(out, {ct: c}, s)
    return out


# ---------------------------------------------------------------- enumeration


def enumerate_monomials(gens: Sequence[GenSym], arity_: int, weight_: int) -> List[Tree]:
    """All planar tree monomials with all leaf labellings, no symmetry applied."""
    if arity_ < 1 or weight_ < 1:
        return []
    shapes = _planar_shapes(tuple(sorted(gens, key=lambda g: g.name)), arity_, weight_)
    out = []
    for shape in shapes:
        for p in itertools.permutations(range(1, arity_ + 1)):
            it = iter(p)
            out.append(relabel(shape, lambda _x: next(it)))
    out.sort(key=monomial_sort_key)
    return out


@lru_cache(maxsize=None)
def _planar_shapes(gens: Tuple[GenSym, ...], n: int, w: int) -> Tuple[Tree, ...]:
    # shapes with leaves numbered 1..n left to right
    if w == 0:
        return (1,) if n == 1 else ()
    out = []
    for g in gens:
        for split in _compositions(n, g.arity):
            for wts in _weight_splits(w - 1, split):
                for kids in itertools.product(*[_planar_shapes(gens, a, b) for a, b in zip(split, wts)]):
                    out.append((g.name, tuple(kids)))
    res = []
    for s in out:
        it = iter(range(1, n + 1))
        res.append(relabel(s, lambda _x: next(it)))
    return tuple(res)


def _compositions(n: int, k: int) -> Iterator[Tuple[int, ...]]:
    if k == 1:
        if n >= 1:
            yield (n,)
        return
    for first in range(1, n - k + 2):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def _weight_splits(w: int, sizes: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    # a block of size 1 may have weight 0 (a leaf); larger blocks need weight >= 1
    if not sizes:
        if w == 0:
            yield ()
        return
    lo = 0 if sizes[0] == 1 else 1
    for a in range(lo, w + 1):
        for rest in _weight_splits(w - a, sizes[1:]):
            yield (a,) + rest


def shape_of(t: Tree):
    if is_leaf(t):
        return "L"
    return (t[0], tuple(shape_of(c) for c in t[1]))


def monomial_sort_key(t: Tree):
    return (repr(shape_of(t)), tuple(vertices(t)), tuple(leaves(t)))


def canonical_monomials(table: GenTable, n: int, w: int) -> List[Tree]:
    """Canonical representatives spanning F(E)(n)^(w) in the coinvariant model."""
    return [relabel(t, lambda x: x) for t in _canon_std(_table_key(table), n, w)]


_TABLES: Dict[tuple, GenTable] = {}


def _table_key(table: GenTable) -> tuple:
    k = tuple(sorted((g.name, g.arity, g.degree, table.sym.get(g.name)) for g in table.gens.values()))
    _TABLES[k] = table
    return k


@lru_cache(maxsize=None)
def _canon_std(tkey: tuple, n: int, w: int) -> Tuple[Tree, ...]:
    table = _TABLES[tkey]
    out = _canon_on(table, tuple(range(1, n + 1)), w)
    out.sort(key=monomial_sort_key)
    return tuple(out)


def _canon_on(table: GenTable, labels: Tuple[int, ...], w: int) -> List[Tree]:
    if w == 0:
        return [labels[0]] if len(labels) == 1 else []
    n = len(labels)
    out: List[Tree] = []
    for name in table.names():
        k = table.arity(name)
        if k > n:
            continue
        sym = table.sym.get(name)
        for blocks in (_set_partitions_sorted(labels, k) if sym is not None else _ordered_partitions(labels, k)):
            sizes = [len(b) for b in blocks]
            for wts in _weight_splits(w - 1, sizes):
                parts = []
                for b, bw in zip(blocks, wts):
                    parts.append([relabel(t, dict(zip(range(1, len(b) + 1), b)).__getitem__)
                                  for t in _canon_std(_table_key(table), len(b), bw)])
                for kids in itertools.product(*parts):
                    out.append((name, tuple(kids)))
    return out


def _set_partitions_sorted(labels: Tuple[int, ...], k: int) -> Iterator[List[Tuple[int, ...]]]:
    """Partitions into k nonempty blocks, listed by increasing minimum."""
    for p in _set_partitions(list(labels), k):
        yield sorted((tuple(b) for b in p), key=lambda b: b[0])


def _set_partitions(items: List[int], k: int) -> Iterator[List[List[int]]]:
    if k == 0:
        if not items:
            yield []
        return
    if len(items) < k:
        return
    first, rest = items[0], items[1:]
    # first alone
    for p in _set_partitions(rest, k - 1):
        yield [[first]] + p
    # first joins a block
    for p in _set_partitions(rest, k):
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1:]


def _ordered_partitions(labels: Tuple[int, ...], k: int) -> Iterator[List[Tuple[int, ...]]]:
    for p in _set_partitions(list(labels), k):
        blocks = [tuple(sorted(b)) for b in p]
        for perm in itertools.permutations(blocks):
            yield list(perm)


# ---------------------------------------------------------------- operations


def graft(parent: Tree, slot: int, child: Tree, table: GenTable, shift: int = 0) -> Tuple[int, Tree]:
    """Partial composition parent ∘_slot child on labelled monomials."""
    n = arity(parent)
    m = arity(child)
    if not 1 <= slot <= n:
        raise StructuralError(f"slot {slot} out of range 1..{n}")
    moved_child = relabel(child, lambda l: l + slot - 1)

    def rec(s):
        if is_leaf(s):
            if s == slot:
                return moved_child
            return s if s < slot else s + m - 1
        return (s[0], tuple(rec(c) for c in s[1]))

    out = rec(parent)
    # reference: parent vertices then child vertices; actual: preorder of out
    pv = len(vertices(parent))
    tok = tokens(parent)
    cdeg = tree_degree(child, table, shift)
    degs = [table.degree(v, shift) for v in vertices(parent)] + [cdeg]
    order = []
    for kind, idx in tok:
        if kind == "v":
            order.append(idx)
        elif idx == slot:
            order.append(pv)
    return reorder_sign(degs, order), out


def last_vertex_split(t: Tree) -> Tuple[int, str, List[Tree], Perm]:
    """Split at the root: (sign, root label, standardized branches, σ).

    σ⁻¹ sends the concatenated block positions to global labels, blocks in
    planar order and labels increasing inside each block.  With preorder
    reading the root symbol is already first, so the sign is +1.
    """
    if is_leaf(t):
        raise StructuralError("cannot split a leaf")
    name, kids = t
    concat: List[int] = []
    subs = []
    for c in kids:
        concat.extend(sorted(leaves(c)))
        subs.append(ID if is_leaf(c) else standardize(c))
    sigma_inv = Perm(tuple(concat))
    return 1, name, subs, sigma_inv.inverse()


def act(sigma: Perm, t: Tree) -> Tree:
    """Right action on a labelled monomial: leaf ℓ becomes σ⁻¹(ℓ)."""
    if sigma.n != arity(t):
        raise StructuralError("size mismatch")
    inv = sigma.inverse()
    return relabel(t, inv)


def act_vec(sigma: Perm, v: Dict[Tree, Fraction], table: Optional[GenTable] = None, shift: int = 0) -> Dict[Tree, Fraction]:
    out = {act(sigma, t): c for t, c in v.items()}
    if table is not None:
        out = canonicalize_vec(out, table, shift)
    return out


@dataclass
class TreeVec:
    """Linear combination of monomials of one (arity, weight)."""

    arity: int
    weight: int
    terms: Dict[Tree, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        for t in self.terms:
            if arity(t) != self.arity or weight(t) != self.weight:
                raise StructuralError("mixed arity or weight in TreeVec")
        self.terms = {t: Fraction(c) for t, c in self.terms.items() if c}

    def act(self, sigma: Perm, table: Optional[GenTable] = None, shift: int = 0) -> "TreeVec":
        return TreeVec(self.arity, self.weight, act_vec(sigma, self.terms, table, shift))


def to_json_tree(t: Tree):
    if is_leaf(t):
        return {"leaf": t}
    return {"op": t[0], "args": [to_json_tree(c) for c in t[1]]}


def from_json_tree(obj) -> Tree:
    if "leaf" in obj:
        return int(obj["leaf"])
    if "op" not in obj:
        raise StructuralError(f"tree node needs 'op' or 'leaf': {obj}")
    return (str(obj["op"]), tuple(from_json_tree(a) for a in obj.get("args", [])))


def parse_tree(s: str) -> Tree:
    """Parse the compact notation ``mu(mu(1,2),3)``."""
    s = s.replace(" ", "")
    pos = [0]

    def node():
        start = pos[0]
        if s[start].isdigit():
            while pos[0] < len(s) and s[pos[0]].isdigit():
                pos[0] += 1
            return int(s[start:pos[0]])
        while pos[0] < len(s) and s[pos[0]] not in "(),":
            pos[0] += 1
        name = s[start:pos[0]]
        if pos[0] >= len(s) or s[pos[0]] != "(":
            raise StructuralError(f"expected '(' after {name!r}")
        pos[0] += 1
        kids = [node()]
        while s[pos[0]] == ",":
            pos[0] += 1
            kids.append(node())
        if s[pos[0]] != ")":
            raise StructuralError("expected ')'")
        pos[0] += 1
        return (name, tuple(kids))

    t = node()
    if pos[0] != len(s):
        raise StructuralError(f"trailing input in {s!r}")
    return t


def show_tree(t: Tree) -> str:
    if is_leaf(t):
        return str(t)
    return f"{t[0]}({','.join(show_tree(c) for c in t[1])})"
