"""Exact sparse linear algebra over the rationals.

Vectors are plain dicts ``{index: Fraction}`` with no stored zeros.  Subspaces
are kept in reduced row echelon form so that equal subspaces compare equal.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

Vec = Dict[int, Fraction]

ZERO = Fraction(0)
ONE = Fraction(1)


class StructuralError(ValueError):
    pass


class NotAComplexError(ValueError):
    pass


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (list, tuple)):
        return Fraction(int(x[0]), int(x[1]))
    return Fraction(x)


def vec(items: Iterable[Tuple[int, object]]) -> Vec:
    out: Vec = {}
    for k, c in items:
        c = frac(c)
        if c:
            s = out.get(k, ZERO) + c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
    return out


def add_into(target: dict, src: dict, scale=ONE) -> dict:
    """target += scale * src, in place.  Keys may be any hashable."""
    if not scale:
        return target
    for k, c in src.items():
        s = target.get(k, ZERO) + scale * c
        if s:
            target[k] = s
        else:
            target.pop(k, None)
    return target


def scaled(v: dict, c) -> dict:
    c = frac(c)
    if not c:
        return {}
    return {k: c * x for k, x in v.items()}


def lin_comb(pairs: Iterable[Tuple[object, dict]]) -> dict:
    out: dict = {}
    for c, v in pairs:
        add_into(out, v, frac(c))
    return out


def dense(v: Vec, n: int) -> List[Fraction]:
    return [v.get(i, ZERO) for i in range(n)]


def sparse(xs: Sequence) -> Vec:
    return vec(enumerate(xs))


@dataclass
class Mat:
    """Sparse matrix stored row-wise; ``rows[i]`` maps column -> entry."""

    nrows: int
    ncols: int
    data: Dict[int, Vec] = field(default_factory=dict)

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence]) -> "Mat":
        nr = len(rows)
        nc = len(rows[0]) if nr else 0
        m = cls(nr, nc)
        for i, r in enumerate(rows):
            if len(r) != nc:
                raise StructuralError("ragged matrix")
            rv = sparse(r)
            if rv:
                m.data[i] = rv
        return m

    @classmethod
    def from_columns(cls, nrows: int, cols: Sequence[Vec]) -> "Mat":
        m = cls(nrows, len(cols))
        for j, col in enumerate(cols):
            for i, x in col.items():
                m.data.setdefault(i, {})[j] = x
        return m

    @classmethod
    def identity(cls, n: int) -> "Mat":
        return cls(n, n, {i: {i: ONE} for i in range(n)})

    @classmethod
    def zero(cls, nrows: int, ncols: int) -> "Mat":
        return cls(nrows, ncols)

    def entries(self) -> List[Tuple[int, int, Fraction]]:
        return [(i, j, x) for i in sorted(self.data) for j, x in sorted(self.data[i].items())]

    def get(self, i: int, j: int) -> Fraction:
        return self.data.get(i, {}).get(j, ZERO)

    def row(self, i: int) -> Vec:
        return self.data.get(i, {})

    def column(self, j: int) -> Vec:
        return {i: r[j] for i, r in self.data.items() if j in r}

    def columns(self) -> List[Vec]:
        cols: List[Vec] = [dict() for _ in range(self.ncols)]
        for i, r in self.data.items():
            for j, x in r.items():
                cols[j][i] = x
        return cols

    def to_dense(self) -> List[List[Fraction]]:
        return [dense(self.row(i), self.ncols) for i in range(self.nrows)]

    def transpose(self) -> "Mat":
        t = Mat(self.ncols, self.nrows)
        for i, r in self.data.items():
            for j, x in r.items():
                t.data.setdefault(j, {})[i] = x
        return t

    def apply(self, v: Vec) -> Vec:
        out: Vec = {}
        for i, r in self.data.items():
            s = ZERO
            for j, x in r.items():
                y = v.get(j)
                if y:
                    s += x * y
            if s:
                out[i] = s
        return out

    def __matmul__(self, other: "Mat") -> "Mat":
        if self.ncols != other.nrows:
            raise StructuralError("shape mismatch")
        out = Mat(self.nrows, other.ncols)
        for i, r in self.data.items():
            acc: Vec = {}
            for k, x in r.items():
                orow = other.data.get(k)
                if orow:
                    add_into(acc, orow, x)
            if acc:
                out.data[i] = acc
        return out

    def is_zero(self) -> bool:
        return not any(self.data.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mat):
            return NotImplemented
        mine = {i: r for i, r in self.data.items() if r}
        theirs = {i: r for i, r in other.data.items() if r}
        return (self.nrows, self.ncols, mine) == (other.nrows, other.ncols, theirs)


class Echelon:
    """Incremental row echelon basis.

    Every stored row has its pivot as smallest column and coefficient 1 there,
    so reducing in increasing pivot order yields the unique residue that
    vanishes on all pivots.
    """

    def __init__(self, rows: Iterable[Vec] = ()):
        self.rows: Dict[int, Vec] = {}
        for r in rows:
            self.add(r)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def pivots(self) -> List[int]:
        return sorted(self.rows)

    def reduce(self, v: Vec) -> Vec:
        v = dict(v)
        rows = self.rows
        heap = [c for c in v if c in rows]
        heapq.heapify(heap)
        while heap:
            p = heapq.heappop(heap)
            c = v.get(p)
            if not c:
                continue
            for j, x in rows[p].items():
                old = v.get(j)
                nv = (old or ZERO) - c * x
                if nv:
                    if old is None and j in rows:
                        heapq.heappush(heap, j)
                    v[j] = nv
                else:
                    v.pop(j, None)
        return v

    def add(self, v: Vec) -> bool:
        r = self.reduce(v)
        if not r:
            return False
        p = min(r)
        inv = ONE / r[p]
        if inv != ONE:
            r = {j: x * inv for j, x in r.items()}
        self.rows[p] = r
        return True

    def contains(self, v: Vec) -> bool:
        return not self.reduce(v)

    def rref(self) -> List[Vec]:
        """Fully reduced rows in increasing pivot order."""
        done: Dict[int, Vec] = {}
        for p in sorted(self.rows, reverse=True):
            r = dict(self.rows[p])
            for q in [q for q in r if q in done and q != p]:
                add_into(r, done[q], -r[q])
            done[p] = r
        return [done[p] for p in sorted(done)]


class Subspace:
    """A subspace of Q^n with a canonical RREF basis."""

    def __init__(self, ambient_dim: int, vectors: Iterable[Vec] = (), _rref: Optional[List[Vec]] = None):
        self.ambient_dim = ambient_dim
        if _rref is None:
            ech = Echelon()
            for v in vectors:
                if any(k < 0 or k >= ambient_dim for k in v):
                    raise StructuralError("vector index out of range")
                ech.add(v)
            _rref = ech.rref()
        self.basis: List[Vec] = _rref
        self.pivots: List[int] = [min(b) for b in self.basis]
        self._ech: Optional[Echelon] = None

    @property
    def dim(self) -> int:
        return len(self.basis)

    def echelon(self) -> Echelon:
        if self._ech is None:
            e = Echelon()
            e.rows = {p: b for p, b in zip(self.pivots, self.basis)}
            self._ech = e
        return self._ech

    def reduce(self, v: Vec) -> Vec:
        return self.echelon().reduce(v)

    def contains(self, v: Vec) -> bool:
        return not self.reduce(v)

    def coords(self, v: Vec) -> List[Fraction]:
        """Coordinates of v (assumed inside) on the RREF basis."""
        return [v.get(p, ZERO) for p in self.pivots]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.ambient_dim == other.ambient_dim and self.basis == other.basis

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"

    def issubset(self, other: "Subspace") -> bool:
        return all(other.contains(b) for b in self.basis)

    def __add__(self, other: "Subspace") -> "Subspace":
        _same_ambient(self, other)
        return Subspace(self.ambient_dim, list(self.basis) + list(other.basis))


def _same_ambient(a: Subspace, b: Subspace) -> None:
    if a.ambient_dim != b.ambient_dim:
        raise StructuralError(f"ambient dimensions differ: {a.ambient_dim} vs {b.ambient_dim}")


def _as_rows(m) -> Tuple[List[Vec], int]:
    if isinstance(m, Mat):
        return [m.row(i) for i in range(m.nrows)], m.ncols
    rows = [sparse(r) for r in m]
    return rows, (len(m[0]) if len(m) else 0)


def rref(m: Mat) -> Tuple[Mat, List[int]]:
    rows, ncols = _as_rows(m)
    red = Echelon(rows).rref()
    out = Mat(m.nrows, ncols)
    for i, r in enumerate(red):
        out.data[i] = r
    return out, [min(r) for r in red]


def kernel_from_rref(red: List[Vec], ncols: int) -> List[Vec]:
    pivots = [min(r) for r in red]
    pset = set(pivots)
    free = [j for j in range(ncols) if j not in pset]
    # column j of the reduced rows, for every free j
    by_col: Dict[int, List[Tuple[int, Fraction]]] = {}
    for p, r in zip(pivots, red):
        for j, x in r.items():
            if j != p:
                by_col.setdefault(j, []).append((p, x))
    out = []
    for f in free:
        v: Vec = {f: ONE}
        for p, x in by_col.get(f, ()):
            v[p] = -x
        out.append(v)
    return out


def kernel(m: Mat) -> Subspace:
    rows, ncols = _as_rows(m)
    red = Echelon(rows).rref()
    return Subspace(ncols, kernel_from_rref(red, ncols))


def rank(m: Mat) -> int:
    rows, _ = _as_rows(m)
    return len(Echelon(rows))


def solve(m: Mat, b: Vec) -> Optional[Tuple[Vec, Subspace]]:
    """One solution of m x = b together with ker m, or None."""
    rows, ncols = _as_rows(m)
    aug = []
    for i, r in enumerate(rows):
        r = dict(r)
        if b.get(i):
            r[ncols] = b[i]
        aug.append(r)
    for i in b:
        if i >= len(rows):
            raise StructuralError("right-hand side longer than matrix")
    red = Echelon(aug).rref()
    part: Vec = {}
    core = []
    for r in red:
        p = min(r)
        if p == ncols:
            return None
        if ncols in r:
            part[p] = r[ncols]
        core.append({j: x for j, x in r.items() if j != ncols})
    return part, Subspace(ncols, kernel_from_rref(core, ncols))


def intersect(a: Subspace, b: Subspace) -> Subspace:
    _same_ambient(a, b)
    if a.dim == 0 or b.dim == 0:
        return Subspace(a.ambient_dim)
    # x in a with x = sum c_i a_i and x reduces to 0 modulo b
    ech = b.echelon()
    residues = [ech.reduce(v) for v in a.basis]
    n = len(residues)
    rows: Dict[int, Vec] = {}
    for i, r in enumerate(residues):
        for j, x in r.items():
            rows.setdefault(j, {})[i] = x
    ker = kernel(Mat(a.ambient_dim, n, rows))
    out = []
    for c in ker.basis:
        v: Vec = {}
        for i, x in c.items():
            add_into(v, a.basis[i], x)
        out.append(v)
    return Subspace(a.ambient_dim, out)


def inverse(m: Mat) -> Mat:
    """Inverse of a square matrix; raises StructuralError when singular."""
    if m.nrows != m.ncols:
        raise StructuralError("inverse needs a square matrix")
    n = m.nrows
    rows = []
    for i in range(n):
        r = dict(m.row(i))
        r[n + i] = ONE
        rows.append(r)
    red = Echelon(rows).rref()
    if len(red) < n or any(min(r) >= n for r in red):
        raise StructuralError("matrix is singular")
    out = Mat(n, n)
    for i, r in enumerate(red):
        out.data[i] = {j - n: x for j, x in r.items() if j >= n}
    return out


class ImageSolver:
    """Solve M x = b repeatedly by tracking preimages of an echelon basis of im M."""

    def __init__(self, m: Mat):
        self.m = m
        self._rows: Dict[int, Tuple[Vec, Vec]] = {}
        for j, col in enumerate(m.columns()):
            self._insert(col, {j: ONE})

    def _insert(self, v: Vec, pre: Vec) -> None:
        v, pre = self._reduce(v, pre)
        if not v:
            return
        p = min(v)
        inv = ONE / v[p]
        self._rows[p] = (scaled(v, inv), scaled(pre, inv))

    def _reduce(self, v: Vec, pre: Vec) -> Tuple[Vec, Vec]:
        v, pre = dict(v), dict(pre)
        heap = [c for c in v if c in self._rows]
        heapq.heapify(heap)
        while heap:
            p = heapq.heappop(heap)
            c = v.get(p)
            if not c:
                continue
            row, rpre = self._rows[p]
            for j, x in row.items():
                old = v.get(j)
                nv = (old or ZERO) - c * x
                if nv:
                    if old is None and j in self._rows:
                        heapq.heappush(heap, j)
                    v[j] = nv
                else:
                    v.pop(j, None)
            add_into(pre, rpre, -c)
        return v, pre

    def image_echelon(self) -> Echelon:
        e = Echelon()
        e.rows = {p: r for p, (r, _) in self._rows.items()}
        return e

    def solve(self, b: Vec) -> Optional[Vec]:
        res, pre = self._reduce(b, {})
        if res:
            return None
        return scaled(pre, -1)


class Quotient:
    """Quotient Z/N for N inside Z, both given by spanning vectors.

    Representatives are residues modulo N arranged in mutual RREF, so the
    class coordinates of z are read off at the representative pivots.
    """

    def __init__(self, numerator: Iterable[Vec], denominator: Echelon | Iterable[Vec]):
        self.n = denominator if isinstance(denominator, Echelon) else Echelon(denominator)
        q = Echelon()
        for z in numerator:
            q.add(self.n.reduce(z))
        self.reps: List[Vec] = q.rref()
        self.pivots = [min(r) for r in self.reps]

    @property
    def dim(self) -> int:
        return len(self.reps)

    def coords(self, z: Vec) -> List[Fraction]:
        r = self.n.reduce(z)
        return [r.get(p, ZERO) for p in self.pivots]

    def is_zero(self, z: Vec) -> bool:
        return not any(self.coords(z))


def homology(d_in: Mat, d_out: Mat) -> Tuple[List[Vec], Mat, Mat]:
    """Homology at the middle term of  . --d_in--> V --d_out--> . .

    Returns (cycle representatives, projection V -> H, section H -> V).
    The projection is only meaningful on cycles.
    """
    if d_in.nrows != d_out.ncols:
        raise StructuralError("d_in target and d_out source differ")
    if not (d_out @ d_in).is_zero():
        raise NotAComplexError("not a complex: d_out * d_in != 0")
    n = d_out.ncols
    cycles = kernel(d_out).basis
    bound = Echelon(d_in.columns())
    quo = Quotient(cycles, bound)
    reps = quo.reps
    h = len(reps)
    proj = Mat(h, n)
    for j in range(n):
        for i, x in enumerate(quo.coords({j: ONE})):
            if x:
                proj.data.setdefault(i, {})[j] = x
    sect = Mat.from_columns(n, reps)
    return reps, proj, sect
