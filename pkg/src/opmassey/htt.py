"""Homotopy transfer of a strict P-algebra structure to its homology.

The induction runs over the weight of P^¡.  For a basis element T of
P^¡(H)^{(w)} let R(T) collect everything already known in the A-component of
F∘δ_H = δ_A∘F:

    f(δ_1 T) − d F_1(T) = R(T)

R(T) is a cycle; writing R = f(e) + d e′ gives δ_1 T = e and F_1 T = −e′.
Components live on the RREF rows of each decorated cell and are extended to
other monomials by zero off the pivots, which is a projection onto the cell.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .algebra import DgAlgebra, HomologyData, homology_data
from .emss import DVec, DecoratedModel
from .kdual import Cooperation, kdual_cell, ref_terms
from .linalg import Echelon, ImageSolver, Mat, Subspace, Vec, add_into, scaled, solve
from .massey import ConsistencyError, DefiningSystem, PreconditionError, key_name, massey_product
from .trees import Tree, is_leaf


@dataclass
class Components:
    """Linear maps out of P^¡(V) stored on RREF rows, keyed by pivot monomial."""

    model: DecoratedModel
    values: Dict[int, Vec] = field(default_factory=dict)
    on_leaf: Optional[Callable[[int], Vec]] = None

    def on_tree(self, t: Tree) -> Vec:
        if is_leaf(t):
            return self.on_leaf(t) if self.on_leaf else {}
        return self.values.get(self.model.index(t), {})

    def apply(self, v: DVec) -> Vec:
        out: Vec = {}
        for t, c in v.items():
            add_into(out, self.on_tree(t), c)
        return out


@dataclass
class PInfStructure:
    carrier: HomologyData
    model: DecoratedModel
    delta: Components

    def coderivation(self):
        return self.model.coderivation(self.delta.on_tree)

    def value(self, g: Cooperation, classes: Sequence[Vec]) -> Vec:
        """δ[g ⊗ x_1 ⊗ ... ⊗ x_r] in H."""
        return self.delta.apply(self.model.decorate(g.terms, classes))

    def to_json(self) -> dict:
        hd = self.carrier
        rows = []
        for j, v in sorted(self.delta.values.items()):
            if v:
                rows.append({"input": _show_tree(self.model.mono(j), hd.names),
                             "output": [[hd.names[i], c.numerator, c.denominator] for i, c in sorted(v.items())]})
        return {"carrier": hd.names, "degrees": hd.degrees, "delta": rows}


@dataclass
class PInfMorphism:
    model: DecoratedModel
    target: DecoratedModel
    f1: Components

    def extended(self):
        return self.model.morphism(self.target, self.f1.on_tree)


def _show_tree(t: Tree, names: Sequence[str]) -> str:
    if is_leaf(t):
        return names[t]
    return f"{t[0]}({', '.join(_show_tree(c, names) for c in t[1])})"


def _phi_strict(a: DgAlgebra):
    def phi(u: Tree) -> Vec:
        if is_leaf(u):
            return a.d.column(u)
        name, kids = u
        if all(is_leaf(k) for k in kids):
            return a.act(name, [{k: Fraction(1)} for k in kids])
        return {}

    return phi


def degree_range(model: DecoratedModel, w: int) -> range:
    degs = model.degrees
    if not degs:
        return range(0)
    lo, hi = None, None
    for r in model.arities(w):
        kc = kdual_cell(model.pres, r, w)
        if kc.dim == 0:
            continue
        bd = model.degree_of_terms(kc.terms_of(0))
        a, b = bd + r * min(degs), bd + r * max(degs)
        lo = a if lo is None else min(lo, a)
        hi = b if hi is None else max(hi, b)
    return range(0) if lo is None else range(lo, hi + 1)


def _random_cycle(a: DgAlgebra, hd: HomologyData, deg: int, rng: random.Random) -> Vec:
    out: Vec = {}
    for i, d in enumerate(hd.degrees):
        if d == deg:
            add_into(out, hd.lift({i: Fraction(rng.randint(-2, 2))}))
    for j in range(a.dim):
        if a.degrees[j] == deg + 1:
            add_into(out, a.d.column(j), Fraction(rng.randint(-2, 2)))
    return out


def _section_with(a: DgAlgebra, pinned: Sequence[Tuple[Vec, Vec]]) -> Optional[List[Vec]]:
    """A section sending each pinned class to its pinned cycle, or None on conflict."""
    hd = homology_data(a)
    basis: List[Vec] = []
    values: List[Vec] = []
    for h, z in pinned:
        if not h:
            if hd.classify(z):
                return None
            continue
        if hd.classify(z) != h:
            return None
        trial = basis + [h]
        if Subspace(hd.dim, trial).dim == len(trial):
            basis.append(h)
            values.append(z)
        else:
            coeffs, _ = solve(Mat.from_columns(hd.dim, basis), h)
            expect: Vec = {}
            for j, c in coeffs.items():
                add_into(expect, values[j], c)
            if expect != z:
                return None
    for i in range(hd.dim):
        e = {i: Fraction(1)}
        trial = basis + [e]
        if Subspace(hd.dim, trial).dim == len(trial):
            basis.append(e)
            values.append(hd.lift(e))
    m = Mat.from_columns(hd.dim, basis)
    section = []
    for i in range(hd.dim):
        coeffs, _ = solve(m, {i: Fraction(1)})
        col: Vec = {}
        for j, c in coeffs.items():
            add_into(col, values[j], c)
        section.append(col)
    return section


def transfer(a: DgAlgebra, section: Optional[Sequence[Vec]] = None, rng: Optional[random.Random] = None,
             max_weight: Optional[int] = None,
             seeds: Optional[Dict[Tuple[int, int], List[Tuple[DVec, Vec, str]]]] = None,
             ) -> Tuple[PInfStructure, PInfMorphism]:
    """Inductive transfer.  ``rng`` randomizes the e′ choices; ``seeds`` pins F_1.

    ``seeds[(w, n)]`` lists (element of P^¡(H), prescribed F_1 value, label);
    δ_1 is required to vanish on seeded elements.
    """
    pres = a.operad
    if not pres.is_reduced():
        raise PreconditionError("homotopy transfer needs a reduced operad (no unary generators)")
    hd = homology_data(a, section)
    W = pres.max_weight if max_weight is None else max_weight
    mH = DecoratedModel(pres, hd.degrees, W)
    mA = DecoratedModel(pres, a.degrees, W)
    img = ImageSolver(a.d)
    delta = Components(mH)
    f1 = Components(mH, on_leaf=lambda i: hd.lift({i: Fraction(1)}))
    dH = mH.coderivation(delta.on_tree)
    seeds = seeds or {}

    def residual(T: DVec) -> Vec:
        # R(T) = proj_A δ_A(F T minus its root cut) − F_1(δ_H T minus its full term)
        out: Vec = {}
        for t, c in T.items():
            name, kids = t
            vals = [f1.on_tree(k) for k in kids]
            if all(vals):
                add_into(out, a.act(name, vals), c)
        add_into(out, f1.apply(dH(T)), -1)
        return out

    for w in range(1, min(W, mH.max_weight) + 1):
        for n in degree_range(mH, w):
            rows = mH.cell(w, n)
            if not rows:
                continue
            basis: List[Vec] = []
            given: List[Optional[Vec]] = []
            labels: List[str] = []
            ech = Echelon()
            for T, val, label in seeds.get((w, n), []):
                v = mH.to_vec(T)
                if not v:
                    continue
                if ech.add(v):
                    basis.append(v)
                    given.append(val)
                    labels.append(label)
                else:
                    coeffs, _ = solve(Mat.from_columns(len(mH._monos), basis), v)
                    expect: Vec = {}
                    for j, c in coeffs.items():
                        add_into(expect, given[j], c)
                    if expect != val:
                        raise PreconditionError(f"seeding conflict at {label}")
            for r in rows:
                if ech.add(r):
                    basis.append(r)
                    given.append(None)
                    labels.append("")
            d_vals, f_vals = [], []
            for v, val, label in zip(basis, given, labels):
                T = mH.to_trees(v)
                R = residual(T)
                if val is not None:
                    tot = dict(R)
                    add_into(tot, a.apply_d(val))
                    e = hd.classify(tot)
                    back = dict(tot)
                    add_into(back, hd.lift(e), -1)
                    if back:
                        raise PreconditionError(f"seeding conflict at {label}: the seeded value does not fit")
                    if e:
                        raise ConsistencyError(f"δ does not vanish on the indexing key {label}")
                    d_vals.append(e)
                    f_vals.append(dict(val))
                    continue
                if a.apply_d(R):
                    raise ConsistencyError(f"transfer defect is not a cycle in weight {w}")
                e = hd.classify(R)
                rest = dict(R)
                add_into(rest, hd.lift(e), -1)
                e1 = img.solve(rest) if rest else {}
                if e1 is None:
                    raise ConsistencyError("transfer defect does not split")
                e1 = {i: c for i, c in e1.items() if a.degrees[i] == n}
                if rng is not None:
                    add_into(e1, _random_cycle(a, hd, n, rng))
                d_vals.append(e)
                f_vals.append(scaled(e1, -1))
            # rewrite values on the RREF rows
            m = Mat.from_columns(len(mH._monos), basis)
            for r in rows:
                coeffs, _ = solve(m, r)
                dv: Vec = {}
                fv: Vec = {}
                for j, c in coeffs.items():
                    add_into(dv, d_vals[j], c)
                    add_into(fv, f_vals[j], c)
                p = min(r)
                delta.values[p] = dv
                f1.values[p] = fv
    return PInfStructure(hd, mH, delta), PInfMorphism(mH, mA, f1)


@dataclass
class IdentityReport:
    ok: bool
    checked: int
    failures: List[str]

    def to_json(self) -> dict:
        return {"ok": self.ok, "checked": self.checked, "failures": self.failures}


def check_identities(a: DgAlgebra, s: PInfStructure, F: PInfMorphism) -> IdentityReport:
    """δ_H² = 0 and F∘δ_H = δ_A∘F on every in-window cell."""
    dH = s.coderivation()
    dA = F.target.coderivation(_phi_strict(a))
    Fx = F.extended()
    bad, count = [], 0
    for w in range(0, s.model.max_weight + 1):
        for n in degree_range(s.model, w):
            for row in s.model.cell(w, n):
                T = s.model.to_trees(row)
                count += 1
                if dH(dH(T)):
                    bad.append(f"δ² != 0 on weight {w}, degree {n}")
                lhs = Fx(dH(T))
                rhs = dA(Fx(T))
                diff = dict(lhs)
                add_into(diff, rhs, -1)
                if diff:
                    bad.append(f"F δ != δ F on weight {w}, degree {n}")
    return IdentityReport(not bad, count, bad)


def seeds_from_system(ds: DefiningSystem, model: DecoratedModel, classes: Sequence[Vec]):
    seeds: Dict[Tuple[int, int], list] = {}
    pres = ds.algebra.operad
    for key in ds.index.non_identity():
        ref, slots = key
        T = model.decorate(ref_terms(pres, ref), [classes[k - 1] for k in slots])
        if not T:
            continue
        n = model.degree(next(iter(T)))
        seeds.setdefault((ref.weight, n), []).append((T, ds.get(key), key_name(key)))
    return seeds


def transfer_recovering(a: DgAlgebra, g: Cooperation, ds: DefiningSystem,
                        max_weight: Optional[int] = None) -> Tuple[PInfStructure, PInfMorphism, Vec]:
    """Transfer seeded by a defining system; returns the structure, F and δ[Γ⊗x]."""
    reps = ds.reps()
    hd0 = homology_data(a)
    classes = [hd0.classify(v) for v in reps]
    section = _section_with(a, list(zip(classes, reps)))
    if section is None:
        raise PreconditionError("the classes' representatives cannot all be section values")
    W = g.weight if max_weight is None else max_weight
    model = DecoratedModel(a.operad, hd0.degrees, W)
    seeds = seeds_from_system(ds, model, classes)
    s, F = transfer(a, section, max_weight=W, seeds=seeds)
    return s, F, s.value(g, classes)


@dataclass
class RecoveryReport:
    ok: bool
    value: Vec
    massey: Vec
    sign: Optional[int]
    lower_dim: int

    def to_json(self, names: Sequence[str]) -> dict:
        def show(v):
            return {names[i]: [c.numerator, c.denominator] for i, c in sorted(v.items())}

        return {"ok": self.ok, "value": show(self.value), "massey": show(self.massey),
                "sign": self.sign, "lower_image_dim": self.lower_dim}


def lower_images(s: PInfStructure, below: int, degree: int) -> Subspace:
    """Span of the images of δ^{(i)}, 1 ≤ i < below, in the given degree of H."""
    vecs = []
    for w in range(1, below):
        for n in degree_range(s.model, w):
            for row in s.model.cell(w, n):
                v = s.delta.apply(s.model.to_trees(row))
                if v and all(s.carrier.degrees[i] == degree for i in v):
                    vecs.append(v)
    return Subspace(s.carrier.dim, vecs)


def check_recovery_up_to_lower(a: DgAlgebra, s: PInfStructure, g: Cooperation, classes: Sequence[Vec],
                               ds: DefiningSystem) -> RecoveryReport:
    """δ[Γ⊗x] − (±x) lies in the span of the lower-weight images."""
    x = massey_product(ds).hclass
    val = s.value(g, classes)
    deg = sum(s.carrier.degrees[next(iter(c))] for c in classes if c) + g.degree() - 1
    low = lower_images(s, g.weight, deg)
    sign = None
    for eps in (1, -1):
        diff = dict(val)
        add_into(diff, x, -eps)
        if low.contains(diff):
            sign = eps
            break
    return RecoveryReport(sign is not None, val, x, sign, low.dim)
