"""Finite-dimensional dg algebras over a presented operad."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .linalg import Mat, StructuralError, Vec, add_into, homology, rank, scaled
from .operad import ParseError, Presentation, builtin, presentation_from_json, BUILTIN_OPERADS
from .trees import Tree, inversion_count, is_leaf, reorder_sign, tokens, vertices

Table = Dict[Tuple[int, ...], Vec]


class AlgebraError(ValueError):
    pass


def _vdeg(v: Vec, degrees: Sequence[int]) -> Optional[int]:
    ds = {degrees[i] for i in v}
    if len(ds) > 1:
        return None
    return ds.pop() if ds else None


class DgAlgebra:
    """Basis, differential (d e_j = column j) and generator structure tables.

    Missing entries of a symmetric or antisymmetric generator are filled from
    the given ones; conflicting entries are kept aside and reported by
    ``validate``.
    """

    def __init__(self, operad: Presentation, names: Sequence[str], degrees: Sequence[int],
                 d: Mat, actions: Dict[str, Table], name: str = "algebra"):
        if len(names) != len(degrees):
            raise AlgebraError("names and degrees differ in length")
        if len(set(names)) != len(names):
            raise AlgebraError("duplicate basis names")
        self.operad = operad
        self.names = list(names)
        self.degrees = list(degrees)
        self.d = d
        self.name = name
        self._index = {n: i for i, n in enumerate(self.names)}
        self.conflicts: List[str] = []
        self.actions: Dict[str, Table] = {}
        for g in operad.generators:
            raw = actions.get(g.name, {})
            for k in raw:
                if len(k) != g.arity:
                    raise AlgebraError(f"{g.name}: input tuple {k} has wrong length")
            self.actions[g.name] = self._symmetrize(g.name, raw)
        for gname in actions:
            if gname not in self.actions:
                raise AlgebraError(f"action for unknown generator {gname!r}")

    # -- basic access

    @property
    def dim(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown basis element {name!r}") from None

    def basis_vec(self, name: str) -> Vec:
        return {self.index(name): Fraction(1)}

    def degree(self, v: Vec) -> Optional[int]:
        return _vdeg(v, self.degrees)

    def apply_d(self, v: Vec) -> Vec:
        return self.d.apply(v)

    def show(self, v: Vec) -> str:
        if not v:
            return "0"
        return " + ".join(f"{c}*{self.names[i]}" for i, c in sorted(v.items()))

    def _symmetrize(self, gname: str, raw: Table) -> Table:
        sym = self.operad.sym.get(gname)
        table: Table = {k: dict(v) for k, v in raw.items() if v}
        if sym is None:
            return table
        for key, out in raw.items():
            degs = [self.degrees[i] for i in key]
            for order in itertools.permutations(range(len(key))):
                # g(c_1..c_k) = ε g(c_o1..c_ok) with ε from the canonical-form rule
                eps = reorder_sign(degs, order) * (sym if inversion_count(order) % 2 else 1)
                new_key = tuple(key[i] for i in order)
                val = scaled(out, eps)
                if new_key in raw:
                    if raw[new_key] != val:
                        self.conflicts.append(f"{gname}{tuple(self.names[i] for i in new_key)}: "
                                              "entries violate the generator symmetry")
                elif val:
                    table[new_key] = val
                else:
                    table.pop(new_key, None)
        return table

    # -- structure maps

    def act(self, gname: str, args: Sequence[Vec]) -> Vec:
        """The generator applied to vectors, multilinearly and with no sign."""
        table = self.actions[gname]
        out: Vec = {}
        for combo in itertools.product(*[list(a.items()) for a in args]):
            key = tuple(i for i, _ in combo)
            val = table.get(key)
            if val:
                c = Fraction(1)
                for _, x in combo:
                    c *= x
                add_into(out, val, c)
        return out

    def eval_decorated(self, t: Tree, leaf_value) -> Vec:
        """Evaluate a tree whose leaves are already inputs, no reordering sign."""
        if is_leaf(t):
            return leaf_value(t)
        return self.act(t[0], [self.eval_decorated(c, leaf_value) for c in t[1]])

    def evaluate_tree(self, t: Tree, args: Sequence[Vec]) -> Vec:
        """γ(t; args) with the Koszul sign of moving inputs into the leaf slots."""
        if is_leaf(t):
            if len(args) != 1 or t != 1:
                raise AlgebraError("identity takes exactly one argument")
            return dict(args[0])
        toks = tokens(t)
        nv = sum(1 for k, _ in toks if k == "v")
        nleaf = len(toks) - nv
        if nleaf != len(args):
            raise AlgebraError(f"arity mismatch: operation has {nleaf} inputs, got {len(args)}")
        vdeg = [self.operad.table.degree(v) for v in vertices(t)]
        out: Vec = {}
        for combo in itertools.product(*[list(a.items()) for a in args]):
            idx = [i for i, _ in combo]
            degs = vdeg + [self.degrees[i] for i in idx]
            order = [x if kind == "v" else nv + x - 1 for kind, x in toks]
            sign = reorder_sign(degs, order)
            c = Fraction(sign)
            for _, x in combo:
                c *= x
            val = self.eval_decorated(t, lambda l: {idx[l - 1]: Fraction(1)})
            add_into(out, val, c)
        return out

    def evaluate(self, op: Dict[Tree, Fraction], args: Sequence[Vec]) -> Vec:
        out: Vec = {}
        for t, c in op.items():
            add_into(out, self.evaluate_tree(t, args), c)
        return out

    # -- serialisation

    def to_json(self) -> dict:
        diff = []
        for i, j, x in self.d.entries():
            diff.append([self.names[j], self.names[i], x.numerator, x.denominator])
        acts = {}
        for g, table in self.actions.items():
            entries = []
            for key in sorted(table):
                entries.append({"inputs": [self.names[i] for i in key],
                                "output": [[self.names[i], x.numerator, x.denominator] for i, x in sorted(table[key].items())]})
            acts[g] = entries
        return {
            "name": self.name,
            "operad": self.operad.name.lower(),
            "basis": [{"name": n, "degree": d} for n, d in zip(self.names, self.degrees)],
            "differential": diff,
            "actions": acts,
        }


# ---------------------------------------------------------------- validation


@dataclass
class Report:
    ok: bool
    violations: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": self.violations}


def _tuples(a: DgAlgebra, k: int):
    return itertools.product(range(a.dim), repeat=k)


def validate(a: DgAlgebra, max_report: int = 50) -> Report:
    bad: List[str] = list(a.conflicts)
    nm = a.names
    # degrees
    for i, j, x in a.d.entries():
        if a.degrees[i] != a.degrees[j] - 1:
            bad.append(f"d({nm[j]}) has a component {nm[i]} of the wrong degree")
    dd = a.d @ a.d
    for i, j, x in dd.entries():
        bad.append(f"d^2({nm[j]}) = {x}*{nm[i]} is nonzero")
    for g in a.operad.generators:
        for key, out in a.actions[g.name].items():
            want = g.degree + sum(a.degrees[i] for i in key)
            if any(a.degrees[i] != want for i in out):
                bad.append(f"{g.name}{tuple(nm[i] for i in key)} is not of degree {want}")
    # Leibniz rule: d g(x) = Σ ± g(.., dx_i, ..)
    for g in a.operad.generators:
        for key in _tuples(a, g.arity):
            lhs = a.apply_d(a.actions[g.name].get(key, {}))
            rhs: Vec = {}
            pre = g.degree
            for i in range(g.arity):
                dx = a.apply_d({key[i]: Fraction(1)})
                if dx:
                    args = [{k: Fraction(1)} for k in key]
                    args[i] = dx
                    add_into(rhs, a.act(g.name, args), -1 if pre & 1 else 1)
                pre += a.degrees[key[i]]
            add_into(lhs, rhs, -1)
            if lhs:
                bad.append(f"Leibniz rule fails for d {g.name}{tuple(nm[i] for i in key)}: residual {a.show(lhs)}")
                if len(bad) > max_report:
                    break
    # relations
    for k in a.operad.relation_arities():
        if k > a.operad.max_arity:
            continue
        rel = a.operad.relation_space(k)
        monos = a.operad.monomials(k, 2)
        ops = [monos.to_trees(r) for r in rel.basis]
        for key in _tuples(a, k):
            args = [{i: Fraction(1)} for i in key]
            for op in ops:
                v = a.evaluate(op, args)
                if v:
                    bad.append(f"relation fails on {tuple(nm[i] for i in key)}: {a.show(v)}")
                    break
            if len(bad) > max_report:
                break
    return Report(not bad, bad[:max_report])


# ---------------------------------------------------------------- homology


@dataclass
class HomologyData:
    names: List[str]
    degrees: List[int]
    reps: List[Vec]
    projection: Mat
    section: Mat

    @property
    def dim(self) -> int:
        return len(self.names)

    def classify(self, cycle: Vec) -> Vec:
        return self.projection.apply(cycle)

    def lift(self, h: Vec) -> Vec:
        return self.section.apply(h)


def homology_data(a: DgAlgebra, section: Optional[Sequence[Vec]] = None) -> HomologyData:
    reps, proj, sect = homology(a.d, a.d)
    names, degs = [], []
    used = set()
    for k, r in enumerate(reps):
        dg = a.degree(r)
        if dg is None:
            raise StructuralError("homology representative is not homogeneous")
        lead = a.names[min(r)]
        nm = f"[{lead}]" if len(r) == 1 and f"[{lead}]" not in used else f"[h{k}]"
        used.add(nm)
        names.append(nm)
        degs.append(dg)
    if section is not None:
        if len(section) != len(reps):
            raise StructuralError("section has the wrong number of classes")
        for k, s in enumerate(section):
            if a.apply_d(s):
                raise StructuralError("section vector is not a cycle")
            c = proj.apply(s)
            if c != {k: Fraction(1)}:
                raise StructuralError("section does not split the projection")
        sect = Mat.from_columns(a.dim, list(section))
    return HomologyData(names, degs, list(reps), proj, sect)


def homology_of(a: DgAlgebra, section: Optional[Sequence[Vec]] = None) -> Tuple[HomologyData, DgAlgebra]:
    """Homology with the induced structure (zero differential)."""
    hd = homology_data(a, section)
    acts: Dict[str, Table] = {}
    for g in a.operad.generators:
        table: Table = {}
        for key in itertools.product(range(hd.dim), repeat=g.arity):
            args = [hd.lift({i: Fraction(1)}) for i in key]
            v = hd.classify(a.act(g.name, args))
            if v:
                table[key] = v
        acts[g.name] = table
    h = DgAlgebra(a.operad, hd.names, hd.degrees, Mat(hd.dim, hd.dim), acts, name=f"H({a.name})")
    return hd, h


# ---------------------------------------------------------------- morphisms


@dataclass
class AlgebraMorphism:
    source: DgAlgebra
    target: DgAlgebra
    matrix: Mat  # target dim x source dim

    def __post_init__(self):
        if self.matrix.nrows != self.target.dim or self.matrix.ncols != self.source.dim:
            raise AlgebraError("morphism matrix has the wrong shape")

    def __call__(self, v: Vec) -> Vec:
        return self.matrix.apply(v)

    def check(self) -> Report:
        bad = []
        s, t = self.source, self.target
        for i, j, x in self.matrix.entries():
            if t.degrees[i] != s.degrees[j]:
                bad.append(f"f({s.names[j]}) has a component of the wrong degree")
        if not ((t.d @ self.matrix) == (self.matrix @ s.d)):
            bad.append("f is not a chain map")
        for g in s.operad.generators:
            for key in itertools.product(range(s.dim), repeat=g.arity):
                lhs = self(s.actions[g.name].get(key, {}))
                rhs = t.act(g.name, [self({i: Fraction(1)}) for i in key])
                if lhs != rhs:
                    bad.append(f"f does not commute with {g.name} on {tuple(s.names[i] for i in key)}")
        return Report(not bad, bad)

    def on_homology(self) -> Tuple[Mat, HomologyData, HomologyData]:
        hs, ht = homology_data(self.source), homology_data(self.target)
        m = ht.projection @ self.matrix @ hs.section
        return m, hs, ht

    def is_quasi_iso(self) -> bool:
        m, hs, ht = self.on_homology()
        return hs.dim == ht.dim and rank(m) == hs.dim


def identity_morphism(a: DgAlgebra) -> AlgebraMorphism:
    return AlgebraMorphism(a, a, Mat.identity(a.dim))


# ---------------------------------------------------------------- JSON


def _coeff(num, den=1) -> Fraction:
    try:
        return Fraction(int(num), int(den))
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise ParseError(f"bad coefficient {num}/{den}") from e


def resolve_operad(spec: str, base: Optional[Path] = None, max_arity: int = 5, max_weight: int = 4) -> Presentation:
    if spec.lower() in BUILTIN_OPERADS:
        return builtin(spec.lower(), max_arity, max_weight)
    path = Path(spec)
    if base is not None and not path.is_absolute():
        path = base / path
    if not path.exists():
        raise ParseError(f"operad {spec!r} is neither built in nor a file")
    return presentation_from_json(json.loads(path.read_text()), max_arity, max_weight)


def algebra_from_json(obj: dict, operad: Optional[Presentation] = None, base: Optional[Path] = None,
                      max_arity: int = 5, max_weight: int = 4) -> DgAlgebra:
    if not isinstance(obj, dict):
        raise ParseError("algebra file must be a JSON object")
    if operad is None:
        if "operad" not in obj:
            raise ParseError("algebra file misses field 'operad'")
        operad = resolve_operad(str(obj["operad"]), base, max_arity, max_weight)
    try:
        basis = obj["basis"]
        names = [str(b["name"]) for b in basis]
        degrees = [int(b["degree"]) for b in basis]
    except (KeyError, TypeError) as e:
        raise ParseError(f"basis entries need 'name' and 'degree' ({e})") from e
    idx = {n: i for i, n in enumerate(names)}

    def lookup(x, where):
        if isinstance(x, int):
            return x
        if x not in idx:
            raise ParseError(f"{where}: unknown basis element {x!r}")
        return idx[x]

    d = Mat(len(names), len(names))
    for k, entry in enumerate(obj.get("differential", [])):
        if len(entry) not in (3, 4):
            raise ParseError(f"differential[{k}] must be [src, dst, num, den]")
        src, dst = lookup(entry[0], f"differential[{k}]"), lookup(entry[1], f"differential[{k}]")
        c = _coeff(*entry[2:])
        if c:
            row = d.data.setdefault(dst, {})
            row[src] = row.get(src, Fraction(0)) + c
    actions: Dict[str, Table] = {}
    for gname, entries in obj.get("actions", {}).items():
        table: Table = {}
        for k, e in enumerate(entries):
            where = f"actions.{gname}[{k}]"
            try:
                key = tuple(lookup(x, where) for x in e["inputs"])
                out: Vec = {}
                for term in e["output"]:
                    add_into(out, {lookup(term[0], where): _coeff(*term[1:])})
            except (KeyError, TypeError) as ex:
                raise ParseError(f"{where}: needs 'inputs' and 'output' ({ex})") from ex
            if key in table:
                raise ParseError(f"{where}: duplicate input tuple")
            table[key] = out
        actions[gname] = table
    try:
        return DgAlgebra(operad, names, degrees, d, actions, name=str(obj.get("name", "algebra")))
    except AlgebraError as e:
        raise ParseError(str(e)) from e


def load_algebra(path, max_arity: int = 5, max_weight: int = 4) -> DgAlgebra:
    path = Path(path)
    return algebra_from_json(json.loads(path.read_text()), base=path.parent, max_arity=max_arity, max_weight=max_weight)


def builtin_algebra(name: str, max_arity: int = 5, max_weight: int = 4) -> DgAlgebra:
    from .operad import _data_path

    obj = json.loads(_data_path("algebras", f"{name}.json").read_text())
    return algebra_from_json(obj, max_arity=max_arity, max_weight=max_weight)


BUILTIN_ALGEBRAS = ("triple-massey-ass", "triple-massey-ass-obstructed", "lie-bracket-massey",
                    "dual-numbers-staircase", "formal-zero-d", "poisson-weight2")


# ---------------------------------------------------------------- constructions


def restrict(a: DgAlgebra, m) -> DgAlgebra:
    """f^*(a) for an operad morphism f: P -> Q and a Q-algebra a."""
    acts: Dict[str, Table] = {}
    for g in m.source.generators:
        table: Table = {}
        img = m.images[g.name]
        for key in itertools.product(range(a.dim), repeat=g.arity):
            v = a.evaluate(img, [{i: Fraction(1)} for i in key])
            if v:
                table[key] = v
        acts[g.name] = table
    return DgAlgebra(m.source, a.names, a.degrees, a.d, acts, name=f"f*({a.name})")


def direct_sum(a: DgAlgebra, b: DgAlgebra, name: Optional[str] = None) -> DgAlgebra:
    """a ⊕ b with all mixed products zero."""
    if a.operad is not b.operad:
        raise AlgebraError("direct sum needs algebras over the same operad")
    off = a.dim
    names = a.names + [n if n not in a.names else n + "'" for n in b.names]
    d = Mat(a.dim + b.dim, a.dim + b.dim)
    for i, j, x in a.d.entries():
        d.data.setdefault(i, {})[j] = x
    for i, j, x in b.d.entries():
        d.data.setdefault(i + off, {})[j + off] = x
    acts: Dict[str, Table] = {}
    for g in a.operad.generators:
        t: Table = {k: dict(v) for k, v in a.actions[g.name].items()}
        for k, v in b.actions[g.name].items():
            t[tuple(i + off for i in k)] = {i + off: x for i, x in v.items()}
        acts[g.name] = t
    return DgAlgebra(a.operad, names, a.degrees + b.degrees, d, acts, name=name or f"{a.name}+{b.name}")
