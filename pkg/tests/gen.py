"""Random valid algebras and defining systems for the property tests."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from opmassey.algebra import DgAlgebra, validate
from opmassey.kdual import Cooperation, cooperation, kdual_cell
from opmassey.linalg import Mat, Vec, add_into, inverse, kernel
from opmassey.massey import build_defining_system
from opmassey.operad import builtin

BOUNDS = (4, 3)


def nonzero(rng: random.Random, lo: int = -3, hi: int = 3) -> Fraction:
    x = 0
    while x == 0:
        x = rng.randint(lo, hi)
    return Fraction(x)


def triple_algebra(op: str, rng: random.Random, degrees: Optional[Tuple[int, int, int]] = None) -> DgAlgebra:
    """x, y, z with xy = p = da and yz = q = db; xb and az land on w with random weights.

    ``op`` is ass, com or lie; the single binary generator is used throughout.
    """
    pres = builtin(op, *BOUNDS)
    gen = pres.generators[0].name
    dx, dy, dz = degrees or tuple(rng.randint(0, 3) for _ in range(3))
    names = ["x", "y", "z", "p", "q", "a", "b", "w"]
    degs = [dx, dy, dz, dx + dy, dy + dz, dx + dy + 1, dy + dz + 1, dx + dy + dz + 1]
    d = Mat(8, 8)
    d.data[3] = {5: Fraction(1)}
    d.data[4] = {6: Fraction(1)}
    table = {
        (0, 1): {3: nonzero(rng)},
        (1, 2): {4: nonzero(rng)},
        (0, 6): {7: nonzero(rng)},
        (5, 2): {7: nonzero(rng)},
    }
    return DgAlgebra(pres, names, degs, d, {gen: table}, name=f"random-{op}")


def staircase_algebra(rng: random.Random, steps: Optional[int] = None) -> DgAlgebra:
    """A dual-numbers staircase y -> t1 = d a1, tri(a1) = t2 = d a2, ...; plus a free class."""
    pres = builtin("dual", 4, 4)
    L = steps or rng.randint(1, 3)
    d0 = rng.randint(-1, 2)
    names = ["y", "t1"]
    degs = [d0, d0 + 1]
    table: Dict[tuple, Vec] = {(0,): {1: nonzero(rng)}}
    rows: Dict[int, Vec] = {}
    for k in range(1, L):
        names += [f"a{k}", f"t{k + 1}"]
        degs += [d0 + 2 * k, d0 + 2 * k + 1]
        ai, ti = len(names) - 2, len(names) - 1
        rows.setdefault(ai - 1, {})[ai] = nonzero(rng)  # d a_k = c t_k
        table[(ai,)] = {ti: nonzero(rng)}
    names.append("u")
    degs.append(rng.randint(-1, 3))
    n = len(names)
    d = Mat(n, n)
    for i, r in rows.items():
        d.data[i] = dict(r)
    return DgAlgebra(pres, names, degs, d, {"tri": table}, name="random-staircase")


def transport(a: DgAlgebra, rng: random.Random) -> Tuple[DgAlgebra, Mat]:
    """The same algebra in a random degree-preserving basis e'_j = Σ_i M_ij e_i.

    Returns the new algebra and M^{-1}, which converts old coordinates to new ones.
    """
    n = a.dim
    while True:
        M = Mat(n, n)
        for i in range(n):
            for j in range(n):
                if a.degrees[i] == a.degrees[j] and (i == j or rng.random() < 0.5):
                    x = rng.randint(-2, 2) if i != j else nonzero(rng, -2, 2)
                    if x:
                        M.data.setdefault(i, {})[j] = Fraction(x)
        try:
            Minv = inverse(M)
            break
        except Exception:
            continue
    d = Minv @ a.d @ M
    acts = {}
    for g in a.operad.generators:
        table = {}
        for key in itertools.product(range(n), repeat=g.arity):
            v = a.act(g.name, [M.column(j) for j in key])
            w = Minv.apply(v)
            if w:
                table[key] = w
        acts[g.name] = table
    return DgAlgebra(a.operad, [f"{x}'" for x in a.names], a.degrees, d, acts, name=a.name + "'"), Minv


def cycles_in(a: DgAlgebra, deg: int) -> List[Vec]:
    idx = [i for i in range(a.dim) if a.degrees[i] == deg]
    if not idx:
        return []
    sub = Mat.from_columns(a.dim, [a.d.column(i) for i in idx])
    return [{idx[j]: c for j, c in v.items()} for v in kernel(sub).basis]


def random_cycle(a: DgAlgebra, deg: int, rng: random.Random) -> Vec:
    out: Vec = {}
    for z in cycles_in(a, deg):
        add_into(out, z, rng.randint(-2, 2))
    return out


def random_cooperation(pres, arity: int, weight: int, rng: random.Random) -> Cooperation:
    cell = kdual_cell(pres, arity, weight)
    while True:
        coords = [rng.randint(-2, 2) for _ in range(cell.dim)]
        if any(coords):
            return Cooperation(pres, arity, weight, cell.combine(coords))


def random_system(a: DgAlgebra, g: Cooperation, reps: Sequence[Vec], degrees: Sequence[int],
                  rng: random.Random):
    """A defining system with random cycles added at every key, or None if obstructed."""
    res = build_defining_system(a, g, reps, degrees, extra=lambda key, deg: random_cycle(a, deg, rng))
    return res.system


def random_case(op: str, rng: random.Random):
    """(algebra, cooperation, reps, degrees) for one randomized trial over the named operad."""
    if op == "dual":
        a = staircase_algebra(rng)
        g = cooperation(a.operad, f"delta{rng.randint(1, 3)}")
        slots = [0]
    else:
        a = triple_algebra(op, rng)
        g = random_cooperation(a.operad, 3, 2, rng)
        slots = [0, 1, 2]
    to_new = None
    if rng.random() < 0.7:
        a, to_new = transport(a, rng)
    reps = []
    for i in slots:
        r = to_new.column(i) if to_new is not None else {i: Fraction(1)}
        r = dict(r)
        add_into(r, random_cycle(a, a.degrees[i], rng))
        reps.append(r)
    return a, g, reps, [a.degrees[i] for i in slots]


def is_valid(a: DgAlgebra) -> bool:
    return validate(a).ok
