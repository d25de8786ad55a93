from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from opmassey.linalg import (
    Echelon,
    ImageSolver,
    Mat,
    Quotient,
    StructuralError,
    Subspace,
    homology,
    intersect,
    inverse,
    kernel,
    rank,
    rref,
    solve,
)

entries = st.integers(-3, 3)


@st.composite
def matrices(draw, max_rows=5, max_cols=5):
    r = draw(st.integers(1, max_rows))
    c = draw(st.integers(1, max_cols))
    return [[draw(entries) for _ in range(c)] for _ in range(r)]


def sym_rank(rows):
    return sympy.Matrix(rows).rank()


@given(matrices())
def test_rank_matches_sympy(rows):
    assert rank(Mat.from_dense(rows)) == sym_rank(rows)


@given(matrices())
def test_kernel_is_kernel(rows):
    m = Mat.from_dense(rows)
    ker = kernel(m)
    assert ker.dim == len(rows[0]) - sym_rank(rows)
    for v in ker.basis:
        assert not m.apply(v)


@given(matrices(), st.lists(entries, min_size=5, max_size=5))
def test_solve_consistent_systems(rows, xs):
    m = Mat.from_dense(rows)
    x = {j: Fraction(v) for j, v in enumerate(xs[: m.ncols]) if v}
    b = m.apply(x)
    got = solve(m, b)
    assert got is not None
    sol, ker = got
    assert m.apply(sol) == b
    assert ker.dim == m.ncols - rank(m)


def test_solve_inconsistent():
    m = Mat.from_dense([[1, 0], [0, 0]])
    assert solve(m, {1: Fraction(1)}) is None


@given(matrices(), st.lists(entries, min_size=5, max_size=5))
def test_image_solver(rows, xs):
    m = Mat.from_dense(rows)
    x = {j: Fraction(v) for j, v in enumerate(xs[: m.ncols]) if v}
    b = m.apply(x)
    pre = ImageSolver(m).solve(b)
    assert pre is not None and m.apply(pre) == b


@given(matrices())
def test_rref_shape(rows):
    red, piv = rref(Mat.from_dense(rows))
    assert len(piv) == sym_rank(rows)
    for k, p in enumerate(piv):
        assert red.get(k, p) == 1
        for i in range(len(piv)):
            if i != k:
                assert red.get(i, p) == 0


@given(matrices(4, 4), matrices(4, 4))
def test_intersection_dimension(r1, r2):
    n = 4
    a = Subspace(n, [{j: Fraction(x) for j, x in enumerate(r[:n]) if x} for r in r1])
    b = Subspace(n, [{j: Fraction(x) for j, x in enumerate(r[:n]) if x} for r in r2])
    both = intersect(a, b)
    assert both.dim == a.dim + b.dim - (a + b).dim
    assert both.issubset(a) and both.issubset(b)


def test_inverse():
    m = Mat.from_dense([[2, 1], [1, 1]])
    assert (m @ inverse(m)) == Mat.identity(2)
    with pytest.raises(StructuralError):
        inverse(Mat.from_dense([[1, 1], [1, 1]]))


def test_echelon_membership():
    e = Echelon([{0: Fraction(1), 1: Fraction(1)}])
    assert e.contains({0: Fraction(2), 1: Fraction(2)})
    assert not e.contains({0: Fraction(1)})
    assert e.add({0: Fraction(1)})
    assert e.contains({1: Fraction(5)})


def test_quotient_dims():
    num = [{0: Fraction(1)}, {1: Fraction(1)}, {2: Fraction(1)}]
    q = Quotient(num, [{0: Fraction(1), 1: Fraction(1)}])
    assert q.dim == 2
    assert q.is_zero({0: Fraction(3), 1: Fraction(3)})
    assert not q.is_zero({2: Fraction(1)})


def test_homology_of_small_complex():
    # e0 <- e1 (d e1 = e0), e2 a cycle: homology is spanned by e2
    d = Mat.from_dense([[0, 1, 0], [0, 0, 0], [0, 0, 0]])
    reps, proj, sect = homology(d, d)
    assert len(reps) == 1
    assert proj.apply({0: Fraction(1)}) == {}
    assert proj.apply(sect.apply({0: Fraction(1)})) == {0: Fraction(1)}


@settings(max_examples=30)
@given(st.integers(1, 4), st.integers(0, 3), st.integers(0, 2))
def test_homology_dimension_counts(free, pairs, extra):
    # a complex with `pairs` acyclic pairs and `free + extra` cycles
    n = free + extra + 2 * pairs
    d = Mat(n, n)
    for k in range(pairs):
        d.data[free + extra + 2 * k] = {free + extra + 2 * k + 1: Fraction(1)}
    reps, _, _ = homology(d, d)
    assert len(reps) == free + extra
