import itertools
import math

import pytest
from hypothesis import given, strategies as st

from opmassey.linalg import StructuralError
from opmassey.operad import builtin
from opmassey.trees import (
    Perm,
    act,
    all_perms,
    canonical,
    canonical_monomials,
    from_json_tree,
    koszul_sign,
    parse_tree,
    reorder_sign,
    show_tree,
    to_json_tree,
)


@st.composite
def perms(draw, n=None):
    n = n or draw(st.integers(1, 6))
    return Perm(tuple(draw(st.permutations(range(1, n + 1)))))


@given(st.integers(1, 6).flatmap(lambda n: st.tuples(perms(n), perms(n), perms(n))))
def test_perm_group_laws(triple):
    a, b, c = triple
    assert (a * b) * c == a * (b * c)
    assert (a * a.inverse()).is_identity()
    assert (a * b).parity() == (a.parity() + b.parity()) % 2


def test_perm_rejects_non_permutations():
    with pytest.raises(StructuralError):
        Perm((1, 1))


def _bubble_sign(degrees, order):
    # physically sort the listed symbols back into index order, one swap at a time
    seq = list(order)
    sign = 1
    for i in range(len(seq)):
        for j in range(len(seq) - 1 - i):
            if seq[j] > seq[j + 1]:
                if degrees[seq[j]] % 2 and degrees[seq[j + 1]] % 2:
                    sign = -sign
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
    return sign


@given(st.lists(st.integers(0, 3), min_size=1, max_size=6).flatmap(
    lambda ds: st.tuples(st.just(ds), st.permutations(range(len(ds))))))
def test_reorder_sign_matches_bubble_sort(case):
    degrees, order = case
    assert reorder_sign(degrees, list(order)) == _bubble_sign(degrees, order)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=6).flatmap(
    lambda ds: st.tuples(st.just(ds), perms(len(ds)))))
def test_koszul_sign_agrees_with_reorder(case):
    degrees, sigma = case
    # x_i moves to position σ(i): the new list reads old indices σ^{-1}(1), ..., σ^{-1}(n)
    order = [sigma.inverse()(k) - 1 for k in range(1, sigma.n + 1)]
    assert koszul_sign(degrees, sigma) == reorder_sign(degrees, order)


def _double_factorial(k):
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def _catalan(k):
    return math.comb(2 * k, k) // (k + 1)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_monomial_counts(n):
    # binary trees with labelled leaves: planar ones for a generator without symmetry
    ass = builtin("ass", 5, 4)
    com = builtin("com", 5, 4)
    assert len(canonical_monomials(ass.table, n, n - 1)) == math.factorial(n) * _catalan(n - 1)
    assert len(canonical_monomials(com.table, n, n - 1)) == _double_factorial(2 * n - 3)


def test_canonical_signs_for_symmetries():
    com, lie = builtin("com"), builtin("lie")
    assert canonical(("mu", (2, 1)), com.table) == (1, ("mu", (1, 2)))
    assert canonical(("br", (2, 1)), lie.table) == (-1, ("br", (1, 2)))
    assert canonical(("br", (1, 1)), lie.table)[0] in (0, -1, 1)


@given(st.permutations([1, 2, 3, 4]))
def test_canonical_is_idempotent_and_orbit_invariant(labels):
    lie = builtin("lie")
    t = ("br", (("br", (labels[0], labels[1])), ("br", (labels[2], labels[3]))))
    s1, c1 = canonical(t, lie.table)
    s2, c2 = canonical(c1, lie.table)
    assert (s2, c2) == (1, c1)
    base = ("br", (("br", (1, 2)), ("br", (3, 4))))
    for sigma in all_perms(4):
        s, c = canonical(act(sigma, base), lie.table)
        if c == c1:
            break
    else:
        pytest.fail("canonical form not reached from the base shape")


@pytest.mark.parametrize("text", ["mu(1,2)", "mu(mu(1,3),2)", "br(1,br(2,br(3,4)))", "tri(1)"])
def test_tree_roundtrips(text):
    t = parse_tree(text)
    assert show_tree(t) == text.replace(" ", "")
    assert from_json_tree(to_json_tree(t)) == t


def test_parse_errors():
    for bad in ["mu(1,2", "mu(1,2))", "mu"]:
        with pytest.raises((StructuralError, IndexError)):
            parse_tree(bad)


def test_action_is_a_right_action():
    t = ("mu", (("mu", (1, 2)), 3))
    for a, b in itertools.product(all_perms(3), repeat=2):
        assert act(b, act(a, t)) == act(a * b, t)
