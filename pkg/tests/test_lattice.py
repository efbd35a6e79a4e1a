from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ffdioph.laurent import Laurent, LVec
from ffdioph.lattice import (
    LatticeBasis,
    RankError,
    apply_matrix,
    brute_force_shortest,
    column_reduce,
    count_points_bruteforce,
    count_points_in_ball,
    covering_radius,
    covering_radius_bruteforce_exp,
    covering_radius_exp,
    covering_radius_plus_hyperplane,
    covering_radius_plus_hyperplane_exp,
    determinant_exp,
    random_isometry,
    random_lattice,
    random_unimodular,
    shortest_norm_exp_oracle,
)

from conftest import FIELDS, P


def lvec(F, *pairs):
    return LVec(Laurent.rational(f, g) for f, g in pairs)


def skew_basis(F):
    """Columns (1, 0) and (x^-2, x^-1)."""
    x2, x1 = F.monomial(2), F.x
    return LatticeBasis([lvec(F, (F.one, F.one), (F.zero, F.one)), lvec(F, (F.one, x2), (F.one, x1))])


def test_reduction_examples(F2):
    L = column_reduce(LatticeBasis.diagonal(F2, [-1, 1]))
    assert L.minima == (Fraction(1, 2), 2)
    S = column_reduce(skew_basis(F2))
    assert S.minima == (Fraction(1, 2), 1) and S.det == Fraction(1, 2)
    assert column_reduce(LatticeBasis.identity(F2, 3)).minima_exp == (0, 0, 0)
    D = column_reduce(LatticeBasis.diagonal(F2, [-2, -1, 3]))
    assert D.minima_exp == (-2, -1, 3) and D.det_exp == 0


def test_unimodular_change_keeps_minima(F2):
    rng = random.Random("unimodular")
    for _ in range(20):
        U = random_unimodular(F2, 2, rng)
        L = column_reduce(LatticeBasis.identity(F2, 2).change_basis(U))
        assert L.minima_exp == (0, 0)


def test_count_examples(F2):
    I = column_reduce(LatticeBasis.identity(F2, 2))
    assert count_points_in_ball(I, 0) == 4
    assert count_points_in_ball(I, -1) == 1
    D = LatticeBasis.diagonal(F2, [-1, 1])
    assert count_points_in_ball(column_reduce(D), 0) == 4 == count_points_bruteforce(D, 0)


def test_covering_examples(F2):
    I = column_reduce(LatticeBasis.identity(F2, 2))
    assert covering_radius(I) == Fraction(1, 4)
    assert covering_radius_plus_hyperplane(I) == Fraction(1, 4)
    D = LatticeBasis.diagonal(F2, [-1, 1])
    assert covering_radius(column_reduce(D)) == Fraction(1, 2)
    assert covering_radius_plus_hyperplane(column_reduce(D), D) == Fraction(1, 2)
    xD = LatticeBasis.diagonal(F2, [0, 2])
    assert covering_radius_exp(column_reduce(xD)) == covering_radius_exp(column_reduce(D)) + 1


def test_shortest_examples(F2):
    v = brute_force_shortest(LatticeBasis.identity(F2, 2), 0)
    assert v.norm_exp() == 0
    w = brute_force_shortest(skew_basis(F2), 2)
    assert w == lvec(F2, (F2.one, F2.monomial(2)), (F2.one, F2.x))
    u = brute_force_shortest(LatticeBasis.diagonal(F2, [-3, 3]), 1)
    assert u == lvec(F2, (F2.one, F2.monomial(3)), (F2.zero, F2.one))


def test_rank_deficient_rejected(F2):
    B = LatticeBasis([lvec(F2, (F2.one, F2.one), (F2.x, F2.one)), lvec(F2, (F2.x, F2.one), (F2.x * F2.x, F2.one))])
    with pytest.raises(RankError):
        column_reduce(B)
    L = column_reduce(B, expect_rank=1)
    assert L.rank == 1
    with pytest.raises(RankError):
        covering_radius_exp(L)


@pytest.mark.parametrize("q", [2, 3])
@pytest.mark.parametrize("d", [2, 3, 4])
def test_minkowski_equality(q, d):
    F = FIELDS[q]
    for i in range(40):
        B = random_lattice(F, d, random.Random(f"mink/{q}/{d}/{i}"))
        L = column_reduce(B)
        assert sum(L.minima_exp) == L.det_exp == determinant_exp(B)
        if i < 10:
            assert L.minima_exp[0] == shortest_norm_exp_oracle(B)


@pytest.mark.parametrize("q,d", [(2, 2), (2, 3), (3, 2)])
def test_point_count_formula(q, d):
    F = FIELDS[q]
    for i in range(15):
        B = random_lattice(F, d, random.Random(f"count/{q}/{d}/{i}"))
        L = column_reduce(B)
        for r in range(-2, 3):
            assert count_points_in_ball(L, r) == count_points_bruteforce(B, r, method="enumerate")


@pytest.mark.parametrize("q", [2, 3])
def test_covering_radius_against_search(q):
    """Direct search over residues on tiny planar lattices."""
    F = FIELDS[q]
    checked = 0
    for i in range(60):
        B = random_lattice(F, 2, random.Random(f"cover/{q}/{i}"), max_deg=0, den_deg=0)
        L = column_reduce(B)
        if max(L.minima_exp) > 1:
            continue
        assert covering_radius_bruteforce_exp(B, depth=3) == covering_radius_exp(L)
        checked += 1
    assert checked >= 5


@pytest.mark.parametrize("q,d", [(2, 2), (2, 3), (3, 3)])
def test_covering_radius_isometry_invariant(q, d):
    F = FIELDS[q]
    for i in range(10):
        B = random_lattice(F, d, random.Random(f"iso/{q}/{d}/{i}"))
        L = column_reduce(B)
        base = covering_radius_exp(L)
        assert covering_radius_plus_hyperplane_exp(L, B) == base
        for j in range(5):
            g = random_isometry(F, d, random.Random(f"iso/{q}/{d}/{i}/{j}"))
            assert covering_radius_exp(column_reduce(apply_matrix(g, B))) == base


@pytest.mark.parametrize("q,d", [(2, 2), (3, 3)])
def test_reduced_basis_is_orthogonal(q, d):
    F = FIELDS[q]
    rng = random.Random(f"orth/{q}/{d}")
    for i in range(10):
        L = column_reduce(random_lattice(F, d, rng))
        for _ in range(20):
            r = [F.poly([rng.randrange(q) for _ in range(rng.randint(0, 3))]) for _ in range(d)]
            if not any(r):
                continue
            expect = max(c.deg + e for c, e in zip(r, L.minima_exp) if c)
            assert L.vector(r).norm_exp() == expect == L.combination_norm_exp(r)


@given(st.integers(0, 10**6), st.sampled_from([2, 3]), st.integers(2, 3))
def test_lattice_membership_of_reduced_basis(seed, q, d):
    F = FIELDS[q]
    B = random_lattice(F, d, random.Random(seed))
    L = column_reduce(B)
    for col in B.columns:
        assert L.contains(col)
    for xi in L.xi:
        assert L.lattice_coordinates(xi) is not None


def test_json_round_trip(F3):
    B = random_lattice(F3, 3, random.Random(5))
    assert column_reduce(LatticeBasis.from_json(F3, B.to_json())).minima_exp == column_reduce(B).minima_exp
