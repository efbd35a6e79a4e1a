from __future__ import annotations

import itertools
import json
from fractions import Fraction

import pytest

import oracles as orc
from ffdioph.diophantine import (
    ApproxPair,
    NotInQError,
    approx_quality,
    approx_quality_exp,
    best_approx_sequence,
    di_test,
    farey_lattice,
    fiber,
    fiber_count,
    fiber_count_bruteforce,
    in_H_u,
    is_best_approximation,
    min_quality_by_degree,
    numerator_subspace_representatives,
    r_of_u_bruteforce,
    r_of_u_bruteforce_exp,
)
from ffdioph.ffpoly import NEG_INF, enumerate_polys, enumerate_polys_upto, gcd_many
from ffdioph.laurent import Laurent, LVec

from conftest import FIELDS, P


def theta_of(F, nums, g) -> LVec:
    return LVec(Laurent.rational(f, g) for f in nums)


def pair(F, a, b) -> ApproxPair:
    return ApproxPair([F.poly(x) if not hasattr(x, "coeffs") else x for x in a], b if hasattr(b, "coeffs") else F.poly(b))


def from_int(F, f: int):
    return F.poly([(f >> i) & 1 for i in range(max(f.bit_length(), 1))])


def test_quality_examples(F2):
    th = theta_of(F2, [F2.one], P(F2, 1, 1))
    assert approx_quality(th, ApproxPair.root(F2, 1)) == Fraction(1, 2)
    u = pair(F2, [P(F2, 1)], P(F2, 0, 1, 1))
    assert approx_quality_exp(u.hat, u) == NEG_INF
    th2 = theta_of(F2, [P(F2, 1, 0, 1)], F2.monomial(3))
    assert approx_quality(th2, pair(F2, [F2.one], F2.x)) == Fraction(1, 4)


def test_transcript_example(F2):
    th = theta_of(F2, [P(F2, 1, 0, 1)], F2.monomial(3))
    seq = best_approx_sequence(th, 3)
    got = [(u.a[0], u.b, A) for u, A in zip(seq.entries, seq.qualities_exp)]
    want = [
        (F2.zero, F2.one, -1),
        (F2.one, F2.x, -2),
        (F2.x, P(F2, 1, 0, 1), -3),
        (P(F2, 1, 0, 1), F2.monomial(3), NEG_INF),
    ]
    assert got == want and seq.rational


def test_polynomial_theta(F3):
    th = theta_of(F3, [P(F3, 2, 1)], F3.one)
    seq = best_approx_sequence(th, 3)
    assert [(u.a[0], u.b) for u in seq.entries] == [(P(F3, 2, 1), F3.one)]
    assert seq.qualities_exp == [NEG_INF]


def test_two_dimensional_transcript_matches_oracle(F2):
    th = theta_of(F2, [F2.x, F2.one], F2.monomial(2))
    seq = best_approx_sequence(th, 2)
    assert seq.entries[0] == ApproxPair.root(F2, 2) and seq.qualities_exp[0] == -1
    want = orc.best_approximations(((0b10, 0b1), 0b100), 2)
    assert [(tuple(map(orc.to_int, u.a)), orc.to_int(u.b)) for u in seq.entries] == want


@pytest.mark.parametrize("d,G", [(1, 4), (2, 3)])
def test_sequence_equals_definition_exhaustively(d, G):
    """Every theta in the unit ball with denominator of degree <= G, q = 2."""
    F = FIELDS[2]
    for g in range(1, 1 << (G + 1)):
        D = orc.deg(g)
        for nums in itertools.product(range(1 << D) if D > 0 else [0], repeat=d):
            th = theta_of(F, [from_int(F, f) for f in nums], from_int(F, g))
            seq = best_approx_sequence(th, G)
            got = [(tuple(map(orc.to_int, u.a)), orc.to_int(u.b)) for u in seq.entries]
            assert got == orc.best_approximations((nums, g), G), (nums, g)


def test_best_approximation_predicate_matches_sequence(F3):
    th = theta_of(F3, [P(F3, 1, 2), P(F3, 2)], P(F3, 1, 1, 0, 1))
    seq = best_approx_sequence(th, 3)
    mins = min_quality_by_degree(th, 3)
    for u in seq.entries:
        assert is_best_approximation(th, u, mins)
        assert is_best_approximation(th, u.scale(2), mins)
    assert not is_best_approximation(th, pair(F3, [P(F3, 1), P(F3, 0)], P(F3, 2, 1)), mins)


def test_unit_multiples_give_same_transcript(F3):
    th = theta_of(F3, [P(F3, 1, 2, 1)], P(F3, 1, 0, 1, 1))
    seq = best_approx_sequence(th, 3)
    for u in seq.entries:
        for c in (1, 2):
            v = u.scale(c)
            assert approx_quality_exp(th, v) == approx_quality_exp(th, u)
            assert farey_lattice(v).r_exp == farey_lattice(u).r_exp
    assert all(u.b.is_monic for u in seq.entries)


def test_farey_examples(F2):
    u = pair(F2, [F2.one], F2.x)
    fl = farey_lattice(u)
    assert fl.minima_exp == (-1,) and fl.det_exp == -1 and fl.r_u == Fraction(1, 2)
    root = farey_lattice(ApproxPair.root(F2, 3))
    assert root.minima_exp == (0, 0, 0)
    w = farey_lattice(pair(F2, [F2.one, F2.one], F2.x))
    assert w.det_exp == -1 and sum(w.minima_exp) == -1


def test_r_of_u_examples(F2):
    assert r_of_u_bruteforce(pair(F2, [F2.one], F2.x)) == Fraction(1, 2)
    assert r_of_u_bruteforce(ApproxPair.root(F2, 1)) == 1


def test_H_u_examples(F2):
    u1 = pair(F2, [F2.one], F2.x)
    assert in_H_u(u1, u1) and not in_H_u(u1, pair(F2, [F2.one], P(F2, 1, 1)))
    root = ApproxPair.root(F2, 2)
    assert farey_lattice(root).xi[0] == LVec.rational([F2.one, F2.zero], F2.one)
    assert in_H_u(root, pair(F2, [F2.x, F2.zero], P(F2, 1, 1)))
    assert not in_H_u(root, pair(F2, [F2.zero, F2.one], F2.x))


def test_fiber_examples(F2, F3):
    u = ApproxPair.root(F2, 2)
    alpha = LVec.rational([F2.one, F2.x], F2.one)
    assert fiber_count(u, alpha, 0) == 1
    v = pair(F3, [P(F3, 1), P(F3, 0, 1)], P(F3, 2, 1))
    fl = farey_lattice(v)
    prim = fl.lattice.vector([F3.one, F3.x])
    assert fiber_count(v, prim, 2) == 18 == fiber_count_bruteforce(v, prim, 2)
    doubled = fl.lattice.vector([P(F3, 0, 1), P(F3, 0, 0, 1)])
    count = fiber_count(v, doubled, 0)
    assert count == fiber_count_bruteforce(v, doubled, 0) and count <= 2
    for w in fiber(v, prim, 1):
        assert w.norm_exp == v.norm_exp + 1


def test_not_in_Q_rejected(F2):
    with pytest.raises(NotInQError):
        ApproxPair.make([F2.x], F2.x)
    with pytest.raises(NotInQError):
        ApproxPair([F2.one], F2.zero)


def test_di_test_examples(F2):
    th = theta_of(F2, [P(F2, 1, 0, 1)], F2.monomial(3))
    seq = best_approx_sequence(th, 3)
    assert di_test(seq, Fraction(1, 4)).verdict == "degenerate"
    th2 = theta_of(F2, [P(F2, 1, 1, 0, 1)], P(F2, 1, 1, 0, 0, 1, 1))
    seq2 = best_approx_sequence(th2, 4)
    assert not seq2.rational
    for eps in (Fraction(1), Fraction(1, 2), Fraction(1, 4)):
        res = di_test(seq2, eps)
        expect = []
        for u in seq2.entries:
            a, b = [orc.to_int(ai) for ai in u.a], orc.to_int(u.b)
            # |u| r(u)^d < eps^d, all in powers of two
            expect.append(Fraction(2) ** (orc.deg(b) + len(a) * orc.r_exp(a, b)) < eps ** len(a))
        assert res.passes == expect
        assert res.verdict == ("consistent" if expect[-1] else "inconsistent")


@pytest.mark.parametrize("q,d,Dmax", [(2, 1, 4), (2, 2, 3), (3, 1, 3), (3, 2, 2), (2, 3, 2)])
def test_lambda1_equals_r_of_u(q, d, Dmax):
    F = FIELDS[q]
    for D in range(Dmax + 1):
        for b in enumerate_polys(F, D, monic_only=True):
            for a in numerator_subspace_representatives(F, D, d):
                u = ApproxPair(a, b)
                if not u.in_Q():
                    continue
                fl = farey_lattice(u)
                assert fl.det_exp == -D
                assert fl.r_exp == r_of_u_bruteforce_exp(u)


@pytest.mark.parametrize("d,Dmax", [(1, 4), (2, 3)])
def test_r_of_u_against_definition_scan(d, Dmax):
    F = FIELDS[2]
    for b in range(1, 1 << (Dmax + 1)):
        D = orc.deg(b)
        for a in itertools.product(range(1 << D) if D else [0], repeat=d):
            if orc.gcd_all(list(a) + [b]) != 1:
                continue
            u = ApproxPair([from_int(F, x) for x in a], from_int(F, b))
            expect = orc.r_exp(a, b) if D <= 2 else orc.r_exp_fast(a, b)
            assert farey_lattice(u).r_exp == expect


@pytest.mark.parametrize("d", [1, 2])
def test_A_theta_equals_A_hat_u(d):
    """A(theta, v) = A(hat u, v) for every best approximation u and v in Q with
    |v| <= |u|, v not a unit multiple of u; exhaustive at q = 2, deg b <= 3."""
    G = 3
    for g in range(1, 1 << (G + 1)):
        D = orc.deg(g)
        for nums in itertools.product(range(1 << D) if D else [0], repeat=d):
            for a, b in orc.best_approximations((nums, g), G):
                Db = orc.deg(b)
                for b2 in range(1, 1 << (Db + 1)):
                    for a2 in itertools.product(orc.polys_upto(Db + 1), repeat=d):
                        if (tuple(a2), b2) == (tuple(a), b) or orc.gcd_all(list(a2) + [b2]) != 1:
                            continue
                        assert orc.A_exp((nums, g), a2, b2) == orc.A_exp((a, b), a2, b2)


@pytest.mark.parametrize("d", [1, 2])
def test_best_approximation_sandwich(d):
    """A(theta, u) < r(u) => u best; u best => A(theta, u) <= r(u)."""
    F = FIELDS[2]
    G = 3 if d == 1 else 2
    us = []
    for b in range(1, 1 << (G + 1)):
        D = orc.deg(b)
        for a in itertools.product(range(1 << D) if D else [0], repeat=d):
            if orc.gcd_all(list(a) + [b]) == 1:
                u = ApproxPair([from_int(F, x) for x in a], from_int(F, b))
                us.append(u)
    rs = {u: farey_lattice(u).r_exp for u in us}
    for g in range(1, 1 << (G + 2)):
        D = orc.deg(g)
        for nums in itertools.product(range(1 << D) if D else [0], repeat=d):
            th = theta_of(F, [from_int(F, f) for f in nums], from_int(F, g))
            mins = min_quality_by_degree(th, G)
            for u in us:
                A = approx_quality_exp(th, u)
                best = is_best_approximation(th, u, mins)
                if A < rs[u]:
                    assert best
                if best:
                    assert A <= rs[u]


def test_chain_identity(F2):
    """A(hat u_{i+j}, u_i) = A(theta, u_i) = r(u_{i+1}) along computed sequences."""
    F = FIELDS[2]
    for g in enumerate_polys(F, 5, monic_only=True):
        for f1 in enumerate_polys_upto(F, 4):
            for f2 in (F.one, F.x, P(F, 1, 1, 1)):
                th = theta_of(F, [f1, f2], g)
                seq = best_approx_sequence(th, 5)
                us = seq.entries
                for i in range(len(us) - 1):
                    Ai = approx_quality_exp(th, us[i])
                    assert Ai == farey_lattice(us[i + 1]).r_exp
                    for j in range(i + 1, len(us)):
                        assert approx_quality_exp(us[j].hat, us[i]) == Ai
                assert all(x < y for x, y in zip(seq.qualities_exp[1:], seq.qualities_exp))
                assert all(u.norm_exp < w.norm_exp for u, w in zip(us, us[1:]))


@pytest.mark.parametrize("q,d", [(2, 2), (3, 2), (2, 3)])
def test_fiber_count_formula(q, d):
    F = FIELDS[q]
    import random

    rng = random.Random(f"fiber/{q}/{d}")
    done = 0
    while done < 6:
        b = F.poly([rng.randrange(q) for _ in range(rng.randint(0, 2))] + [1])
        u = ApproxPair([F.poly([rng.randrange(q) for _ in range(int(b.deg))]) for _ in range(d)], b)
        if not u.in_Q():
            continue
        fl = farey_lattice(u)
        c = [F.poly([rng.randrange(q) for _ in range(2)]) for _ in range(d)]
        if gcd_many(c).deg != 0:
            continue
        alpha = fl.lattice.vector(c)
        for k in range(4 if q == 2 else 3):
            assert fiber_count(u, alpha, k) == fiber_count_bruteforce(u, alpha, k) == (q - 1) * q**k
        done += 1


def test_sequence_json(F2):
    th = theta_of(F2, [P(F2, 1, 0, 1)], F2.monomial(3))
    blob = json.dumps(best_approx_sequence(th, 3).to_json(), sort_keys=True)
    assert blob == json.dumps(best_approx_sequence(th, 3).to_json(), sort_keys=True)
    u = pair(F2, [F2.x], P(F2, 1, 0, 1))
    assert ApproxPair.from_json(F2, u.to_json()) == u
