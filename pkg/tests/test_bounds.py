from __future__ import annotations

import csv
import io
from decimal import Decimal
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from oracles import dec, lower_decimal, upper_decimal
from ffdioph.bounds import (
    base_dim,
    bound_report,
    bounds_table,
    grid_monotone,
    lower_bound,
    lower_monotone,
    lower_valid,
    regions,
    table_csv,
    upper_bound,
    upper_nontrivial,
)


def close(a, b: Decimal, tol: str) -> bool:
    return abs(Decimal(mpmath.nstr(a, 40)) - b) <= Decimal(tol)


def test_base_dim():
    assert base_dim(2) == Fraction(4, 3)
    assert base_dim(3) == Fraction(9, 4)
    assert all(base_dim(d) < d for d in range(2, 50))
    with pytest.raises(ValueError):
        base_dim(1)


def test_reference_values():
    assert abs(upper_bound(2, 2, Fraction(1, 16)) - mpmath.mpf("1.871568")) <= 1e-5
    assert abs(lower_bound(2, 2, Fraction(1, 4)) - mpmath.mpf("1.333392")) <= 1e-5


@pytest.mark.parametrize("q,d", [(2, 2), (3, 2), (2, 3), (4, 3), (5, 4)])
def test_formulas_against_decimal(q, d):
    for j in range(1, 12):
        eps = Fraction(1, q**j)
        assert close(upper_bound(q, d, eps), upper_decimal(q, d, eps), "1e-25")
        if lower_valid(q, d, eps):
            assert close(lower_bound(q, d, eps), lower_decimal(q, d, eps), "1e-25")


@mpmath.workdps(60)
def test_upper_example_values():
    # sqrt((1)(9)(16)/256) = 3/4
    assert abs(upper_bound(2, 2, Fraction(1, 16)) - (mpmath.mpf(4) / 3 + mpmath.mpf(2) / 3 * mpmath.log(1.75, 2))) < 1e-25
    assert upper_bound(2, 2, Fraction(1, 8)) > 2
    # (1/256)(1/4)(1/16) = 2^-14
    assert abs(lower_bound(2, 2, Fraction(1, 4)) - (mpmath.mpf(4) / 3 + mpmath.mpf(2) / 3 * mpmath.log(1 + mpmath.mpf(2) ** -14, 2))) < 1e-25


def test_regions():
    r = regions(2, 2)
    assert (r.lower_edge, r.upper) == (Fraction(1, 3), Fraction(1, 12))
    r3 = regions(3, 2)
    assert (r3.lower_edge, r3.upper) == (Fraction(4, 9), Fraction(1, 36))
    for q in (2, 3, 4, 5, 7):
        for d in (2, 3, 4):
            assert regions(q, d).upper < 1


@pytest.mark.parametrize("q,d", [(2, 2), (3, 2), (2, 3), (3, 3), (4, 2)])
@mpmath.workdps(60)
def test_upper_nontrivial_iff_at_most_d(q, d):
    for j in range(0, 10):
        eps = Fraction(1, q**j)
        assert upper_nontrivial(q, d, eps) == (upper_bound(q, d, eps) <= d)
    edge = regions(q, d).upper
    assert upper_nontrivial(q, d, edge) and not upper_nontrivial(q, d, edge * Fraction(101, 100))
    # at the edge 1 + sqrt(...) = q, so the bound is exactly d
    assert abs(upper_bound(q, d, edge) - d) < 1e-25


@pytest.mark.parametrize("q,d", [(2, 2), (3, 2), (2, 3), (3, 3)])
def test_lower_increasing_in_region(q, d):
    epss = sorted(Fraction(1, q**j) for j in range(0, 14) if lower_monotone(q, d, Fraction(1, q**j)))
    vals = [lower_bound(q, d, e) for e in epss]
    assert len(vals) >= 5
    assert all(a < b for a, b in zip(vals, vals[1:]))


@given(st.sampled_from([(2, 2), (3, 2), (2, 3), (3, 3)]), st.fractions(Fraction(1, 10**6), Fraction(1, 2)))
def test_ordering(qd, eps):
    q, d = qd
    base = mpmath.mpf(base_dim(d).numerator) / base_dim(d).denominator
    up = upper_bound(q, d, eps)
    assert up >= base
    if lower_valid(q, d, eps):
        low = lower_bound(q, d, eps)
        assert base <= low <= up


def test_lower_rejects_out_of_range():
    with pytest.raises(ValueError):
        lower_bound(2, 2, Fraction(1, 2))
    with pytest.raises(ValueError):
        upper_bound(2, 2, 0)


@pytest.mark.parametrize("q,d", [(2, 2), (3, 2), (2, 3)])
@mpmath.workdps(60)
def test_convergence_rates(q, d):
    base = mpmath.mpf(base_dim(d).numerator) / base_dim(d).denominator
    C_up = mpmath.mpf(d) / (d + 1) * mpmath.sqrt((q - 1) ** 2 * (q + 1) ** d * q ** (2 * d)) / mpmath.log(q)
    for j in range(4, 30, 3):
        eps = Fraction(1, q**j)
        e = mpmath.mpf(eps.numerator) / eps.denominator
        assert upper_bound(q, d, eps) - base <= C_up * e ** (mpmath.mpf(d) / 2)
        assert lower_bound(q, d, eps) - base <= e**d


def test_lower_limit_at_2_pow_20():
    assert abs(lower_bound(2, 2, Fraction(1, 2**20)) - mpmath.mpf(4) / 3) < 1e-6


@pytest.mark.xfail(strict=True, reason="upper_bound(2, 2, 2^-20) - 4/3 is about 1.1e-5 by the closed form itself")
def test_upper_limit_at_2_pow_20():
    assert abs(upper_bound(2, 2, Fraction(1, 2**20)) - mpmath.mpf(4) / 3) < 1e-6


def test_upper_gap_at_2_pow_20_matches_decimal():
    gap = upper_decimal(2, 2, Fraction(1, 2**20)) - dec(Fraction(4, 3))
    assert Decimal("1.0e-5") < gap < Decimal("1.2e-5")


def test_table():
    grid = [Fraction(1, 2**j) for j in range(1, 11)]
    reps = bounds_table(2, 2, grid)
    assert len(reps) == 10
    text = table_csv(reps)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["q", "d", "eps", "base", "lower", "upper", "lower_monotone", "upper_nontrivial"]
    assert len(rows) == 11
    assert rows[1][4] == ""  # eps = 1/2 lies outside the lower bound's range
    flags = grid_monotone(reps)
    assert flags["upper_nondecreasing"] and flags["lower_increasing_in_region"]
    assert bounds_table(2, 2, []) == [] and table_csv([]).strip() == ",".join(rows[0])


def test_report_fields():
    r = bound_report(2, 2, Fraction(1, 16))
    assert r.upper_nontrivial and r.lower_monotone and r.base == Fraction(4, 3)
    assert r.lower <= r.upper
