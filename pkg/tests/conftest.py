from __future__ import annotations

import itertools

import pytest
from hypothesis import settings, strategies as st

from ffdioph.ffpoly import FieldSpec, Poly

settings.register_profile("default", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("default")

FIELDS = {2: FieldSpec(2), 3: FieldSpec(3), 4: FieldSpec.of_order(4)}


@pytest.fixture
def F2() -> FieldSpec:
    return FIELDS[2]


@pytest.fixture
def F3() -> FieldSpec:
    return FIELDS[3]


def P(F: FieldSpec, *coeffs: int) -> Poly:
    """Polynomial from coefficients low to high."""
    return F.poly(coeffs)


def polys(F: FieldSpec, max_deg: int = 4, nonzero: bool = False):
    coeffs = st.lists(st.integers(0, F.q - 1), min_size=0, max_size=max_deg + 1).map(F.poly)
    return coeffs.filter(bool) if nonzero else coeffs


def fields():
    return st.sampled_from([FIELDS[2], FIELDS[3]])


def all_vectors(F: FieldSpec, d: int, max_deg: int):
    """Every d-tuple of polynomials of degree <= max_deg, zero included."""
    pool = [F.poly(c) for c in itertools.product(F.elements(), repeat=max_deg + 1)]
    return itertools.product(pool, repeat=d)


# (criterion number, summary line), filled by test_acceptance.py
ACCEPTANCE_LINES: list[tuple[int, str]] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
