"""Closed-form dimension bounds for DI_d(eps) and Sing_d, their nontrivial
eps-regions, and the interval helpers used wherever a q-power has a
non-integral exponent.

Formula values are returned as mpmath numbers at 50 significant digits.
Region predicates never touch a logarithm: they compare exact rationals.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import mpmath
from mpmath.ctx_iv import MPIntervalContext

DPS = 50
TOLERANCE = 1e-12

_IV = MPIntervalContext()
_IV.prec = 256

Number = Union[Fraction, "mpmath.ctx_iv.ivmpf"]


# ---------------------------------------------------------------------------
# certified arithmetic on q-powers


def iv(x) -> "mpmath.ctx_iv.ivmpf":
    """Enclose an int, Fraction or interval in a 256-bit interval."""
    if isinstance(x, Fraction):
        return _IV.mpf(x.numerator) / _IV.mpf(x.denominator)
    if isinstance(x, int):
        return _IV.mpf(x)
    return x


def qpow_value(q: int, e) -> Number:
    """q^e: an exact Fraction for integral e, otherwise an enclosing interval."""
    e = Fraction(e)
    if e.denominator == 1:
        return Fraction(q) ** int(e)
    return _IV.mpf(q) ** iv(e)


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def add(x: Number, y: Number) -> Number:
    if is_exact(x) and is_exact(y):
        return Fraction(x) + Fraction(y)
    return iv(x) + iv(y)


def mul(x: Number, y: Number) -> Number:
    if is_exact(x) and is_exact(y):
        return Fraction(x) * Fraction(y)
    return iv(x) * iv(y)


def div(x: Number, y: Number) -> Number:
    if is_exact(x) and is_exact(y):
        return Fraction(x) / Fraction(y)
    return iv(x) / iv(y)


def certified_leq(x: Number, y: Number) -> bool:
    """True only when x <= y is certain (exactly, or by disjoint enclosures)."""
    if is_exact(x) and is_exact(y):
        return Fraction(x) <= Fraction(y)
    return bool(iv(x).b <= iv(y).a)


def certified_lt(x: Number, y: Number) -> bool:
    if is_exact(x) and is_exact(y):
        return Fraction(x) < Fraction(y)
    return bool(iv(x).b < iv(y).a)


def to_float(x: Number) -> float:
    if is_exact(x):
        return float(x)
    return float(mpmath.mpf(iv(x).mid))


def to_json_number(x: Number) -> dict:
    """Exact values as p/q strings, intervals as [lo, hi] decimal strings."""
    if is_exact(x):
        return {"exact": str(Fraction(x))}
    v = iv(x)
    return {"interval": [mpmath.nstr(mpmath.mpf(v.a), 30), mpmath.nstr(mpmath.mpf(v.b), 30)]}


# ---------------------------------------------------------------------------
# formulas


def base_dim(d: int) -> Fraction:
    """d^2 / (d + 1)."""
    if d < 2:
        raise ValueError("d must be at least 2")
    return Fraction(d * d, d + 1)


def _check_eps(eps) -> Fraction:
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    return eps


def upper_bound(q: int, d: int, eps) -> mpmath.mpf:
    """d^2/(d+1) + d/(d+1) log_q(1 + sqrt((q-1)^2 (q+1)^d q^{2d} eps^d))."""
    base = base_dim(d)
    eps = _check_eps(eps)
    with mpmath.workdps(DPS + 10):
        inner = Fraction((q - 1) ** 2 * (q + 1) ** d * q ** (2 * d)) * eps**d
        X = mpmath.mpf(inner.numerator) / inner.denominator
        val = mpmath.mpf(base.numerator) / base.denominator + mpmath.mpf(d) / (d + 1) * mpmath.log(1 + mpmath.sqrt(X), q)
    with mpmath.workdps(DPS):
        return +val


def lower_valid(q: int, d: int, eps) -> bool:
    """0 < eps < ((q-1)/q)^{1/(d-1)}, decided as eps^{d-1} < (q-1)/q."""
    eps = Fraction(eps)
    return eps > 0 and eps ** (d - 1) < Fraction(q - 1, q)


def lower_bound(q: int, d: int, eps) -> mpmath.mpf:
    """d^2/(d+1) + d/(d+1) log_q(1 + (q-1)^2 / q^{2d + d^2/(d-1)} ((q-1)/q - eps^{d-1}) eps^d)."""
    base = base_dim(d)
    eps = _check_eps(eps)
    if not lower_valid(q, d, eps):
        raise ValueError(f"eps = {eps} is outside (0, ((q-1)/q)^(1/(d-1))) for q={q}, d={d}")
    with mpmath.workdps(DPS + 10):
        rational_part = Fraction((q - 1) ** 2, q ** (2 * d)) * (Fraction(q - 1, q) - eps ** (d - 1)) * eps**d
        y = mpmath.mpf(rational_part.numerator) / rational_part.denominator
        y = y / mpmath.power(q, mpmath.mpf(d * d) / (d - 1))
        val = mpmath.mpf(base.numerator) / base.denominator + mpmath.mpf(d) / (d + 1) * mpmath.log(1 + y, q)
    with mpmath.workdps(DPS):
        return +val


@dataclass(frozen=True)
class Regions:
    """lower edge = lower_base^(lower_exp); upper edge exact."""

    lower_base: Fraction
    lower_exp: Fraction
    upper: Fraction

    @property
    def lower_edge(self) -> Fraction | mpmath.mpf:
        if self.lower_exp == 1:
            return self.lower_base
        with mpmath.workdps(DPS):
            return mpmath.power(mpmath.mpf(self.lower_base.numerator) / self.lower_base.denominator,
                                mpmath.mpf(self.lower_exp.numerator) / self.lower_exp.denominator)


def regions(q: int, d: int) -> Regions:
    """Edges (d(q-1)/((2d-1)q))^{1/(d-1)} and 1/((q+1) q^2)."""
    if d < 2:
        raise ValueError("d must be at least 2")
    return Regions(Fraction(d * (q - 1), (2 * d - 1) * q), Fraction(1, d - 1), Fraction(1, (q + 1) * q * q))


def lower_monotone(q: int, d: int, eps) -> bool:
    """eps <= lower edge, decided as eps^{d-1} <= d(q-1)/((2d-1)q)."""
    eps = Fraction(eps)
    return eps > 0 and eps ** (d - 1) <= regions(q, d).lower_base


def upper_nontrivial(q: int, d: int, eps) -> bool:
    """eps <= 1/((q+1) q^2), which is exactly upper_bound <= d."""
    eps = Fraction(eps)
    return 0 < eps <= regions(q, d).upper


@dataclass
class BoundReport:
    q: int
    d: int
    eps: Fraction
    base: Fraction
    lower: mpmath.mpf | None
    upper: mpmath.mpf
    lower_monotone: bool
    upper_nontrivial: bool

    def row(self) -> list[str]:
        fmt = lambda x: "" if x is None else mpmath.nstr(x, 15, min_fixed=-1, max_fixed=2)
        return [str(self.q), str(self.d), str(self.eps), str(self.base), fmt(self.lower), fmt(self.upper),
                str(self.lower_monotone).lower(), str(self.upper_nontrivial).lower()]


CSV_HEADER = ["q", "d", "eps", "base", "lower", "upper", "lower_monotone", "upper_nontrivial"]


def bound_report(q: int, d: int, eps) -> BoundReport:
    eps = _check_eps(eps)
    return BoundReport(
        q, d, eps, base_dim(d),
        lower_bound(q, d, eps) if lower_valid(q, d, eps) else None,
        upper_bound(q, d, eps),
        lower_monotone(q, d, eps),
        upper_nontrivial(q, d, eps),
    )


def bounds_table(q: int, d: int, eps_grid: Iterable) -> list[BoundReport]:
    return [bound_report(q, d, e) for e in eps_grid]


def grid_monotone(reports: Sequence[BoundReport]) -> dict[str, bool]:
    """Pairwise checks over the grid sorted by eps: upper nondecreasing, and
    lower nondecreasing across the part of the grid inside the monotone region."""
    rs = sorted(reports, key=lambda r: r.eps)
    up = all(a.upper <= b.upper for a, b in zip(rs, rs[1:]))
    mono = [r for r in rs if r.lower_monotone and r.lower is not None]
    low = all(a.lower < b.lower for a, b in zip(mono, mono[1:]))
    return {"upper_nondecreasing": up, "lower_increasing_in_region": low}


def table_csv(reports: Sequence[BoundReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()
