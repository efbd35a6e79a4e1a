"""Finite fields F_q and the polynomial ring F_q[x].

Field elements are plain ints in ``range(q)``.  For a prime field the int is
the residue; for an extension F_p[y]/(modulus) the int packs the coordinates
base p, lowest power of y first, so the natural order on ints is the
coordinate-lexicographic order used for enumeration.

Polynomials are immutable :class:`Poly` objects holding a coefficient tuple
ordered low-to-high.  Absolute values live in the exponent domain: ``f.deg``
is ``log_q |f|`` and the zero polynomial has degree :data:`NEG_INF`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

NEG_INF = -math.inf


class FieldError(ValueError):
    """Invalid field description."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for d in range(2, math.isqrt(n) + 1):
        if n % d == 0:
            return False
    return True


class FieldSpec:
    """The finite field F_q, q = p^k.

    ``modulus`` is the monic irreducible defining polynomial over F_p as a
    low-to-high coefficient list; it is required exactly when k > 1.
    """

    __slots__ = ("p", "k", "q", "modulus", "_add", "_mul", "_neg", "_inv", "_frob")

    def __init__(self, p: int, k: int = 1, modulus: Sequence[int] | None = None):
        if not _is_prime(p):
            raise FieldError(f"characteristic {p} is not prime")
        if k < 1:
            raise FieldError("extension degree must be >= 1")
        self.p = p
        self.k = k
        self.q = p**k
        if k == 1:
            if modulus is not None and len(modulus) not in (0, 2):
                raise FieldError("a prime field takes no modulus")
            self.modulus = None
            self._add = self._mul = self._neg = self._inv = None
        else:
            if modulus is None:
                raise FieldError("an extension field needs an explicit modulus")
            mod = tuple(int(c) % p for c in modulus)
            if len(mod) != k + 1 or mod[-1] != 1:
                raise FieldError(f"modulus must be monic of degree {k}")
            base = FieldSpec(p)
            if not is_irreducible_trial(Poly(base, mod)):
                raise FieldError(f"modulus {list(mod)} is reducible over F_{p}")
            self.modulus = mod
            self._build_tables()
        self._frob = None

    @classmethod
    def of_order(cls, q: int) -> "FieldSpec":
        """F_q with the first monic irreducible modulus in enumeration order."""
        p = next((r for r in range(2, q + 1) if q % r == 0), None)
        k, rest = 0, q
        while p is not None and rest % p == 0:
            rest //= p
            k += 1
        if p is None or rest != 1:
            raise FieldError(f"q = {q} is not a prime power")
        if k == 1:
            return cls(p)
        base = cls(p)
        mod = next(f for f in enumerate_polys(base, k, monic_only=True) if is_irreducible_trial(f))
        return cls(p, k, mod.coeffs)

    def _build_tables(self) -> None:
        p, k, q, mod = self.p, self.k, self.q, self.modulus

        def digits(a: int) -> list[int]:
            out = []
            for _ in range(k):
                a, r = divmod(a, p)
                out.append(r)
            return out

        def pack(ds: Sequence[int]) -> int:
            v = 0
            for c in reversed(ds):
                v = v * p + c
            return v

        def mulv(a: list[int], b: list[int]) -> list[int]:
            prod = [0] * (2 * k - 1)
            for i, ai in enumerate(a):
                if ai:
                    for j, bj in enumerate(b):
                        prod[i + j] = (prod[i + j] + ai * bj) % p
            for i in range(2 * k - 2, k - 1, -1):
                c = prod[i]
                if c:
                    for j in range(k + 1):
                        prod[i - k + j] = (prod[i - k + j] - c * mod[j]) % p
            return prod[:k]

        ds = [digits(a) for a in range(q)]
        self._add = [[pack([(x + y) % p for x, y in zip(ds[a], ds[b])]) for b in range(q)] for a in range(q)]
        self._neg = [pack([(-x) % p for x in ds[a]]) for a in range(q)]
        self._mul = [[pack(mulv(ds[a], ds[b])) for b in range(q)] for a in range(q)]
        self._inv = [0] * q
        for a in range(1, q):
            for b in range(1, q):
                if self._mul[a][b] == 1:
                    self._inv[a] = b
                    break

    # element arithmetic -------------------------------------------------
    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p if self.k == 1 else self._add[a][b]

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p if self.k == 1 else self._add[a][self._neg[b]]

    def neg(self, a: int) -> int:
        return (-a) % self.p if self.k == 1 else self._neg[a]

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p if self.k == 1 else self._mul[a][b]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of 0 in F_q")
        return pow(a, self.p - 2, self.p) if self.k == 1 else self._inv[a]

    def pow(self, a: int, e: int) -> int:
        if self.k == 1:
            return pow(a, e, self.p)
        r, b = 1, a
        while e:
            if e & 1:
                r = self._mul[r][b]
            b = self._mul[b][b]
            e >>= 1
        return r

    def pth_root(self, a: int) -> int:
        """Inverse Frobenius, a^(q/p)."""
        return self.pow(a, self.q // self.p)

    def elements(self) -> range:
        return range(self.q)

    def units(self) -> range:
        return range(1, self.q)

    # constructors ---------------------------------------------------------
    def poly(self, coeffs: Sequence[int]) -> "Poly":
        for c in coeffs:
            if not 0 <= c < self.q:
                raise FieldError(f"coefficient {c} is not an element of F_{self.q}")
        return Poly(self, coeffs)

    def const(self, c: int) -> "Poly":
        return Poly(self, (c,))

    @property
    def zero(self) -> "Poly":
        return Poly(self, ())

    @property
    def one(self) -> "Poly":
        return Poly(self, (1,))

    @property
    def x(self) -> "Poly":
        return Poly(self, (0, 1))

    def monomial(self, n: int, c: int = 1) -> "Poly":
        return Poly(self, (0,) * n + (c,))

    def to_json(self) -> dict:
        out = {"p": self.p, "k": self.k}
        if self.modulus is not None:
            out["modulus"] = list(self.modulus)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "FieldSpec":
        return cls(int(obj["p"]), int(obj.get("k", 1)), obj.get("modulus"))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FieldSpec) and (self.p, self.k, self.modulus) == (other.p, other.k, other.modulus)

    def __hash__(self) -> int:
        return hash((self.p, self.k, self.modulus))

    def __repr__(self) -> str:
        if self.k == 1:
            return f"FieldSpec(p={self.p})"
        return f"FieldSpec(p={self.p}, k={self.k}, modulus={list(self.modulus)})"


class Poly:
    """Immutable polynomial over a :class:`FieldSpec`, coefficients low-to-high."""

    __slots__ = ("field", "coeffs", "_hash")

    def __init__(self, F: FieldSpec, coeffs: Sequence[int]):
        c = list(coeffs)
        while c and c[-1] == 0:
            c.pop()
        self.field = F
        self.coeffs = tuple(c)
        self._hash = None

    # basic properties ---------------------------------------------------
    @property
    def deg(self) -> int | float:
        """Degree, with NEG_INF for the zero polynomial."""
        return len(self.coeffs) - 1 if self.coeffs else NEG_INF

    @property
    def lc(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == 1

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)

    def coeff(self, i: int) -> int:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else 0

    def key(self) -> tuple:
        """Total order: degree first, then coefficients from the top down."""
        return (len(self.coeffs), tuple(reversed(self.coeffs)))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Poly):
            return self.coeffs == other.coeffs and self.field == other.field
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.coeffs)
        return self._hash

    def __lt__(self, other: "Poly") -> bool:
        return self.key() < other.key()

    # ring operations ------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            return other
        if isinstance(other, int):
            return Poly(self.field, (other,))
        raise TypeError(f"cannot combine Poly with {type(other).__name__}")

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        F = self.field
        if F.k == 1:
            p = F.p
            out = [(x + y) % p for x, y in zip(a, b)]
        else:
            t = F._add
            out = [t[x][y] for x, y in zip(a, b)]
        out.extend(a[len(b):])
        return Poly(F, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        F = self.field
        if F.k == 1:
            return Poly(F, [(-c) % F.p for c in self.coeffs])
        return Poly(F, [F._neg[c] for c in self.coeffs])

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) + (-self)

    def scale(self, c: int) -> "Poly":
        F = self.field
        if c == 0:
            return Poly(F, ())
        if F.k == 1:
            return Poly(F, [(c * a) % F.p for a in self.coeffs])
        row = F._mul[c]
        return Poly(F, [row[a] for a in self.coeffs])

    def shift(self, n: int) -> "Poly":
        """Multiply by x^n (n >= 0)."""
        if not self.coeffs or n == 0:
            return self
        return Poly(self.field, (0,) * n + self.coeffs)

    def __mul__(self, other) -> "Poly":
        if isinstance(other, int):
            return self.scale(other % self.field.q if self.field.k == 1 else other)
        a, b = self.coeffs, other.coeffs
        F = self.field
        if not a or not b:
            return Poly(F, ())
        if len(a) == 1:
            return other.scale(a[0])
        if len(b) == 1:
            return self.scale(b[0])
        out = [0] * (len(a) + len(b) - 1)
        if F.k == 1:
            for i, ai in enumerate(a):
                if ai:
                    for j, bj in enumerate(b):
                        out[i + j] += ai * bj
            p = F.p
            return Poly(F, [c % p for c in out])
        add, mul = F._add, F._mul
        for i, ai in enumerate(a):
            if ai:
                row = mul[ai]
                for j, bj in enumerate(b):
                    out[i + j] = add[out[i + j]][row[bj]]
        return Poly(F, out)

    __rmul__ = __mul__

    def __divmod__(self, other: "Poly") -> tuple["Poly", "Poly"]:
        other = self._coerce(other)
        if not other.coeffs:
            raise ZeroDivisionError("division by the zero polynomial")
        F = self.field
        n, m = len(self.coeffs), len(other.coeffs)
        if n < m:
            return Poly(F, ()), self
        r = list(self.coeffs)
        g = other.coeffs
        inv = F.inv(g[-1])
        qt = [0] * (n - m + 1)
        if F.k == 1:
            p = F.p
            for i in range(n - m, -1, -1):
                c = (r[i + m - 1] * inv) % p
                qt[i] = c
                if c:
                    for j in range(m):
                        r[i + j] = (r[i + j] - c * g[j]) % p
        else:
            add, mul, neg = F._add, F._mul, F._neg
            for i in range(n - m, -1, -1):
                c = mul[r[i + m - 1]][inv]
                qt[i] = c
                if c:
                    nc = mul[neg[c]]
                    for j in range(m):
                        r[i + j] = add[r[i + j]][nc[g[j]]]
        return Poly(F, qt), Poly(F, r[: m - 1])

    def __floordiv__(self, other) -> "Poly":
        return divmod(self, other)[0]

    def __mod__(self, other) -> "Poly":
        return divmod(self, other)[1]

    def exact_div(self, other: "Poly") -> "Poly":
        qt, r = divmod(self, other)
        if r:
            raise ArithmeticError(f"{other} does not divide {self}")
        return qt

    def divides(self, other: "Poly") -> bool:
        """True when self | other."""
        if not self.coeffs:
            return not other.coeffs
        return not (other % self).coeffs

    def monic(self) -> "Poly":
        if not self.coeffs or self.coeffs[-1] == 1:
            return self
        return self.scale(self.field.inv(self.coeffs[-1]))

    def __pow__(self, e: int) -> "Poly":
        r, b = self.field.one, self
        while e:
            if e & 1:
                r = r * b
            b = b * b
            e >>= 1
        return r

    def powmod(self, e: int, m: "Poly") -> "Poly":
        r, b = self.field.one % m, self % m
        while e:
            if e & 1:
                r = (r * b) % m
            b = (b * b) % m
            e >>= 1
        return r

    def derivative(self) -> "Poly":
        F = self.field
        return Poly(F, [F.mul(c, i % F.p) for i, c in enumerate(self.coeffs)][1:])

    def abs_exp(self) -> int | float:
        """log_q |f|; NEG_INF for zero."""
        return self.deg

    # presentation -----------------------------------------------------------
    def to_json(self) -> list[int]:
        return list(self.coeffs)

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if not c:
                continue
            if i == 0:
                terms.append(str(c))
            else:
                mono = "x" if i == 1 else f"x^{i}"
                terms.append(mono if c == 1 else f"{c}*{mono}")
        return " + ".join(terms)


# ---------------------------------------------------------------------------
# gcd and friends


def poly_gcd(f: Poly, g: Poly) -> Poly:
    """Monic gcd; gcd(0, 0) is undefined and raises."""
    if not f and not g:
        raise ZeroDivisionError("gcd(0, 0) is undefined")
    while g:
        f, g = g, f % g
    return f.monic()


def poly_xgcd(f: Poly, g: Poly) -> tuple[Poly, Poly, Poly]:
    """Return (h, s, t) with s*f + t*g = h = gcd(f, g) monic."""
    if not f and not g:
        raise ZeroDivisionError("gcd(0, 0) is undefined")
    F = f.field
    r0, r1 = f, g
    s0, s1 = F.one, F.zero
    t0, t1 = F.zero, F.one
    while r1:
        qt, r = divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - qt * s1
        t0, t1 = t1, t0 - qt * t1
    c = F.inv(r0.lc)
    return r0.scale(c), s0.scale(c), t0.scale(c)


def gcd_many(polys: Sequence[Poly]) -> Poly:
    """Monic gcd of a family, zero if every member is zero."""
    acc = None
    for f in polys:
        if not f:
            continue
        acc = f.monic() if acc is None else poly_gcd(acc, f)
        if acc.deg == 0:
            return acc
    if acc is None:
        return polys[0].field.zero
    return acc


def poly_lcm(f: Poly, g: Poly) -> Poly:
    return (f * g // poly_gcd(f, g)).monic()


def poly_arith(op: str, f: Poly, g: Poly):
    """Dispatch for the four exact operations by name."""
    if op == "add":
        return f + g
    if op == "mul":
        return f * g
    if op == "divmod":
        return divmod(f, g)
    if op == "gcd":
        return poly_gcd(f, g)
    raise ValueError(f"unknown operation {op!r}")


def abs_poly(f: Poly) -> Fraction:
    """|f| = q^deg f, and |0| = 0."""
    if not f:
        return Fraction(0)
    return Fraction(f.field.q) ** f.deg


# ---------------------------------------------------------------------------
# enumeration


def enumerate_polys(F: FieldSpec, degree: int, monic_only: bool = False) -> Iterator[Poly]:
    """All polynomials of exactly the given degree in deterministic order.

    Leading coefficient varies slowest, then the remaining coefficients from
    the top down, each running through 0 < 1 < ... < q-1.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    leads = (1,) if monic_only else F.units()
    for lead in leads:
        for rest in itertools.product(F.elements(), repeat=degree):
            yield Poly(F, tuple(reversed(rest)) + (lead,))


def enumerate_polys_below(F: FieldSpec, degree_bound: int, include_zero: bool = True) -> Iterator[Poly]:
    """Every polynomial of degree < degree_bound (zero first when included)."""
    if include_zero:
        yield F.zero
    for n in range(max(degree_bound, 0)):
        yield from enumerate_polys(F, n)


def enumerate_polys_upto(F: FieldSpec, max_degree: int, include_zero: bool = True) -> Iterator[Poly]:
    return enumerate_polys_below(F, max_degree + 1, include_zero)


# ---------------------------------------------------------------------------
# factorization


@dataclass(frozen=True)
class Factorization:
    unit: int
    factors: tuple[tuple[Poly, int], ...] = field(default_factory=tuple)

    def reconstruct(self, F: FieldSpec) -> Poly:
        out = F.const(self.unit)
        for P, e in self.factors:
            out = out * P**e
        return out


def is_irreducible_trial(f: Poly) -> bool:
    """Irreducibility by trial division with monic polynomials of degree <= deg/2."""
    if f.deg < 1:
        return False
    F = f.field
    for n in range(1, f.deg // 2 + 1):
        for g in enumerate_polys(F, n, monic_only=True):
            if g.divides(f):
                return False
    return True


def factorize_trial(f: Poly) -> Factorization:
    """Factorization by trial division; the independent oracle for small degree."""
    if not f:
        raise ZeroDivisionError("cannot factor the zero polynomial")
    F = f.field
    unit = f.lc
    rest = f.monic()
    found: list[tuple[Poly, int]] = []
    n = 1
    while rest.deg >= 2 * n:
        for g in enumerate_polys(F, n, monic_only=True):
            e = 0
            while True:
                qt, r = divmod(rest, g)
                if r:
                    break
                rest, e = qt, e + 1
            if e:
                found.append((g, e))
        n += 1
    if rest.deg >= 1:
        found.append((rest, 1))
    found.sort(key=lambda pe: pe[0].key())
    return Factorization(unit, tuple(found))


def _pth_root_poly(f: Poly) -> Poly:
    F = f.field
    p = F.p
    return Poly(F, [F.pth_root(f.coeffs[i]) for i in range(0, len(f.coeffs), p)])


def _squarefree(f: Poly) -> list[tuple[Poly, int]]:
    """Squarefree decomposition of a monic polynomial: [(g_i, i)], g_i squarefree."""
    F = f.field
    if f.deg < 1:
        return []
    out: list[tuple[Poly, int]] = []
    df = f.derivative()
    if not df:
        return [(g, e * F.p) for g, e in _squarefree(_pth_root_poly(f))]
    c = poly_gcd(f, df)
    w = f // c
    i = 1
    while w.deg >= 1:
        y = poly_gcd(w, c)
        z = w // y
        if z.deg >= 1:
            out.append((z.monic(), i))
        i += 1
        w, c = y, c // y
    if c.deg >= 1:
        out.extend((g, e * F.p) for g, e in _squarefree(_pth_root_poly(c).monic()))
    return out


def _distinct_degree(f: Poly) -> list[tuple[Poly, int]]:
    F = f.field
    out = []
    h = F.x % f
    x = F.x
    i = 0
    while f.deg >= 2 * (i + 1):
        i += 1
        h = h.powmod(F.q, f)
        g = poly_gcd(f, h - x)
        if g.deg >= 1:
            out.append((g, i))
            f = f // g
            h = h % f
    if f.deg >= 1:
        out.append((f.monic(), f.deg))
    return out


_EDF_TRIAL_CAP = 256


def _equal_degree(f: Poly, n: int) -> list[Poly]:
    """Split a squarefree product of degree-n irreducibles (Cantor-Zassenhaus).

    Candidates are enumerated deterministically; the enumeration over all
    residues is complete, so splitting always succeeds.  For small inputs a
    capped search falls back to trial division.
    """
    F = f.field
    if f.deg == n:
        return [f]
    if F.p == 2:
        def splitter(a: Poly) -> Poly:
            t, acc = a, a
            for _ in range(F.k * n - 1):
                t = (t * t) % f
                acc = acc + t
            return acc
    else:
        e = (F.q**n - 1) // 2

        def splitter(a: Poly) -> Poly:
            return a.powmod(e, f) - F.one

    tries = 0
    for deg_a in range(1, f.deg):
        for a in enumerate_polys(F, deg_a):
            tries += 1
            g = poly_gcd(f, splitter(a))
            if 1 <= g.deg < f.deg:
                return _equal_degree(g, n) + _equal_degree(f // g, n)
            if tries >= _EDF_TRIAL_CAP and f.deg <= 12:
                return [P for P, _ in factorize_trial(f).factors]
    raise ArithmeticError("equal-degree splitting failed")  # unreachable for squarefree input


def factorize(f: Poly) -> Factorization:
    """Factor f into a unit times monic irreducibles with multiplicities."""
    if not f:
        raise ZeroDivisionError("cannot factor the zero polynomial")
    unit = f.lc
    mf = f.monic()
    acc: dict[Poly, int] = {}
    for g, e in _squarefree(mf):
        for h, n in _distinct_degree(g):
            for P in _equal_degree(h, n):
                P = P.monic()
                acc[P] = acc.get(P, 0) + e
    factors = tuple(sorted(acc.items(), key=lambda pe: pe[0].key()))
    return Factorization(unit, factors)


# ---------------------------------------------------------------------------
# arithmetic functions


def euler_phi(f: Poly) -> int:
    """#{g != 0 : deg g < deg f, gcd(f, g) = 1}, via the factorization."""
    if not f or f.deg < 1:
        raise ValueError("euler_phi needs a polynomial of degree >= 1")
    q = f.field.q
    out = 1
    for P, e in factorize(f).factors:
        Q = q**P.deg
        out *= Q**e - Q ** (e - 1)
    return out


def euler_phi_bruteforce(f: Poly) -> int:
    """Enumeration oracle for euler_phi."""
    if not f or f.deg < 1:
        raise ValueError("euler_phi needs a polynomial of degree >= 1")
    return sum(1 for g in enumerate_polys_below(f.field, f.deg, include_zero=False) if poly_gcd(f, g).deg == 0)


def units_mod(f: Poly) -> int:
    """#(R/fR)^*: euler_phi for deg f >= 1 and 1 for a nonzero constant."""
    if not f:
        raise ValueError("units_mod needs a nonzero polynomial")
    return 1 if f.deg == 0 else euler_phi(f)


def divisor_sum_D1(f: Poly) -> int:
    """Sum of |g| over the monic divisors g of f."""
    if not f:
        raise ValueError("D1 of the zero polynomial is undefined")
    q = f.field.q
    out = 1
    for P, e in factorize(f).factors:
        Q = q**P.deg
        out *= (Q ** (e + 1) - 1) // (Q - 1)
    return out


def divisor_sum_D1_bruteforce(f: Poly) -> int:
    """Enumeration oracle for D1: scan every monic candidate of degree <= deg f."""
    if not f:
        raise ValueError("D1 of the zero polynomial is undefined")
    F = f.field
    return sum(
        F.q**n
        for n in range(f.deg + 1)
        for g in enumerate_polys(F, n, monic_only=True)
        if g.divides(f)
    )


def sum_phi_over_degree(F: FieldSpec, ell: int) -> tuple[int, Fraction]:
    """Enumerated sum of phi over all degree-ell polynomials and the closed form."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    total = sum(euler_phi(f) for f in enumerate_polys(F, ell))
    q = F.q
    closed = Fraction((q - 1) ** 2, q) * q ** (2 * ell)
    return total, closed


def sum_phiD1_over_degree(F: FieldSpec, ell: int) -> tuple[int, int]:
    """Enumerated sum of phi*D1 over degree-ell polynomials and the bound (q-1) q^(3 ell)."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    total = sum(euler_phi(f) * divisor_sum_D1(f) for f in enumerate_polys(F, ell))
    return total, (F.q - 1) * F.q ** (3 * ell)
