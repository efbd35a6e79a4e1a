"""Laurent series in 1/x over F_q with certified precision.

A :class:`Laurent` value is either *rational* (an exact quotient f/g of
polynomials, expanded on demand) or *truncated*.  A truncated value stores a
polynomial ``body`` and an integer ``prec`` meaning

    value = body * x^(-prec) + (terms of exponent < -prec),

so every coefficient of exponent >= -prec is certified.  Norms are reported
as exponents of q.  Asking for the norm of a truncated value whose certified
window is all zero raises :class:`IndeterminateNormError`, because "zero"
and "smaller than the window" cannot be told apart.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .ffpoly import NEG_INF, FieldSpec, Poly, poly_gcd

DEFAULT_PREC = 32


class PrecisionError(ArithmeticError):
    """Available precision is insufficient for the requested exact answer."""


class IndeterminateNormError(PrecisionError):
    """The value is zero to certified precision, so its norm is unknown."""


def qpow(q: int, e) -> Fraction:
    """q^e as an exact Fraction for integer e, 0 for NEG_INF."""
    if e == NEG_INF:
        return Fraction(0)
    return Fraction(q) ** e


class Laurent:
    __slots__ = ("field", "num", "den", "body", "prec")

    def __init__(self, F: FieldSpec, *, num: Poly | None = None, den: Poly | None = None,
                 body: Poly | None = None, prec: int = DEFAULT_PREC):
        self.field = F
        self.num = num
        self.den = den
        self.body = body
        self.prec = prec

    # constructors ------------------------------------------------------------
    @classmethod
    def rational(cls, f: Poly, g: Poly, prec: int = DEFAULT_PREC) -> "Laurent":
        if not g:
            raise ZeroDivisionError("rational Laurent with zero denominator")
        F = f.field
        if not f:
            return cls(F, num=F.zero, den=F.one, prec=prec)
        h = poly_gcd(f, g)
        if h.deg > 0:
            f, g = f // h, g // h
        c = g.lc
        if c != 1:
            ic = F.inv(c)
            f, g = f.scale(ic), g.scale(ic)
        return cls(F, num=f, den=g, prec=prec)

    @classmethod
    def from_poly(cls, f: Poly, prec: int = DEFAULT_PREC) -> "Laurent":
        return cls(f.field, num=f, den=f.field.one, prec=prec)

    @classmethod
    def zero(cls, F: FieldSpec) -> "Laurent":
        return cls(F, num=F.zero, den=F.one)

    @classmethod
    def truncated(cls, body: Poly, prec: int) -> "Laurent":
        return cls(body.field, body=body, prec=prec)

    @classmethod
    def from_digits(cls, F: FieldSpec, lead_exp: int, coeffs: Sequence[int], prec: int) -> "Laurent":
        """Build from coefficients of x^lead_exp, x^(lead_exp-1), ... down to x^(-prec)."""
        n = lead_exp + prec + 1
        digits = list(coeffs)[: max(n, 0)]
        digits += [0] * (max(n, 0) - len(digits))
        return cls(F, body=Poly(F, list(reversed(digits))), prec=prec)

    # tiers -------------------------------------------------------------------
    @property
    def is_rational(self) -> bool:
        return self.num is not None

    def expand(self, prec: int | None = None) -> Poly:
        """Body polynomial at the given precision (value ~ body * x^-prec)."""
        if prec is None:
            prec = self.prec
        if self.num is not None:
            if prec >= 0:
                return self.num.shift(prec) // self.den
            return Poly(self.field, (self.num // self.den).coeffs[-prec:])
        if prec > self.prec:
            raise PrecisionError(f"requested precision {prec} exceeds certified {self.prec}")
        drop = self.prec - prec
        return Poly(self.field, self.body.coeffs[drop:])

    def truncate(self, prec: int) -> "Laurent":
        return Laurent.truncated(self.expand(prec), prec)

    def with_prec(self, prec: int) -> "Laurent":
        """Same exact value with a different display precision (rational tier only)."""
        if self.num is None:
            return self.truncate(prec)
        return Laurent(self.field, num=self.num, den=self.den, prec=prec)

    # norm ----------------------------------------------------------------------
    def norm_exp(self) -> int | float:
        """log_q of the absolute value (NEG_INF for an exact zero)."""
        if self.num is not None:
            if not self.num:
                return NEG_INF
            return self.num.deg - self.den.deg
        if not self.body:
            raise IndeterminateNormError(f"value is zero to certified precision x^-{self.prec}")
        return self.body.deg - self.prec

    def norm(self) -> Fraction:
        return qpow(self.field.q, self.norm_exp())

    def upper_exp(self) -> int | float:
        """An exponent e with |value| <= q^e that never raises."""
        if self.num is not None or self.body:
            return self.norm_exp()
        return -self.prec - 1

    def is_exact_zero(self) -> bool:
        return self.num is not None and not self.num

    @property
    def lead_exp(self) -> int:
        e = self.upper_exp()
        return -self.prec - 1 if e == NEG_INF else e

    @property
    def coeffs(self) -> tuple[int, ...]:
        """Coefficients from x^lead_exp down to x^-prec."""
        body = self.expand(self.prec)
        n = self.lead_exp + self.prec + 1
        digits = tuple(reversed(body.coeffs))
        return (0,) * (n - len(digits)) + digits if n > len(digits) else digits

    # arithmetic ---------------------------------------------------------------
    def _as_truncated(self, prec: int) -> tuple[Poly, int]:
        return self.expand(prec), prec

    def __neg__(self) -> "Laurent":
        if self.num is not None:
            return Laurent(self.field, num=-self.num, den=self.den, prec=self.prec)
        return Laurent(self.field, body=-self.body, prec=self.prec)

    def __add__(self, other) -> "Laurent":
        if isinstance(other, (Poly, int)):
            other = Laurent.from_poly(other if isinstance(other, Poly) else self.field.const(other))
        if self.num is not None and other.num is not None:
            if self.den == other.den:
                num, den = self.num + other.num, self.den
            else:
                num, den = self.num * other.den + other.num * self.den, self.den * other.den
            return Laurent.rational(num, den, max(self.prec, other.prec))
        prec = min(self.prec if self.num is None else other.prec,
                   other.prec if other.num is None else self.prec)
        return Laurent.truncated(self.expand(prec) + other.expand(prec), prec)

    __radd__ = __add__

    def __sub__(self, other) -> "Laurent":
        if isinstance(other, (Poly, int)):
            other = Laurent.from_poly(other if isinstance(other, Poly) else self.field.const(other))
        return self + (-other)

    def __rsub__(self, other) -> "Laurent":
        return (-self) + other

    def __mul__(self, other) -> "Laurent":
        F = self.field
        if isinstance(other, int):
            other = F.const(other)
        if isinstance(other, Poly):
            if self.num is not None:
                return Laurent.rational(self.num * other, self.den, self.prec)
            if not other:
                return Laurent.zero(F)
            g = other.deg
            prod = self.body * other
            return Laurent.truncated(Poly(F, prod.coeffs[g:]), self.prec - g)
        if self.num is not None and other.num is not None:
            return Laurent.rational(self.num * other.num, self.den * other.den, max(self.prec, other.prec))
        if self.num is not None:
            return other * self
        if other.num is not None:
            n1 = other.upper_exp()
            if n1 == NEG_INF:
                return Laurent.zero(F)
            n2 = self.upper_exp()
            target = self.prec - n1
            other_t = Laurent.truncated(other.expand(target + n2), target + n2)
            return self * other_t
        n1, n2 = self.upper_exp(), other.upper_exp()
        p1, p2 = self.prec, other.prec
        prec = min(p2 - n1, p1 - n2)
        prod = self.body * other.body
        drop = p1 + p2 - prec
        if drop >= 0:
            body = Poly(F, prod.coeffs[drop:])
        else:
            body = prod.shift(-drop)
        return Laurent.truncated(body, prec)

    __rmul__ = __mul__

    def div_poly(self, g: Poly) -> "Laurent":
        """Divide by a nonzero polynomial."""
        if not g:
            raise ZeroDivisionError("division by the zero polynomial")
        if self.num is not None:
            return Laurent.rational(self.num, self.den * g, self.prec)
        prec = self.prec + g.deg
        return Laurent.truncated(self.body.shift(g.deg) // g, prec)

    def __truediv__(self, other) -> "Laurent":
        """Exact division; both operands must be rational."""
        if isinstance(other, Poly):
            return self.div_poly(other)
        if self.num is None or other.num is None:
            raise PrecisionError("division is only exact between rational values")
        if not other.num:
            raise ZeroDivisionError("division by zero")
        return Laurent.rational(self.num * other.den, self.den * other.num, max(self.prec, other.prec))

    def poly_part(self) -> Poly:
        return poly_fractional_split(self)[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Laurent):
            return NotImplemented
        if self.num is not None and other.num is not None:
            return self.num == other.num and self.den == other.den
        prec = min(self.prec if self.num is None else other.prec,
                   other.prec if other.num is None else self.prec)
        return self.expand(prec) == other.expand(prec)

    def __hash__(self) -> int:
        if self.num is not None:
            return hash(("r", self.num, self.den))
        return hash(("t", self.body, self.prec))

    # serialization -----------------------------------------------------------
    def to_json(self) -> dict:
        out = {"lead_exp": self.lead_exp, "coeffs": list(self.coeffs), "prec": self.prec}
        if self.num is not None:
            out["rational"] = [self.num.to_json(), self.den.to_json()]
        return out

    @classmethod
    def from_json(cls, F: FieldSpec, obj: dict) -> "Laurent":
        if obj.get("rational") is not None:
            f, g = obj["rational"]
            return cls.rational(F.poly(f), F.poly(g), int(obj.get("prec", DEFAULT_PREC)))
        return cls.from_digits(F, int(obj["lead_exp"]), obj["coeffs"], int(obj["prec"]))

    def __repr__(self) -> str:
        if self.num is not None:
            return f"({self.num})/({self.den})"
        return f"Laurent(lead_exp={self.lead_exp}, coeffs={list(self.coeffs)}, prec={self.prec})"


def laurent_from_rational(f: Poly, g: Poly, prec: int = DEFAULT_PREC) -> Laurent:
    return Laurent.rational(f, g, prec)


def poly_fractional_split(v: Laurent) -> tuple[Poly, Laurent]:
    """Split v = P + F with P the part of exponent >= 0 and |F| < 1."""
    F = v.field
    if v.num is not None:
        qt, r = divmod(v.num, v.den)
        return qt, Laurent.rational(r, v.den, v.prec)
    if v.prec < 0:
        raise PrecisionError("terms down to exponent 0 are not certified")
    body = v.body.coeffs
    return Poly(F, body[v.prec:]), Laurent.truncated(Poly(F, body[: v.prec]), v.prec)


class LVec:
    """A vector of Laurent values with the sup norm."""

    __slots__ = ("entries",)

    def __init__(self, entries: Iterable[Laurent]):
        self.entries = tuple(entries)

    @classmethod
    def rational(cls, nums: Sequence[Poly], den: Poly, prec: int = DEFAULT_PREC) -> "LVec":
        return cls(Laurent.rational(a, den, prec) for a in nums)

    @classmethod
    def from_polys(cls, polys: Sequence[Poly]) -> "LVec":
        return cls(Laurent.from_poly(a) for a in polys)

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def field(self) -> FieldSpec:
        return self.entries[0].field

    @property
    def is_rational(self) -> bool:
        return all(e.is_rational for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i: int) -> Laurent:
        return self.entries[i]

    def norm_exp(self) -> int | float:
        return sup_norm_exp(self)

    def norm(self) -> Fraction:
        return sup_norm(self)

    def __add__(self, other: "LVec") -> "LVec":
        return LVec(a + b for a, b in zip(self.entries, other.entries))

    def __sub__(self, other: "LVec") -> "LVec":
        return LVec(a - b for a, b in zip(self.entries, other.entries))

    def __neg__(self) -> "LVec":
        return LVec(-a for a in self.entries)

    def scale(self, c) -> "LVec":
        """Multiply every entry by a Poly, Laurent or field element."""
        return LVec(a * c for a in self.entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, LVec) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def to_json(self) -> list[dict]:
        return [e.to_json() for e in self.entries]

    def __repr__(self) -> str:
        return "(" + ", ".join(repr(e) for e in self.entries) + ")"


def sup_norm_exp(v: LVec) -> int | float:
    """Exponent of the sup norm; NEG_INF when every entry is an exact zero.

    Entries that are zero to precision are allowed as long as some other
    entry certifiably dominates them.
    """
    best = NEG_INF
    unknown = NEG_INF
    for e in v.entries:
        if e.num is None and not e.body:
            unknown = max(unknown, -e.prec - 1)
        else:
            best = max(best, e.norm_exp())
    if unknown != NEG_INF and unknown >= best:
        raise IndeterminateNormError("no entry certifies the sup norm at available precision")
    return best


def sup_norm(v: LVec) -> Fraction:
    return qpow(v.field.q, sup_norm_exp(v))


class Ball:
    """Closed ball {y : |y - center| <= q^radius_exp}."""

    __slots__ = ("center", "radius_exp")

    def __init__(self, center: LVec, radius_exp: int):
        self.center = center
        self.radius_exp = radius_exp

    @property
    def radius(self) -> Fraction:
        return qpow(self.center.field.q, self.radius_exp)

    def contains_point(self, y: LVec) -> bool:
        return _diff_exp_leq(self.center, y, self.radius_exp)

    def contains(self, other: "Ball") -> bool:
        """Ultrametric containment: other is inside self."""
        return other.radius_exp <= self.radius_exp and _diff_exp_leq(self.center, other.center, self.radius_exp)

    def __repr__(self) -> str:
        return f"Ball({self.center!r}, q^{self.radius_exp})"


def _diff_exp_leq(a: LVec, b: LVec, e: int) -> bool:
    """Decide |a - b| <= q^e, raising only when precision cannot settle it."""
    diff = a - b
    try:
        return diff.norm_exp() <= e
    except IndeterminateNormError:
        bound = max(x.upper_exp() for x in diff.entries)
        if bound <= e:
            return True
        raise


def ball_distance_exp(B1: Ball, B2: Ball) -> int | float:
    """Exponent of d(B1, B2): NEG_INF when the balls meet, else log_q |c1 - c2|."""
    r = max(B1.radius_exp, B2.radius_exp)
    if _diff_exp_leq(B1.center, B2.center, r):
        return NEG_INF
    return (B1.center - B2.center).norm_exp()


def ball_distance(B1: Ball, B2: Ball) -> Fraction:
    return qpow(B1.center.field.q, ball_distance_exp(B1, B2))
