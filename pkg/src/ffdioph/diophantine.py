"""Best approximations, Farey lattices and the fibres of pi_u.

A pair u = (a, b) with a in R^d and b in R \\ {0} stands for the rational
point a/b.  Q is the set of pairs with gcd(a_1, ..., a_d, b) = 1, and
|u| = |b|.  Qualities are A(theta, u) = ||b theta - a||, always handled as
exponents of q.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .ffpoly import NEG_INF, FieldSpec, Poly, enumerate_polys, gcd_many, poly_xgcd
from .laurent import Laurent, LVec, poly_fractional_split, qpow
from .lattice import LatticeBasis, RankError, ReducedLattice, column_reduce, poly_det, popov_form


class NotInQError(ValueError):
    """The pair fails gcd(a, b) = 1 or has b = 0."""


class NotInLatticeError(ValueError):
    """A vector expected in the Farey lattice is not a lattice vector."""


class ApproxPair:
    """u = (a_1, ..., a_d, b); equality is exact, not up to units."""

    __slots__ = ("a", "b")

    def __init__(self, a: Sequence[Poly], b: Poly):
        if not b:
            raise NotInQError("denominator b must be nonzero")
        self.a = tuple(a)
        self.b = b

    @classmethod
    def make(cls, a: Sequence[Poly], b: Poly) -> "ApproxPair":
        """Construct and insist on membership in Q."""
        u = cls(a, b)
        if not u.in_Q():
            raise NotInQError(f"gcd(a, b) != 1 for {u}")
        return u

    @classmethod
    def root(cls, F: FieldSpec, d: int) -> "ApproxPair":
        """(0, ..., 0, 1), the pair with hat u = 0."""
        return cls([F.zero] * d, F.one)

    @property
    def field(self) -> FieldSpec:
        return self.b.field

    @property
    def d(self) -> int:
        return len(self.a)

    @property
    def norm_exp(self) -> int:
        return int(self.b.deg)

    @property
    def norm(self) -> Fraction:
        return qpow(self.field.q, self.norm_exp)

    def in_Q(self) -> bool:
        return gcd_many(list(self.a) + [self.b]).deg == 0

    def gcd(self) -> Poly:
        return gcd_many(list(self.a) + [self.b])

    def primitive_part(self) -> "ApproxPair":
        g = self.gcd()
        return ApproxPair([ai // g for ai in self.a], self.b // g)

    def canonical(self) -> "ApproxPair":
        """The unit multiple with b monic."""
        c = self.b.lc
        if c == 1:
            return self
        inv = self.field.inv(c)
        return ApproxPair([ai.scale(inv) for ai in self.a], self.b.scale(inv))

    def scale(self, c: int) -> "ApproxPair":
        return ApproxPair([ai.scale(c) for ai in self.a], self.b.scale(c))

    def same_orbit(self, other: "ApproxPair") -> bool:
        """other in F_q^* self."""
        return self.canonical() == other.canonical()

    @property
    def hat(self) -> LVec:
        return LVec.rational(self.a, self.b)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ApproxPair) and self.a == other.a and self.b == other.b

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    def to_json(self) -> dict:
        return {"a": [ai.to_json() for ai in self.a], "b": self.b.to_json()}

    @classmethod
    def from_json(cls, F: FieldSpec, obj: dict) -> "ApproxPair":
        return cls([F.poly(ai) for ai in obj["a"]], F.poly(obj["b"]))

    def __repr__(self) -> str:
        return f"({', '.join(map(repr, self.a))}; {self.b!r})"


def _require_Q(u: ApproxPair) -> None:
    if not u.in_Q():
        raise NotInQError(f"{u} is not in Q")


# ---------------------------------------------------------------------------
# qualities


def approx_quality_exp(theta: LVec, u: ApproxPair) -> int | float:
    """log_q A(theta, u) = log_q ||b theta - a||."""
    return LVec(t * u.b - ai for t, ai in zip(theta, u.a)).norm_exp()


def approx_quality(theta: LVec, u: ApproxPair) -> Fraction:
    return qpow(u.field.q, approx_quality_exp(theta, u))


def nearest_numerator(theta: LVec, b: Poly) -> tuple[tuple[Poly, ...], LVec]:
    """Polynomial parts of b theta and the fractional remainder."""
    parts, fracs = [], []
    for t in theta:
        p, f = poly_fractional_split(t * b)
        parts.append(p)
        fracs.append(f)
    return tuple(parts), LVec(fracs)


def wedge_norm_exp(u: ApproxPair, v: ApproxPair) -> int | float:
    """log_q |u ^ v| = log_q (|u| |v| ||hat u - hat v||) = max_i deg(b' a_i - b a'_i)."""
    return max((v.b * ai - u.b * bi).deg for ai, bi in zip(u.a, v.a))


def pi_u(u: ApproxPair, v: ApproxPair) -> LVec:
    """pi_u(v) = b_v hat u - a_v."""
    return LVec(Laurent.rational(ai * v.b - vi * u.b, u.b) for ai, vi in zip(u.a, v.a))


# ---------------------------------------------------------------------------
# best approximations


@dataclass
class BestApproxSeq:
    theta: LVec
    entries: list[ApproxPair]
    qualities_exp: list[int | float]
    degree_bound: int
    rational: bool = False

    @property
    def qualities(self) -> list[Fraction]:
        q = self.theta.field.q
        return [qpow(q, e) for e in self.qualities_exp]

    def to_json(self) -> dict:
        return {
            "theta": self.theta.to_json(),
            "degree_bound": self.degree_bound,
            "rational": self.rational,
            "entries": [
                dict(u.to_json(), A=(None if e == NEG_INF else int(e)))
                for u, e in zip(self.entries, self.qualities_exp)
            ],
        }


def best_approx_sequence(theta: LVec, degree_bound: int) -> BestApproxSeq:
    """All best approximations of theta with deg b <= degree_bound.

    For each monic b the optimal numerator is the polynomial part of b theta,
    so the search runs over monic b only.  A best approximation of degree D
    exists exactly when the best quality at degree D beats every smaller
    degree, and then its b is unique up to units.
    """
    F = theta.field
    if theta.d == 0:
        raise ValueError("theta must have at least one coordinate")
    entries: list[ApproxPair] = []
    quals: list[int | float] = []
    best_below = None
    rational = False
    for D in range(degree_bound + 1):
        best = None
        winners: list[tuple[Poly, tuple[Poly, ...]]] = []
        for b in enumerate_polys(F, D, monic_only=True):
            a, frac = nearest_numerator(theta, b)
            e = frac.norm_exp()
            if best is None or e < best:
                best, winners = e, [(b, a)]
            elif e == best:
                winners.append((b, a))
        if best_below is None or best < best_below:
            if len(winners) != 1:
                raise ArithmeticError(
                    f"{len(winners)} denominators of degree {D} tie at quality q^{best}; "
                    "a best approximation would not be unique"
                )
            b, a = winners[0]
            u = ApproxPair(a, b)
            if not u.in_Q():
                raise ArithmeticError(f"optimal pair {u} at degree {D} is not primitive")
            entries.append(u)
            quals.append(best)
            best_below = best
            if best == NEG_INF:
                rational = True
                break
    return BestApproxSeq(theta, entries, quals, degree_bound, rational)


def min_quality_by_degree(theta: LVec, max_degree: int) -> list[int | float]:
    """m[D] = min over all pairs with deg b = D of log_q A(theta, (a, b))."""
    F = theta.field
    out = []
    for D in range(max_degree + 1):
        best = None
        for b in enumerate_polys(F, D, monic_only=True):
            e = nearest_numerator(theta, b)[1].norm_exp()
            best = e if best is None else min(best, e)
        out.append(best)
    return out


def is_best_approximation(theta: LVec, u: ApproxPair, mins: Sequence[int | float] | None = None) -> bool:
    """Definition-level test of both best-approximation conditions.

    Pairs outside Q never lower the minimum over |v| <= |u|: (a, b) = g w
    has A(theta, g w) >= A(theta, w) with |w| <= |(a, b)|.
    """
    if not u.in_Q():
        return False
    D = u.norm_exp
    if mins is None:
        mins = min_quality_by_degree(theta, D)
    A = approx_quality_exp(theta, u)
    below = min(mins[:D], default=None)
    if below is not None and not A < below:
        return False
    return A <= min(mins[: D + 1])


# ---------------------------------------------------------------------------
# Farey lattices


@dataclass
class FareyLattice:
    u: ApproxPair
    lattice: ReducedLattice

    @property
    def d(self) -> int:
        return self.u.d

    @property
    def minima_exp(self) -> tuple[int, ...]:
        return self.lattice.minima_exp

    @property
    def r_exp(self) -> int:
        return self.lattice.minima_exp[0]

    @property
    def r_u(self) -> Fraction:
        return self.lattice.minima[0]

    @property
    def det_exp(self) -> int:
        return self.lattice.det_exp

    @property
    def xi(self) -> tuple[LVec, ...]:
        return self.lattice.xi

    def normalized_exp(self, i: int) -> Fraction:
        """log_q hat lambda_i = log_q |u| / d + log_q lambda_i (i is 1-based)."""
        return Fraction(self.u.norm_exp, self.d) + self.minima_exp[i - 1]

    def in_H_prime(self, y: LVec) -> bool:
        return self.lattice.in_span(y, self.d - 1)

    def coordinates(self, alpha: LVec) -> list[Poly]:
        c = self.lattice.lattice_coordinates(alpha)
        if c is None:
            raise NotInLatticeError(f"{alpha} is not in the Farey lattice of {self.u}")
        return c

    def is_primitive(self, alpha: LVec) -> bool:
        return gcd_many(self.coordinates(alpha)).deg == 0

    def to_json(self) -> dict:
        return {"u": self.u.to_json(), "lattice": self.lattice.to_json()}


def farey_basis(u: ApproxPair) -> LatticeBasis:
    """Generators e_1, ..., e_d, hat u."""
    F = u.field
    d = u.d
    gens = [LVec.from_polys([F.one if i == j else F.zero for i in range(d)]) for j in range(d)]
    gens.append(u.hat)
    return LatticeBasis(gens)


def farey_lattice(u: ApproxPair) -> FareyLattice:
    """Reduce Lambda_u from the cleared generators s e_1, ..., s e_d, a / lc(b), s = monic b.

    Equivalent to ``column_reduce(farey_basis(u))`` without the Laurent
    round trip; the tests check the two agree.
    """
    _require_Q(u)
    F = u.field
    d = u.d
    s = u.b.monic()
    c = F.inv(u.b.lc)
    cols = [[s if i == j else F.zero for i in range(d)] for j in range(d)]
    cols.append([ai.scale(c) for ai in u.a])
    P = popov_form(cols)
    if len(P) != d:
        raise RankError(f"Farey generators span rank {len(P)}")
    return FareyLattice(u, ReducedLattice(F, d, s, P))


def r_of_u_bruteforce_exp(u: ApproxPair) -> int:
    """log_q r(u) by direct minimization over v in Q with |v| <= |u|, v not in F_q^* u.

    The value 1 is always attained (v = (P + e_1, 1) with P the polynomial
    part of hat u), and ||b' hat u - a'|| <= 1 forces a' to differ from the
    polynomial part of b' hat u by a constant vector, so those candidates
    are the only ones that can reach the minimum.  Every candidate is checked
    for membership in Q and for not being a unit multiple of u.
    """
    _require_Q(u)
    F = u.field
    d = u.d
    hat = u.hat
    ucan = u.canonical()
    best = None
    for D in range(u.norm_exp + 1):
        for b in enumerate_polys(F, D):
            P, frac = nearest_numerator(hat, b)
            for c in itertools.product(F.elements(), repeat=d):
                a = [p + F.const(ci) for p, ci in zip(P, c)]
                v = ApproxPair(a, b)
                if not v.in_Q() or v.canonical() == ucan:
                    continue
                e = LVec(f - F.const(ci) for ci, f in zip(c, frac)).norm_exp()
                if best is None or e < best:
                    best = e
    return int(best)


def r_of_u_bruteforce(u: ApproxPair) -> Fraction:
    return qpow(u.field.q, r_of_u_bruteforce_exp(u))


def r_exponents_for_denominator(F: FieldSpec, b: Poly) -> tuple[list[Poly], "object"]:
    """Batch oracle for r(u) over all numerators modulo a fixed monic b.

    Returns the residues (all polynomials of degree < deg b, in enumeration
    order) and a table T with T[j, i] = deg((b'_j * residue_i) mod b) over
    the monic b'_j with deg b'_j <= deg b, b'_j != b.  For u = (a, b) in Q,
    log_q r(u) = min(deg b, min_j max_i T[j, idx(a_i)]) - deg b.  This is the
    same minimization as :func:`r_of_u_bruteforce`, vectorized.
    """
    import numpy as np

    D = int(b.deg)
    residues = [F.zero] + [f for k in range(D) for f in enumerate_polys(F, k)]
    bs = [g for k in range(D + 1) for g in enumerate_polys(F, k, monic_only=True) if g != b]
    table = np.full((len(bs), len(residues)), -1, dtype=np.int64)
    for j, g in enumerate(bs):
        for i, r in enumerate(residues):
            m = (g * r) % b
            table[j, i] = m.deg if m else -(10**6)
    return residues, table


def numerator_subspace_representatives(F: FieldSpec, D: int, d: int) -> Iterator[tuple[Poly, ...]]:
    """One numerator tuple a (deg a_i < D) per F_q-subspace of dimension <= d.

    Constant matrices g in GL_d(F_q) are isometries with g Lambda_(a, b) =
    Lambda_(g a, b), and GL_d(F_q) acts transitively on the d-tuples spanning
    a given subspace.  So for a fixed b of degree D every quantity that is
    invariant under these isometries is determined by the span of the a_i,
    and this generator yields the reduced echelon basis of each span, padded
    with zeros to length d.
    """
    zero_pad = [F.zero] * d
    for k in range(min(d, D) + 1):
        for pivots in itertools.combinations(range(D), k):
            free = [[j for j in range(p + 1, D) if j not in pivots] for p in pivots]
            n_free = sum(len(f) for f in free)
            for vals in itertools.product(range(F.q), repeat=n_free):
                rows = []
                it = iter(vals)
                for p, fr in zip(pivots, free):
                    coeffs = [0] * D
                    coeffs[p] = 1
                    for j in fr:
                        coeffs[j] = next(it)
                    rows.append(F.poly(coeffs))
                yield tuple(rows + zero_pad[: d - k])


def di_threshold_holds(norm_exp: int, r_exp: int | float, d: int, eps: Fraction, q: int,
                       strict: bool = True) -> bool:
    """|u|^{1/d} r < eps (or <= eps), compared after raising to the d-th power."""
    if r_exp == NEG_INF:
        return True
    lhs = Fraction(q) ** (norm_exp + d * int(r_exp))
    return lhs < eps**d if strict else lhs <= eps**d


@dataclass
class DITestResult:
    passes: list[bool]
    verdict: str
    tail_start: int | None

    def to_json(self) -> dict:
        return {"passes": self.passes, "verdict": self.verdict, "tail_start": self.tail_start}


def di_test(seq: BestApproxSeq, eps: Fraction, strict: bool = True) -> DITestResult:
    """Per index: |u_n|^{1/d} r(u_n) < eps, exactly.

    ``strict=False`` tests <= instead, the form that a prefix of consecutive
    best approximations needs for A(theta, u_n) <= eps |u_{n+1}|^{-1/d}.

    A rational theta (the search reached A = 0) is reported as degenerate.
    Otherwise the prefix is consistent when the condition holds on a final
    run of indices, whose start is reported.
    """
    if not seq.entries:
        raise ValueError("empty sequence")
    eps = Fraction(eps)
    q = seq.theta.field.q
    d = seq.theta.d
    passes = []
    for u in seq.entries:
        r = farey_lattice(u).r_exp
        passes.append(di_threshold_holds(u.norm_exp, r, d, eps, q, strict))
    if seq.rational:
        return DITestResult(passes, "degenerate", None)
    tail = None
    for i in range(len(passes) - 1, -1, -1):
        if not passes[i]:
            break
        tail = i
    return DITestResult(passes, "consistent" if tail is not None else "inconsistent", tail)


# ---------------------------------------------------------------------------
# H_u and fibres of pi_u


def hyperplane_normal(farey: FareyLattice) -> list[Poly]:
    """Cofactors l with sum l_i y_i = 0 exactly on span(xi_1, ..., xi_{d-1}).

    l_i is the signed minor of the numerator matrix [P_1 ... P_{d-1}] with
    row i removed; for d = 1 the span is {0} and l = (1).
    """
    cols = farey.lattice.cols[: farey.d - 1]
    d = farey.d
    F = farey.u.field
    out = []
    for i in range(d):
        rows = [[col[r] for col in cols] for r in range(d) if r != i]
        m = poly_det(rows) if rows else F.one
        out.append(-m if i % 2 else m)
    return out


def in_H_u(u: ApproxPair, v: ApproxPair, farey: FareyLattice | None = None,
           normal: Sequence[Poly] | None = None) -> bool:
    """v in H_u, i.e. hat v - hat u in span(xi_1, ..., xi_{d-1}).

    With the normal l this is sum l_i (b_u a_{v,i} - b_v a_{u,i}) = 0.
    """
    if normal is None:
        farey = farey_lattice(u) if farey is None else farey
        normal = hyperplane_normal(farey)
    acc = u.field.zero
    for li, au, av in zip(normal, u.a, v.a):
        if li:
            acc = acc + li * (u.b * av - v.b * au)
    return not acc


def xgcd_many(polys: Sequence[Poly]) -> tuple[Poly, list[Poly]]:
    """(g, c) with sum c_i f_i = g = monic gcd."""
    F = polys[0].field
    g = F.zero
    coeffs: list[Poly] = []
    for f in polys:
        if not g and not f:
            coeffs.append(F.zero)
            continue
        h, s, t = poly_xgcd(g, f)
        coeffs = [c * s for c in coeffs] + [t]
        g = h
    return g, coeffs


def fiber_base(u: ApproxPair, alpha: LVec) -> tuple[tuple[Poly, ...], Poly]:
    """(a_1, b_1) in R^d x R with b_1 hat u - a_1 = alpha and |b_1| < |u|.

    b_1 is found from a Bezout relation sum c_i a_{0,i} + c_0 b_0 = 1, since
    b_1 a_{0,i} = b_0 alpha_i modulo b_0.  Raises NotInLatticeError when
    alpha is not in Lambda_u.  b_1 may be zero.
    """
    _require_Q(u)
    b0 = u.b
    scaled = []
    for t in alpha:
        y = t * b0
        if not y.is_rational or y.den.deg > 0:
            raise NotInLatticeError("b_0 alpha is not a polynomial vector")
        scaled.append(y.num)
    return fiber_base_scaled(u, scaled)


def fiber_base_scaled(u: ApproxPair, scaled: Sequence[Poly]) -> tuple[tuple[Poly, ...], Poly]:
    """:func:`fiber_base` with alpha given as the polynomial vector b_0 alpha."""
    F = u.field
    b0 = u.b
    g, c = xgcd_many(list(u.a) + [b0])
    acc = F.zero
    for ci, yi in zip(c, scaled):
        acc = acc + ci * yi
    b1 = acc % b0
    a1 = []
    for ai, yi in zip(u.a, scaled):
        qt, r = divmod(b1 * ai - yi, b0)
        if r:
            raise NotInLatticeError(f"b_0 alpha = {list(scaled)} is not in the Farey lattice of {u}")
        a1.append(qt)
    return tuple(a1), b1


def fiber(u: ApproxPair, alpha: LVec, k: int) -> Iterator[ApproxPair]:
    """Every v in R^{d+1} with pi_u(v) = alpha and |v| = q^k |u|, as (a_1 + a_0 s, b_1 + b_0 s)."""
    yield from fiber_from_base(u, fiber_base(u, alpha), k)


def fiber_from_base(u: ApproxPair, base: tuple[tuple[Poly, ...], Poly], k: int) -> Iterator[ApproxPair]:
    a1, b1 = base
    for s in enumerate_polys(u.field, k):
        yield ApproxPair([x + a0 * s for x, a0 in zip(a1, u.a)], b1 + u.b * s)


def fiber_count(u: ApproxPair, alpha: LVec, k: int) -> int:
    """#{v in pi_u^{-1}(alpha) cap Q : |v| = q^k |u|} from the parametrization."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return sum(1 for v in fiber(u, alpha, k) if v.in_Q())


def fiber_count_bruteforce(u: ApproxPair, alpha: LVec, k: int) -> int:
    """Same count by scanning every b of degree deg b_0 + k."""
    _require_Q(u)
    F = u.field
    b0 = u.b
    scaled = []
    for t in alpha:
        y = t * b0
        if not y.is_rational or y.den.deg > 0:
            raise NotInLatticeError("b_0 alpha is not a polynomial vector")
        scaled.append(y.num)
    count = 0
    for b in enumerate_polys(F, u.norm_exp + k):
        a = []
        for ai, yi in zip(u.a, scaled):
            qt, r = divmod(b * ai - yi, b0)
            if r:
                break
            a.append(qt)
        else:
            if ApproxPair(a, b).in_Q():
                count += 1
    return count
