"""The strictly nested structure behind the lower bound for dim DI_d(eps).

Given u in Q with canonical orthogonal basis xi_1, ..., xi_d of Lambda_u,
a vector alpha = sum_{i<d} m_i xi_i + n xi_d (n != 0) defines the rank d-1
lattice Lambda_alpha = R xi_1 + ... + R xi_{d-1} + R sum (m_i / n) xi_i.
The children of u are

    F_N(u, eps) = union of zeta(u, alpha, eps) over primitive alpha with
                  hat lambda_1(alpha) > eps, 0 < |n| <= q^N and
                  |m_i| < |n| lambda_d(u) / lambda_i(u),

    zeta(u, alpha, eps) = {v in Q : pi_u(v) = alpha,
                  (|u^v| / eps)^{d/(d-1)} <= |v| <= (q |u^v| / eps)^{d/(d-1)}},

with |u^v| = |u| ||alpha|| and balls B(u) = B(hat u, lambda_1(u) / (q |u|)).

Notation used throughout: U = log_q |u|, e_i = log_q lambda_i(u),
A = log_q ||alpha|| = deg n + e_d, W = log_q |u^v| = U + A, V = log_q |v|.
Every inequality with a fractional power is compared after raising both
sides to an integer power, so eps may be any positive rational.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import mpmath
import numpy as np

from . import bounds as bnd
from .diophantine import (
    ApproxPair,
    BestApproxSeq,
    FareyLattice,
    di_test,
    farey_lattice,
    is_best_approximation,
    min_quality_by_degree,
    pi_u,
)
from .ffpoly import (
    NEG_INF,
    FieldSpec,
    Poly,
    divisor_sum_D1,
    enumerate_polys,
    enumerate_polys_upto,
    gcd_many,
    units_mod,
)
from .fractal_upper import _fibre_over, hat_distance_exp
from .laurent import Ball, LVec, ball_distance_exp
from .lattice import LatticeBasis, ReducedLattice, column_reduce, popov_form


class LowerStructureError(ValueError):
    """A precondition of the lower structure is violated."""


class EmptyChildrenError(LowerStructureError):
    """No child exists for the requested (eps, N)."""


def _check_eps(eps) -> Fraction:
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise LowerStructureError(f"eps = {eps} must satisfy 0 < eps < 1")
    return eps


def _check_d(d: int) -> None:
    if d < 2:
        raise LowerStructureError("the lower structure needs d >= 2")


# ---------------------------------------------------------------------------
# xi bases and alpha vectors


@dataclass(frozen=True)
class XiBasis:
    """Canonical orthogonal basis xi_j = P_j / s of Lambda_u, ||xi_j|| = q^{e_j}."""

    u: ApproxPair
    farey: FareyLattice

    @classmethod
    def of(cls, u: ApproxPair) -> "XiBasis":
        _check_d(u.d)
        return cls(u, farey_lattice(u))

    @property
    def d(self) -> int:
        return self.u.d

    @property
    def q(self) -> int:
        return self.u.field.q

    @property
    def field(self) -> FieldSpec:
        return self.u.field

    @property
    def U(self) -> int:
        return self.u.norm_exp

    @property
    def e(self) -> tuple[int, ...]:
        return self.farey.minima_exp

    @property
    def xi(self) -> tuple[LVec, ...]:
        return self.farey.xi

    def numerator(self, coeffs: Sequence[Poly]) -> list[Poly]:
        """y with sum c_j xi_j = y / s."""
        L = self.farey.lattice
        acc = [self.field.zero] * self.d
        for c, col in zip(coeffs, L.cols):
            if c:
                acc = [a + c * f for a, f in zip(acc, col)]
        return acc

    def orthogonality_holds(self, coeffs: Sequence[Poly]) -> bool:
        """||sum c_j xi_j|| = max |c_j| ||xi_j||, evaluated both ways."""
        y = self.numerator(coeffs)
        direct = max((f.deg for f in y), default=NEG_INF) - self.farey.lattice.s.deg
        return direct == self.farey.lattice.combination_norm_exp(coeffs)

    def box_degrees(self, n: Poly) -> tuple[int, ...]:
        """deg m_i <= deg n + e_d - e_i - 1 encodes |m_i| < |n| lambda_d / lambda_i."""
        e = self.e
        return tuple(int(n.deg) + e[-1] - e[i] - 1 for i in range(self.d - 1))

    def lambda_hat_d_exp(self) -> Fraction:
        return self.farey.normalized_exp(self.d)


@dataclass(frozen=True)
class AlphaVector:
    m: tuple[Poly, ...]
    n: Poly

    @property
    def coeffs(self) -> tuple[Poly, ...]:
        return self.m + (self.n,)

    @property
    def primitive(self) -> bool:
        return gcd_many(list(self.coeffs)).deg == 0

    def norm_exp(self, xib: XiBasis) -> int | float:
        return xib.farey.lattice.combination_norm_exp(self.coeffs)

    def dominant(self, xib: XiBasis) -> bool:
        """||alpha|| = |n| lambda_d(u)."""
        return bool(self.n) and self.norm_exp(xib) == self.n.deg + xib.e[-1]

    def in_box(self, xib: XiBasis) -> bool:
        return bool(self.n) and all(mi.deg <= b for mi, b in zip(self.m, xib.box_degrees(self.n)))

    def vector(self, xib: XiBasis) -> LVec:
        return xib.farey.lattice.vector(self.coeffs)

    def to_json(self) -> dict:
        return {"m": [f.to_json() for f in self.m], "n": self.n.to_json()}

    @classmethod
    def from_json(cls, F: FieldSpec, obj: dict) -> "AlphaVector":
        return cls(tuple(F.poly(c) for c in obj["m"]), F.poly(obj["n"]))


def alpha_of(xib: XiBasis, v: ApproxPair) -> AlphaVector:
    """Coordinates of pi_u(v) in the xi basis."""
    c = xib.farey.coordinates(pi_u(xib.u, v))
    return AlphaVector(tuple(c[:-1]), c[-1])


# ---------------------------------------------------------------------------
# Lambda_alpha


def _require_alpha(xib: XiBasis, alpha: AlphaVector) -> None:
    _check_d(xib.d)
    if not alpha.n:
        raise LowerStructureError("alpha needs a nonzero xi_d coefficient n")
    if len(alpha.m) != xib.d - 1:
        raise LowerStructureError(f"alpha needs {xib.d - 1} m-coefficients, got {len(alpha.m)}")


def lambda_alpha(xib: XiBasis, alpha: AlphaVector) -> ReducedLattice:
    """Reduce xi_1, ..., xi_{d-1}, sum (m_i / n) xi_i inside K^d.

    For primitive alpha the determinant is checked against
    lambda_1(u) ... lambda_{d-1}(u) / |n| = 1 / (|u| |n| lambda_d(u)).
    """
    _require_alpha(xib, alpha)
    d = xib.d
    L = xib.farey.lattice
    gens = list(xib.xi[: d - 1])
    gens.append(LVec.rational(xib.numerator(list(alpha.m) + [xib.field.zero]), L.s * alpha.n))
    red = column_reduce(LatticeBasis(gens), expect_rank=d - 1)
    if alpha.primitive:
        want = -xib.U - int(alpha.n.deg) - xib.e[-1]
        if red.det_exp != want:
            raise ArithmeticError(f"det(Lambda_alpha) = q^{red.det_exp}, expected q^{want}")
    return red


def _weighted_minima(xib: XiBasis, m: Sequence[Poly], n: Poly, scale_n: bool) -> tuple[int, ...]:
    """Minima exponents of L(m, n) = sum R n xi_i + R sum m_i xi_i (scale_n) or of
    Lambda_alpha = L(m, n) / n.

    Only the norms max(deg c_i + e_i) of xi-coordinates matter, so coordinate i
    is weighted by x^{e_i - min e} and the weighted polynomial lattice is put
    in Popov form.
    """
    d1 = xib.d - 1
    F = xib.field
    e = xib.e[:d1]
    emin = min(e)
    sh = [ei - emin for ei in e]
    cols = [[n.shift(sh[i]) if i == j else F.zero for i in range(d1)] for j in range(d1)]
    cols.append([mi.shift(s) for mi, s in zip(m, sh)])
    P = popov_form(cols)
    if len(P) != d1:
        raise ArithmeticError(f"L(m, n) has rank {len(P)}, expected {d1}")
    off = emin - (0 if scale_n else int(n.deg))
    return tuple(sorted(max(f.deg for f in c if f) + off for c in P))


def lambda1_exp_alpha(xib: XiBasis, alpha: AlphaVector) -> int:
    """log_q lambda_1(Lambda_alpha) from the weighted polynomial lattice."""
    _require_alpha(xib, alpha)
    return _weighted_minima(xib, alpha.m, alpha.n, scale_n=False)[0]


def wedge_exp(xib: XiBasis, alpha: AlphaVector) -> int:
    """W = log_q |u ^ v| = U + log_q ||alpha|| for every v over alpha."""
    return xib.U + int(alpha.norm_exp(xib))


def lambda1_hat_alpha(xib: XiBasis, alpha: AlphaVector, require_dominant: bool = True) -> Fraction:
    """log_q hat lambda_1(alpha) = W / (d - 1) + log_q lambda_1(Lambda_alpha)."""
    _require_alpha(xib, alpha)
    if require_dominant and not alpha.dominant(xib):
        raise LowerStructureError("||alpha|| != |n| lambda_d(u): the xi_d-dominant case is required")
    return Fraction(wedge_exp(xib, alpha), xib.d - 1) + lambda1_exp_alpha(xib, alpha)


def lambda1_hat_exceeds(xib: XiBasis, alpha: AlphaVector, eps, lam1_exp: int | None = None) -> bool:
    """hat lambda_1(alpha) > eps, decided as q^{W + (d-1) log lambda_1} > eps^{d-1}."""
    eps = Fraction(eps)
    if lam1_exp is None:
        lam1_exp = lambda1_exp_alpha(xib, alpha)
    d = xib.d
    return Fraction(xib.q) ** (wedge_exp(xib, alpha) + (d - 1) * lam1_exp) > eps ** (d - 1)


def in_Lambda_eps(xib: XiBasis, alpha: AlphaVector, eps) -> bool:
    return alpha.primitive and lambda1_hat_exceeds(xib, alpha, eps)


# ---------------------------------------------------------------------------
# exponent windows


def zeta_window(q: int, d: int, W: int, eps: Fraction) -> tuple[int, int] | None:
    """(V_lo, V_hi): all V with (q^W / eps)^d <= q^{(d-1) V} <= (q^{W+1} / eps)^d."""
    lo_val = Fraction(q) ** (d * W) / eps**d
    hi_val = Fraction(q) ** (d * (W + 1)) / eps**d
    V = math.floor(d * W / (d - 1)) - 1
    while Fraction(q) ** ((d - 1) * V) < lo_val:
        V += 1
    V_lo = V
    while Fraction(q) ** ((d - 1) * (V + 1)) <= hi_val:
        V += 1
    if Fraction(q) ** ((d - 1) * V) > hi_val or V < V_lo:
        return None
    return V_lo, V


def T0_holds(xib: XiBasis, eps, k: int) -> bool:
    """k >= T_0 = d/(d-1) (1 + log_q(hat lambda_d(u) / eps))."""
    d, q = xib.d, xib.q
    return Fraction(q) ** ((d - 1) * k - d - xib.U - d * xib.e[-1]) >= Fraction(eps) ** (-d)


def TN_holds(xib: XiBasis, eps, N: int, k: int) -> bool:
    """k <= T_N = d/(d-1) (N + 1 + log_q(hat lambda_d(u) / eps))."""
    d, q = xib.d, xib.q
    return Fraction(q) ** ((d - 1) * k - d * (N + 1) - xib.U - d * xib.e[-1]) <= Fraction(eps) ** (-d)


def T_value(xib: XiBasis, eps, i: int) -> mpmath.mpf:
    """T_i as a real number, for reports only."""
    d, q = xib.d, xib.q
    eps = Fraction(eps)
    with mpmath.workdps(30):
        lhd = mpmath.mpf(xib.lambda_hat_d_exp().numerator) / xib.lambda_hat_d_exp().denominator
        le = mpmath.log(mpmath.mpf(eps.numerator) / eps.denominator, q)
        return mpmath.mpf(d) / (d - 1) * (i + 1 + lhd - le)


# ---------------------------------------------------------------------------
# nodes and children


@dataclass
class LowerNode:
    u: ApproxPair
    farey: FareyLattice
    parent: int | None = None
    alpha: AlphaVector | None = None
    k: int | None = None

    @classmethod
    def make(cls, u: ApproxPair, **kw) -> "LowerNode":
        return cls(u, farey_lattice(u), **kw)

    @classmethod
    def root(cls, F: FieldSpec, d: int) -> "LowerNode":
        return cls.make(ApproxPair.root(F, d))

    @property
    def xib(self) -> XiBasis:
        return XiBasis(self.u, self.farey)

    @property
    def d(self) -> int:
        return self.u.d

    @property
    def q(self) -> int:
        return self.u.field.q

    @property
    def r_exp(self) -> int:
        return self.farey.r_exp

    @property
    def radius_exp(self) -> int:
        """log_q of lambda_1(u) / (q |u|)."""
        return self.r_exp - 1 - self.u.norm_exp

    @property
    def ball(self) -> Ball:
        return Ball(self.u.hat, self.radius_exp)

    @property
    def is_root(self) -> bool:
        return self.parent is None

    def to_json(self) -> dict:
        out = {"u": self.u.to_json(), "minima": list(self.farey.minima_exp), "ball_radius_exp": self.radius_exp}
        if self.alpha is not None:
            out["alpha"] = self.alpha.to_json()
            out["k"] = self.k
        return out


@dataclass
class Child:
    alpha: AlphaVector
    v: ApproxPair
    k: int
    W: int

    @property
    def V(self) -> int:
        return self.v.norm_exp

    @property
    def lambda1_exp(self) -> int:
        """log_q lambda_1(v) = W - V, the value the structure guarantees."""
        return self.W - self.V

    def node(self, parent_index: int | None = None) -> LowerNode:
        return LowerNode.make(self.v, parent=parent_index, alpha=self.alpha, k=self.k)


def iter_alphas(xib: XiBasis, eps, N: int | None = None, degrees: Sequence[int] | None = None
                ) -> Iterator[tuple[AlphaVector, int]]:
    """Primitive alpha in the C'_n boxes with hat lambda_1(alpha) > eps, in the
    order n (by degree, then enumeration order), then m.  Yields (alpha, W)."""
    eps = _check_eps(eps)
    F = xib.field
    if degrees is None:
        if N is None:
            raise LowerStructureError("give N or an explicit list of degrees for n")
        degrees = range(N + 1)
    for D in degrees:
        if D < 0 or (N is not None and D > N):
            continue
        for n in enumerate_polys(F, D):
            ranges = [list(enumerate_polys_upto(F, b)) if b >= 0 else [F.zero] for b in xib.box_degrees(n)]
            for m in itertools.product(*ranges):
                alpha = AlphaVector(tuple(m), n)
                if not alpha.primitive:
                    continue
                if lambda1_hat_exceeds(xib, alpha, eps):
                    yield alpha, xib.U + D + xib.e[-1]


def iter_children(node: LowerNode, eps, N: int) -> Iterator[Child]:
    """Lazy enumeration of F_N(u, eps): n, then m, then |v| ascending, then the
    fibre parameter in enumeration order."""
    eps = _check_eps(eps)
    xib = node.xib
    d, q = xib.d, xib.q
    for alpha, W in iter_alphas(xib, eps, N):
        win = zeta_window(q, d, W, eps)
        if win is None:
            continue
        y = xib.numerator(alpha.coeffs)
        for V in range(max(win[0], xib.U), win[1] + 1):
            for v in _fibre_over(xib.u, xib.farey, y, V - xib.U):
                yield Child(alpha, v, V - xib.U, W)


def enumerate_children(node: LowerNode, eps, N: int, verify: bool = False, limit: int | None = None) -> list[Child]:
    """All of F_N(u, eps).  With ``verify`` every child is re-checked (see verify_child)."""
    out = []
    for c in iter_children(node, eps, N):
        if verify:
            checks = verify_child(node, c, eps, N)
            if not all(checks.values()):
                bad = [k for k, ok in checks.items() if not ok]
                raise ArithmeticError(f"child {c.v} of {node.u} fails {bad}")
        out.append(c)
        if limit is not None and len(out) > limit:
            raise LowerStructureError(f"more than {limit} children; raise the limit")
    return out


def distinct_children(children: Sequence[Child]) -> list[Child]:
    """One child per F_q^* orbit, first occurrence kept (v and c v share a ball)."""
    seen, out = set(), []
    for c in children:
        key = c.v.canonical()
        if key not in seen:
            seen.add(key)
            out.append(c)
    return out


def verify_child(node: LowerNode, child: Child, eps, N: int, farey_v: FareyLattice | None = None) -> dict[str, bool]:
    """Re-derive every per-child claim from scratch; keys name the checks."""
    eps = Fraction(eps)
    xib = node.xib
    d, q = xib.d, xib.q
    U, V = xib.U, child.V
    v = child.v
    if farey_v is None:
        farey_v = farey_lattice(v)
    alpha = alpha_of(xib, v)
    A = alpha.norm_exp(xib)
    W = U + int(A)
    out = {
        "in_Q": v.in_Q(),
        "alpha_matches": alpha == child.alpha,
        "alpha_primitive": alpha.primitive,
        "n_range": bool(alpha.n) and alpha.n.deg <= N,
        "box": alpha.in_box(xib),
        "dominant": alpha.dominant(xib),
        "lambda1_hat_alpha": lambda1_hat_exceeds(xib, alpha, eps),
        "zeta_lower": Fraction(q) ** (d * W) <= eps**d * Fraction(q) ** ((d - 1) * V),
        "zeta_upper": Fraction(q) ** ((d - 1) * V) * eps**d <= Fraction(q) ** (d * (W + 1)),
        "lambda1_identity": farey_v.r_exp == W - V,
        "window": (eps / q) ** d <= Fraction(q) ** (V + d * farey_v.r_exp) <= eps**d,
        "grows": V > U,
        "alpha_len": A >= xib.e[-1] and farey_v.minima_exp[-1] <= A + 2,
    }
    beta = farey_v.lattice.lattice_coordinates(pi_u(v, xib.u))
    out["beta_primitive"] = beta is not None and gcd_many(beta).deg == 0
    return out


# ---------------------------------------------------------------------------
# nesting and separation


def child_ball(u: ApproxPair, r_exp: int) -> Ball:
    """B(hat v, lambda_1(v) / |v|)."""
    return Ball(u.hat, r_exp - u.norm_exp)


def verify_nesting(parent: LowerNode, child: LowerNode) -> bool:
    """B(hat v, lambda_1(v)/|v|) inside B(parent), and diam B(child) < diam B(parent)."""
    if not parent.ball.contains(child_ball(child.u, child.r_exp)):
        return False
    return child.radius_exp < parent.radius_exp


def _hat_digits(children: Sequence[Child], top: int, prec: int) -> np.ndarray:
    """digits[c, i, j] = coefficient of x^{top - j} in hat v_i, for j < top + prec."""
    width = top + prec
    d = len(children[0].v.a)
    arr = np.zeros((len(children), d, width), dtype=np.int16)
    for ci, c in enumerate(children):
        b = c.v.b
        for i, a in enumerate(c.v.a):
            body = (a.shift(prec)) // b  # hat v_i x^prec, truncated
            for e, coef in enumerate(body.coeffs):
                if coef:
                    arr[ci, i, top + prec - 1 - e] = coef
    return arr


@dataclass
class SeparationReport:
    count: int
    classes: int
    min_distance_exp: int
    bound: dict
    holds: bool
    pair_bound_holds: bool
    sampled_ball_distance_agree: bool
    row_min_exp: list[int] = field(repr=False, default_factory=list)

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "classes": self.classes,
            "min_distance_exp": self.min_distance_exp,
            "bound": self.bound,
            "holds": self.holds,
            "pair_bound_holds": self.pair_bound_holds,
            "sampled_ball_distance_agree": self.sampled_ball_distance_agree,
        }


def separation_bound_holds(xib: XiBasis, eps, N: int, dist_exp: int) -> bool:
    """q^dist >= (eps / (q^{N+1} hat lambda_d(u)))^{2d/(d-1)} lambda_1(u) / |u|, raised to d-1."""
    d, q = xib.d, xib.q
    lhs = Fraction(q) ** ((d - 1) * (dist_exp - xib.e[0] + xib.U) + 2 * d * (N + 1) + 2 * xib.U + 2 * d * xib.e[-1])
    return lhs >= Fraction(eps) ** (2 * d)


def separation_bound_value(xib: XiBasis, eps, N: int) -> bnd.Number:
    """The bound itself: exact when its q-exponent and eps power are integral."""
    d, q = xib.d, xib.q
    eps = Fraction(eps)
    e = Fraction(-2 * d * (N + 1) - 2 * xib.U - 2 * d * xib.e[-1], d - 1) + xib.e[0] - xib.U
    p = Fraction(2 * d, d - 1)
    ep = eps ** int(p) if p.denominator == 1 else bnd.iv(eps) ** bnd.iv(p)
    return bnd.mul(bnd.qpow_value(q, e), ep)


def verify_separation(node: LowerNode, children: Sequence[Child], eps, N: int, sample: int = 64) -> SeparationReport:
    """Exact minimum of ||hat v - hat w|| over children in distinct F_q^* orbits.

    Each hat v is expanded to enough digits that two distinct rationals with
    denominators of degree <= Vmax always differ within the window.
    """
    eps = _check_eps(eps)
    xib = node.xib
    reps = distinct_children(children)
    if len(reps) < 2:
        raise LowerStructureError("separation needs at least two distinct children")
    q = xib.q
    Vmax = max(c.V for c in reps)
    top = max(max((a.deg for a in c.v.a if a), default=0) - c.V for c in reps)
    top = max(top, 0) + 1
    prec = 2 * Vmax + 2
    digits = _hat_digits(reps, top, prec)
    n = len(reps)
    V = np.array([c.V for c in reps])
    lam = np.array([c.lambda1_exp for c in reps])
    row_min = []
    pair_ok = True
    width = digits.shape[2]
    for i in range(n - 1):
        diff = digits[i] != digits[i + 1:]
        anyd = diff.any(axis=2)
        first = np.where(anyd, diff.argmax(axis=2), width)
        # exponent of the leading differing digit, maximized over coordinates
        exps = (top - 1 - first).max(axis=1)
        if (first.min(axis=1) == width).any():
            raise ArithmeticError("two distinct children share hat v to the working precision")
        row_min.append(int(exps.min()))
        # ||hat v - hat w|| >= lambda_1(v) / |w| for both orders
        if not (np.all(exps + V[i + 1:] >= lam[i]) and np.all(exps + V[i] >= lam[i + 1:])):
            pair_ok = False
    m = min(row_min)
    agree = True
    step = max(1, (n * (n - 1) // 2) // sample)
    for t, (i, j) in enumerate(itertools.combinations(range(min(n, 40)), 2)):
        if t % step:
            continue
        a, b = reps[i], reps[j]
        Ba = LowerNode.make(a.v).ball
        Bb = LowerNode.make(b.v).ball
        if ball_distance_exp(Ba, Bb) != hat_distance_exp(a.v, b.v):
            agree = False
    return SeparationReport(len(children), n, m, bnd.to_json_number(separation_bound_value(xib, eps, N)),
                            separation_bound_holds(xib, eps, N, m), pair_ok, agree, row_min)


# ---------------------------------------------------------------------------
# counting


@dataclass(frozen=True)
class CountResult:
    count: int
    bound: Fraction | None

    @property
    def holds(self) -> bool | None:
        return None if self.bound is None else self.count >= self.bound

    def to_json(self) -> dict:
        return {"count": self.count, "bound": None if self.bound is None else str(self.bound), "holds": self.holds}


def xn_member(xib: XiBasis, m: Sequence[Poly], n: Poly, eps) -> bool:
    """lambda_1(L(m, n)) > eps |n| (|u| |n| lambda_d(u))^{-1/(d-1)}, raised to d-1."""
    d, q = xib.d, xib.q
    lam = _weighted_minima(xib, m, n, scale_n=True)[0]
    D = int(n.deg)
    return Fraction(q) ** ((d - 1) * (lam - D) + xib.U + D + xib.e[-1]) > Fraction(eps) ** (d - 1)


def xn_bound(n: Poly, d: int, eps) -> Fraction:
    """phi(n) (|n|^{d-2} - eps^{d-1} D_1(n) |n|^{d-3}); phi(unit) = D_1(unit) = 1."""
    q = n.field.q
    N = Fraction(q) ** int(n.deg)
    return units_mod(n) * (N ** (d - 2) - Fraction(eps) ** (d - 1) * divisor_sum_D1(n) * N ** (d - 3))


def count_Xn(xib: XiBasis, n: Poly, eps) -> CountResult:
    """#{m : deg m_i < deg n, gcd(m, n) = 1, lambda_1(L(m, n)) > eta} and its lower bound."""
    _check_d(xib.d)
    if not n:
        raise LowerStructureError("n must be nonzero")
    F = xib.field
    count = 0
    for m in itertools.product(list(enumerate_polys_upto(F, int(n.deg) - 1)) if n.deg > 0 else [F.zero],
                               repeat=xib.d - 1):
        if gcd_many(list(m) + [n]).deg != 0:
            continue
        if xn_member(xib, m, n, eps):
            count += 1
    return CountResult(count, xn_bound(n, xib.d, eps))


def xn_degree_sum(xib: XiBasis, ell: int, eps, exhaustive: bool = False) -> CountResult:
    """Sum of #X_n over all nonzero n of degree ell against q^{ell d}(q-1)((q-1)/q - eps^{d-1}).

    #X_n is unchanged by n -> c n, so by default only monic n are counted and
    the total is multiplied by q - 1.
    """
    F = xib.field
    q, d = xib.q, xib.d
    if exhaustive:
        total = sum(count_Xn(xib, n, eps).count for n in enumerate_polys(F, ell))
    else:
        total = (q - 1) * sum(count_Xn(xib, n, eps).count for n in enumerate_polys(F, ell, monic_only=True))
    bound = Fraction(q) ** (ell * d) * (q - 1) * (Fraction(q - 1, q) - Fraction(eps) ** (d - 1))
    return CountResult(total, bound)


def shell_degrees(xib: XiBasis, eps, k: int) -> list[int]:
    """deg n with eps q^{k(d-1)/d - 1} |u|^{-1/d} <= |n| lambda_d(u) <= eps q^{k(d-1)/d} |u|^{-1/d}."""
    d, q = xib.d, xib.q
    eps = Fraction(eps)
    lo = eps**d * Fraction(q) ** (k * (d - 1) - d - xib.U)
    hi = eps**d * Fraction(q) ** (k * (d - 1) - xib.U)
    out = []
    ell = 0
    while True:
        val = Fraction(q) ** (d * (ell + xib.e[-1]))
        if val > hi:
            return out
        if val >= lo:
            out.append(ell)
        ell += 1


def shell_alpha_count(xib: XiBasis, eps, k: int, N: int | None = None) -> CountResult:
    """#{alpha in Lambda_u(eps) cap C_N(u) in the k-th norm shell}; bound only for k >= T_0."""
    eps = _check_eps(eps)
    degs = shell_degrees(xib, eps, k)
    count = sum(1 for _ in iter_alphas(xib, eps, N, degrees=degs))
    if k < 1 or not T0_holds(xib, eps, k):
        return CountResult(count, None)
    d, q = xib.d, xib.q
    bound = (Fraction(q - 1, q) - eps ** (d - 1)) * eps**d * (q - 1) / Fraction(q) ** d * Fraction(q) ** ((d - 1) * k)
    return CountResult(count, bound)


@dataclass
class FNSumResult:
    lhs: bnd.Number
    lhs_distinct: bnd.Number
    rhs: bnd.Number
    shells: list[int]
    children: int
    classes: int

    @property
    def holds(self) -> bool:
        return bnd.certified_leq(self.rhs, self.lhs)

    def to_json(self) -> dict:
        return {
            "lhs": bnd.to_json_number(self.lhs),
            "lhs_distinct": bnd.to_json_number(self.lhs_distinct),
            "rhs": bnd.to_json_number(self.rhs),
            "shells": self.shells,
            "children": self.children,
            "classes": self.classes,
            "holds": self.holds,
        }


def _power_sum(q: int, s: Fraction, exps: Counter) -> bnd.Number:
    total: bnd.Number = Fraction(0)
    for e, c in sorted(exps.items()):
        total = bnd.add(total, bnd.mul(c, bnd.qpow_value(q, s * e)))
    return total


def F_N_sum_check(node: LowerNode, eps, N: int, s, children: Sequence[Child] | None = None) -> FNSumResult:
    """sum over F_N(u, eps) of (lambda_1(v)/|v|)^s (|u|/lambda_1(u))^s against the closed form.

    ``lhs`` counts every vector of F_N, as the closed form does; ``lhs_distinct``
    counts one vector per F_q^* orbit, i.e. one per ball.
    """
    eps = _check_eps(eps)
    s = Fraction(s)
    if s <= 0:
        raise LowerStructureError("s must be positive")
    xib = node.xib
    d, q = xib.d, xib.q
    if not node.is_root:
        lam_hat_ok = (eps / q) ** d <= Fraction(q) ** (xib.U + d * node.r_exp) <= eps**d
        if not lam_hat_ok:
            raise LowerStructureError("u is neither the root nor has eps/q <= hat lambda_1(u) <= eps")
    if children is None:
        children = enumerate_children(node, eps, N)
    base = xib.U - node.r_exp

    def exps(cs):
        return Counter(c.W - 2 * c.V + base for c in cs)

    lhs = _power_sum(q, s, exps(children))
    reps = distinct_children(children)
    lhs_d = _power_sum(q, s, exps(reps))
    shells = []
    k = 1
    while TN_holds(xib, eps, N, k):
        if T0_holds(xib, eps, k):
            shells.append(k)
        k += 1
    coef = (Fraction(q - 1, q) - eps ** (d - 1)) * eps**d * (q - 1) ** 2 / Fraction(q) ** d
    ksum: bnd.Number = Fraction(0)
    for k in shells:
        ksum = bnd.add(ksum, bnd.qpow_value(q, -(Fraction(d + 1, d) * s - d) * k))
    rhs = bnd.mul(bnd.mul(coef, ksum), bnd.qpow_value(q, -s))
    return FNSumResult(lhs, lhs_d, rhs, shells, len(children), len(reps))


# ---------------------------------------------------------------------------
# certificates

CHOOSERS = ("lexicographic-first", "max-separation")
CAVEAT = ("finite prefix: node-level conditions are certified; containment of an "
          "admissible tail is not checkable at finite depth")


def _choose(node: LowerNode, eps: Fraction, N: int, chooser: str, limit: int) -> Child:
    if chooser == "lexicographic-first":
        for c in iter_children(node, eps, N):
            return c
        raise EmptyChildrenError(f"F_N(u, eps) is empty for u = {node.u}, eps = {eps}, N = {N}")
    if chooser == "max-separation":
        kids = enumerate_children(node, eps, N, limit=limit)
        if not kids:
            raise EmptyChildrenError(f"F_N(u, eps) is empty for u = {node.u}, eps = {eps}, N = {N}")
        reps = distinct_children(kids)
        if len(reps) == 1:
            return reps[0]
        # nearest-neighbour distance per child; ties go to the earliest child
        near = [min(hat_distance_exp(a.v, b.v) for b in reps if b is not a) for a in reps]
        i = max(range(len(reps)), key=lambda t: (near[t], -t))
        return reps[i]
    raise LowerStructureError(f"unknown chooser {chooser!r}; use one of {CHOOSERS}")


def snapped_eps(q: int, x) -> Fraction:
    """Largest power of q that is <= x (x > 0)."""
    x = mpmath.mpf(x) if not isinstance(x, Fraction) else x
    j = 0
    if isinstance(x, Fraction):
        while Fraction(1, q**j) > x:
            j += 1
        return Fraction(1, q**j)
    with mpmath.workdps(50):
        while mpmath.mpf(1) / q**j > x:
            j += 1
    return Fraction(1, q**j)


@dataclass(frozen=True)
class ScheduleEntry:
    i: int
    eps_analytic: str
    eps: Fraction
    N: int

    def to_json(self) -> dict:
        return {"i": self.i, "eps_analytic": self.eps_analytic, "eps": str(self.eps), "N": self.N}


def sing_schedule(i: int, q: int) -> ScheduleEntry:
    """eps_i = 1 / log(i + 1) snapped down to a power of q, N_i = i + 1."""
    if i < 2:
        raise LowerStructureError(f"level {i} too small: eps_i = 1/log(i+1) < 1 needs i >= 2")
    with mpmath.workdps(50):
        e = 1 / mpmath.log(i + 1)
        text = mpmath.nstr(e, 30)
        return ScheduleEntry(i, text, snapped_eps(q, e), i + 1)


@dataclass
class DICertificate:
    kind: str
    field: FieldSpec
    d: int
    chooser: str
    nodes: list[LowerNode]
    link_params: list[tuple[Fraction, int]]
    schedule: list[ScheduleEntry] | None
    checks: dict

    @property
    def theta_prefix(self) -> ApproxPair:
        return self.nodes[-1].u

    @property
    def ok(self) -> bool:
        return all(_all_true(v) for v in self.checks.values())

    def body_json(self) -> dict:
        out = {
            "kind": self.kind,
            "field": self.field.to_json(),
            "d": self.d,
            "chooser": self.chooser,
            "root": self.nodes[0].u.to_json(),
            "nodes": [n.to_json() for n in self.nodes],
            "links": [{"eps": str(e), "N": N} for e, N in self.link_params],
            "theta_prefix": self.theta_prefix.to_json(),
            "theta_radius_exp": self.nodes[-1].radius_exp,
            "checks": self.checks,
            "caveat": CAVEAT,
        }
        if self.schedule is not None:
            out["schedule"] = [s.to_json() for s in self.schedule]
        return out

    def to_json(self) -> dict:
        body = self.body_json()
        body["checksum"] = _checksum(body)
        return body

    def dumps(self) -> str:
        return canonical_dumps(self.to_json())


def canonical_dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _checksum(body: dict) -> str:
    return hashlib.sha256(canonical_dumps(body).encode()).hexdigest()


def _all_true(x) -> bool:
    if isinstance(x, bool):
        return x
    if isinstance(x, dict):
        return all(_all_true(v) for v in x.values())
    if isinstance(x, list):
        return all(_all_true(v) for v in x)
    return True


def verify_chain(nodes: Sequence[LowerNode], link_params: Sequence[tuple[Fraction, int]],
                 brute_force_limit: int = 4096) -> dict:
    """All exact checks for a root-to-leaf chain; link i joins nodes[i] and nodes[i+1]."""
    if len(nodes) < 2 or len(link_params) != len(nodes) - 1:
        raise LowerStructureError("a chain needs a root, at least one child and one (eps, N) per link")
    d = nodes[0].d
    q = nodes[0].q
    links = []
    for i, (eps, N) in enumerate(link_params):
        parent, child_node = nodes[i], nodes[i + 1]
        xib = parent.xib
        alpha = alpha_of(xib, child_node.u)
        W = wedge_exp(xib, alpha)
        c = Child(alpha, child_node.u, child_node.u.norm_exp - xib.U, W)
        checks = verify_child(parent, c, eps, N, farey_v=child_node.farey)
        checks["nesting"] = verify_nesting(parent, child_node)
        U = child_node.u.norm_exp
        e = child_node.farey.minima_exp
        # 1 <= hat lambda_d(v) <= (q / eps)^{d-1}
        checks["lambda_d_range"] = (U + d * e[-1] >= 0
                                    and Fraction(q) ** (U + d * e[-1]) <= (q / Fraction(eps)) ** (d * (d - 1)))
        links.append(checks)
    last = nodes[-1]
    R = last.radius_exp
    theta_ball = []
    best = []
    A_exps = []
    mins = None
    for k, node in enumerate(nodes):
        if k < len(nodes) - 1:
            dist = hat_distance_exp(last.u, node.u)
            exact = dist > R
            A = dist + node.u.norm_exp
        else:
            # every theta in the last ball has A(theta, u_last) <= q^{R + |u_last|}
            exact = True
            A = R + node.u.norm_exp
        A_exps.append(A)
        theta_ball.append(exact and A < node.r_exp)
        if q ** node.u.norm_exp <= brute_force_limit:
            if mins is None:
                mins = min_quality_by_degree(last.u.hat, min(int(math.log(brute_force_limit, q)), last.u.norm_exp))
            if node.u.norm_exp < len(mins):
                best.append(is_best_approximation(last.u.hat, node.u, mins))
    di = []
    identity = []
    for k, (eps, N) in enumerate(link_params):
        A = A_exps[k]
        Vn = nodes[k + 1].u.norm_exp
        di.append(Fraction(q) ** (d * A + Vn) <= Fraction(eps) ** d)
        identity.append(k == len(nodes) - 2 or A == hat_distance_exp(nodes[k + 1].u, nodes[k].u) + nodes[k].u.norm_exp)
    seq = BestApproxSeq(last.u.hat, [n.u for n in nodes[1:]], A_exps[1:], last.u.norm_exp)
    di_tests = {}
    for eps in sorted(set(e for e, _ in link_params), reverse=True):
        res = di_test(seq, eps, strict=False)
        idx = [k for k, (e, _) in enumerate(link_params) if e == eps]
        di_tests[str(eps)] = all(res.passes[k] for k in idx)
    return {
        "links": links,
        "theta_in_balls": theta_ball,
        "best_approximation_bruteforce": best,
        "di_inequality": di,
        "chain_identity": identity,
        "di_test_nonstrict": di_tests,
    }


def build_DI_certificate(F: FieldSpec, d: int, eps, N: int, steps: int, root: ApproxPair | None = None,
                         chooser: str = "lexicographic-first", limit: int = 20000) -> DICertificate:
    """A chain root, u_0, ..., u_{steps-1} with u_{k+1} chosen from F_N(u_k, eps)."""
    eps = _check_eps(eps)
    _check_d(d)
    if steps < 1:
        raise LowerStructureError("steps must be >= 1")
    root = ApproxPair.root(F, d) if root is None else root
    if not root.in_Q() or root.d != d:
        raise LowerStructureError(f"root {root} must be in Q with d = {d}")
    nodes = [LowerNode.make(root)]
    params = []
    for _ in range(steps):
        try:
            c = _choose(nodes[-1], eps, N, chooser, limit)
        except EmptyChildrenError as exc:
            positive = Fraction(F.q - 1, F.q) - eps ** (d - 1) > 0
            raise EmptyChildrenError(f"{exc}; (q-1)/q - eps^(d-1) > 0 is {positive}") from None
        nodes.append(c.node(len(nodes) - 1))
        params.append((eps, N))
    return DICertificate("di", F, d, chooser, nodes, params, None, verify_chain(nodes, params))


def build_sing_prefix(F: FieldSpec, d: int, levels: int, start: int = 9, root: ApproxPair | None = None,
                      chooser: str = "lexicographic-first", limit: int = 20000) -> DICertificate:
    """Level t draws its child with (eps_i, N_i) for i = start + t."""
    _check_d(d)
    if levels < 1:
        raise LowerStructureError("levels must be >= 1")
    root = ApproxPair.root(F, d) if root is None else root
    nodes = [LowerNode.make(root)]
    params = []
    sched = []
    for t in range(levels):
        entry = sing_schedule(start + t, F.q)
        sched.append(entry)
        c = _choose(nodes[-1], entry.eps, entry.N, chooser, limit)
        nodes.append(c.node(len(nodes) - 1))
        params.append((entry.eps, entry.N))
    return DICertificate("sing", F, d, chooser, nodes, params, sched, verify_chain(nodes, params))


@dataclass
class ReplayResult:
    checksum_ok: bool
    checks: dict
    rebuilt_identical: bool

    @property
    def ok(self) -> bool:
        return self.checksum_ok and _all_true(self.checks) and self.rebuilt_identical

    def to_json(self) -> dict:
        return {"checksum_ok": self.checksum_ok, "checks_ok": _all_true(self.checks),
                "rebuilt_identical": self.rebuilt_identical, "ok": self.ok}


def replay_certificate(text: str) -> ReplayResult:
    """Re-run every check from the recorded u's, then rebuild and compare bytes."""
    obj = json.loads(text)
    body = dict(obj)
    checksum = body.pop("checksum", None)
    checksum_ok = checksum == _checksum(body)
    F = FieldSpec.from_json(obj["field"])
    d = obj["d"]
    us = [ApproxPair.from_json(F, n["u"]) for n in obj["nodes"]]
    nodes = [LowerNode.make(us[0])] + [LowerNode.make(u, parent=i) for i, u in enumerate(us[1:])]
    params = [(Fraction(l["eps"]), l["N"]) for l in obj["links"]]
    checks = verify_chain(nodes, params)
    checks["recorded_minima"] = [list(n.farey.minima_exp) == rec["minima"] for n, rec in zip(nodes, obj["nodes"])]
    checks["recorded_checks_match"] = checks_equal(obj["checks"], {k: v for k, v in checks.items()
                                                                   if k != "recorded_minima"})
    root = us[0]
    if obj["kind"] == "di":
        eps, N = params[0]
        cert = build_DI_certificate(F, d, eps, N, len(params), root, obj["chooser"])
    else:
        cert = build_sing_prefix(F, d, len(params), obj["schedule"][0]["i"], root, obj["chooser"])
    identical = canonical_dumps(cert.to_json()) == canonical_dumps(obj)
    return ReplayResult(checksum_ok, checks, identical)


def checks_equal(a, b) -> bool:
    return canonical_dumps({"x": a}) == canonical_dumps({"x": b})
