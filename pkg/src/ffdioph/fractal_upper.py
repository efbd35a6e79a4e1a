"""The covering (Q_eps, sigma_eps, B) behind the upper bound for dim DI_d(eps).

For u in Q:

* D(u) = {v in Q : |u| <= |v|, v in H_u, ||hat u - hat v|| <= lambda_1(u) / |u|}
* E(u, v, eps) = {w in Q : |v| < |w|, w not in H_u,
  ||hat v - hat w|| < eps / (|v| |w|^{1/d})}
* sigma_eps(u) = union of E(u, v, eps) over v in D(u)
* Q_eps = {u : hat lambda_1(u) < eps}, B(u) = B(hat u, |u|^{-(1 + 1/d)})

Both sets are enumerated shell by shell (|v| = q^k |u|) through the fibres
of pi_u and pi_v over lattice points in a ball, so every element is found
exactly once.  Sets contain all unit multiples of their elements.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from . import bounds as bnd
from .diophantine import (
    ApproxPair,
    BestApproxSeq,
    FareyLattice,
    best_approx_sequence,
    di_test,
    di_threshold_holds,
    farey_lattice,
    fiber_base_scaled,
    fiber_from_base,
    hyperplane_normal,
    in_H_u,
)
from .ffpoly import NEG_INF, Poly, enumerate_polys_upto
from .laurent import Ball, LVec
from .lattice import ReducedLattice


class NotInDError(ValueError):
    """enumerate_E was called with v outside D(u)."""


# ---------------------------------------------------------------------------
# nodes


@dataclass
class UpperNode:
    u: ApproxPair
    farey: FareyLattice
    normal: list[Poly]

    @classmethod
    def make(cls, u: ApproxPair) -> "UpperNode":
        f = farey_lattice(u)
        return cls(u, f, hyperplane_normal(f))

    @property
    def d(self) -> int:
        return self.u.d

    @property
    def q(self) -> int:
        return self.u.field.q

    @property
    def radius_exp(self) -> Fraction:
        """log_q of |u|^{-(1 + 1/d)}."""
        return Fraction(-(self.d + 1) * self.u.norm_exp, self.d)

    @property
    def ball(self) -> Ball:
        # norms live in q^Z, so a ball of radius q^r is the ball of radius q^floor(r)
        return Ball(self.u.hat, math.floor(self.radius_exp))

    def lambda1_hat_exp(self) -> Fraction:
        return self.farey.normalized_exp(1)

    def in_Q_eps(self, eps) -> bool:
        """hat lambda_1(u) < eps."""
        return di_threshold_holds(self.u.norm_exp, self.farey.r_exp, self.d, Fraction(eps), self.q)

    def to_json(self) -> dict:
        return {
            "u": self.u.to_json(),
            "minima": list(self.farey.minima_exp),
            "ball_radius_exp": str(self.radius_exp),
        }


# ---------------------------------------------------------------------------
# lattice points and fibres


def lattice_points(L: ReducedLattice, k: int, bound_exp: int) -> Iterator[list[Poly]]:
    """Numerators y = sum c_j P_j (vector = y / s) over the first k basis
    vectors with ||sum c_j xi_j|| <= q^bound_exp, the zero vector included."""
    F = L.field
    mins = L.minima_exp[:k]
    ranges = [list(enumerate_polys_upto(F, bound_exp - e)) if bound_exp - e >= 0 else [F.zero] for e in mins]

    def rec(j: int, acc: list[Poly]) -> Iterator[list[Poly]]:
        if j == k:
            yield acc
            return
        col = L.cols[j]
        for c in ranges[j]:
            if c:
                yield from rec(j + 1, [a + c * f for a, f in zip(acc, col)])
            else:
                yield from rec(j + 1, acc)

    yield from rec(0, [F.zero] * L.n)


def _fibre_over(u: ApproxPair, farey: FareyLattice, y: Sequence[Poly], k: int) -> Iterator[ApproxPair]:
    """v in Q with pi_u(v) = y / s and |v| = q^k |u|."""
    lc = u.b.lc
    base = fiber_base_scaled(u, [f.scale(lc) for f in y])
    for v in fiber_from_base(u, base, k):
        if v.in_Q():
            yield v


def pi_norm_exp(u: ApproxPair, v: ApproxPair) -> int | float:
    """log_q ||pi_u(v)|| = log_q ||b_v hat u - a_v||."""
    return max((v.b * au - u.b * av).deg for au, av in zip(u.a, v.a)) - u.norm_exp


def hat_distance_exp(u: ApproxPair, v: ApproxPair) -> int | float:
    """log_q ||hat u - hat v||."""
    return max((v.b * au - u.b * av).deg for au, av in zip(u.a, v.a)) - u.norm_exp - v.norm_exp


# ---------------------------------------------------------------------------
# D(u) and E(u, v, eps)


def in_D(node: UpperNode, v: ApproxPair) -> bool:
    """Definition-level membership test for D(u)."""
    u = node.u
    if not v.in_Q() or v.norm_exp < u.norm_exp:
        return False
    if not in_H_u(u, v, normal=node.normal):
        return False
    return hat_distance_exp(u, v) <= node.farey.r_exp - u.norm_exp


def _E_radius_ok(v: ApproxPair, w: ApproxPair, eps: Fraction) -> bool:
    """||hat v - hat w|| < eps / (|v| |w|^{1/d}), raised to the d-th power."""
    q = v.field.q
    d = v.d
    e = hat_distance_exp(v, w)
    if e == NEG_INF:
        return True
    return Fraction(q) ** (d * (e + v.norm_exp) + w.norm_exp) < eps**d


def in_E(node: UpperNode, v: ApproxPair, w: ApproxPair, eps) -> bool:
    """Definition-level membership test for E(u, v, eps)."""
    eps = Fraction(eps)
    if not w.in_Q() or w.norm_exp <= v.norm_exp:
        return False
    if in_H_u(node.u, w, normal=node.normal):
        return False
    return _E_radius_ok(v, w, eps)


def enumerate_D(node: UpperNode, cutoff: int) -> list[list[ApproxPair]]:
    """Shells D_k(u), k = 0..cutoff, via the fibres of pi_u over
    Lambda'_u cap B(0, q^k lambda_1(u))."""
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    u = node.u
    L = node.farey.lattice
    e1 = node.farey.r_exp
    shells = []
    for k in range(cutoff + 1):
        shell = []
        for y in lattice_points(L, node.d - 1, k + e1):
            if k > 0 and not any(y):
                continue
            shell.extend(_fibre_over(u, node.farey, y, k))
        shells.append(shell)
    return shells


def _max_exp_below(q: int, d: int, rhs: Fraction) -> int | None:
    """Largest integer e with q^{e d} < rhs (rhs > 0)."""
    e = math.floor(math.log(rhs, q) / d) + 2
    while Fraction(q) ** (e * d) >= rhs:
        e -= 1
    return e


def enumerate_E(node: UpperNode, v: ApproxPair, eps, cutoff: int, farey_v: FareyLattice | None = None,
                check_v: bool = True) -> list[list[ApproxPair]]:
    """Shells E_k(u, v, eps), k = 1..cutoff (index 0 is always empty).

    pi_v(w) ranges over Lambda_v cap B(0, q^e) where e is the largest
    exponent allowed by the strict radius condition at that shell, and the
    fibre elements are then filtered by w not in H_u.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if check_v and not in_D(node, v):
        raise NotInDError(f"{v} is not in D({node.u})")
    fv = farey_lattice(v) if farey_v is None else farey_v
    q, d, V = node.q, node.d, v.norm_exp
    shells: list[list[ApproxPair]] = [[]]
    for k in range(1, cutoff + 1):
        # ||beta||^d < eps^d |w|^{d-1} / |v|^d with |w| = q^{V+k}
        e = _max_exp_below(q, d, eps**d * Fraction(q) ** ((d - 1) * k - V))
        shell = []
        if e >= fv.r_exp:
            for y in lattice_points(fv.lattice, d, e):
                if not any(y):
                    continue
                for w in _fibre_over(v, fv, y, k):
                    if not in_H_u(node.u, w, normal=node.normal):
                        shell.append(w)
        shells.append(shell)
    return shells


# ---------------------------------------------------------------------------
# child sums


def _check_t(t, d: int) -> Fraction:
    t = Fraction(t)
    if t <= d:
        raise ValueError(f"t = {t} must exceed d = {d}")
    return t


def _geometric_tail(coeff: Fraction, ratio_exp: Fraction, start: int, q: int):
    """sum_{k >= start} coeff q^{-k ratio_exp}."""
    num = bnd.mul(coeff, bnd.qpow_value(q, -start * ratio_exp))
    den = bnd.add(Fraction(1), bnd.mul(Fraction(-1), bnd.qpow_value(q, -ratio_exp)))
    return bnd.div(num, den)


def D_shell_bound(q: int, d: int, k: int) -> int:
    """(q-1) q^{d-1} q^{kd}."""
    return (q - 1) * q ** (d - 1) * q ** (k * d)


def E_shell_bound(q: int, d: int, eps, k: int) -> Fraction:
    """(q-1) (q+q^2)^d eps^d q^{kd}."""
    return (q - 1) * (q + q * q) ** d * Fraction(eps) ** d * q ** (k * d)


def D_closed_form(q: int, d: int, t):
    """(q-1) q^{t-1} / (q^{t-d} - 1)."""
    t = Fraction(t)
    return bnd.div(bnd.mul(q - 1, bnd.qpow_value(q, t - 1)), bnd.add(bnd.qpow_value(q, t - d), Fraction(-1)))


def E_closed_form(q: int, d: int, eps, t):
    """(q-1) (q+q^2)^d eps^d / (q^{t-d} - 1)."""
    t = Fraction(t)
    c = (q - 1) * (q + q * q) ** d * Fraction(eps) ** d
    return bnd.div(Fraction(c), bnd.add(bnd.qpow_value(q, t - d), Fraction(-1)))


@dataclass
class ChildSum:
    """Truncated sum sum_k count_k q^{-k t}, its certified tail, and the closed form."""

    counts: list[int]
    partial: object
    tail: object
    bound: object

    @property
    def within_bound(self) -> bool:
        return bnd.certified_leq(self.partial, self.bound)

    def to_json(self) -> dict:
        return {
            "counts": self.counts,
            "partial": bnd.to_json_number(self.partial),
            "tail": bnd.to_json_number(self.tail),
            "bound": bnd.to_json_number(self.bound),
            "within_bound": self.within_bound,
        }


def _shell_sum(counts: Sequence[int], t: Fraction, q: int, first: int = 0):
    total = Fraction(0)
    for k, c in enumerate(counts):
        if c and k >= first:
            total = bnd.add(total, bnd.mul(c, bnd.qpow_value(q, -k * t)))
    return total


def child_sum_D(node: UpperNode, t, cutoff: int, shells: list[list[ApproxPair]] | None = None) -> ChildSum:
    """sum over v in D(u), k <= cutoff of (|u|/|v|)^t against (q-1) q^{t-1} / (q^{t-d} - 1)."""
    q, d = node.q, node.d
    t = _check_t(t, d)
    shells = enumerate_D(node, cutoff) if shells is None else shells
    counts = [len(s) for s in shells]
    tail = _geometric_tail(Fraction(D_shell_bound(q, d, 0)), t - d, cutoff + 1, q)
    return ChildSum(counts, _shell_sum(counts, t, q), tail, D_closed_form(q, d, t))


def child_sum_E(node: UpperNode, v: ApproxPair, eps, t, cutoff: int,
                shells: list[list[ApproxPair]] | None = None) -> ChildSum:
    """sum over w in E(u, v, eps), k <= cutoff of (|v|/|w|)^t against the closed form."""
    q, d = node.q, node.d
    t = _check_t(t, d)
    eps = Fraction(eps)
    shells = enumerate_E(node, v, eps, cutoff) if shells is None else shells
    counts = [len(s) for s in shells]
    tail = _geometric_tail(E_shell_bound(q, d, eps, 0), t - d, cutoff + 1, q)
    return ChildSum(counts, _shell_sum(counts, t, q, first=1), tail, E_closed_form(q, d, eps, t))


@dataclass
class ChildEnumeration:
    parent: UpperNode
    eps: Fraction
    cutoff: int
    D_by_k: list[list[ApproxPair]]
    E_by_k: dict[ApproxPair, list[list[ApproxPair]]] = field(default_factory=dict)

    def sigma(self) -> set[ApproxPair]:
        """The enumerated part of sigma_eps(u)."""
        return {w for shells in self.E_by_k.values() for s in shells for w in s}

    def to_json(self) -> dict:
        return {
            "u": self.parent.u.to_json(),
            "eps": str(self.eps),
            "cutoff": self.cutoff,
            "D": [[v.to_json() for v in s] for s in self.D_by_k],
            "E": [
                {"v": v.to_json(), "shells": [[w.to_json() for w in s] for s in shells]}
                for v, shells in self.E_by_k.items()
            ],
        }


def enumerate_children(node: UpperNode, eps, cutoff: int) -> ChildEnumeration:
    eps = Fraction(eps)
    D = enumerate_D(node, cutoff)
    out = ChildEnumeration(node, eps, cutoff, D)
    for shell in D:
        for v in shell:
            out.E_by_k[v] = enumerate_E(node, v, eps, cutoff, check_v=False)
    return out


# ---------------------------------------------------------------------------
# contraction


@dataclass
class ContractionResult:
    holds: bool
    s: Fraction
    t: Fraction
    partial: object
    tail: object
    total: object
    sigma_count: int
    closed_form: object

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "s": str(self.s),
            "t": str(self.t),
            "partial": bnd.to_json_number(self.partial),
            "tail": bnd.to_json_number(self.tail),
            "total": bnd.to_json_number(self.total),
            "sigma_count": self.sigma_count,
            "closed_form_product": bnd.to_json_number(self.closed_form),
        }


def contraction_check(node: UpperNode, s, eps, cutoff: int,
                      children: ChildEnumeration | None = None) -> ContractionResult:
    """Is sum over sigma_eps(u) of (|u|/|w|)^{(1+1/d)s} <= 1?

    The enumerated part of sigma_eps(u) is summed exactly (each w once).
    Everything not enumerated is covered by two certified tails: v in D(u)
    beyond the cutoff (shell bound times the E closed form), and w beyond
    the cutoff of an enumerated v (the E shell bound).
    """
    q, d = node.q, node.d
    s = Fraction(s)
    eps = Fraction(eps)
    if not (Fraction(d * d, d + 1) < s <= d):
        raise ValueError(f"s = {s} must lie in (d^2/(d+1), d]")
    t = Fraction(d + 1, d) * s
    ch = enumerate_children(node, eps, cutoff) if children is None else children
    U = node.u.norm_exp
    sigma = ch.sigma()
    by_offset = Counter(w.norm_exp - U for w in sigma)
    partial = Fraction(0)
    for off, c in sorted(by_offset.items()):
        partial = bnd.add(partial, bnd.mul(c, bnd.qpow_value(q, -off * t)))
    E_closed = E_closed_form(q, d, eps, t)
    E_tail = _geometric_tail(E_shell_bound(q, d, eps, 0), t - d, cutoff + 1, q)
    D_tail = _geometric_tail(Fraction(D_shell_bound(q, d, 0)), t - d, cutoff + 1, q)
    D_weight = _shell_sum([len(sh) for sh in ch.D_by_k], t, q)
    tail = bnd.add(bnd.mul(D_weight, E_tail), bnd.mul(D_tail, E_closed))
    total = bnd.add(partial, tail)
    closed = bnd.mul(D_closed_form(q, d, t), E_closed)
    return ContractionResult(bnd.certified_leq(total, Fraction(1)), s, t, partial, tail, total, len(sigma), closed)


# ---------------------------------------------------------------------------
# admissible sequences from theta


@dataclass
class AdmissibleLink:
    u: ApproxPair
    v: ApproxPair
    w: ApproxPair
    v_in_D: bool
    w_in_E: bool

    def to_json(self) -> dict:
        return {"u": self.u.to_json(), "v": self.v.to_json(), "w": self.w.to_json(),
                "v_in_D": self.v_in_D, "w_in_E": self.w_in_E}


@dataclass
class AdmissibleChain:
    nodes: list[UpperNode]
    links: list[AdmissibleLink]
    exhausted: bool
    message: str
    sequence: BestApproxSeq

    @property
    def verified(self) -> bool:
        return all(l.v_in_D and l.w_in_E for l in self.links)

    def to_json(self) -> dict:
        return {
            "nodes": [n.to_json() for n in self.nodes],
            "links": [l.to_json() for l in self.links],
            "exhausted": self.exhausted,
            "message": self.message,
            "verified": self.verified,
        }


def admissible_from_sequence(seq: BestApproxSeq, eps) -> AdmissibleChain:
    """Extract the sigma_eps-admissible subsequence from best approximations.

    Start at the first index of the final run inside Q_eps; the next index
    is the first later u_m outside H_{u_{n_i}}, witnessed by v = u_{m-1}.
    Each link is re-verified against the definitions of D and E.
    """
    eps = Fraction(eps)
    entries = seq.entries
    passes = di_test(seq, eps).passes if entries else []
    i = len(passes)
    while i > 0 and passes[i - 1]:
        i -= 1
    if i == len(passes):
        return AdmissibleChain([], [], True, "no final run of the prefix lies in Q_eps", seq)
    nodes = [UpperNode.make(entries[i])]
    links: list[AdmissibleLink] = []
    while True:
        cur = nodes[-1]
        m = next((j for j in range(i + 1, len(entries)) if not in_H_u(cur.u, entries[j], normal=cur.normal)), None)
        if m is None:
            msg = "horizon exhausted before the next escape from H_u"
            if seq.rational:
                msg = "theta is rational: the sequence ended with A = 0"
            return AdmissibleChain(nodes, links, True, msg, seq)
        v, w = entries[m - 1], entries[m]
        links.append(AdmissibleLink(cur.u, v, w, in_D(cur, v), in_E(cur, v, w, eps)))
        nodes.append(UpperNode.make(w))
        i = m


def admissible_from_theta(theta: LVec, eps, degree_bound: int) -> AdmissibleChain:
    """Best approximations of theta up to degree_bound, then :func:`admissible_from_sequence`.

    K-linear independence of 1, theta_1, ..., theta_d cannot be certified from
    a finite prefix; a theta whose approximations stay inside one H_u is
    reported as exhausted.
    """
    return admissible_from_sequence(best_approx_sequence(theta, degree_bound), eps)
