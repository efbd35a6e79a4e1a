"""Lattices over F_q[x] inside K^n with the sup norm.

A lattice is given by generating columns with rational entries.  After
clearing a common monic denominator s the generators form a polynomial
matrix M, and reduction brings M to Popov form: a column-reduced matrix whose
pivot entries are monic and dominate their rows.  The Popov form of a module
is unique, so the resulting basis xi = P / s depends only on the lattice and
not on the generators we started from.  Column degrees of P give the
successive minima directly.

The brute-force helpers at the bottom never look at the reduced basis; they
work from the input generators and serve as independent oracles.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Iterable, Sequence

from .ffpoly import NEG_INF, FieldSpec, Poly, gcd_many, poly_lcm
from .laurent import Laurent, LVec, qpow

try:
    import numpy as np
except ImportError:  # pragma: no cover - numpy is a declared dependency
    np = None


class RankError(ValueError):
    """Generators do not span a lattice of the expected rank."""


class LatticeBasis:
    """Generating columns of a lattice; every entry must be rational."""

    __slots__ = ("field", "n", "columns")

    def __init__(self, columns: Iterable[LVec]):
        cols = tuple(columns)
        if not cols:
            raise RankError("a lattice needs at least one generator")
        n = cols[0].d
        for c in cols:
            if c.d != n:
                raise ValueError("generators have different lengths")
            if not c.is_rational:
                raise ValueError("lattice generators must have rational entries")
        self.field = cols[0].field
        self.n = n
        self.columns = cols

    @classmethod
    def from_polys(cls, F: FieldSpec, columns: Sequence[Sequence[Poly]], den: Poly | None = None) -> "LatticeBasis":
        den = F.one if den is None else den
        return cls(LVec.rational(col, den) for col in columns)

    @classmethod
    def identity(cls, F: FieldSpec, n: int) -> "LatticeBasis":
        return cls.from_polys(F, [[F.one if i == j else F.zero for i in range(n)] for j in range(n)])

    @classmethod
    def diagonal(cls, F: FieldSpec, exps: Sequence[int]) -> "LatticeBasis":
        """diag(x^e_1, ..., x^e_n) applied to R^n."""
        n = len(exps)
        cols = []
        for j, e in enumerate(exps):
            col = []
            for i in range(n):
                if i != j:
                    col.append(Laurent.zero(F))
                elif e >= 0:
                    col.append(Laurent.from_poly(F.monomial(e)))
                else:
                    col.append(Laurent.rational(F.one, F.monomial(-e)))
            cols.append(LVec(col))
        return cls(cols)

    def cleared(self) -> tuple[Poly, list[list[Poly]]]:
        """(s, M) with s monic and columns = M / s."""
        F = self.field
        s = F.one
        for col in self.columns:
            for e in col:
                if e.num:
                    s = poly_lcm(s, e.den)
        M = []
        for col in self.columns:
            M.append([e.num * (s // e.den) if e.num else F.zero for e in col])
        return s, M

    def transform(self, g: Sequence[Sequence[Laurent]]) -> "LatticeBasis":
        """The lattice g * Lambda for an n x n matrix g of rational values (rows first)."""
        F = self.field
        out = []
        for col in self.columns:
            entries = []
            for row in g:
                acc = Laurent.zero(F)
                for gij, cj in zip(row, col):
                    acc = acc + gij * cj
                entries.append(acc)
            out.append(LVec(entries))
        return LatticeBasis(out)

    def change_basis(self, U: Sequence[Sequence[Laurent]]) -> "LatticeBasis":
        """Columns of B * U; the same lattice when U is unimodular over R."""
        F = self.field
        r = len(self.columns)
        out = []
        for j in range(len(U[0])):
            acc = [Laurent.zero(F)] * self.n
            for i in range(r):
                if not U[i][j].is_exact_zero():
                    acc = [a + U[i][j] * c for a, c in zip(acc, self.columns[i])]
            out.append(LVec(acc))
        return LatticeBasis(out)

    def to_json(self) -> dict:
        return {
            "d": self.n,
            "columns": [[[e.num.to_json(), e.den.to_json()] for e in col] for col in self.columns],
        }

    @classmethod
    def from_json(cls, F: FieldSpec, obj: dict) -> "LatticeBasis":
        cols = []
        for col in obj["columns"]:
            cols.append(LVec(Laurent.rational(F.poly(f), F.poly(g)) for f, g in col))
        basis = cls(cols)
        if basis.n != int(obj["d"]):
            raise ValueError("column length disagrees with declared dimension")
        return basis

    def __repr__(self) -> str:
        return f"LatticeBasis({list(self.columns)!r})"


# ---------------------------------------------------------------------------
# Popov reduction


def _leading(col: Sequence[Poly]) -> tuple[int | float, int]:
    """(column degree, pivot row): the last row attaining the degree."""
    best_d, best_i = NEG_INF, -1
    for i, f in enumerate(col):
        if f and f.deg >= best_d:
            best_d, best_i = f.deg, i
    return best_d, best_i


def _axpy(F: FieldSpec, target: list[Poly], c: int, e: int, src: list[Poly]) -> list[Poly]:
    """target - c * x^e * src."""
    nc = F.neg(c)
    return [t + f.shift(e).scale(nc) if f else t for t, f in zip(target, src)]


def weak_popov(columns: Sequence[Sequence[Poly]]) -> list[list[Poly]]:
    """Column weak Popov form by simple transformations (Mulders-Storjohann).

    Zero columns produced by dependent generators are dropped.
    """
    cols = [list(c) for c in columns if any(c)]
    if not cols:
        return cols
    F = cols[0][0].field
    while True:
        seen: dict[int, int] = {}
        clash = None
        for j, c in enumerate(cols):
            _, p = _leading(c)
            if p in seen:
                clash = (seen[p], j, p)
                break
            seen[p] = j
        if clash is None:
            return cols
        i, j, p = clash
        di, dj = cols[i][p].deg, cols[j][p].deg
        if di > dj:
            i, j, di, dj = j, i, dj, di
        c = F.mul(cols[j][p].lc, F.inv(cols[i][p].lc))
        cols[j] = _axpy(F, cols[j], c, dj - di, cols[i])
        if not any(cols[j]):
            del cols[j]


def popov_form(columns: Sequence[Sequence[Poly]]) -> list[list[Poly]]:
    """Popov form, columns sorted by (degree, pivot row).

    Pivot entries are monic and every other entry in a pivot row has smaller
    degree than the pivot.  The result depends only on the module spanned.
    """
    cols = weak_popov(columns)
    if not cols:
        return cols
    F = cols[0][0].field
    info = []
    for k, c in enumerate(cols):
        deg, p = _leading(c)
        lc = c[p].lc
        if lc != 1:
            inv = F.inv(lc)
            cols[k] = [f.scale(inv) for f in c]
        info.append((deg, p))
    for k in range(len(cols)):
        while True:
            best = None
            for j, (dj, pj) in enumerate(info):
                if j == k:
                    continue
                f = cols[k][pj]
                if f and f.deg >= dj and (best is None or (f.deg, pj) > best[:2]):
                    best = (f.deg, pj, j)
            if best is None:
                break
            a, pj, j = best
            cols[k] = _axpy(F, cols[k], cols[k][pj].lc, a - info[j][0], cols[j])
    order = sorted(range(len(cols)), key=lambda k: info[k])
    return [cols[k] for k in order]


class ReducedLattice:
    """A lattice with its canonical orthogonal basis xi_j = P_j / s."""

    __slots__ = ("field", "n", "s", "cols", "degrees", "pivots", "_xi")

    def __init__(self, F: FieldSpec, n: int, s: Poly, cols: list[list[Poly]]):
        self.field = F
        self.n = n
        self.s = s
        self.cols = cols
        lead = [_leading(c) for c in cols]
        self.degrees = tuple(int(d) for d, _ in lead)
        self.pivots = tuple(p for _, p in lead)
        self._xi = None

    @property
    def xi(self) -> tuple[LVec, ...]:
        if self._xi is None:
            self._xi = tuple(LVec.rational(c, self.s) for c in self.cols)
        return self._xi

    @property
    def rank(self) -> int:
        return len(self.cols)

    @property
    def minima_exp(self) -> tuple[int, ...]:
        ds = self.s.deg
        return tuple(d - ds for d in self.degrees)

    @property
    def minima(self) -> tuple[Fraction, ...]:
        return tuple(qpow(self.field.q, e) for e in self.minima_exp)

    @property
    def det_exp(self) -> int:
        return sum(self.minima_exp)

    @property
    def det(self) -> Fraction:
        return qpow(self.field.q, self.det_exp)

    def vector(self, coeffs: Sequence[Poly]) -> LVec:
        """sum c_j xi_j."""
        F = self.field
        entries = [F.zero] * self.n
        for c, col in zip(coeffs, self.cols):
            if c:
                entries = [a + c * f for a, f in zip(entries, col)]
        return LVec.rational(entries, self.s)

    def combination_norm_exp(self, coeffs: Sequence[Poly]) -> int | float:
        """log_q of ||sum c_j xi_j|| via orthogonality: max |c_j| ||xi_j||."""
        return max((c.deg + e for c, e in zip(coeffs, self.minima_exp) if c), default=NEG_INF)

    def coordinates(self, y: LVec) -> list[Laurent] | None:
        """Coefficients of y in the xi basis over K, or None when y is outside the span."""
        F = self.field
        cols = [[Laurent.from_poly(f) for f in col] for col in self.cols]
        rhs = [e * self.s for e in y]
        return solve_rational(F, cols, rhs)

    def lattice_coordinates(self, y: LVec) -> list[Poly] | None:
        """Polynomial coordinates of y, or None when y is not a lattice vector."""
        c = self.coordinates(y)
        if c is None or any(e.den.deg > 0 for e in c):
            return None
        return [e.num for e in c]

    def contains(self, y: LVec) -> bool:
        return self.lattice_coordinates(y) is not None

    def in_span(self, y: LVec, k: int | None = None) -> bool:
        """Is y in the K-span of xi_1..xi_k (all of xi by default)?"""
        k = self.rank if k is None else k
        if k == 0:
            return all(e.is_exact_zero() for e in y)
        cols = [[Laurent.from_poly(f) for f in col] for col in self.cols[:k]]
        return solve_rational(self.field, cols, [e * self.s for e in y]) is not None

    def sub(self, k: int) -> "ReducedLattice":
        """The sublattice spanned by xi_1..xi_k (still in Popov form)."""
        return ReducedLattice(self.field, self.n, self.s, self.cols[:k])

    def basis(self) -> LatticeBasis:
        return LatticeBasis(self.xi)

    def to_json(self) -> dict:
        out = self.basis().to_json()
        out["minima"] = list(self.minima_exp)
        return out

    def __repr__(self) -> str:
        return f"ReducedLattice(minima_exp={self.minima_exp}, xi={list(self.xi)!r})"


def column_reduce(basis: LatticeBasis, expect_rank: int | None = None) -> ReducedLattice:
    """Reduce a generating set to the canonical orthogonal basis.

    ``expect_rank`` defaults to the ambient dimension (a full-rank lattice).
    """
    s, M = basis.cleared()
    P = popov_form(M)
    want = basis.n if expect_rank is None else expect_rank
    if len(P) != want:
        raise RankError(f"generators span rank {len(P)}, expected {want}")
    return ReducedLattice(basis.field, basis.n, s, P)


def successive_minima(L: ReducedLattice) -> tuple[Fraction, ...]:
    return L.minima


def orthogonality_defect_free(L: ReducedLattice) -> bool:
    """Leading coefficient vectors of the columns are independent."""
    F = L.field
    rows = []
    for col, dg in zip(L.cols, L.degrees):
        rows.append([f.coeff(dg) for f in col])
    return _fq_rank(F, rows) == len(rows)


# ---------------------------------------------------------------------------
# exact linear algebra


def poly_det(rows: Sequence[Sequence[Poly]]) -> Poly:
    """Determinant of a square polynomial matrix by fraction-free elimination."""
    n = len(rows)
    if n == 0:
        raise ValueError("empty matrix")
    F = rows[0][0].field
    A = [list(r) for r in rows]
    sign = 1
    prev = F.one
    for k in range(n - 1):
        if not A[k][k]:
            for i in range(k + 1, n):
                if A[i][k]:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return F.zero
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]).exact_div(prev)
        prev = A[k][k]
    det = A[n - 1][n - 1]
    return -det if sign < 0 else det


def _minor(M_cols: Sequence[Sequence[Poly]], rows: Sequence[int], cols: Sequence[int]) -> Poly:
    return poly_det([[M_cols[j][i] for j in cols] for i in rows])


def determinant_exp(basis: LatticeBasis) -> int:
    """log_q of the covolume, from the input generators.

    For r independent generators in K^n this is the largest r x r minor, which
    for a full-rank lattice is |det|.  No reduction is involved.
    """
    s, M = basis.cleared()
    r = len(M)
    if r > basis.n:
        raise RankError("more generators than the ambient dimension; reduce first")
    best = NEG_INF
    for rows in itertools.combinations(range(basis.n), r):
        m = _minor(M, rows, range(r))
        if m:
            best = max(best, m.deg)
    if best == NEG_INF:
        raise RankError("generators are linearly dependent")
    return int(best) - r * s.deg


def determinant(basis: LatticeBasis) -> Fraction:
    return qpow(basis.field.q, determinant_exp(basis))


def solve_rational(F: FieldSpec, cols: Sequence[Sequence[Laurent]], rhs: Sequence[Laurent]) -> list[Laurent] | None:
    """Solve sum_j c_j cols[j] = rhs over K; None if inconsistent.

    Columns must be linearly independent.  All values are rational.
    """
    n, r = len(rhs), len(cols)
    A = [[cols[j][i] for j in range(r)] + [rhs[i]] for i in range(n)]
    piv_cols = []
    row = 0
    for j in range(r):
        pr = next((i for i in range(row, n) if not A[i][j].is_exact_zero()), None)
        if pr is None:
            raise RankError("columns are linearly dependent")
        A[row], A[pr] = A[pr], A[row]
        pv = A[row][j]
        A[row] = [a / pv for a in A[row]]
        for i in range(n):
            if i != row and not A[i][j].is_exact_zero():
                f = A[i][j]
                A[i] = [a - f * b for a, b in zip(A[i], A[row])]
        piv_cols.append(j)
        row += 1
    for i in range(row, n):
        if not A[i][r].is_exact_zero():
            return None
    return [A[i][r] for i in range(r)]


def _fq_rank(F: FieldSpec, rows: Sequence[Sequence[int]]) -> int:
    A = [list(r) for r in rows if any(r)]
    if not A:
        return 0
    ncols = len(A[0])
    rank = 0
    for j in range(ncols):
        pr = next((i for i in range(rank, len(A)) if A[i][j]), None)
        if pr is None:
            continue
        A[rank], A[pr] = A[pr], A[rank]
        inv = F.inv(A[rank][j])
        A[rank] = [F.mul(inv, a) for a in A[rank]]
        for i in range(len(A)):
            if i != rank and A[i][j]:
                f = A[i][j]
                A[i] = [F.sub(a, F.mul(f, b)) for a, b in zip(A[i], A[rank])]
        rank += 1
        if rank == len(A):
            break
    return rank


# ---------------------------------------------------------------------------
# counting and covering radii


def count_points_in_ball(L: ReducedLattice, r_exp: int) -> int:
    """#(L intersect B(0, q^r_exp)) = prod ceil(q r / lambda_i)."""
    q = L.field.q
    return q ** sum(max(0, 1 + r_exp - e) for e in L.minima_exp)


def covering_radius_exp(L: ReducedLattice) -> int:
    """log_q e(L) = log_q lambda_d - 2."""
    if L.rank != L.n:
        raise RankError("covering radius needs a full-rank lattice")
    return L.minima_exp[-1] - 2


def covering_radius(L: ReducedLattice) -> Fraction:
    return qpow(L.field.q, covering_radius_exp(L))


def covering_radius_plus_hyperplane_exp(L: ReducedLattice, generators: LatticeBasis | None = None) -> int:
    """log_q e(L + H') with H' the span of xi_1..xi_{d-1}.

    The quotient K^d / H' is one-dimensional and the image of L is a rank one
    lattice.  Its generator is the gcd of the xi_d-coordinates of any
    generating set, and its norm is that gcd times ||xi_d|| by orthogonality.
    """
    if L.n < 2:
        raise ValueError("the hyperplane version needs d >= 2")
    if L.rank != L.n:
        raise RankError("covering radius needs a full-rank lattice")
    gens = generators.columns if generators is not None else L.xi
    last = []
    for y in gens:
        c = L.lattice_coordinates(y)
        if c is None:
            raise ValueError("generator is not a lattice vector")
        last.append(c[-1])
    g = gcd_many(last)
    if not g:
        raise RankError("generators lie in the hyperplane")
    quotient_exp = g.deg + L.minima_exp[-1]
    return int(quotient_exp) - 2


def covering_radius_plus_hyperplane(L: ReducedLattice, generators: LatticeBasis | None = None) -> Fraction:
    return qpow(L.field.q, covering_radius_plus_hyperplane_exp(L, generators))


# ---------------------------------------------------------------------------
# random instances


def random_poly(F: FieldSpec, rng: random.Random, max_deg: int, monic: bool = False) -> Poly:
    if max_deg < 0:
        return F.zero
    coeffs = [rng.randrange(F.q) for _ in range(max_deg + 1)]
    if monic:
        coeffs[-1] = 1
    return Poly(F, coeffs)


def random_lattice(F: FieldSpec, n: int, rng: random.Random, max_deg: int = 1, den_deg: int = 1) -> LatticeBasis:
    """A random full-rank lattice with one random monic denominator."""
    while True:
        s = random_poly(F, rng, rng.randint(0, den_deg), monic=True)
        M = [[random_poly(F, rng, rng.randint(-1, max_deg)) for _ in range(n)] for _ in range(n)]
        if poly_det([[M[j][i] for j in range(n)] for i in range(n)]):
            return LatticeBasis.from_polys(F, M, s)


def random_unimodular(F: FieldSpec, n: int, rng: random.Random, steps: int = 6, max_deg: int = 1) -> list[list[Laurent]]:
    """A product of elementary matrices over R, as rows of Laurent values."""
    g = [[F.one if i == j else F.zero for j in range(n)] for i in range(n)]
    for _ in range(steps):
        if n == 1:
            break
        i, j = rng.sample(range(n), 2)
        f = random_poly(F, rng, max_deg)
        g[i] = [a + f * b for a, b in zip(g[i], g[j])]
    c = rng.randrange(1, F.q)
    g[0] = [a.scale(c) for a in g[0]]
    return [[Laurent.from_poly(a) for a in row] for row in g]


def random_isometry(F: FieldSpec, n: int, rng: random.Random, depth: int = 2) -> list[list[Laurent]]:
    """Permutation times unipotent upper-triangular with entries of norm <= 1."""
    perm = list(range(n))
    rng.shuffle(perm)
    U = []
    for i in range(n):
        row = []
        for j in range(n):
            if j < i:
                row.append(Laurent.zero(F))
            elif j == i:
                row.append(Laurent.from_poly(F.one))
            else:
                k = rng.randint(0, depth)
                row.append(Laurent.rational(random_poly(F, rng, k), F.monomial(k)))
        U.append(row)
    return [U[perm[i]] for i in range(n)]


# ---------------------------------------------------------------------------
# brute-force oracles on the input generators


def inverse_window(basis: LatticeBasis, r_exp: int) -> list[int]:
    """Degree bounds w_i such that every lattice vector B c of norm <= q^r_exp has deg c_i <= w_i.

    Uses c = B^{-1} y and |c_i| <= max_j |(B^{-1})_{ij}| q^r_exp, with
    B^{-1} = s adj(M) / det(M).
    """
    s, M = basis.cleared()
    n = basis.n
    if len(M) != n:
        raise RankError("window needs a square basis")
    det = _minor(M, range(n), range(n))
    if not det:
        raise RankError("basis is singular")
    out = []
    for i in range(n):
        best = NEG_INF
        for j in range(n):
            if n == 1:
                m_deg = 0
            else:
                m = _minor(M, [r for r in range(n) if r != j], [c for c in range(n) if c != i])
                if not m:
                    continue
                m_deg = m.deg
            best = max(best, s.deg + m_deg - det.deg)
        out.append(int(best) + r_exp if best != NEG_INF else -1)
    return out


def _generators(M: Sequence[Sequence[Poly]], window: Sequence[int]) -> list[tuple[int, int, list[Poly]]]:
    gens = []
    for i, col in enumerate(M):
        for k in range(window[i] + 1):
            gens.append((i, k, [f.shift(k) for f in col]))
    return gens


def _flatten(F: FieldSpec, vecs: Sequence[Sequence[Poly]], n: int, width: int) -> list[list[int]]:
    out = []
    for v in vecs:
        row = [0] * (n * width)
        for j, f in enumerate(v):
            for t, c in enumerate(f.coeffs):
                row[j * width + t] = c
        out.append(row)
    return out


ENUM_LIMIT = 1 << 21


def _combinations_np(p: int, g: int, chunk: int = 1 << 15):
    """Digit arrays of every vector in F_p^g, in chunks, index order."""
    total = p**g
    powers = p ** np.arange(g, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        yield start, (idx[:, None] // powers[None, :]) % p


def _coeff_vector(F: FieldSpec, M, gens, digits) -> list[Poly]:
    acc = [F.zero] * len(M)
    for (i, k, _), c in zip(gens, digits):
        if c:
            acc[i] = acc[i] + F.monomial(k, int(c))
    return acc


def count_points_bruteforce(basis: LatticeBasis, r_exp: int, window: Sequence[int] | None = None,
                            method: str = "auto") -> int:
    """Count lattice vectors of norm <= q^r_exp from the input generators.

    ``method`` is "enumerate" (visit every coefficient vector in the window),
    "linear" (the points in the ball form an F_q-subspace of the window, so
    the count is q^nullity of the high-degree coefficient map) or "auto".
    """
    F = basis.field
    s, M = basis.cleared()
    if window is None:
        window = inverse_window(basis, r_exp)
    top = r_exp + s.deg
    gens = _generators(M, window)
    g = len(gens)
    if g == 0:
        return 1
    width = max(len(f.coeffs) for _, _, v in gens for f in v) + 1
    lo = max(top + 1, 0)
    high = []
    for _, _, v in gens:
        row = []
        for f in v:
            row.extend(f.coeffs[lo:] + (0,) * (width - max(len(f.coeffs), lo)))
        high.append(row)
    if method == "auto":
        method = "enumerate" if F.q**g <= ENUM_LIMIT else "linear"
    if method == "linear":
        return F.q ** (g - _fq_rank(F, high))
    if np is not None and F.k == 1:
        G = np.array(high, dtype=np.int64)
        count = 0
        for _, digits in _combinations_np(F.p, g):
            V = (digits @ G) % F.p
            count += int(np.count_nonzero(~V.any(axis=1)))
        return count
    count = 0
    for digits in itertools.product(F.elements(), repeat=g):
        acc = [0] * len(high[0])
        for c, row in zip(digits, high):
            if c:
                acc = [F.add(a, F.mul(c, b)) for a, b in zip(acc, row)]
        if not any(acc):
            count += 1
    return count


def _min_norm_in_window(basis: LatticeBasis, window: Sequence[int]) -> tuple[int | float, list[Poly] | None]:
    """Smallest norm exponent over nonzero coefficient vectors in the window.

    Returns (exponent, coefficients of the first minimizer in index order).
    """
    F = basis.field
    s, M = basis.cleared()
    gens = _generators(M, window)
    g = len(gens)
    if g == 0:
        return NEG_INF, None
    n = basis.n
    width = max(len(f.coeffs) for _, _, v in gens for f in v) + 1
    best, best_digits = NEG_INF, None
    if np is not None and F.k == 1:
        G = np.array(_flatten(F, [v for _, _, v in gens], n, width), dtype=np.int64)
        for start, digits in _combinations_np(F.p, g):
            V = ((digits @ G) % F.p).reshape(len(digits), n, width) != 0
            rev = V[:, :, ::-1]
            has = rev.any(axis=2)
            tops = np.where(has, width - 1 - rev.argmax(axis=2), -1)
            norms = tops.max(axis=1)
            if start == 0:
                norms[0] = np.iinfo(np.int64).max
            k = int(norms.argmin())
            val = int(norms[k])
            if best == NEG_INF or val < best:
                best, best_digits = val, digits[k].tolist()
    else:
        for idx, digits in enumerate(itertools.product(F.elements(), repeat=g)):
            if idx == 0:
                continue
            acc = [F.zero] * n
            for c, (_, _, v) in zip(digits, gens):
                if c:
                    acc = [a + f.scale(c) for a, f in zip(acc, v)]
            val = max(f.deg for f in acc)
            if best == NEG_INF or val < best:
                best, best_digits = val, list(digits)
    return best - s.deg, _coeff_vector(F, M, gens, best_digits)


def brute_force_shortest(basis: LatticeBasis, coeff_degree_bound: int) -> LVec:
    """A nonzero lattice vector of minimal norm among B c with deg c_i <= bound."""
    if coeff_degree_bound < 0:
        raise ValueError("empty coefficient window")
    window = [coeff_degree_bound] * len(basis.columns)
    _, coeffs = _min_norm_in_window(basis, window)
    F = basis.field
    s, M = basis.cleared()
    acc = [F.zero] * basis.n
    for c, col in zip(coeffs, M):
        acc = [a + c * f for a, f in zip(acc, col)]
    return LVec.rational(acc, s)


def shortest_norm_exp_oracle(basis: LatticeBasis) -> int:
    """log_q lambda_1 from the generators alone.

    The shortest input column bounds lambda_1, which fixes a rigorous
    coefficient window.  Small windows are enumerated; larger ones are
    settled by lowering the radius until the ball holds only the origin,
    counting with the F_q-linear method.
    """
    F = basis.field
    r0 = min(int(c.norm_exp()) for c in basis.columns)
    window = inverse_window(basis, r0)
    g = sum(w + 1 for w in window if w >= 0)
    if F.q**g <= ENUM_LIMIT:
        exp, _ = _min_norm_in_window(basis, window)
        return int(exp)
    r = r0
    while count_points_bruteforce(basis, r - 1, method="linear") > 1:
        r -= 1
    return r


def covering_radius_bruteforce_exp(basis: LatticeBasis, depth: int) -> int:
    """log_q e(L) by direct search, for tiny lattices (d <= 2) only.

    Every point is congruent mod L to some y with ||y|| < max ||b_j||, and only
    lattice points with ||z|| <= ||y|| can beat the origin, so the search runs
    over y with digits from that bound down to x^-depth.  The result is exact
    once q^-depth is below the true covering distance.
    """
    F = basis.field
    n = basis.n
    s, M = basis.cleared()
    top = max(int(c.norm_exp()) for c in basis.columns) - 1
    window = inverse_window(basis, top)
    gens = _generators(M, window)
    shift = depth
    pts = []
    for digits in itertools.product(F.elements(), repeat=len(gens)):
        acc = [F.zero] * n
        for c, (_, _, v) in zip(digits, gens):
            if c:
                acc = [a + f.scale(c) for a, f in zip(acc, v)]
        if max(f.deg for f in acc) - s.deg <= top:
            pts.append([f.shift(shift) for f in acc])
    span = top + depth + 1
    best = NEG_INF
    for ys in itertools.product(itertools.product(F.elements(), repeat=span), repeat=n):
        y = [Poly(F, ds) * s for ds in ys]
        dist = min(max(((a - b).deg for a, b in zip(y, z)), default=NEG_INF) for z in pts)
        best = max(best, dist)
    return int(best) - shift - s.deg - 1


def apply_matrix(g: Sequence[Sequence[Laurent]], basis: LatticeBasis) -> LatticeBasis:
    return basis.transform(g)
