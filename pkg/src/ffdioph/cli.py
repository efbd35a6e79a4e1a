"""Command-line front end.

    ffdioph verify SUITE [options]       exact checks, JSON report, exit 1 on failure
    ffdioph verify certificate FILE      replay a DI certificate
    ffdioph best-approx --q 2 --theta "(x^2+1)/x^3" --bound 3
    ffdioph construct-di --q 2 --d 2 --eps 1/4 --N 1 --steps 4
    ffdioph construct-sing --q 2 --d 2 --start 9 --levels 3
    ffdioph enumerate-upper --q 2 --u "0,0;1" --eps 1/16 --cutoff 2 --t 4/3
    ffdioph enumerate-lower --q 2 --u "0,0;1" --eps 1/4 --N 1
    ffdioph bounds --q 2 --d 2 --eps-grid "2^-1..2^-10"

Exit codes: 0 pass, 1 a check failed, 2 bad configuration.  Reports carry no
timings, so equal configurations give byte-identical output; wall time goes
to stderr.  FFDIOPH_WORKERS sets the size of the process pool used by the
sampled suites.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath

from . import bounds as bnd
from . import diophantine as dio
from . import fractal_lower as low
from . import fractal_upper as up
from . import lattice as lat
from .ffpoly import FieldSpec, Poly, enumerate_polys, gcd_many, enumerate_polys_below, euler_phi, euler_phi_bruteforce
from .ffpoly import divisor_sum_D1, divisor_sum_D1_bruteforce, sum_phi_over_degree, sum_phiD1_over_degree
from .laurent import Laurent, LVec


class ConfigError(ValueError):
    """Invalid command-line configuration (exit code 2)."""


# ---------------------------------------------------------------------------
# parsing

_TERM = re.compile(r"^(?:(\d+)\*?)?(x(?:\^(\d+))?)?$")


def parse_poly(F: FieldSpec, text: str) -> Poly:
    """'x^2+2*x+1', '2x^3', '1' or a JSON coefficient array '[1,0,1]' (low to high)."""
    text = text.replace(" ", "")
    if text.startswith("["):
        return F.poly(json.loads(text))
    if text in ("", "0"):
        return F.zero
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    coeffs: dict[int, int] = {}
    for term in re.split(r"\+", text.replace("-", "+-")):
        if not term:
            continue
        neg = term.startswith("-")
        term = term.lstrip("-")
        m = _TERM.match(term)
        if not m or (m.group(1) is None and m.group(2) is None):
            raise ConfigError(f"cannot parse polynomial term {term!r} in {text!r}")
        c = int(m.group(1)) if m.group(1) is not None else 1
        if c >= F.q:
            raise ConfigError(f"coefficient {c} is not an element of F_{F.q}")
        e = 0 if m.group(2) is None else int(m.group(3) or 1)
        if neg:
            c = F.neg(c)
        coeffs[e] = F.add(coeffs.get(e, 0), c)
    top = max(coeffs, default=-1)
    return F.poly([coeffs.get(i, 0) for i in range(top + 1)])


def parse_rational(F: FieldSpec, text: str) -> tuple[Poly, Poly]:
    depth = 0
    for i, ch in enumerate(text):
        depth += ch == "("
        depth -= ch == ")"
        if ch == "/" and depth == 0:
            g = parse_poly(F, text[i + 1:])
            if not g:
                raise ConfigError(f"zero denominator in {text!r}")
            return parse_poly(F, text[:i]), g
    return parse_poly(F, text), F.one


def parse_theta(F: FieldSpec, text: str) -> LVec:
    return LVec(Laurent.rational(f, g) for f, g in (parse_rational(F, t) for t in text.split(",")))


def parse_pair(F: FieldSpec, text: str) -> dio.ApproxPair:
    """'a1,...,ad;b'."""
    if ";" not in text:
        raise ConfigError(f"expected 'a1,...,ad;b', got {text!r}")
    a, b = text.split(";")
    u = dio.ApproxPair([parse_poly(F, t) for t in a.split(",")], parse_poly(F, b))
    if not u.in_Q():
        raise ConfigError(f"{text!r} is not in Q (gcd(a, b) != 1)")
    return u


def parse_eps(text: str, q: int | None = None) -> Fraction:
    """'p/q', a decimal, 'q^-k' or 'Q^-k' with an explicit base."""
    text = text.strip()
    m = re.fullmatch(r"(\d+|q)\^-(\d+)", text)
    if m:
        base = q if m.group(1) == "q" else int(m.group(1))
        if base is None:
            raise ConfigError("'q^-k' needs --q")
        return Fraction(1, base ** int(m.group(2)))
    try:
        val = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse eps {text!r}; use p/q or q^-k") from None
    if val <= 0:
        raise ConfigError("eps must be positive")
    return val


def parse_eps_grid(text: str, q: int | None = None) -> list[Fraction]:
    """'2^-1..2^-10' or a comma list."""
    m = re.fullmatch(r"(\d+|q)\^-(\d+)\.\.(\d+|q)\^-(\d+)", text.strip())
    if m:
        if m.group(1) != m.group(3):
            raise ConfigError("both ends of an eps range need the same base")
        base = q if m.group(1) == "q" else int(m.group(1))
        lo, hi = int(m.group(2)), int(m.group(4))
        step = 1 if hi >= lo else -1
        return [Fraction(1, base**k) for k in range(lo, hi + step, step)]
    if not text.strip():
        return []
    return [parse_eps(t, q) for t in text.split(",")]


def make_field(args) -> FieldSpec:
    try:
        return FieldSpec.of_order(args.q)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# verify suites


@dataclass
class Suite:
    run: Callable[[argparse.Namespace], list[dict]]
    about: str


def case_rng(seed: int, suite: str, i: int) -> random.Random:
    return random.Random(f"{seed}/{suite}/{i}")


def workers() -> int:
    try:
        return max(1, int(os.environ.get("FFDIOPH_WORKERS", "1")))
    except ValueError:
        raise ConfigError("FFDIOPH_WORKERS must be an integer") from None


def _pmap(fn, items: Sequence) -> list:
    n = workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * n))))


def suite_phi_sum(args) -> list[dict]:
    F = make_field(args)
    out = []
    for ell in range(1, args.lmax + 1):
        total, closed = sum_phi_over_degree(F, ell)
        out.append({"case": f"ell={ell}", "sum": total, "closed_form": str(closed), "pass": total == closed})
    for f in enumerate_polys_below(F, min(args.lmax, 3) + 1, include_zero=False):
        if f.deg >= 1 and euler_phi(f) != euler_phi_bruteforce(f):
            out.append({"case": f"phi({f})", "pass": False})
    return out


def suite_phid1(args) -> list[dict]:
    F = make_field(args)
    out = []
    for ell in range(1, args.lmax + 1):
        total, bound = sum_phiD1_over_degree(F, ell)
        per_f = all(euler_phi(f) * divisor_sum_D1(f) <= F.q ** (2 * ell) for f in enumerate_polys(F, ell))
        out.append({"case": f"ell={ell}", "sum": total, "bound": bound, "per_f": per_f,
                    "pass": total <= bound and per_f})
    for f in enumerate_polys_below(F, min(args.lmax, 3) + 1, include_zero=False):
        if divisor_sum_D1(f) != divisor_sum_D1_bruteforce(f):
            out.append({"case": f"D1({f})", "pass": False})
    return out


def _lattice_case(task) -> dict:
    kind, q, d, seed, i = task
    F = FieldSpec.from_json(q)
    rng = case_rng(seed, kind, i)
    B = lat.random_lattice(F, d, rng)
    L = lat.column_reduce(B)
    rec = {"case": i, "minima": list(L.minima_exp)}
    if kind == "minkowski":
        rec["det_exp"] = lat.determinant_exp(B)
        ok = L.det_exp == rec["det_exp"]
        if i < 100:
            ok = ok and lat.shortest_norm_exp_oracle(B) == L.minima_exp[0]
    elif kind == "point-count":
        ok = True
        for r in range(-2, 3):
            e = min(L.minima_exp) + r
            ok = ok and lat.count_points_in_ball(L, e) == lat.count_points_bruteforce(B, e)
    elif kind == "covering":
        ok = lat.covering_radius_exp(L) + 2 == L.minima_exp[-1]
        if d >= 2:
            ok = ok and lat.covering_radius_plus_hyperplane_exp(L, B) + 2 == L.minima_exp[-1]
        for j in range(20 if i < 50 else 0):
            g = lat.random_isometry(F, d, case_rng(seed, kind + "/iso", i * 20 + j))
            L2 = lat.column_reduce(lat.apply_matrix(g, B))
            ok = ok and lat.covering_radius_exp(L2) == lat.covering_radius_exp(L)
    else:
        raise ConfigError(kind)
    rec["pass"] = bool(ok)
    return rec


def _lattice_suite(kind: str):
    def run(args) -> list[dict]:
        F = make_field(args)
        return _pmap(_lattice_case, [(kind, F.to_json(), args.d, args.seed, i) for i in range(args.samples)])
    return run


def suite_farey(args) -> list[dict]:
    F = make_field(args)
    out = []
    for D in range(args.deg + 1):
        for b in enumerate_polys(F, D, monic_only=True):
            residues, table = dio.r_exponents_for_denominator(F, b)
            index = {r: j for j, r in enumerate(residues)}
            for a in dio.numerator_subspace_representatives(F, D, args.d):
                u = dio.ApproxPair(a, b)
                if not u.in_Q():
                    continue
                fl = dio.farey_lattice(u)
                best = min(D, int(table[:, [index[ai] for ai in a]].max(axis=1).min())) if len(table) else D
                ok = fl.det_exp == -D and fl.r_exp == best - D
                out.append({"case": repr(u), "pass": ok})
    return out


def suite_fiber(args) -> list[dict]:
    F = make_field(args)
    out = []
    for i in range(args.samples):
        rng = case_rng(args.seed, "fiber", i)
        while True:
            b = lat.random_poly(F, rng, rng.randint(0, 2), monic=True)
            u = dio.ApproxPair([lat.random_poly(F, rng, int(b.deg) - 1) for _ in range(args.d)], b)
            if u.in_Q():
                break
        fl = dio.farey_lattice(u)
        c = [lat.random_poly(F, rng, 1) for _ in range(args.d)]
        if gcd_many(c).deg != 0:
            c[-1] = F.one
        alpha = fl.lattice.vector(c)
        for k in range(args.k + 1):
            fast = dio.fiber_count(u, alpha, k)
            slow = dio.fiber_count_bruteforce(u, alpha, k)
            out.append({"case": f"{i}/k={k}", "count": fast, "pass": fast == slow == (F.q - 1) * F.q**k})
    return out


def suite_upper(args) -> list[dict]:
    F = make_field(args)
    node = up.UpperNode.make(dio.ApproxPair.root(F, args.d))
    out = []
    for eps in args.eps_list:
        s = Fraction(int(mpmath.ceil(bnd.upper_bound(F.q, args.d, eps) * 10**6)), 10**6)
        if s > args.d:
            out.append({"case": f"eps={eps}", "s": str(s), "skipped": "upper bound exceeds d", "pass": True})
            continue
        res = up.contraction_check(node, s, eps, args.cutoff)
        out.append({"case": f"eps={eps}", "s": str(s), "result": res.to_json(), "pass": res.holds})
    return out


def suite_lower(args) -> list[dict]:
    F = make_field(args)
    root = low.LowerNode.root(F, args.d)
    out = []
    for eps in args.eps_list:
        kids = low.enumerate_children(root, eps, args.N)
        checks = [low.verify_child(root, c, eps, args.N) for c in kids]
        window = all(all(ch.values()) for ch in checks)
        nest = all(low.verify_nesting(root, c.node(0)) for c in kids)
        sep = low.verify_separation(root, kids, eps, args.N)
        out.append({"case": f"eps={eps}", "children": len(kids), "child_checks": window, "nesting": nest,
                    "separation": sep.to_json(),
                    "pass": window and nest and sep.holds and sep.pair_bound_holds})
    return out


def suite_counting(args) -> list[dict]:
    F = make_field(args)
    xib = low.LowerNode.root(F, args.d).xib
    out = []
    for eps in args.eps_list:
        for D in range(args.lmax + 1):
            for n in enumerate_polys(F, D):
                r = low.count_Xn(xib, n, eps)
                out.append({"case": f"X_n eps={eps} n={n}", **r.to_json(), "pass": bool(r.holds)})
            r = low.xn_degree_sum(xib, D, eps)
            out.append({"case": f"sum X_n eps={eps} ell={D}", **r.to_json(), "pass": bool(r.holds)})
    return out


def suite_bounds(args) -> list[dict]:
    out = []
    for eps in args.eps_list:
        rep = bnd.bound_report(args.q, args.d, eps)
        base = mpmath.mpf(rep.base.numerator) / rep.base.denominator
        ok = rep.upper >= base and (rep.lower is None or base <= rep.lower <= rep.upper)
        ok = ok and rep.upper_nontrivial == (rep.upper <= args.d)
        out.append({"case": f"eps={eps}", "row": rep.row(), "pass": bool(ok)})
    return out


SUITES: dict[str, Suite] = {
    "phi-sum": Suite(suite_phi_sum, "sum of phi over degree ell equals (q-1)^2/q q^(2 ell)"),
    "phid1": Suite(suite_phid1, "sum of phi D1 over degree ell is at most (q-1) q^(3 ell)"),
    "minkowski": Suite(_lattice_suite("minkowski"), "prod lambda_i = det; lambda_1 against brute force"),
    "point-count": Suite(_lattice_suite("point-count"), "ball counts against brute force"),
    "covering": Suite(_lattice_suite("covering"), "q^2 e(L) = lambda_d, with hyperplane and isometries"),
    "farey": Suite(suite_farey, "det Lambda_u = 1/|u| and lambda_1 = r(u)"),
    "fiber": Suite(suite_fiber, "fibre counts (q-1) q^k"),
    "upper": Suite(suite_upper, "contraction at s = upper_bound"),
    "lower": Suite(suite_lower, "children window, nesting and separation at the root"),
    "counting": Suite(suite_counting, "X_n counts and degree sums"),
    "bounds": Suite(suite_bounds, "formula sanity on an eps grid"),
}


def cmd_verify(args) -> tuple[dict, int]:
    if args.suite == "certificate":
        if not args.file:
            raise ConfigError("verify certificate needs a FILE")
        try:
            with open(args.file) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.file}: {exc}") from None
        try:
            res = low.replay_certificate(text)
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            return {"suite": "certificate", "ok": False, "error": str(exc)}, 1
        return {"suite": "certificate", **res.to_json()}, 0 if res.ok else 1
    suite = SUITES.get(args.suite)
    if suite is None:
        raise ConfigError(f"unknown suite {args.suite!r}; known: {', '.join(sorted(SUITES))}, certificate")
    args.eps_list = parse_eps_grid(args.eps, args.q) if args.eps else _default_eps(args.suite)
    cases = suite.run(args)
    failed = sum(1 for c in cases if not c.get("pass"))
    report = {
        "suite": args.suite,
        "about": suite.about,
        "config": {k: v for k, v in sorted(vars(args).items()) if k in _CONFIG_KEYS},
        "cases": cases,
        "passed": len(cases) - failed,
        "failed": failed,
        "ok": failed == 0,
    }
    return report, 0 if failed == 0 else 1


_CONFIG_KEYS = {"q", "d", "lmax", "samples", "seed", "deg", "k", "cutoff", "N", "eps"}


def _default_eps(suite: str) -> list[Fraction]:
    return {"upper": [Fraction(1, 16), Fraction(1, 64)]}.get(suite, [Fraction(1, 4)])


# ---------------------------------------------------------------------------
# other commands


def cmd_best_approx(args) -> tuple[dict, int]:
    F = make_field(args)
    theta = parse_theta(F, args.theta)
    if args.d is not None and args.d != theta.d:
        raise ConfigError(f"--d {args.d} but theta has {theta.d} coordinates")
    seq = dio.best_approx_sequence(theta, args.bound)
    return seq.to_json(), 0


def cmd_construct_di(args) -> tuple[dict, int]:
    F = make_field(args)
    eps = parse_eps(args.eps, F.q)
    root = parse_pair(F, args.root) if args.root else None
    cert = low.build_DI_certificate(F, args.d, eps, args.N, args.steps, root, args.chooser)
    return cert.to_json(), 0 if cert.ok else 1


def cmd_construct_sing(args) -> tuple[dict, int]:
    F = make_field(args)
    root = parse_pair(F, args.root) if args.root else None
    cert = low.build_sing_prefix(F, args.d, args.levels, args.start, root, args.chooser)
    return cert.to_json(), 0 if cert.ok else 1


def cmd_enumerate_upper(args) -> tuple[dict, int]:
    F = make_field(args)
    u = parse_pair(F, args.u) if args.u else dio.ApproxPair.root(F, args.d)
    eps = parse_eps(args.eps, F.q)
    t = Fraction(args.t) if args.t else Fraction(u.d + 1)
    node = up.UpperNode.make(u)
    kids = up.enumerate_children(node, eps, args.cutoff)
    sD = up.child_sum_D(node, t, args.cutoff, kids.D_by_k)
    sums_E = {}
    ok = sD.within_bound
    for v, shells in kids.E_by_k.items():
        sE = up.child_sum_E(node, v, eps, t, args.cutoff, shells)
        sums_E[json.dumps(v.to_json(), sort_keys=True)] = sE.to_json()
        ok = ok and sE.within_bound
    out = {"node": node.to_json(), "children": kids.to_json(), "sum_D": sD.to_json(), "sums_E": sums_E,
           "sigma_count": len(kids.sigma())}
    return out, 0 if ok else 1


def cmd_enumerate_lower(args) -> tuple[dict, int]:
    F = make_field(args)
    u = parse_pair(F, args.u) if args.u else dio.ApproxPair.root(F, args.d)
    eps = parse_eps(args.eps, F.q)
    node = low.LowerNode.make(u)
    kids = low.enumerate_children(node, eps, args.N)
    checks = [low.verify_child(node, c, eps, args.N) for c in kids]
    ok = all(all(c.values()) for c in checks) and all(low.verify_nesting(node, c.node(0)) for c in kids)
    out = {
        "node": node.to_json(),
        "eps": str(eps),
        "N": args.N,
        "children": [{"alpha": c.alpha.to_json(), "v": c.v.to_json(), "k": c.k} for c in kids],
        "checks_ok": ok,
    }
    if len(low.distinct_children(kids)) >= 2:
        sep = low.verify_separation(node, kids, eps, args.N)
        out["separation"] = sep.to_json()
        ok = ok and sep.holds
    return out, 0 if ok else 1


def cmd_bounds(args) -> tuple[str, int]:
    grid = parse_eps_grid(args.eps_grid, args.q) if args.eps_grid else []
    if args.eps:
        grid.append(parse_eps(args.eps, args.q))
    return bnd.table_csv(bnd.bounds_table(args.q, args.d, grid)), 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ffdioph", description="Diophantine approximation over F_q((1/x)).")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, d_default: int | None = 2):
        sp.add_argument("--q", type=int, default=2)
        sp.add_argument("--d", type=int, default=d_default)
        sp.add_argument("--output", help="write here instead of stdout")

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite")
    v.add_argument("file", nargs="?")
    common(v)
    v.add_argument("--lmax", type=int, default=3)
    v.add_argument("--samples", type=int, default=20)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--deg", type=int, default=2)
    v.add_argument("--k", type=int, default=2)
    v.add_argument("--cutoff", type=int, default=3)
    v.add_argument("--N", type=int, default=1)
    v.add_argument("--eps")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("best-approx", help="best approximations of a rational theta")
    common(b, None)
    b.add_argument("--theta", required=True, help="f1/g1,f2/g2,...")
    b.add_argument("--bound", type=int, required=True)
    b.set_defaults(func=cmd_best_approx)

    c = sub.add_parser("construct-di", help="certified eps-Dirichlet-improvable prefix")
    common(c)
    c.add_argument("--eps", required=True)
    c.add_argument("--N", type=int, default=1)
    c.add_argument("--steps", type=int, default=4)
    c.add_argument("--root")
    c.add_argument("--chooser", default="lexicographic-first", choices=low.CHOOSERS)
    c.set_defaults(func=cmd_construct_di)

    s = sub.add_parser("construct-sing", help="certified prefix along the singular schedule")
    common(s)
    s.add_argument("--start", type=int, default=9)
    s.add_argument("--levels", type=int, default=3)
    s.add_argument("--root")
    s.add_argument("--chooser", default="lexicographic-first", choices=low.CHOOSERS)
    s.set_defaults(func=cmd_construct_sing)

    eu = sub.add_parser("enumerate-upper", help="children and sums of the upper covering")
    common(eu)
    eu.add_argument("--u")
    eu.add_argument("--eps", required=True)
    eu.add_argument("--cutoff", type=int, default=2)
    eu.add_argument("--t", help="child-sum exponent, must exceed d (default d + 1)")
    eu.set_defaults(func=cmd_enumerate_upper)

    el = sub.add_parser("enumerate-lower", help="children of the lower structure")
    common(el)
    el.add_argument("--u")
    el.add_argument("--eps", required=True)
    el.add_argument("--N", type=int, default=1)
    el.set_defaults(func=cmd_enumerate_lower)

    bd = sub.add_parser("bounds", help="CSV table of the dimension bounds")
    common(bd)
    bd.add_argument("--eps-grid", default="")
    bd.add_argument("--eps")
    bd.set_defaults(func=cmd_bounds)
    return p


def _emit(payload, path: str | None) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    start = time.perf_counter()
    try:
        payload, code = args.func(args)
    except ConfigError as exc:
        print(f"ffdioph: configuration error: {exc}", file=sys.stderr)
        return 2
    except low.LowerStructureError as exc:
        print(f"ffdioph: precondition failed: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"ffdioph: {exc}", file=sys.stderr)
        return 2
    try:
        _emit(payload, args.output)
    except OSError as exc:
        print(f"ffdioph: cannot write output: {exc}", file=sys.stderr)
        return 2
    print(f"ffdioph: {args.command} finished in {time.perf_counter() - start:.2f}s, exit {code}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
