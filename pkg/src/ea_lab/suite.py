"""Registered verification checks for the builtin algebras.

Each check recomputes one claim about the builtins and compares it against a
tolerance: zero for exact claims, a float bound for root finding and
integration.  Checks never raise; failures are reported as results.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import exact
from .flow import geodesic_field, integrate, projection_equivariance_residual, subspace_invariance_residual
from .lattice import ReciprocalQuartic, build_gamma, certify, enumerate_candidates
from .lie import bracket, killing_form, load_builtin
from .metric import (BilinearForm, biinvariance_residual, builtin_form, builtin_metric, killing_metric,
                     self_adjoint_factor, signature, SL2_A)
from .solver import FUTURE, PAST, COMPLETE, completeness_classify, find_special_directions, sign_normalize
from .sphere import sphere_roots, ordered_map

F = Fraction
V0 = (F(3, 8), F(-1, 2), F(1))


@dataclass
class CheckResult:
    check_id: str
    claim: str
    status: str
    residual: object
    tolerance: float
    witness: str = ""
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self, timing: bool = False) -> dict:
        res = self.residual
        out = {
            "check_id": self.check_id,
            "claim": self.claim,
            "status": self.status,
            "residual": exact.fmt(res) if isinstance(res, (int, Fraction)) else float(res),
            "tolerance": self.tolerance,
            "witness": self.witness,
        }
        if timing:
            out["seconds"] = self.seconds
        return out


def _diff(a, b):
    """Max entry of ``|a - b|`` for equally shaped nested sequences (exact)."""
    fa = np.array(a, dtype=object).ravel()
    fb = np.array(b, dtype=object).ravel()
    return exact.max_abs([x - y for x, y in zip(fa, fb)])


def _quadratic_mismatch(ma, formula):
    """Exact distance between the geodesic field and a quadratic ``formula``.

    A quadratic map is determined by its values on ``b_i`` and ``b_i + b_j``.
    """
    n = ma.dim
    probes = [ma.algebra.basis_vector(i) for i in range(n)]
    probes += [tuple(a + b for a, b in zip(probes[i], probes[j])) for i in range(n) for j in range(i + 1, n)]
    return max(_diff(geodesic_field(ma, p), formula(*p)) for p in probes)


def _proj_distance(basis_a, basis_b) -> float:
    """Spectral distance between orthogonal projectors onto two subspaces."""
    def proj(b):
        qm, _ = np.linalg.qr(np.array(b, float).T)
        return qm @ qm.T
    return float(np.linalg.norm(proj(basis_a) - proj(basis_b), 2))


# --- sl2 ---------------------------------------------------------------------

def check_sl2_brackets():
    alg = load_builtin("sl2")
    e, h, f = (alg.basis_vector(i) for i in range(3))
    neg = lambda v: tuple(-x for x in v)  # noqa: E731
    res = max(_diff(bracket(alg, f, e), h), _diff(bracket(alg, h, e), neg(e)), _diff(bracket(alg, h, f), f))
    return res, ""


def check_sl2_killing():
    k = killing_form(load_builtin("sl2"))
    target = [[0, 0, 2], [0, 2, 0], [2, 0, 0]]
    return _diff(k, target), f"K = {[[exact.fmt(x) for x in row] for row in k]}"


def check_sl2_factor():
    alg = load_builtin("sl2")
    a = self_adjoint_factor(BilinearForm(killing_form(alg)), builtin_form("sl2"))
    return _diff(a, SL2_A), ""


def check_sl2_v0():
    alg = load_builtin("sl2")
    ma = builtin_metric("sl2")
    av0 = exact.matvec(SL2_A, V0)
    null = abs(ma.q(V0, V0))
    rel = _diff(av0, bracket(alg, av0, V0))
    return max(null, rel), f"q(v0,v0) = {exact.fmt(ma.q(V0, V0))}, A v0 = {[exact.fmt(x) for x in av0]}"


def check_sl2_field_v0():
    ma = builtin_metric("sl2")
    return _diff(geodesic_field(ma, V0), V0), ""


def check_sl2_invariance():
    alg = load_builtin("sl2")
    return subspace_invariance_residual(builtin_metric("sl2"), [alg.basis_vector("e"), alg.basis_vector("h")]), ""


def check_sl2_sigma():
    alg = load_builtin("sl2")
    comp = [alg.basis_vector("e"), alg.basis_vector("h")]
    return projection_equivariance_residual(builtin_metric("sl2"), V0, comp), ""


def check_sl2_biinvariant():
    ma = killing_metric(load_builtin("sl2"))
    rng = np.random.default_rng(0)
    worst = biinvariance_residual(ma)
    for _ in range(20):
        v = tuple(F(int(a), int(b)) for a, b in zip(rng.integers(-9, 10, 3), rng.integers(1, 10, 3)))
        worst = max(worst, exact.max_abs(geodesic_field(ma, v)))
    return worst, ""


def _direction_mismatch(found, expected):
    """Count of unmatched directions between found unit vectors and expected lines."""
    exp = [sign_normalize(np.array(v, float) / np.linalg.norm(np.array(v, float))) for v in expected]
    got = [np.array(d, float) for d in found]
    missing = sum(1 for e in exp if not any(min(np.linalg.norm(g - e), np.linalg.norm(g + e)) < 1e-6 for g in got))
    extra = sum(1 for g in got if not any(min(np.linalg.norm(g - e), np.linalg.norm(g + e)) < 1e-6 for e in exp))
    return missing + extra


def _special(name):
    dirs = find_special_directions(builtin_metric(name))
    return dirs, "; ".join(f"{d.kind} lambda={d.lam:.6g} v={np.round(d.v, 6).tolist()}" for d in dirs)


def check_sl2_radial():
    dirs, wit = _special("sl2")
    return _direction_mismatch([d.v for d in dirs], [(1, 0, 0), V0]), wit


def check_sl2_completeness():
    ma = builtin_metric("sl2")
    cases = [((1, 0, 0), COMPLETE), ((0, 1, 0), COMPLETE), ((1, -2, 0), COMPLETE),
             (V0, FUTURE), (tuple(-x for x in V0), PAST), ((0, 0, 1), FUTURE), ((0, 1, -1), PAST)]
    bad = []
    for v, want in cases:
        tag = completeness_classify(ma, v)
        if tag.value != want:
            bad.append(f"{[exact.fmt(x) for x in v]}: {tag.value} != {want}")
    return len(bad), "; ".join(bad)


def check_sl2_blowup_time():
    traj = integrate(builtin_metric("sl2"), np.array(V0, float), 10.0)
    t = traj.blowup_time if traj.blowup_time is not None else float("inf")
    return abs(t - 1.0), f"{traj.termination} at t = {t:.12g}"


def check_sl2_fixed_points():
    roots = sphere_roots(builtin_metric("sl2"), 10_000)
    expected = [np.array([1.0, 0, 0]), np.array(V0, float) / np.linalg.norm(np.array(V0, float))]
    expected = expected + [-x for x in expected]
    unmatched = sum(1 for e in expected if not any(np.linalg.norm(r - e) < 1e-6 for r in roots))
    return abs(len(roots) - 4) + unmatched, f"{len(roots)} sphere roots"


# --- sol ---------------------------------------------------------------------

SOL_AD = ([[0, 0, -1], [0, 0, 0], [0, 0, 0]], [[0, 0, 0], [0, 0, 1], [0, 0, 0]], [[1, 0, 0], [0, -1, 0], [0, 0, 0]])
SOL_ADSTAR = ([[0, 0, -1], [0, 0, 0], [0, 0, 0]], [[0, 1, 0], [0, 0, 0], [0, 0, 0]], [[0, 0, 0], [0, -1, 0], [0, 0, 1]])
EUC_AD = ([[0, 0, 0], [0, 0, 1], [0, 0, 0]], [[0, 0, -1], [0, 0, 0], [0, 0, 0]], [[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
EUC_ADSTAR = ([[0, 1, 0], [0, 0, 0], [0, 0, 0]], [[0, 0, -1], [0, 0, 0], [0, 0, 0]], [[0, 0, 0], [0, 0, 1], [0, -1, 0]])


def _matrices(name, expected, star):
    ma = builtin_metric(name)
    get = ma.adstar_basis if star else ma.ad_basis
    return max(_diff(get(i), expected[i]) for i in range(3)), ""


def check_sol_brackets():
    alg = load_builtin("sol")
    e1, e2, h = (alg.basis_vector(i) for i in range(3))
    return max(_diff(bracket(alg, h, e1), e1), _diff(bracket(alg, h, e2), tuple(-x for x in e2)),
               _diff(bracket(alg, e1, e2), (0, 0, 0))), ""


def check_sol_field():
    return _quadratic_mismatch(builtin_metric("sol"), lambda x, y, z: (y * y - x * z, -y * z, z * z)), ""


def check_sol_invariance():
    alg = load_builtin("sol")
    return subspace_invariance_residual(builtin_metric("sol"), [alg.basis_vector(0), alg.basis_vector(1)]), ""


def check_sol_sigma():
    alg = load_builtin("sol")
    return projection_equivariance_residual(builtin_metric("sol"), alg.basis_vector("h"),
                                            [alg.basis_vector(0), alg.basis_vector(1)]), ""


def check_sol_radial():
    dirs, wit = _special("sol")
    mism = _direction_mismatch([d.v for d in dirs], [(1, 0, 0), (0, 0, 1)])
    h = [d for d in dirs if d.kind == "Radial"]
    lam_err = abs(h[0].lam - 1.0) if len(h) == 1 else 1.0
    return mism + lam_err, wit


def check_sol_completeness():
    ma = builtin_metric("sol")
    cases = [((1, 0, 0), COMPLETE), ((1, 1, 0), COMPLETE), ((0, 0, 1), FUTURE), ((1, 1, -1), PAST)]
    bad = [f"{v}: {t} != {w}" for v, w in cases if (t := completeness_classify(ma, v).value) != w]
    return len(bad), "; ".join(bad)


# --- euc ---------------------------------------------------------------------

def check_euc_brackets():
    alg = load_builtin("euc")
    f1, f2, e = (alg.basis_vector(i) for i in range(3))
    return max(_diff(bracket(alg, e, f1), tuple(-x for x in f2)), _diff(bracket(alg, e, f2), f1)), ""


def check_euc_field():
    return _quadratic_mismatch(builtin_metric("euc"), lambda x, y, z: (x * y - y * z, z * z, -y * z)), ""


def check_euc_invariance():
    alg = load_builtin("euc")
    return subspace_invariance_residual(builtin_metric("euc"), [alg.basis_vector(0), alg.basis_vector(1)]), ""


def check_euc_radial():
    dirs, wit = _special("euc")
    radial = sum(1 for d in dirs if d.kind == "Radial")
    return radial + _direction_mismatch([d.v for d in dirs], [(1, 0, 0), (0, 1, 0)]), wit


# --- product -----------------------------------------------------------------

def check_product_signature():
    pos, neg = signature(builtin_form("sol_euc"))
    return abs(pos - 4) + abs(neg - 2), f"inertia (pos, neg) = ({pos}, {neg})"


def check_product_constants():
    # plane bases come from local PCA of Newton roots, so agreement is ~1e-6, not exact
    dirs, wit = _special("sol_euc")
    planes = [d for d in dirs if d.kind == "Constant"]
    e1, f1, f2 = np.eye(6)[0], np.eye(6)[3], np.eye(6)[4]
    targets = [[e1, f1], [e1, f2]]
    if len(planes) != 2 or any(p.component_dim != 2 or p.isolated for p in planes):
        return 1.0, wit
    worst = 0.0
    for t in targets:
        worst = max(worst, min(_proj_distance(p.component_basis, t) for p in planes))
    return worst, wit


def check_product_radial():
    dirs, wit = _special("sol_euc")
    radial = [d.v for d in dirs if d.kind == "Radial"]
    return _direction_mismatch(radial, [np.eye(6)[2]]), wit


# --- lattice -----------------------------------------------------------------

def check_lattice():
    found = enumerate_candidates(10)
    if ReciprocalQuartic(-3, 3) not in found:
        return 1.0, "(-3, 3) not accepted"
    cert = certify(ReciprocalQuartic(-3, 3))
    gamma = build_gamma(cert)
    return max(cert.residual, gamma["lattice_residual"]), \
        f"{len(found)} candidates; lambda = {cert.lam:.6f}, alpha = {cert.alpha:.6f}"


# id, claim, tolerance, function.  Tolerance 0 means exact equality.
CHECKS = [
    ("sl2.brackets", "[f,e] = h, [h,e] = -e, [h,f] = f", 0, check_sl2_brackets),
    ("sl2.killing", "K(e,f) = K(h,h) = 2 and every other Killing entry is 0", 0, check_sl2_killing),
    ("sl2.factor", "q = K(., A .) with A = [[1,1,0],[0,1,1],[0,0,1]]", 0, check_sl2_factor),
    ("sl2.v0", "v0 = (3/8, -1/2, 1) has q(v0,v0) = 0 and A v0 = [A v0, v0]", 0, check_sl2_v0),
    ("sl2.field_v0", "F(v0) = v0", 0, check_sl2_field_v0),
    ("sl2.invariance", "span(e,h) is invariant under F", 0, check_sl2_invariance),
    ("sl2.sigma", "projection onto Rv0 along span(e,h) commutes with F", 0, check_sl2_sigma),
    ("sl2.biinvariant", "Killing metric: ad* = -ad and F = 0", 0, check_sl2_biinvariant),
    ("sl2.radial", "F(v) = lambda v only on Re (lambda = 0) and Rv0", 0, check_sl2_radial),
    ("sl2.completeness", "complete iff sigma(v) = 0; future-incomplete iff sigma(v) > 0", 0, check_sl2_completeness),
    ("sl2.blowup", "x(t) = v0 / (1 - t) blows up at t = 1", 1e-3, check_sl2_blowup_time),
    ("sl2.fixed_points", "sphere field zeros are exactly +-e, +-v0 directions", 0, check_sl2_fixed_points),
    ("sol.brackets", "[h,e1] = e1, [h,e2] = -e2, [e1,e2] = 0", 0, check_sol_brackets),
    ("sol.ad", "ad_e1, ad_e2, ad_h match the tabulated matrices", 0, lambda: _matrices("sol", SOL_AD, False)),
    ("sol.adstar", "ad*_e1, ad*_e2, ad*_h match the tabulated matrices", 0, lambda: _matrices("sol", SOL_ADSTAR, True)),
    ("sol.field", "F(x,y,z) = (y^2 - xz, -yz, z^2)", 0, check_sol_field),
    ("sol.invariance", "span(e1,e2) is invariant under F", 0, check_sol_invariance),
    ("sol.sigma", "sigma(F(v)) = z^2 h = F(sigma(v))", 0, check_sol_sigma),
    ("sol.radial", "F(v) = lambda v only on Re1 (lambda = 0) and Rh (lambda = 1)", 1e-9, check_sol_radial),
    ("sol.completeness", "complete iff h-coordinate 0; sign of h-coordinate gives the incomplete end", 0,
     check_sol_completeness),
    ("euc.brackets", "[e,f1] = -f2, [e,f2] = f1", 0, check_euc_brackets),
    ("euc.ad", "ad_f1, ad_f2, ad_e match the tabulated matrices", 0, lambda: _matrices("euc", EUC_AD, False)),
    ("euc.adstar", "ad*_f1, ad*_f2, ad*_e match the tabulated matrices", 0, lambda: _matrices("euc", EUC_ADSTAR, True)),
    ("euc.field", "F(x,y,z) = (xy - yz, z^2, -yz)", 0, check_euc_field),
    ("euc.invariance", "the plane z = 0 is invariant under F", 0, check_euc_invariance),
    ("euc.radial", "no lambda != 0 solutions; constants on Rf1 and Rf2", 0, check_euc_radial),
    ("product.signature", "q + g has inertia (4 positive, 2 negative)", 0, check_product_signature),
    ("product.constants", "constant directions fill span(e1,f1) and span(e1,f2)", 1e-4, check_product_constants),
    ("product.radial", "lambda != 0 solutions lie on Rh only", 0, check_product_radial),
    ("lattice.example", "x^4 - 3x^3 + 3x^2 - 3x + 1 gives a certified diag(A, R_alpha) in SL(4,Z)", 1e-9,
     check_lattice),
]


def _run_one(entry) -> CheckResult:
    cid, claim, tol, fn = entry
    start = time.perf_counter()
    try:
        residual, witness = fn()
        ok = residual == 0 if tol == 0 else float(residual) < tol
        status = "pass" if ok else "fail"
    except Exception as exc:  # a crashing check is a failed check
        residual, witness, status = float("inf"), f"{type(exc).__name__}: {exc}", "fail"
    return CheckResult(cid, claim, status, residual, tol, witness, time.perf_counter() - start)


def run_paper_checks(prefix: str | None = None, parallel: bool = False) -> list[CheckResult]:
    """Run registered checks (optionally only ids starting with ``prefix``) in fixed order."""
    selected = [c for c in CHECKS if prefix is None or c[0].startswith(prefix)]
    if parallel:
        return ordered_map(_run_one, selected)
    return [_run_one(c) for c in selected]


def report_table(results: list[CheckResult]) -> str:
    width = max((len(r.check_id) for r in results), default=8)
    lines = [f"{'check':<{width}}  status  residual      claim"]
    for r in results:
        res = r.to_dict()["residual"]
        lines.append(f"{r.check_id:<{width}}  {r.status:<6}  {str(res):<12}  {r.claim}")
        if r.status != "pass" and r.witness:
            lines.append(f"{'':<{width}}  {r.witness}")
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines)


def report_json(results: list[CheckResult]) -> str:
    return json.dumps({"all_pass": all(r.passed for r in results),
                       "checks": [r.to_dict() for r in results]}, sort_keys=True, indent=2)
