"""Constant and radial solutions: directions ``v`` with ``F(v) = lambda v``.

Roots of the sphere field are found by multistart projected Newton, antipodes
are merged, and families of roots (continua) are separated from isolated roots
by clustering followed by local PCA.  Coverage is only as good as the start grid.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import exact
from .errors import InvalidInput
from .flow import BLOWUP_DETECTED, HORIZON_REACHED, integrate
from .metric import MetricAlgebra
from .sphere import chunked_newton, sphere_grid, sphere_newton

log = logging.getLogger(__name__)

NULL_TOL = 1e-9
RADIAL_NULL_TOL = 1e-7
RESIDUAL_TOL = 1e-9
LAMBDA_ZERO = 1e-9
MERGE_RADIUS = 1e-6
MIN_CONTINUUM = 10


@dataclass
class SolverOptions:
    grid_density: int = 64
    newton_tol: float = 1e-12
    max_iter: int = 50
    max_starts: int = 4096
    seed: int = 0


@dataclass
class SpecialDirection:
    v: list
    lam: float
    kind: str
    causal_type: str
    component_id: int
    isolated: bool
    residual: float
    component_dim: int = 1
    component_basis: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "v": self.v,
            "lambda": self.lam,
            "kind": self.kind,
            "causal_type": self.causal_type,
            "isolated": self.isolated,
            "residual": self.residual,
            "component_id": self.component_id,
            "component_dim": self.component_dim,
            "component_basis": self.component_basis,
        }


def causal_type(ma: MetricAlgebra, v, tol: float = NULL_TOL) -> str:
    """``spacelike`` / ``timelike`` / ``null`` from the sign of ``q(v, v)``.

    Exact inputs are classified exactly; floats use ``tol * |v|^2``.
    Positive ``q`` is called spacelike.
    """
    if len(v) != ma.dim:
        raise InvalidInput(f"expected {ma.dim} coordinates, got {len(v)}")
    if ma.is_exact and exact.is_exact(v):
        if not any(v):
            raise InvalidInput("causal type of the zero vector is undefined")
        val = ma.q(v, v)
        return "null" if val == 0 else ("spacelike" if val > 0 else "timelike")
    x = np.asarray(v, float)
    nrm2 = float(x @ x)
    if nrm2 == 0:
        raise InvalidInput("causal type of the zero vector is undefined")
    val = float(x @ ma.q_array @ x)
    if abs(val) <= tol * nrm2:
        return "null"
    return "spacelike" if val > 0 else "timelike"


def sign_normalize(u: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Flip so that the first coordinate with ``|c| > eps`` is positive."""
    for c in u:
        if abs(c) > eps:
            return u if c > 0 else -u
    return u


def _pdist(a, b) -> float:
    return min(float(np.linalg.norm(a - b)), float(np.linalg.norm(a + b)))


def snap_root(ma: MetricAlgebra, u, tol: float = 1e-10):
    """Newton-polish ``u`` to a sphere-field zero, or None if it does not converge."""
    roots, res = sphere_newton(ma, np.asarray(u, float)[None, :])
    return roots[0] if res[0] < tol else None


def _starts(dim: int, opts: SolverOptions) -> np.ndarray:
    n_grid = opts.grid_density * dim
    n_rand = opts.grid_density
    total = min(opts.max_starts, n_grid + n_rand)
    n_grid = min(n_grid, total)
    grid = sphere_grid(dim, n_grid)
    rng = np.random.default_rng(opts.seed)
    rand = rng.standard_normal((total - n_grid, dim))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    return np.vstack([grid, rand])


def _clusters(points: list[np.ndarray], radius: float) -> list[list[int]]:
    """Single-linkage clusters under projective distance; deterministic order."""
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if _pdist(points[i], points[j]) < radius:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [groups[k] for k in sorted(groups)]


def _aligned(points, center):
    return np.array([p if p @ center >= 0 else -p for p in points])


def _tangent_rank(points, spread_tol=1e-3) -> int:
    """Number of tangent directions with RMS spread above ``spread_tol`` (centred PCA)."""
    pts = _aligned(points, points[0])
    if len(pts) < 2:
        return 0
    s = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False) / math.sqrt(len(pts))
    return int(np.sum(s > spread_tol))


def _linear_components(points: list[np.ndarray], radius: float, tol: float = 1e-4,
                       rank_tol: float = 1e-2):
    """Split a continuum cluster into linear subspaces via local PCA.

    Each member's neighbourhood spans a local subspace; the lowest-dimensional
    local subspaces are taken greedily and absorb every member lying in them.
    Roots on a continuum can sit ~sqrt(residual) off it where the field is
    degenerate, hence the loose ``tol`` and ``rank_tol``.
    Returns a list of ``(member_indices, orthonormal_basis)``.
    """
    local = []
    for i, p in enumerate(points):
        nb = _aligned([q for q in points if _pdist(p, q) < radius], p)
        u, s, _ = np.linalg.svd(nb.T, full_matrices=False)
        k = int(np.sum(s > rank_tol * s[0]))
        local.append((k, i, u[:, :k]))
    assigned = [False] * len(points)
    comps = []
    for k, i, basis in sorted(local, key=lambda item: (item[0], item[1])):
        if assigned[i]:
            continue
        members = [j for j, q in enumerate(points)
                   if np.linalg.norm(q - basis @ (basis.T @ q)) < tol]
        for j in members:
            assigned[j] = True
        comps.append((members, basis))
    return comps


def _orthonormal_rows(basis: np.ndarray) -> list:
    """Orthonormal basis of a subspace, built from projector columns so it is reproducible."""
    proj = basis @ basis.T
    k = basis.shape[1]
    # pivot on the coordinate axes best represented in the subspace
    order = np.argsort(-np.diag(proj), kind="stable")[:k]
    cols = proj[:, np.sort(order)]
    qmat, _ = np.linalg.qr(cols)
    return [(sign_normalize(qmat[:, j]) + 0.0).tolist() for j in range(k)]


def find_special_directions(ma: MetricAlgebra, opts: SolverOptions | None = None,
                            workers: int | None = None) -> list[SpecialDirection]:
    """Multistart search for constant (``lambda = 0``) and radial directions."""
    opts = opts or SolverOptions()
    if ma.dim < 2:
        raise InvalidInput("need dim >= 2")
    starts = _starts(ma.dim, opts)
    roots, res = chunked_newton(ma, starts, workers, opts.newton_tol, opts.max_iter)

    distinct: list[np.ndarray] = []
    resid: list[float] = []
    for r, e in zip(roots, res):
        if not e < RESIDUAL_TOL / 10:
            continue
        r = sign_normalize(r)
        if any(_pdist(r, d) < MERGE_RADIUS for d in distinct):
            continue
        distinct.append(r)
        resid.append(float(e))

    radius = 10 * math.pi / opts.grid_density
    f_q = ma.q_array
    out: list[SpecialDirection] = []
    comp_id = 0
    for cluster in _clusters(distinct, radius):
        pts = [distinct[i] for i in cluster]
        if len(pts) >= MIN_CONTINUUM and _tangent_rank(pts) >= 1:
            for members, basis in _linear_components(pts, radius):
                rep_local = min(members, key=lambda j: (resid[cluster[j]], cluster[j]))
                dimc = basis.shape[1]
                out.append(_direction(ma, pts[rep_local], comp_id, isolated=dimc == 1,
                                      dimc=dimc, basis=_orthonormal_rows(basis) if dimc > 1 else []))
                comp_id += 1
        else:
            # isolated roots; duplicates from slow convergence sit within 1e-4
            for sub in _clusters(pts, 1e-4):
                rep = min(sub, key=lambda j: (resid[cluster[j]], cluster[j]))
                out.append(_direction(ma, pts[rep], comp_id, isolated=True))
                comp_id += 1

    verified = []
    for d in out:
        v = np.array(d.v)
        ok = d.residual < RESIDUAL_TOL
        if d.kind == "Radial":
            ok = ok and abs(float(v @ f_q @ v)) < RADIAL_NULL_TOL
        if ok:
            verified.append(d)
        else:
            log.warning("dropping direction %s failing re-verification (residual %.3g)", d.v, d.residual)
    return verified


def _direction(ma, v, comp_id, isolated, dimc=1, basis=None) -> SpecialDirection:
    from .flow import field_function

    f = field_function(ma)(v)
    lam = float(f @ v)
    residual = float(np.linalg.norm(f - lam * v))
    kind = "Constant" if abs(lam) < LAMBDA_ZERO else "Radial"
    # adding 0.0 turns -0.0 into 0.0 for stable output
    return SpecialDirection(v=(v + 0.0).tolist(), lam=lam + 0.0, kind=kind, causal_type=causal_type(ma, v),
                            component_id=comp_id, isolated=isolated, residual=residual,
                            component_dim=dimc, component_basis=basis or [])


# --- completeness -------------------------------------------------------------

COMPLETE = "Complete"
FUTURE = "FutureIncomplete"
PAST = "PastIncomplete"
BOTH = "BothIncomplete"
UNDETERMINED = "Undetermined"

# sigma criteria: projection onto the radial line along an invariant complement
SIGMA_CRITERIA = {
    "sl2": ((Fraction(3, 8), Fraction(-1, 2), Fraction(1)), ((1, 0, 0), (0, 1, 0))),
    "sol": ((0, 0, 1), ((1, 0, 0), (0, 1, 0))),
}


@dataclass
class CompletenessTag:
    value: str
    methods: list
    sigma: float | None = None
    integration: dict = field(default_factory=dict)
    diagnostic: str = ""

    def to_dict(self) -> dict:
        return {"value": self.value, "methods": self.methods, "sigma": self.sigma,
                "integration": self.integration, "diagnostic": self.diagnostic}


def sigma_coordinate(ma: MetricAlgebra, v):
    """Coefficient of ``v`` along the registered radial line, or None if unregistered."""
    crit = SIGMA_CRITERIA.get(ma.name)
    if crit is None:
        return None
    line, comp = crit
    basis = [exact.to_fractions(line)] + [exact.to_fractions(c) for c in comp]
    to_coords = exact.inverse(exact.transpose(basis))
    if exact.is_exact(v):
        return exact.matvec(to_coords, exact.to_fractions(v))[0]
    return float((np.array(to_coords, float) @ np.asarray(v, float))[0])


def _tag(forward_blowup: bool, backward_blowup: bool) -> str:
    if forward_blowup and backward_blowup:
        return BOTH
    if forward_blowup:
        return FUTURE
    if backward_blowup:
        return PAST
    return COMPLETE


def completeness_classify(ma: MetricAlgebra, v, horizon: float = 1e3, tol: float = 1e-10) -> CompletenessTag:
    """Classify completeness of the solution through ``v`` by sigma sign and by integration."""
    x = np.asarray(v, dtype=float)
    if len(v) != ma.dim or not np.any(x):
        raise InvalidInput("need a nonzero vector of the algebra dimension")
    fwd = integrate(ma, x, horizon, tol)
    bwd = integrate(ma, x, -horizon, tol)
    info = {"forward": fwd.metadata(), "backward": bwd.metadata()}
    methods = ["Integration"]
    if fwd.termination not in (HORIZON_REACHED, BLOWUP_DETECTED) or \
            bwd.termination not in (HORIZON_REACHED, BLOWUP_DETECTED):
        return CompletenessTag(UNDETERMINED, methods, integration=info,
                               diagnostic="integration failed before horizon")
    by_integration = _tag(fwd.termination == BLOWUP_DETECTED, bwd.termination == BLOWUP_DETECTED)
    sigma = sigma_coordinate(ma, v)
    if sigma is None:
        return CompletenessTag(by_integration, methods, integration=info)
    methods = ["SigmaCriterion", "Integration"]
    by_sigma = COMPLETE if sigma == 0 else (FUTURE if sigma > 0 else PAST)
    sig = float(sigma)
    if by_sigma != by_integration:
        return CompletenessTag(UNDETERMINED, methods, sigma=sig, integration=info,
                               diagnostic=f"sigma criterion says {by_sigma}, integration says {by_integration}")
    return CompletenessTag(by_sigma, methods, sigma=sig, integration=info)
