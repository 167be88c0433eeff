"""The directed flow induced on the unit sphere (half-lines through 0).

Points are unit vectors in the algebra basis, Euclidean norm.  The sphere
field is the tangential part ``G(u) = F(u) - (F(u).u) u`` of the geodesic field.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .errors import InvalidInput
from .flow import dopri_step, error_norm, field_function
from .metric import MetricAlgebra

UNIT_TOL = 1e-9
CHUNK = 64
CHECK_EVERY = 100

FIXED_POINT = "FixedPoint"
CONVERGES = "ConvergesToFixedPoint"
CLOSED_ORBIT = "ClosedOrbit"
UNRESOLVED = "Unresolved"


def worker_count(workers: int | None = None) -> int:
    """Explicit ``workers``, else ``EA_LAB_THREADS``, else 1."""
    if workers is None:
        workers = int(os.environ.get("EA_LAB_THREADS", "1") or 1)
    return max(1, int(workers))


def ordered_map(fn, items, workers: int | None = None):
    """``map`` that may fan out over threads; results stay in input order."""
    items = list(items)
    n = worker_count(workers)
    if n == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _require_unit(u):
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
        raise InvalidInput(f"expected a unit vector, got norm {np.linalg.norm(u):.12g}")
    return u


def sphere_field_function(ma: MetricAlgebra):
    f = field_function(ma)

    def g(u):
        fu = f(u)
        return fu - (fu @ u) * u

    return g


def sphere_field(ma: MetricAlgebra, u) -> np.ndarray:
    """Tangential part of ``F`` at the unit vector ``u``."""
    u = _require_unit(u)
    if u.size != ma.dim:
        raise InvalidInput(f"expected {ma.dim} coordinates, got {u.size}")
    return sphere_field_function(ma)(u)


# --- root finding ----------------------------------------------------------

def _batch_field(ma, u):
    return np.einsum("mij,ni,nj->nm", ma.field_tensor, u, u)


def sphere_newton(ma: MetricAlgebra, starts, tol: float = 1e-12, max_iter: int = 50):
    """Projected Gauss-Newton on ``G(u) = 0`` for a batch of starts.

    Returns ``(roots, residuals)`` where residual is ``|G(root)|``.  The
    pseudo-inverse handles continua of roots, where the Jacobian is singular
    along the family.
    """
    u = np.array(starts, dtype=float)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    n, d = u.shape
    eye = np.eye(d)
    active = np.ones(n, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        ua = u[active]
        fu = _batch_field(ma, ua)
        lam = np.einsum("nm,nm->n", fu, ua)
        g = fu - lam[:, None] * ua
        df = 2.0 * np.einsum("mij,nj->nmi", ma.sym_tensor, ua)
        row = np.einsum("nmi,nm->ni", df, ua) + fu
        jac = df - ua[:, :, None] * row[:, None, :] - lam[:, None, None] * eye
        proj = eye - ua[:, :, None] * ua[:, None, :]
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(jac @ proj, rcond=1e-10), g)
        size = np.linalg.norm(step, axis=1)
        big = size > 0.5
        step[big] *= (0.5 / size[big])[:, None]
        new = ua + step
        new /= np.linalg.norm(new, axis=1, keepdims=True)
        u[active] = new
        idx = np.flatnonzero(active)
        active[idx[size < tol]] = False
    fu = _batch_field(ma, u)
    g = fu - np.einsum("nm,nm->n", fu, u)[:, None] * u
    return u, np.linalg.norm(g, axis=1)


def sphere_grid(dim: int, count: int) -> np.ndarray:
    """Deterministic low-discrepancy points on the unit sphere in ``R^dim``."""
    if dim == 3:
        # Fibonacci lattice: near-uniform for the 2-sphere
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        r = np.sqrt(1.0 - z * z)
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    pts = qmc.Halton(d=dim, scramble=False).random(count + 1)[1:]
    from scipy.special import ndtri
    g = ndtri(pts)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def chunked_newton(ma, starts, workers=None, tol=1e-12, max_iter=50):
    """Newton over fixed-size chunks so results do not depend on the worker count."""
    chunks = [starts[i:i + CHUNK] for i in range(0, len(starts), CHUNK)]
    out = ordered_map(lambda c: sphere_newton(ma, c, tol, max_iter), chunks, workers)
    if not out:
        return np.zeros((0, ma.dim)), np.zeros(0)
    return np.vstack([r for r, _ in out]), np.concatenate([s for _, s in out])


def sphere_roots(ma: MetricAlgebra, grid_points: int, *, residual_tol: float = 1e-10,
                 merge_radius: float = 1e-6, workers: int | None = None) -> np.ndarray:
    """Distinct zeros of the sphere field reached by Newton from a grid.

    Antipodes are kept apart: ``u`` and ``-u`` are different half-lines.
    """
    roots, res = chunked_newton(ma, sphere_grid(ma.dim, grid_points), workers)
    found: list[np.ndarray] = []
    for r in roots[res < residual_tol]:
        if not any(np.linalg.norm(r - s) < merge_radius for s in found):
            found.append(r)
    return np.array(found).reshape(-1, ma.dim)


# --- orbit classification --------------------------------------------------------

@dataclass
class SphereOptions:
    horizon: float = 1e4
    tol: float = 1e-10
    max_steps: int = 20_000
    eps_fix: float = 1e-9
    eps_closed: float = 1e-6
    min_period: float = 1e-3
    max_angle_deg: float = 30.0
    converge_radius: float = 0.05
    converge_speed: float = 1e-3
    keep_samples: int = 200


@dataclass
class OrbitClass:
    kind: str
    target: list | None = None
    period: float | None = None
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "target": self.target, "period": self.period, "evidence": self.evidence}


@dataclass
class _Run:
    times: list
    points: list
    status: str
    crossings: list
    closed: tuple | None


def _spherical_run(ma, u0, sign, opts: SphereOptions) -> _Run:
    g = sphere_field_function(ma)

    def rhs(u):
        return sign * g(u)

    # section through u0, oriented along the direction of travel
    normal = rhs(u0)
    normal = normal / np.linalg.norm(normal)
    u = u0.copy()
    k1 = rhs(u)
    h = min(0.01 / max(np.linalg.norm(k1), 1e-12), opts.horizon)
    t = 0.0
    times, points = [0.0], [u.copy()]
    crossings = []
    left = False
    s_prev = 0.0
    closed = None
    status = "horizon"
    steps = 0
    last_gap = None
    while t < opts.horizon:
        if steps >= opts.max_steps:
            status = "max_steps"
            break
        h = min(h, opts.horizon - t)
        new, err, _ = dopri_step(rhs, u, h, k1)
        en = error_norm(err, u, new, opts.tol)
        if en <= 1.0:
            prev = u
            u = new / np.linalg.norm(new)
            t += h
            steps += 1
            k1 = rhs(u)
            times.append(t)
            points.append(u)
            dist = float(np.linalg.norm(u - u0))
            if dist > 100 * opts.eps_closed:
                left = True
            s = float((u - u0) @ normal)
            if left and t > opts.min_period and s_prev < 0 <= s:
                hit = _refine_crossing(rhs, prev, u, h, t - h, u0, normal, opts.tol)
                crossings.append(hit)
                tc, uc, dc = hit
                vel = rhs(uc)
                cosang = float(vel @ normal / max(np.linalg.norm(vel), 1e-300))
                if dc < opts.eps_closed and cosang > math.cos(math.radians(opts.max_angle_deg)):
                    closed = (tc, dc, math.degrees(math.acos(min(1.0, cosang))))
                    status = "closed"
                    break
            s_prev = s
            if steps % CHECK_EVERY == 0:
                gap = _settled_gap(ma, u, k1, opts)
                # settled: near a root, slow, and still approaching it at two checkpoints
                if gap is not None and last_gap is not None and gap <= last_gap:
                    status = "settled"
                    break
                last_gap = gap
            fac = 5.0 if en == 0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
        else:
            fac = max(0.2, 0.9 * en ** -0.2)
        h *= fac
        if h < 1e-14:
            status = "step_failure"
            break
    return _Run(times, points, status, crossings, closed)


def _settled_gap(ma, u, velocity, opts):
    from .solver import snap_root

    if float(np.linalg.norm(velocity)) >= opts.converge_speed:
        return None
    root = snap_root(ma, u)
    if root is None:
        return None
    gap = float(np.linalg.norm(root - u))
    return gap if gap < opts.converge_radius else None


def _refine_crossing(rhs, u_prev, u_next, h, t_prev, u0, normal, tol, iters=40):
    """Bisect the step length so the point lands on the section through ``u0``."""
    k1 = rhs(u_prev)

    def advance(tau):
        x, _, _ = dopri_step(rhs, u_prev, tau, k1)
        return x / np.linalg.norm(x)

    lo, hi = 0.0, h
    slo = float((u_prev - u0) @ normal)
    point = u_next
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        point = advance(mid)
        sm = float((point - u0) @ normal)
        if (sm < 0) == (slo < 0):
            lo, slo = mid, sm
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, h):
            break
    point = advance(hi)
    return t_prev + hi, point, float(np.linalg.norm(point - u0))


def _verdict(ma, run: _Run, opts: SphereOptions) -> OrbitClass:
    from .solver import snap_root

    evidence = {
        "horizon": opts.horizon,
        "time_reached": run.times[-1],
        "status": run.status,
        "return_distances": [c[2] for c in run.crossings],
    }
    if run.closed is not None:
        period, dist, angle = run.closed
        evidence.update(return_distance=dist, crossing_angle_deg=angle)
        return OrbitClass(CLOSED_ORBIT, period=float(period), evidence=evidence)
    end = run.points[-1]
    g = sphere_field_function(ma)
    speed = float(np.linalg.norm(g(end)))
    evidence["final_point"] = end.tolist()
    evidence["final_speed"] = speed
    root = snap_root(ma, end)
    if root is not None:
        gap = float(np.linalg.norm(root - end))
        evidence["distance_to_target"] = gap
        if gap < opts.converge_radius and speed < opts.converge_speed:
            return OrbitClass(CONVERGES, target=root.tolist(), evidence=evidence)
    return OrbitClass(UNRESOLVED, evidence=evidence)


def classify_sphere_orbit(ma: MetricAlgebra, u0, opts: SphereOptions | None = None) -> OrbitClass:
    """Classify the spherized orbit through ``u0``; the backward verdict goes into evidence."""
    return _classify(ma, _require_unit(u0), opts or SphereOptions())[0]


def _classify(ma, u0, opts):
    from .solver import snap_root

    g = sphere_field_function(ma)
    speed0 = float(np.linalg.norm(g(u0)))
    if speed0 < opts.eps_fix:
        return OrbitClass(FIXED_POINT, target=u0.tolist(), evidence={"field_norm": speed0}), None
    run = _spherical_run(ma, u0, 1.0, opts)
    forward = _verdict(ma, run, opts)
    backward = _verdict(ma, _spherical_run(ma, u0, -1.0, opts), opts)
    if forward.kind == CLOSED_ORBIT:
        near = snap_root(ma, u0)
        if near is not None and np.linalg.norm(near - u0) < 10 * opts.eps_closed:
            forward = OrbitClass(UNRESOLVED, evidence={**forward.evidence, "suppressed": "near fixed point"})
    forward.evidence["initial_field_norm"] = speed0
    forward.evidence["backward"] = {"kind": backward.kind, "target": backward.target,
                                    "period": backward.period}
    return forward, run


def orbit_samples(run_points, keep: int) -> list:
    if len(run_points) <= keep:
        return [p.tolist() for p in run_points]
    idx = np.linspace(0, len(run_points) - 1, keep).round().astype(int)
    return [run_points[i].tolist() for i in idx]


def sphere_portrait(ma: MetricAlgebra, initials, opts: SphereOptions | None = None,
                    workers: int | None = None) -> list[dict]:
    """Orbits for external plotting: ``[{initial, samples, verdict}, ...]`` in input order."""
    opts = opts or SphereOptions()

    def one(u0):
        u0 = _require_unit(u0)
        verdict, run = _classify(ma, u0, opts)
        points = run.points if run is not None else [u0]
        return {"initial": u0.tolist(), "samples": orbit_samples(points, opts.keep_samples),
                "verdict": verdict.to_dict()}

    return ordered_map(one, list(initials), workers)


def portrait_json(portrait: list[dict]) -> str:
    return json.dumps(portrait, sort_keys=True)
