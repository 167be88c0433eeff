"""The Euler-Arnold geodesic field ``x' = ad*_x x`` and its numerical flow."""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import exact
from .errors import InvalidInput
from .metric import MetricAlgebra

log = logging.getLogger(__name__)

BLOWUP_NORM = 1e8
STEP_FLOOR = 1e-12
MAX_STEPS = 200_000

HORIZON_REACHED = "HorizonReached"
BLOWUP_DETECTED = "BlowupDetected"
STEP_FAILURE = "StepFailure"


def geodesic_field(ma: MetricAlgebra, x):
    """``F(x) = ad*_x x``; exact for exact metric and input."""
    if len(x) != ma.dim:
        raise InvalidInput(f"expected {ma.dim} coordinates, got {len(x)}")
    if ma.is_exact and exact.is_exact(x):
        xs = exact.to_fractions(x)
        n = ma.dim
        out = [Fraction(0)] * n
        for i in range(n):
            if not xs[i]:
                continue
            m = ma.adstar_basis(i)
            for r in range(n):
                row = m[r]
                s = Fraction(0)
                for c in range(n):
                    if row[c] and xs[c]:
                        s += row[c] * xs[c]
                if s:
                    out[r] += xs[i] * s
        return tuple(out)
    return field_function(ma)(np.asarray(x, float))


def field_function(ma: MetricAlgebra):
    """Fast float closure ``x -> F(x)`` for integrators."""
    n = ma.dim
    t2 = ma.field_tensor.reshape(n * n, n)

    def f(x):
        return (t2 @ x).reshape(n, n) @ x

    return f


def symmetric_field(ma: MetricAlgebra, x, y):
    """Polarisation ``S(x, y)`` of the quadratic field, so ``S(x, x) = F(x)``."""
    if ma.is_exact and exact.is_exact(x) and exact.is_exact(y):
        fx = geodesic_field(ma, tuple(Fraction(a) + Fraction(b) for a, b in zip(x, y)))
        f1 = geodesic_field(ma, x)
        f2 = geodesic_field(ma, y)
        return tuple((a - b - c) / 2 for a, b, c in zip(fx, f1, f2))
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    return np.einsum("mij,i,j->m", ma.sym_tensor, x, y)


# --- invariance and equivariance -------------------------------------------

def _projection_residual(span, w):
    """Residual of ``w`` after orthogonal projection onto ``span`` (exact)."""
    gram = tuple(tuple(exact.dot(a, b) for b in span) for a in span)
    rhs = tuple(exact.dot(a, w) for a in span)
    coef = exact.solve(gram, rhs)
    proj = [sum((c * a[k] for c, a in zip(coef, span)), Fraction(0)) for k in range(len(w))]
    return tuple(Fraction(wk) - pk for wk, pk in zip(w, proj))


def subspace_invariance_residual(ma: MetricAlgebra, span_vectors):
    """Max-norm distance of ``S(v_a, v_b)`` to the span, over all spanning pairs.

    The span is flow-invariant iff this is zero, since ``F`` is quadratic.
    """
    vs = [tuple(v) for v in span_vectors]
    if not vs or any(len(v) != ma.dim for v in vs):
        raise InvalidInput("span vectors must be nonempty with algebra dimension")
    if ma.is_exact and exact.is_exact(vs):
        vs = [exact.to_fractions(v) for v in vs]
        if exact.rank(vs) != len(vs):
            raise InvalidInput("spanning set is linearly dependent")
        worst = Fraction(0)
        for a in range(len(vs)):
            for b in range(a, len(vs)):
                r = _projection_residual(vs, symmetric_field(ma, vs[a], vs[b]))
                worst = max(worst, exact.max_abs(r))
        return worst
    v = np.array(vs, float).T
    if np.linalg.matrix_rank(v) != v.shape[1]:
        raise InvalidInput("spanning set is linearly dependent")
    qmat, _ = np.linalg.qr(v)
    worst = 0.0
    for a in range(v.shape[1]):
        for b in range(a, v.shape[1]):
            w = symmetric_field(ma, v[:, a], v[:, b])
            worst = max(worst, float(np.max(np.abs(w - qmat @ (qmat.T @ w)))))
    return worst


def projection_equivariance_residual(ma: MetricAlgebra, line, complement, samples: int = 64, seed: int = 0):
    """How far the projection onto ``line`` along ``complement`` fails to commute with the flow.

    With ``v = c l + w`` the defect ``sigma(F(v)) - F(sigma(v))`` expands as
    ``c^2 (sigma F(l) - F(l)) + 2c sigma S(l, w) + sigma F(w)``; for exact input the
    residual is the largest coefficient in that expansion over complement basis
    pairs.  Float input falls back to random sampling.
    """
    basis = [tuple(line)] + [tuple(w) for w in complement]
    n = ma.dim
    if len(basis) != n or any(len(b) != n for b in basis):
        raise InvalidInput("line and complement must form a basis")
    if ma.is_exact and exact.is_exact(basis):
        basis = [exact.to_fractions(b) for b in basis]
        if exact.rank(basis) != n:
            raise InvalidInput("line and complement must form a basis")
        to_coords = exact.inverse(exact.transpose(basis))  # columns are basis vectors
        ell = basis[0]

        def sigma(v):
            c = exact.matvec(to_coords, v)[0]
            return tuple(c * x for x in ell)

        terms = []
        f_ell = geodesic_field(ma, ell)
        terms.append(tuple(a - b for a, b in zip(sigma(f_ell), f_ell)))
        comp = basis[1:]
        for j, w in enumerate(comp):
            terms.append(sigma(symmetric_field(ma, ell, w)))
            for w2 in comp[j:]:
                terms.append(sigma(symmetric_field(ma, w, w2)))
        return exact.max_abs(terms)
    b = np.array(basis, float).T
    if np.linalg.matrix_rank(b) != n:
        raise InvalidInput("line and complement must form a basis")
    binv = np.linalg.inv(b)
    ell = b[:, 0]
    f = field_function(ma)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        v = rng.standard_normal(n)
        sv = (binv @ v)[0] * ell
        d = (binv @ f(v))[0] * ell - f(sv)
        worst = max(worst, float(np.max(np.abs(d))))
    return worst


# --- integration --------------------------------------------------------------

# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
_A_ROWS = np.zeros((7, 7))
for _s, _row in enumerate(_A):
    _A_ROWS[_s, :len(_row)] = _row


def dopri_step(f, x, h, k1):
    """One Dormand-Prince step. Returns ``(x_new, err_vec, k_last)``; FSAL."""
    k = np.empty((7, x.shape[0]))
    k[0] = k1
    for s in range(1, 7):
        k[s] = f(x + h * (_A_ROWS[s, :s] @ k[:s]))
    x_new = x + h * (_B5 @ k)
    err = h * (_E @ k)
    return x_new, err, k[6]


def error_norm(err, x, x_new, tol):
    scale = tol + tol * np.maximum(np.abs(x), np.abs(x_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def initial_step(f, x0, f0, span, tol):
    d0 = float(np.linalg.norm(x0))
    d1 = float(np.linalg.norm(f0))
    if d0 < 1e-5 or d1 < 1e-5:
        h = min(1e-3, span)
    else:
        h = 0.01 * d0 / d1
    return min(h, span) if tol > 0 else h


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    termination: str
    energy: np.ndarray
    blowup_time: float | None = None
    message: str = ""
    tol: float = 1e-10

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0]))) if len(self.energy) else 0.0

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def metadata(self) -> dict:
        return {
            "termination": self.termination,
            "blowup_time": self.blowup_time,
            "energy_drift": self.energy_drift,
            "final_time": float(self.times[-1]),
            "steps": len(self.times) - 1,
            "tol": self.tol,
            "message": self.message,
        }


def estimate_blowup_time(times, norms, window: int = 8) -> float:
    """Extrapolate ``1/|x(t)|`` linearly to zero over the last accepted steps."""
    t = np.asarray(times[-window:], float)
    r = 1.0 / np.asarray(norms[-window:], float)
    if len(t) < 2:
        return float(t[-1])
    slope, intercept = np.polyfit(t - t[-1], r, 1)
    if slope == 0:
        return float(t[-1])
    return float(t[-1] - intercept / slope)


def integrate(ma: MetricAlgebra, x0, horizon: float, tol: float = 1e-10, *,
              max_steps: int = MAX_STEPS, blowup_norm: float = BLOWUP_NORM,
              step_floor: float = STEP_FLOOR) -> Trajectory:
    """Integrate the geodesic equation from ``x0`` for time ``horizon`` (negative: backward).

    Termination is ``HorizonReached``, ``BlowupDetected`` (step size under
    ``step_floor`` with the norm above ``blowup_norm``), or ``StepFailure`` (step
    floor with a moderate norm, non-finite state, or ``max_steps`` exhausted).
    Polynomial or exponential growth past ``blowup_norm`` is not blowup.
    """
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    if horizon == 0:
        raise InvalidInput("horizon must be nonzero")
    if len(x0) != ma.dim:
        raise InvalidInput(f"expected {ma.dim} coordinates, got {len(x0)}")
    f = field_function(ma)
    q = ma.q_array
    direction = 1.0 if horizon > 0 else -1.0
    span = abs(float(horizon))

    x = np.array(x0, dtype=float)
    times = [0.0]
    states = [x.copy()]
    energy = [float(x @ q @ x)]
    norms = [float(np.linalg.norm(x))]

    if not np.any(x):
        return Trajectory(np.array([0.0, float(horizon)]), np.array([x, x]), HORIZON_REACHED,
                          np.array(energy * 2), tol=tol)

    k1 = f(x)
    h = initial_step(f, x, k1, span, tol)
    t = 0.0
    termination = HORIZON_REACHED
    blowup_time = None
    message = ""
    steps = 0
    while span - t > 1e-14 * max(1.0, span):
        if steps >= max_steps:
            termination, message = STEP_FAILURE, f"max_steps={max_steps} exhausted at t={direction * t:.6g}"
            break
        h = min(h, span - t)
        x_new, err, k7 = dopri_step(f, x, direction * h, k1)
        en = error_norm(err, x, x_new, tol) if np.all(np.isfinite(x_new)) else np.inf
        if en <= 1.0:
            t += h
            x, k1 = x_new, k7
            steps += 1
            times.append(direction * t)
            states.append(x.copy())
            energy.append(float(x @ q @ x))
            norms.append(float(np.linalg.norm(x)))
            fac = 5.0 if en == 0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
        else:
            fac = max(0.2, 0.9 * en ** -0.2) if np.isfinite(en) else 0.2
        h *= fac
        if h < step_floor:
            if norms[-1] > blowup_norm:
                termination = BLOWUP_DETECTED
                blowup_time = estimate_blowup_time(times, norms)
            else:
                termination = STEP_FAILURE
                message = f"step size fell below {step_floor:g} at t={direction * t:.6g} without norm growth"
            break
    if termination == STEP_FAILURE:
        log.warning("integration stopped: %s", message)
    return Trajectory(np.array(times), np.array(states), termination, np.array(energy),
                      blowup_time=blowup_time, message=message, tol=tol)


# --- emitters -------------------------------------------------------------------

def trajectory_csv(traj: Trajectory) -> str:
    """CSV with header ``t,x_0,...,x_{n-1},q_norm``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = traj.states.shape[1]
    w.writerow(["t"] + [f"x_{i}" for i in range(n)] + ["q_norm"])
    for t, x, e in zip(traj.times, traj.states, traj.energy):
        w.writerow([repr(float(t))] + [repr(float(v)) for v in x] + [repr(float(e))])
    return buf.getvalue()


def trajectory_sidecar(traj: Trajectory) -> str:
    return json.dumps(traj.metadata(), indent=2, sort_keys=True)
