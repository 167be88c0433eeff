"""Group-level curves from algebra-level solutions.

A curve ``g(t)`` in a matrix group whose left-logarithmic derivative
``g^-1 g'`` is the realised trajectory ``X(t)`` solves ``g' = g X(t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import expm, logm

from .errors import InvalidInput, InvalidRealization
from .flow import Trajectory, field_function
from .lie import LieAlgebra
from .metric import MetricAlgebra

F = Fraction

# sl2 as trace-free 2x2; sol and euc as 3x3 affine matrices acting on (u, v, 1)
_SL2 = [
    [[0, 1], [0, 0]],
    [[F(-1, 2), 0], [0, F(1, 2)]],
    [[0, 0], [F(1, 2), 0]],
]
_SOL = [
    [[0, 0, 1], [0, 0, 0], [0, 0, 0]],
    [[0, 0, 0], [0, 0, 1], [0, 0, 0]],
    [[1, 0, 0], [0, -1, 0], [0, 0, 0]],
]
_EUC = [
    [[0, 0, 1], [0, 0, 0], [0, 0, 0]],
    [[0, 0, 0], [0, 0, 1], [0, 0, 0]],
    [[0, 1, 0], [-1, 0, 0], [0, 0, 0]],
]


def _block(a, b):
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n + m, n + m))
    out[:n, :n] = a
    out[n:, n:] = b
    return out


def builtin_realization(name: str) -> list[np.ndarray]:
    table = {"sl2": _SL2, "sol": _SOL, "euc": _EUC}
    if name == "sol_euc":
        sol = builtin_realization("sol")
        euc = builtin_realization("euc")
        z3 = np.zeros((3, 3))
        return [_block(m, z3) for m in sol] + [_block(z3, m) for m in euc]
    if name not in table:
        raise InvalidInput(f"no builtin realization for {name!r}")
    return [np.array(m, dtype=float) for m in table[name]]


def realization_residual(alg: LieAlgebra, mats) -> float:
    """Max entry of ``[R_i, R_j] - sum_k c_ijk R_k`` over basis pairs."""
    mats = [np.asarray(m, float) for m in mats]
    if len(mats) != alg.dim:
        raise InvalidRealization(f"need {alg.dim} matrices, got {len(mats)}")
    shape = mats[0].shape
    if len(shape) != 2 or shape[0] != shape[1] or any(m.shape != shape for m in mats):
        raise InvalidRealization("realization matrices must be square and of equal size")
    c = alg.structure_array
    worst = 0.0
    for i in range(alg.dim):
        for j in range(i + 1, alg.dim):
            comm = mats[i] @ mats[j] - mats[j] @ mats[i]
            target = sum(c[i, j, k] * mats[k] for k in range(alg.dim))
            worst = max(worst, float(np.max(np.abs(comm - target))))
    return worst


def realize(mats, x) -> np.ndarray:
    return np.tensordot(np.asarray(x, float), np.asarray(mats, float), axes=1)


@dataclass
class GroupCurve:
    times: np.ndarray
    elements: np.ndarray
    roundtrip_residual: float


def _hermite(x0, x1, f0, f1, h, s):
    """Cubic Hermite interpolant on ``[0, h]`` evaluated at fraction ``s``."""
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * x0 + h10 * h * f0 + h01 * x1 + h11 * h * f1


_GAUSS = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)


def reconstruct_group_curve(ma: MetricAlgebra, realization, traj: Trajectory, *,
                            substeps: int = 8, check_tol: float = 1e-12) -> GroupCurve:
    """Solve ``g' = g X(t)``, ``g(0) = I`` along a trajectory.

    Between samples the trajectory is interpolated by cubic Hermite polynomials
    (slopes from the geodesic field) and ``g`` is advanced with the fourth-order
    Magnus integrator.  ``roundtrip_residual`` compares ``log(g_i^-1 g_{i+1}) / h``
    with what the samples alone predict: the Simpson mean of ``X`` plus
    ``(h/12) [X_i, X_{i+1}]``.  It is O(h^3) in the sample spacing.
    """
    mats = np.asarray(realization, float)
    res = realization_residual(ma.algebra, mats)
    if res > check_tol:
        raise InvalidRealization(f"realization is not a homomorphism (bracket residual {res:.3g})")
    if len(traj.times) == 0:
        raise InvalidInput("empty trajectory")
    f = field_function(ma)
    size = mats.shape[1]
    g = np.eye(size)
    elements = [g.copy()]
    worst = 0.0
    for i in range(len(traj.times) - 1):
        t0, t1 = traj.times[i], traj.times[i + 1]
        x0, x1 = traj.states[i], traj.states[i + 1]
        h = t1 - t0
        f0, f1 = f(x0), f(x1)
        start = g.copy()
        dh = h / substeps
        for k in range(substeps):
            a1 = realize(mats, _hermite(x0, x1, f0, f1, h, (k + _GAUSS[0]) / substeps))
            a2 = realize(mats, _hermite(x0, x1, f0, f1, h, (k + _GAUSS[1]) / substeps))
            # right-multiplied equation: the commutator sign is opposite to y' = A y
            omega = 0.5 * dh * (a1 + a2) + (math.sqrt(3) / 12) * dh**2 * (a1 @ a2 - a2 @ a1)
            g = g @ expm(omega)
        elements.append(g.copy())
        if h != 0:
            mid = _hermite(x0, x1, f0, f1, h, 0.5)
            a0, a1 = realize(mats, x0), realize(mats, x1)
            # Simpson mean plus the leading commutator term of the Magnus series
            expected = realize(mats, (x0 + 4 * mid + x1) / 6) + (h / 12) * (a0 @ a1 - a1 @ a0)
            inc = np.real(logm(np.linalg.solve(start, g))) / h
            worst = max(worst, float(np.max(np.abs(inc - expected))))
    return GroupCurve(np.array(traj.times), np.array(elements), worst)


def distance_to_one_parameter_group(element, generator) -> float:
    """Distance from ``log(element)`` to the line spanned by ``generator``."""
    lg = np.real(logm(np.asarray(element, float))).ravel()
    v = np.asarray(generator, float).ravel()
    coef = (lg @ v) / (v @ v)
    return float(np.linalg.norm(lg - coef * v))
