"""Integer matrices conjugate to ``diag(lambda, 1/lambda, R_alpha)``.

A palindromic quartic ``p(x) = x^4 + a x^3 + b x^2 + a x + 1`` factors through
``y = x + 1/x`` as ``y^2 + a y + (b - 2)``.  A resolvent root ``y1 > 2`` gives the
real pair ``lambda^{+-1}``; a root ``y2`` in ``(-2, 2)`` gives ``e^{+-i alpha}`` with
``2 cos(alpha) = y2``.  If ``p`` is irreducible over Q it cannot be cyclotomic
(it has a root off the unit circle), so ``e^{i alpha}`` is not a root of unity and
``alpha / pi`` is irrational.  No floating-point test of ``alpha / pi`` is used.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import NotLoxodromic
from .sphere import ordered_map

BLOCK_TOL = 1e-10
LATTICE_TOL = 1e-9


@dataclass(frozen=True)
class ReciprocalQuartic:
    a: int
    b: int

    @property
    def coefficients(self) -> tuple[int, ...]:
        """Highest degree first: ``(1, a, b, a, 1)``."""
        return (1, self.a, self.b, self.a, 1)

    def __call__(self, x):
        return (((x + self.a) * x + self.b) * x + self.a) * x + 1


def resolvent_roots(q: ReciprocalQuartic):
    """Real roots ``(y1, y2)`` of ``y^2 + a y + (b - 2)``, ``y1 >= y2``, or None."""
    disc = q.a * q.a - 4 * (q.b - 2)
    if disc < 0:
        return None
    r = math.sqrt(disc)
    # stable quadratic formula
    big = (-q.a - r) / 2 if q.a > 0 else (-q.a + r) / 2
    small = (q.b - 2) / big if big != 0 else (-q.a - r) / 2
    return max(big, small), min(big, small)


def quadratic_factors(q: ReciprocalQuartic) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """All integer factorisations ``(x^2 + p x + r)(x^2 + s x + r)`` with ``r = +-1``.

    Matching coefficients forces ``p + s = a``, ``r (p + s) = a`` and
    ``p s + 2 r = b``; ``p`` is searched over ``|p| <= |a| + |b| + 4`` (a bound on
    the coefficients of a monic factor of a quartic with this height).
    Returns pairs ``((p, r), (s, r))``.
    """
    out = []
    bound = abs(q.a) + abs(q.b) + 4
    for r in (1, -1):
        if r == -1 and q.a != 0:
            continue
        for p in range(-bound, bound + 1):
            s = q.a - p
            if p * s + 2 * r == q.b and p <= s:
                out.append(((p, r), (s, r)))
    return out


def rational_roots(q: ReciprocalQuartic) -> list[int]:
    # monic with constant term 1: only +-1 can be rational roots
    return [x for x in (1, -1) if q(x) == 0]


def is_irreducible(q: ReciprocalQuartic) -> bool:
    return not rational_roots(q) and not quadratic_factors(q)


def rejection_reason(q: ReciprocalQuartic) -> str | None:
    """None when accepted, otherwise why the pair fails."""
    roots = resolvent_roots(q)
    if roots is None:
        return "resolvent has no real roots"
    y1, y2 = roots
    if not y1 > 2:
        return "no resolvent root above 2 (no hyperbolic part)"
    if not -2 < y2 < 2:
        return "second resolvent root not in (-2, 2) (no elliptic part)"
    if rational_roots(q):
        return "rational root"
    if quadratic_factors(q):
        return "reducible into integer quadratics"
    return None


def enumerate_candidates(bound: int, workers: int | None = None) -> list[ReciprocalQuartic]:
    """Accepted ``(a, b)`` with ``|a|, |b| <= bound``, ordered by ``a`` then ``b``."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    rows = range(-bound, bound + 1)

    def scan(a):
        return [ReciprocalQuartic(a, b) for b in rows if rejection_reason(ReciprocalQuartic(a, b)) is None]

    return [q for chunk in ordered_map(scan, rows, workers) for q in chunk]


def companion(q: ReciprocalQuartic) -> np.ndarray:
    """Companion matrix with ``C (1, r, r^2, r^3) = r (1, r, r^2, r^3)`` for each root ``r``."""
    c = np.zeros((4, 4), dtype=np.int64)
    c[0, 1] = c[1, 2] = c[2, 3] = 1
    c[3] = [-1, -q.a, -q.b, -q.a]
    return c


def integer_det(m) -> int:
    """Exact determinant of a small integer matrix (Bareiss)."""
    a = [[int(v) for v in row] for row in m]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


@dataclass
class LoxodromicCertificate:
    quartic: ReciprocalQuartic
    lam: float
    alpha: float
    companion: np.ndarray
    conjugation: np.ndarray
    residual: float

    def target(self) -> np.ndarray:
        return target_matrix(self.lam, self.alpha)

    def to_dict(self) -> dict:
        return {
            "a": self.quartic.a,
            "b": self.quartic.b,
            "lambda": self.lam,
            "alpha": self.alpha,
            "companion": self.companion.tolist(),
            "det": integer_det(self.companion),
            "conjugation": self.conjugation.tolist(),
            "residual": self.residual,
        }


def target_matrix(lam: float, alpha: float) -> np.ndarray:
    ca, sa = math.cos(alpha), math.sin(alpha)
    out = np.zeros((4, 4))
    out[0, 0], out[1, 1] = lam, 1.0 / lam
    out[2:, 2:] = [[ca, -sa], [sa, ca]]
    return out


def _polish_root(q: ReciprocalQuartic, x: float, iters: int = 3) -> float:
    for _ in range(iters):
        p = q(x)
        dp = ((4 * x + 3 * q.a) * x + 2 * q.b) * x + q.a
        if dp == 0:
            break
        x -= p / dp
    return x


def certify(q: ReciprocalQuartic) -> LoxodromicCertificate:
    """Eigen-data of the companion matrix and a real conjugation to block form."""
    reason = rejection_reason(q)
    if reason is not None:
        raise NotLoxodromic(f"(a, b) = ({q.a}, {q.b}): {reason}")
    y1, y2 = resolvent_roots(q)
    lam = _polish_root(q, (y1 + math.sqrt(y1 * y1 - 4)) / 2)
    alpha = math.acos(y2 / 2)
    z = complex(math.cos(alpha), math.sin(alpha))

    def vandermonde(r):
        return np.array([1, r, r * r, r ** 3])

    # scale the complex vector as a whole so the rotation block is preserved
    vz = vandermonde(z) / np.linalg.norm(vandermonde(z))
    vl, vi = vandermonde(lam), vandermonde(1.0 / lam)
    s = np.column_stack([vl / np.linalg.norm(vl), vi / np.linalg.norm(vi), vz.real, -vz.imag])
    c = companion(q)
    block = np.linalg.solve(s, c.astype(float) @ s)
    residual = float(np.max(np.abs(block - target_matrix(lam, alpha))))
    if residual >= BLOCK_TOL:
        raise NotLoxodromic(f"block-diagonalisation residual {residual:.3g} exceeds {BLOCK_TOL:g}")
    return LoxodromicCertificate(q, lam, alpha, c, s, residual)


def build_gamma(cert: LoxodromicCertificate) -> dict:
    """Lattice ``Gamma_0`` = columns of ``S^-1``, preserved by ``phi = diag(A, R_alpha)``.

    ``phi S^-1 = S^-1 C`` with ``C`` in SL(4, Z), so ``phi`` maps ``S^-1 Z^4`` onto
    itself.  The hyperbolic block comes first, the rotation block second.
    """
    sinv = np.linalg.inv(cert.conjugation)
    phi = cert.target()
    residual = float(np.max(np.abs(phi @ sinv - sinv @ cert.companion.astype(float))))
    return {
        "a": cert.quartic.a,
        "b": cert.quartic.b,
        "lambda": cert.lam,
        "alpha": cert.alpha,
        "phi": phi.tolist(),
        "gamma0_basis": sinv.tolist(),
        "det_basis": float(np.linalg.det(sinv)),
        "hyperbolic_product": cert.lam * (1.0 / cert.lam),
        "lattice_residual": residual,
    }


def lattice_search(bound: int, workers: int | None = None) -> list[dict]:
    """Certificates and lattice data for every accepted quartic up to ``bound``."""
    out = []
    for q in enumerate_candidates(bound, workers):
        cert = certify(q)
        gamma = build_gamma(cert)
        row = cert.to_dict()
        row["lattice_residual"] = gamma["lattice_residual"]
        row["gamma0_basis"] = gamma["gamma0_basis"]
        out.append(row)
    return out


def search_json(rows: list[dict]) -> str:
    return json.dumps(rows, sort_keys=True)
