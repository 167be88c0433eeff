"""Semi-Riemannian inner products on a Lie algebra and their metric adjoints.

Convention: ``ad*_x`` is the matrix ``M`` with ``q(M u, w) = q(u, [x, w])`` for all
``u, w``, so ``M = Q^-1 ad_x^T Q``.  With this convention the geodesic field is
``x -> ad*_x x``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import exact
from .errors import DegenerateForm, InvalidInput, NotFound
from .lie import BUILTIN_NAMES, LieAlgebra, ad_matrix, killing_form, load_builtin, read_json

INERTIA_TOL = 1e-10


@dataclass(frozen=True)
class BilinearForm:
    """Symmetric bilinear form given by its Gram matrix in the algebra basis."""

    matrix: tuple

    def __post_init__(self):
        m = self.matrix
        n = len(m)
        if any(len(row) != n for row in m):
            raise InvalidInput("form matrix must be square")
        if exact.is_exact(m):
            m = exact.matrix(m)
        else:
            m = tuple(tuple(float(v) for v in row) for row in m)
        object.__setattr__(self, "matrix", m)
        for i in range(n):
            for j in range(i + 1, n):
                if m[i][j] != m[j][i]:
                    raise InvalidInput(f"form matrix not symmetric at ({i},{j})")

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @property
    def is_exact(self) -> bool:
        return exact.is_exact(self.matrix)

    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=float)

    def __call__(self, x, y):
        if self.is_exact and exact.is_exact(x) and exact.is_exact(y):
            return exact.bilinear(self.matrix, exact.to_fractions(x), exact.to_fractions(y))
        return float(np.asarray(x, float) @ self.array() @ np.asarray(y, float))

    def is_degenerate(self) -> bool:
        if self.is_exact:
            return exact.det(self.matrix) == 0
        s = np.linalg.svd(self.array(), compute_uv=False)
        return s.size == 0 or s[-1] <= INERTIA_TOL * max(1.0, s[0])


def _exact_inertia(m) -> tuple[int, int, int]:
    """(pos, neg, zero) by symmetric elimination under exact congruence."""
    a = [list(row) for row in m]
    pos = neg = 0
    while a:
        n = len(a)
        p = next((i for i in range(n) if a[i][i] != 0), None)
        if p is None:
            hit = next(((i, j) for i in range(n) for j in range(i + 1, n) if a[i][j] != 0), None)
            if hit is None:
                return pos, neg, n
            i, j = hit
            # replace b_i by b_i + b_j: the new diagonal entry is 2 a_ij != 0
            for k in range(n):
                a[i][k] += a[j][k]
            for k in range(n):
                a[k][i] += a[k][j]
            p = i
        d = a[p][p]
        if d > 0:
            pos += 1
        else:
            neg += 1
        rest = [k for k in range(n) if k != p]
        a = [[a[r][c] - a[r][p] * a[p][c] / d for c in rest] for r in rest]
    return pos, neg, 0


def signature(form: BilinearForm) -> tuple[int, int]:
    """Sylvester inertia ``(pos, neg)``; raw counts, no Lorentzian normalisation."""
    if form.is_exact:
        pos, neg, zero = _exact_inertia(form.matrix)
    else:
        w = np.linalg.eigvalsh(form.array())
        tol = INERTIA_TOL * max(1.0, float(np.max(np.abs(w))))
        pos, neg = int(np.sum(w > tol)), int(np.sum(w < -tol))
        zero = len(w) - pos - neg
    if zero:
        raise DegenerateForm(f"form is degenerate ({zero} null directions)")
    return pos, neg


def self_adjoint_factor(bi: BilinearForm, q: BilinearForm):
    """The ``bi``-self-adjoint map ``A`` with ``q(v, w) = bi(v, A w)``, i.e. ``Bi^-1 Q``."""
    if bi.dim != q.dim:
        raise InvalidInput("forms have different dimensions")
    if bi.is_degenerate():
        raise DegenerateForm("reference form is degenerate")
    if bi.is_exact and q.is_exact:
        a = exact.matmul(exact.inverse(bi.matrix), q.matrix)
        ba = exact.matmul(bi.matrix, a)
        assert all(ba[i][j] == ba[j][i] for i in range(q.dim) for j in range(q.dim))
        return a
    return np.linalg.solve(bi.array(), q.array())


@dataclass(frozen=True)
class MetricAlgebra:
    """A Lie algebra with a nondegenerate metric; ad and ad* are cached eagerly."""

    algebra: LieAlgebra
    form: BilinearForm
    name: str = field(default="", compare=False)

    def __post_init__(self):
        alg, form = self.algebra, self.form
        if alg.dim != form.dim:
            raise InvalidInput(f"form is {form.dim}-dimensional but algebra has dim {alg.dim}")
        if form.is_degenerate():
            raise DegenerateForm("metric form is degenerate")
        n = alg.dim
        ads = tuple(ad_matrix(alg, alg.basis_vector(i)) for i in range(n))
        if form.is_exact:
            q = form.matrix
            qinv = exact.inverse(q)
            adstars = tuple(exact.matmul(exact.matmul(qinv, exact.transpose(ad)), q) for ad in ads)
            for i in range(n):
                # q(ad*_i u, w) == q(u, [b_i, w]) on basis pairs
                lhs = exact.matmul(exact.transpose(adstars[i]), q)
                rhs = exact.matmul(q, ads[i])
                if lhs != rhs:
                    raise AssertionError("adjoint identity failed")
            adstar_arr = np.array(adstars, dtype=float)
        else:
            qa = form.array()
            adstar_arr = np.array([np.linalg.solve(qa, np.array(ad, float).T @ qa) for ad in ads])
            adstars = adstar_arr
        object.__setattr__(self, "_ads", ads)
        object.__setattr__(self, "_adstars", adstars)
        # F_m(x) = sum_{i,n} T[m,i,n] x_i x_n with T[m,i,n] = (ad*_{b_i})[m][n]
        object.__setattr__(self, "field_tensor", np.ascontiguousarray(adstar_arr.transpose(1, 0, 2)))
        sym = 0.5 * (self.field_tensor + self.field_tensor.transpose(0, 2, 1))
        object.__setattr__(self, "sym_tensor", sym)
        object.__setattr__(self, "q_array", form.array())

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def is_exact(self) -> bool:
        return self.form.is_exact

    def ad_basis(self, i: int):
        return self._ads[i]

    def adstar_basis(self, i: int):
        return self._adstars[i]

    def q(self, x, y):
        return self.form(x, y)


def adstar_matrix(ma: MetricAlgebra, x):
    """Matrix of ``ad*_x``; exact when the metric and ``x`` are exact."""
    if len(x) != ma.dim:
        raise InvalidInput(f"expected {ma.dim} coordinates, got {len(x)}")
    n = ma.dim
    if ma.is_exact and exact.is_exact(x):
        xs = exact.to_fractions(x)
        return tuple(
            tuple(sum((xs[i] * ma.adstar_basis(i)[r][c] for i in range(n)), Fraction(0)) for c in range(n))
            for r in range(n)
        )
    return np.einsum("i,min->mn", np.asarray(x, float), ma.field_tensor)


def biinvariance_residual(ma: MetricAlgebra):
    """``max_i |ad*_{b_i} + ad_{b_i}|`` entry-wise; zero iff the metric is bi-invariant."""
    n = ma.dim
    if ma.is_exact:
        return exact.max_abs([
            [ma.adstar_basis(i)[r][c] + ma.ad_basis(i)[r][c] for r in range(n) for c in range(n)]
            for i in range(n)
        ])
    return float(max(np.max(np.abs(np.asarray(ma.adstar_basis(i)) + np.asarray(ma.ad_basis(i), float)))
                     for i in range(n)))


# Metric presets.  sl2 uses q(v, w) = K(v, A w) with K the Killing form and
# A the unipotent upper-triangular matrix below.
SL2_A = exact.matrix([[1, 1, 0], [0, 1, 1], [0, 0, 1]])
_ANTI_DIAGONAL = exact.matrix([[0, 0, 1], [0, 1, 0], [1, 0, 0]])


def _block_diag(a, b):
    n, m = len(a), len(b)
    z = Fraction(0)
    rows = [list(r) + [z] * m for r in a] + [[z] * n + list(r) for r in b]
    return exact.matrix(rows)


def builtin_form(name: str) -> BilinearForm:
    if name == "sl2":
        return BilinearForm(exact.matmul(killing_form(load_builtin("sl2")), SL2_A))
    if name in ("sol", "euc"):
        return BilinearForm(_ANTI_DIAGONAL)
    if name == "sol_euc":
        return BilinearForm(_block_diag(_ANTI_DIAGONAL, _ANTI_DIAGONAL))
    raise NotFound(f"no preset metric for {name!r}")


def builtin_metric(name: str) -> MetricAlgebra:
    return MetricAlgebra(load_builtin(name), builtin_form(name), name=name)


def killing_metric(alg: LieAlgebra) -> MetricAlgebra:
    return MetricAlgebra(alg, BilinearForm(killing_form(alg)), name=f"{alg.name}/killing")


def form_from_dict(data: dict, dim: int) -> BilinearForm:
    """Parse the metric JSON schema; symmetric completion is automatic."""
    m = [[Fraction(0)] * dim for _ in range(dim)]
    seen = {}
    try:
        entries = data["entries"]
    except (KeyError, TypeError):
        raise InvalidInput("metric JSON needs an 'entries' list") from None
    for pos, entry in enumerate(entries):
        try:
            i, j = int(entry["i"]), int(entry["j"])
            value = exact.parse_rational(entry["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"entries[{pos}]: malformed entry ({exc})") from None
        if not (0 <= i < dim and 0 <= j < dim):
            raise InvalidInput(f"entries[{pos}]: index out of range for dim {dim}")
        key = (min(i, j), max(i, j))
        if key in seen and seen[key] != value:
            raise InvalidInput(f"entries[{pos}]: conflicting value for {key}")
        seen[key] = value
        m[i][j] = m[j][i] = value
    return BilinearForm(m)


def form_to_dict(form: BilinearForm) -> dict:
    return {"entries": [
        {"i": i, "j": j, "value": exact.fmt(form.matrix[i][j])}
        for i in range(form.dim) for j in range(i, form.dim) if form.matrix[i][j]
    ]}


def load_metric(alg: LieAlgebra, source: str | None = None) -> MetricAlgebra:
    """Metric from a JSON path, ``"killing"``, a preset name, or the preset paired with a builtin."""
    if source is None:
        return MetricAlgebra(alg, builtin_form(alg.name), name=alg.name)
    if source == "killing":
        return killing_metric(alg)
    if source in BUILTIN_NAMES:
        return MetricAlgebra(alg, builtin_form(source), name=alg.name)
    path = Path(source)
    if not path.exists():
        raise NotFound(f"metric {source!r} is neither a preset nor an existing file")
    return MetricAlgebra(alg, form_from_dict(read_json(path), alg.dim), name=alg.name)
