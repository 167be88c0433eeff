"""Finite-dimensional real Lie algebras given by exact structure constants.

The structure tensor ``c[i][j][k]`` encodes ``[b_i, b_j] = sum_k c[i][j][k] b_k``.
Vectors are plain sequences of coordinates in the algebra basis; when every
coordinate is an ``int`` or ``Fraction`` the operations stay exact, otherwise
they return float ``numpy`` arrays.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np

from . import exact
from .errors import InvalidInput, NotFound

MAX_DIM = 12

Tensor = tuple[tuple[tuple[Fraction, ...], ...], ...]


@dataclass(frozen=True)
class LieAlgebra:
    basis: tuple[str, ...]
    structure: Tensor
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = len(self.basis)
        if not 1 <= n <= MAX_DIM:
            raise InvalidInput(f"dimension must be in 1..{MAX_DIM}, got {n}")
        if len(set(self.basis)) != n:
            raise InvalidInput("basis names must be distinct")
        c = self.structure
        if len(c) != n or any(len(row) != n or any(len(col) != n for col in row) for row in c):
            raise InvalidInput(f"structure tensor must have shape ({n},{n},{n})")
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if c[i][j][k] != -c[j][i][k]:
                        raise InvalidInput(f"structure constants not antisymmetric at ({i},{j},{k})")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index(self, name: str) -> int:
        try:
            return self.basis.index(name)
        except ValueError:
            raise NotFound(f"no basis vector {name!r} in {self.basis}") from None

    def vector(self, **coords) -> tuple[Fraction, ...]:
        """Exact vector from named coordinates, e.g. ``alg.vector(e=1, h=2)``."""
        out = [Fraction(0)] * self.dim
        for name, value in coords.items():
            out[self.index(name)] = Fraction(value)
        return tuple(out)

    def basis_vector(self, i: int | str) -> tuple[Fraction, ...]:
        if isinstance(i, str):
            i = self.index(i)
        return tuple(Fraction(int(k == i)) for k in range(self.dim))

    @cached_property
    def structure_array(self) -> np.ndarray:
        return np.array(self.structure, dtype=float)


def _check_vector(alg: LieAlgebra, x):
    if len(x) != alg.dim:
        raise InvalidInput(f"expected {alg.dim} coordinates, got {len(x)}")


def bracket(alg: LieAlgebra, x, y):
    """Lie bracket ``[x, y]``, exact when both inputs are exact."""
    _check_vector(alg, x)
    _check_vector(alg, y)
    if exact.is_exact(x) and exact.is_exact(y):
        c = alg.structure
        n = alg.dim
        out = [Fraction(0)] * n
        for i in range(n):
            if not x[i]:
                continue
            for j in range(n):
                if not y[j]:
                    continue
                w = Fraction(x[i]) * Fraction(y[j])
                for k in range(n):
                    if c[i][j][k]:
                        out[k] += w * c[i][j][k]
        return tuple(out)
    return np.einsum("ijk,i,j->k", alg.structure_array, np.asarray(x, float), np.asarray(y, float))


def ad_matrix(alg: LieAlgebra, x):
    """Matrix of ``y -> [x, y]``; entry (k, j) is the b_k coefficient of [x, b_j]."""
    _check_vector(alg, x)
    n = alg.dim
    if exact.is_exact(x):
        c = alg.structure
        return tuple(
            tuple(sum((Fraction(x[i]) * c[i][j][k] for i in range(n)), Fraction(0)) for j in range(n))
            for k in range(n)
        )
    return np.einsum("i,ijk->kj", np.asarray(x, float), alg.structure_array)


def jacobi_residual(alg: LieAlgebra) -> Fraction:
    """Largest coefficient of the cyclic Jacobi sum over all basis triples."""
    n = alg.dim
    basis = [alg.basis_vector(i) for i in range(n)]
    worst = Fraction(0)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                bi, bj, bk = basis[i], basis[j], basis[k]
                terms = (
                    bracket(alg, bi, bracket(alg, bj, bk)),
                    bracket(alg, bj, bracket(alg, bk, bi)),
                    bracket(alg, bk, bracket(alg, bi, bj)),
                )
                worst = max(worst, exact.max_abs([sum(t) for t in zip(*terms)]))
    return worst


def killing_form(alg: LieAlgebra) -> exact.Matrix:
    """``K[i][j] = trace(ad_{b_i} ad_{b_j})``, exact."""
    n = alg.dim
    c = alg.structure
    return tuple(
        tuple(
            sum((c[i][b][a] * c[j][a][b] for a in range(n) for b in range(n)), Fraction(0))
            for j in range(n)
        )
        for i in range(n)
    )


def from_brackets(basis, brackets: dict, name: str = "") -> LieAlgebra:
    """Build an algebra from ``{(i, j): {k: coeff}}``; antisymmetric completion is automatic."""
    n = len(basis)
    if not 1 <= n <= MAX_DIM:
        raise InvalidInput(f"dimension must be in 1..{MAX_DIM}, got {n}")
    c = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    seen = {}
    for (i, j), coeffs in brackets.items():
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidInput(f"bracket index out of range: ({i},{j})")
        vec = [Fraction(0)] * n
        for k, q in coeffs.items():
            if not 0 <= k < n:
                raise InvalidInput(f"coefficient index out of range: {k}")
            vec[k] = exact.parse_rational(q)
        if i == j:
            if any(vec):
                raise InvalidInput(f"[b{i}, b{i}] must vanish")
            continue
        if (j, i) in seen and seen[(j, i)] != [-v for v in vec]:
            raise InvalidInput(f"brackets ({i},{j}) and ({j},{i}) are inconsistent")
        seen[(i, j)] = vec
        for k in range(n):
            c[i][j][k] = vec[k]
            c[j][i][k] = -vec[k]
    return LieAlgebra(tuple(basis), tuple(tuple(tuple(col) for col in row) for row in c), name=name)


def direct_sum(a: LieAlgebra, b: LieAlgebra, name: str = "") -> LieAlgebra:
    """Block direct sum; brackets between the two summands vanish."""
    n, m = a.dim, b.dim
    size = n + m
    if size > MAX_DIM:
        raise InvalidInput(f"direct sum dimension {size} exceeds {MAX_DIM}")
    zero = Fraction(0)
    c = [[[zero] * size for _ in range(size)] for _ in range(size)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                c[i][j][k] = a.structure[i][j][k]
    for i in range(m):
        for j in range(m):
            for k in range(m):
                c[n + i][n + j][n + k] = b.structure[i][j][k]
    basis = a.basis + b.basis
    if len(set(basis)) != size:
        basis = tuple(f"{s}_1" for s in a.basis) + tuple(f"{s}_2" for s in b.basis)
    return LieAlgebra(basis, tuple(tuple(tuple(col) for col in row) for row in c),
                      name=name or f"{a.name}+{b.name}")


# Basis order follows the presentation order used for every displayed matrix:
#   sl2: (e, h, f) with [f,e]=h, [h,e]=-e, [h,f]=f
#   sol: (e1, e2, h) with [h,e1]=e1, [h,e2]=-e2
#   euc: (f1, f2, e) with [e,f1]=-f2, [e,f2]=f1
_BUILTIN_BRACKETS = {
    "sl2": (("e", "h", "f"), {(2, 0): {1: 1}, (1, 0): {0: -1}, (1, 2): {2: 1}}),
    "sol": (("e1", "e2", "h"), {(2, 0): {0: 1}, (2, 1): {1: -1}}),
    "euc": (("f1", "f2", "e"), {(2, 0): {1: -1}, (2, 1): {0: 1}}),
}

BUILTIN_NAMES = ("sl2", "sol", "euc", "sol_euc")


def load_builtin(name: str) -> LieAlgebra:
    if name == "sol_euc":
        return direct_sum(load_builtin("sol"), load_builtin("euc"), name="sol_euc")
    try:
        basis, brackets = _BUILTIN_BRACKETS[name]
    except KeyError:
        raise NotFound(f"unknown builtin algebra {name!r}; choose from {BUILTIN_NAMES}") from None
    return from_brackets(basis, brackets, name=name)


def algebra_from_dict(data: dict, name: str = "") -> LieAlgebra:
    """Parse the algebra JSON schema (``dim``, ``basis``, ``brackets``)."""
    try:
        n = int(data["dim"])
        basis = list(data.get("basis") or [f"b{i}" for i in range(n)])
        if len(basis) != n:
            raise InvalidInput(f"basis has {len(basis)} names but dim is {n}")
        brackets = {}
        for pos, entry in enumerate(data.get("brackets", [])):
            try:
                key = (int(entry["i"]), int(entry["j"]))
                coeffs = {int(k): v for k, v in entry["coeffs"].items()}
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidInput(f"brackets[{pos}]: malformed entry ({exc})") from None
            if key in brackets:
                raise InvalidInput(f"brackets[{pos}]: duplicate pair {key}")
            brackets[key] = coeffs
    except KeyError as exc:
        raise InvalidInput(f"missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInput):
            raise
        raise InvalidInput(str(exc)) from None
    return from_brackets(basis, brackets, name=name)


def algebra_to_dict(alg: LieAlgebra) -> dict:
    brackets = []
    for i in range(alg.dim):
        for j in range(i + 1, alg.dim):
            coeffs = {str(k): exact.fmt(v) for k, v in enumerate(alg.structure[i][j]) if v}
            if coeffs:
                brackets.append({"i": i, "j": j, "coeffs": coeffs})
    return {"dim": alg.dim, "basis": list(alg.basis), "brackets": brackets}


def load_algebra(source: str) -> LieAlgebra:
    """Builtin name or path to an algebra JSON file."""
    if source in BUILTIN_NAMES:
        return load_builtin(source)
    path = Path(source)
    if not path.exists():
        raise NotFound(f"{source!r} is neither a builtin algebra nor an existing file")
    return algebra_from_dict(read_json(path), name=path.stem)


def read_json(path) -> dict:
    """Parse a JSON file, reporting syntax errors with line and column."""
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
