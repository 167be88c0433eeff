"""Command-line front end.

Exit codes: 0 success, 1 a verification failed (``verify``, or an
``Undetermined`` completeness verdict), 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import exact
from .errors import EALabError
from .flow import geodesic_field, integrate, trajectory_csv, trajectory_sidecar
from .lattice import lattice_search
from .lie import BUILTIN_NAMES, algebra_to_dict, jacobi_residual, load_algebra
from .metric import adstar_matrix, biinvariance_residual, form_to_dict, load_metric, signature
from .solver import UNDETERMINED, SolverOptions, completeness_classify, find_special_directions
from .sphere import SphereOptions, sphere_portrait
from .suite import report_json, report_table, run_paper_checks

log = logging.getLogger("ea_lab")

COMMANDS = ("info", "adstar", "field", "integrate", "radial", "sphere-orbits", "complete", "verify",
            "lattice-search")


class UsageError(Exception):
    pass


def parse_vector(text: str, dim: int):
    """``"1,2,3"`` or ``"3/8,-1/2,1"`` as exact coordinates; decimals are read exactly too."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        vals = tuple(Fraction(p) for p in parts)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse vector {text!r}") from None
    if len(vals) != dim:
        raise UsageError(f"vector {text!r} has {len(vals)} coordinates, algebra has dim {dim}")
    return vals


def _fmt_vec(v) -> str:
    return "(" + ", ".join(exact.fmt(x) for x in v) + ")"


def _fmt_matrix(m) -> list[list[str]]:
    return [[exact.fmt(x) for x in row] for row in m]


def _term(c, name: str) -> str:
    sign = "-" if c < 0 else "+"
    mag = abs(c)
    return f"{sign} {name}" if mag == 1 else f"{sign} {exact.fmt(mag)}*{name}"


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _metric(args):
    alg = load_algebra(args.algebra)
    return load_metric(alg, args.metric)


def _require_algebra(args):
    if args.algebra is None:
        raise UsageError(f"{args.command} needs an algebra (builtin {', '.join(BUILTIN_NAMES)} or a JSON path)")


# --- commands ----------------------------------------------------------------

def cmd_info(args) -> int:
    ma = _metric(args)
    alg = ma.algebra
    pos, neg = signature(ma.form)
    data = {
        "name": alg.name,
        "dim": alg.dim,
        "basis": list(alg.basis),
        "algebra": algebra_to_dict(alg),
        "metric": form_to_dict(ma.form),
        "signature": [pos, neg],
        "jacobi_residual": exact.fmt(jacobi_residual(alg)),
        "biinvariance_residual": exact.fmt(biinvariance_residual(ma)),
    }
    if args.json:
        _emit(args, _dump(data))
        return 0
    lines = [f"algebra {alg.name}", f"dim {alg.dim}", f"basis {', '.join(alg.basis)}", "brackets:"]
    for i in range(alg.dim):
        for j in range(i + 1, alg.dim):
            terms = [_term(c, alg.basis[k]) for k, c in enumerate(alg.structure[i][j]) if c]
            if terms:
                expr = " ".join(terms)
                expr = expr[2:] if expr.startswith("+ ") else "-" + expr[2:]
                lines.append(f"  [{alg.basis[i]},{alg.basis[j]}] = {expr}")
    lines.append("metric:")
    lines += ["  " + " ".join(f"{x:>5}" for x in row) for row in _fmt_matrix(ma.form.matrix)]
    lines.append(f"signature (pos, neg) = ({pos}, {neg})")
    lines.append(f"jacobi residual {data['jacobi_residual']}, bi-invariance residual {data['biinvariance_residual']}")
    _emit(args, "\n".join(lines))
    return 0


def cmd_adstar(args) -> int:
    ma = _metric(args)
    alg = ma.algebra
    if args.at:
        v = parse_vector(args.at, alg.dim)
        mats = {_fmt_vec(v): _fmt_matrix(adstar_matrix(ma, v))}
    else:
        mats = {alg.basis[i]: _fmt_matrix(ma.adstar_basis(i)) for i in range(alg.dim)}
    data = {"algebra": alg.name, "basis": list(alg.basis), "adstar": mats}
    if args.json:
        _emit(args, _dump(data))
        return 0
    lines = []
    for key, m in mats.items():
        lines.append(f"ad*_{key}:")
        lines += ["  " + " ".join(f"{x:>5}" for x in row) for row in m]
    _emit(args, "\n".join(lines))
    return 0


def cmd_field(args) -> int:
    ma = _metric(args)
    if not args.at:
        raise UsageError("field needs --at x1,...,xn")
    v = parse_vector(args.at, ma.dim)
    f = geodesic_field(ma, v)
    if args.json:
        _emit(args, _dump({"algebra": ma.algebra.name, "at": [exact.fmt(x) for x in v],
                           "field": [exact.fmt(x) for x in f]}))
    else:
        _emit(args, f"F{_fmt_vec(v)} = {_fmt_vec(f)}")
    return 0


def cmd_integrate(args) -> int:
    ma = _metric(args)
    if not args.at:
        raise UsageError("integrate needs --at x1,...,xn")
    x0 = np.array(parse_vector(args.at, ma.dim), dtype=float)
    traj = integrate(ma, x0, args.horizon, args.tol)
    if args.out:
        out = Path(args.out)
        out.write_text(trajectory_csv(traj))
        out.with_suffix(".json").write_text(trajectory_sidecar(traj) + "\n")
        if args.json:
            print(trajectory_sidecar(traj))
        else:
            print(f"wrote {out} and {out.with_suffix('.json')}: {traj.termination}")
        return 0
    if args.csv:
        sys.stdout.write(trajectory_csv(traj))
    elif args.json:
        print(trajectory_sidecar(traj))
    else:
        meta = traj.metadata()
        print(f"termination {meta['termination']}")
        if meta["blowup_time"] is not None:
            print(f"estimated blowup time {meta['blowup_time']:.12g}")
        print(f"final time {meta['final_time']:.12g} after {meta['steps']} steps")
        print(f"final state {np.array2string(traj.final_state, precision=10)}")
        print(f"energy drift {meta['energy_drift']:.3g}")
    return 0


def cmd_radial(args) -> int:
    ma = _metric(args)
    opts = SolverOptions(grid_density=args.grid_density, seed=args.seed)
    dirs = find_special_directions(ma, opts)
    if args.json:
        _emit(args, _dump([d.to_dict() for d in dirs]))
        return 0
    lines = [f"{'kind':<9} {'lambda':>12}  {'causal':<10} {'isolated':<8} {'dim':>3}  v"]
    for d in dirs:
        lines.append(f"{d.kind:<9} {d.lam:>12.6g}  {d.causal_type:<10} {str(d.isolated):<8} {d.component_dim:>3}  "
                     f"{np.array2string(np.array(d.v), precision=6, suppress_small=True)}")
    _emit(args, "\n".join(lines))
    return 0


def cmd_sphere_orbits(args) -> int:
    ma = _metric(args)
    rng = np.random.default_rng(args.seed)
    starts = rng.standard_normal((args.count, ma.dim))
    starts /= np.linalg.norm(starts, axis=1, keepdims=True)
    opts = SphereOptions(horizon=args.horizon, tol=args.tol)
    portrait = sphere_portrait(ma, starts, opts)
    if args.json or args.out:
        _emit(args, json.dumps(portrait, sort_keys=True))
        return 0
    counts: dict[str, int] = {}
    for orbit in portrait:
        kind = orbit["verdict"]["kind"]
        counts[kind] = counts.get(kind, 0) + 1
    print("\n".join(f"{k:<24} {n}" for k, n in sorted(counts.items())))
    return 0


def cmd_complete(args) -> int:
    ma = _metric(args)
    if not args.at:
        raise UsageError("complete needs --at x1,...,xn")
    v = parse_vector(args.at, ma.dim)
    tag = completeness_classify(ma, v, horizon=args.horizon, tol=args.tol)
    if args.json:
        _emit(args, _dump(tag.to_dict()))
    else:
        lines = [f"{tag.value} (methods: {', '.join(tag.methods)})"]
        if tag.sigma is not None:
            lines.append(f"sigma = {tag.sigma:.12g}")
        for side in ("forward", "backward"):
            meta = tag.integration[side]
            extra = f" at t = {meta['blowup_time']:.12g}" if meta["blowup_time"] is not None else ""
            lines.append(f"{side}: {meta['termination']}{extra}")
        if tag.diagnostic:
            lines.append(f"diagnostic: {tag.diagnostic}")
        _emit(args, "\n".join(lines))
    return 1 if tag.value == UNDETERMINED else 0


def cmd_verify(args) -> int:
    results = run_paper_checks(args.filter)
    if not results:
        raise UsageError(f"no check id starts with {args.filter!r}")
    _emit(args, report_json(results) if args.json else report_table(results))
    return 0 if all(r.passed for r in results) else 1


def cmd_lattice_search(args) -> int:
    if args.bound < 1:
        raise UsageError("--bound must be >= 1")
    rows = lattice_search(args.bound)
    if args.json:
        _emit(args, _dump(rows))
        return 0
    lines = [f"{'a':>4} {'b':>4} {'lambda':>14} {'alpha':>14} {'residual':>10}"]
    for r in rows:
        lines.append(f"{r['a']:>4} {r['b']:>4} {r['lambda']:>14.10f} {r['alpha']:>14.10f} {r['residual']:>10.2e}")
    lines.append(f"{len(rows)} accepted")
    _emit(args, "\n".join(lines))
    return 0


HANDLERS = {
    "info": cmd_info, "adstar": cmd_adstar, "field": cmd_field, "integrate": cmd_integrate,
    "radial": cmd_radial, "sphere-orbits": cmd_sphere_orbits, "complete": cmd_complete,
    "verify": cmd_verify, "lattice-search": cmd_lattice_search,
}
NEEDS_ALGEBRA = {"info", "adstar", "field", "integrate", "radial", "sphere-orbits", "complete"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--algebra", dest="algebra_flag", help="builtin name or algebra JSON path")
    common.add_argument("--metric", help="metric JSON path, 'killing', or a preset name (default: paired preset)")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--horizon", type=float, default=100.0)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--grid-density", type=int, default=64)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", help="write output to this path")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ea-lab", description="Geodesic flows of left-invariant metrics.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in NEEDS_ALGEBRA:
            p.add_argument("algebra", nargs="?", help="builtin name or algebra JSON path")
        if name in ("adstar", "field", "integrate", "complete"):
            p.add_argument("--at", help="comma-separated coordinates, e.g. 3/8,-1/2,1")
        if name == "integrate":
            p.add_argument("--csv", action="store_true", help="print the trajectory CSV")
        if name == "sphere-orbits":
            p.add_argument("--count", type=int, default=100, help="number of random initial directions")
        if name == "verify":
            p.add_argument("--filter", help="only checks whose id starts with this prefix")
        if name == "lattice-search":
            p.add_argument("--bound", type=int, default=10)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command in NEEDS_ALGEBRA:
        if args.algebra and args.algebra_flag and args.algebra != args.algebra_flag:
            parser.error("algebra given twice with different values")
        args.algebra = args.algebra or args.algebra_flag
    try:
        if args.command in NEEDS_ALGEBRA:
            _require_algebra(args)
        return HANDLERS[args.command](args)
    except (UsageError, EALabError) as exc:
        print(f"ea-lab {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ea-lab {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
