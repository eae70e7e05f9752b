"""Command-line entry point.

Every report is a JSON object holding the command, the run configuration,
a sha256 of the input files and the result.  Exit codes:

    0   success / Matched / ModelsCoincide / Indistinguishable
    2   proven distinct (signature difference, NotConstantType, ModelsDistinct)
    3   inconclusive (no match found, non-regular symbol, no overlap)
    64  usage error
    65  data error
    70  internal error
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .connect import (
    Connection,
    DegenerateSymbol,
    DiffOperator,
    NonPolynomialSolution,
    NonRegular,
    NotConstantType,
    ShapeError,
    grid_parallel_residual,
    is_zero_tensor,
    torsion_curvature,
    total_symbol,
    wagner_connection,
)
from .equiv import (
    MATCHED,
    SIGNATURE_MISMATCH,
    MatchConfig,
    orbit_match,
    signature_match,
)
from .invar import (
    InadmissibleError,
    SignatureConfig,
    invariant_signature,
    sp_orbit_dimension,
)
from .models import (
    COINCIDE,
    MODELS_DISTINCT,
    ChartMismatch,
    NotAdjusted,
    identity_chart,
    model_compare,
    model_surface,
    symbol_invariant_field,
)
from .polyalg import DimensionError, HomogeneousPoly, monomial_basis
from .serialize import (
    DataError,
    connection_to_json,
    dumps,
    load_json,
    parse_inputs,
    poly_to_json,
    surface_to_json,
    total_symbol_to_json,
    value_to_json,
)
from .transvect import poisson_bracket, transvectant

EXIT_OK = 0
EXIT_DISTINCT = 2
EXIT_INCONCLUSIVE = 3
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_INTERNAL = 70

COMMANDS = ("transvect", "invariants", "orbit-dim", "signature", "match", "wagner", "split",
            "model", "model-compare")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    grid: list | None = None
    signature_config: dict = field(default_factory=lambda: SignatureConfig().to_dict())
    output: str | None = None

    def to_dict(self) -> dict:
        return {"seed": self.seed, "tolerances": dict(self.tolerances), "grid": self.grid,
                "signature_config": self.signature_config, "output": self.output}


def parse_grid(spec: str, dim: int) -> list:
    """``"lo:hi:count,..."`` -> exact rational grid points (one spec repeats over all axes)."""
    axes = []
    for part in spec.split(","):
        fields = part.strip().split(":")
        if len(fields) != 3:
            raise UsageError(f"grid axis {part!r} is not of the form lo:hi:count")
        try:
            lo, hi, count = Fraction(fields[0]), Fraction(fields[1]), int(fields[2])
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"grid axis {part!r} has a non-numeric field") from None
        if count < 1:
            raise UsageError(f"grid axis {part!r} needs a positive count")
        step = (hi - lo) / (count - 1) if count > 1 else Fraction(0)
        axes.append([lo + i * step for i in range(count)])
    if len(axes) == 1:
        axes = axes * dim
    if len(axes) != dim:
        raise UsageError(f"grid has {len(axes)} axes, base dimension is {dim}")
    return [tuple(p) for p in itertools.product(*axes)]


def _grid_axes(spec):
    return None if spec is None else [a.strip() for a in spec.split(",")]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="comparison tolerance")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--grid", default=None,
                        help="base grid 'lo:hi:count,...' (one axis spec is repeated)")
    common.add_argument("--signature-config", default=None, metavar="FILE",
                        help="JSON file with signature settings")
    common.add_argument("--output", "-o", default=None, help="write the report here")
    common.add_argument("--format", choices=("json", "table"), default="json")

    p = _Parser(prog="opinv", description="Invariants and equivalence of differential operators.")
    p.add_argument("--version", action="version", version=f"opinv {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    s = sub.add_parser("transvect", parents=[common], help="transvectant of two polynomials")
    s.add_argument("P")
    s.add_argument("Q")
    s.add_argument("--order", "-r", type=int, required=True)
    s.add_argument("--kind", choices=("symplectic", "metric", "poisson"), default="symplectic")

    s = sub.add_parser("invariants", parents=[common], help="invariant signature of a symbol")
    s.add_argument("P")

    s = sub.add_parser("orbit-dim", parents=[common], help="Sp orbit dimension of a symbol")
    s.add_argument("P")

    s = sub.add_parser("signature", parents=[common], help="compare signatures of two symbols")
    s.add_argument("P")
    s.add_argument("Q")

    s = sub.add_parser("match", parents=[common], help="search for g in Sp with g.P = Q")
    s.add_argument("P")
    s.add_argument("Q")
    s.add_argument("--restarts", type=int, default=20)
    s.add_argument("--max-iters", type=int, default=200)

    s = sub.add_parser("wagner", parents=[common], help="Wagner connection of a symbol field")
    s.add_argument("sigma")

    s = sub.add_parser("split", parents=[common], help="total symbol of an operator")
    s.add_argument("A")
    s.add_argument("connection", nargs="?", default=None, help="connection file (flat if omitted)")

    s = sub.add_parser("model", parents=[common], help="sample the model surface of an operator")
    s.add_argument("A")
    s.add_argument("--chart", default=None,
                   help="semicolon-separated invariant labels (default: identity chart)")

    s = sub.add_parser("model-compare", parents=[common], help="compare two model surfaces")
    s.add_argument("SA")
    s.add_argument("SB")
    return p


def _hash_inputs(paths) -> str:
    h = hashlib.sha256()
    for p in paths:
        data = Path(p).read_bytes()
        h.update(len(data).to_bytes(8, "big"))
        h.update(data)
    return h.hexdigest()


def _load(paths, kinds):
    values = parse_inputs(paths)
    for p, v, k in zip(paths, values, kinds):
        if not isinstance(v, k):
            names = " or ".join(t.__name__ for t in (k if isinstance(k, tuple) else (k,)))
            raise DataError(f"{p}: expected {names}, found {type(v).__name__}")
    return values


def _signature_config(args) -> SignatureConfig:
    if args.signature_config is None:
        return SignatureConfig()
    data = load_json(args.signature_config)
    if not isinstance(data, dict):
        raise DataError(f"{args.signature_config}: expected an object")
    try:
        return SignatureConfig.from_dict(data)
    except TypeError as exc:
        raise DataError(f"{args.signature_config}: {exc}") from None


def _signature_json(sig) -> dict:
    return {"labels": list(sig.labels), "values": [value_to_json(v) for v in sig.values]}


# -- commands ---------------------------------------------------------------


def cmd_transvect(args, cfg):
    P, Q = _load([args.P, args.Q], [HomogeneousPoly, HomogeneousPoly])
    if args.kind == "poisson":
        R = poisson_bracket(P, Q)
    else:
        R = transvectant(P, Q, args.order, args.kind)
    return EXIT_OK, {"kind": args.kind, "order": args.order, "result": poly_to_json(R)}, [args.P, args.Q]


def cmd_invariants(args, cfg):
    (P,) = _load([args.P], [HomogeneousPoly])
    sig = invariant_signature(P, _signature_config(args))
    return EXIT_OK, {"dim": P.dim, "degree": P.degree, "signature": _signature_json(sig)}, [args.P]


def cmd_orbit_dim(args, cfg):
    (P,) = _load([args.P], [HomogeneousPoly])
    dim = sp_orbit_dimension(P)
    space = len(monomial_basis(P.dim, P.degree))
    return EXIT_OK, {"orbit_dim": dim, "space_dim": space, "codim": space - dim}, [args.P]


def cmd_signature(args, cfg):
    P, Q = _load([args.P, args.Q], [HomogeneousPoly, HomogeneousPoly])
    if (P.dim, P.degree) != (Q.dim, Q.degree):
        raise DataError("symbols must have the same dimension and degree")
    config = _signature_config(args)
    tol = args.tol if args.tol is not None else 1e-9
    cfg.tolerances["signature"] = tol
    cmp = signature_match(invariant_signature(P, config), invariant_signature(Q, config), tol)
    result = {"status": cmp.status, "label": cmp.label,
              "values": None if cmp.values is None else value_to_json(list(cmp.values))}
    return (EXIT_DISTINCT if cmp.distinct else EXIT_OK), result, [args.P, args.Q]


def cmd_match(args, cfg):
    P, Q = _load([args.P, args.Q], [HomogeneousPoly, HomogeneousPoly])
    tol = args.tol if args.tol is not None else 1e-8
    mc = MatchConfig(restarts=args.restarts, max_iters=args.max_iters, tol=tol, seed=args.seed)
    cfg.tolerances["match"] = tol
    cfg.tolerances["signature"] = mc.signature_tol
    res = orbit_match(P, Q, mc, _signature_config(args))
    result = {"verdict": res.verdict, "residual": res.residual, "restart": res.restart,
              "label": res.label,
              "values": None if res.values is None else value_to_json(list(res.values)),
              "g": None if res.g is None else [[float(v) for v in row] for row in res.g.matrix]}
    code = {MATCHED: EXIT_OK, SIGNATURE_MISMATCH: EXIT_DISTINCT}.get(res.verdict, EXIT_INCONCLUSIVE)
    return code, result, [args.P, args.Q]


def cmd_wagner(args, cfg):
    (sigma,) = _load([args.sigma], [HomogeneousPoly])
    points = parse_grid(args.grid, sigma.dim) if args.grid is not None else None
    tol = args.tol if args.tol is not None else 1e-8
    if points is not None:
        cfg.tolerances["residual"] = tol
    try:
        res = wagner_connection(sigma, points=points, tol=tol)
    except NotConstantType as exc:
        return EXIT_DISTINCT, {"status": "NotConstantType", "message": str(exc),
                               "witness": value_to_json(list(exc.point)) if exc.point else None,
                               "direction": None if exc.direction is None else exc.direction + 1}, [args.sigma]
    except NonRegular as exc:
        return EXIT_INCONCLUSIVE, {"status": "NonRegular", "message": str(exc),
                                   "witness": value_to_json(list(exc.point)) if exc.point else None,
                                   "kernel_dim": exc.kernel_dim}, [args.sigma]
    except NonPolynomialSolution as exc:
        return EXIT_INCONCLUSIVE, {"status": "NonPolynomialSolution", "message": str(exc)}, [args.sigma]
    if points is None:
        T, R = torsion_curvature(res.connection)
        result = {"status": "Solved", "mode": "symbolic", "kernel_dim": res.kernel_dim,
                  "connection": connection_to_json(res.connection),
                  "diagnostics": {"torsion_zero": is_zero_tensor(T), "curvature_zero": is_zero_tensor(R)}}
    else:
        result = {"status": "Solved", "mode": "grid",
                  "points": [{"x": value_to_json(list(p)), "gamma": G.tolist(), "residual": r,
                              "kernel_dim": k}
                             for p, G, r, k in zip(res.points, res.gammas, res.residuals, res.kernel_dims)],
                  "max_parallel_residual": grid_parallel_residual(sigma, res)}
    return EXIT_OK, result, [args.sigma]


def cmd_split(args, cfg):
    paths = [args.A] + ([args.connection] if args.connection else [])
    kinds = [DiffOperator] + ([Connection] if args.connection else [])
    vals = _load(paths, kinds)
    A = vals[0]
    conn = vals[1] if len(vals) > 1 else Connection.flat(A.dim)
    return EXIT_OK, {"total_symbol": total_symbol_to_json(total_symbol(A, conn))}, paths


def cmd_model(args, cfg):
    (A,) = _load([args.A], [DiffOperator])
    if args.grid is None:
        raise UsageError("model needs --grid")
    grid = parse_grid(args.grid, A.dim)
    if args.chart is None:
        chart = identity_chart(A.dim)
    else:
        chart = [symbol_invariant_field(A, lab.strip()) for lab in args.chart.split(";")]
    return EXIT_OK, {"surface": surface_to_json(model_surface(A, chart, grid))}, [args.A]


def cmd_model_compare(args, cfg):
    from .models import ModelSurface

    SA, SB = _load([args.SA, args.SB], [ModelSurface, ModelSurface])
    tol = args.tol if args.tol is not None else 1e-6
    cfg.tolerances["model"] = tol
    v = model_compare(SA, SB, tol)
    code = {COINCIDE: EXIT_OK, MODELS_DISTINCT: EXIT_DISTINCT}.get(v.status, EXIT_INCONCLUSIVE)
    return code, v.to_dict(), [args.SA, args.SB]


HANDLERS = {
    "transvect": cmd_transvect,
    "invariants": cmd_invariants,
    "orbit-dim": cmd_orbit_dim,
    "signature": cmd_signature,
    "match": cmd_match,
    "wagner": cmd_wagner,
    "split": cmd_split,
    "model": cmd_model,
    "model-compare": cmd_model_compare,
}


def _table(obj, prefix="") -> list:
    if isinstance(obj, dict):
        lines = []
        for k, v in obj.items():
            lines += _table(v, f"{prefix}{k}.")
        return lines
    if isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        lines = []
        for i, v in enumerate(obj):
            lines += _table(v, f"{prefix}{i}.")
        return lines
    return [f"{prefix[:-1]}\t{dumps(obj, indent=0).strip()}"]


def dispatch(argv=None) -> tuple:
    """Run one command; returns ``(exit_code, report_text, output_path)``."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE, None, None
    cfg = RunConfig(seed=args.seed, grid=_grid_axes(args.grid), output=args.output)
    if args.tol is not None:
        cfg.tolerances["tol"] = args.tol
    try:
        cfg.signature_config = _signature_config(args).to_dict()
        code, result, paths = HANDLERS[args.command](args, cfg)
    except UsageError as exc:
        print(f"opinv {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE, None, None
    except (DataError, DimensionError, InadmissibleError, ShapeError, NotAdjusted, ChartMismatch,
            DegenerateSymbol) as exc:
        print(f"opinv {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA, None, None
    report = {"command": args.command, "version": __version__, "config": cfg.to_dict(),
              "inputs_sha256": _hash_inputs(paths), "exit_code": code, "result": result}
    if args.format == "table":
        text = "\n".join(_table(report)) + "\n"
    else:
        text = dumps(report)
    return code, text, args.output


def main(argv=None) -> int:
    try:
        code, text, out = dispatch(argv)
    except SystemExit as exc:  # argparse (--help, usage errors)
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the internal-error code
        print(f"opinv: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if text is not None:
        if out:
            Path(out).write_text(text)
        else:
            sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
