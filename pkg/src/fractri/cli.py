"""``fractri`` command line: partition, build, integrate, table, render.

Exit codes: 0 on success, 2 for usage errors (bad flags, unknown names,
unreadable files) and 3 for domain errors (bad d, degenerate triangle,
unattainable coloring, scaling bound violations, singular models).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import corpus
from .bfif import assemble_model, render_attractor
from .errors import FractriError
from .geometry import Triangle2
from .ifs import SCALING_MODES, ScalingPolicy
from .partition import partition_triangle
from .quadrature import integrate, reference_integral
from .serialize import (fmt, load_model, read_centroid_values, read_vertex_values, save_model,
                        write_triangles_csv, write_vertices_csv)

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN = 0, 2, 3
REFERENCE_REFINEMENT = 256


class UsageError(Exception):
    pass


def _normalize_argv(argv: list[str]) -> list[str]:
    """Glue ``--tri`` to its value so argparse does not read ``-10,...`` as a flag."""
    out = []
    it = iter(argv)
    for arg in it:
        if arg == "--tri":
            value = next(it, None)
            if value is None:
                out.append(arg)
                break
            out.append(f"--tri={value}")
        else:
            out.append(arg)
    return out


def _coords(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None
    if len(values) != 6:
        raise argparse.ArgumentTypeError("expected x1,y1,x2,y2,x3,y3")
    return values


def _triangle(coords, default: Triangle2 | None = None) -> Triangle2:
    """Build the base triangle here, not in argparse, so degeneracy exits with 3."""
    if coords is None:
        if default is None:
            raise UsageError("--tri is required")
        return default
    return Triangle2.from_flat(coords)


def _function(name: str) -> corpus.TestFunction:
    try:
        return corpus.builtin(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _policy(args) -> ScalingPolicy:
    if args.alpha == "fixed" and args.alpha_value is None:
        raise UsageError("--alpha fixed needs --alpha-value")
    value = 0.0 if args.alpha_value is None else args.alpha_value
    return ScalingPolicy(args.alpha, value, dprime=args.dprime)


def _add_policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", choices=SCALING_MODES, default="centroid",
                   help="how the vertical scaling factors are chosen")
    p.add_argument("--alpha-value", type=float, help="scaling factor for --alpha fixed")
    p.add_argument("--dprime", type=int, default=4, help="sampling depth for least-squares")


def cmd_partition(args) -> int:
    part = partition_triangle(_triangle(args.tri), args.d)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_vertices_csv(part, out / "vertices.csv")
    write_triangles_csv(part, out / "triangles.csv")
    print(f"d={part.d} N={part.N} V={part.V} -> {out}", file=sys.stderr)
    return EXIT_OK


def cmd_build(args) -> int:
    if (args.function is None) == (args.data is None):
        raise UsageError("give exactly one of --function or --data")
    policy = _policy(args)
    if args.function is not None:
        f = _function(args.function)
        base = _triangle(args.tri, f.base)
        part = partition_triangle(base, args.d)
        model = assemble_model(part, policy, function=f, source=f.name)
    else:
        part = partition_triangle(_triangle(args.tri), args.d)
        vertex_z = read_vertex_values(args.data, part)
        centroid_z = base_centroid_z = None
        if args.centroids:
            centroid_z, base_centroid_z = read_centroid_values(args.centroids, part)
        model = assemble_model(part, policy, vertex_z=vertex_z, centroid_z=centroid_z,
                               base_centroid_z=base_centroid_z, source=str(args.data))
    save_model(model, args.out)
    h = model.hyperbolicity
    print(f"N={model.N} maps, max|alpha7|={model.max_alpha:.6g}, theta={h.theta:.6g}"
          f" ({'certified' if h.certified else 'not certified'}) -> {args.out}", file=sys.stderr)
    return EXIT_OK


def _reference_for(model) -> float | None:
    if model.source is None:
        return None
    try:
        f = corpus.builtin(model.source)
    except KeyError:
        return None
    exact = f.exact_integral(model.partition.base)
    if exact is not None:
        return exact
    return reference_integral(f, model.partition.base, REFERENCE_REFINEMENT)


def cmd_integrate(args) -> int:
    model = load_model(args.model)
    report = integrate(model)
    if args.reference:
        I = _reference_for(model)
        if I is None:
            raise UsageError("--reference needs a model built from a built-in function")
        report = report.with_reference(I)
    print(json.dumps(report.to_dict()))
    return EXIT_OK


def _sci(x: float) -> str:
    return f"{x:.4e}"


def cmd_table(args) -> int:
    f = _function(args.function)
    base = _triangle(args.tri, f.base)
    try:
        d_list = [int(v) for v in args.d_list.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --d-list {args.d_list!r}") from None
    if not d_list:
        raise UsageError("--d-list is empty")
    policy = _policy(args)
    I = f.exact_integral(base)
    if I is None:
        I = reference_integral(f, base, REFERENCE_REFINEMENT)
    rows = []
    for d in d_list:
        try:
            model = assemble_model(partition_triangle(base, d), policy, function=f, source=f.name)
            r = integrate(model).with_reference(I)
        except FractriError as exc:
            raise type(exc)(f"d={d}: {exc}") from exc
        rows.append(r)
    lines = ["d,N,M,I,error"] + [f"{r.d},{r.N},{fmt(r.M)},{fmt(r.I)},{fmt(r.error)}" for r in rows]
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"{'d':>4} {'N':>7} {'M':>12} {'I':>12} {'Error':>12}")
    for r in rows:
        print(f"{r.d:>4} {r.N:>7} {_sci(r.M):>12} {_sci(r.I):>12} {_sci(r.error):>12}")
    return EXIT_OK


def cmd_render(args) -> int:
    if args.points <= 0:
        raise UsageError("--points must be positive")
    model = load_model(args.model)
    cloud = render_attractor(model, args.points, method=args.method, seed=args.seed)
    cloud.write(args.out)
    print(f"{len(cloud)} points -> {args.out}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fractri", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="write the colored partition as CSV")
    p.add_argument("--tri", type=_coords, required=True, help="x1,y1,x2,y2,x3,y3")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(run=cmd_partition)

    p = sub.add_parser("build", help="build a model and save it as JSON")
    p.add_argument("--function", help="matyas, three-hump-camel, plane:p,q,r or constant:c")
    p.add_argument("--data", help="vertex values CSV (index,z or x,y,z)")
    p.add_argument("--centroids", help="centroid values CSV (n,z; n=0 is the base centroid)")
    p.add_argument("--tri", type=_coords, help="base triangle (defaults to the function's own)")
    p.add_argument("--d", type=int, required=True)
    _add_policy_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(run=cmd_build)

    p = sub.add_parser("integrate", help="print the integral report as JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--reference", action="store_true", help="include I and M - I")
    p.set_defaults(run=cmd_integrate)

    p = sub.add_parser("table", help="convergence table over several d")
    p.add_argument("--function", required=True)
    p.add_argument("--tri", type=_coords)
    p.add_argument("--d-list", default="4,7,10,13")
    _add_policy_flags(p)
    p.add_argument("--out", help="CSV path")
    p.set_defaults(run=cmd_table)

    p = sub.add_parser("render", help="sample the attractor as a point cloud")
    p.add_argument("--model", required=True)
    p.add_argument("--method", choices=("chaos", "iterate"), default="chaos")
    p.add_argument("--points", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="cloud.csv or cloud.ply")
    p.set_defaults(run=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = _normalize_argv(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    failure = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            code = args.run(args)
        except (UsageError, OSError) as exc:
            failure, code = f"fractri: error: {exc}", EXIT_USAGE
        except (FractriError, ValueError) as exc:
            failure, code = f"fractri: {type(exc).__name__}: {exc}", EXIT_DOMAIN
    for w in caught:
        print(f"fractri: warning: {w.message}", file=sys.stderr)
    if failure:
        print(failure, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
