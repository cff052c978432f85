"""Command-line front end.

Commands: check-rosl, preimage, oracle, gf, witness, reproduce-example34,
bench. Reports are line-oriented key=value text; masks are exported as CSV
(plus PGM for 2-D grids). Exit codes: 0 success, 1 usage/config error, 2
property refuted or mismatch found.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .geometry import DEFAULT_TOL, Polytope
from .maps import (SetValuedMap, affine_polytope, check_rosl, estimate_ell,
                   example34, load_map)
from .preimage import (GridSpec, _ball_union_member, gf_balls,
                       gf_extreme_filter, inflate_refine, mask_diff_summary,
                       mask_to_csv, mask_to_pgm, preimage_oracle,
                       preimage_outer, witness_excluding_base)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REFUTED = 2

_BENCH_SIZES = (8, 64, 512)


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors must exit 1, not argparse's 2
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(value) -> str:
    return repr(float(value))


def _fmt_vec(vec) -> str:
    return ",".join(_fmt(v) for v in np.atleast_1d(vec))


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(p) for p in text.split(",")], dtype=float)
    except ValueError as exc:
        raise CliError(f"bad vector {text!r}") from exc


def parse_points(text: str) -> list[np.ndarray]:
    return [parse_vector(part) for part in text.split(";") if part]


def parse_grid(text: str, dim: int) -> GridSpec:
    try:
        span, nodes_txt = text.rsplit("x", 1)
        lo_txt, hi_txt = span.split("..")
        nodes = int(nodes_txt)
    except ValueError as exc:
        raise CliError(f"bad grid {text!r}; expected LO..HIxNODES") from exc
    lo = parse_vector(lo_txt)
    hi = parse_vector(hi_txt)
    if lo.size == 1 and dim > 1:
        lo = np.full(dim, lo[0])
    if hi.size == 1 and dim > 1:
        hi = np.full(dim, hi[0])
    if lo.size != dim or hi.size != dim:
        raise CliError("grid dimension does not match the map")
    try:
        return GridSpec(lo, hi, nodes)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _load_map_arg(args) -> SetValuedMap:
    try:
        return load_map(args.map)
    except OSError as exc:
        raise CliError(f"cannot read map file: {exc}") from exc
    except ValueError as exc:
        raise CliError(f"bad map file: {exc}") from exc


def _require_ybar(args, dim: int) -> np.ndarray:
    if args.ybar is None:
        raise CliError("--ybar is required for this command")
    ybar = parse_vector(args.ybar)
    if ybar.size != dim:
        raise CliError("ybar dimension does not match the map")
    return ybar


def _emit(lines: list[str], out: str | None) -> None:
    for line in lines:
        print(line)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# commands

def cmd_check_rosl(args) -> int:
    F = _load_map_arg(args)
    tol = args.tol if args.tol is not None else DEFAULT_TOL
    if args.samples:
        samples = parse_points(args.samples)
    else:
        grid_txt = args.grid or "-2..2x9"
        samples = list(parse_grid(grid_txt, F.dim).nodes())
    report = check_rosl(F, samples, tol)
    estimate = estimate_ell(F, samples)
    lines = [
        f"holds={'true' if report.holds else 'false'}",
        f"worst_gap={_fmt(report.worst_gap)}",
        f"worst_x={_fmt_vec(report.worst_pair[0])}",
        f"worst_x2={_fmt_vec(report.worst_pair[1])}",
        f"estimate_ell={_fmt(estimate)}",
        f"declared_ell={_fmt(F.ell)}",
        f"declared_ell_consistent={'true' if estimate <= F.ell + tol else 'false'}",
        f"samples={len(samples)}",
        f"note={report.note}",
    ]
    _emit(lines, args.out)
    return EXIT_OK if report.holds else EXIT_REFUTED


def _resolve_base(args, F):
    spec = args.base or "grid"
    if spec == "grid":
        return None, "grid"
    if spec.startswith("inflate:"):
        try:
            eps_txt, iters_txt = spec[len("inflate:"):].split(",")
            return (float(eps_txt), int(iters_txt)), "inflate"
        except ValueError as exc:
            raise CliError(f"bad base spec {spec!r}") from exc
    pts = parse_points(spec)
    if not pts:
        raise CliError(f"bad base spec {spec!r}")
    for p in pts:
        if p.size != F.dim:
            raise CliError("base point dimension does not match the map")
    return pts, "list"


def _write_mask(mask, out: Path) -> list[Path]:
    paths = [out]
    mask_to_csv(mask, out)
    if mask.grid.dim == 2:
        pgm = out.with_suffix(".pgm")
        mask_to_pgm(mask, pgm)
        paths.append(pgm)
    return paths


def cmd_preimage(args) -> int:
    F = _load_map_arg(args)
    ybar = _require_ybar(args, F.dim)
    if args.grid is None:
        raise CliError("--grid is required for this command")
    grid = parse_grid(args.grid, F.dim)
    base, base_kind = _resolve_base(args, F)
    tol = args.tol
    if base_kind == "grid":
        mask = preimage_outer(F, ybar, grid, list(grid.nodes()),
                              filtered=args.filtered, tol=tol)
        mask.meta["base_points"] = "grid"
    elif base_kind == "list":
        mask = preimage_outer(F, ybar, grid, base, filtered=args.filtered,
                              tol=tol)
    else:
        eps, iters = base
        mask = inflate_refine(F, ybar, grid, eps, iters,
                              filtered=args.filtered, tol=tol)
    out = Path(args.out)
    written = _write_mask(mask, out)
    lines = [f"outer_nodes={mask.count}"]
    if args.with_oracle:
        oracle = preimage_oracle(F, ybar, grid, tol=tol)
        oracle_out = out.with_name(out.stem + ".oracle" + out.suffix)
        written += _write_mask(oracle, oracle_out)
        summary = mask_diff_summary(mask, oracle)
        lines += [
            f"oracle_nodes={summary['oracle_nodes']}",
            f"extra_nodes={summary['extra_nodes']}",
            f"excluded_nodes={summary['excluded_nodes']}",
            f"max_band_distance={_fmt(summary['max_band_distance'])}",
            f"band_spacings={_fmt(summary['band_spacings'])}",
        ]
    lines += [f"wrote={p}" for p in written]
    _emit(lines, None)
    return EXIT_OK


def cmd_oracle(args) -> int:
    F = _load_map_arg(args)
    ybar = _require_ybar(args, F.dim)
    if args.grid is None:
        raise CliError("--grid is required for this command")
    grid = parse_grid(args.grid, F.dim)
    mask = preimage_oracle(F, ybar, grid, tol=args.tol)
    written = _write_mask(mask, Path(args.out))
    lines = [f"oracle_nodes={mask.count}"] + [f"wrote={p}" for p in written]
    _emit(lines, None)
    return EXIT_OK


def cmd_gf(args) -> int:
    F = _load_map_arg(args)
    ybar = _require_ybar(args, F.dim)
    if args.x is None:
        raise CliError("--x is required for this command")
    x = parse_vector(args.x)
    if x.size != F.dim:
        raise CliError("x dimension does not match the map")
    balls = gf_balls(F, x, ybar, filtered=args.filtered)
    lines = [f"balls={len(balls)}", f"filtered={'true' if args.filtered else 'false'}"]
    for i, ball in enumerate(balls):
        lines.append(f"ball{i}_center={_fmt_vec(ball.center)}")
        lines.append(f"ball{i}_radius={_fmt(ball.radius)}")
    if F.dim == 1:
        lo = min(b.center[0] - b.radius for b in balls)
        hi = max(b.center[0] + b.radius for b in balls)
        lines.append(f"union_interval={_fmt(lo)},{_fmt(hi)}")
    _emit(lines, args.out)
    return EXIT_OK


def cmd_witness(args) -> int:
    F = _load_map_arg(args)
    ybar = _require_ybar(args, F.dim)
    if args.z is None:
        raise CliError("--z is required for this command")
    z = parse_vector(args.z)
    if z.size != F.dim:
        raise CliError("z dimension does not match the map")
    try:
        witness = witness_excluding_base(F, ybar, z)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    if witness is None:
        lines = ["witness=none-found"]
    else:
        lines = [f"witness={_fmt_vec(witness)}", "excluded=true"]
    _emit(lines, args.out)
    return EXIT_OK


def _example34_closed_form(x: float) -> tuple[float, float]:
    if x < 0:
        return (x, 2.0)
    if x == 0:
        return (-2.0, 2.0)
    return (-2.0, x)


def cmd_reproduce_example34(args) -> int:
    F = example34()
    lines = []
    ok = True
    for x in (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0):
        balls = gf_balls(F, [x], [0.0])
        lo = min(b.center[0] - b.radius for b in balls)
        hi = max(b.center[0] + b.radius for b in balls)
        exp_lo, exp_hi = _example34_closed_form(x)
        match = abs(lo - exp_lo) <= 1e-9 and abs(hi - exp_hi) <= 1e-9
        ok = ok and match
        lines.append(f"x={_fmt(x)} computed={_fmt(lo)},{_fmt(hi)} "
                     f"expected={_fmt(exp_lo)},{_fmt(exp_hi)} "
                     f"match={'true' if match else 'false'}")
    lines.append(f"all_match={'true' if ok else 'false'}")
    _emit(lines, args.out)
    return EXIT_OK if ok else EXIT_REFUTED


def _regular_polygon(n: int) -> Polytope:
    angles = 2.0 * np.pi * np.arange(n) / n
    return Polytope(np.column_stack([np.cos(angles), np.sin(angles)]))


def cmd_bench(args) -> int:
    rng = np.random.default_rng(args.seed)
    ybar = np.array([50.0, 0.0])
    lines = [f"seed={args.seed}"]
    timing = []
    mismatches_total = 0
    for n in _BENCH_SIZES:
        F = affine_polytope(np.zeros(2), np.eye(2), _regular_polygon(n))
        xs = rng.uniform(-1.0, 1.0, size=(20, 2))
        zs = rng.uniform(-3.0, 3.0, size=(50, 2))
        queries = len(xs) * len(zs)

        t0 = time.perf_counter()
        plain = []
        for x in xs:
            gens = F.eval(x).vertices
            plain.append(_ball_union_member(gens, F.ell, x, ybar, zs, 0.0))
        t_plain = time.perf_counter() - t0

        t0 = time.perf_counter()
        filt = []
        fractions = []
        for x in xs:
            image = F.eval(x)
            gens = np.asarray(gf_extreme_filter(image, ybar))
            fractions.append(len(gens) / len(image.vertices))
            filt.append(_ball_union_member(gens, F.ell, x, ybar, zs, 0.0))
        t_filt = time.perf_counter() - t0

        mismatches = int(sum(np.sum(a != b) for a, b in zip(plain, filt)))
        mismatches_total += mismatches
        lines.append(f"n={n} queries={queries} "
                     f"retained_fraction={_fmt(float(np.mean(fractions)))} "
                     f"mismatches={mismatches}")
        timing.append(f"n={n} qps_unfiltered={queries / t_plain:.0f} "
                      f"qps_filtered={queries / t_filt:.0f}")
    lines.append(f"verdicts_equal={'true' if mismatches_total == 0 else 'false'}")
    _emit(lines, args.out)
    for line in timing:  # wall-clock rates stay out of --out files
        print(line)
    return EXIT_OK if mismatches_total == 0 else EXIT_REFUTED


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="roslpre", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--map", help="map definition file (JSON)")
    common.add_argument("--ybar", help="target point, comma-separated floats")
    common.add_argument("--grid", help="grid spec LO..HIxNODES, e.g. -3..3x601")
    common.add_argument("--base", help="base points: LIST | grid | inflate:EPS,ITERS")
    common.add_argument("--filtered", action="store_true",
                        help="use only outward-facing extreme points")
    common.add_argument("--with-oracle", action="store_true", dest="with_oracle",
                        help="also compute the brute-force oracle mask")
    common.add_argument("--out", help="output path")
    common.add_argument("--tol", type=float, help="tolerance override")
    common.add_argument("--seed", type=int, default=42, help="RNG seed")
    common.add_argument("--samples", help="sample points x1;x2;... for check-rosl")
    common.add_argument("--x", help="query point for gf")
    common.add_argument("--z", help="query point for witness")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check-rosl", parents=[common]).set_defaults(func=cmd_check_rosl)
    sub.add_parser("preimage", parents=[common]).set_defaults(func=cmd_preimage)
    sub.add_parser("oracle", parents=[common]).set_defaults(func=cmd_oracle)
    sub.add_parser("gf", parents=[common]).set_defaults(func=cmd_gf)
    sub.add_parser("witness", parents=[common]).set_defaults(func=cmd_witness)
    sub.add_parser("reproduce-example34", parents=[common]).set_defaults(
        func=cmd_reproduce_example34)
    sub.add_parser("bench", parents=[common]).set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("check-rosl", "preimage", "oracle", "gf", "witness") \
            and not args.map:
        print("error: --map is required for this command", file=sys.stderr)
        return EXIT_USAGE
    if args.command in ("preimage", "oracle") and not args.out:
        print("error: --out is required for this command", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
