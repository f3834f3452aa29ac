"""Command-line front end.

Subcommands cover the full pipeline plus debugging aids:

  fit         fit a squared-exponential mixture to a kernel (mixture JSON + per-rank report)
  decompose   build expansion files (<out>.kl.json/.kl.bin) and a spectrum CSV from a mixture
  eigs        re-emit the spectrum CSV of stored expansion files
  sample      draw a field realization on a tensor grid (CSV or .npy)
  residual    eigenpair residuals against the original kernel (1-D)
  cov-error   covariance reconstruction error vs truncation (1-D)
  duffy-bench accuracy sweep of the stretched diagonal-split quadrature vs the plain rule
  quadrature  dump Gauss / composite rule nodes and weights
  assemble    dump assembled parity blocks as CSV

Every output file starts with '#'-prefixed header lines (or JSON fields)
recording the tool version and the exact flag set, so reruns with equal
flags are byte-identical.  Exit codes: 0 success, 1 usage or input error,
2 tolerance not reached (soft failure).
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys

import numpy as np

from . import __version__
from .assembly import BlockCache, DuffyConfig, duffy_block, plain_tensor_block, reference_block
from .kernels import KernelSpec, kernel_ids
from .klfield import (
    build_expansion,
    cov_l2_error,
    load_expansion,
    residual as eig_residual,
    sample as draw_sample,
    save_expansion,
)
from .kronop import Domain
from .orthopoly import composite_rule, gauss_rule
from .sefit import FitConfig, fit_mixture, load_mixture, save_mixture

_FLOAT_FMT = "%.16e"


def parse_domain(text: str) -> Domain:
    """Parse 'lo,hi' per axis joined by 'x', e.g. '0,1x0,1x0,1'."""
    intervals = []
    for part in text.split("x"):
        pieces = part.split(",")
        if len(pieces) != 2:
            raise ValueError(f"bad domain part {part!r}; expected 'lo,hi'")
        intervals.append((float(pieces[0]), float(pieces[1])))
    return Domain(tuple(intervals))


def parse_grid(text: str) -> list[np.ndarray]:
    """Parse 'lo:hi:count' per axis joined by 'x'."""
    axes = []
    for part in text.split("x"):
        pieces = part.split(":")
        if len(pieces) != 3:
            raise ValueError(f"bad grid part {part!r}; expected 'lo:hi:count'")
        axes.append(np.linspace(float(pieces[0]), float(pieces[1]), int(pieces[2])))
    return axes


def _header(args) -> list[str]:
    return [f"# klexpand {__version__}", f"# args: {shlex.join(args.argv)}"]


def _write_csv(path, args, columns: list[str], rows) -> None:
    lines = _header(args) + [",".join(columns)]
    for row in rows:
        cells = [c if isinstance(c, str) else _FLOAT_FMT % c for c in row]
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def cmd_fit(args) -> int:
    try:
        kernel = KernelSpec(args.kernel, args.length_scale, args.variance)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    cfg = FitConfig(tol=args.tol, k_max=args.k_max, quad=(args.L, args.levels, args.ratio, args.n_per_panel))
    mixture, history = fit_mixture(kernel, cfg)
    for k, (theta, err) in enumerate(zip(history.thetas, history.errors), start=1):
        print(f"rank {k:2d}: J = {err:.6e}")
    print(f"final rank {mixture.rank}, J = {mixture.achieved_error:.6e} "
          f"({'tolerance met' if history.converged else 'k_max exhausted'})")
    if args.out:
        save_mixture(mixture, args.out)
        print(f"mixture written to {args.out}")
    if args.report:
        rows = [
            (str(k), err, ";".join(_FLOAT_FMT % t for t in theta))
            for k, (theta, err) in enumerate(zip(history.thetas, history.errors), start=1)
        ]
        _write_csv(args.report, args, ["k", "J", "theta"], rows)
        print(f"report written to {args.report}")
    return 0 if history.converged else 2


def cmd_decompose(args) -> int:
    try:
        mixture = load_mixture(args.mixture)
        domain = parse_domain(args.domain)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    duffy = DuffyConfig(args.g, args.q) if args.g and args.q else None
    exp = build_expansion(
        mixture,
        domain,
        args.degree,
        args.num_pairs,
        eig_tol=args.eig_tol,
        seed=args.seed,
        duffy=duffy,
        threads=args.threads,
    )
    for eps, dim in exp.meta["block_dims"].items():
        print(f"block eps={eps}: dim {dim}")
    print(f"{exp.num_pairs} eigenpairs, lambda_1 = {exp.eigenvalues[0]:.6e}")
    exp.meta["tool"] = f"klexpand {__version__}"
    exp.meta["cli_args"] = shlex.join(args.argv)
    save_expansion(exp, args.out)
    _write_spectrum_csv(args.out + ".eigs.csv", args, exp)
    print(f"expansion written to {args.out}.kl.json / .kl.bin / .eigs.csv")
    return 0


def _write_spectrum_csv(path, args, exp) -> None:
    rows = [
        (str(i + 1), lam, "".join(map(str, eps)))
        for i, (lam, eps) in enumerate(zip(exp.eigenvalues, exp.parities))
    ]
    _write_csv(path, args, ["rank_index", "eigenvalue", "parity_vector"], rows)


def cmd_eigs(args) -> int:
    try:
        exp = load_expansion(args.expansion)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_spectrum_csv(args.out, args, exp)
    print(f"spectrum written to {args.out}")
    return 0


def cmd_sample(args) -> int:
    try:
        exp = load_expansion(args.expansion)
        grid = parse_grid(args.grid)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if len(grid) != exp.domain.D:
        print(f"error: grid has {len(grid)} axes, expansion is {exp.domain.D}-D", file=sys.stderr)
        return 1
    n_terms = args.num_terms or exp.num_pairs
    field = draw_sample(exp, n_terms, args.seed, grid)
    if args.format == "npy":
        np.save(args.out, field)
    else:
        mesh = np.meshgrid(*grid, indexing="ij")
        coords = [m.ravel() for m in mesh]
        rows = [tuple(c[i] for c in coords) + (field.ravel()[i],) for i in range(field.size)]
        cols = [f"x{l + 1}" for l in range(exp.domain.D)] + ["value"]
        _write_csv(args.out, args, cols, rows)
    print(f"sample written to {args.out}")
    return 0


def cmd_residual(args) -> int:
    try:
        exp = load_expansion(args.expansion)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if exp.domain.D != 1:
        print("error: residual diagnostics require a 1-D expansion", file=sys.stderr)
        return 1
    pairs = _int_list(args.pairs) if args.pairs else list(range(1, min(exp.num_pairs, 10) + 1))
    rows = []
    for j in pairs:  # 1-based in the CSV
        if not 1 <= j <= exp.num_pairs:
            print(f"error: pair index {j} out of range", file=sys.stderr)
            return 1
        r = eig_residual(exp, j - 1, args.quad_points)
        rows.append((str(j), exp.eigenvalues[j - 1], r))
        print(f"j={j}: lambda = {exp.eigenvalues[j - 1]:.6e}  R = {r:.6e}")
    _write_csv(args.out, args, ["j", "lambda", "residual"], rows)
    return 0


def cmd_cov_error(args) -> int:
    try:
        exp = load_expansion(args.expansion)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if exp.domain.D != 1:
        print("error: cov-error diagnostics require a 1-D expansion", file=sys.stderr)
        return 1
    truncations = _int_list(args.truncations) if args.truncations else [0, exp.num_pairs]
    rows = []
    for n_trunc in truncations:
        if not 0 <= n_trunc <= exp.num_pairs:
            print(f"error: truncation {n_trunc} out of range", file=sys.stderr)
            return 1
        err = cov_l2_error(exp, n_trunc, args.quad_points)
        rows.append((str(n_trunc), err))
        print(f"N={n_trunc}: ||C - C_N|| = {err:.6e}")
    _write_csv(args.out, args, ["N", "error"], rows)
    return 0


def cmd_duffy_bench(args) -> int:
    n = args.degree
    rows = []
    for b_eff in _float_list(args.b_eff):
        ref = reference_block(n, b_eff).full()
        ref_norm = np.linalg.norm(ref)
        for q in _int_list(args.q):
            if q < n + 1:
                continue
            if args.plain:
                err = np.linalg.norm(plain_tensor_block(n, b_eff, q).full() - ref) / ref_norm
                rows.append((b_eff, 0.0, float(q), err))
            for g in _int_list(args.g):
                err = np.linalg.norm(duffy_block(n, b_eff, DuffyConfig(g, q)).full() - ref) / ref_norm
                rows.append((b_eff, float(g), float(q), err))
    _write_csv(args.out, args, ["b", "g", "q", "rel_frobenius_error"], rows)
    print(f"{len(rows)} rows written to {args.out}  (g=0 rows are the plain tensor rule)")
    return 0


def cmd_quadrature(args) -> int:
    if args.levels > 0:
        rule = composite_rule(args.L, args.levels, args.ratio, args.n)
    else:
        lo, hi = (float(v) for v in args.interval.split(","))
        rule = gauss_rule(args.n, (lo, hi))
    rows = list(zip(rule.nodes, rule.weights))
    _write_csv(args.out, args, ["node", "weight"], rows)
    print(f"{rule.nodes.size} nodes on [{rule.interval[0]}, {rule.interval[1]}], "
          f"total mass {rule.total_mass:.16e}; written to {args.out}")
    return 0


def cmd_assemble(args) -> int:
    cache = BlockCache(args.cache_dir) if args.cache_dir else None
    if args.plain:
        blocks = plain_tensor_block(args.degree, args.b_eff, args.q or 2 * (args.degree + 1) + 32)
    else:
        cfg = DuffyConfig(args.g, args.q) if args.g and args.q else None
        from .assembly import cached_duffy_block

        blocks = cached_duffy_block(args.degree, args.b_eff, cfg, cache)
    rows = []
    for name, M in (("even", blocks.even), ("odd", blocks.odd)):
        for i in range(M.shape[0]):
            for j in range(M.shape[1]):
                rows.append((name, str(i), str(j), M[i, j]))
    _write_csv(args.out, args, ["block", "row", "col", "value"], rows)
    print(f"blocks written to {args.out} (even {blocks.even.shape[0]}, odd {blocks.odd.shape[0]})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="klexpand", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"klexpand {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a squared-exponential mixture to a kernel")
    p.add_argument("--kernel", required=True, help=f"one of {', '.join(kernel_ids())}")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--k-max", type=int, default=20)
    p.add_argument("--L", type=float, default=2.0, help="fit domain [0, L]")
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--ratio", type=float, default=0.2)
    p.add_argument("--n-per-panel", type=int, default=100)
    p.add_argument("--length-scale", type=float, default=1.0)
    p.add_argument("--variance", type=float, default=1.0)
    p.add_argument("--out", help="mixture JSON path")
    p.add_argument("--report", help="per-rank CSV report path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("decompose", help="build expansion files from a mixture")
    p.add_argument("--mixture", required=True)
    p.add_argument("--domain", required=True, help="e.g. 0,1x0,1")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--num-pairs", type=int, required=True)
    p.add_argument("--eig-tol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--g", type=int, default=0, help="override stretching exponent")
    p.add_argument("--q", type=int, default=0, help="override quadrature points per axis")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="output base path")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("eigs", help="emit spectrum CSV from expansion files")
    p.add_argument("--expansion", required=True, help="expansion base path")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eigs)

    p = sub.add_parser("sample", help="draw a field realization on a grid")
    p.add_argument("--expansion", required=True)
    p.add_argument("--grid", required=True, help="e.g. 0:1:64x0:1:64")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-terms", type=int, default=0, help="truncation (default: all pairs)")
    p.add_argument("--format", choices=("csv", "npy"), default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("residual", help="eigenpair residuals (1-D expansions)")
    p.add_argument("--expansion", required=True)
    p.add_argument("--pairs", help="1-based indices, e.g. 1,15,30")
    p.add_argument("--quad-points", type=int, default=80, help="inner points per split panel")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_residual)

    p = sub.add_parser("cov-error", help="covariance reconstruction error (1-D)")
    p.add_argument("--expansion", required=True)
    p.add_argument("--truncations", help="e.g. 0,10,20,40")
    p.add_argument("--quad-points", type=int, default=160)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cov_error)

    p = sub.add_parser("duffy-bench", help="quadrature accuracy sweep")
    p.add_argument("--degree", type=int, default=29)
    p.add_argument("--b-eff", default="1e1,1e4,1e7,1e10")
    p.add_argument("--g", default="1,2,3,4,5")
    p.add_argument("--q", default="60,120,240")
    p.add_argument("--plain", action="store_true", help="include plain tensor-rule rows (g=0)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_duffy_bench)

    p = sub.add_parser("quadrature", help="dump quadrature nodes/weights")
    p.add_argument("--n", type=int, required=True, help="points (per panel if composite)")
    p.add_argument("--interval", default="-1,1")
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--levels", type=int, default=0, help="composite levels m (0 = simple rule)")
    p.add_argument("--ratio", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_quadrature)

    p = sub.add_parser("assemble", help="dump assembled parity blocks")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--b-eff", type=float, required=True)
    p.add_argument("--g", type=int, default=0)
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--plain", action="store_true")
    p.add_argument("--cache-dir", help="block cache directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assemble)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    args.argv = argv
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
