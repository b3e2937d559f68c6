"""Command-line entry point: experiment configuration, execution and CSV
emission.

Conventions shared by all subcommands:
  - every CSV embeds the full configuration in `# key=value` header lines;
  - outputs are written to a temp file and renamed on success, so a
    partial file is never left behind;
  - randomness comes from numpy SeedSequence(seed, spawn_key=(worker,));
    shards are merged in worker order, so a fixed (seed, workers) pair
    gives byte-identical output;
  - exit codes: 0 success, 1 invalid configuration, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile

import mpmath
import numpy as np

from . import _kernels, chain, kinetic, transition
from .contfrac import expand, partition_params
from .errors import LorentzGasError, RationalSlope
from .lattice import check_radius
from .transfer import transfer_asymptotic_arrays

EXIT_OK = 0
EXIT_BAD_CONFIG = 1
EXIT_NUMERIC = 2

#: symbolic presets for irrational slopes; evaluated at 60 digits so the
#: double rounding is the only rationalization.
ALPHA_PRESETS = {
    "sqrt2-1": lambda: mpmath.sqrt(2) - 1,
    "golden": lambda: (mpmath.sqrt(5) - 1) / 2,
    "e-2": lambda: mpmath.e - 2,
    "pi-3": lambda: mpmath.pi - 3,
}


def parse_alpha(expr: str):
    """A slope from a preset (returned in extended precision, so deep
    continued-fraction digits are exact) or a decimal literal (a float,
    i.e. secretly a dyadic rational)."""
    if expr in ALPHA_PRESETS:
        with mpmath.workdps(60):
            return ALPHA_PRESETS[expr]()
    try:
        alpha = float(expr)
    except ValueError:
        raise ValueError(
            f"unknown alpha expression {expr!r}; "
            f"use a decimal or one of {sorted(ALPHA_PRESETS)}"
        )
    return alpha


def shard_rngs(seed: int, workers: int):
    """One independent generator per worker, reproducibly."""
    return [
        np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(w,)))
        for w in range(workers)
    ]


def shard_sizes(n: int, workers: int):
    base, extra = divmod(n, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def atomic_write(path: str, write_fn):
    """Write via write_fn(fp) to a temp file, rename onto path."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fp:
            write_fn(fp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_header(args: argparse.Namespace, skip=("func",)) -> list[str]:
    lines = []
    for key, val in sorted(vars(args).items()):
        if key in skip:
            continue
        lines.append(f"# config.{key}={val}\n")
    return lines


def cmd_cf(args) -> int:
    alpha_hp = parse_alpha(args.alpha_expr)
    alpha = float(alpha_hp)
    cf = expand(alpha_hp, args.threshold)
    rows = []
    for n, a_n in enumerate(cf.digits):
        rows.append((n, a_n, cf.p[n], cf.q[n], cf.d[n]))

    def write(fp):
        fp.writelines(config_header(args))
        fp.write(f"# alpha={alpha!r}\n")
        fp.write("n,a_n,p_n,q_n,d_n\n")
        for n, a_n, p, q, d in rows:
            fp.write(f"{n},{a_n},{p},{q},{d!r}\n")

    if args.out:
        atomic_write(args.out, write)
    else:
        write(sys.stdout)
    print(
        f"cf: alpha={alpha:.15g} digits={len(cf.digits)} "
        f"q_last={cf.q[len(cf.digits) - 1]} d_last={cf.d[len(cf.digits) - 1]:.3e}"
    )
    return EXIT_OK


def cmd_mu_check(args) -> int:
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    est, err = transition.mu_mass_monte_carlo(rng, args.n)
    quad = transition.mu_mass_quadrature()
    if args.out:
        def write(fp):
            fp.writelines(config_header(args))
            fp.write("estimate,stderr,quadrature\n")
            fp.write(f"{est!r},{err!r},{quad!r}\n")
        atomic_write(args.out, write)
    print(f"mu-check: mass = {est:.4f} +- {err:.4f} (quadrature {quad:.12f})")
    return EXIT_OK if abs(est - 1.0) < 5 * max(err, 1e-3) else EXIT_NUMERIC


def _transfer_compare_one_r(r, hprime, n, seed, workers, max_cells):
    """(theta, s_exact, h_exact, s_asym, h_asym, ok) arrays for one r."""
    thetas, s_ex, h_ex, s_as, h_as, oks = [], [], [], [], [], []
    for rng, m in zip(shard_rngs(seed, workers), shard_sizes(n, workers)):
        if m == 0:
            continue
        theta = rng.uniform(0.0, math.pi / 4.0, m)
        hp = np.full(m, hprime)
        se = np.empty(m)
        he = np.empty(m)
        st_e = np.empty(m, dtype=np.int64)
        _kernels.transfer_exact_batch(hp, theta, r, max_cells, se, he, st_e)
        alpha = np.tan(theta)
        a = np.empty(m)
        b = np.empty(m)
        q = np.empty(m)
        par = np.empty(m, dtype=np.int64)
        st_a = np.empty(m, dtype=np.int64)
        _kernels.partition_params_batch(alpha, r, a, b, q, par, st_a)
        sa, ha = transfer_asymptotic_arrays(a, b, q, par, hp)
        thetas.append(theta)
        s_ex.append(se)
        h_ex.append(he)
        s_as.append(sa)
        h_as.append(ha)
        oks.append((st_e == _kernels.STATUS_OK) & (st_a == _kernels.STATUS_OK))
    cat = lambda xs: np.concatenate(xs)
    return (cat(thetas), cat(s_ex), cat(h_ex), cat(s_as), cat(h_as), cat(oks))


def cmd_transfer_compare(args) -> int:
    radii = [check_radius(float(v)) for v in args.r.split(",")]
    med_s_err = []
    rows = []
    skipped_total = 0
    for r in radii:
        theta, se, he, sa, ha, ok = _transfer_compare_one_r(
            r, args.hprime, args.n, args.seed, args.workers, args.max_cells
        )
        skipped_total += int((~ok).sum())
        if ok.sum() < 0.5 * args.n:
            print(f"transfer-compare: >50% skipped at r={r}", file=sys.stderr)
            return EXIT_NUMERIC
        s_err = np.abs(se[ok] - sa[ok])
        h_err = np.abs(he[ok] - ha[ok])
        med_s_err.append(float(np.median(s_err)))
        rows.append((r, float(np.median(s_err)), float(np.max(h_err)),
                     float(np.mean(h_err < 1e-8)), int((~ok).sum())))
    slope = float("nan")
    if len(radii) >= 2:
        slope = float(np.polyfit(np.log(radii), np.log(med_s_err), 1)[0])

    if args.out:
        def write(fp):
            fp.writelines(config_header(args))
            fp.write(f"# slope={slope!r}\n")
            fp.write("r,median_s_err,max_h_err,h_match_frac,skipped\n")
            for row in rows:
                fp.write(",".join(repr(v) for v in row) + "\n")
        atomic_write(args.out, write)
    for r, ms, mh, frac, sk in rows:
        print(f"transfer-compare: r={r:g} median|s_err|={ms:.3e} "
              f"max|h_err|={mh:.3e} h_match={100 * frac:.2f}% skipped={sk}")
    if len(radii) >= 2:
        print(f"transfer-compare: fitted log-log slope = {slope:.3f}")
    return EXIT_OK


def cmd_transition(args) -> int:
    rngs = shard_rngs(args.seed, 3)
    young = transition.young_histogram(
        args.hprime, args.r, args.n, rngs[0],
        n_s=args.bins, n_h=args.bins, max_cells=args.max_cells,
    )
    push = transition.pushforward_histogram(
        args.hprime, args.n, rngs[1], n_s=args.bins, n_h=args.bins
    )
    push_neg = transition.pushforward_histogram(
        -args.hprime, args.n, rngs[2], n_s=args.bins, n_h=args.bins
    )
    tv = young.tv(push)
    sym = transition.symmetry_distance(push, push_neg)
    header = config_header(args)
    for hist, suffix in ((young, "young"), (push, "push"),
                         (push_neg, "push_neg")):
        hist.meta["tv_young_push"] = tv
        hist.meta["symmetry_tv"] = sym
        path = f"{args.out}_{suffix}.csv"
        atomic_write(
            path,
            lambda fp, h=hist: (fp.writelines(header), h.to_csv(fp)),
        )
    frac_skip = float(young.meta["skipped"]) / args.n
    print(f"transition: h'={args.hprime} r={args.r:g} "
          f"TV(young,push)={tv:.4f} symmetry_TV={sym:.4f} "
          f"skipped={young.meta['skipped']}")
    if frac_skip > 0.5:
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_independence(args) -> int:
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    stats = chain.independence_stats(
        args.r, args.steps, args.n, rng, max_cells=args.max_cells
    )
    if args.out:
        def write(fp):
            fp.writelines(config_header(args))
            fp.write(f"# pair_tv={stats.get('pair_tv', float('nan'))!r}\n")
            fp.write(f"# skipped={stats['skipped']}\n")
            fp.write("step,marginal_tv\n")
            for k, tv in enumerate(stats["marginal_tv"], start=1):
                fp.write(f"{k},{tv!r}\n")
        atomic_write(args.out, write)
    tvs = " ".join(f"{tv:.4f}" for tv in stats["marginal_tv"])
    print(f"independence: r={args.r:g} marginal_tv=[{tvs}] "
          f"pair_tv={stats.get('pair_tv', float('nan')):.4f} "
          f"skipped={stats['skipped']}")
    return EXIT_OK


def cmd_evolve(args) -> int:
    f_in = kinetic.uniform_disk()
    extent = f_in.support_radius + args.t
    rngs = shard_rngs(args.seed, 3)
    header = config_header(args)
    grids = {}
    grids["limit"] = kinetic.solve_limit(
        f_in, args.t, args.n_limit, rngs[0], extent=extent
    )
    grids["lorentz"] = kinetic.lorentz_baseline(
        f_in, args.t, args.n, rngs[1], extent=extent
    )
    if args.r is not None:
        grids["direct"] = kinetic.simulate_direct(
            f_in, args.r, args.t, args.n, rngs[2], extent=extent,
            max_cells=args.max_cells,
        )
    # pairwise distances go into the CSV metadata so downstream figure
    # tools can annotate without recomputing statistics
    tvs = {}
    names = sorted(grids)
    for i, n1 in enumerate(names):
        for n2 in names[i + 1:]:
            tvs[f"tv_{n1}_{n2}"] = round(
                kinetic.compare_densities(grids[n1], grids[n2]), 6
            )
    for name, grid in grids.items():
        grid.meta.update(tvs)
        atomic_write(
            f"{args.out}_{name}.csv",
            lambda fp, g=grid: (fp.writelines(header), g.to_csv(fp)),
        )
    msg = [f"evolve: t={args.t:g}"]
    if args.r is not None:
        msg.append(f"r={args.r:g}")
    msg.extend(f"{k}={v:.4f}" for k, v in sorted(tvs.items()))
    print(" ".join(msg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lorentzgas",
        description="Numerical laboratory for the Boltzmann-Grad limit of "
                    "the two-dimensional periodic Lorentz gas.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, n_default):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--n", type=int, default=n_default)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--max-cells", type=int,
                       default=_kernels.DEFAULT_MAX_CELLS)
        p.add_argument("--out", type=str, default=None)

    p = sub.add_parser("cf", help="continued-fraction digit/convergent dump")
    p.add_argument("--alpha-expr", required=True,
                   help="decimal or preset: " + ", ".join(sorted(ALPHA_PRESETS)))
    p.add_argument("--threshold", type=float, default=1e-9)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_cf)

    p = sub.add_parser("mu-check", help="normalization of the mu measure")
    common(p, 1_000_000)
    p.set_defaults(func=cmd_mu_check)

    p = sub.add_parser("transfer-compare",
                       help="exact vs asymptotic transfer map sweep")
    p.add_argument("--r", type=str, required=True,
                   help="radius or comma-separated radii (slope fit)")
    p.add_argument("--hprime", type=float, required=True)
    common(p, 100_000)
    p.set_defaults(func=cmd_transfer_compare)

    p = sub.add_parser("transition",
                       help="young vs pushforward transition histograms")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--hprime", type=float, required=True)
    p.add_argument("--bins", type=int, default=transition.DEFAULT_BINS)
    common(p, 1_000_000)
    p.set_defaults(func=cmd_transition)
    # transition writes three files; --out is its prefix
    for a in p._actions:
        if a.dest == "out":
            a.required = True

    p = sub.add_parser("independence",
                       help="independence-hypothesis statistics")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--steps", type=int, default=2)
    common(p, 100_000)
    p.set_defaults(func=cmd_independence)

    p = sub.add_parser("evolve",
                       help="direct vs limit vs baseline density evolution")
    p.add_argument("--r", type=float, default=None,
                   help="omit to skip the direct simulation")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--n-limit", type=int, default=None,
                   help="particles for the limit solver (default: n)")
    common(p, 1_000_000)
    p.set_defaults(func=cmd_evolve)
    for a in p._actions:
        if a.dest == "out":
            a.required = True
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "n_limit", None) is None and hasattr(args, "n_limit"):
        args.n_limit = args.n
    try:
        if getattr(args, "n", 1) < 1:
            raise ValueError("--n must be >= 1")
        if getattr(args, "workers", 1) < 1:
            raise ValueError("--workers must be >= 1")
        return args.func(args)
    except (ValueError, LorentzGasError) as exc:
        if isinstance(exc, RationalSlope):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
