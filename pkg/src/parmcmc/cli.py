"""Command-line entry point: benchmarks, sampling runs, denoising. CSV out.

Exit codes: 0 success, 2 usage or input error, 1 internal error.  Every
command is deterministic in its non-timing outputs given --seed.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from itertools import product

import numpy as np

from . import glm, hb, ising, perf, rng, sampler

_DESC = {
    "bench": "time the likelihood/gradient kernels over a strategy grid",
    "glm-sample": "run a logistic-regression Gibbs chain, write draws CSV",
    "hb-bench": "time hierarchical sweeps under coarse vs fine worker mappings",
    "ising-denoise": "restore a binary PBM image with the Ising Gibbs sampler",
    "rng-bench": "compare one-at-a-time vs batch deviate generation",
}


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _str_list(text: str) -> list[str]:
    return [v.strip().lower() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="parmcmc")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help=_DESC["bench"])
    b.add_argument("--config", help="key=value grid file; overrides inline axis flags")
    b.add_argument("--N", type=_int_list, help="row counts, comma separated")
    b.add_argument("--K", type=_int_list, help="column counts, comma separated")
    b.add_argument("--strategies", type=_str_list,
                   help="som,mos,plf,plf_chunked,sharded")
    b.add_argument("--workers", type=_int_list)
    b.add_argument("--chunks", type=_int_list)
    b.add_argument("--op", choices=("loglike", "grad"))
    b.add_argument("--evals", type=int)
    b.add_argument("--reps", type=int)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="bench.csv")
    b.set_defaults(func=cmd_bench)

    g = sub.add_parser("glm-sample", help=_DESC["glm-sample"])
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="CSV: K covariate columns + 0/1 response column")
    src.add_argument("--synthetic", type=_int_list, metavar="N,K",
                     help="generate a seeded synthetic instance")
    g.add_argument("--iters", type=int, default=2000)
    g.add_argument("--burnin", type=int, default=500)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--width", type=float, default=1.0, help="slice sampler initial width")
    g.add_argument("--max-steps", type=int, default=50)
    g.add_argument("--prior-sigma", type=float, default=10.0)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--strategy", choices=[s.value for s in glm.Strategy], default="plf")
    g.add_argument("--diff-update", action=argparse.BooleanOptionalAction, default=True)
    g.add_argument("--out", default="draws.csv")
    g.set_defaults(func=cmd_glm_sample)

    h = sub.add_parser("hb-bench", help=_DESC["hb-bench"])
    h.add_argument("--groups", type=int, default=20, help="number of regression groups")
    h.add_argument("--K", type=int, default=10)
    h.add_argument("--navg", type=_int_list, default=[1000], help="rows per group, grid axis")
    h.add_argument("--neval", type=_int_list, default=[1, 10])
    h.add_argument("--modes", type=_str_list, default=["coarse", "fine"])
    h.add_argument("--workers", type=_int_list, default=[1])
    h.add_argument("--sweeps", type=int, default=3)
    h.add_argument("--reps", type=int, default=3)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--out", default="hb_bench.csv")
    h.set_defaults(func=cmd_hb_bench)

    i = sub.add_parser("ising-denoise", help=_DESC["ising-denoise"])
    i.add_argument("--in", dest="infile", required=True, help="input PBM (P1 or P4)")
    i.add_argument("--out", required=True, help="restored PBM path")
    i.add_argument("--w", type=float, default=1.0, help="coupling weight")
    i.add_argument("--bias", type=float, default=2.0, help="bias scale toward the input")
    i.add_argument("--sweeps", type=int, default=30)
    i.add_argument("--burnin", type=int, default=10)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--diff-update", action="store_true")
    i.add_argument("--trace", help="optional per-sweep flip-rate CSV")
    i.add_argument("--fmt", choices=("P1", "P4"), default="P4", help="output format")
    i.set_defaults(func=cmd_ising_denoise)

    r = sub.add_parser("rng-bench", help=_DESC["rng-bench"])
    r.add_argument("--dists", type=_str_list, default=["uniform", "normal", "gamma"])
    r.add_argument("--modes", type=_str_list, default=["oaat", "batch"])
    r.add_argument("--n", type=int, default=1_000_000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default="rng_bench.csv")
    r.set_defaults(func=cmd_rng_bench)
    return p


def cmd_bench(args) -> int:
    inline = {}
    if args.N:
        inline["n_rows"] = args.N
    if args.K:
        inline["n_cols"] = args.K
    if args.strategies:
        inline["strategies"] = [glm.Strategy(s) for s in args.strategies]
    if args.workers:
        inline["workers"] = args.workers
    if args.chunks:
        inline["chunks"] = args.chunks
    for key in ("op", "evals", "reps"):
        if getattr(args, key) is not None:
            inline[key] = getattr(args, key)
    inline["seed"] = args.seed
    if args.config:
        cfg = perf.parse_grid_config(args.config)  # config wins over inline flags
    else:
        if "n_rows" not in inline or "n_cols" not in inline:
            raise ValueError("need --N and --K (or --config)")
        cfg = perf.GridConfig(**inline)
    records, failures = perf.run_grid(cfg)
    perf.write_bench_csv(records, args.out, hw=cfg.hw, failures=failures)
    for cell, msg in failures:
        print(f"warning: cell failed: {cell}: {msg}", file=sys.stderr)
    print(f"wrote {len(records)} records ({len(failures)} failed cells) to {args.out}")
    return 0


def cmd_glm_sample(args) -> int:
    if args.data:
        data = glm.load_design_csv(args.data)
    else:
        if len(args.synthetic) != 2:
            raise ValueError("--synthetic expects N,K")
        data, _ = glm.synthetic_logistic(args.synthetic[0], args.synthetic[1], seed=args.seed)
    prior = sampler.GaussianPrior.isotropic(data.n_cols, sigma=args.prior_sigma)
    cfg = sampler.ChainConfig(n_iter=args.iters, n_burnin=args.burnin, seed=args.seed,
                              slice_width=args.width, slice_max_steps=args.max_steps)
    plan = glm.ExecPlan(glm.Strategy(args.strategy), workers=args.workers)
    out = sampler.run_chain(data, prior, cfg, plan, use_diff_update=args.diff_update)
    sampler.write_draws_csv(out, args.out)
    means = " ".join(f"{m:.6g}" for m in out.draws.mean(axis=0))
    print(f"posterior_mean: {means}")
    print(f"draws={out.draws.shape[0]} evals={out.accept_evals} wall={out.wall_time:.3f}s "
          f"-> {args.out}")
    return 0


def cmd_hb_bench(args) -> int:
    modes = [hb.MappingMode(m) for m in args.modes]
    prior = sampler.GaussianPrior.isotropic(args.K)
    records = []
    for navg in args.navg:
        ds, _ = hb.synthetic_hb_dataset(args.groups, args.K, navg, seed=args.seed)
        policies = [hb.MappingPolicy(mode, workers=w, neval=ne)
                    for mode, w, ne in product(modes, args.workers, args.neval)]
        records.extend(hb.hb_benchmark(ds, prior, policies, n_sweeps=args.sweeps,
                                       reps=args.reps, seed=args.seed))
    perf.write_bench_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def cmd_ising_denoise(args) -> int:
    noisy = ising.read_pbm(args.infile)
    trace: list[float] | None = [] if args.trace else None
    restored = ising.denoise(noisy, w=args.w, bias_scale=args.bias, sweeps=args.sweeps,
                             burnin=args.burnin, seed=args.seed,
                             use_diff=args.diff_update, trace_out=trace)
    ising.write_pbm(args.out, restored, fmt=args.fmt)
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write("sweep,flip_fraction\n")
            for t, fr in enumerate(trace):
                fh.write(f"{t},{fr:.6g}\n")
    changed = int(np.count_nonzero(restored != noisy))
    print(f"restored {args.infile} -> {args.out} ({changed} pixels changed)")
    return 0


def cmd_rng_bench(args) -> int:
    records = []
    for dist, mode in product(args.dists, args.modes):
        records.append(rng.rng_bench(rng.BenchDist(dist), rng.BenchMode(mode),
                                     args.n, seed=args.seed))
    rng.write_rng_bench_csv(records, args.out)
    for r in records:
        print(f"{r.dist:9s} {r.mode:5s} n={r.n} cycles/sample={r.cycles_per_sample:.1f} "
              f"waste={r.waste_fraction:.3f}")
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
