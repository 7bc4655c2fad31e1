"""Command-line front end.

Subcommands: run, accountant, bound, verify-noise, validate, fetch-data.
Exit codes: 0 success, 2 validation failure, 3 data ingestion failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import bound as bnd
from . import cauchy
from .config import (ALL_PRESETS, DATA_DIR_ENV, ExperimentSpec, load_spec,
                     resolve_data_dir, validate_spec)
from .errors import ConfigurationError, IngestionError
from .experiment import (BOUND_HEADER, HISTOGRAM_HEADER, run_accountant_csv,
                         run_experiment, run_preset, write_csv)
from .transport import decode_residual_samples

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INGESTION = 3

MNIST_URLS = {
    "train-images-idx3-ubyte.gz": "https://storage.googleapis.com/cvdf-datasets/mnist/train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz": "https://storage.googleapis.com/cvdf-datasets/mnist/train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz": "https://storage.googleapis.com/cvdf-datasets/mnist/t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz": "https://storage.googleapis.com/cvdf-datasets/mnist/t10k-labels-idx1-ubyte.gz",
}


def _cmd_run(args) -> int:
    if bool(args.preset) == bool(args.config):
        print("run: provide exactly one of --preset or --config", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if args.preset:
            summaries = run_preset(args.preset, output_dir=args.out,
                                   trials=args.trials, rounds=args.rounds,
                                   seed=args.seed, jobs=args.jobs)
        else:
            spec = load_spec(args.config)
            spec.output_dir = args.out
            if args.trials is not None:
                spec.trials = args.trials
            if args.rounds is not None:
                spec.fl.rounds = args.rounds
            if args.seed is not None:
                spec.seed = args.seed
            if args.data_dir:
                spec.data_dir = args.data_dir
            summaries = [run_experiment(spec, jobs=args.jobs)]
    except ConfigurationError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except IngestionError as exc:
        print(f"ingestion failure: {exc}", file=sys.stderr)
        return EXIT_INGESTION
    for s in summaries:
        print(json.dumps(s, sort_keys=True))
    return EXIT_OK


def _cmd_accountant(args) -> int:
    q = 1.0 if args.level == "client" else args.q
    try:
        run_accountant_csv(args.out, args.T, args.delta, q, args.C, args.gap,
                           rule=args.rule)
    except (ConfigurationError, ValueError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(args.out)
    return EXIT_OK


def _cmd_bound(args) -> int:
    try:
        client_bounds = None
        if args.client_grad_bounds:
            client_bounds = np.array(
                [float(v) for v in args.client_grad_bounds.split(",")])
        params = bnd.BoundParams(
            mu=args.mu, l_smooth=args.l_smooth, hetero_gap=args.hetero_gap,
            grad_bound=args.grad_bound, local_steps=args.local_steps,
            k_clients=args.k, m_clients=args.m, clip_norm=args.C,
            trunc_bound=args.B, eps=args.eps, init_dist=args.w0_dist,
            lr_shift=args.lr_shift, client_grad_bounds=client_bounds)
        ts = np.unique(np.logspace(0, np.log10(args.t_max), args.points).astype(int))
        rows = [[int(t), bnd.convergence_bound(int(t), params)] for t in ts]
    except ValueError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    write_csv(args.out, BOUND_HEADER, rows)
    print(args.out)
    return EXIT_OK


def _cmd_verify_noise(args) -> int:
    if args.n <= args.k:
        print("validation failure: need n > k (at least one unused sequence)",
              file=sys.stderr)
        return EXIT_VALIDATION
    rng = np.random.default_rng(args.seed)
    samples = decode_residual_samples(args.samples, args.n, args.k,
                                      args.snr_db, rng)
    params = cauchy.CauchyParams(scale=float(args.n - args.k))
    d, p = cauchy.ks_test(samples, lambda x: cauchy.cdf(x, params))
    print(f"D={d!r} p={p!r} n_samples={args.samples} "
          f"reference=Cauchy(0, {args.n - args.k})")
    span = 10.0 * (args.n - args.k)
    counts, edges = np.histogram(samples, bins=args.bins, range=(-span, span))
    write_csv(args.out, HISTOGRAM_HEADER,
              [[float(edges[i]), float(edges[i + 1]), int(c)]
               for i, c in enumerate(counts)])
    return EXIT_OK if p > args.p_threshold else EXIT_VALIDATION


def _cmd_validate(args) -> int:
    try:
        spec = load_spec(args.config)
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"cannot read spec: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    errors = validate_spec(spec)
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def _cmd_fetch_data(args) -> int:
    import urllib.request
    os.makedirs(args.dest, exist_ok=True)
    for name, url in MNIST_URLS.items():
        dest = os.path.join(args.dest, name)
        if os.path.exists(dest) and not args.force:
            print(f"{dest} already present")
            continue
        try:
            print(f"fetching {url}")
            urllib.request.urlretrieve(url, dest)
        except OSError as exc:
            print(f"ingestion failure: could not fetch {name}: {exc}",
                  file=sys.stderr)
            return EXIT_INGESTION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floras",
        description="Over-the-air federated learning simulation lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a preset or a spec file")
    p_run.add_argument("--preset", choices=ALL_PRESETS)
    p_run.add_argument("--config", help="JSON ExperimentSpec file")
    p_run.add_argument("--out", default="results")
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--rounds", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--data-dir", default=None,
                       help=f"MNIST directory (or set ${DATA_DIR_ENV})")
    p_run.set_defaults(func=_cmd_run)

    p_acc = sub.add_parser("accountant", help="composed privacy guarantees CSV")
    p_acc.add_argument("--level", choices=("item", "client"), default="item")
    p_acc.add_argument("--T", type=int, default=1000)
    p_acc.add_argument("--delta", type=float, default=1e-5)
    p_acc.add_argument("--q", type=float, default=0.05)
    p_acc.add_argument("--C", type=float, default=1.0)
    p_acc.add_argument("--gap", type=float, required=True,
                       help="unused sequences N - K")
    p_acc.add_argument("--rule", choices=("sequential", "advanced", "renyi", "all"),
                       default="all")
    p_acc.add_argument("--out", default="accountant.csv")
    p_acc.set_defaults(func=_cmd_accountant)

    p_bound = sub.add_parser("bound", help="convergence-bound values CSV")
    p_bound.add_argument("--mu", type=float, default=0.02)
    p_bound.add_argument("--l-smooth", type=float, default=1.0)
    p_bound.add_argument("--hetero-gap", type=float, default=0.0)
    p_bound.add_argument("--grad-bound", type=float, default=1.0)
    p_bound.add_argument("--local-steps", type=int, default=1)
    p_bound.add_argument("--k", type=int, default=20)
    p_bound.add_argument("--m", type=int, default=20)
    p_bound.add_argument("--C", type=float, default=1.0)
    p_bound.add_argument("--B", type=float, default=10.0)
    p_bound.add_argument("--eps", type=float, default=0.8)
    p_bound.add_argument("--w0-dist", type=float, default=1.0)
    p_bound.add_argument("--lr-shift", type=float, default=0.0)
    p_bound.add_argument("--client-grad-bounds", default=None,
                         help="comma-separated per-client bounds (default: "
                              "grad-bound for every client)")
    p_bound.add_argument("--t-max", type=int, default=10000)
    p_bound.add_argument("--points", type=int, default=50)
    p_bound.add_argument("--out", default="bound.csv")
    p_bound.set_defaults(func=_cmd_bound)

    p_vn = sub.add_parser("verify-noise",
                          help="KS-test the decode residual against its Cauchy law")
    p_vn.add_argument("--n", type=int, required=True, help="sequence set size N")
    p_vn.add_argument("--k", type=int, required=True, help="clients per round K")
    p_vn.add_argument("--samples", type=int, default=100000)
    p_vn.add_argument("--seed", type=int, default=0)
    p_vn.add_argument("--snr-db", type=float, default=40.0)
    p_vn.add_argument("--bins", type=int, default=200)
    p_vn.add_argument("--p-threshold", type=float, default=0.01)
    p_vn.add_argument("--out", default="residual_histogram.csv")
    p_vn.set_defaults(func=_cmd_verify_noise)

    p_val = sub.add_parser("validate", help="validate a JSON spec file")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=_cmd_validate)

    p_fetch = sub.add_parser("fetch-data", help="download the MNIST IDX files")
    p_fetch.add_argument("--dest", default=resolve_data_dir())
    p_fetch.add_argument("--force", action="store_true")
    p_fetch.set_defaults(func=_cmd_fetch_data)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
