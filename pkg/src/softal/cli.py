"""Command line entry point: ``softal <command> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .bench import BenchConfig, Method, read_curves, run_benchmark
from .criteria import CriterionKind
from .datagen import RESPONSE_NAME, generate, split
from .dataset import (StreamSource, fit_standardizer, load_csv, write_csv,
                      write_table)
from .engine import EngineConfig, run
from .oae import OAEArchitecture, OAEModel, train
from .plotting import emit_figures, emit_plot

log = logging.getLogger("softal")


def _config(args) -> BenchConfig:
    cfg = BenchConfig.load(args.config) if args.config else BenchConfig()
    over = {}
    for name in ("alpha", "budget"):
        if getattr(args, name, None) is not None:
            over[name] = getattr(args, name)
    if getattr(args, "seed", None) is not None:
        over["base_seed"] = args.seed
    return replace(cfg, **over) if over else cfg


def _load_history(path, response_column):
    H = load_csv(path)
    if response_column in H.feature_names:
        H = load_csv(path, response_column).unlabeled()
    return H


def cmd_generate(args) -> int:
    cfg = _config(args)
    spec = cfg.process.with_seed(cfg.base_seed)
    n = args.n or cfg.n_samples
    data = generate(spec, n)
    out = Path(args.out)
    if args.split:
        out.mkdir(parents=True, exist_ok=True)
        H, S, T = split(data, cfg.fractions)
        write_csv(out / "history.csv", H)
        write_csv(out / "stream.csv", S, RESPONSE_NAME)
        write_csv(out / "test.csv", T, RESPONSE_NAME)
        print(f"wrote {H.n}/{S.n}/{T.n} rows to {out}/{{history,stream,test}}.csv")
    else:
        write_csv(out, data, RESPONSE_NAME)
        print(f"wrote {data.n} rows to {out}")
    return 0


def _train_oae(cfg: BenchConfig, H, seed: int) -> OAEModel:
    sizes = cfg.layer_sizes
    if sizes[0] != H.p:
        sizes = (H.p,) + tuple(sizes[1:])
    s = fit_standardizer(H)
    return train(s.transform(H.features), OAEArchitecture(sizes),
                 replace(cfg.train, seed=seed), lam=cfg.lam)


def cmd_train_oae(args) -> int:
    cfg = _config(args)
    H = _load_history(args.history, args.response_column)
    model = _train_oae(cfg, H, cfg.base_seed)
    model.save(args.out)
    best = min(v for _, _, v in model.train_log)
    print(f"trained {len(model.train_log)} epochs, best validation loss {best:.6g}; "
          f"saved to {args.out}")
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    H = _load_history(args.history, args.response_column)
    S = load_csv(args.stream, args.response_column)
    T = load_csv(args.test, args.response_column)
    L = load_csv(args.labeled, args.response_column) if args.labeled else None
    use_oae = not args.no_oae
    oae = None
    if use_oae:
        oae = OAEModel.load(args.oae) if args.oae else _train_oae(cfg, H, cfg.base_seed)
    ecfg = EngineConfig(
        criterion=CriterionKind.parse(args.criterion), alpha=cfg.alpha, budget=cfg.budget,
        committee_size=cfg.committee_size, ridge=cfg.ridge, cov_reg=cfg.cov_reg,
        initial_labels=args.initial_labels, seed=cfg.base_seed, use_oae=use_oae,
    )
    trace = run(H, L, StreamSource.from_dataset(S), T, oae, ecfg)
    out = Path(args.out)
    trace.write(out)
    header, row = trace.model.to_row()
    write_table(out / "model.csv", header, [row])
    if trace.initial_limit is not None:
        lim = trace.initial_limit
        write_table(out / "calibration.csv", ["score"], ([float(v)] for v in lim.scores))
        write_table(out / "limit.csv", ["criterion", "alpha", "bandwidth", "ucl"],
                    [[ecfg.criterion.value, lim.alpha, lim.bandwidth, lim.ucl]])
    first, last = trace.curve[0][1], trace.curve[-1][1]
    print(f"{ecfg.criterion.value}: {trace.n_queried} labels queried over "
          f"{len(trace.steps)} stream points; test RMSE {first:.4g} -> {last:.4g}")
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args)
    over = {}
    if args.runs is not None:
        over["n_runs"] = args.runs
    if args.workers is not None:
        over["workers"] = args.workers
    if args.methods:
        over["methods"] = tuple(Method.parse(m) for m in args.methods.split(","))
    if args.no_oae:
        over["methods"] = tuple(replace(m, use_oae=False) for m in over.get("methods", cfg.methods))
    if over:
        cfg = replace(cfg, **over)
    out = Path(args.out)
    result = run_benchmark(cfg, out_dir=out if args.traces else None)
    result.write_curves(out / "curves.csv")
    emit_figures(result.curves, out)
    for label, c in result.curves.items():
        print(f"{label:>8}: RMSE {c.mean_rmse[0]:.4f} -> {c.mean_rmse[-1]:.4f} "
              f"(+/- {c.std_rmse[-1]:.4f}, {c.n_runs} runs)")
    for r, label, msg in result.failures:
        print(f"run {r} {label} failed: {msg}", file=sys.stderr)
    return 0


def cmd_plot(args) -> int:
    curves = read_curves(args.curves)
    if args.methods:
        wanted = [m.strip() for m in args.methods.split(",")]
        missing = [m for m in wanted if m not in curves]
        if missing:
            raise SystemExit(f"methods not in {args.curves}: {', '.join(missing)}")
        curves = {m: curves[m] for m in wanted}
    if args.out.endswith(".svg"):
        emit_plot(curves, args.out, args.title)
        print(f"wrote {args.out}")
    else:
        for p in emit_figures(curves, args.out):
            print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="softal", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, engine=True):
        sp.add_argument("--config", help="TOML or JSON configuration file")
        sp.add_argument("--seed", type=int, help="base seed (overrides config)")
        if engine:
            sp.add_argument("--alpha", type=float, help="sampling rate for the control limit")
            sp.add_argument("--budget", type=int, help="number of labels to buy")

    def data_args(sp):
        sp.add_argument("--history", required=True, help="unlabeled historical CSV")
        sp.add_argument("--response-column", default=RESPONSE_NAME)

    g = sub.add_parser("generate", help="write synthetic process data")
    common(g, engine=False)
    g.add_argument("--n", type=int, help="number of rows (default from config)")
    g.add_argument("--split", action="store_true",
                   help="treat --out as a directory and write history/stream/test files")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train-oae", help="train the orthogonal autoencoder on history")
    common(t, engine=False)
    data_args(t)
    t.add_argument("--out", required=True, help="model file")
    t.set_defaults(func=cmd_train_oae)

    r = sub.add_parser("run", help="one online active-learning run")
    common(r)
    data_args(r)
    r.add_argument("--stream", required=True)
    r.add_argument("--test", required=True)
    r.add_argument("--labeled", help="initial labeled CSV (default: first stream points)")
    r.add_argument("--initial-labels", type=int)
    r.add_argument("--criterion", default="rnd", choices=[k.value for k in CriterionKind])
    r.add_argument("--oae", help="trained model file (trained on --history if omitted)")
    r.add_argument("--no-oae", action="store_true", help="use standardized raw features")
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="multi-run benchmark with learning-curve figures")
    common(b)
    b.add_argument("--runs", type=int, help="number of runs (overrides config)")
    b.add_argument("--workers", type=int)
    b.add_argument("--methods", help="comma-separated, e.g. rnd-raw,rnd,qbc,emc")
    b.add_argument("--criterion", choices=[k.value for k in CriterionKind],
                   help="shorthand for --methods with a single criterion")
    b.add_argument("--no-oae", action="store_true", help="run every method on raw features")
    b.add_argument("--traces", action="store_true", help="also write per-run trace files")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bench)

    pl = sub.add_parser("plot", help="render figures from curves.csv")
    pl.add_argument("--curves", required=True)
    pl.add_argument("--methods")
    pl.add_argument("--title")
    pl.add_argument("--out", required=True, help="an .svg file or a directory")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "bench" and args.criterion and not args.methods:
        args.methods = args.criterion
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
