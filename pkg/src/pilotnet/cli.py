"""Command-line entry point.

Subcommands: gen (dataset generation), train, eval, somp, compare
(experiment config file -> NMSE CSV), complexity. Exit code 0 on
success, nonzero with a diagnostic on stderr otherwise.
"""

import argparse
import json
import sys

import numpy as np

from . import harness, io
from .channel import ScenarioConfig, build_dataset
from .harness import ExperimentConfig
from .network import HyperParams, TrainConfig, init_params, train
from .numerics import RngStream


def _scenario_args(p):
    p.add_argument("--scenario", choices=["cluster", "onering"],
                   default="cluster")
    p.add_argument("--nh", type=int, default=16)
    p.add_argument("--nv", type=int, default=16)
    p.add_argument("--k", type=int, default=256)
    p.add_argument("--nc", type=int, default=None,
                   help="clusters (default: 6 cluster / 1 onering)")
    p.add_argument("--np", dest="n_paths", type=int, default=None,
                   help="paths per cluster (default: 10 cluster / 100 onering)")
    p.add_argument("--spread-deg", type=float, default=None,
                   help="angle spread (default: 3.75 cluster / 7.5 onering)")


def _make_scenario(args):
    onering = args.scenario == "onering"
    return ScenarioConfig(
        n_h=args.nh, n_v=args.nv, k_sub=args.k,
        n_clusters=args.nc if args.nc is not None else (1 if onering else 6),
        n_paths_per_cluster=args.n_paths if args.n_paths is not None
        else (100 if onering else 10),
        angle_spread_rad=np.deg2rad(
            args.spread_deg if args.spread_deg is not None
            else (7.5 if onering else 3.75)),
    )


def cmd_gen(args):
    sc = _make_scenario(args)
    ds = build_dataset(sc, args.s, args.seed, args.split)
    io.save_dataset(args.out, ds)
    print(f"wrote {args.out}: dims {ds.samples.shape}")


def cmd_train(args):
    train_set = io.load_dataset(args.data)
    val_set = io.load_dataset(args.val) if args.val else None
    sc = train_set.scenario
    m = max(1, round(args.rho * sc.n_bs))
    hyper = HyperParams(sc.n_h, sc.n_v, m, args.n_re)
    cfg = TrainConfig(learning_rate=args.lr, batch_size=args.batch,
                      epochs=args.epochs, snr_db=args.snr_db, seed=args.seed)
    params, history = train(train_set, val_set, hyper, cfg)
    io.save_checkpoint(args.out, params)
    last_val = history.val_loss[-1] if history.val_loss else float("nan")
    print(f"wrote {args.out}: final train loss {history.train_loss[-1]:.6g}, "
          f"val loss {last_val:.6g}")


def cmd_eval(args):
    params = io.load_checkpoint(args.model)
    test_set = io.load_dataset(args.data)
    nmse = harness.evaluate_dnn_nmse(params, test_set, args.snr_db,
                                     RngStream(args.seed, 8000))
    report = harness.NmseReport()
    report.add("dnn", harness.scenario_tag(test_set.scenario),
               params.hyper.m / params.hyper.n_bs, args.snr_db, nmse,
               test_set.samples.shape[0], 0.0)
    text = report.to_csv(args.out)
    print(text, end="")


def cmd_somp(args):
    test_set = io.load_dataset(args.data)
    sc = test_set.scenario
    m = max(1, round(args.rho * sc.n_bs))
    reals = harness._test_realizations(sc, args.s, test_set.seed)
    grid = (args.grid, args.grid)
    nmse = harness.somp_nmse(reals, sc, m, grid, args.iters, args.snr_db,
                             args.seed)
    report = harness.NmseReport()
    report.add(f"somp_i{args.iters}", harness.scenario_tag(sc), args.rho,
               args.snr_db, nmse, len(reals), 0.0)
    text = report.to_csv(args.out)
    print(text, end="")


def _experiment_from_file(path, overrides):
    with open(path) as f:
        raw = json.load(f)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    sc_raw = raw.pop("scenario", {})
    scenario = ScenarioConfig(**sc_raw)
    return ExperimentConfig(scenario=scenario, **raw)


def cmd_compare(args):
    overrides = {"seed": args.seed, "epochs": args.epochs}
    cfg = _experiment_from_file(args.config, overrides)
    report = harness.run_curve(cfg, csv_path=args.out)
    print(report.to_csv(), end="")


def cmd_complexity(args):
    n_h = args.nh if args.nh else int(round(np.sqrt(args.nbs)))
    n_v = args.nv if args.nv else args.nbs // n_h
    if n_h * n_v != args.nbs:
        raise SystemExit("nbs must factor as nh * nv")
    print(harness.complexity_report(n_h, n_v, args.rho, args.nre,
                                    grid_g=args.grid, k_sub=args.k,
                                    iters=args.iters))


def build_parser():
    p = argparse.ArgumentParser(prog="pilotnet")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a stacked channel dataset")
    _scenario_args(g)
    g.add_argument("--s", type=int, required=True, help="realization count")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--split", default="train")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a model on a dataset")
    t.add_argument("--data", required=True)
    t.add_argument("--val", default=None)
    t.add_argument("--rho", type=float, required=True)
    t.add_argument("--snr-db", type=float, default=None)
    t.add_argument("--epochs", type=int, default=50)
    t.add_argument("--batch", type=int, default=128)
    t.add_argument("--lr", type=float, default=0.001)
    t.add_argument("--n-re", type=int, default=6)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--snr-db", type=float, default=None)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("somp", help="run the SOMP baseline on a dataset")
    s.add_argument("--data", required=True)
    s.add_argument("--rho", type=float, required=True)
    s.add_argument("--grid", type=int, default=64)
    s.add_argument("--iters", type=int, default=16)
    s.add_argument("--s", type=int, default=50, help="test realizations")
    s.add_argument("--snr-db", type=float, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_somp)

    c = sub.add_parser("compare", help="full DNN-vs-SOMP sweep from a config")
    c.add_argument("--config", required=True, help="JSON experiment config")
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--epochs", type=int, default=None)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_compare)

    x = sub.add_parser("complexity", help="print complexity tables")
    x.add_argument("--nbs", type=int, default=256)
    x.add_argument("--nh", type=int, default=None)
    x.add_argument("--nv", type=int, default=None)
    x.add_argument("--rho", type=float, default=0.25)
    x.add_argument("--nre", type=int, default=8)
    x.add_argument("--grid", type=int, default=64)
    x.add_argument("--k", type=int, default=256)
    x.add_argument("--iters", type=int, default=16)
    x.set_defaults(func=cmd_complexity)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
