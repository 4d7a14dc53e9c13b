#!/usr/bin/env python3
"""Desk-scale DNN-vs-SOMP NMSE sweep on the clustered scenario.

Trains one model per (rho, SNR) cell and compares against the SOMP
baseline with a validation-chosen iteration count. Writes a CSV report.
Expect roughly half an hour on a laptop core for the default grid.
"""

import argparse

import numpy as np

from pilotnet.channel import ScenarioConfig
from pilotnet.harness import ExperimentConfig, run_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="desk_results.csv")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=50)
    ap.add_argument("--s-train", type=int, default=100)
    ap.add_argument("--rho", type=float, nargs="+", default=[0.25, 0.5])
    ap.add_argument("--snr", type=float, nargs="+",
                    default=[0.0, 5.0, 10.0, 15.0, 20.0])
    args = ap.parse_args()

    scenario = ScenarioConfig(n_h=8, n_v=8, k_sub=64, n_clusters=6,
                              n_paths_per_cluster=10,
                              angle_spread_rad=np.deg2rad(3.75))
    cfg = ExperimentConfig(scenario, args.rho, args.snr,
                           s_train=args.s_train, epochs=args.epochs,
                           n_re=6, seed=args.seed)
    report = run_curve(cfg, csv_path=args.out)
    print(report.to_csv(), end="")
    print(f"\nwrote {args.out}")


if __name__ == "__main__":
    main()
