#!/usr/bin/env python3
"""Compare training on all subcarriers against a single subcarrier.

Both models see the same channel realizations and the same total number
of stacked samples; the multi-carrier set uses every subcarrier's sample
while the single-carrier set repeats subcarrier 0's samples to match the
count. Test NMSE is measured on a held-out multi-carrier set.
"""

import argparse

import numpy as np

from pilotnet.channel import ScenarioConfig, build_dataset
from pilotnet.harness import evaluate_dnn_nmse
from pilotnet.network import HyperParams, TrainConfig, train
from pilotnet.numerics import RngStream


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=50)
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--snr-db", type=float, default=10.0)
    args = ap.parse_args()

    scenario = ScenarioConfig(n_h=8, n_v=8, k_sub=64, n_clusters=6,
                              n_paths_per_cluster=10,
                              angle_spread_rad=np.deg2rad(3.75))
    multi = build_dataset(scenario, 100, args.seed, "train")
    sub0 = build_dataset(scenario, 100, args.seed, "train", subcarrier=0)
    single = np.tile(sub0.samples, (scenario.k_sub, 1, 1))
    test_set = build_dataset(scenario, 50, args.seed + 2, "test")

    m = max(1, round(args.rho * scenario.n_bs))
    hyper = HyperParams(scenario.n_h, scenario.n_v, m, 6)
    cfg = TrainConfig(epochs=args.epochs, snr_db=args.snr_db,
                      seed=args.seed)
    for name, samples in [("multi-carrier", multi.samples),
                          ("single-carrier", single)]:
        params, _ = train(samples, None, hyper, cfg)
        nmse = evaluate_dnn_nmse(params, test_set, args.snr_db,
                                 RngStream(args.seed, 8000))
        print(f"{name}: test NMSE {nmse:.2f} dB "
              f"({samples.shape[0]} training samples)")


if __name__ == "__main__":
    main()
