"""Experiment orchestration: NMSE metric, DNN-vs-SOMP sweeps, complexity.

Results go to a CSV with the pinned header
``method,scenario,rho,snr_db,nmse_db,n_test,wall_s``; all result-bearing
columns are deterministic for a fixed seed (wall_s is wall-clock and is
the only nondeterministic column).
"""

import csv
import io as _stdio
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import (ScenarioConfig, StackedDataset, build_dataset,
                      gen_realization, realization_to_samples)
from .measurement import SnrSpec, calibrate_snr, compress
from .network import (HyperParams, MacCounter, TrainConfig, evaluate_loss,
                      extract_pilot, init_params, model_forward, train)
from .numerics import RngStream
from .somp import (Dictionary, SompConfig, build_dictionary, random_pilot,
                   reestablish, somp_estimate)

NMSE_FLOOR_DB = -100.0
CSV_HEADER = ["method", "scenario", "rho", "snr_db", "nmse_db", "n_test",
              "wall_s"]


class DegenerateInputError(ValueError):
    """Ground-truth channel has zero norm."""


def nmse_db(h_true, h_est):
    """10*log10(mean over items of ||H - H_hat||_F^2 / ||H||_F^2) in dB,
    clamped below at -100 dB. Accepts one matrix or a batch (leading dim)."""
    h_true = np.asarray(h_true)
    h_est = np.asarray(h_est)
    if h_true.shape != h_est.shape:
        raise ValueError("shape mismatch between truth and estimate")
    if h_true.ndim == 2:
        h_true, h_est = h_true[None], h_est[None]
    axes = tuple(range(1, h_true.ndim))
    sig = np.sum(np.abs(h_true.astype(np.complex128)) ** 2, axis=axes)
    if np.any(sig == 0):
        raise DegenerateInputError("zero-norm ground truth")
    err = np.sum(np.abs((h_est - h_true).astype(np.complex128)) ** 2, axis=axes)
    ratio = float(np.mean(err / sig))
    if ratio <= 10 ** (NMSE_FLOOR_DB / 10):
        return NMSE_FLOOR_DB
    return max(10.0 * np.log10(ratio), NMSE_FLOOR_DB)


@dataclass
class ExperimentConfig:
    scenario: ScenarioConfig
    rho_list: list
    snr_db_list: list
    s_train: int = 100
    s_val: int = 50
    s_test: int = 50
    n_re: int = 6
    epochs: int = 50
    batch_size: int = 128
    learning_rate: float = 0.001
    somp_grid: tuple = None
    somp_iters: list = field(default_factory=lambda: [8, 16, 32, 64])
    seed: int = 0

    def __post_init__(self):
        if not self.rho_list or not self.snr_db_list:
            raise ValueError("rho and SNR lists must be non-empty")
        if any(not 0 < r <= 1 for r in self.rho_list):
            raise ValueError("rho must lie in (0, 1]")
        if self.somp_grid is None:
            # oversampling ratio 4 per dimension, matching the baseline setup
            self.somp_grid = (4 * self.scenario.n_h, 4 * self.scenario.n_v)


@dataclass
class NmseReport:
    rows: list = field(default_factory=list)  # dicts keyed by CSV_HEADER
    metadata: dict = field(default_factory=dict)

    def add(self, method, scenario, rho, snr_db, nmse, n_test, wall_s):
        self.rows.append({
            "method": method, "scenario": scenario, "rho": rho,
            "snr_db": snr_db, "nmse_db": nmse, "n_test": n_test,
            "wall_s": wall_s,
        })

    def lookup(self, method, rho, snr_db):
        for r in self.rows:
            if (r["method"], r["rho"], r["snr_db"]) == (method, rho, snr_db):
                return r["nmse_db"]
        raise KeyError((method, rho, snr_db))

    def to_csv(self, path=None):
        buf = _stdio.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        def snr_key(r):
            return -np.inf if r["snr_db"] is None else r["snr_db"]

        for r in sorted(self.rows,
                        key=lambda r: (r["method"], r["rho"], snr_key(r))):
            snr = "" if r["snr_db"] is None else f"{r['snr_db']:.1f}"
            w.writerow([r["method"], r["scenario"], f"{r['rho']:.4f}",
                        snr, f"{r['nmse_db']:.4f}",
                        r["n_test"], f"{r['wall_s']:.3f}"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as f:
                f.write(text)
        return text


def scenario_tag(sc: ScenarioConfig):
    return "onering" if sc.n_clusters == 1 else "cluster"


def evaluate_dnn_nmse(params, samples, snr_db, rng: RngStream):
    """Test NMSE of a model on stacked real samples at a given SNR.

    Noise is calibrated on this set's noiseless measurements with the
    model's current pilot; pass snr_db=None for a noiseless evaluation.
    """
    samples = np.asarray(getattr(samples, "samples", samples))
    spec = None
    if snr_db is not None:
        spec = calibrate_snr(samples, extract_pilot(params), snr_db)
    sig = np.sum(samples.astype(np.float64) ** 2, axis=(1, 2))
    if np.any(sig == 0):
        raise DegenerateInputError("zero-norm test sample")
    ratios = []
    for i in range(0, samples.shape[0], 512):
        batch = samples[i:i + 512]
        pred = model_forward(params, batch, spec, rng, mode="infer")
        err = np.sum((pred - batch).astype(np.float64) ** 2, axis=(1, 2))
        ratios.append(err / sig[i:i + 512])
    ratio = float(np.mean(np.concatenate(ratios)))
    if ratio <= 10 ** (NMSE_FLOOR_DB / 10):
        return NMSE_FLOOR_DB
    return max(10.0 * np.log10(ratio), NMSE_FLOOR_DB)


def _test_realizations(scenario, s_test, seed):
    base = RngStream(seed)
    return [gen_realization(scenario, base.substream(r)).h_s
            for r in range(s_test)]


def somp_nmse(realizations, scenario, m, grid, iterations, snr_db, seed,
              residual_tol=None):
    """NMSE of the SOMP baseline over complex test realizations.

    Uses i.i.d. Gaussian pilots and complex AWGN at a measurement-
    referenced SNR matching the DNN convention.
    """
    rng = RngStream(seed, 9000)
    pilot = random_pilot(scenario.n_bs, m, rng)
    dictionary = build_dictionary(grid[0], grid[1], scenario.n_h, scenario.n_v)
    phi = pilot.T @ dictionary.psi  # complex sensing matrix M x D

    y_all = [h_s @ pilot for h_s in realizations]  # each K x M
    ref_power = float(np.mean([np.mean(np.abs(y) ** 2) for y in y_all]))
    sigma2 = ref_power / 10 ** (snr_db / 10) if snr_db is not None else 0.0

    cfg = SompConfig(iterations=iterations, residual_tol=residual_tol)
    ratios = []
    for h_s, y in zip(realizations, y_all):
        if sigma2 > 0:
            noise = rng.draw_complex_gaussian(y.size).reshape(y.shape)
            y = y + np.sqrt(sigma2) * noise
        result = somp_estimate(y.T, phi, cfg)
        h_hat = reestablish(result, dictionary)
        ratios.append(np.sum(np.abs(h_hat - h_s) ** 2)
                      / np.sum(np.abs(h_s) ** 2))
    ratio = float(np.mean(ratios))
    return max(10.0 * np.log10(max(ratio, 10 ** (NMSE_FLOOR_DB / 10))),
               NMSE_FLOOR_DB)


def pick_somp_iters(val_realizations, scenario, m, grid, candidates, snr_db,
                    seed):
    """Small validation sweep over iteration counts; returns the best I."""
    best_i, best_nmse = None, np.inf
    for i in candidates:
        if i > m:
            continue
        v = somp_nmse(val_realizations, scenario, m, grid, i, snr_db, seed)
        if v < best_nmse:
            best_i, best_nmse = i, v
    if best_i is None:
        raise ValueError("no admissible SOMP iteration count (all exceed M)")
    return best_i


def train_cell(train_set, val_set, scenario, rho, snr_db, cfg: ExperimentConfig):
    """Train one model for a (rho, snr) operating point."""
    m = max(1, round(rho * scenario.n_bs))
    hyper = HyperParams(scenario.n_h, scenario.n_v, m, cfg.n_re)
    tc = TrainConfig(learning_rate=cfg.learning_rate,
                     batch_size=cfg.batch_size, epochs=cfg.epochs,
                     snr_db=snr_db, seed=cfg.seed)
    return train(train_set, val_set, hyper, tc)


def run_curve(cfg: ExperimentConfig, csv_path=None,
              train_fn=train_cell) -> NmseReport:
    """Full DNN-vs-SOMP sweep over (rho, snr) cells; one model per cell."""
    sc = cfg.scenario
    tag = scenario_tag(sc)
    train_set = build_dataset(sc, cfg.s_train, cfg.seed, "train")
    val_set = build_dataset(sc, cfg.s_val, cfg.seed + 1, "val")
    test_set = build_dataset(sc, cfg.s_test, cfg.seed + 2, "test")
    test_reals = _test_realizations(sc, cfg.s_test, cfg.seed + 2)
    val_reals = _test_realizations(sc, cfg.s_val, cfg.seed + 1)

    report = NmseReport(metadata={"seed": cfg.seed, "scenario": tag})
    for rho in cfg.rho_list:
        m = max(1, round(rho * sc.n_bs))
        for snr in cfg.snr_db_list:
            t0 = time.perf_counter()
            params, _ = train_fn(train_set, val_set, sc, rho, snr, cfg)
            nmse = evaluate_dnn_nmse(params, test_set, snr,
                                     RngStream(cfg.seed, 8000))
            report.add("dnn", tag, rho, snr, nmse,
                       test_set.samples.shape[0], time.perf_counter() - t0)

            t0 = time.perf_counter()
            iters = pick_somp_iters(val_reals, sc, m, cfg.somp_grid,
                                    cfg.somp_iters, snr, cfg.seed)
            nmse_s = somp_nmse(test_reals, sc, m, cfg.somp_grid, iters, snr,
                               cfg.seed)
            report.add(f"somp_i{iters}", tag, rho, snr, nmse_s,
                       len(test_reals), time.perf_counter() - t0)
    if csv_path is not None:
        report.to_csv(csv_path)
    return report


# ---------------------------------------------------------------------------
# Complexity accounting


def conv_channel_schedule(n_re):
    """Input/output feature-map counts n_{l-1}, n_l with n_0 = 2, n_l = 2^l."""
    chans = [2] + [2 ** l for l in range(1, n_re + 1)]
    return list(zip(chans[:-1], chans[1:]))


def conv_filter_sum(n_re):
    return sum(a * b for a, b in conv_channel_schedule(n_re))


def exact_mac_counts(n_h, n_v, m, n_re, k_side=3):
    """Per-sample multiply-accumulate counts of one forward pass."""
    n_bs = n_h * n_v
    return {
        "fc_pilot": 2 * n_bs * m,
        "fc_coarse": 2 * m * 2 * n_bs,
        "conv": n_bs * k_side ** 2 * conv_filter_sum(n_re),
        "output_conv": n_bs * k_side ** 2 * 2 ** n_re * 2,
    }


def instrumented_mac_counts(params):
    """Actual MAC counter from a single-sample forward pass."""
    hp = params.hyper
    counter = MacCounter()
    x = np.zeros((1, 2, hp.n_bs), dtype=np.float32)
    model_forward(params, x, mode="infer", counter=counter)
    return dict(counter.by_kind)


def dnn_complexity_formulas(n_bs, rho, n_re, k_side=3):
    """Big-O formula values for the DNN estimator's online stage."""
    return {
        "fc_dimensionality_reduction": n_bs ** 2 * rho,
        "fc_reconstruction": n_bs ** 2 * rho,
        "conv_reconstruction": n_bs * k_side ** 2 * conv_filter_sum(n_re),
    }


def somp_complexity_formulas(n_bs, rho, g, k_sub, iters):
    """Formula values for the SOMP baseline's per-estimate cost.

    g is the per-dimension grid count; g**2 is the atom count.
    """
    i = iters
    return {
        "correlation": rho * n_bs * g ** 2 * k_sub * i,
        "project_subspace": (0.25 * i ** 2 * (i + 1) ** 2
                             + rho * n_bs * i * (i + 1) * (2 * i + 1) / 3.0
                             + 0.5 * rho * n_bs * k_sub * i * (i + 1)),
        "update_residual": 0.5 * rho * n_bs * k_sub * i * (i + 1),
        "compute_mse": rho * n_bs * k_sub ** 2 * i,
        "reestablishment": n_bs * k_sub * i,
    }


def complexity_report(n_h, n_v, rho, n_re, k_side=3, grid_g=64, k_sub=256,
                      iters=16):
    """Side-by-side table of formula values and exact MAC counts."""
    n_bs = n_h * n_v
    m = max(1, round(rho * n_bs))
    lines = ["DNN online complexity (formula values):"]
    for name, val in dnn_complexity_formulas(n_bs, rho, n_re, k_side).items():
        lines.append(f"  {name}: {val:,.0f}")
    lines.append(f"  conv filter-product sum (n_re={n_re}): "
                 f"{conv_filter_sum(n_re):,}")
    lines.append("DNN exact per-sample MACs (this implementation):")
    for name, val in exact_mac_counts(n_h, n_v, m, n_re, k_side).items():
        lines.append(f"  {name}: {val:,}")
    lines.append(f"SOMP complexity (G={grid_g}, K={k_sub}, I={iters}):")
    for name, val in somp_complexity_formulas(n_bs, rho, grid_g, k_sub,
                                              iters).items():
        lines.append(f"  {name}: {val:,.0f}")
    return "\n".join(lines)
