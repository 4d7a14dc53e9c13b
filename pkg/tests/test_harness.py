import numpy as np
import pytest

from pilotnet.channel import ScenarioConfig, build_dataset
from pilotnet.harness import (CSV_HEADER, NMSE_FLOOR_DB, DegenerateInputError,
                              ExperimentConfig, NmseReport,
                              conv_channel_schedule, conv_filter_sum,
                              dnn_complexity_formulas, evaluate_dnn_nmse,
                              exact_mac_counts, instrumented_mac_counts,
                              nmse_db, somp_complexity_formulas, somp_nmse)
from pilotnet.network import HyperParams, init_params
from pilotnet.numerics import RngStream


class TestNmseDb:
    def test_zero_estimate_is_zero_db(self):
        h = RngStream(0).draw_complex_gaussian(12).reshape(3, 4)
        assert nmse_db(h, np.zeros_like(h)) == pytest.approx(0.0, abs=1e-12)

    def test_perfect_estimate_hits_floor(self):
        h = RngStream(1).draw_complex_gaussian(12).reshape(3, 4)
        assert nmse_db(h, h) == NMSE_FLOOR_DB

    def test_half_estimate(self):
        # H_hat = H/2 leaves a quarter of the energy: 10*log10(1/4)
        h = RngStream(2).draw_complex_gaussian(12).reshape(3, 4)
        assert nmse_db(h, h / 2) == pytest.approx(-6.020599913279624)

    def test_batch_averages_ratios(self):
        h1 = RngStream(3).draw_complex_gaussian(8).reshape(2, 4)
        h2 = RngStream(4).draw_complex_gaussian(8).reshape(2, 4)
        batch_t = np.stack([h1, h2])
        batch_e = np.stack([h1, h2 / 2])
        expected = 10 * np.log10((0.0 + 0.25) / 2)
        assert nmse_db(batch_t, batch_e) == pytest.approx(expected)

    def test_scale_invariance(self):
        h = RngStream(5).draw_complex_gaussian(16).reshape(4, 4)
        e = RngStream(6).draw_complex_gaussian(16).reshape(4, 4)
        assert nmse_db(h, e) == pytest.approx(nmse_db(100 * h, 100 * e))

    def test_zero_truth_rejected(self):
        with pytest.raises(DegenerateInputError):
            nmse_db(np.zeros((2, 2)), np.ones((2, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            nmse_db(np.ones((2, 2)), np.ones((2, 3)))

    def test_real_stacked_matches_complex(self):
        h = RngStream(7).draw_complex_gaussian(16).reshape(16)
        e = RngStream(8).draw_complex_gaussian(16).reshape(16)
        stacked_t = np.stack([h.real, h.imag])
        stacked_e = np.stack([e.real, e.imag])
        assert nmse_db(stacked_t, stacked_e) == pytest.approx(
            nmse_db(h[None], e[None]))


class TestEvaluateDnnNmse:
    def test_noiseless_matches_nmse_db(self):
        params = init_params(HyperParams(2, 2, 2, 1), RngStream(0))
        cfg = ScenarioConfig(n_h=2, n_v=2, k_sub=4, n_clusters=1,
                             n_paths_per_cluster=2)
        ds = build_dataset(cfg, 4, seed=9, split="test")
        got = evaluate_dnn_nmse(params, ds, None, RngStream(1))
        from pilotnet.network import model_forward
        pred = model_forward(params, ds.samples, mode="infer")
        assert got == pytest.approx(nmse_db(ds.samples, pred), abs=1e-6)

    def test_noisy_determinism(self):
        params = init_params(HyperParams(2, 2, 2, 1), RngStream(2))
        cfg = ScenarioConfig(n_h=2, n_v=2, k_sub=4, n_clusters=1,
                             n_paths_per_cluster=2)
        ds = build_dataset(cfg, 4, seed=9, split="test")
        a = evaluate_dnn_nmse(params, ds, 10.0, RngStream(3, 7))
        b = evaluate_dnn_nmse(params, ds, 10.0, RngStream(3, 7))
        assert a == b


class TestSompNmse:
    def _scenario(self):
        return ScenarioConfig(n_h=4, n_v=4, k_sub=8, n_clusters=1,
                              n_paths_per_cluster=1, angle_spread_rad=0.0)

    def test_noiseless_single_path_recovery(self):
        # a single-path channel is near-1-sparse on a 4x-oversampled grid,
        # so SOMP with a few iterations should estimate it well
        from pilotnet.harness import _test_realizations
        sc = self._scenario()
        reals = _test_realizations(sc, 10, seed=5)
        v = somp_nmse(reals, sc, m=8, grid=(16, 16), iterations=8,
                      snr_db=None, seed=5)
        assert v < -12.0

    def test_determinism(self):
        from pilotnet.harness import _test_realizations
        sc = self._scenario()
        reals = _test_realizations(sc, 5, seed=6)
        a = somp_nmse(reals, sc, m=8, grid=(16, 16), iterations=4,
                      snr_db=10.0, seed=6)
        b = somp_nmse(reals, sc, m=8, grid=(16, 16), iterations=4,
                      snr_db=10.0, seed=6)
        assert a == b

    def test_more_noise_is_worse(self):
        from pilotnet.harness import _test_realizations
        sc = self._scenario()
        reals = _test_realizations(sc, 20, seed=7)
        lo = somp_nmse(reals, sc, m=8, grid=(16, 16), iterations=2,
                       snr_db=0.0, seed=7)
        hi = somp_nmse(reals, sc, m=8, grid=(16, 16), iterations=2,
                       snr_db=20.0, seed=7)
        assert hi < lo


class TestReportCsv:
    def _report(self):
        rep = NmseReport()
        rep.add("dnn", "cluster", 0.5, 10.0, -8.25, 50, 12.0)
        rep.add("somp_i16", "cluster", 0.5, 10.0, -7.5, 50, 3.0)
        return rep

    def test_header(self):
        text = self._report().to_csv()
        assert text.splitlines()[0] == ",".join(CSV_HEADER)

    def test_sorted_rows(self):
        rep = NmseReport()
        rep.add("somp_i8", "cluster", 0.5, 10.0, -7.0, 50, 1.0)
        rep.add("dnn", "cluster", 0.25, 20.0, -5.0, 50, 1.0)
        rep.add("dnn", "cluster", 0.25, 10.0, -4.0, 50, 1.0)
        lines = rep.to_csv().splitlines()[1:]
        assert [l.split(",")[0] for l in lines] == ["dnn", "dnn", "somp_i8"]
        assert lines[0].split(",")[3] == "10.0"

    def test_deterministic_modulo_wall_clock(self):
        a = self._report()
        b = self._report()
        b.rows[0]["wall_s"] = 99.0

        def strip_wall(text):
            return ["," .join(l.split(",")[:-1]) for l in text.splitlines()]

        assert strip_wall(a.to_csv()) == strip_wall(b.to_csv())

    def test_lookup(self):
        rep = self._report()
        assert rep.lookup("dnn", 0.5, 10.0) == -8.25
        with pytest.raises(KeyError):
            rep.lookup("dnn", 0.25, 10.0)

    def test_file_roundtrip(self, tmp_path):
        p = tmp_path / "r.csv"
        text = self._report().to_csv(p)
        assert p.read_text() == text


class TestExperimentConfig:
    def _sc(self):
        return ScenarioConfig(n_h=4, n_v=4, k_sub=8, n_clusters=1,
                              n_paths_per_cluster=2)

    def test_default_grid(self):
        cfg = ExperimentConfig(self._sc(), [0.5], [10.0])
        assert cfg.somp_grid == (16, 16)

    def test_bad_rho(self):
        with pytest.raises(ValueError):
            ExperimentConfig(self._sc(), [1.5], [10.0])

    def test_empty_lists(self):
        with pytest.raises(ValueError):
            ExperimentConfig(self._sc(), [], [10.0])


class TestComplexity:
    def test_channel_schedule(self):
        assert conv_channel_schedule(3) == [(2, 2), (2, 4), (4, 8)]

    def test_filter_sum_reference_depth(self):
        # 2*2 + 2*4 + 4*8 + ... + 128*256 for an 8-unit stack
        assert conv_filter_sum(8) == 43692

    def test_fc_formula_full_scale(self):
        vals = dnn_complexity_formulas(256, 0.25, 8)
        assert vals["fc_dimensionality_reduction"] == 16384
        assert vals["fc_reconstruction"] == 16384
        assert vals["conv_reconstruction"] == 256 * 9 * 43692

    def test_exact_counts_formula(self):
        counts = exact_mac_counts(4, 4, 8, 3)
        assert counts["fc_pilot"] == 2 * 16 * 8
        assert counts["fc_coarse"] == 2 * 8 * 32
        assert counts["conv"] == 16 * 9 * (4 + 8 + 32)
        assert counts["output_conv"] == 16 * 9 * 8 * 2

    @pytest.mark.parametrize("n_h,n_v,m,n_re",
                             [(2, 2, 2, 1), (4, 4, 8, 3), (4, 2, 4, 2)])
    def test_instrumented_matches_closed_form(self, n_h, n_v, m, n_re):
        params = init_params(HyperParams(n_h, n_v, m, n_re), RngStream(0))
        assert instrumented_mac_counts(params) == exact_mac_counts(
            n_h, n_v, m, n_re)

    def test_somp_formulas_hand_values(self):
        vals = somp_complexity_formulas(n_bs=16, rho=0.5, g=8, k_sub=4,
                                        iters=2)
        assert vals["correlation"] == 0.5 * 16 * 64 * 4 * 2
        assert vals["project_subspace"] == pytest.approx(
            0.25 * 4 * 9 + 8 * 2 * 3 * 5 / 3 + 0.5 * 8 * 4 * 2 * 3)
        assert vals["update_residual"] == pytest.approx(0.5 * 8 * 4 * 2 * 3)
        assert vals["compute_mse"] == 8 * 16 * 2
        assert vals["reestablishment"] == 16 * 4 * 2

    def test_report_text_contains_counts(self):
        from pilotnet.harness import complexity_report
        text = complexity_report(16, 16, 0.25, 8)
        assert "43692" in text.replace(",", "")
        assert "fc_pilot" in text
