import itertools

import numpy as np
import pytest

from pilotnet.numerics import RngStream, lstsq
from pilotnet.somp import (Dictionary, SompConfig, SompConfigError,
                           build_dictionary, random_pilot, reestablish,
                           somp_estimate)


def exhaustive_mmv_oracle(y, phi, s):
    """Best size-s support by brute-force least squares over all supports."""
    best = None
    for cand in itertools.combinations(range(phi.shape[1]), s):
        x = lstsq(phi[:, list(cand)], y)
        r = np.linalg.norm(y - phi[:, list(cand)] @ x)
        if best is None or r < best[0]:
            best = (r, list(cand), x)
    return best


def sparse_mmv_problem(seed, m=8, d=16, k=4, s=2):
    rng = RngStream(seed)
    phi = rng.draw_complex_gaussian(m * d).reshape(m, d)
    phi = phi / np.linalg.norm(phi, axis=0)
    support = sorted(
        np.random.default_rng(seed).choice(d, s, replace=False).tolist()
    )
    coeffs = rng.draw_complex_gaussian(s * k).reshape(s, k)
    return phi[:, support] @ coeffs, phi, support


class TestBuildDictionary:
    def test_unit_columns(self):
        d = build_dictionary(16, 12, 4, 3)
        assert np.abs(np.linalg.norm(d.psi, axis=0) - 1).max() < 1e-12

    def test_oversampling_one_matches_angular_atoms(self):
        from pilotnet.channel import angular_transform_matrix
        d = build_dictionary(4, 4, 4, 4)
        f = angular_transform_matrix(4, 4)
        assert np.abs(d.psi - f).max() < 1e-12

    def test_full_scale_atom_count(self):
        d = build_dictionary(64, 64, 16, 16)
        assert d.psi.shape == (256, 4096)

    def test_undersized_grid_rejected(self):
        with pytest.raises(SompConfigError):
            build_dictionary(3, 4, 4, 4)


class TestRandomPilot:
    def test_determinism(self):
        a = random_pilot(8, 4, RngStream(3, 1))
        b = random_pilot(8, 4, RngStream(3, 1))
        assert np.array_equal(a, b)

    def test_column_energy(self):
        cols = []
        for t in range(2000):
            cols.append(np.sum(random_pilot(16, 4, RngStream(t)) ** 2, axis=0))
        assert np.mean(cols) == pytest.approx(16 / 4, rel=0.05)

    def test_square_pilot_invertible(self):
        x = random_pilot(8, 8, RngStream(11))
        assert np.linalg.cond(x) < 1e6

    def test_bad_m(self):
        with pytest.raises(SompConfigError):
            random_pilot(4, 5, RngStream(0))


class TestSompEstimate:
    @pytest.mark.parametrize("seed", range(10))
    def test_exact_recovery_matches_oracle(self, seed):
        y, phi, support = sparse_mmv_problem(seed)
        res = somp_estimate(y, phi, SompConfig(iterations=2))
        _, oracle_support, _ = exhaustive_mmv_oracle(y, phi, 2)
        assert sorted(res.support) == sorted(oracle_support) == support
        rel = res.residual_norms[-1] / np.linalg.norm(y)
        assert rel < 1e-8

    def test_zero_input(self):
        phi = sparse_mmv_problem(0)[1]
        res = somp_estimate(np.zeros((8, 4), complex), phi,
                            SompConfig(iterations=3))
        assert res.support == []
        assert res.coeffs.shape == (0, 4)

    def test_residual_monotone(self):
        rng = RngStream(42)
        y = rng.draw_complex_gaussian(8 * 5).reshape(8, 5)
        phi = rng.draw_complex_gaussian(8 * 20).reshape(8, 20)
        res = somp_estimate(y, phi, SompConfig(iterations=8))
        assert np.all(np.diff(res.residual_norms) <= 1e-10)

    def test_joint_support_column_permutation(self):
        y, phi, _ = sparse_mmv_problem(5)
        perm = [2, 0, 3, 1]
        a = somp_estimate(y, phi, SompConfig(iterations=2))
        b = somp_estimate(y[:, perm], phi, SompConfig(iterations=2))
        assert a.support == b.support
        assert np.allclose(a.coeffs[:, perm], b.coeffs)

    def test_unnormalized_atoms_rescaled(self):
        y, phi, _ = sparse_mmv_problem(7)
        scaled = phi * np.arange(1, phi.shape[1] + 1)
        a = somp_estimate(y, phi, SompConfig(iterations=2))
        b = somp_estimate(y, scaled, SompConfig(iterations=2))
        assert a.support == b.support
        ratio = np.array([s + 1 for s in b.support])[:, None]
        assert np.allclose(b.coeffs * ratio, a.coeffs)

    def test_too_many_iterations_rejected(self):
        y, phi, _ = sparse_mmv_problem(1)
        with pytest.raises(SompConfigError):
            somp_estimate(y, phi, SompConfig(iterations=9))

    def test_early_stop(self):
        y, phi, _ = sparse_mmv_problem(2)
        res = somp_estimate(y, phi, SompConfig(iterations=8,
                                               residual_tol=1e-6))
        assert len(res.support) == 2  # stops once the 2-sparse fit is exact


class TestReestablish:
    def test_zero_coeffs(self):
        d = build_dictionary(4, 4, 4, 4)
        res = somp_estimate(np.zeros((8, 3), complex),
                            d.psi[:8, :], SompConfig(iterations=2))
        h = reestablish(res, d)
        assert np.array_equal(h, np.zeros((3, 16)))

    def test_single_atom_identity(self):
        d = build_dictionary(8, 8, 4, 2)
        from pilotnet.somp import SompResult
        res = SompResult(support=[5], coeffs=np.ones((1, 2), complex),
                         residual_norms=[0.0])
        h = reestablish(res, d)
        assert np.allclose(h[0], d.psi[:, 5])
        assert res.h_s_hat is h

    def test_exact_recovery_roundtrip(self):
        d = build_dictionary(8, 8, 4, 4)
        rng = RngStream(31)
        support = [3, 17]
        coeffs = rng.draw_complex_gaussian(2 * 6).reshape(2, 6)
        h_s = (d.psi[:, support] @ coeffs).T
        pilot = random_pilot(16, 8, rng)
        y = (h_s @ pilot).T
        phi = pilot.T @ d.psi
        res = somp_estimate(y, phi, SompConfig(iterations=2))
        h_hat = reestablish(res, d)
        assert np.linalg.norm(h_hat - h_s) / np.linalg.norm(h_s) < 1e-8
