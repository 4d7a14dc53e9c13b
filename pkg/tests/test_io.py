import numpy as np
import pytest

from pilotnet.channel import ScenarioConfig, build_dataset
from pilotnet.io import (FormatError, load_checkpoint, load_dataset,
                         save_checkpoint, save_dataset)
from pilotnet.network import HyperParams, init_params
from pilotnet.numerics import RngStream


@pytest.fixture
def dataset():
    cfg = ScenarioConfig(n_h=2, n_v=2, k_sub=4, n_clusters=1,
                         n_paths_per_cluster=2)
    return build_dataset(cfg, 3, seed=17, split="test")


@pytest.fixture
def params():
    return init_params(HyperParams(4, 4, 8, 2), RngStream(5))


class TestDatasetRoundTrip:
    def test_bitwise_equal(self, dataset, tmp_path):
        p = tmp_path / "d.plds"
        save_dataset(p, dataset)
        loaded = load_dataset(p)
        assert np.array_equal(loaded.samples, dataset.samples)
        assert loaded.scenario == dataset.scenario
        assert loaded.split == dataset.split
        assert loaded.seed == dataset.seed

    def test_save_twice_identical_bytes(self, dataset, tmp_path):
        a, b = tmp_path / "a.plds", tmp_path / "b.plds"
        save_dataset(a, dataset)
        save_dataset(b, dataset)
        assert a.read_bytes() == b.read_bytes()

    def test_corrupted_magic(self, dataset, tmp_path):
        p = tmp_path / "d.plds"
        save_dataset(p, dataset)
        raw = bytearray(p.read_bytes())
        raw[:4] = b"XXXX"
        p.write_bytes(raw)
        with pytest.raises(FormatError):
            load_dataset(p)

    def test_version_bump_rejected(self, dataset, tmp_path):
        p = tmp_path / "d.plds"
        save_dataset(p, dataset)
        raw = bytearray(p.read_bytes())
        raw[4] = 99
        p.write_bytes(raw)
        with pytest.raises(FormatError, match="version"):
            load_dataset(p)

    def test_truncation_rejected(self, dataset, tmp_path):
        p = tmp_path / "d.plds"
        save_dataset(p, dataset)
        p.write_bytes(p.read_bytes()[:-5])
        with pytest.raises(IOError):
            load_dataset(p)

    def test_trailing_garbage_rejected(self, dataset, tmp_path):
        p = tmp_path / "d.plds"
        save_dataset(p, dataset)
        p.write_bytes(p.read_bytes() + b"\x00")
        with pytest.raises(FormatError):
            load_dataset(p)


class TestCheckpointRoundTrip:
    def test_all_tensors_bitwise(self, params, tmp_path):
        p = tmp_path / "m.plck"
        # make running stats non-trivial before persisting
        params.conv_stack[0][1].running_mean += 0.25
        save_checkpoint(p, params)
        loaded = load_checkpoint(p)
        assert loaded.hyper == params.hyper
        for (na, a), (nb, b) in zip(params.state_tensors(),
                                    loaded.state_tensors()):
            assert na == nb
            assert np.array_equal(a, b), na

    def test_pilot_roundtrip(self, params, tmp_path):
        from pilotnet.network import extract_pilot
        p = tmp_path / "m.plck"
        save_checkpoint(p, params)
        before = extract_pilot(params).x_tilde
        after = extract_pilot(load_checkpoint(p)).x_tilde
        assert np.array_equal(before, after)

    def test_corrupted_magic(self, params, tmp_path):
        p = tmp_path / "m.plck"
        save_checkpoint(p, params)
        raw = bytearray(p.read_bytes())
        raw[:4] = b"ZZZZ"
        p.write_bytes(raw)
        with pytest.raises(FormatError):
            load_checkpoint(p)

    def test_truncation_rejected(self, params, tmp_path):
        p = tmp_path / "m.plck"
        save_checkpoint(p, params)
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(IOError):
            load_checkpoint(p)
