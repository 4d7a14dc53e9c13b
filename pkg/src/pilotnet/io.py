"""Binary persistence for datasets ("PLDS") and checkpoints ("PLCK").

Both formats are little-endian with a fixed header; payloads are raw
row-major IEEE-754 single-precision values. Loaders validate magic,
version, and sizes, and reject truncated files without constructing a
partial object.
"""

import struct

import numpy as np

from .channel import ScenarioConfig, StackedDataset
from .network import HyperParams, ModelParams, init_params
from .numerics import RngStream

DATASET_MAGIC = b"PLDS"
CHECKPOINT_MAGIC = b"PLCK"
FORMAT_VERSION = 1

_DTYPE = np.dtype("<f4")


class FormatError(ValueError):
    """Bad magic, version, or structural field in a persisted file."""


def _read_exact(f, n, what):
    buf = f.read(n)
    if len(buf) != n:
        raise IOError(f"truncated file while reading {what}")
    return buf


def save_dataset(path, dataset: StackedDataset):
    sc = dataset.scenario
    split = dataset.split.encode()
    samples = np.ascontiguousarray(dataset.samples, dtype=_DTYPE)
    if samples.ndim != 3:
        raise FormatError("dataset payload must be 3-D")
    with open(path, "wb") as f:
        f.write(DATASET_MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<5I", sc.n_h, sc.n_v, sc.k_sub,
                            sc.n_clusters, sc.n_paths_per_cluster))
        f.write(struct.pack("<5d", sc.angle_spread_rad,
                            sc.center_angle_bound_rad, sc.d_over_lambda,
                            sc.f_s, sc.tau_max))
        f.write(struct.pack("<I", len(split)))
        f.write(split)
        f.write(struct.pack("<q", dataset.seed))
        f.write(struct.pack("<3Q", *samples.shape))
        f.write(samples.tobytes())


def load_dataset(path) -> StackedDataset:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "magic")
        if magic != DATASET_MAGIC:
            raise FormatError(f"not a dataset file (magic {magic!r})")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != FORMAT_VERSION:
            raise FormatError(
                f"unsupported dataset format version {version}, "
                f"this build reads version {FORMAT_VERSION}"
            )
        n_h, n_v, k_sub, n_c, n_p = struct.unpack("<5I", _read_exact(f, 20, "scenario"))
        spread, bound, dol, f_s, tau = struct.unpack("<5d", _read_exact(f, 40, "scenario"))
        (slen,) = struct.unpack("<I", _read_exact(f, 4, "split"))
        split = _read_exact(f, slen, "split").decode()
        (seed,) = struct.unpack("<q", _read_exact(f, 8, "seed"))
        dims = struct.unpack("<3Q", _read_exact(f, 24, "dims"))
        payload = _read_exact(f, int(np.prod(dims)) * 4, "payload")
        if f.read(1):
            raise FormatError("trailing bytes after dataset payload")
    scenario = ScenarioConfig(n_h, n_v, k_sub, n_c, n_p, spread, bound,
                              dol, f_s, tau)
    samples = np.frombuffer(payload, dtype=_DTYPE).reshape(dims).copy()
    return StackedDataset(samples, scenario, split, seed)


def save_checkpoint(path, params: ModelParams):
    hp = params.hyper
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<4I", hp.n_h, hp.n_v, hp.m, hp.n_re))
        f.write(struct.pack("<3d", hp.leaky_slope, hp.bn_epsilon,
                            hp.bn_momentum))
        for _, tensor in params.state_tensors():
            f.write(np.ascontiguousarray(tensor, dtype=_DTYPE).tobytes())


def load_checkpoint(path) -> ModelParams:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "magic")
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(f"not a checkpoint file (magic {magic!r})")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != FORMAT_VERSION:
            raise FormatError(
                f"unsupported checkpoint format version {version}, "
                f"this build reads version {FORMAT_VERSION}"
            )
        n_h, n_v, m, n_re = struct.unpack("<4I", _read_exact(f, 16, "hyper"))
        slope, eps, mom = struct.unpack("<3d", _read_exact(f, 24, "hyper"))
        hyper = HyperParams(n_h, n_v, m, n_re, slope, eps, mom)
        params = init_params(hyper, RngStream(0), dtype=np.float32)
        arrays = []
        for name, tensor in params.state_tensors():
            raw = _read_exact(f, tensor.size * 4, name)
            arrays.append(
                np.frombuffer(raw, dtype=_DTYPE).reshape(tensor.shape).copy()
            )
        if f.read(1):
            raise FormatError("trailing bytes after checkpoint payload")
    params.load_state_tensors(arrays)
    return params
