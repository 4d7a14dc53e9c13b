"""Wideband UPA channel simulator.

Generates one-ring and cluster-sparse channel realizations over K OFDM
subcarriers, transforms them to the angular domain, and stacks real/imag
samples into training datasets.
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import DimensionError, RngStream, dft_matrix, kron


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry and statistics of a channel scenario.

    Angles in radians; f_s in Hz; tau_max in seconds. Defaults follow the
    convention that per-path delays are uniform on [0, tau_max] with
    tau_max spanning a quarter of the OFDM symbol.
    """

    n_h: int = 16
    n_v: int = 16
    k_sub: int = 256
    n_clusters: int = 6
    n_paths_per_cluster: int = 10
    angle_spread_rad: float = np.deg2rad(3.75)
    center_angle_bound_rad: float = np.pi / 3
    d_over_lambda: float = 0.5
    f_s: float = 100e6
    tau_max: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if min(self.n_h, self.n_v, self.k_sub, self.n_clusters,
               self.n_paths_per_cluster) < 1:
            raise ValueError("counts must be >= 1")
        if self.angle_spread_rad < 0 or self.d_over_lambda <= 0:
            raise ValueError("invalid spread or spacing")
        if self.tau_max is None:
            object.__setattr__(self, "tau_max", self.k_sub / (4.0 * self.f_s))
        if self.tau_max < 0:
            raise ValueError("tau_max must be >= 0")

    @property
    def n_bs(self):
        return self.n_h * self.n_v


@dataclass
class PathParams:
    gain: complex
    delay: float
    azimuth: float
    elevation: float
    cluster: int


@dataclass
class ChannelRealization:
    """Frequency-spatial channel H_s, one subcarrier per row (K x N_BS)."""

    h_s: np.ndarray
    scenario: ScenarioConfig
    seed: int
    stream_id: int


@dataclass
class StackedDataset:
    """Real-valued training samples stacked realization-major.

    samples has dims (S*K, 2, N_BS): row 0 is Re(h_k), row 1 is Im(h_k).
    """

    samples: np.ndarray
    scenario: ScenarioConfig
    split: str
    seed: int


def sample_paths(cfg: ScenarioConfig, rng: RngStream):
    """Draw N_c * N_p path parameters for one realization.

    Cluster centers are uniform on +/- center_angle_bound (azimuth and
    elevation independently); per-path angles are uniform within +/- the
    angle spread around their cluster center; gains are circular complex
    normal with unit variance; delays uniform on [0, tau_max].
    """
    b = cfg.center_angle_bound_rad
    s = cfg.angle_spread_rad
    paths = []
    for i in range(cfg.n_clusters):
        mu_az, mu_el = rng.draw_uniform(-b, b, 2)
        az = rng.draw_uniform(mu_az - s, mu_az + s, cfg.n_paths_per_cluster)
        el = rng.draw_uniform(mu_el - s, mu_el + s, cfg.n_paths_per_cluster)
        gains = rng.draw_complex_gaussian(cfg.n_paths_per_cluster)
        delays = rng.draw_uniform(0.0, cfg.tau_max, cfg.n_paths_per_cluster)
        for l in range(cfg.n_paths_per_cluster):
            paths.append(PathParams(gains[l], delays[l], az[l], el[l], i))
    return paths


def steering_vector(azimuth, elevation, n_h, n_v, d_over_lambda=0.5):
    """UPA response vector, flat index p = m*n_v + n (horizontal-major).

    Entry p is exp(-2j*pi*d/lambda*(m*sin(az)*cos(el) + n*sin(el)))
    normalized by sqrt(n_h*n_v); antenna offsets run 0..n_h-1 / 0..n_v-1.
    """
    m = np.arange(n_h)
    n = np.arange(n_v)
    phase = m[:, None] * (np.sin(azimuth) * np.cos(elevation)) + n[None, :] * np.sin(elevation)
    a = np.exp(-2j * np.pi * d_over_lambda * phase) / np.sqrt(n_h * n_v)
    return a.reshape(-1)


def gen_realization(cfg: ScenarioConfig, rng: RngStream) -> ChannelRealization:
    """One wideband realization: h_k = sqrt(N_BS/(N_c N_p)) * sum of
    gain * delay-phase * steering over all paths, for k = 0..K-1."""
    paths = sample_paths(cfg, rng)
    gains = np.array([p.gain for p in paths])
    delays = np.array([p.delay for p in paths])
    # steering matrix, one column per path
    a = np.stack(
        [steering_vector(p.azimuth, p.elevation, cfg.n_h, cfg.n_v,
                         cfg.d_over_lambda) for p in paths],
        axis=1,
    )
    k = np.arange(cfg.k_sub)
    phase = np.exp(-2j * np.pi * np.outer(k, delays) * cfg.f_s / cfg.k_sub)
    scale = np.sqrt(cfg.n_bs / (cfg.n_clusters * cfg.n_paths_per_cluster))
    h_s = scale * (phase * gains[None, :]) @ a.T
    return ChannelRealization(h_s, cfg, rng.seed, rng.stream_id)


def angular_transform_matrix(n_h, n_v, dtype=np.complex128):
    """F = F_{N_h}^T kron F_{N_v} with unitary DFT factors."""
    return kron(dft_matrix(n_h, dtype).T, dft_matrix(n_v, dtype))


def angular_transform(h_s, n_h, n_v):
    """Frequency-angle channel H_a = H_s F; invert with H_a @ F.conj().T."""
    h_s = np.asarray(h_s)
    if h_s.shape[-1] != n_h * n_v:
        raise DimensionError(
            f"expected {n_h * n_v} columns, got {h_s.shape[-1]}"
        )
    return h_s @ angular_transform_matrix(n_h, n_v)


def realization_to_samples(h_s, dtype=np.float32):
    """Stack Re/Im rows of each subcarrier into a (K, 2, N_BS) array."""
    return np.stack([h_s.real, h_s.imag], axis=1).astype(dtype)


def build_dataset(cfg: ScenarioConfig, n_realizations, seed, split="train",
                  dtype=np.float32, subcarrier=None) -> StackedDataset:
    """Stacked dataset of n_realizations * K samples (or one sample per
    realization when a single subcarrier index is requested).

    Each realization uses its own RNG substream, so generation order is
    reproducible regardless of any outer parallelism.
    """
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    base = RngStream(seed)
    blocks = []
    for r in range(n_realizations):
        real = gen_realization(cfg, base.substream(r))
        s = realization_to_samples(real.h_s, dtype)
        blocks.append(s[subcarrier:subcarrier + 1] if subcarrier is not None else s)
    return StackedDataset(np.concatenate(blocks, axis=0), cfg, split, seed)
