"""Dense linear-algebra helpers and deterministic random streams.

Everything here is precision-parameterized: training code runs in float32,
verification tests in float64. All functions are pure; RngStream instances
are stateful and must not be shared across threads.
"""

import numpy as np


class DimensionError(ValueError):
    """Invalid or incompatible array dimensions."""


class RankError(ValueError):
    """Matrix is numerically rank deficient."""


def dft_matrix(n, dtype=np.complex128):
    """Unitary n x n DFT matrix, entry (p, q) = exp(-2j*pi*p*q/n) / sqrt(n)."""
    if n < 1:
        raise DimensionError(f"DFT size must be >= 1, got {n}")
    p = np.arange(n)
    f = np.exp(-2j * np.pi * np.outer(p, p) / n) / np.sqrt(n)
    return f.astype(dtype)


def kron(a, b):
    """Kronecker product A (x) B; block (p, q) is A[p, q] * B."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError("kron expects 2-D matrices")
    return np.kron(a, b)


# relative singular-value cutoff below which lstsq refuses to solve
_RANK_RCOND = 1e-12


def lstsq(a, b):
    """Least-squares solve of A X = B for tall, full-column-rank A.

    Raises RankError when the smallest singular value of A falls below
    1e-12 times the largest.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise DimensionError(f"lstsq needs rows >= cols, got shape {a.shape}")
    x, _, rank, sv = np.linalg.lstsq(a, b, rcond=_RANK_RCOND)
    if rank < a.shape[1] or sv[-1] < _RANK_RCOND * sv[0]:
        raise RankError(
            f"matrix is rank deficient (rank {rank} < {a.shape[1]} columns)"
        )
    return x


class RngStream:
    """Deterministic, splittable random stream.

    Backed by the counter-based Philox generator keyed on (seed, stream_id),
    so the same pair reproduces the same draws on any platform. Distinct
    stream_ids give independent substreams.
    """

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, stream_id):
        """Fresh stream sharing this stream's seed with a different id."""
        return RngStream(self.seed, stream_id)

    def draw_gaussian(self, n, dtype=np.float64):
        """n i.i.d. standard-normal draws."""
        return self._gen.standard_normal(n).astype(dtype, copy=False)

    def draw_complex_gaussian(self, n):
        """n i.i.d. circular complex normals with unit total variance.

        Built as (x + jy)/sqrt(2) from consecutive real draws.
        """
        xy = self._gen.standard_normal(2 * n)
        return (xy[0::2] + 1j * xy[1::2]) / np.sqrt(2.0)

    def draw_uniform(self, low, high, n):
        """n i.i.d. uniform draws on [low, high)."""
        return self._gen.uniform(low, high, n)

    def draw_integers(self, high, n):
        """n i.i.d. integers uniform on [0, high)."""
        return self._gen.integers(0, high, size=n)

    def permutation(self, n):
        return self._gen.permutation(n)


def rng_stream(seed, stream_id=0):
    return RngStream(seed, stream_id)
