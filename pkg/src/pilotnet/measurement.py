"""Pilot compression and noise injection.

The pilot matrix is a real N_BS x M weight matrix applied identically to
the stacked Re/Im rows of a channel sample, and SNR is referenced to the
post-compression measurement power, making it invariant to pilot scale.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import DimensionError, RngStream


class DegeneratePowerError(ValueError):
    """Measurement power is zero; SNR cannot be calibrated."""


@dataclass
class PilotMatrix:
    """Real pilot weights, N_BS x M; rho = M / N_BS."""

    x_tilde: np.ndarray

    def __post_init__(self):
        self.x_tilde = np.asarray(self.x_tilde)
        if self.x_tilde.ndim != 2 or self.x_tilde.shape[1] < 1:
            raise DimensionError("pilot matrix must be 2-D with M >= 1")
        if not np.all(np.isfinite(self.x_tilde)):
            raise ValueError("pilot matrix has non-finite entries")

    @property
    def n_bs(self):
        return self.x_tilde.shape[0]

    @property
    def m(self):
        return self.x_tilde.shape[1]

    @property
    def rho(self):
        return self.m / self.n_bs


@dataclass
class SnrSpec:
    """SNR target plus the derived per-complex-measurement noise variance."""

    snr_db: float
    reference_power: float
    noise_sigma2: float

    @classmethod
    def from_reference_power(cls, snr_db, reference_power):
        if reference_power <= 0:
            raise DegeneratePowerError("reference power must be positive")
        return cls(snr_db, reference_power,
                   reference_power / 10.0 ** (snr_db / 10.0))


def compress(sample, pilot: PilotMatrix):
    """Noiseless measurement: both Re/Im rows multiplied by the same X~.

    Accepts a single (2, N_BS) sample or a batch (S, 2, N_BS).
    """
    sample = np.asarray(sample)
    if sample.shape[-1] != pilot.n_bs:
        raise DimensionError(
            f"sample has {sample.shape[-1]} antennas, pilot expects {pilot.n_bs}"
        )
    return sample @ pilot.x_tilde.astype(sample.dtype, copy=False)


def measurement_power(meas):
    """Mean per-complex-element power Re^2 + Im^2 of stacked measurements."""
    meas = np.asarray(meas, dtype=np.float64)
    if meas.ndim == 2:
        meas = meas[None]
    return float(np.mean(meas[:, 0] ** 2 + meas[:, 1] ** 2))


def calibrate_snr(dataset, pilot: PilotMatrix, snr_db) -> SnrSpec:
    """Derive the noise variance hitting snr_db on this dataset's
    noiseless measurements. dataset may be a StackedDataset or raw array."""
    samples = getattr(dataset, "samples", dataset)
    ref = measurement_power(compress(np.asarray(samples, dtype=np.float64), pilot))
    if ref <= 0:
        raise DegeneratePowerError("all-zero dataset")
    return SnrSpec.from_reference_power(snr_db, ref)


def add_awgn(meas, spec: SnrSpec, rng: RngStream):
    """Add white Gaussian noise of variance noise_sigma2/2 per real entry,
    so each complex measurement carries total variance noise_sigma2."""
    meas = np.asarray(meas)
    if spec.noise_sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    noise = rng.draw_gaussian(meas.size).reshape(meas.shape)
    sigma = np.sqrt(spec.noise_sigma2 / 2.0)
    return meas + (sigma * noise).astype(meas.dtype, copy=False)
