"""Simultaneous OMP baseline over an oversampled DFT dictionary.

Atoms are Kronecker products of oversampled spatial-frequency DFT
columns; support selection is joint across the K measurement columns
(all subcarriers share one angular support).
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import DimensionError, RngStream, kron, lstsq


class SompConfigError(ValueError):
    """Invalid SOMP configuration."""


@dataclass
class Dictionary:
    """Unit-norm atom frame, N_BS x (G_h * G_v)."""

    psi: np.ndarray
    g_h: int
    g_v: int


@dataclass
class SompConfig:
    iterations: int
    residual_tol: float | None = None


@dataclass
class SompResult:
    support: list
    coeffs: np.ndarray  # (|support|, K)
    residual_norms: list
    h_s_hat: np.ndarray | None = None


def build_dictionary(g_h, g_v, n_h, n_v) -> Dictionary:
    """Oversampled DFT dictionary Psi_h^T kron Psi_v, columns unit norm.

    Psi_h[m, g] = exp(-2j*pi*m*g/g_h)/sqrt(n_h) for m in 0..n_h-1;
    with g_h == n_h, g_v == n_v this reproduces the unitary angular
    transform's atoms.
    """
    if g_h < n_h or g_v < n_v:
        raise SompConfigError("grid must be at least the antenna count")
    def factor(n, g):
        m = np.arange(n)[:, None]
        q = np.arange(g)[None, :]
        return np.exp(-2j * np.pi * m * q / g) / np.sqrt(n)
    psi = kron(factor(n_h, g_h), factor(n_v, g_v))
    psi = psi / np.linalg.norm(psi, axis=0, keepdims=True)
    return Dictionary(psi, g_h, g_v)


def random_pilot(n_bs, m, rng: RngStream):
    """I.i.d. Gaussian sensing pilots scaled by 1/sqrt(m), N_BS x M."""
    if not 1 <= m <= n_bs:
        raise SompConfigError(f"need 1 <= m <= {n_bs}, got {m}")
    return rng.draw_gaussian(n_bs * m).reshape(n_bs, m) / np.sqrt(m)


def somp_estimate(y_meas, phi, cfg: SompConfig) -> SompResult:
    """Greedy joint-sparse recovery of y_meas (M x K) over atoms phi (M x D).

    Each iteration selects the atom with the largest summed correlation
    energy over the K residual columns, re-solves the least-squares
    projection on the grown support, and updates the residuals. Returns
    the minimum-residual iterate. Columns of phi are normalized
    internally; coefficients are reported in the original column scale.
    """
    y_meas = np.asarray(y_meas)
    phi = np.asarray(phi)
    if y_meas.ndim != 2 or phi.ndim != 2 or y_meas.shape[0] != phi.shape[0]:
        raise DimensionError("measurement/atom row mismatch")
    m = phi.shape[0]
    if not 1 <= cfg.iterations <= m:
        raise SompConfigError(f"iterations must be in [1, {m}]")

    scales = np.linalg.norm(phi, axis=0)
    if np.any(scales == 0):
        raise SompConfigError("zero atom in measurement matrix")
    phi_n = phi / scales[None, :]

    k = y_meas.shape[1]
    support = []
    residual = y_meas.copy()
    residual_norms = []
    best = (np.inf, [], np.zeros((0, k), dtype=y_meas.dtype))

    start_norm = np.linalg.norm(y_meas)
    if start_norm == 0:
        return SompResult([], np.zeros((0, k), dtype=y_meas.dtype), [0.0])

    for _ in range(cfg.iterations):
        corr = np.sum(np.abs(phi_n.conj().T @ residual) ** 2, axis=1)
        corr[support] = -np.inf
        support.append(int(np.argmax(corr)))
        coeffs_n = lstsq(phi_n[:, support], y_meas)
        residual = y_meas - phi_n[:, support] @ coeffs_n
        r_norm = float(np.linalg.norm(residual))
        residual_norms.append(r_norm)
        if r_norm < best[0]:
            best = (r_norm, list(support), coeffs_n)
        if cfg.residual_tol is not None and r_norm < cfg.residual_tol:
            break

    _, sup, coeffs_n = best
    coeffs = coeffs_n / scales[sup][:, None]
    return SompResult(sup, coeffs, residual_norms)


def reestablish(result: SompResult, dictionary: Dictionary):
    """Rebuild the frequency-spatial channel estimate, K x N_BS."""
    n_bs = dictionary.psi.shape[0]
    if not result.support:
        k = result.coeffs.shape[1] if result.coeffs.ndim == 2 else 0
        result.h_s_hat = np.zeros((k, n_bs), dtype=dictionary.psi.dtype)
        return result.h_s_hat
    h_hat = (dictionary.psi[:, result.support] @ result.coeffs).T
    result.h_s_hat = h_hat
    return h_hat
