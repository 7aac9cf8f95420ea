"""Spread-pilot channel estimation, single-tap equalization and MSE predictors.

One coefficient is estimated per subset by despreading with the pilot
sequence. The estimate is unbiased; its error splits into self-interference
from channel variation across the subset and despread noise.

Two SI predictors are provided. :func:`si_variance` is the closed form that
treats chips, data and channel deviations as independent, giving
``(1/B) (L-1)/L sigma_h2``. For Walsh-Hadamard sequences and a *fixed*
subset response, the products ``c_p * c_i`` (i != p) run over every
non-constant sequence, so by Parseval the SI power is exactly
``sigma_h2 / B`` (:func:`si_variance_fixed`), where ``sigma_h2`` is the
subset's population variance. The two differ by the factor ``(L-1)/L``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .precode import SpreadingMatrix, despread, despread_all


@dataclass(frozen=True)
class SubsetEstimate:
    h_hat: np.ndarray
    h_avg_true: np.ndarray | None = None
    si_power_pred: np.ndarray | None = None
    noise_power_pred: np.ndarray | None = None


def estimate_subset(r: np.ndarray, C: SpreadingMatrix, boost: float, pilot_symbol: complex = 1.0,
                    h_true: np.ndarray | None = None, noise_var: float | None = None) -> SubsetEstimate:
    """Estimate ``h_avg`` for each subset in ``r`` (shape ``(..., L)``).

    If the true per-chip response ``h_true`` is given (test/oracle mode) the
    result also carries the true average and the closed-form SI and noise
    powers.
    """
    if pilot_symbol == 0:
        raise ValueError("pilot symbol must be non-zero")
    if boost <= 0:
        raise ValueError("boost must be positive")
    h_hat = despread(r, C.pilot_sequence) / (np.sqrt(boost) * pilot_symbol)
    if h_true is None:
        return SubsetEstimate(h_hat)
    h_true = np.asarray(h_true)
    h_avg = h_true.mean(axis=-1)
    sigma_h2 = np.mean(np.abs(h_true - h_avg[..., None]) ** 2, axis=-1)
    si = si_variance(boost, C.size, sigma_h2)
    nv = None if noise_var is None else noise_variance(boost, noise_var)
    return SubsetEstimate(h_hat, h_avg, si, nv)


def si_variance(boost, L, sigma_h2):
    """Closed-form self-interference power, ``(1/B) (L-1)/L sigma_h2``."""
    return (L - 1) / L * np.asarray(sigma_h2) / boost


def si_variance_fixed(boost, sigma_h2):
    """Exact SI power for a fixed subset response with population variance ``sigma_h2``."""
    return np.asarray(sigma_h2) / boost


def noise_variance(boost, noise_var):
    return np.asarray(noise_var) / boost


def theoretical_mse(boost, L, sigma_h2, noise_var):
    """``(1/B) ((L-1)/L sigma_h2 + sigma_n2)``."""
    if L < 1 or boost <= 0:
        raise ValueError("need L >= 1 and boost > 0")
    return si_variance(boost, L, sigma_h2) + noise_variance(boost, noise_var)


@dataclass(frozen=True)
class EqualizedSubsets:
    """Equalized data symbols ``(..., L-1)`` with the model ``x_hat = gain x + noise``."""

    symbols: np.ndarray
    gain: np.ndarray
    noise_var: np.ndarray
    erased: np.ndarray


def equalize_subset(r: np.ndarray, C: SpreadingMatrix, h_hat: np.ndarray, noise_var: float,
                    mode: str = "ZF", eps: float = 1e-6, si_var=0.0) -> EqualizedSubsets:
    """Despread the data sequences and apply the single coefficient ``h_hat``.

    ``eps`` is an absolute threshold on ``|h_hat|``; the caller scales it by
    the RMS channel gain. Subsets below it are flagged as erased. ``si_var``
    is an extra interference power (before equalization) added to the noise
    reported for the demapper.
    """
    y = despread_all(r, C)[..., C.data_columns]
    h_hat = np.asarray(h_hat, dtype=complex)
    mag2 = np.abs(h_hat) ** 2
    erased = np.sqrt(mag2) < eps
    safe_h = np.where(erased, 1.0, h_hat)
    total = noise_var + np.asarray(si_var, dtype=float)
    if mode == "ZF":
        w = 1.0 / safe_h
        gain = np.ones_like(mag2)
        nv = total / np.where(erased, 1.0, mag2)
    elif mode == "MMSE":
        denom = mag2 + noise_var
        w = np.conj(h_hat) / denom
        gain = mag2 / denom
        nv = total * mag2 / denom**2
    else:
        raise ValueError(f"unknown equalizer {mode!r}")
    gain = np.where(erased, 0.0, gain)
    nv = np.where(erased, 1.0, nv)
    return EqualizedSubsets(y * w[..., None], gain, nv, erased)
