"""OFDM modulation with cyclic-prefix guard interval.

Transforms are unitary (``norm="ortho"``), so per-carrier and per-sample
noise variances are equal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import LinkConfig


@dataclass(frozen=True)
class TimeDomainSignal:
    samples: np.ndarray
    sample_period: float
    symbol_length: int

    @property
    def n_symbols(self) -> int:
        return self.samples.shape[-1] // self.symbol_length


def carrier_indices(n_carriers: int) -> np.ndarray:
    """Signed carrier indices, split around an unused DC carrier.

    With an odd count the extra carrier goes to the positive side.
    """
    n_neg = n_carriers // 2
    return np.concatenate([np.arange(-n_neg, 0), np.arange(1, n_carriers - n_neg + 1)])


def modulate_bins(bins: np.ndarray, guard: int) -> np.ndarray:
    """IFFT each row of a ``(n_symbols, fft_size)`` bin grid and prepend the CP."""
    x = np.fft.ifft(bins, axis=-1, norm="ortho")
    if guard:
        x = np.concatenate([x[..., -guard:], x], axis=-1)
    return x.reshape(-1)


def demodulate_bins(samples: np.ndarray, fft_size: int, guard: int) -> np.ndarray:
    sym_len = fft_size + guard
    samples = np.asarray(samples)
    if samples.size % sym_len:
        raise ValueError(f"{samples.size} samples is not a whole number of {sym_len}-sample symbols")
    blocks = samples.reshape(-1, sym_len)[:, guard:]
    return np.fft.fft(blocks, axis=-1, norm="ortho")


def ofdm_modulate(frame: np.ndarray, cfg: LinkConfig) -> TimeDomainSignal:
    """Map a ``(n_symbols, n_active)`` frame onto FFT bins and modulate."""
    frame = np.asarray(frame)
    n_sym, n_act = frame.shape
    if n_act >= cfg.fft_size:
        raise ValueError(f"{n_act} active carriers exceed fft_size={cfg.fft_size}")
    bins = np.zeros((n_sym, cfg.fft_size), dtype=complex)
    bins[:, carrier_indices(n_act) % cfg.fft_size] = frame
    return TimeDomainSignal(modulate_bins(bins, cfg.guard_samples), cfg.sample_period,
                            cfg.fft_size + cfg.guard_samples)


def ofdm_demodulate(signal: TimeDomainSignal | np.ndarray, cfg: LinkConfig,
                    n_active: int | None = None) -> np.ndarray:
    """Strip the guard, FFT, and pick out the active carriers."""
    samples = signal.samples if isinstance(signal, TimeDomainSignal) else signal
    bins = demodulate_bins(samples, cfg.fft_size, cfg.guard_samples)
    n_active = cfg.n_carriers if n_active is None else n_active
    return bins[:, carrier_indices(n_active) % cfg.fft_size]
