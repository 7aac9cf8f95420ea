"""Static tapped-delay-line channels (F1, P1, flat) and AWGN.

Two equivalent ways to pass a signal through a channel:

* frequency domain: ``r = h * s + n`` per carrier, with exact fractional delays;
* time domain: convolution with the impulse response sampled at the elementary
  period (delays rounded to the nearest sample), then AWGN per sample.

With a cyclic prefix longer than the delay spread and integer-sample delays
the two agree exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .config import LinkConfig
from .ofdm import TimeDomainSignal, carrier_indices
from .rng import complex_normal

BUILTIN_TAPS = {"F1": "f1.taps", "P1": "p1.taps", "FLAT": "flat.taps"}


@dataclass(frozen=True)
class TapSet:
    """Normalized rays. ``los`` is ``None`` or ``(rho, tau_s, theta)``."""

    rho: np.ndarray
    tau: np.ndarray  # seconds
    theta: np.ndarray
    los: tuple[float, float, float] | None = None
    normalization: float = 1.0
    digest: str = ""

    def rays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All rays including the line of sight, as (rho, tau, theta)."""
        if self.los is None:
            return self.rho, self.tau, self.theta
        r, t, th = self.los
        return (np.append(r, self.rho), np.append(t, self.tau), np.append(th, self.theta))

    @property
    def total_power(self) -> float:
        return float(np.sum(self.rays()[0] ** 2))

    @property
    def max_delay(self) -> float:
        return float(np.max(self.rays()[1]))

    @property
    def k_factor(self) -> float:
        """Line-of-sight power over echo power (0 for Rayleigh profiles)."""
        if self.los is None:
            return 0.0
        return self.los[0] ** 2 / float(np.sum(self.rho**2))


def parse_tap_text(text: str) -> TapSet:
    rows, los = [], None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        is_los = fields[0].upper() == "LOS"
        if is_los:
            fields = fields[1:]
        try:
            rho, tau_us, theta = (float(f) for f in fields)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: expected 'rho tau_us theta_rad', got {line!r}") from exc
        if rho < 0 or tau_us < 0:
            raise ValueError(f"line {lineno}: negative amplitude or delay")
        ray = (rho, tau_us * 1e-6, theta)
        if is_los:
            if los is not None:
                raise ValueError(f"line {lineno}: more than one LOS ray")
            los = ray
        else:
            rows.append(ray)
    if not rows and los is None:
        raise ValueError("no taps found")
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    power = np.sum(arr[:, 0] ** 2) + (los[0] ** 2 if los else 0.0)
    if power <= 0:
        raise ValueError("tap set has zero total power")
    scale = 1.0 / np.sqrt(power)
    if los is not None:
        los = (los[0] * scale, los[1], los[2])
    return TapSet(arr[:, 0] * scale, arr[:, 1], arr[:, 2], los, scale,
                  hashlib.sha1(text.encode()).hexdigest())


def tap_file_text(source: str | Path) -> str:
    key = str(source).upper()
    if key in BUILTIN_TAPS:
        return resources.files("spreadpilot.data").joinpath(BUILTIN_TAPS[key]).read_text()
    return Path(source).read_text()


def load_tap_set(source: str | Path) -> TapSet:
    """Load a builtin profile (``F1``, ``P1``, ``FLAT``) or a tap file path."""
    return parse_tap_text(tap_file_text(source))


def taps_for(cfg: LinkConfig) -> TapSet:
    return load_tap_set(cfg.channel_file if cfg.channel == "CUSTOM" else cfg.channel)


@dataclass(frozen=True)
class ChannelRealization:
    """Static channel: per-carrier response ``h`` and sampled impulse response.

    ``h`` uses exact delays; ``h_sampled`` is the response of ``impulse``
    (rounded delays), i.e. what time-domain mode actually applies.
    """

    h: np.ndarray
    impulse: np.ndarray
    fft_size: int
    carriers: np.ndarray

    @property
    def h_sampled(self) -> np.ndarray:
        d = np.arange(self.impulse.size)
        return np.exp(-2j * np.pi * np.outer(self.carriers, d) / self.fft_size) @ self.impulse


def realize_channel(taps: TapSet, cfg: LinkConfig, n_carriers: int | None = None) -> ChannelRealization:
    n_carriers = cfg.n_carriers if n_carriers is None else n_carriers
    k = carrier_indices(n_carriers)
    rho, tau, theta = taps.rays()
    gains = rho * np.exp(1j * theta)
    f = k / (cfg.fft_size * cfg.sample_period)
    h = np.exp(-2j * np.pi * np.outer(f, tau)) @ gains
    delays = np.rint(tau / cfg.sample_period).astype(int)
    impulse = np.zeros(delays.max() + 1, dtype=complex)
    np.add.at(impulse, delays, gains)
    return ChannelRealization(h, impulse, cfg.fft_size, k)


def apply_channel(x, realization: ChannelRealization, noise_var: float, rng: np.random.Generator | None):
    """Pass a frame (frequency mode) or a TimeDomainSignal (time mode) through the channel.

    Noise is circularly symmetric with variance ``noise_var`` per carrier;
    in time mode the same variance per sample gives that per carrier.
    """
    if noise_var < 0:
        raise ValueError("noise variance must be non-negative")
    if isinstance(x, TimeDomainSignal):
        y = np.convolve(x.samples, realization.impulse)[: x.samples.size]
        if noise_var > 0:
            y = y + complex_normal(rng, y.shape, noise_var)
        return TimeDomainSignal(y, x.sample_period, x.symbol_length)
    y = np.asarray(x) * realization.h
    if noise_var > 0:
        y = y + complex_normal(rng, y.shape, noise_var)
    return y


def channel_variance(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-subset mean and population variance along the last axis.

    Returns ``(h_avg, sigma_h2)`` with ``sigma_h2 = mean(|h - h_avg|^2)``.
    """
    h = np.asarray(h)
    if h.shape[-1] == 0:
        raise ValueError("empty subset")
    h_avg = h.mean(axis=-1)
    return h_avg, np.mean(np.abs(h - h_avg[..., None]) ** 2, axis=-1)


def subset_responses(h: np.ndarray, n_symbols: int, lt: int, lf: int) -> np.ndarray:
    """Per-chip channel seen by every subset of a static frame, ``(n_subsets, L)``."""
    from .precode import demap_chips

    return demap_chips(np.broadcast_to(h, (n_symbols, h.size)), lt, lf)


def synthetic_subsets(n: int, L: int, variance: float, rng: np.random.Generator,
                      mean: complex = 1.0, exact: bool = True) -> np.ndarray:
    """Random subset channels ``(n, L)`` around ``mean``.

    ``exact=True`` rescales each draw so its population variance (as returned
    by :func:`channel_variance`) equals ``variance``. ``exact=False`` draws
    i.i.d. coefficients with per-coefficient variance ``variance``.
    """
    g = complex_normal(rng, (n, L))
    if exact:
        g = g - g.mean(axis=1, keepdims=True)
        p = np.mean(np.abs(g) ** 2, axis=1, keepdims=True)
        g = g * np.sqrt(variance / np.where(p > 0, p, 1.0))
        if L == 1:
            g[:] = 0
    else:
        g = g * np.sqrt(variance)
    return mean + g
