"""Gray-mapped QPSK/16QAM/64QAM (DVB-T non-hierarchical labeling) and max-log demapping.

Bits ``y0 y1 ... y(m-1)`` of a symbol split into an in-phase group
``(y0, y2, y4)`` and a quadrature group ``(y1, y3, y5)``. The first bit of a
group is the sign (0 for positive); the rest select the magnitude with a
Gray code, outermost level first.
"""

from __future__ import annotations

import numpy as np

BITS_PER_SYMBOL = {"QPSK": 2, "16QAM": 4, "64QAM": 6}

# Magnitude per remaining axis bits.
_MAGNITUDES = {
    1: {(): 1},
    2: {(0,): 3, (1,): 1},
    3: {(0, 0): 7, (0, 1): 5, (1, 1): 3, (1, 0): 1},
}
_NORM = {"QPSK": np.sqrt(2.0), "16QAM": np.sqrt(10.0), "64QAM": np.sqrt(42.0)}


def axis_table(constellation: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis PAM levels (unnormalized) and their bit labels ``(n_levels, bits_per_axis)``."""
    k = BITS_PER_SYMBOL[constellation] // 2
    levels, labels = [], []
    for mag_bits, mag in _MAGNITUDES[k].items():
        for sign in (0, 1):
            levels.append((1 - 2 * sign) * mag)
            labels.append((sign,) + mag_bits)
    order = np.argsort(levels)
    return np.array(levels, dtype=float)[order], np.array(labels, dtype=np.uint8)[order]


def constellation_points(constellation: str) -> np.ndarray:
    """All points, indexed by the integer whose MSB-first bits are ``y0..y(m-1)``."""
    m = BITS_PER_SYMBOL[constellation]
    idx = np.arange(1 << m)
    bits = (idx[:, None] >> np.arange(m - 1, -1, -1)) & 1
    return qam_map(bits.reshape(-1), constellation)


def qam_map(bits: np.ndarray, constellation: str) -> np.ndarray:
    m = BITS_PER_SYMBOL[constellation]
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % m:
        raise ValueError(f"{bits.size} bits is not a multiple of {m}")
    groups = bits.reshape(-1, m)
    levels, labels = axis_table(constellation)
    k = m // 2
    weights = 1 << np.arange(k - 1, -1, -1)
    lookup = np.empty(1 << k)
    lookup[labels @ weights] = levels
    re = lookup[groups[:, 0::2] @ weights]
    im = lookup[groups[:, 1::2] @ weights]
    return (re + 1j * im) / _NORM[constellation]


def qam_demap(symbols: np.ndarray, noise_var, constellation: str, gain=1.0,
              clip: float | None = None) -> np.ndarray:
    """Exact max-log LLRs for ``y = gain * x + n`` with ``E|n|^2 = noise_var``.

    ``gain`` and ``noise_var`` broadcast against ``symbols``. A zero gain
    yields zero LLRs (erasure).
    """
    y = np.asarray(symbols, dtype=complex)
    gain = np.broadcast_to(np.asarray(gain, dtype=complex), y.shape)
    noise_var = np.maximum(np.broadcast_to(np.asarray(noise_var, dtype=float), y.shape), 1e-30)
    g2 = np.abs(gain) ** 2
    safe = g2 > 0
    z = np.where(safe, y / np.where(safe, gain, 1.0), 0.0) * _NORM[constellation]
    # |y - g x|^2 = |g|^2 |z - x|^2 in unnormalized units scaled by 1/NORM^2.
    scale = np.where(safe, g2 / (noise_var * _NORM[constellation] ** 2), 0.0)
    levels, labels = axis_table(constellation)
    m = BITS_PER_SYMBOL[constellation]
    k = m // 2
    llr = np.empty(y.shape + (m,))
    for axis, part in enumerate((z.real, z.imag)):
        d2 = (part[..., None] - levels) ** 2
        for b in range(k):
            ones = labels[:, b] == 1
            llr[..., 2 * b + axis] = (d2[..., ones].min(axis=-1) - d2[..., ~ones].min(axis=-1)) * scale
    if clip is not None:
        np.clip(llr, -clip, clip, out=llr)
    return llr.reshape(-1)


def hard_bits(llrs: np.ndarray) -> np.ndarray:
    return (np.asarray(llrs) < 0).astype(np.uint8)
