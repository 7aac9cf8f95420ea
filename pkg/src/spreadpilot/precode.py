"""Walsh-Hadamard spreading with a boosted pilot sequence, and 2D chip mapping.

Arrays of subsets are shaped ``(n_subsets, L)``; chip ``j`` of a subset is
column ``j`` (0-based here, 1-based in the mapping docs below).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


@dataclass(frozen=True)
class SpreadingMatrix:
    """Normalized Hadamard matrix; column ``i`` is sequence ``c_{i+1}``.

    ``pilot_index`` is 1-based, as in the config file.
    """

    entries: np.ndarray
    pilot_index: int = 1

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def pilot_column(self) -> int:
        return self.pilot_index - 1

    @property
    def pilot_sequence(self) -> np.ndarray:
        return self.entries[:, self.pilot_column]

    @property
    def data_columns(self) -> np.ndarray:
        return np.delete(np.arange(self.size), self.pilot_column)


def wh_matrix(L: int, pilot_index: int = 1) -> SpreadingMatrix:
    """Sylvester-ordered Walsh-Hadamard matrix scaled by ``1/sqrt(L)``."""
    if L < 1 or L & (L - 1):
        raise ValueError(f"L must be a power of two, got {L}")
    if not 1 <= pilot_index <= L:
        raise ValueError(f"pilot_index must lie in [1, {L}], got {pilot_index}")
    H = np.ones((1, 1))
    while H.shape[0] < L:
        H = np.block([[H, H], [H, -H]])
    H = H / np.sqrt(L)
    H.setflags(write=False)
    return SpreadingMatrix(H, pilot_index)


def assemble_payload(data: np.ndarray, C: SpreadingMatrix, boost: float, pilot_symbol: complex = 1.0) -> np.ndarray:
    """Insert the boosted pilot ``sqrt(B) x_p`` among the ``L-1`` data symbols.

    ``data`` has shape ``(..., L-1)``; result has shape ``(..., L)``.
    """
    data = np.asarray(data)
    if data.shape[-1] != C.size - 1:
        raise ValueError(f"expected {C.size - 1} data symbols per subset, got {data.shape[-1]}")
    return np.insert(data.astype(complex), C.pilot_column, np.sqrt(boost) * pilot_symbol, axis=-1)


def spread(payload: np.ndarray, C: SpreadingMatrix) -> np.ndarray:
    """Chip vectors ``s = C @ x`` for payloads shaped ``(..., L)``.

    The payload already carries the boosted pilot (see :func:`assemble_payload`).
    """
    payload = np.asarray(payload)
    if payload.shape[-1] != C.size:
        raise ValueError(f"payload length {payload.shape[-1]} does not match L={C.size}")
    return payload @ C.entries.T


def despread(r: np.ndarray, sequence: np.ndarray) -> np.ndarray:
    """Inner product ``c^H r`` along the last axis."""
    r = np.asarray(r)
    sequence = np.asarray(sequence)
    if r.shape[-1] != sequence.shape[0]:
        raise ValueError(f"chip length {r.shape[-1]} does not match sequence length {sequence.shape[0]}")
    return r @ sequence.conj()


def despread_all(r: np.ndarray, C: SpreadingMatrix) -> np.ndarray:
    """Despread every sequence at once: ``(..., L) -> (..., L)``."""
    return np.asarray(r) @ C.entries.conj()


class MappingMode(Enum):
    ZIGZAG_TIME = "zigzag-time"
    ZIGZAG_FREQ = "zigzag-freq"


def _check_dims(shape, lt: int, lf: int) -> tuple[int, int]:
    n_sym, n_car = shape
    if n_sym % lt or n_car % lf:
        raise ValueError(f"frame {n_sym}x{n_car} does not tile into {lt}x{lf} subsets")
    return n_sym // lt, n_car // lf


def map_chips(chips: np.ndarray, lt: int, lf: int, frame_shape: tuple[int, int],
              mode: MappingMode = MappingMode.ZIGZAG_TIME) -> np.ndarray:
    """Place subset chips on the ``(symbol, carrier)`` grid.

    Zigzag in time: chip j (1-based) of a subset sits at time offset
    ``(j-1) % lt`` and carrier offset ``(j-1) // lt`` inside its tile. Subset
    ``s`` occupies time block ``s // (n_carriers/lf)`` and carrier block
    ``s % (n_carriers/lf)``, i.e. all tiles of the first ``lt`` symbols come
    first.
    """
    n_tb, n_fb = _check_dims(frame_shape, lt, lf)
    chips = np.asarray(chips)
    if chips.shape != (n_tb * n_fb, lt * lf):
        raise ValueError(f"expected chips of shape {(n_tb * n_fb, lt * lf)}, got {chips.shape}")
    if mode is MappingMode.ZIGZAG_TIME:
        tiles = chips.reshape(n_tb, n_fb, lf, lt).transpose(0, 3, 1, 2)
    else:
        tiles = chips.reshape(n_tb, n_fb, lt, lf).transpose(0, 2, 1, 3)
    return tiles.reshape(frame_shape)


def demap_chips(frame: np.ndarray, lt: int, lf: int,
                mode: MappingMode = MappingMode.ZIGZAG_TIME) -> np.ndarray:
    """Inverse of :func:`map_chips`; returns ``(n_subsets, L)``."""
    frame = np.asarray(frame)
    n_tb, n_fb = _check_dims(frame.shape, lt, lf)
    tiles = frame.reshape(n_tb, lt, n_fb, lf)
    if mode is MappingMode.ZIGZAG_TIME:
        tiles = tiles.transpose(0, 2, 3, 1)
    else:
        tiles = tiles.transpose(0, 2, 1, 3)
    return tiles.reshape(n_tb * n_fb, lt * lf)
