"""Rate-1/2, K=7 convolutional code with DVB-T puncturing and soft Viterbi decoding.

Mother code output order is X then Y per input bit, X from generator 171
(octal) and Y from 133, as in DVB-T. LLRs are positive when bit 0 is more
likely.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

CONSTRAINT_LENGTH = 7
TAIL = CONSTRAINT_LENGTH - 1
N_STATES = 1 << TAIL

# Per-step transmission masks over (X1, Y1, X2, Y2, ...).
PUNCTURE_MASKS = {
    Fraction(1, 2): (1, 1),
    Fraction(2, 3): (1, 1, 0, 1),
    Fraction(3, 4): (1, 1, 0, 1, 1, 0),
    Fraction(5, 6): (1, 1, 0, 1, 1, 0, 0, 1, 1, 0),
    Fraction(7, 8): (1, 1, 0, 1, 0, 1, 0, 1, 1, 0, 0, 1, 1, 0),
}


@dataclass(frozen=True)
class CodeSpec:
    generators: tuple[int, int] = (0o171, 0o133)
    constraint_length: int = CONSTRAINT_LENGTH
    rate: Fraction = Fraction(1, 2)

    def __post_init__(self):
        object.__setattr__(self, "rate", Fraction(self.rate))
        if self.rate not in PUNCTURE_MASKS:
            raise ValueError(f"unsupported code rate {self.rate}")

    @property
    def mask(self) -> np.ndarray:
        return np.array(PUNCTURE_MASKS[self.rate], dtype=bool)


def generator_taps(g: int, k: int = CONSTRAINT_LENGTH) -> np.ndarray:
    """Tap vector indexed by delay: ``taps[d]`` multiplies ``u[n-d]``."""
    return np.array([(g >> (k - 1 - d)) & 1 for d in range(k)], dtype=np.uint8)


def conv_encode(bits: np.ndarray, code: CodeSpec = CodeSpec(), terminate: bool = True) -> np.ndarray:
    """Encode to the interleaved mother stream X1 Y1 X2 Y2 ...

    With ``terminate`` six zero tail bits are appended first, so the output
    has ``2 * (len(bits) + 6)`` bits.
    """
    u = np.asarray(bits, dtype=np.uint8)
    if terminate:
        u = np.concatenate([u, np.zeros(TAIL, dtype=np.uint8)])
    out = np.empty(2 * u.size, dtype=np.uint8)
    for branch, g in enumerate(code.generators):
        full = np.convolve(u.astype(np.int64), generator_taps(g, code.constraint_length).astype(np.int64))
        out[branch::2] = full[: u.size] & 1
    return out


def punctured_length(n_mother: int, rate) -> int:
    mask = np.array(PUNCTURE_MASKS[Fraction(rate)], dtype=bool)
    reps = -(-n_mother // mask.size)
    return int(np.tile(mask, reps)[:n_mother].sum())


def puncture(coded: np.ndarray, rate) -> np.ndarray:
    coded = np.asarray(coded)
    mask = np.array(PUNCTURE_MASKS[Fraction(rate)], dtype=bool)
    reps = -(-coded.size // mask.size)
    return coded[np.tile(mask, reps)[: coded.size]]


def depuncture(llrs: np.ndarray, rate, n_mother: int) -> np.ndarray:
    """Re-insert punctured positions as zero LLRs (erasures)."""
    mask = np.array(PUNCTURE_MASKS[Fraction(rate)], dtype=bool)
    reps = -(-n_mother // mask.size)
    full_mask = np.tile(mask, reps)[:n_mother]
    llrs = np.asarray(llrs, dtype=float)
    if llrs.size != full_mask.sum():
        raise ValueError(f"expected {int(full_mask.sum())} LLRs for {n_mother} mother bits, got {llrs.size}")
    out = np.zeros(n_mother)
    out[full_mask] = llrs
    return out


def info_bits_for(capacity: int, rate) -> int:
    """Largest message whose terminated, punctured codeword fits ``capacity`` bits."""
    r = Fraction(rate)
    n = max(int(capacity * r) - TAIL, 0)
    while n > 0 and punctured_length(2 * (n + TAIL), r) > capacity:
        n -= 1
    while punctured_length(2 * (n + 1 + TAIL), r) <= capacity:
        n += 1
    return n


def _trellis(generators, k):
    """Output bit pairs for each (state, input); state bit 5 is the newest bit."""
    n_states = 1 << (k - 1)
    outs = np.zeros((n_states, 2, 2), dtype=np.float64)
    for s in range(n_states):
        for b in range(2):
            reg = (b << (k - 1)) | s
            for j, g in enumerate(generators):
                outs[s, b, j] = bin(reg & g).count("1") & 1
    return outs


@njit(cache=True)
def _viterbi_core(llr_pairs, signs, terminated):
    n_steps = llr_pairs.shape[0]
    n_states = signs.shape[0]
    shift = 0
    while (1 << (shift + 1)) < n_states:
        shift += 1
    metric = np.full(n_states, -1e300)
    metric[0] = 0.0
    new = np.empty(n_states)
    decision = np.empty((n_steps, n_states), dtype=np.uint8)
    for t in range(n_steps):
        a = llr_pairs[t, 0]
        c = llr_pairs[t, 1]
        for ns in range(n_states):
            b = ns >> shift
            p0 = (ns << 1) & (n_states - 1)
            p1 = p0 | 1
            m0 = metric[p0] + a * signs[p0, b, 0] + c * signs[p0, b, 1]
            m1 = metric[p1] + a * signs[p1, b, 0] + c * signs[p1, b, 1]
            if m1 > m0:
                new[ns] = m1
                decision[t, ns] = 1
            else:
                new[ns] = m0
                decision[t, ns] = 0
        best = new.max()
        for s in range(n_states):
            metric[s] = new[s] - best
    state = 0
    if not terminated:
        state = int(np.argmax(metric))
    out = np.empty(n_steps, dtype=np.uint8)
    for t in range(n_steps - 1, -1, -1):
        out[t] = state >> shift
        state = ((state << 1) & (n_states - 1)) | decision[t, state]
    return out


_SIGNS = {}


def viterbi_decode(llrs: np.ndarray, code: CodeSpec = CodeSpec(), terminated: bool = True) -> np.ndarray:
    """Soft-input maximum-likelihood decoding of a depunctured mother stream.

    Maximizes ``sum(llr * (1 - 2*bit))`` over trellis paths starting (and,
    when ``terminated``, ending) in state 0. Returns the message without the
    tail bits.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.size % 2:
        raise ValueError("LLR stream length must be a multiple of 2")
    key = (code.generators, code.constraint_length)
    if key not in _SIGNS:
        _SIGNS[key] = 1.0 - 2.0 * _trellis(*key)
    bits = _viterbi_core(llrs.reshape(-1, 2), _SIGNS[key], terminated)
    return bits[:-TAIL] if terminated else bits
