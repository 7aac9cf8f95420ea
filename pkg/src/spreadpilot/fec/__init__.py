from .convcode import (
    CodeSpec,
    conv_encode,
    depuncture,
    info_bits_for,
    puncture,
    punctured_length,
    viterbi_decode,
)
from .qam import BITS_PER_SYMBOL, constellation_points, hard_bits, qam_demap, qam_map

__all__ = [
    "BITS_PER_SYMBOL",
    "CodeSpec",
    "constellation_points",
    "conv_encode",
    "depuncture",
    "hard_bits",
    "info_bits_for",
    "puncture",
    "punctured_length",
    "qam_demap",
    "qam_map",
    "viterbi_decode",
]
