"""One frame through the full transmit/receive chain.

LP-OFDM: bits -> encode -> puncture -> [interleave] -> QAM -> spread with
boosted pilot -> zigzag chip mapping -> OFDM -> channel -> OFDM^-1 -> chip
demapping -> spread-pilot estimate -> equalize -> soft demap -> depuncture ->
Viterbi.

The DVB-T reference (``baseline_mode``) skips spreading and equalizes every
data carrier with its true channel coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng as rngmod
from ..channel import ChannelRealization, apply_channel, channel_variance, realize_channel, taps_for
from ..config import LinkConfig
from ..estimator import equalize_subset, estimate_subset, si_variance
from ..fec import (
    CodeSpec,
    conv_encode,
    depuncture,
    info_bits_for,
    puncture,
    punctured_length,
    qam_demap,
    qam_map,
    viterbi_decode,
)
from ..fec.convcode import TAIL
from ..ofdm import ofdm_demodulate, ofdm_modulate
from ..precode import assemble_payload, demap_chips, map_chips, spread, wh_matrix


@dataclass(frozen=True)
class FrameResult:
    bit_errors: int
    n_bits: int
    erased_subsets: int = 0


class Link:
    """Static description of a link; :meth:`run_frame` is a pure function of its arguments."""

    def __init__(self, cfg: LinkConfig, channel: ChannelRealization | None = None):
        self.cfg = cfg
        self.n_carriers = cfg.dvbt_data_carriers if cfg.baseline_mode else cfg.n_carriers
        self.channel = channel or realize_channel(taps_for(cfg), cfg, self.n_carriers)
        # Response the receiver actually sees in the chosen mode.
        self.h_eff = self.channel.h_sampled if cfg.channel_mode == "time" else self.channel.h
        self.m = cfg.bits_per_symbol
        self.coded = cfg.code_rate != "1"
        if cfg.baseline_mode:
            self.n_data_symbols = cfg.n_symbols * self.n_carriers
        else:
            self.C = wh_matrix(cfg.L, cfg.pilot_index)
            self.n_subsets = (cfg.n_symbols // cfg.lt) * (self.n_carriers // cfg.lf)
            self.n_data_symbols = self.n_subsets * (cfg.L - 1)
            self.h_subsets = demap_chips(np.broadcast_to(self.h_eff, (cfg.n_symbols, self.n_carriers)),
                                         cfg.lt, cfg.lf)
        self.capacity = self.n_data_symbols * self.m
        if self.coded:
            self.code = CodeSpec(rate=cfg.rate)
            self.n_info = info_bits_for(self.capacity, cfg.rate)
            self.n_mother = 2 * (self.n_info + TAIL)
            self.n_tx = punctured_length(self.n_mother, cfg.rate)
        else:
            self.n_info = self.capacity
        self.rms_gain = float(np.sqrt(np.mean(np.abs(self.h_eff) ** 2)))

    # -- transmitter -------------------------------------------------------

    def _codeword(self, info: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if not self.coded:
            return info
        tx = puncture(conv_encode(info, self.code), self.cfg.rate)
        pad = rng.integers(0, 2, self.capacity - tx.size, dtype=np.uint8)
        return np.concatenate([tx, pad])

    def _interleaver(self, rng: np.random.Generator) -> np.ndarray | None:
        return rng.permutation(self.capacity) if self.cfg.interleaver else None

    def transmit_frame(self, symbols: np.ndarray) -> np.ndarray:
        """Data symbols -> (n_symbols, n_carriers) chip frame."""
        cfg = self.cfg
        if cfg.baseline_mode:
            return symbols.reshape(cfg.n_symbols, self.n_carriers)
        payload = assemble_payload(symbols.reshape(self.n_subsets, cfg.L - 1), self.C, cfg.boost)
        return map_chips(spread(payload, self.C), cfg.lt, cfg.lf, (cfg.n_symbols, self.n_carriers))

    def through_channel(self, frame: np.ndarray, noise_var: float, rng: np.random.Generator) -> np.ndarray:
        if self.cfg.channel_mode == "freq":
            return apply_channel(frame, self.channel, noise_var, rng)
        signal = ofdm_modulate(frame, self.cfg)
        return ofdm_demodulate(apply_channel(signal, self.channel, noise_var, rng), self.cfg, self.n_carriers)

    # -- receiver ----------------------------------------------------------

    def receive_llrs(self, rx: np.ndarray, noise_var: float) -> tuple[np.ndarray, int]:
        cfg = self.cfg
        if cfg.baseline_mode:
            h = np.broadcast_to(self.h_eff, rx.shape)
            if cfg.equalizer == "ZF":
                return qam_demap(rx / h, noise_var / np.abs(h) ** 2, cfg.constellation), 0
            denom = np.abs(h) ** 2 + noise_var
            z = rx * np.conj(h) / denom
            g = np.abs(h) ** 2 / denom
            return qam_demap(z, noise_var * g / denom, cfg.constellation, gain=g), 0
        r = demap_chips(rx, cfg.lt, cfg.lf)
        if cfg.csi == "perfect":
            h_hat = self.h_subsets.mean(axis=1)
        else:
            h_hat = estimate_subset(r, self.C, cfg.boost).h_hat
        si = 0.0
        if cfg.oracle_si:
            si = si_variance(1.0, cfg.L, channel_variance(self.h_subsets)[1])
        eq = equalize_subset(r, self.C, h_hat, noise_var, cfg.equalizer,
                             eps=1e-6 * self.rms_gain, si_var=si)
        llrs = qam_demap(eq.symbols, eq.noise_var[:, None], cfg.constellation, gain=eq.gain[:, None])
        return llrs, int(eq.erased.sum())

    def run_frame(self, noise_var: float, data_rng: np.random.Generator,
                  noise_rng: np.random.Generator) -> FrameResult:
        info = data_rng.integers(0, 2, self.n_info, dtype=np.uint8)
        perm = self._interleaver(data_rng)
        bits = self._codeword(info, data_rng)
        if perm is not None:
            bits = bits[perm]
        rx = self.through_channel(self.transmit_frame(qam_map(bits, self.cfg.constellation)), noise_var, noise_rng)
        llrs, erased = self.receive_llrs(rx, noise_var)
        if perm is not None:
            deint = np.empty_like(llrs)
            deint[perm] = llrs
            llrs = deint
        if self.coded:
            mother = depuncture(llrs[: self.n_tx], self.cfg.rate, self.n_mother)
            decoded = viterbi_decode(mother, self.code)
        else:
            decoded = (llrs < 0).astype(np.uint8)
        return FrameResult(int(np.count_nonzero(decoded != info)), self.n_info, erased)


def frame_streams(cfg: LinkConfig, point: int, frame: int) -> tuple[np.random.Generator, np.random.Generator]:
    return (rngmod.spawn_stream(cfg.master_seed, rngmod.DATA, point, frame),
            rngmod.spawn_stream(cfg.master_seed, rngmod.NOISE, point, frame))
