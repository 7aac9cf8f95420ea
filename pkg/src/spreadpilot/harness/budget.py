"""Useful bit rates and the Eb/N0 <-> noise-variance bookkeeping.

Noise variance is per carrier (equivalently per time sample, transforms
being unitary); the guard interval is not counted in Eb.
"""

from __future__ import annotations

import math

from ..config import LinkConfig

RS_FACTOR = 188 / 204

# (system, constellation, code rate, L) -> published useful bit rate, Mbit/s
PUBLISHED_RATES = {
    ("DVB-T", "16QAM", "3/4", None): 14.93,
    ("DVB-T", "64QAM", "5/6", None): 24.88,
    ("LP-OFDM", "16QAM", "3/4", 16): 16.00,
    ("LP-OFDM", "16QAM", "3/4", 32): 16.53,
    ("LP-OFDM", "16QAM", "3/4", 64): 16.80,
    ("LP-OFDM", "64QAM", "5/6", 16): 26.67,
    ("LP-OFDM", "64QAM", "5/6", 32): 27.55,
    ("LP-OFDM", "64QAM", "5/6", 64): 27.99,
}

SNR_CONVENTION = (
    "snr = E|s_j|^2 / sigma_n^2 per carrier, E|s_j|^2 = (L-1+B)/L (pilot boost included)"
)
EBN0_CONVENTION = (
    "LP-OFDM: sigma_n^2 = (L-1+B) / ((L-1) m Rc EbN0); "
    "DVB-T baseline: sigma_n^2 = 1 / (eta m Rc EbN0), eta = (1-d)/((1-d) + d P) "
    "with scattered-pilot density d and pilot power P; RS overhead not included"
)


def useful_bitrate(cfg: LinkConfig) -> float:
    """Post-FEC information rate in Mbit/s, Reed-Solomon overhead included."""
    m = cfg.bits_per_symbol
    rc = float(cfg.rate)
    if cfg.baseline_mode:
        n_data, pilot_share = cfg.dvbt_data_carriers, 1.0
    else:
        n_data, pilot_share = cfg.n_carriers, (cfg.L - 1) / cfg.L
    return n_data * m * rc * RS_FACTOR * pilot_share / cfg.symbol_duration / 1e6


def bitrate_table(base: LinkConfig | None = None) -> list[dict]:
    base = base or LinkConfig()
    rows = []
    for (system, qam, rate, L), published in PUBLISHED_RATES.items():
        if L is None:
            cfg = base.replace(baseline_mode=True, constellation=qam, code_rate=rate)
        else:
            # Spreading split is irrelevant to the rate; lf=2 matches the BER setup.
            cfg = base.replace(baseline_mode=False, constellation=qam, code_rate=rate,
                               lt=L // 2, lf=2, n_symbols=max(base.n_symbols, L // 2))
        rate_mbps = useful_bitrate(cfg)
        rows.append({
            "system": system,
            "constellation": qam,
            "code_rate": rate,
            "L": L or 0,
            "rate_mbps": rate_mbps,
            "reported_mbps": round(rate_mbps, 2),
            "published_mbps": published,
        })
    return rows


def dvbt_useful_power_fraction(cfg: LinkConfig) -> float:
    """Share of transmitted power on data carriers for the DVB-T reference.

    Scattered pilots occupy a fraction ``d`` of the carriers at power ``P``
    (amplitude 4/3, i.e. 16/9, by default): ``(1-d) / ((1-d) + d P)``.
    """
    d, p = cfg.dvbt_pilot_density, cfg.dvbt_pilot_power
    return (1 - d) / ((1 - d) + d * p)


def energy_per_info_bit(cfg: LinkConfig) -> float:
    """Transmitted energy per information bit, in units of one data-carrier symbol energy."""
    m, rc = cfg.bits_per_symbol, float(cfg.rate)
    if cfg.baseline_mode:
        return 1.0 / (dvbt_useful_power_fraction(cfg) * m * rc)
    if cfg.L < 2:
        raise ValueError("LP-OFDM needs L >= 2 to carry any data")
    return (cfg.L - 1 + cfg.boost) / ((cfg.L - 1) * m * rc)


def ebn0_to_noise_var(cfg: LinkConfig, ebn0_db: float) -> float:
    return energy_per_info_bit(cfg) / 10 ** (ebn0_db / 10)


def noise_var_to_ebn0(cfg: LinkConfig, noise_var: float) -> float:
    return 10 * math.log10(energy_per_info_bit(cfg) / noise_var)


def snr_to_noise_var(cfg: LinkConfig, snr_db: float) -> float:
    chip_energy = (cfg.L - 1 + cfg.boost) / cfg.L
    return chip_energy / 10 ** (snr_db / 10)
