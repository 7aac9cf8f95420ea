"""Monte Carlo experiments: estimator MSE, weighted channel variance, BER, boost search.

Every random draw comes from a stream keyed by ``(master_seed, role, point,
trial)``. Trials may be evaluated by a process pool, but results are always
folded in trial order, so the output does not depend on the worker count.
"""

from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import rng as rngmod
from ..channel import channel_variance, synthetic_subsets, taps_for
from ..config import LinkConfig, dumps
from ..estimator import estimate_subset, si_variance_fixed, theoretical_mse
from ..fec import qam_map
from ..precode import assemble_payload, demap_chips, map_chips, spread, wh_matrix
from . import budget
from .link import Link, frame_streams
from .report import ExperimentReport

logger = logging.getLogger(__name__)

Z95 = 1.959963984540054


def _metadata(cfg: LinkConfig, **extra) -> dict[str, str]:
    meta = {"master_seed": str(cfg.master_seed), "channel": cfg.channel}
    if cfg.channel != "FLAT" or cfg.channel_file:
        meta["tap_digest"] = taps_for(cfg).digest
    meta.update(extra)
    for line in dumps(cfg).splitlines():
        key, _, value = line.partition(" = ")
        meta[f"cfg.{key}"] = value
    return meta


class _Pool:
    """Ordered map over a process pool, or inline when ``workers <= 1``."""

    def __init__(self, workers: int):
        self.workers = max(int(workers), 1)
        self.executor = ProcessPoolExecutor(self.workers) if self.workers > 1 else None

    def map(self, fn, *iterables):
        if self.executor is None:
            return list(map(fn, *iterables))
        return list(self.executor.map(fn, *iterables))

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        if self.executor is not None:
            self.executor.shutdown()


# -- estimator MSE -----------------------------------------------------------

@dataclass(frozen=True)
class MseStats:
    mse: float
    ci95: float
    trials: int
    bias: complex
    bias_sigma: float
    predicted: float
    predicted_fixed: float


def _fold_errors(chunks, predicted, predicted_fixed) -> MseStats:
    n = sum(c[0] for c in chunks)
    s2 = math.fsum(c[1] for c in chunks)
    s4 = math.fsum(c[2] for c in chunks)
    s1 = complex(math.fsum(c[3].real for c in chunks), math.fsum(c[3].imag for c in chunks))
    mse = s2 / n
    var_sq = max(s4 / n - mse**2, 0.0)
    # Per-component std of the error around its mean, for the bias test.
    bias = s1 / n
    bias_sigma = math.sqrt(max(mse - abs(bias) ** 2, 0.0) / 2.0 / n)
    return MseStats(mse, Z95 * math.sqrt(var_sq / n), n, bias, bias_sigma, predicted, predicted_fixed)


def _error_moments(err: np.ndarray):
    e2 = np.abs(err) ** 2
    return err.size, float(e2.sum()), float((e2**2).sum()), complex(err.sum())


def synthetic_mse(L: int, boost: float, sigma_h2: float, noise_var: float, trials: int,
                  seed: int = 0, point: int = 0, exact_variance: bool = True,
                  constellation: str = "16QAM", block: int = 20000) -> MseStats:
    """Estimator error over synthetic subset channels, one fresh channel per trial.

    ``exact_variance`` makes every subset's population variance equal
    ``sigma_h2``; otherwise coefficients are i.i.d. with that variance.
    """
    C = wh_matrix(L)
    m = {"QPSK": 2, "16QAM": 4, "64QAM": 6}[constellation]
    chunks = []
    for b in range(-(-trials // block)):
        n = min(block, trials - b * block)
        rng_d = rngmod.spawn_stream(seed, rngmod.DATA, point, b)
        rng_c = rngmod.spawn_stream(seed, rngmod.CHANNEL, point, b)
        rng_n = rngmod.spawn_stream(seed, rngmod.NOISE, point, b)
        data = qam_map(rng_d.integers(0, 2, n * (L - 1) * m, dtype=np.uint8), constellation).reshape(n, L - 1)
        h = synthetic_subsets(n, L, sigma_h2, rng_c, exact=exact_variance)
        s = spread(assemble_payload(data, C, boost), C)
        r = h * s + rngmod.complex_normal(rng_n, s.shape, noise_var)
        err = estimate_subset(r, C, boost).h_hat - h.mean(axis=1)
        chunks.append(_error_moments(err))
    return _fold_errors(chunks, float(theoretical_mse(boost, L, sigma_h2, noise_var)),
                        float(si_variance_fixed(boost, sigma_h2 if exact_variance else sigma_h2 * (L - 1) / L)
                              + noise_var / boost))


@functools.lru_cache(maxsize=8)
def _link(cfg: LinkConfig) -> Link:
    return Link(cfg)


def _mse_frame(cfg: LinkConfig, noise_var: float, point: int, frame: int):
    C = wh_matrix(cfg.L, cfg.pilot_index)
    link = _link(cfg)
    rng_d, rng_n = frame_streams(cfg, point, frame)
    n_sub = (cfg.n_symbols // cfg.lt) * (cfg.n_carriers // cfg.lf)
    bits = rng_d.integers(0, 2, n_sub * (cfg.L - 1) * cfg.bits_per_symbol, dtype=np.uint8)
    data = qam_map(bits, cfg.constellation).reshape(n_sub, cfg.L - 1)
    frame_tx = map_chips(spread(assemble_payload(data, C, cfg.boost), C), cfg.lt, cfg.lf,
                         (cfg.n_symbols, cfg.n_carriers))
    r = demap_chips(link.through_channel(frame_tx, noise_var, rng_n), cfg.lt, cfg.lf)
    err = estimate_subset(r, C, cfg.boost).h_hat - link.h_subsets.mean(axis=1)
    return _error_moments(err)


def run_mse_experiment(cfg: LinkConfig, lf_list, snr_grid, min_trials: int = 100_000,
                       workers: int = 1) -> ExperimentReport:
    """Empirical MSE of the spread-pilot estimate against the closed form, per (Lf, SNR)."""
    report = ExperimentReport(
        "mse",
        ("curve", "lt", "lf", "snr_db", "noise_var", "mse", "ci95", "trials",
         "mse_closed_form", "mse_fixed_channel", "bias_re", "bias_im", "bias_sigma"),
        metadata=_metadata(cfg, snr_convention=budget.SNR_CONVENTION),
    )
    point = 0
    with _Pool(workers) as pool:
        for lf in lf_list:
            c = cfg.replace(lf=int(lf))
            link = _link(c)
            _, sigma_h2 = channel_variance(link.h_subsets)
            n_frames = -(-min_trials // link.n_subsets)
            for snr_db in snr_grid:
                nv = budget.snr_to_noise_var(c, snr_db)
                chunks = pool.map(_mse_frame, [c] * n_frames, [nv] * n_frames, [point] * n_frames, range(n_frames))
                stats = _fold_errors(chunks, float(np.mean(theoretical_mse(c.boost, c.L, sigma_h2, nv))),
                                     float(np.mean(si_variance_fixed(c.boost, sigma_h2))) + nv / c.boost)
                report.add(curve=f"Lf={lf}", lt=c.lt, lf=c.lf, snr_db=float(snr_db), noise_var=nv,
                           mse=stats.mse, ci95=stats.ci95, trials=stats.trials,
                           mse_closed_form=stats.predicted, mse_fixed_channel=stats.predicted_fixed,
                           bias_re=stats.bias.real, bias_im=stats.bias.imag, bias_sigma=stats.bias_sigma)
                point += 1
    return report


def run_weighted_variance(cfg: LinkConfig, lf_list) -> ExperimentReport:
    """Per Lf: mean over subsets of ``(L-1)/L sigma_h2`` and of ``sigma_h2`` itself."""
    report = ExperimentReport("variance", ("curve", "lt", "lf", "L", "weighted_variance", "subset_variance"),
                              metadata=_metadata(cfg))
    for lf in lf_list:
        c = cfg.replace(lf=int(lf))
        _, sigma_h2 = channel_variance(_link(c).h_subsets)
        report.add(curve=cfg.channel, lt=c.lt, lf=c.lf, L=c.L,
                   weighted_variance=float(np.mean((c.L - 1) / c.L * sigma_h2)),
                   subset_variance=float(np.mean(sigma_h2)))
    return report


# -- BER -----------------------------------------------------------------------

def _ber_frame(cfg: LinkConfig, noise_var: float, point: int, frame: int):
    rng_d, rng_n = frame_streams(cfg, point, frame)
    res = _link(cfg).run_frame(noise_var, rng_d, rng_n)
    return res.bit_errors, res.n_bits


@dataclass(frozen=True)
class BerPoint:
    errors: int
    bits: int
    frames: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits

    @property
    def ci95(self) -> float:
        p = self.ber
        return Z95 * math.sqrt(p * (1 - p) / self.bits)


def measure_ber(cfg: LinkConfig, ebn0_db: float, point: int = 0, pool: _Pool | None = None) -> BerPoint:
    """Count decoder errors frame by frame until the stopping rule fires."""
    nv = budget.ebn0_to_noise_var(cfg, ebn0_db)
    own = pool is None
    pool = pool or _Pool(1)
    errors = bits = frames = 0
    try:
        while errors < cfg.target_errors and bits < cfg.max_bits:
            batch = range(frames, frames + pool.workers)
            for e, n in pool.map(_ber_frame, [cfg] * len(batch), [nv] * len(batch), [point] * len(batch), batch):
                errors, bits, frames = errors + e, bits + n, frames + 1
                if errors >= cfg.target_errors or bits >= cfg.max_bits:
                    break
    finally:
        if own:
            pool.__exit__()
    return BerPoint(errors, bits, frames)


BER_COLUMNS = ("curve", "boost", "ebn0_db", "noise_var", "ber", "ci95", "errors", "bits", "frames", "reliable")


def curve_label(cfg: LinkConfig) -> str:
    if cfg.baseline_mode:
        return "DVB-T perfect CSI"
    return f"Lt={cfg.lt} Lf={cfg.lf} B={cfg.boost:g}"


def run_ber_experiment(cfg: LinkConfig, ebn0_grid, workers: int = 1, label: str | None = None,
                       report: ExperimentReport | None = None, point0: int = 0) -> ExperimentReport:
    report = report or ExperimentReport("ber", BER_COLUMNS,
                                        metadata=_metadata(cfg, ebn0_convention=budget.EBN0_CONVENTION))
    label = label or curve_label(cfg)
    with _Pool(workers) as pool:
        for i, eb in enumerate(ebn0_grid):
            pt = measure_ber(cfg, float(eb), point0 + i, pool)
            report.add(curve=label, boost=float(cfg.boost), ebn0_db=float(eb),
                       noise_var=budget.ebn0_to_noise_var(cfg, eb), ber=pt.ber, ci95=pt.ci95,
                       errors=pt.errors, bits=pt.bits, frames=pt.frames,
                       reliable="true" if pt.errors >= cfg.min_errors else "false")
    return report


def unreliable_points(report: ExperimentReport) -> int:
    return sum(1 for r in report.records if r.get("reliable") == "false")


def required_ebn0(ebn0_db, ber, target: float) -> float:
    """Eb/N0 where the BER curve crosses ``target``, interpolating log10(BER) linearly.

    Returns ``nan`` if the curve never crosses.
    """
    x = np.asarray(ebn0_db, dtype=float)
    y = np.log10(np.maximum(np.asarray(ber, dtype=float), 1e-300))
    t = math.log10(target)
    for k in range(len(x) - 1):
        if y[k] >= t > y[k + 1]:
            return float(x[k] + (t - y[k]) * (x[k + 1] - x[k]) / (y[k + 1] - y[k]))
    return float("nan")


def sweep_boost(cfg: LinkConfig, boost_grid, ebn0_db: float, workers: int = 1) -> tuple[float, ExperimentReport]:
    """BER at one Eb/N0 for each boost; returns the argmin (ties go to the smaller B)."""
    report = ExperimentReport("boost-sweep", BER_COLUMNS,
                              metadata=_metadata(cfg, ebn0_convention=budget.EBN0_CONVENTION))
    grid = sorted(float(b) for b in boost_grid)
    # Same stream keys for every B: common random numbers sharpen the comparison.
    for b in grid:
        run_ber_experiment(cfg.replace(boost=b), [ebn0_db], workers,
                           label=f"Lt={cfg.lt} Lf={cfg.lf}", report=report)
    bers = report.column("ber")
    best = grid[int(np.argmin(bers))]
    report.metadata["best_boost"] = repr(best)
    return best, report
