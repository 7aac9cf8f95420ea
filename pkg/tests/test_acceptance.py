"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line (collected again in the terminal
summary) with the measured worst case and the pinned tolerance. Set
``SPREADPILOT_ACCEPTANCE_OUT`` to keep the generated reports as CSV.
"""

import itertools
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.special import erfc

from spreadpilot.channel import apply_channel, load_tap_set, realize_channel
from spreadpilot.config import LinkConfig
from spreadpilot.estimator import estimate_subset
from spreadpilot.fec import conv_encode, depuncture, puncture, viterbi_decode
from spreadpilot.fec.convcode import CodeSpec, TAIL
from spreadpilot.harness import budget, experiments
from spreadpilot.harness.report import emit_report
from spreadpilot.ofdm import ofdm_demodulate, ofdm_modulate
from spreadpilot.precode import assemble_payload, spread, wh_matrix
from spreadpilot.rng import complex_normal, spawn_stream

pytestmark = pytest.mark.acceptance

OUT = os.environ.get("SPREADPILOT_ACCEPTANCE_OUT")


def _keep(report, stem):
    if OUT:
        emit_report(report, OUT, ("csv", "svg"), stem=stem)


# 1 ---------------------------------------------------------------------------

def test_c1_bitrate_table(verdict):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "spreadpilot.harness.cli", "bitrate", "--out-dir",
                           os.environ.get("TMPDIR", "/tmp") + "/spreadpilot-bitrate"],
                          capture_output=True, text=True, check=True)
    elapsed = time.perf_counter() - t0
    rows = budget.bitrate_table()
    # Reported values carry two decimals, like the published table; compare in whole cents.
    cents = [abs(round(r["reported_mbps"] * 100) - round(r["published_mbps"] * 100)) for r in rows]
    worst = max(rows, key=lambda r: abs(r["rate_mbps"] - r["published_mbps"]))
    ok = max(cents) <= 1 and elapsed < 1.0 and proc.stdout.count("Mbit/s") == 8
    detail = (f"8 rates within +-0.01 Mbit/s as reported (max {max(cents)} cent); widest raw gap "
              f"{worst['rate_mbps']:.4f} vs {worst['published_mbps']:.2f}; CLI {elapsed:.2f} s < 1 s")
    assert verdict("1", ok, detail)


# 2 and 3 ---------------------------------------------------------------------

GRID = list(itertools.product([4, 16, 64], [1.0, 2.0, 4.0], [0.0, 0.05, 0.2], [0.001, 0.01, 0.1]))


@pytest.fixture(scope="module")
def mse_grid():
    return {pt: experiments.synthetic_mse(*pt, trials=100_000, seed=2, point=i) for i, pt in enumerate(GRID)}


def test_c2_closed_form_mse(mse_grid, verdict):
    rel = {pt: abs(s.mse - s.predicted) / s.predicted for pt, s in mse_grid.items()}
    bad = sorted(pt for pt, r in rel.items() if r > 0.05)
    worst = max(rel, key=rel.get)
    exact = max(abs(s.mse - s.predicted_fixed) / s.predicted_fixed for s in mse_grid.values())
    detail = (f"{len(GRID) - len(bad)}/{len(GRID)} grid points within 5% of (1/B)((L-1)/L sh2 + sn2); "
              f"worst {rel[worst]:.1%} at (L,B,sh2,sn2)={worst}; "
              f"same runs vs sh2/B + sn2/B: worst {exact:.1%}")
    assert verdict("2", not bad, detail)


def test_c3_unbiased(mse_grid, verdict):
    z = {pt: max(abs(s.bias.real), abs(s.bias.imag)) / s.bias_sigma if s.bias_sigma > 0 else 0.0
         for pt, s in mse_grid.items()}
    worst = max(z, key=z.get)
    ok = all(v < 4.0 for v in z.values())
    assert verdict("3", ok, f"max |mean error| = {z[worst]:.2f} sigma at {worst} (limit 4 sigma), "
                            f"{len(GRID)} points")


# 4 ---------------------------------------------------------------------------

def test_c4_flat_channel_exact(verdict):
    worst = 0.0
    rng = spawn_stream(4, 1)
    for L, boost in itertools.product([2, 4, 16, 64, 256], [1.0, 2.5, 8.0]):
        C = wh_matrix(L)
        data = complex_normal(rng, (2000, L - 1)) * 3.0
        h = complex(*rng.normal(size=2))
        err = estimate_subset(h * spread(assemble_payload(data, C, boost), C), C, boost).h_hat - h
        worst = max(worst, float(np.max(np.abs(err))) / abs(h))
    ok = worst < 1e-12
    assert verdict("4", ok, f"sh2=0, noise off: max |h_hat - h|/|h| = {worst:.1e} over 2000 draws x 15 (L,B) "
                            f"(limit 1e-12)")


# 5 ---------------------------------------------------------------------------

def test_c5_mse_floor(verdict):
    cfg = LinkConfig().replace(lt=1, lf=2, boost=1.0, channel="F1", channel_mode="freq")
    lfs = [2, 4, 8, 16, 32, 64]
    report = experiments.run_mse_experiment(cfg, lfs, [80.0], min_trials=100_000)
    variance = experiments.run_weighted_variance(cfg, lfs)
    _keep(report, "c5_mse")
    _keep(variance, "c5_variance")
    floors = report.column("mse")
    predicted = variance.column("weighted_variance")
    rel = [abs(f - p) / p for f, p in zip(floors, predicted)]
    exact = [abs(f - v) / v for f, v in zip(floors, variance.column("subset_variance"))]
    monotone = all(a < b for a, b in zip(floors, floors[1:]))
    ok = monotone and max(rel) <= 0.05
    detail = ("F1 Lt=1 B=1 at 80 dB, floor/((L-1)/L sh2) per Lf " +
              " ".join(f"{lf}:{f / p:.3f}" for lf, f, p in zip(lfs, floors, predicted)) +
              f" (limit 5%); monotone in Lf: {monotone}; vs sh2 itself: worst {max(exact):.1%}")
    assert verdict("5", ok, detail)


# 6 ---------------------------------------------------------------------------

def _qam16_gray_ber(ebn0_db):
    # Exact per-axis bit error rate of Gray 4-PAM, levels +-1, +-3, unit symbol energy 10.
    q = lambda x: 0.5 * erfc(x / math.sqrt(2))  # noqa: E731
    n0 = 10.0 / (4 * 10 ** (ebn0_db / 10))
    s = math.sqrt(n0 / 2)
    sign = 0.5 * (q(1 / s) + q(3 / s))
    mag = 0.5 * (2 * q(1 / s) + q(3 / s) - q(5 / s))
    return 0.5 * (sign + mag)


def test_c6_chain_sanity(verdict):
    cfg = LinkConfig().replace(baseline_mode=True, dvbt_pilot_density=0.0, channel="FLAT",
                               code_rate="1", target_errors=10**9, max_bits=1_000_000)
    parts, ok = [], True
    for i, eb in enumerate([6.0, 10.0]):
        pt = experiments.measure_ber(cfg, eb, point=i)
        ref = _qam16_gray_ber(eb)
        z = (pt.ber - ref) / math.sqrt(ref * (1 - ref) / pt.bits)
        ok &= abs(z) < 3 and pt.bits >= 10**6
        parts.append(f"{eb:g} dB: {pt.ber:.4e} vs {ref:.4e} ({z:+.2f} sigma, {pt.bits} bits)")
    assert verdict("6", ok, "uncoded 16QAM flat AWGN, " + "; ".join(parts) + " (limit 3 sigma)")


# 7 ---------------------------------------------------------------------------

def test_c7_fec(verdict):
    rng = spawn_stream(7, 1)
    fails = 0
    for rate in ["1/2", "3/4", "5/6"]:
        code = CodeSpec(rate=rate)
        for _ in range(10_000):
            u = rng.integers(0, 2, 96, dtype=np.uint8)
            tx = puncture(conv_encode(u), rate)
            fails += not np.array_equal(viterbi_decode(depuncture(1.0 - 2.0 * tx, rate, 2 * (96 + TAIL)), code), u)
    ml_checked = ml_fail = 0
    for rate in ["1/2", "3/4", "5/6"]:
        msgs = np.array(list(itertools.product([0, 1], repeat=7)), dtype=np.uint8)
        words = np.array([puncture(conv_encode(m), rate) for m in msgs])
        for k in rng.choice(len(msgs), 12, replace=False):
            for pos in range(words.shape[1]):
                r = words[k].copy()
                r[pos] ^= 1
                ml = msgs[np.argmin(np.count_nonzero(words != r, axis=1))]
                dec = viterbi_decode(depuncture(1.0 - 2.0 * r, rate, 2 * (7 + TAIL)), CodeSpec(rate=rate))
                ml_checked += 1
                ml_fail += not (np.array_equal(dec, ml) and np.array_equal(dec, msgs[k]))
    ok = fails == 0 and ml_fail == 0
    assert verdict("7", ok, f"noiseless round trip 3 x 10000 messages: {fails} failures; "
                            f"single flips vs brute-force ML: {ml_checked - ml_fail}/{ml_checked} agree")


# 8 ---------------------------------------------------------------------------

EBN0 = [6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0]
BOOSTS = [1.0, 2.0, 4.0, 8.0, 16.0]
BER_TARGET = 1e-3


@pytest.fixture(scope="module")
def ber_curves():
    base = LinkConfig().replace(lf=2, channel="F1", constellation="16QAM", code_rate="3/4")
    sweep_cfg = dict(target_errors=10**9, max_bits=6_000_000)
    curve_cfg = dict(target_errors=1000, max_bits=20_000_000)
    curves, best = {}, {}
    report = None
    for i, lt in enumerate([8, 16, 32]):
        cfg = base.replace(lt=lt, **sweep_cfg)
        best[lt], sweep = experiments.sweep_boost(cfg, BOOSTS, 9.0)
        _keep(sweep, f"c8_boost_lt{lt}")
        cfg = base.replace(lt=lt, boost=best[lt], **curve_cfg)
        report = experiments.run_ber_experiment(cfg, EBN0, report=report, point0=100 * (i + 1))
        curves[lt] = report.records[-len(EBN0):]
    dvbt = base.replace(baseline_mode=True, **curve_cfg)
    report = experiments.run_ber_experiment(dvbt, EBN0, report=report, point0=900)
    curves["dvbt"] = report.records[-len(EBN0):]
    _keep(report, "c8_ber")
    return curves, best


def test_c8_ber_ordering(ber_curves, verdict):
    curves, best = ber_curves
    violations = []
    for k, eb in enumerate(EBN0):
        for a, b in [(8, 16), (16, 32)]:
            ra, rb = curves[a][k], curves[b][k]
            sigma = math.sqrt(ra["ber"] * (1 - ra["ber"]) / ra["bits"] + rb["ber"] * (1 - rb["ber"]) / rb["bits"])
            if rb["ber"] > ra["ber"] + 3 * sigma:
                violations.append(f"Lt={b} worse than Lt={a} at {eb:g} dB")
    req = {key: experiments.required_ebn0(EBN0, [r["ber"] for r in c], BER_TARGET) for key, c in curves.items()}
    beats = req[32] < req["dvbt"]
    ok = not violations and beats
    detail = ("best B " + ", ".join(f"Lt={lt}:{b:g}" for lt, b in best.items()) +
              "; Eb/N0 at BER 1e-3: " + ", ".join(f"{'DVB-T' if k == 'dvbt' else f'Lt={k}'} {v:.2f} dB"
                                                 for k, v in req.items()) +
              f"; monotone in Lt (3 sigma): {not violations}; L=64 below DVB-T: {beats}")
    assert verdict("8", ok, detail + ("; " + "; ".join(violations) if violations else ""))


# 9 ---------------------------------------------------------------------------

def test_c9_determinism(tmp_path, verdict):
    runs = {
        "mse": ["--lf-list", "2,8", "--snr", "10,30", "--trials", "3000"],
        "variance": ["--lf-list", "1,2,4"],
        "ber": ["--lt", "8", "--ebn0", "5,7", "--max-bits", "400000"],
        "boost-sweep": ["--lt", "8", "--boost-grid", "1,4", "--ebn0", "6", "--max-bits", "200000"],
        "bitrate": [],
    }
    same = {}
    for cmd, extra in runs.items():
        out = []
        for workers in (1, 3):
            d = tmp_path / f"{cmd}-{workers}"
            subprocess.run([sys.executable, "-m", "spreadpilot.harness.cli", cmd, "--seed", "5",
                            "--workers", str(workers), "--out-dir", str(d), *extra],
                           check=False, capture_output=True)
            out.append(next(d.glob("*.csv")).read_bytes())
        same[cmd] = out[0] == out[1]
    ok = all(same.values())
    assert verdict("9", ok, "byte-identical CSV with 1 vs 3 workers: " +
                   ", ".join(f"{k}={'yes' if v else 'NO'}" for k, v in same.items()))


# 10 --------------------------------------------------------------------------

def test_c10_time_frequency_equivalence(verdict):
    import dataclasses

    cfg = LinkConfig().replace(lt=4, lf=2, n_symbols=4)
    T = cfg.sample_period
    worst = {}
    for name in ("F1", "P1"):
        taps = load_tap_set(name)
        snap = lambda t: np.rint(np.asarray(t) / T) * T  # noqa: E731
        los = None if taps.los is None else (taps.los[0], float(snap(taps.los[1])), taps.los[2])
        taps = dataclasses.replace(taps, tau=snap(taps.tau), los=los)
        ch = realize_channel(taps, cfg)
        frame = complex_normal(spawn_stream(10, 1), (4, cfg.n_carriers))
        freq = apply_channel(frame, ch, 0.0, None)
        time_ = ofdm_demodulate(apply_channel(ofdm_modulate(frame, cfg), ch, 0.0, None), cfg)
        worst[name] = float(np.max(np.abs(time_ - freq) / np.abs(freq)))
    ok = max(worst.values()) < 1e-6
    assert verdict("10", ok, "max per-carrier relative difference " +
                   ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (limit 1e-6)")
