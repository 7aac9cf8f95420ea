import math

import pytest

from spreadpilot.config import LinkConfig
from spreadpilot.harness import budget, experiments
from spreadpilot.harness.cli import main
from spreadpilot.harness.link import Link, frame_streams
from spreadpilot.harness.report import ExperimentReport, emit_report, from_csv, to_csv, to_svg

# Small frames keep link-level tests fast.
SMALL = LinkConfig().replace(lt=8, lf=2, n_symbols=8, n_carriers=432, max_bits=60_000)


# -- budget ------------------------------------------------------------------

def test_bitrate_examples():
    cfg = LinkConfig()
    assert budget.useful_bitrate(cfg.replace(baseline_mode=True)) == pytest.approx(14.93, abs=0.005)
    assert budget.useful_bitrate(cfg.replace(lt=8, lf=2)) == pytest.approx(16.00, abs=0.005)
    assert budget.useful_bitrate(cfg.replace(constellation="64QAM", code_rate="5/6")) == pytest.approx(27.99, abs=0.005)


def test_bitrate_table_shape():
    rows = budget.bitrate_table()
    assert len(rows) == 8
    assert {r["L"] for r in rows} == {0, 16, 32, 64}


def test_dvbt_pilot_loss():
    eta = budget.dvbt_useful_power_fraction(LinkConfig())
    assert -10 * math.log10(eta) == pytest.approx(0.65, abs=0.01)


def test_ebn0_conversion_round_trip():
    for cfg in (LinkConfig(), LinkConfig().replace(boost=8.0), LinkConfig().replace(baseline_mode=True)):
        nv = budget.ebn0_to_noise_var(cfg, 7.3)
        assert budget.noise_var_to_ebn0(cfg, nv) == pytest.approx(7.3)


def test_ebn0_accounts_for_pilot_overhead():
    # Large L, B=1: the pilot overhead vanishes and Eb = Es / (m Rc).
    cfg = LinkConfig().replace(lt=512, lf=2, n_symbols=512)
    assert budget.energy_per_info_bit(cfg) == pytest.approx(1 / 3, rel=2e-3)
    cfg = LinkConfig().replace(boost=63.0)
    assert budget.energy_per_info_bit(cfg) == pytest.approx(2 / 3)


def test_lp_ofdm_accounting_converges_to_plain_ofdm():
    plain = 1 / (4 * 0.75)
    cfg = LinkConfig().replace(lt=64, lf=2, n_symbols=64, boost=1.0)
    gap_db = 10 * math.log10(budget.energy_per_info_bit(cfg) / plain)
    assert 0 < gap_db < 0.05


def test_snr_convention():
    cfg = LinkConfig().replace(lt=2, lf=2, boost=5.0)
    assert budget.snr_to_noise_var(cfg, 10.0) == pytest.approx(2.0 / 10)


# -- report ------------------------------------------------------------------

def _report():
    r = ExperimentReport("ber", ("curve", "ebn0_db", "ber", "bits"), metadata={"master_seed": "3"})
    r.add(curve="a", ebn0_db=1.0, ber=0.1, bits=100)
    r.add(curve="a", ebn0_db=2.0, ber=0.01, bits=1000)
    r.add(curve="b", ebn0_db=1.0, ber=0.2, bits=100)
    return r


def test_csv_round_trip():
    r = _report()
    back = from_csv(to_csv(r))
    assert back.kind == "ber" and back.metadata == {"master_seed": "3"}
    assert back.records == r.records
    assert r.curves() == ["a", "b"]
    assert r.column("ber", curve="a") == [0.1, 0.01]


def test_empty_report():
    r = ExperimentReport("mse", ("snr_db", "mse"))
    back = from_csv(to_csv(r))
    assert back.columns == ("snr_db", "mse") and back.records == []
    assert "<svg" in to_svg(r, "snr_db", "mse")


def test_add_requires_all_columns():
    with pytest.raises(ValueError):
        _report().add(curve="c", ebn0_db=1.0)


def test_svg_one_polyline_per_curve(tmp_path):
    svg = to_svg(_report(), "ebn0_db", "ber")
    assert svg.count("<polyline") == 2
    paths = emit_report(_report(), tmp_path, ("csv", "svg"), stem="x")
    assert sorted(p.name for p in paths) == ["x.csv", "x.svg"]


# -- link --------------------------------------------------------------------

@pytest.mark.parametrize("changes", [
    {}, {"code_rate": "5/6", "constellation": "64QAM"}, {"baseline_mode": True},
    {"channel_mode": "freq", "interleaver": True}, {"equalizer": "MMSE"}, {"csi": "perfect"},
])
def test_noiseless_frame_is_error_free(changes):
    cfg = SMALL.replace(channel="FLAT", **changes)
    link = Link(cfg)
    res = link.run_frame(0.0, *frame_streams(cfg, 0, 0))
    assert res.bit_errors == 0 and res.n_bits == link.n_info > 0


def test_uncoded_frame_capacity():
    cfg = SMALL.replace(code_rate="1", channel="FLAT")
    link = Link(cfg)
    assert link.n_info == link.capacity == (8 // 8) * (432 // 2) * 15 * 4


def test_high_snr_f1_with_estimation():
    # Lt-only spreading on a static channel: no self-interference at all.
    cfg = SMALL.replace(lt=8, lf=1, channel="F1")
    res = Link(cfg).run_frame(budget.ebn0_to_noise_var(cfg, 30.0), *frame_streams(cfg, 0, 0))
    assert res.bit_errors == 0


def test_frames_reproducible():
    cfg = SMALL
    nv = budget.ebn0_to_noise_var(cfg, 6.0)
    a = Link(cfg).run_frame(nv, *frame_streams(cfg, 1, 2))
    b = Link(cfg).run_frame(nv, *frame_streams(cfg, 1, 2))
    assert a == b


def test_mmse_no_worse_than_zf_at_low_snr():
    zf = experiments.measure_ber(SMALL.replace(target_errors=10**9, max_bits=40_000), 4.0)
    mm = experiments.measure_ber(SMALL.replace(equalizer="MMSE", target_errors=10**9, max_bits=40_000), 4.0)
    sigma = math.sqrt(zf.ber * (1 - zf.ber) / zf.bits + mm.ber * (1 - mm.ber) / mm.bits)
    assert mm.ber <= zf.ber + 3 * sigma


# -- experiments -------------------------------------------------------------

def test_stopping_rule():
    cfg = SMALL.replace(target_errors=50, min_errors=20, max_bits=10**7)
    pt = experiments.measure_ber(cfg, 0.0)
    assert pt.errors >= 50 and pt.frames >= 1
    cfg = SMALL.replace(channel="FLAT", max_bits=5000)
    pt = experiments.measure_ber(cfg, 20.0)
    assert pt.errors == 0 and pt.bits >= 5000


def test_unreliable_points_flagged():
    report = experiments.run_ber_experiment(SMALL.replace(channel="FLAT", max_bits=3000), [20.0])
    assert experiments.unreliable_points(report) == 1
    assert report.records[0]["ci95"] == 0.0


def test_required_ebn0_interpolation():
    assert experiments.required_ebn0([0, 1, 2], [1e-1, 1e-2, 1e-4], 1e-3) == pytest.approx(1.5)
    assert math.isnan(experiments.required_ebn0([0, 1], [0.5, 0.4], 1e-3))


def test_workers_do_not_change_csv():
    cfg = SMALL.replace(max_bits=30_000)
    one = to_csv(experiments.run_ber_experiment(cfg, [5.0, 8.0], workers=1))
    two = to_csv(experiments.run_ber_experiment(cfg, [5.0, 8.0], workers=2))
    assert one == two
    c = LinkConfig().replace(lt=1, lf=2, channel_mode="freq")
    a = to_csv(experiments.run_mse_experiment(c, [2, 4], [10.0], min_trials=2000, workers=1))
    b = to_csv(experiments.run_mse_experiment(c, [2, 4], [10.0], min_trials=2000, workers=2))
    assert a == b


def test_seed_changes_results():
    cfg = SMALL.replace(max_bits=30_000)
    a = experiments.run_ber_experiment(cfg, [5.0]).records[0]["errors"]
    b = experiments.run_ber_experiment(cfg.replace(master_seed=99), [5.0]).records[0]["errors"]
    assert a != b


def test_weighted_variance_report():
    c = LinkConfig().replace(lt=1, lf=2, channel_mode="freq")
    r = experiments.run_weighted_variance(c, [1, 2, 4, 8])
    wv = r.column("weighted_variance")
    assert wv[0] == 0.0 and all(a < b for a, b in zip(wv, wv[1:]))
    assert "tap_digest" in r.metadata and "cfg.lt" in r.metadata


def test_boost_sweep_tie_goes_to_smaller_boost():
    cfg = SMALL.replace(channel="FLAT", max_bits=5000)
    best, report = experiments.sweep_boost(cfg, [4.0, 1.0, 2.0], 30.0)
    assert best == 1.0
    assert report.column("boost") == [1.0, 2.0, 4.0]
    assert report.metadata["best_boost"] == "1.0"


# -- cli ---------------------------------------------------------------------

def test_cli_bitrate(tmp_path, capsys):
    assert main(["bitrate", "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "27.99" in out and (tmp_path / "bitrate.csv").exists()


def test_cli_config_error(tmp_path, capsys):
    assert main(["ber", "--lt", "3", "--out-dir", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["ber", "--config", str(tmp_path / "none.cfg"), "--out-dir", str(tmp_path)]) == 2


def test_cli_unreliable_exit_code(tmp_path):
    code = main(["ber", "--channel", "FLAT", "--ebn0", "30", "--max-bits", "1000",
                 "--out-dir", str(tmp_path), "--format", "csv", "--format", "svg"])
    assert code == 3
    assert (tmp_path / "ber.svg").exists()


def test_cli_config_file(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text("lt = 1\nlf = 4\nchannel_mode = freq\n")
    assert main(["mse", "--config", str(cfg_path), "--lf-list", "4", "--snr", "20",
                 "--trials", "1000", "--out-dir", str(tmp_path)]) == 0
    r = from_csv((tmp_path / "mse.csv").read_text())
    assert r.records[0]["lf"] == 4 and r.records[0]["trials"] >= 1000
