import csv
import math

import numpy as np
import pytest

import icilab.harness as harness
from icilab.channel import ChannelSpec
from icilab.cli import main
from icilab.config import build_spec, load_config
from icilab.errors import ConfigurationError, DegenerateDivisionError
from icilab.harness import (
    CSV_HEADER,
    ExperimentSpec,
    MseReport,
    Row,
    relative_reduction,
    run_cell,
    run_experiment,
    summarize,
)
from icilab.receivers import ReceiverKind
from icilab.signal_model import OfdmConfig

SMALL = OfdmConfig(carrier_count=64, block_count=2, pilot_count=20)
TINY_YAML = """
ofdm: {carrier_count: 64, block_count: 2, pilot_count: 20}
channel: {doppler_factor: 2.0e-4, snr_db: 25}
estimator: {max_outer: 3}
sweeps: {snr: [10, 30], alpha: [1.0e-4, 3.0e-4]}
seeds: 2
"""


def small_spec(**kw):
    base = dict(ofdm=SMALL, channel=ChannelSpec(doppler_factor=2e-4, snr_db=25.0),
                sweep="snr", values=(0, 10, 20, 30), seeds=(0, 1))
    base.update(kw)
    return ExperimentSpec(**base)


@pytest.fixture(scope="module")
def snr_report():
    return run_experiment(small_spec())


class TestRunExperiment:
    def test_cardinality(self, snr_report):
        assert len(snr_report.rows) == 32
        keys = {(r.value, r.receiver, r.seed) for r in snr_report.rows}
        assert len(keys) == 32
        assert not snr_report.failed

    def test_csv_schema(self, snr_report):
        text = snr_report.to_csv()
        assert text.splitlines()[0] == "sweep,value,receiver,seed,mse_db,fe_hat,iters"
        assert len(text.splitlines()) == 33

    def test_rows_sorted(self, snr_report):
        keys = [r.key() for r in snr_report.rows]
        assert keys == sorted(keys)

    def test_same_spec_same_bytes(self, snr_report, tmp_path):
        out = tmp_path / "again.csv"
        again = run_experiment(small_spec(output=str(out)))
        assert again.to_csv() == snr_report.to_csv()
        assert out.read_text() == snr_report.to_csv()

    def test_workers_do_not_change_output(self, snr_report):
        spec = small_spec(values=(10, 30))
        assert run_experiment(spec, workers=2).to_csv() == run_experiment(spec).to_csv()

    def test_single_cell_reproducible(self, snr_report):
        alone = run_cell(small_spec(), 20.0, 1)
        want = [r for r in snr_report.rows if r.value == 20.0 and r.seed == 1]
        assert [r.csv_fields() for r in alone] == [r.csv_fields() for r in want]

    def test_common_random_numbers(self):
        # two sweep values of one seed see the same transmitted data
        spec = small_spec(sweep="alpha", values=(1e-4, 3e-4), seeds=(5,))
        rng_a, _ = harness._cell_seeds(5)
        rng_b, _ = harness._cell_seeds(5)
        np.testing.assert_array_equal(rng_a.integers(0, 100, 10), rng_b.integers(0, 100, 10))
        assert spec.cell_config(1e-4)[0] == spec.cell_config(3e-4)[0]

    def test_failures_are_marked(self, monkeypatch):
        real = harness.run_receiver

        def flaky(kind, *args, **kw):
            if kind is ReceiverKind.P_FFT:
                raise DegenerateDivisionError("faded")
            return real(kind, *args, **kw)

        monkeypatch.setattr(harness, "run_receiver", flaky)
        report = run_experiment(small_spec(values=(20,), seeds=(0,)))
        assert len(report.rows) == 4
        assert [r.receiver for r in report.failed] == [ReceiverKind.P_FFT]
        assert math.isnan(report.failed[0].mse_db)


class TestSpec:
    def test_carriers_keep_frame_size(self):
        spec = small_spec(sweep="carriers", values=(64, 256, 2048), ofdm=OfdmConfig())
        for K in (64, 256, 2048):
            cfg, _ = spec.cell_config(K)
            assert cfg.carrier_count * cfg.block_count == 2**13
            assert cfg.pilot_count == min(200, K - 1)

    @pytest.mark.parametrize("kw", [
        {"sweep": "bandwidth"}, {"values": ()}, {"seeds": ()}, {"seeds": (1, 1)},
        {"sweep": "carriers", "values": (100,)}, {"sweep": "fe", "values": (0.0,)},
        {"receivers": ("MMSE",)},
    ])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            small_spec(**kw)

    def test_sweep_axes(self):
        spec = small_spec(sweep="alpha", channel=ChannelSpec(path_doppler=(1e-4, 1e-4, 1e-4)))
        assert spec.cell_config(3e-4)[1].dopplers() == (3e-4,) * 3
        assert small_spec().cell_config(12.0)[1].snr_db == 12.0


class TestSummary:
    def test_reduction_arithmetic(self):
        db = lambda x: 10 * math.log10(x)
        assert relative_reduction(db(0.03), db(0.10)) == pytest.approx(0.70)
        assert relative_reduction(-12.0, -12.0) == 0.0

    def test_median_and_reduction(self):
        rows = []
        for seed, (a, f) in enumerate([(-20.0, -10.0), (-22.0, -12.0), (-30.0, -11.0)]):
            rows += [Row("snr", 10.0, ReceiverKind.A_FFT, seed, a), Row("snr", 10.0, ReceiverKind.F_FFT, seed, f)]
        table, red = summarize(MseReport(tuple(rows)))
        med = {s.receiver: s.median_db for s in table}
        assert med == {ReceiverKind.A_FFT: -22.0, ReceiverKind.F_FFT: -11.0}
        assert red[10.0] == pytest.approx(1 - 10 ** (-1.1))
        assert all(s.count == 3 for s in table)

    def test_failed_rows_ignored(self):
        rows = (Row("snr", 1.0, ReceiverKind.A_FFT, 0, -5.0), Row("snr", 1.0, ReceiverKind.A_FFT, 1, math.nan, error="x"))
        table, red = summarize(MseReport(rows))
        assert table[0].count == 1 and red == {}

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            summarize(MseReport(()))

    def test_csv_round_trip(self, snr_report, tmp_path):
        path = tmp_path / "r.csv"
        snr_report.write(path)
        back = MseReport.read_csv(path)
        assert back.to_csv() == snr_report.to_csv()

    def test_gnuplot_table(self, snr_report):
        table, _ = summarize(snr_report)
        lines = harness.gnuplot_dat(table).splitlines()
        assert lines[0] == "# value ConvFFT PFFT FFFT AFFT"
        assert len(lines) == 5


class TestConfig:
    def test_defaults(self):
        conf = load_config(text="")
        cfg = conf["ofdm"]
        assert (cfg.carrier_count, cfg.center_freq, cfg.bandwidth, cfg.sample_rate) == (1024, 32e3, 12e3, 192e3)
        assert cfg.guard_interval == 0.016 and cfg.psk_order == 4 and cfg.pilot_count == 200
        assert len(conf["channel"].paths) == 3 and conf["seeds"] == tuple(range(10))
        assert len(conf["sweeps"]["fe"]) == 41
        assert conf["receivers"] == tuple(ReceiverKind)

    def test_explicit_values(self):
        conf = load_config(text=TINY_YAML + "receivers: {names: [FFFT, AFFT], taps: 5}\n")
        assert conf["settings"].taps == 5 and conf["settings"].estimator.max_outer == 3
        assert conf["receivers"] == (ReceiverKind.F_FFT, ReceiverKind.A_FFT)
        spec = build_spec(conf, "alpha", seeds=[7])
        assert spec.values == (1e-4, 3e-4) and spec.seeds == (7,)

    def test_path_phase_in_degrees(self):
        conf = load_config(text="channel: {paths: [{gain: 2, phase_deg: 90, delay: 0.001}]}")
        (g, tau), = conf["channel"].paths
        assert abs(g - 2j) < 1e-12 and tau == 0.001

    @pytest.mark.parametrize("text", [
        "bogus: 1", "ofdm: {carriers: 5}", "channel: {paths: [{gain: 1, skew: 2}]}",
        "estimator: {step_w: -1}", "seeds: 0", "seeds: [1, x]", "ofdm: [1, 2", "- 1",
        "receivers: {names: [Nope]}", "ofdm: {carrier_count: 1024, pilot_count: 5000}",
    ])
    def test_rejects(self, text):
        with pytest.raises(ConfigurationError):
            load_config(text=text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "none.yaml")

    def test_unknown_sweep(self):
        with pytest.raises(ConfigurationError):
            build_spec(load_config(text=""), "depth")

    @pytest.mark.parametrize("name", ["default.yaml", "fe_sweep.yaml", "quick.yaml"])
    def test_shipped_configs_load(self, name):
        from pathlib import Path
        load_config(Path(__file__).parent.parent / "configs" / name)


class TestCli:
    def test_run(self, tmp_path, capsys):
        conf = tmp_path / "c.yaml"
        conf.write_text(TINY_YAML)
        out = tmp_path / "out"
        assert main(["run", "--config", str(conf), "--sweep", "snr", "--out", str(out), "--dat"]) == 0
        rows = list(csv.reader(open(out / "snr.csv")))
        assert tuple(rows[0]) == CSV_HEADER and len(rows) == 1 + 2 * 4 * 2
        assert (out / "snr_summary.csv").exists() and (out / "snr.dat").exists()
        assert "reduction" in capsys.readouterr().out

    def test_seed_override(self, tmp_path):
        conf = tmp_path / "c.yaml"
        conf.write_text(TINY_YAML)
        assert main(["run", "--config", str(conf), "--sweep", "snr", "--seeds", "1", "--out", str(tmp_path)]) == 0
        assert len(open(tmp_path / "snr.csv").readlines()) == 1 + 2 * 4

    def test_config_error_exit(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("ofdm: {nope: 1}")
        assert main(["run", "--config", str(bad), "--sweep", "snr", "--out", str(tmp_path)]) == 2
        assert main(["run", "--config", str(tmp_path / "missing.yaml"), "--sweep", "snr", "--out", str(tmp_path)]) == 2
        assert main(["run", "--sweep", "snr", "--seeds", "0", "--out", str(tmp_path)]) == 2

    def test_failed_cells_exit(self, tmp_path, monkeypatch):
        conf = tmp_path / "c.yaml"
        conf.write_text(TINY_YAML)

        def broken(*args, **kw):
            raise DegenerateDivisionError("faded")

        monkeypatch.setattr(harness, "run_receiver", broken)
        assert main(["run", "--config", str(conf), "--sweep", "snr", "--out", str(tmp_path)]) == 3
        assert "nan" in open(tmp_path / "snr.csv").read()

    def test_check(self, capsys):
        assert main(["check"]) == 0
        assert capsys.readouterr().out.count("PASS") == 6

    def test_trace(self, tmp_path):
        conf = tmp_path / "c.yaml"
        conf.write_text(TINY_YAML)
        out = tmp_path / "trace.csv"
        assert main(["trace", "--config", str(conf), "--alpha", "3e-4", "--out", str(out)]) == 0
        rows = list(csv.reader(open(out)))
        assert rows[0] == ["iter", "f_e", "E_dB"] and rows[1][0] == "0"
        E = [float(r[2]) for r in rows[1:]]
        assert all(b <= a for a, b in zip(E, E[1:]))
