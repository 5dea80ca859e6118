"""Monte-Carlo sweep driver, CSV reports and summaries.

Every (sweep value, seed) cell is independent. A cell draws its data from
``SeedSequence(seed).spawn(2)[0]`` and its noise from ``[1]``, so different
sweep values of one seed share the data and noise realizations (common
random numbers), and any single cell can be reproduced alone.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import ChannelSpec, apply_channel
from .errors import ConfigurationError, IcilabError
from .estimator import EstimatorConfig
from .receivers import ReceiverKind, ReceiverSettings, frame_mse, run_receiver
from .rxfront import front_end
from .signal_model import OfdmConfig
from .txchain import random_frame

log = logging.getLogger(__name__)

SWEEPS = ("snr", "alpha", "carriers", "fe")
FRAME_SYMBOLS = 2**13
CSV_HEADER = ("sweep", "value", "receiver", "seed", "mse_db", "fe_hat", "iters")
RECEIVER_ORDER = {kind: i for i, kind in enumerate(ReceiverKind)}


@dataclass(frozen=True)
class ExperimentSpec:
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    channel: ChannelSpec = field(default_factory=lambda: ChannelSpec(doppler_factor=2.5e-4, snr_db=30.0))
    receivers: tuple = tuple(ReceiverKind)
    sweep: str = "snr"
    values: tuple = (0.0, 10.0, 20.0, 30.0)
    seeds: tuple = tuple(range(10))
    settings: ReceiverSettings = field(default_factory=ReceiverSettings)
    coarse_alpha: float = 0.0
    output: str | None = None

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise ConfigurationError(f"sweep must be one of {SWEEPS}, got {self.sweep!r}")
        if not self.values:
            raise ConfigurationError("sweep needs at least one value")
        if not self.seeds:
            raise ConfigurationError("need at least one seed")
        kinds = tuple(k if isinstance(k, ReceiverKind) else ReceiverKind.parse(k) for k in self.receivers)
        object.__setattr__(self, "receivers", kinds)
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError("seeds must be distinct")
        if self.sweep == "carriers":
            for v in self.values:
                K = int(v)
                if K != v or K < 2 or FRAME_SYMBOLS % K:
                    raise ConfigurationError(f"carrier count {v} must divide {FRAME_SYMBOLS}")
        if self.sweep == "fe" and any(v <= 0 for v in self.values):
            raise ConfigurationError("fiducial offsets must be positive")

    def cell_config(self, value: float):
        """(OfdmConfig, ChannelSpec) for one sweep value."""
        cfg, ch = self.ofdm, self.channel
        if self.sweep == "snr":
            ch = replace(ch, snr_db=value)
        elif self.sweep == "alpha":
            ch = replace(ch, doppler_factor=value, path_doppler=None)
        elif self.sweep == "carriers":
            K = int(value)
            cfg = replace(cfg, carrier_count=K, block_count=FRAME_SYMBOLS // K,
                          pilot_count=min(cfg.pilot_count, K - 1))
        return cfg, ch


@dataclass(frozen=True)
class Row:
    sweep: str
    value: float
    receiver: ReceiverKind
    seed: int
    mse_db: float
    fe_hat: float = math.nan
    iters: int = 0
    error: str | None = None

    def key(self):
        return (self.value, RECEIVER_ORDER[self.receiver], self.seed)

    def csv_fields(self):
        return (
            self.sweep,
            f"{self.value:.10g}",
            self.receiver.value,
            str(self.seed),
            _fmt(self.mse_db, 6),
            _fmt(self.fe_hat, 6),
            str(self.iters),
        )


def _fmt(x: float, digits: int) -> str:
    return "nan" if math.isnan(x) else f"{x:.{digits}f}"


@dataclass(frozen=True)
class MseReport:
    rows: tuple

    @property
    def failed(self) -> tuple:
        return tuple(r for r in self.rows if r.error is not None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(CSV_HEADER)
        for row in self.rows:
            out.writerow(row.csv_fields())
        return buf.getvalue()

    def write(self, path):
        Path(path).write_text(self.to_csv())

    @classmethod
    def read_csv(cls, path) -> "MseReport":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != CSV_HEADER:
                raise ConfigurationError(f"unexpected CSV header {header}")
            for sweep, value, rx, seed, mse, fe, iters in reader:
                rows.append(Row(sweep, float(value), ReceiverKind.parse(rx), int(seed),
                                float(mse), float(fe), int(iters)))
        return cls(tuple(sorted(rows, key=Row.key)))


def _cell_seeds(seed: int):
    data_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(data_ss), noise_ss


def run_cell(spec: ExperimentSpec, value: float, seed: int) -> list:
    """All receiver rows for one (value, seed) cell; failures become marked rows."""
    cfg, ch = spec.cell_config(value)
    data_rng, noise_ss = _cell_seeds(seed)
    try:
        frame = random_frame(cfg, data_rng)
        noise_seed = int(noise_ss.generate_state(1, np.uint64)[0])
        received = apply_channel(frame.baseband, replace(ch, seed=noise_seed), cfg)
        rx = front_end(received, cfg, coarse_alpha=spec.coarse_alpha,
                       true_alpha=ch.doppler_factor)
    except IcilabError as exc:
        return [Row(spec.sweep, value, k, seed, math.nan, error=str(exc)) for k in spec.receivers]

    pilots = frame.data[0, : cfg.pilot_count]
    rows = []
    for kind in spec.receivers:
        fe = value if spec.sweep == "fe" and kind is ReceiverKind.F_FFT else None
        try:
            out = run_receiver(kind, rx, pilots, cfg, spec.settings, fiducial=fe)
            rows.append(Row(spec.sweep, value, kind, seed, frame_mse(out, frame.data, cfg),
                            out.fe_hat, out.iterations))
        except (IcilabError, FloatingPointError) as exc:
            log.warning("cell value=%g seed=%d receiver=%s failed: %s", value, seed, kind.value, exc)
            rows.append(Row(spec.sweep, value, kind, seed, math.nan, error=str(exc)))
    return rows


def _run_cell_args(args):
    return run_cell(*args)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> MseReport:
    """Run every (value, seed) cell, optionally in worker processes.

    Rows are sorted before the report is assembled, so the result does not
    depend on the order in which cells finish.
    """
    cells = [(spec, v, s) for v in spec.values for s in spec.seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_cell_args, cells))
    else:
        chunks = [run_cell(*c) for c in cells]
    rows = sorted((r for chunk in chunks for r in chunk), key=Row.key)
    report = MseReport(tuple(rows))
    if spec.output:
        report.write(spec.output)
    return report


@dataclass(frozen=True)
class SummaryRow:
    value: float
    receiver: ReceiverKind
    median_db: float
    mean_db: float
    count: int


def summarize(report: MseReport):
    """Median/mean over seeds per (value, receiver) and A-FFT vs F-FFT reduction.

    Returns (summary rows, {value: reduction}). The reduction is
    1 - mse_lin(AFFT) / mse_lin(FFFT) on the median dB values, and is only
    present for values that have both receivers.
    """
    if not report.rows:
        raise ConfigurationError("empty report")
    groups = {}
    for r in report.rows:
        if r.error is None and not math.isnan(r.mse_db):
            groups.setdefault((r.value, r.receiver), []).append(r.mse_db)
    table = []
    for (value, kind), vals in sorted(groups.items(), key=lambda kv: (kv[0][0], RECEIVER_ORDER[kv[0][1]])):
        arr = np.asarray(vals)
        table.append(SummaryRow(value, kind, float(np.median(arr)), float(np.mean(arr)), arr.size))
    medians = {(s.value, s.receiver): s.median_db for s in table}
    reductions = {}
    for value in sorted({s.value for s in table}):
        a = medians.get((value, ReceiverKind.A_FFT))
        f = medians.get((value, ReceiverKind.F_FFT))
        if a is not None and f is not None:
            reductions[value] = relative_reduction(a, f)
    return table, reductions


def relative_reduction(mse_a_db: float, mse_f_db: float) -> float:
    """1 - mse_lin(a) / mse_lin(f) for two dB values."""
    return 1.0 - 10 ** ((mse_a_db - mse_f_db) / 10)


def summary_csv(table, reductions) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(("value", "receiver", "median_db", "mean_db", "count", "afft_vs_ffft_reduction"))
    for s in table:
        red = reductions.get(s.value) if s.receiver is ReceiverKind.A_FFT else None
        out.writerow((f"{s.value:.10g}", s.receiver.value, f"{s.median_db:.6f}", f"{s.mean_db:.6f}",
                      s.count, "" if red is None else f"{red:.6f}"))
    return buf.getvalue()


def gnuplot_dat(table) -> str:
    """Whitespace table: value followed by the median dB of each receiver."""
    kinds = sorted({s.receiver for s in table}, key=RECEIVER_ORDER.get)
    med = {(s.value, s.receiver): s.median_db for s in table}
    lines = ["# value " + " ".join(k.value for k in kinds)]
    for value in sorted({s.value for s in table}):
        cols = [_fmt(med.get((value, k), math.nan), 6) for k in kinds]
        lines.append(f"{value:.10g} " + " ".join(cols))
    return "\n".join(lines) + "\n"
