"""Self-contained oracle checks behind ``icilab check``.

Each check compares a fast implementation with an independent reference
(direct summation, finite differences, exact loopback) on small random
cases and returns the worst observed discrepancy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import ChannelSpec, apply_channel
from .demod import conv_fft, fractional_bank, partial_bank, time_weighted_bank
from .estimator import fe_gradient, pilot_mse, weight_gradient
from .receivers import ReceiverKind, frame_mse, run_receiver
from .rxfront import front_end
from .signal_model import OfdmConfig, differential_decode, differential_encode, random_psk
from .txchain import modulate_block, modulate_block_direct, random_frame

SMALL = OfdmConfig(carrier_count=64, block_count=2, pilot_count=20)


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    limit: float

    @property
    def passed(self) -> bool:
        return self.value <= self.limit


def direct_bank(v, cfg: OfdmConfig, offsets, weight=None) -> np.ndarray:
    """O(K * Nsamp) reference: mean_n w_n v_n exp(-j 2 pi (k df + o) n / f_s)."""
    n = np.arange(v.size)
    t = n / cfg.sample_rate
    vv = v if weight is None else weight * v
    out = np.empty((cfg.carrier_count, len(offsets)), dtype=complex)
    for j, o in enumerate(offsets):
        freqs = np.arange(cfg.carrier_count) * cfg.carrier_spacing + o
        out[:, j] = np.exp(-2j * np.pi * np.outer(freqs, t)) @ vv / v.size
    return out


def _rel(a, b) -> float:
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def _random_block(rng, cfg):
    n = cfg.samples_per_block
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def check_banks(rng, cases: int = 5) -> float:
    cfg = SMALL
    worst = 0.0
    df = cfg.carrier_spacing
    for _ in range(cases):
        v = _random_block(rng, cfg)
        f_e = df * rng.uniform(0.5, 2.0)
        offs = [a * f_e / 2 for a in (-1, 0, 1)]
        t = np.arange(v.size) / cfg.sample_rate
        worst = max(
            worst,
            _rel(conv_fft(v, cfg), direct_bank(v, cfg, [0.0])[:, 0]),
            _rel(fractional_bank(v, 1, f_e, cfg).values, direct_bank(v, cfg, offs)),
            _rel(time_weighted_bank(v, 1, f_e, cfg).values, direct_bank(v, cfg, offs, weight=t)),
        )
        edges = np.round(np.arange(4) * v.size / 3).astype(int)
        ref = np.stack(
            [direct_bank(np.where((np.arange(v.size) >= edges[i]) & (np.arange(v.size) < edges[i + 1]), v, 0),
                         cfg, [0.0])[:, 0] for i in range(3)], axis=1)
        worst = max(worst, _rel(partial_bank(v, 3, cfg).values, ref))
    return worst


def check_modulation(rng) -> float:
    d = random_psk(rng, SMALL.carrier_count, 4)
    return _rel(modulate_block(d, SMALL).samples, modulate_block_direct(d, SMALL))


def check_differential(rng) -> float:
    b = random_psk(rng, 1023, 4)
    return float(np.max(np.abs(differential_decode(differential_encode(b, 1.0)) - b)))


def _grad_case(rng):
    cfg = SMALL
    frame = random_frame(cfg, rng)
    ch = ChannelSpec(doppler_factor=float(rng.uniform(1e-4, 4e-4)), snr_db=25.0,
                     seed=int(rng.integers(1 << 31)))
    rx = front_end(apply_channel(frame.baseband, ch, cfg), cfg)
    b = frame.data[0, : cfg.pilot_count]
    W = 0.2 * (rng.standard_normal((cfg.pilot_count + 1, 3)) + 1j * rng.standard_normal((cfg.pilot_count + 1, 3)))
    W[:, 1] += 1.0
    return cfg, rx.block(0), b, W


def check_fe_gradient(rng, cases: int = 5) -> float:
    worst = 0.0
    for _ in range(cases):
        cfg, blk, b, W = _grad_case(rng)
        f = cfg.carrier_spacing * rng.uniform(0.8, 1.6)
        gamma = fe_gradient(fractional_bank(blk, 1, f, cfg), time_weighted_bank(blk, 1, f, cfg), W, b, 1)
        h = 1e-4 * cfg.carrier_spacing

        def E(ff):
            return pilot_mse(fractional_bank(blk, 1, ff, cfg), W, b)

        fd = (E(f + h) - E(f - h)) / (2 * h)
        worst = max(worst, abs(-2 * math.pi * gamma - fd) / abs(fd))
    return worst


def check_weight_gradient(rng, cases: int = 5) -> float:
    worst = 0.0
    for _ in range(cases):
        cfg, blk, b, W = _grad_case(rng)
        z = fractional_bank(blk, 1, cfg.carrier_spacing, cfg)
        p = int(rng.integers(0, b.size))
        g = weight_gradient(z, W, b, p)
        h = 1e-6
        fd = np.zeros(3, dtype=complex)
        for m in range(3):
            for unit, part in ((1.0, "re"), (1j, "im")):
                Wp, Wm = W.copy(), W.copy()
                Wp[p + 1, m] += unit * h
                Wm[p + 1, m] -= unit * h
                d = (pilot_mse(z, Wp, b) - pilot_mse(z, Wm, b)) / (2 * h)
                fd[m] += d if part == "re" else 1j * d
        worst = max(worst, float(np.max(np.abs(-2 * g - fd)) / np.max(np.abs(fd))))
    return worst


def check_loopback(rng) -> float:
    cfg = OfdmConfig(carrier_count=256, block_count=2, pilot_count=50)
    frame = random_frame(cfg, rng)
    ch = ChannelSpec(paths=((1.0, 0.0),))
    rx = front_end(apply_channel(frame.baseband, ch, cfg), cfg)
    pilots = frame.data[0, : cfg.pilot_count]
    return max(frame_mse(run_receiver(k, rx, pilots, cfg), frame.data, cfg) for k in ReceiverKind)


CHECKS: list[tuple[str, Callable, float]] = [
    ("modulation vs direct sum", check_modulation, 1e-9),
    ("differential round trip", check_differential, 1e-12),
    ("banks vs direct sum", check_banks, 1e-9),
    ("f_e gradient vs finite difference", check_fe_gradient, 1e-3),
    ("weight gradient vs finite difference", check_weight_gradient, 1e-3),
    ("loopback MSE of all receivers (dB)", check_loopback, -100.0),
]


def run_checks(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [CheckResult(name, fn(rng), limit) for name, fn, limit in CHECKS]
