"""Idealized receiver front end: coarse Doppler removal and block slicing.

Frame timing is known. Each FFT window starts ``backoff`` samples inside the
cyclic prefix, so the timing drift that uncompensated Doppler accumulates
over a frame does not pull the next block into the window. The offset is
kept as the block time base ``t0 = -backoff / f_s`` and the demodulators
reference their phases to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import resample_doppler
from .errors import FramingError
from .signal_model import ComplexBlock, OfdmConfig


@dataclass(frozen=True)
class ReceivedFrame:
    blocks: np.ndarray          # (N, K * f_s / B), guard stripped
    residual_doppler: float     # diagnostics only, receivers never read it
    cfg: OfdmConfig
    t0: float = 0.0             # window start relative to the nominal useful interval

    def __len__(self):
        return self.blocks.shape[0]

    def block(self, m: int) -> ComplexBlock:
        return ComplexBlock.for_config(self.blocks[m], self.cfg, t0=self.t0)


def front_end(
    received,
    cfg: OfdmConfig,
    coarse_alpha: float = 0.0,
    true_alpha: float = math.nan,
    backoff: int | None = None,
) -> ReceivedFrame:
    """Undo ``coarse_alpha`` of Doppler, then cut the frame into N blocks."""
    y = np.asarray(received, dtype=complex)
    nsamp = cfg.samples_per_block
    ncp = cfg.guard_samples
    stride = nsamp + ncp
    if y.size != cfg.block_count * stride:
        raise FramingError(
            f"expected {cfg.block_count} blocks of {stride} samples "
            f"({cfg.block_count * stride}), got {y.size}"
        )
    if backoff is None:
        backoff = ncp // 4
    if not 0 <= backoff <= ncp:
        raise FramingError("window backoff must lie inside the guard interval")

    if coarse_alpha != 0:
        y = resample_doppler(y, -coarse_alpha / (1.0 + coarse_alpha))
        t = np.arange(y.size) / cfg.sample_rate
        rate = cfg.lowest_freq * coarse_alpha / (1.0 + coarse_alpha)
        y = y * np.exp(-2j * np.pi * rate * t)
        if y.size < cfg.block_count * stride:
            y = np.concatenate([y, np.zeros(cfg.block_count * stride - y.size, complex)])

    blocks = np.empty((cfg.block_count, nsamp), dtype=complex)
    for m in range(cfg.block_count):
        start = m * stride + ncp - backoff
        blocks[m] = y[start : start + nsamp]
    residual = (true_alpha - coarse_alpha) / (1.0 + coarse_alpha)
    return ReceivedFrame(
        blocks=blocks, residual_doppler=residual, cfg=cfg, t0=-backoff / cfg.sample_rate
    )
