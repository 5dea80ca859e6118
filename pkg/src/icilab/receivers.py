"""End-to-end receivers: Conv-FFT, P-FFT, F-FFT and A-FFT.

The three combining receivers share one weight schedule: pilot training on
block 0 followed by decision-directed tracking over the whole frame. They
differ only in the bank feeding the combiner:

* P-FFT: ``taps`` contiguous time segments of the block.
* F-FFT: fractional bank with A = (taps - 1) / 2 at f_e = df.
* A-FFT: the same bank at the f_e estimated on the block-0 pilots.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .demod import conv_fft, fractional_bank, partial_bank
from .errors import ConfigurationError, InputShapeError
from .estimator import (
    EstimatorConfig,
    adapt_weights_frame,
    estimate_fiducial_offset,
    fit_pilot_weights,
)
from .rxfront import ReceivedFrame
from .signal_model import OfdmConfig, differential_decode

MSE_FLOOR_DB = -150.0


class ReceiverKind(enum.Enum):
    CONV_FFT = "ConvFFT"
    P_FFT = "PFFT"
    F_FFT = "FFFT"
    A_FFT = "AFFT"

    @classmethod
    def parse(cls, name: str) -> "ReceiverKind":
        for kind in cls:
            if name.lower().replace("-", "").replace("_", "") == kind.value.lower():
                return kind
        raise ConfigurationError(f"unknown receiver {name!r}")


@dataclass(frozen=True)
class ReceiverSettings:
    taps: int = 3
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)

    def __post_init__(self):
        if self.taps < 1 or self.taps % 2 == 0:
            raise ConfigurationError("taps must be a positive odd integer")

    @property
    def A(self) -> int:
        return (self.taps - 1) // 2


@dataclass(frozen=True)
class ReceiverOutput:
    kind: ReceiverKind
    bhat: np.ndarray        # (N, K-1) soft differential estimates
    outputs: np.ndarray     # (N, K) combiner outputs x_k
    fe_hat: float = math.nan
    iterations: int = 0
    mse_trace: tuple = ()
    skipped_updates: int = 0

    def errors(self, data) -> np.ndarray:
        return np.asarray(data) - self.bhat


def _banks(kind, blocks, cfg, settings, f_e):
    if kind is ReceiverKind.P_FFT:
        return np.stack([partial_bank(b, settings.taps, cfg).values for b in blocks])
    return np.stack([fractional_bank(b, settings.A, f_e, cfg).values for b in blocks])


def run_receiver(
    kind: ReceiverKind,
    frame: ReceivedFrame,
    pilots,
    cfg: OfdmConfig,
    settings: ReceiverSettings = ReceiverSettings(),
    fiducial: float | None = None,
) -> ReceiverOutput:
    """Demodulate every block of ``frame``; ``pilots`` are b_1..b_P of block 0.

    ``fiducial`` replaces df as the fixed f_e of the F-FFT bank (used to
    sweep the F-FFT over f_e); other receivers ignore it.
    """
    blocks = [frame.block(m) for m in range(len(frame))]
    pilots = np.asarray(pilots, dtype=complex)
    if pilots.size != cfg.pilot_count:
        raise InputShapeError(f"expected {cfg.pilot_count} pilots, got {pilots.size}")

    if kind is ReceiverKind.CONV_FFT:
        x = np.stack([conv_fft(b, cfg) for b in blocks])
        bhat = np.stack([differential_decode(row) for row in x])
        return ReceiverOutput(kind, bhat, x)

    est = settings.estimator
    if kind is ReceiverKind.A_FFT and settings.A > 0:
        est_cfg = EstimatorConfig(**{**est.__dict__, "taps_A": settings.A})
        result = estimate_fiducial_offset(blocks[0], pilots, cfg, est_cfg)
        f_e, W, iters, trace = result.f_e, result.weights, result.iterations, result.mse_trace
        Z = _banks(kind, blocks, cfg, settings, f_e)
    else:
        f_e = cfg.carrier_spacing
        if kind is ReceiverKind.F_FFT and fiducial is not None:
            if fiducial <= 0:
                raise ConfigurationError("fiducial offset must be positive")
            f_e = float(fiducial)
        Z = _banks(kind, blocks, cfg, settings, f_e)
        W, E = fit_pilot_weights(Z[0], pilots, est)
        iters, trace = 1, (E,)
        if kind is ReceiverKind.P_FFT:
            f_e = math.nan

    _, x, skipped = adapt_weights_frame(Z, pilots, W[-1], est, cfg.psk_order)
    bhat = np.stack([differential_decode(row) for row in x])
    return ReceiverOutput(kind, bhat, x, float(f_e), iters, tuple(trace), skipped)


def data_mask(cfg: OfdmConfig) -> np.ndarray:
    """(N, K-1) mask that is False on the block-0 pilot positions."""
    mask = np.ones((cfg.block_count, cfg.carrier_count - 1), dtype=bool)
    mask[0, : cfg.pilot_count] = False
    return mask


def detection_mse(bhat, b_true, mask=None) -> float:
    """10 log10 mean |b - bhat|^2, floored at MSE_FLOOR_DB."""
    bhat = np.asarray(bhat)
    b_true = np.asarray(b_true)
    if bhat.shape != b_true.shape:
        raise InputShapeError(f"shape mismatch {bhat.shape} vs {b_true.shape}")
    err = np.abs(b_true - bhat) ** 2
    if mask is not None:
        err = err[np.asarray(mask, dtype=bool)]
    if err.size == 0:
        raise InputShapeError("no symbols to score")
    m = float(np.mean(err))
    if m <= 0:
        return MSE_FLOOR_DB
    return max(MSE_FLOOR_DB, 10 * math.log10(m))


def frame_mse(output: ReceiverOutput, data, cfg: OfdmConfig) -> float:
    """Detection MSE over the data carriers of a frame (pilots excluded)."""
    return detection_mse(output.bhat, data, data_mask(cfg))
