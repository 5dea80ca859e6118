"""Linear demodulator banks and the per-carrier combiner.

All integrals over the block are left Riemann sums on the 1/f_s grid scaled
by 1/Nsamp, so a clean block returns its carrier symbols with unit gain and
the time-weighted bank is the exact derivative companion of the fractional
bank (d z_{k,a} / d f_e = -j 2 pi a/(A+1) * z~_{k,a}).

Partial-FFT segmentation: segment i covers samples
[round(i*Nsamp/I), round((i+1)*Nsamp/I)), so segment lengths differ by at
most one sample when I does not divide Nsamp and the segment outputs always
sum to the conventional FFT output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputShapeError
from .signal_model import ComplexBlock, OfdmConfig

KINDS = ("conventional", "partial", "fractional", "adaptive", "time_weighted")


@dataclass(frozen=True)
class DemodBank:
    """K x M matrix of demodulator outputs; column ``a + A`` holds offset a."""

    values: np.ndarray
    A: int | None
    f_e: float | None
    kind: str

    @property
    def taps(self) -> int:
        return self.values.shape[1]

    @property
    def beta(self) -> np.ndarray:
        """Tap index vector [-A, ..., A]."""
        return np.arange(-self.A, self.A + 1, dtype=float)


def _samples(block, cfg: OfdmConfig):
    """Return (samples, t0); plain arrays start at t0 = 0."""
    if isinstance(block, ComplexBlock):
        v, t0 = block.samples, block.t0
    else:
        v, t0 = np.asarray(block, dtype=complex), 0.0
    if v.shape != (cfg.samples_per_block,):
        raise InputShapeError(f"block must hold {cfg.samples_per_block} samples, got {v.shape}")
    return v, t0


def _fft_carriers(v, cfg: OfdmConfig, offset: float = 0.0, t0: float = 0.0) -> np.ndarray:
    """(1/Nsamp) sum_n v[n] exp(-j 2 pi (k df + offset)(t0 + n/f_s)), k < K."""
    K = cfg.carrier_count
    n = np.arange(v.size)
    if offset:
        v = v * np.exp(-2j * np.pi * offset * n / cfg.sample_rate)
    out = np.fft.fft(v)[:K] / v.size
    if t0:
        out = out * np.exp(-2j * np.pi * (np.arange(K) * cfg.carrier_spacing + offset) * t0)
    return out


def conv_fft(block, cfg: OfdmConfig) -> np.ndarray:
    """Conventional FFT demodulation, output[k] = mean_n v[n] e^{-j 2 pi k df t_n}."""
    v, t0 = _samples(block, cfg)
    return _fft_carriers(v, cfg, 0.0, t0)


def _shifted_bank(v, t0, A, f_e, cfg):
    cols = [_fft_carriers(v, cfg, (a / (A + 1)) * f_e, t0) for a in range(-A, A + 1)]
    return np.stack(cols, axis=1)


def fractional_bank(block, A: int, f_e: float, cfg: OfdmConfig) -> DemodBank:
    """z_{k,a} at frequencies k*df + a*f_e/(A+1), a = -A..A."""
    if A < 0:
        raise ValueError("A must be >= 0")
    v, t0 = _samples(block, cfg)
    kind = "fractional" if np.isclose(f_e, cfg.carrier_spacing, rtol=1e-12) else "adaptive"
    return DemodBank(_shifted_bank(v, t0, A, f_e, cfg), A, float(f_e), kind)


def time_weighted_bank(block, A: int, f_e: float, cfg: OfdmConfig) -> DemodBank:
    """Same bank applied to t_n * v[n] with t_n = t0 + n / f_s."""
    v, t0 = _samples(block, cfg)
    t = t0 + np.arange(v.size) / cfg.sample_rate
    return DemodBank(_shifted_bank(t * v, t0, A, f_e, cfg), A, float(f_e), "time_weighted")


def partial_bank(block, I: int, cfg: OfdmConfig) -> DemodBank:
    """Conventional FFT of I contiguous time segments, one column per segment."""
    if I < 1:
        raise ValueError("I must be >= 1")
    v, t0 = _samples(block, cfg)
    edges = np.round(np.arange(I + 1) * v.size / I).astype(int)
    cols = []
    for i in range(I):
        seg = np.zeros_like(v)
        seg[edges[i] : edges[i + 1]] = v[edges[i] : edges[i + 1]]
        cols.append(_fft_carriers(seg, cfg, 0.0, t0))
    return DemodBank(np.stack(cols, axis=1), None, None, "partial")


def ffft_outputs(block, I: int, cfg: OfdmConfig) -> np.ndarray:
    """Classical F-FFT outputs y_{k,i} at (k + i/I) df, i = 0..I-1 (K x I)."""
    v, t0 = _samples(block, cfg)
    cols = [_fft_carriers(v, cfg, (i / I) * cfg.carrier_spacing, t0) for i in range(I)]
    return np.stack(cols, axis=1)


def ffft_vectors(y: np.ndarray) -> np.ndarray:
    """Stack [y_{k-1,1..I-1}, y_{k,0..I-1}] per carrier (K x 2I-1).

    Entries borrowed from carrier -1 are zero.
    """
    K, I = y.shape
    prev = np.zeros((K, I - 1), dtype=complex)
    prev[1:] = y[:-1, 1:]
    return np.concatenate([prev, y], axis=1)


def impulse_weights(K: int, M: int) -> np.ndarray:
    """K x M combiner weights with a 1 on the centre tap."""
    w = np.zeros((K, M), dtype=complex)
    w[:, M // 2] = 1.0
    return w


def combine(bank, w) -> np.ndarray:
    """x_k = w_k^H z_k for every carrier; ``w`` may be K x M or a single M-vector."""
    z = bank.values if isinstance(bank, DemodBank) else np.asarray(bank)
    w = np.asarray(w, dtype=complex)
    if w.ndim == 1:
        w = np.broadcast_to(w, z.shape)
    if w.shape != z.shape:
        raise InputShapeError(f"weights {w.shape} do not match bank {z.shape}")
    return np.einsum("km,km->k", w.conj(), z)
