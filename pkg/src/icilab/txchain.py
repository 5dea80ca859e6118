"""Transmitter: per-block OFDM modulation, cyclic prefix, optional passband.

Scaling: ``modulate_block`` puts a unit-amplitude complex tone on every
carrier, so the mean sample power of a block equals ``sum(|d_k|**2)``
(= K for PSK) and ``conv_fft`` of the block returns ``d`` exactly.

Baseband carrier k sits at ``k * df``; the passband mixing frequency is the
lowest carrier ``f_0 = f_c - B/2 + df/2`` so that carrier k lands on
``f_0 + k * df`` and the K carriers are symmetric about ``f_c``.

Frame dump format (little-endian):

    offset  size  field
    0       8     magic  b"ICILAB01"
    8       8     uint64 K
    16      8     uint64 N
    24      8     float64 f_s
    32      ...   float64 pairs (re, im) of the baseband frame
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InputShapeError
from .signal_model import ComplexBlock, OfdmConfig, differential_encode, random_psk

FRAME_MAGIC = b"ICILAB01"
_HEADER = struct.Struct("<8sQQd")


@dataclass(frozen=True)
class Frame:
    """A transmitted frame: raw symbols, encoded symbols and samples."""

    data: np.ndarray      # (N, K-1) raw symbols b_1..b_{K-1} per block
    symbols: np.ndarray   # (N, K) differentially encoded d_0..d_{K-1}
    baseband: np.ndarray  # CP-prefixed blocks back to back
    cfg: OfdmConfig

    @property
    def block_length(self) -> int:
        return self.cfg.samples_per_block + self.cfg.guard_samples


def modulate_block(d, cfg: OfdmConfig) -> ComplexBlock:
    """samples[n] = sum_k d_k exp(j 2 pi k df n / f_s) over one block."""
    d = np.asarray(d, dtype=complex)
    if d.shape != (cfg.carrier_count,):
        raise InputShapeError(f"expected {cfg.carrier_count} symbols, got {d.shape}")
    n = cfg.samples_per_block
    spectrum = np.zeros(n, dtype=complex)
    spectrum[: cfg.carrier_count] = d
    return ComplexBlock.for_config(np.fft.ifft(spectrum) * n, cfg)


def modulate_block_direct(d, cfg: OfdmConfig) -> np.ndarray:
    """O(K * Nsamp) reference summation for ``modulate_block``."""
    d = np.asarray(d, dtype=complex)
    n = np.arange(cfg.samples_per_block)
    k = np.arange(cfg.carrier_count)
    phase = 2j * np.pi * cfg.carrier_spacing / cfg.sample_rate * np.outer(n, k)
    return np.exp(phase) @ d


def add_guard_interval(block: ComplexBlock, cfg: OfdmConfig) -> ComplexBlock:
    """Prepend a cyclic prefix of ceil(T_g * f_s) samples.

    A guard longer than the block (small K) continues the periodic
    extension further back.
    """
    g = cfg.guard_samples
    x = block.samples
    out = np.concatenate([x[np.arange(-g, 0) % x.size], x]) if g else x.copy()
    return ComplexBlock(samples=out, t0=block.t0 - g * block.dt, dt=block.dt)


def build_frame(data, cfg: OfdmConfig) -> Frame:
    """Differentially encode and modulate an (N, K-1) array of raw symbols."""
    data = np.asarray(data, dtype=complex)
    if data.shape != (cfg.block_count, cfg.carrier_count - 1):
        raise InputShapeError(
            f"data must be ({cfg.block_count}, {cfg.carrier_count - 1}), got {data.shape}"
        )
    symbols = np.stack([differential_encode(row, cfg.reference_symbol) for row in data])
    pieces = [add_guard_interval(modulate_block(d, cfg), cfg).samples for d in symbols]
    return Frame(data=data, symbols=symbols, baseband=np.concatenate(pieces), cfg=cfg)


def random_frame(cfg: OfdmConfig, rng: np.random.Generator) -> Frame:
    data = random_psk(rng, cfg.block_count * (cfg.carrier_count - 1), cfg.psk_order)
    return build_frame(data.reshape(cfg.block_count, cfg.carrier_count - 1), cfg)


def _check_nyquist(cfg: OfdmConfig, carrier: float):
    top = max(cfg.center_freq + cfg.bandwidth / 2, carrier + cfg.bandwidth)
    if top >= cfg.sample_rate / 2:
        raise ConfigurationError(
            f"passband edge {top:.1f} Hz violates Nyquist at f_s={cfg.sample_rate:.1f} Hz"
        )


def upconvert(baseband, cfg: OfdmConfig, carrier: float | None = None) -> np.ndarray:
    """x[n] = Re{ s_b[n] exp(j 2 pi f_mix n / f_s) }, f_mix defaulting to f_0."""
    f_mix = cfg.lowest_freq if carrier is None else carrier
    _check_nyquist(cfg, f_mix)
    s = np.asarray(baseband, dtype=complex)
    n = np.arange(s.size)
    return np.real(s * np.exp(2j * np.pi * f_mix * n / cfg.sample_rate))


def downconvert(passband, cfg: OfdmConfig, carrier: float | None = None) -> np.ndarray:
    """Mix to baseband and apply an ideal (FFT-domain) low-pass filter."""
    f_mix = cfg.lowest_freq if carrier is None else carrier
    x = np.asarray(passband, dtype=float)
    n = np.arange(x.size)
    mixed = 2 * x * np.exp(-2j * np.pi * f_mix * n / cfg.sample_rate)
    spec = np.fft.fft(mixed)
    freqs = np.fft.fftfreq(x.size, d=1.0 / cfg.sample_rate)
    spec[np.abs(freqs) >= f_mix] = 0
    return np.fft.ifft(spec)


def write_frame_dump(path, baseband, cfg: OfdmConfig):
    s = np.asarray(baseband, dtype=np.complex128)
    header = _HEADER.pack(FRAME_MAGIC, cfg.carrier_count, cfg.block_count, float(cfg.sample_rate))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(s.view("<f8").tobytes())


def read_frame_dump(path):
    """Return (K, N, f_s, baseband) from a frame dump."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise InputShapeError("file too short for a frame dump header")
    magic, K, N, fs = _HEADER.unpack_from(raw)
    if magic != FRAME_MAGIC:
        raise InputShapeError(f"bad magic {magic!r}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size % 2:
        raise InputShapeError("odd number of float64 values in frame dump")
    return int(K), int(N), float(fs), body.view(np.complex128).copy()
