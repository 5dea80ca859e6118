"""Waveform configuration, PSK mapping and frequency-domain differential coding.

Bit-to-symbol map (Gray, fixed):

    Q=2   bit 0 -> +1,  bit 1 -> -1
    Q=4   00 -> e^{j pi/4}, 01 -> e^{j 3pi/4}, 11 -> e^{j 5pi/4}, 10 -> e^{j 7pi/4}
    Q=8   Gray word g -> exp(j 2 pi m / 8) where m is the binary index of g

Bits are consumed MSB first within each log2(Q)-bit word.

Carrier layout: carrier 0 carries the known reference symbol ``c`` and data or
pilot symbols live on carriers 1..K-1. Pilots occupy carriers 1..P of the
first block of a frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DegenerateDivisionError, InputShapeError

PSK_ORDERS = (2, 4, 8)


@dataclass(frozen=True)
class OfdmConfig:
    """All waveform constants of one differential OFDM link.

    Defaults are the desk configuration: 32 kHz centre, 12 kHz band sampled at
    192 kHz, 16 ms guard, QPSK, 1024 carriers and 8 blocks (K*N = 2**13).
    """

    carrier_count: int = 1024
    block_count: int = 8
    bandwidth: float = 12_000.0
    center_freq: float = 32_000.0
    sample_rate: float = 192_000.0
    guard_interval: float = 0.016
    psk_order: int = 4
    pilot_count: int = 200
    reference_symbol: complex = 1.0 + 0.0j

    def __post_init__(self):
        if self.carrier_count < 2 or self.block_count < 1:
            raise ConfigurationError("need at least 2 carriers and 1 block")
        if self.bandwidth <= 0 or self.sample_rate <= 0:
            raise ConfigurationError("bandwidth and sample_rate must be positive")
        ratio = self.sample_rate / self.bandwidth
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ConfigurationError(
                f"sample_rate {self.sample_rate} is not an integer multiple of bandwidth {self.bandwidth}"
            )
        if self.psk_order not in PSK_ORDERS:
            raise ConfigurationError(f"psk_order must be one of {PSK_ORDERS}")
        if not 2 <= self.pilot_count <= self.carrier_count - 1:
            raise ConfigurationError("pilot_count must satisfy 2 <= P <= K-1")
        if abs(abs(self.reference_symbol) - 1.0) > 1e-12:
            raise ConfigurationError("reference symbol must have unit modulus")
        if self.guard_interval < 0:
            raise ConfigurationError("guard_interval must be >= 0")

    @property
    def carrier_spacing(self) -> float:
        return self.bandwidth / self.carrier_count

    @property
    def block_duration(self) -> float:
        return 1.0 / self.carrier_spacing

    @property
    def oversampling(self) -> int:
        return int(round(self.sample_rate / self.bandwidth))

    @property
    def samples_per_block(self) -> int:
        return self.carrier_count * self.oversampling

    @property
    def guard_samples(self) -> int:
        # tolerance keeps 0.016 * 192000 = 3072 from rounding up to 3073
        return int(math.ceil(self.guard_interval * self.sample_rate - 1e-9))

    @property
    def lowest_freq(self) -> float:
        """Passband frequency of carrier 0; carriers sit symmetrically about f_c."""
        return self.center_freq - self.bandwidth / 2 + self.carrier_spacing / 2

    @property
    def pilot_carriers(self) -> np.ndarray:
        return np.arange(1, self.pilot_count + 1)

    def carrier_freqs(self) -> np.ndarray:
        return self.lowest_freq + self.carrier_spacing * np.arange(self.carrier_count)


@dataclass(frozen=True)
class ComplexBlock:
    """One block of complex baseband samples on the ``1/f_s`` grid."""

    samples: np.ndarray
    t0: float = 0.0
    dt: float = field(default=1.0 / 192_000.0)

    @property
    def duration(self) -> float:
        return self.dt * len(self.samples)

    @classmethod
    def for_config(cls, samples, cfg: OfdmConfig, t0: float = 0.0) -> "ComplexBlock":
        samples = np.asarray(samples, dtype=complex)
        if samples.shape != (cfg.samples_per_block,):
            raise InputShapeError(
                f"block must hold {cfg.samples_per_block} samples, got {samples.shape}"
            )
        return cls(samples=samples, t0=t0, dt=1.0 / cfg.sample_rate)


def constellation(Q: int) -> np.ndarray:
    """Q-PSK points ordered by increasing phase in [0, 2pi)."""
    if Q not in PSK_ORDERS:
        raise ConfigurationError(f"unsupported PSK order {Q}")
    offset = math.pi / 4 if Q == 4 else 0.0
    return np.exp(1j * (offset + 2 * np.pi * np.arange(Q) / Q))


def _gray_to_binary(g: np.ndarray) -> np.ndarray:
    m = g.copy()
    shift = g >> 1
    while np.any(shift):
        m ^= shift
        shift >>= 1
    return m


def map_bits_to_psk(bits, Q: int) -> np.ndarray:
    """Gray-map a bit array onto unit-modulus Q-PSK symbols."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    bps = int(round(math.log2(Q))) if Q in PSK_ORDERS else 0
    if bps == 0:
        raise ConfigurationError(f"unsupported PSK order {Q}")
    if bits.size % bps:
        raise InputShapeError(f"{bits.size} bits is not a multiple of log2(Q)={bps}")
    if np.any((bits != 0) & (bits != 1)):
        raise InputShapeError("bits must be 0 or 1")
    words = bits.reshape(-1, bps) @ (1 << np.arange(bps - 1, -1, -1))
    return constellation(Q)[_gray_to_binary(words)]


def psk_to_bits(symbols, Q: int) -> np.ndarray:
    """Inverse of :func:`map_bits_to_psk` for exact constellation points."""
    pts = constellation(Q)
    idx = np.argmin(np.abs(np.asarray(symbols)[:, None] - pts[None, :]), axis=1)
    bps = int(round(math.log2(Q)))
    gray = idx ^ (idx >> 1)
    return ((gray[:, None] >> np.arange(bps - 1, -1, -1)) & 1).ravel()


def random_psk(rng: np.random.Generator, n: int, Q: int) -> np.ndarray:
    bits = rng.integers(0, 2, size=n * int(round(math.log2(Q))))
    return map_bits_to_psk(bits, Q)


def differential_encode(b, c: complex = 1.0) -> np.ndarray:
    """Encode K-1 symbols b_1..b_{K-1} into K carrier symbols, ``d_0 = c``."""
    if abs(abs(c) - 1.0) > 1e-12:
        raise ConfigurationError("reference symbol must have unit modulus")
    b = np.asarray(b, dtype=complex)
    d = np.empty(b.size + 1, dtype=complex)
    d[0] = c
    d[1:] = c * np.cumprod(b)
    return d


def differential_decode(d) -> np.ndarray:
    """Return b_k = d_k / d_{k-1} for k = 1..K-1."""
    d = np.asarray(d, dtype=complex)
    if np.any(d[:-1] == 0):
        k = int(np.flatnonzero(d[:-1] == 0)[0])
        raise DegenerateDivisionError(f"carrier {k} is zero; cannot form ratio for carrier {k + 1}")
    return d[1:] / d[:-1]


def slice_psk(bhat, Q: int) -> np.ndarray:
    """Hard decision: nearest Q-PSK point, ties going to the smaller phase."""
    pts = constellation(Q)
    bhat = np.asarray(bhat, dtype=complex)
    dist = np.abs(bhat.reshape(-1, 1) - pts[None, :])
    # distances equal up to rounding count as a tie; argmax picks the first
    near = dist <= dist.min(axis=1, keepdims=True) + 1e-12
    return pts[np.argmax(near, axis=1)].reshape(bhat.shape)
