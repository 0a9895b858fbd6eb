"""BPSK over AWGN (and a bit-flip channel for exactness tests), with
counter-based noise streams.

SNR is the information-bit budget gamma = Eb/N0; with unit symbol
energy and code rate R the per-dimension noise variance is

    sigma^2 = 1 / (2 R gamma)

so every codeword is normalized by the rate of the code it came from.

Noise is drawn from Philox streams keyed by (master_seed, point_index),
with frame f owning a fixed span of counter space. Any batching of
frames therefore produces bit-identical noise: frame 173 sees the same
samples whether it is simulated alone, in a batch of 500, or on a
different worker count.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

U64_PER_COUNTER = 4


@dataclass(frozen=True)
class SnrPoint:
    """One point on an Eb/N0 grid, stored in dB."""
    gamma_db: float

    @property
    def gamma(self):
        return 10.0 ** (self.gamma_db / 10.0)


@dataclass(frozen=True)
class ChannelParams:
    """Rate-normalized AWGN channel at a fixed Eb/N0."""
    rate: float
    gamma_db: float

    def __post_init__(self):
        if not 0.0 < self.rate < 1.0:
            raise ValueError(f"rate {self.rate} outside (0, 1)")

    @property
    def gamma(self):
        return 10.0 ** (self.gamma_db / 10.0)

    @property
    def sigma2(self):
        return noise_sigma2(self.rate, self.gamma_db)

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)


def noise_sigma2(rate, gamma_db):
    """Noise variance for unit-energy BPSK at Eb/N0 = gamma_db."""
    return 1.0 / (2.0 * rate * 10.0 ** (gamma_db / 10.0))


def modulate_bpsk(bits):
    """Map bits to unit-energy symbols, 0 -> +1 and 1 -> -1."""
    bits = np.asarray(bits)
    return 1.0 - 2.0 * bits.astype(np.float64)


def transmit_awgn(symbols, params, rng):
    """Add white Gaussian noise drawn from an ad-hoc generator."""
    symbols = np.asarray(symbols, dtype=np.float64)
    return symbols + params.sigma * rng.standard_normal(symbols.shape)


def channel_llr(received, params):
    """LLR of each received sample, positive meaning bit 0."""
    return 2.0 * np.asarray(received, dtype=np.float64) / params.sigma2


def frame_words(master_seed, point_index, frame_start, frame_count,
                words_per_frame):
    """Raw 64-bit words for a contiguous run of frames.

    Frame f owns ceil(words_per_frame / 4) counter blocks starting at
    f times that many; each block yields four words and the first
    words_per_frame of the span are returned, [frame_count,
    words_per_frame] uint64. Because ownership is by frame index, any
    contiguous batching of frames sees identical words.
    """
    ticks = -(-words_per_frame // U64_PER_COUNTER)
    key = np.array([master_seed, point_index], dtype=np.uint64)
    bg = Philox(counter=int(frame_start) * ticks, key=key)
    raw = bg.random_raw(frame_count * ticks * U64_PER_COUNTER)
    raw = raw.reshape(frame_count, ticks * U64_PER_COUNTER)
    return raw[:, :words_per_frame]


def words_to_uniforms(words):
    """Map raw words to uniforms on (0, 1), one per word."""
    return (words >> np.uint64(11)) * 2.0 ** -53 + 2.0 ** -54


def words_to_normals(words):
    """Map raw words to standard normals via the inverse Gaussian CDF."""
    return ndtri(words_to_uniforms(words))


def words_to_bits(words):
    """Map raw words to fair bits, one per word."""
    return (words & np.uint64(1)).astype(np.uint8)


def frame_uniforms(master_seed, point_index, frame_start, frame_count,
                   words_per_frame):
    """Per-frame uniforms on (0, 1), batch-invariant."""
    return words_to_uniforms(frame_words(
        master_seed, point_index, frame_start, frame_count,
        words_per_frame))


def frame_normals(master_seed, point_index, frame_start, frame_count,
                  words_per_frame):
    """Per-frame standard normals, batch-invariant."""
    return words_to_normals(frame_words(
        master_seed, point_index, frame_start, frame_count,
        words_per_frame))


def awgn_llrs(codewords, params, normals):
    """Channel LLRs for [B, n] codeword bits with given noise samples."""
    y = modulate_bpsk(codewords) + params.sigma * normals
    return 2.0 * y / params.sigma2


def bsc_llrs(codewords, crossover, uniforms):
    """Channel LLRs after a memoryless bit-flip channel.

    Each bit is flipped with probability crossover; the LLR magnitude
    is log((1-p)/p) with sign carrying the received bit.
    """
    if not 0.0 < crossover < 0.5:
        raise ValueError(f"crossover {crossover} outside (0, 0.5)")
    flips = uniforms < crossover
    received = np.asarray(codewords, dtype=np.uint8) ^ flips
    mag = math.log((1.0 - crossover) / crossover)
    return (1.0 - 2.0 * received.astype(np.float64)) * mag
