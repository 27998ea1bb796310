"""Eight-cylinder assembly and stochastic augmentation.

Cylinders fire evenly across one 720-degree cycle in the conventional V8
sequence; their pulses are distorted by turbulence, overlaid with
cycle-synchronous intake pulsation and steady overrun airflow noise from
an ERB-spaced cosine filterbank, then summed into left/right banks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import torch

from .config import TWO_PI, DEFAULT_DTYPE, InvalidInputError
from .pulse import pressure_envelope, _as_tensor


@dataclass
class EngineConfig:
    """Cylinder layout: firing sequence and bank assignment."""

    firing_order: tuple = (1, 5, 4, 8, 6, 3, 7, 2)
    n_cylinders: int = 8
    cycle_degrees: float = 720.0

    def __post_init__(self):
        self.firing_order = tuple(int(c) for c in self.firing_order)
        if sorted(self.firing_order) != list(range(1, self.n_cylinders + 1)):
            raise InvalidInputError(
                f"firing order must be a permutation of 1..{self.n_cylinders}")

    def bank(self, cylinder: int) -> str:
        return "left" if cylinder <= self.n_cylinders // 2 else "right"


@dataclass
class NoiseParams:
    """Noise-bank gains and the intake/turbulence shaping parameters.

    ``band_gains`` is frame-rate, shape (B, F); the rest are scalars.
    """

    band_gains: torch.Tensor
    turb_depth: torch.Tensor
    intake_alpha: torch.Tensor
    intake_beta: torch.Tensor
    seed: int = 0

    def __post_init__(self):
        if self.band_gains.dim() != 2:
            raise InvalidInputError("band_gains must have shape (bands, frames)")
        if torch.any(self.band_gains < 0):
            raise InvalidInputError("band_gains must be non-negative")

    @property
    def n_bands(self) -> int:
        return self.band_gains.shape[0]


def firing_offsets(config: EngineConfig) -> np.ndarray:
    """Engine-cycle phase offset per cylinder index (1-based order -> array)."""
    n = config.n_cylinders
    offsets = np.zeros(n)
    for j, cyl in enumerate(config.firing_order):
        offsets[cyl - 1] = -j * TWO_PI / n
    return offsets


def hz_to_erb(f):
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(f, dtype=np.float64))


def erb_to_hz(e):
    return (10.0 ** (np.asarray(e, dtype=np.float64) / 21.4) - 1.0) / 0.00437


@lru_cache(maxsize=8)
def cosine_filterbank(n_bands: int, n_freqs: int, sample_rate: float,
                      f_lo: float = 60.0) -> np.ndarray:
    """Amplitude-complementary cos^2 windows on the ERB scale, shape (B, n_freqs).

    Band centers span ``f_lo`` to Nyquist; the outer bands plateau toward DC
    and Nyquist so the windows sum to exactly one everywhere (flat bank).
    """
    freqs = np.linspace(0.0, sample_rate / 2.0, n_freqs)
    erb = hz_to_erb(freqs)
    centers = np.linspace(hz_to_erb(f_lo), hz_to_erb(sample_rate / 2.0), n_bands)
    bank = np.zeros((n_bands, n_freqs))
    for b in range(n_bands):
        w = np.zeros(n_freqs)
        if b == 0:
            w[erb <= centers[0]] = 1.0
        else:
            lo, hi = centers[b - 1], centers[b]
            seg = (erb > lo) & (erb <= hi)
            w[seg] = np.sin(0.5 * np.pi * (erb[seg] - lo) / (hi - lo)) ** 2
        if b == n_bands - 1:
            w[erb > centers[-1]] = 1.0
        else:
            lo, hi = centers[b], centers[b + 1]
            seg = (erb > lo) & (erb <= hi)
            w[seg] = np.cos(0.5 * np.pi * (erb[seg] - lo) / (hi - lo)) ** 2
        bank[b] = w
    return bank


def _white_noise(seed: int, start: int, length: int) -> np.ndarray:
    """Counter-based Gaussian noise: sample ``n`` is a pure function of seed and n."""
    offset = 2 * start
    # Philox.advance moves the 128-bit counter: one step per four doubles
    bit = np.random.Philox(key=seed).advance(offset // 4)
    burn = offset % 4
    u = np.random.Generator(bit).random(burn + 2 * length)[burn:]
    u1, u2 = u[0::2], u[1::2]
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(TWO_PI * u2)


def noise_bands(seed: int, length: int, sample_rate: float, n_bands: int = 16,
                block: int = 2048, f_lo: float = 60.0, start: int = 0) -> np.ndarray:
    """Filtered-noise band signals, shape (B, length), starting at absolute
    sample ``start``.

    White noise is windowed (Hann, 50% overlap-add) per fixed 2048-sample
    grid blocks and split through the cosine filterbank in the FFT domain;
    the grid is indexed by absolute position so any [start, start+length)
    view of a stream is reproducible.
    """
    if length <= 0:
        raise InvalidInputError("length must be positive")
    hop = block // 2
    win = np.hanning(block + 1)[:block]
    fbank = cosine_filterbank(n_bands, block // 2 + 1, float(sample_rate), f_lo)
    first = (start - block + hop) // hop if start >= block - hop else -1
    first = max(first, -1)
    out = np.zeros((n_bands, length))
    m = first
    while True:
        b0 = m * hop
        if b0 >= start + length:
            break
        if b0 + block > 0 and b0 < start + length:
            # noise segment may start before sample 0; pre-stream samples are zero
            seg = np.zeros(block)
            lo = max(b0, 0)
            seg[lo - b0: block] = _white_noise(0x9E3779B9 ^ seed, lo, b0 + block - lo)
            spec = np.fft.rfft(seg * win)
            bands = np.fft.irfft(spec[None, :] * fbank, n=block, axis=1)
            o_lo = max(b0, start)
            o_hi = min(b0 + block, start + length)
            if o_hi > o_lo:
                out[:, o_lo - start: o_hi - start] += bands[:, o_lo - b0: o_hi - b0]
        m += 1
    return out


def erb_noise_bank(band_gains: torch.Tensor, seed: int, length: int,
                   sample_rate: float, block: int = 2048, f_lo: float = 60.0,
                   start: int = 0, bands: np.ndarray = None) -> torch.Tensor:
    """Gain-weighted noise-bank output ``eta(t)``, shape (length,).

    ``band_gains`` must already be at audio rate, shape (B, length).
    Precomputed ``bands`` may be passed to avoid regenerating noise.
    """
    gains = _as_tensor(band_gains)
    if bands is None:
        bands = noise_bands(seed, length, sample_rate, gains.shape[0], block, f_lo, start)
    eta_b = torch.as_tensor(bands, dtype=gains.dtype)
    if gains.shape != eta_b.shape:
        raise InvalidInputError("band_gains must be audio rate, shape (B, length)")
    return (gains * eta_b).sum(dim=0)


def augment_pulse(pulse: torch.Tensor, eta: torch.Tensor, g_thr, g_dfco,
                  engine_phase, intake_alpha, intake_beta,
                  turb_depth) -> torch.Tensor:
    """Stochastic augmentation of a pulse (or bank-sum) signal.

    Multiplies by turbulence distortion and adds intake-pulsation and
    overrun-airflow noise, all drawn from the shared bank signal ``eta``.
    """
    pulse, eta = _as_tensor(pulse), _as_tensor(eta)
    g_thr, g_dfco = _as_tensor(g_thr), _as_tensor(g_dfco)
    engine_phase = _as_tensor(engine_phase)
    if not (pulse.shape == eta.shape == g_thr.shape == g_dfco.shape == engine_phase.shape):
        raise InvalidInputError("augment_pulse series must share length")
    intake_env = pressure_envelope(engine_phase, intake_alpha, intake_beta)
    turb = 1.0 + turb_depth * g_thr * eta
    return pulse * turb + eta * (intake_env * g_thr + g_dfco)


def mix_banks(pulses) -> tuple:
    """Sum cylinders 1-4 into the left bank and 5-8 into the right."""
    if len(pulses) != 8:
        raise InvalidInputError("expected eight cylinder signals")
    length = pulses[0].shape[-1]
    if any(p.shape[-1] != length for p in pulses):
        raise InvalidInputError("cylinder signals must share length")
    left = pulses[0] + pulses[1] + pulses[2] + pulses[3]
    right = pulses[4] + pulses[5] + pulses[6] + pulses[7]
    return left, right
