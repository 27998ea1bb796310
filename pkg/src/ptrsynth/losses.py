"""Spectral reconstruction losses.

Multi-resolution STFT loss (spectral convergence, linear magnitude,
log magnitude, spectral energy per resolution) plus an engine-order
harmonic loss that compares log energies along RPM-derived harmonic
tracks of a high-resolution spectrogram.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import torch

from .config import DEFAULT_DTYPE, InvalidInputError

MRSTFT_SIZES = (32768, 16384, 8192, 4096, 2048, 1024, 512, 256, 128, 64, 32)
LOG_FLOOR = 1e-5
HARMONIC_FFT = 65536
HARMONIC_WIN = 16384
HARMONIC_HOP = 256
HARMONIC_ORDERS = 48
HARMONIC_BIN_HALF_WIDTH = 3


@dataclass
class LossBreakdown:
    """Total loss with per-component detail.

    ``stft_per_resolution`` rows are
    ``(fft_size, spectral_convergence, linear_mag, log_mag, energy)``.
    """

    total: float
    stft: float
    harmonic: float
    stft_per_resolution: List[Tuple[int, float, float, float, float]]
    dropped_resolutions: List[int] = field(default_factory=list)


def _magnitude_stft(y: torch.Tensor, n_fft: int, hop: int,
                    win_length: Optional[int] = None) -> torch.Tensor:
    win_length = win_length or n_fft
    window = torch.hann_window(win_length, periodic=True, dtype=y.dtype)
    spec = torch.stft(y, n_fft=n_fft, hop_length=hop, win_length=win_length,
                      window=window, center=False, return_complex=True)
    return spec.abs()


def _zero_padded_stft(y: torch.Tensor, n_fft: int, hop: int, win: int) -> torch.Tensor:
    """Magnitude spectrogram with the analysis window zero-padded to ``n_fft``.

    torch.stft refuses n_fft beyond the signal length, so frame explicitly.
    """
    frames = y.unfold(-1, win, hop)                   # (frames, win)
    window = torch.hann_window(win, periodic=True, dtype=y.dtype)
    return torch.fft.rfft(frames * window, n=n_fft).abs().transpose(-1, -2)


def _as_tensor(x):
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(np.asarray(x, dtype=np.float64), dtype=DEFAULT_DTYPE)


def mrstft_loss(y, y_hat, sizes=MRSTFT_SIZES) -> LossBreakdown:
    """Multi-resolution STFT loss, mean over resolutions of four equally
    weighted scale-invariant terms.

    Resolutions longer than the signal are dropped and recorded.
    """
    y, y_hat = _as_tensor(y), _as_tensor(y_hat)
    if y.shape != y_hat.shape:
        raise InvalidInputError("series must share length")
    rows, dropped, terms = [], [], []
    for n_fft in sizes:
        if y.shape[-1] < n_fft:
            dropped.append(n_fft)
            continue
        hop = n_fft // 4
        s = _magnitude_stft(y, n_fft, hop)
        s_hat = _magnitude_stft(y_hat, n_fft, hop)
        diff = s - s_hat
        sc = torch.linalg.norm(diff) / torch.linalg.norm(s).clamp_min(1e-12)
        lin = diff.abs().mean() / s.abs().mean().clamp_min(1e-12)
        logm = (torch.log(s + LOG_FLOOR) - torch.log(s_hat + LOG_FLOOR)).abs().mean()
        e, e_hat = (s ** 2).sum(), (s_hat ** 2).sum()
        energy = (e - e_hat).abs() / e.clamp_min(1e-12)
        terms.append(sc + lin + logm + energy)
        rows.append((n_fft, sc, lin, logm, energy))
    if not terms:
        raise InvalidInputError("signal shorter than every STFT resolution")
    total = sum(terms) / len(terms)
    return LossBreakdown(
        total=total, stft=total, harmonic=total * 0.0,
        stft_per_resolution=rows, dropped_resolutions=dropped,
    )


def harmonic_track_bins(rpm: np.ndarray, sample_rate: float, n_frames: int,
                        n_fft: int = HARMONIC_FFT, win: int = HARMONIC_WIN,
                        hop: int = HARMONIC_HOP, n_orders: int = HARMONIC_ORDERS,
                        half_width: int = HARMONIC_BIN_HALF_WIDTH):
    """Per-frame engine-order bin indices and validity mask.

    Returns ``(bins, valid)`` with shapes (frames, orders, 2*half_width+1)
    and (frames, orders); a track is valid when f0 > 0 and the order sits
    below Nyquist.
    """
    rpm = np.asarray(rpm, dtype=np.float64)
    f0 = np.empty(n_frames)
    for t in range(n_frames):
        f0[t] = rpm[t * hop: t * hop + win].mean() / 120.0
    orders = np.arange(1, n_orders + 1)
    freq = f0[:, None] * orders[None, :]
    center = np.round(freq * n_fft / sample_rate).astype(np.int64)
    offsets = np.arange(-half_width, half_width + 1)
    bins = center[:, :, None] + offsets[None, None, :]
    n_bins = n_fft // 2 + 1
    valid = (f0[:, None] > 0) & (freq <= sample_rate / 2.0)
    bins = np.clip(bins, 0, n_bins - 1)
    return bins, valid


def harmonic_loss(y, y_hat, rpm, sample_rate: float = 16000.0,
                  n_fft: int = HARMONIC_FFT, win: int = HARMONIC_WIN,
                  hop: int = HARMONIC_HOP, n_orders: int = HARMONIC_ORDERS,
                  half_width: int = HARMONIC_BIN_HALF_WIDTH) -> torch.Tensor:
    """Mean absolute log-energy difference along engine-order tracks."""
    y, y_hat = _as_tensor(y), _as_tensor(y_hat)
    if y.shape != y_hat.shape:
        raise InvalidInputError("series must share length")
    if y.shape[-1] < win:
        raise InvalidInputError(f"signal shorter than analysis window ({win})")
    s = _zero_padded_stft(y, n_fft, hop, win)        # (bins, frames)
    s_hat = _zero_padded_stft(y_hat, n_fft, hop, win)
    n_frames = s.shape[-1]
    bins, valid = harmonic_track_bins(rpm, sample_rate, n_frames, n_fft, win,
                                      hop, n_orders, half_width)
    if not valid.any():
        return y.sum() * 0.0
    bins_t = torch.from_numpy(bins)                  # (frames, orders, width)
    frame_idx = torch.arange(n_frames).view(-1, 1, 1).expand_as(bins_t)
    e = s[bins_t.reshape(-1), frame_idx.reshape(-1)].reshape(bins_t.shape).sum(dim=-1)
    e_hat = s_hat[bins_t.reshape(-1), frame_idx.reshape(-1)].reshape(bins_t.shape).sum(dim=-1)
    diff = (torch.log(e + LOG_FLOOR) - torch.log(e_hat + LOG_FLOOR)).abs()
    mask = torch.from_numpy(valid).to(diff.dtype)
    return (diff * mask).sum() / mask.sum()


def loss_breakdown(y, y_hat, rpm, sample_rate: float = 16000.0,
                   harmonic_weight: float = 1.0,
                   sizes=MRSTFT_SIZES) -> LossBreakdown:
    """Combined objective: mean multi-resolution STFT loss plus weighted
    harmonic loss."""
    stft_bd = mrstft_loss(y, y_hat, sizes)
    harm = harmonic_loss(y, y_hat, rpm, sample_rate)
    return LossBreakdown(
        total=stft_bd.stft + harmonic_weight * harm,
        stft=stft_bd.stft, harmonic=harm,
        stft_per_resolution=stft_bd.stft_per_resolution,
        dropped_resolutions=stft_bd.dropped_resolutions,
    )


def detach_breakdown(bd: LossBreakdown) -> LossBreakdown:
    """Convert tensor fields to plain floats (for traces and reports)."""
    f = lambda v: float(v.detach()) if isinstance(v, torch.Tensor) else float(v)
    return LossBreakdown(
        total=f(bd.total), stft=f(bd.stft), harmonic=f(bd.harmonic),
        stft_per_resolution=[tuple([r[0]] + [f(v) for v in r[1:]])
                             for r in bd.stft_per_resolution],
        dropped_resolutions=list(bd.dropped_resolutions),
    )
