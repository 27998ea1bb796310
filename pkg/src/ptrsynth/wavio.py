"""Mono WAV read/write (RIFF float32 or PCM16)."""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .config import InvalidInputError


def write_wav(path, audio: np.ndarray, sample_rate: int = 16000,
              pcm16: bool = False) -> None:
    audio = np.asarray(audio, dtype=np.float64)
    if pcm16:
        data = np.clip(np.round(audio * 32767.0), -32768, 32767).astype(np.int16)
    else:
        data = audio.astype(np.float32)
    wavfile.write(path, int(sample_rate), data)


def read_wav(path, target_rate: int = 16000) -> np.ndarray:
    """Read as float64 mono at ``target_rate`` (polyphase resample if needed)."""
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise InvalidInputError(f"{path}: not a readable WAV file ({exc})") from exc
    data = np.asarray(data)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        data = data / 32768.0
    elif data.dtype == np.int32:
        data = data / 2147483648.0
    elif data.dtype == np.uint8:
        data = (data.astype(np.float64) - 128.0) / 128.0
    data = data.astype(np.float64)
    if rate != target_rate:
        from math import gcd
        g = gcd(int(rate), int(target_rate))
        data = resample_poly(data, target_rate // g, rate // g)
    return data
