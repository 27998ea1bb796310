"""Control-signal conditioning.

Turns RPM/torque trajectories into the frame-rate feature set and the
audio-rate conditioning signals (engine-cycle phase, per-cylinder phases,
throttle and overrun-fuel-cutoff gates) that drive synthesis.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np
import torch

from .config import TWO_PI, InvalidInputError, ParameterRangeError

FEATURE_NAMES = ("rpm", "torque", "d_rpm", "d_torque", "dd_rpm", "dd_torque")


@dataclass
class ControlTrajectory:
    """Uniformly sampled RPM/torque series at control rate."""

    rpm: np.ndarray
    torque: np.ndarray
    control_rate: float

    def __post_init__(self):
        self.rpm = np.asarray(self.rpm, dtype=np.float64)
        self.torque = np.asarray(self.torque, dtype=np.float64)
        if self.rpm.shape != self.torque.shape or self.rpm.ndim != 1:
            raise InvalidInputError("rpm and torque must be equal-length 1-D series")
        if self.control_rate <= 0:
            raise InvalidInputError("control_rate must be positive")
        if np.any(self.rpm < 0):
            raise InvalidInputError("rpm must be non-negative")

    @property
    def duration(self) -> float:
        return len(self.rpm) / self.control_rate

    @classmethod
    def from_csv(cls, path, control_rate: float = 125.0) -> "ControlTrajectory":
        """Load a ``time,rpm,torque`` CSV, resampling onto a uniform grid.

        Input time stamps may be irregular but must be strictly increasing.
        """
        times, rpms, torques = [], [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header[:3]] != ["time", "rpm", "torque"]:
                raise InvalidInputError(f"{path}: expected header 'time,rpm,torque'")
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) < 3:
                    raise InvalidInputError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
                try:
                    times.append(float(row[0]))
                    rpms.append(float(row[1]))
                    torques.append(float(row[2]))
                except ValueError as exc:
                    raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc
        if len(times) < 2:
            raise InvalidInputError(f"{path}: need at least 2 samples")
        t = np.asarray(times)
        if np.any(np.diff(t) <= 0):
            bad = int(np.argmax(np.diff(t) <= 0)) + 2
            raise InvalidInputError(f"{path}:{bad}: time stamps must be strictly increasing")
        n = max(2, int(round((t[-1] - t[0]) * control_rate)) + 1)
        grid = t[0] + np.arange(n) / control_rate
        grid = np.clip(grid, t[0], t[-1])
        return cls(
            rpm=np.interp(grid, t, np.asarray(rpms)),
            torque=np.interp(grid, t, np.asarray(torques)),
            control_rate=control_rate,
        )


@dataclass
class FeatureStats:
    """Per-feature mean/std used for (de)standardization."""

    mean: dict
    std: dict

    def __post_init__(self):
        for name in FEATURE_NAMES:
            if name not in self.mean or name not in self.std:
                raise InvalidInputError(f"stats missing feature '{name}'")
            if self.std[name] <= 0:
                raise InvalidInputError(f"std for '{name}' must be positive")


@dataclass
class ControlFeatures:
    """Frame-rate features: raw series, first and second differences."""

    rpm: np.ndarray
    torque: np.ndarray
    d_rpm: np.ndarray
    d_torque: np.ndarray
    dd_rpm: np.ndarray
    dd_torque: np.ndarray
    model_rate: float
    stats: Optional[FeatureStats] = None

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in FEATURE_NAMES}

    @property
    def n_frames(self) -> int:
        return len(self.rpm)


def frame_average(series: np.ndarray, in_rate: float, model_rate: float) -> np.ndarray:
    """Average a control-rate series over trailing frame windows at model rate."""
    n_frames = int(len(series) * model_rate / in_rate)
    if n_frames < 2:
        raise InvalidInputError("trajectory shorter than 2 frames at model rate")
    edges = np.floor(np.arange(n_frames + 1) * in_rate / model_rate).astype(np.int64)
    edges = np.minimum(edges, len(series))
    out = np.empty(n_frames)
    for i in range(n_frames):
        lo, hi = edges[i], max(edges[i + 1], edges[i] + 1)
        out[i] = series[lo:hi].mean()
    return out


def derive_deltas(traj: ControlTrajectory, model_rate: float = 125.0) -> ControlFeatures:
    """Frame-average rpm/torque and attach first/second differences.

    Differences are trailing (``d[t] = x[t] - x[t-1]``) with zero first
    elements.
    """
    rpm = frame_average(traj.rpm, traj.control_rate, model_rate)
    torque = frame_average(traj.torque, traj.control_rate, model_rate)

    def diff(x):
        d = np.empty_like(x)
        d[0] = 0.0
        d[1:] = x[1:] - x[:-1]
        return d

    d_rpm, d_torque = diff(rpm), diff(torque)
    return ControlFeatures(
        rpm=rpm, torque=torque,
        d_rpm=d_rpm, d_torque=d_torque,
        dd_rpm=diff(d_rpm), dd_torque=diff(d_torque),
        model_rate=model_rate,
    )


def compute_stats(features: ControlFeatures) -> FeatureStats:
    d = features.as_dict()
    return FeatureStats(
        mean={k: float(v.mean()) for k, v in d.items()},
        std={k: float(v.std()) for k, v in d.items()},
    )


def standardize(features: ControlFeatures, stats: FeatureStats) -> ControlFeatures:
    """Apply ``(x - mean) / std`` per feature; stats kept for inversion."""
    z = {
        name: (getattr(features, name) - stats.mean[name]) / stats.std[name]
        for name in FEATURE_NAMES
    }
    return ControlFeatures(model_rate=features.model_rate, stats=stats, **z)


def throttle_gate(torque: np.ndarray, epsilon: float = 0.02) -> np.ndarray:
    """Propulsion gate ``max(torque, eps)^0.7``."""
    if epsilon <= 0:
        raise ParameterRangeError("epsilon must be positive")
    return np.maximum(torque, epsilon) ** 0.7


def dfco_gate(torque: np.ndarray, epsilon: float = 0.02) -> np.ndarray:
    """Overrun fuel-cutoff gate ``max(-torque, eps)``."""
    if epsilon <= 0:
        raise ParameterRangeError("epsilon must be positive")
    return np.maximum(-torque, epsilon)


def upsample_to_audio(series: np.ndarray, series_rate: float, n_samples: int,
                      sample_rate: float) -> np.ndarray:
    """Linear interpolation between frame centers, edges held."""
    centers = (np.arange(len(series)) + 0.5) / series_rate
    t = np.arange(n_samples) / sample_rate
    return np.interp(t, centers, series)


def upsample_indices(n_frames: int, series_rate: float, n_samples: int,
                     sample_rate: float):
    """Gather indices/weights realizing :func:`upsample_to_audio` in torch.

    Returns ``(i0, i1, w)`` so the upsampled series is
    ``x[i0] * (1 - w) + x[i1] * w`` along the frame axis.
    """
    t = np.arange(n_samples) / sample_rate
    pos = t * series_rate - 0.5
    i0 = np.clip(np.floor(pos), 0, n_frames - 1).astype(np.int64)
    i1 = np.clip(i0 + 1, 0, n_frames - 1)
    w = np.clip(pos - np.floor(pos), 0.0, 1.0)
    w[pos < 0] = 0.0
    w[pos > n_frames - 1] = 0.0
    return (torch.from_numpy(i0), torch.from_numpy(i1),
            torch.from_numpy(w))


def upsample_frames_torch(x: torch.Tensor, idx) -> torch.Tensor:
    """Upsample frame-rate tensor ``(..., F)`` to audio rate ``(..., T)``."""
    i0, i1, w = idx
    w = w.to(x.dtype)
    return x[..., i0] * (1.0 - w) + x[..., i1] * w


@dataclass
class PhaseState:
    """Carry-over state for streaming phase accumulation (single-owner)."""

    unwrapped: float = 0.0
    wrapped: float = 0.0
    carry: float = 0.0
    prev_f0: float = 0.0
    started: bool = False


@numba.njit(cache=True)
def _phase_kernel(f0, sample_rate, unwrapped0, wrapped0, carry0, prev_f0, skip_first):
    n = f0.shape[0]
    unwrapped = np.empty(n)
    wrapped = np.empty(n)
    ph = unwrapped0
    w = wrapped0
    c = carry0
    last = prev_f0
    for i in range(n):
        if i == 0 and skip_first:
            unwrapped[0] = ph
            wrapped[0] = w
            last = f0[0]
            continue
        # trapezoidal step discretizes the phase integral of f0
        d = TWO_PI * 0.5 * (f0[i] + last) / sample_rate
        last = f0[i]
        ph += d
        # compensated (Kahan) accumulation keeps the wrapped copy drift-free
        y = d - c
        t = w + y
        c = (t - w) - y
        w = t
        while w >= TWO_PI:
            w -= TWO_PI
        unwrapped[i] = ph
        wrapped[i] = w
    return unwrapped, wrapped, ph, w, c


def accumulate_phase(rpm: np.ndarray, sample_rate: float,
                     state: Optional[PhaseState] = None):
    """Integrate the engine-cycle phase from audio-rate RPM.

    Returns ``(unwrapped, wrapped)`` phase series.  With no prior state the
    first sample is phase zero.  Passing a :class:`PhaseState` continues a
    stream; the state is updated in place.
    """
    rpm = np.asarray(rpm, dtype=np.float64)
    if np.any(rpm < 0):
        raise InvalidInputError("rpm must be non-negative")
    f0 = rpm / 120.0
    own_state = state if state is not None else PhaseState()
    unwrapped, wrapped, ph, w, c = _phase_kernel(
        f0, float(sample_rate),
        own_state.unwrapped, own_state.wrapped, own_state.carry,
        own_state.prev_f0, not own_state.started,
    )
    own_state.unwrapped, own_state.wrapped, own_state.carry = ph, w, c
    if len(f0):
        own_state.prev_f0 = float(f0[-1])
    own_state.started = True
    return unwrapped, wrapped


def cylinder_phases(phase, offsets, timing=None):
    """Per-cylinder firing-cycle phases wrapped into [0, 2*pi).

    ``phase`` may be a numpy array or torch tensor; ``timing`` is the
    learnable per-cylinder adjustment (torch tensor to keep gradients).
    """
    if isinstance(phase, torch.Tensor) or isinstance(timing, torch.Tensor):
        phase_t = phase if isinstance(phase, torch.Tensor) else torch.from_numpy(np.asarray(phase))
        offs = torch.as_tensor(np.asarray(offsets), dtype=phase_t.dtype)
        shifted = phase_t.unsqueeze(0) + offs.unsqueeze(1)
        if timing is not None:
            shifted = shifted + timing.to(shifted.dtype).unsqueeze(1)
        return torch.remainder(shifted, TWO_PI)
    offsets = np.asarray(offsets, dtype=np.float64)
    shifted = phase[None, :] + offsets[:, None]
    if timing is not None:
        shifted = shifted + np.asarray(timing)[:, None]
    return np.mod(shifted, TWO_PI)
