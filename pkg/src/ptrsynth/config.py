"""Global synthesis configuration and shared constants."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

TWO_PI = 6.283185307179586

#: conventional V8 firing sequence over one 720-degree cycle
V8_FIRING_ORDER = (1, 5, 4, 8, 6, 3, 7, 2)

DEFAULT_DTYPE = torch.float64


@dataclass
class SynthConfig:
    """Rates, sizes and ranges shared across the synthesis pipeline."""

    sample_rate: float = 16000.0
    model_rate: float = 125.0
    harmonics: int = 96
    noise_bands: int = 16
    noise_block: int = 2048
    noise_f_lo: float = 60.0
    gate_epsilon: float = 0.02
    delay_min: int = 16
    delay_max: int = 400
    n_cylinders: int = 8
    cycle_degrees: float = 720.0
    timing_limit_deg: float = 40.0
    firing_order: tuple = V8_FIRING_ORDER
    stream_block: int = 512

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2.0

    @property
    def timing_limit_rad(self) -> float:
        """Timing bound as engine-cycle phase (crank degrees over a 720-degree cycle)."""
        return self.timing_limit_deg / self.cycle_degrees * TWO_PI


class PtrError(Exception):
    """Base error for this package."""


class InvalidInputError(PtrError):
    """Malformed or out-of-contract input data."""


class ParameterRangeError(PtrError):
    """A parameter is outside its documented range."""


class UnstableFilterError(PtrError):
    """Filter poles too close to (or outside) the unit circle."""
