"""Per-cylinder pressure-pulse synthesis.

A bipolar sine stack with exponentially decaying harmonic weights, shaped
by a pressure-release envelope and a phase-bending exponent that models
temperature-dependent propagation speed inside the exhaust runner.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import torch

from .config import TWO_PI, DEFAULT_DTYPE, InvalidInputError, ParameterRangeError

log = logging.getLogger(__name__)


@dataclass
class PulseParams:
    """Constrained per-cylinder pulse parameters, frame rate, shape (n_cyl, F).

    ``lam`` is the harmonic decay rate, ``alpha``/``beta`` the envelope
    attack/decay rates, ``nu`` the phase-bend exponent in (0, 1], ``c`` the
    per-cylinder gain and ``timing`` the per-cylinder firing adjustment in
    radians of engine-cycle phase.
    """

    lam: torch.Tensor
    alpha: torch.Tensor
    beta: torch.Tensor
    nu: torch.Tensor
    c: torch.Tensor
    timing: torch.Tensor
    harmonics: int = 96

    def __post_init__(self):
        shape = self.lam.shape
        for name in ("alpha", "beta", "nu", "c"):
            if getattr(self, name).shape != shape:
                raise InvalidInputError("pulse parameter series must share shape")
        if self.harmonics < 1:
            raise InvalidInputError("harmonic count must be >= 1")
        if torch.any(self.nu <= 0) or torch.any(self.nu > 1):
            raise ParameterRangeError("nu must lie in (0, 1]")
        if torch.any(self.alpha <= 0):
            raise ParameterRangeError("alpha must be positive")

    @property
    def n_cylinders(self) -> int:
        return self.lam.shape[0]

    @property
    def n_frames(self) -> int:
        return self.lam.shape[-1]


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(x, dtype=DEFAULT_DTYPE)


def harmonic_decay_weights(lam, n_harmonics: int, f0, nyquist: float) -> torch.Tensor:
    """Normalized harmonic weights ``exp(-0.5 k lam)`` with Nyquist masking.

    ``lam`` and ``f0`` may be scalars or aligned series; the result has a
    leading harmonic axis of length ``n_harmonics``.  If every harmonic is
    masked the weights are all zero (silent pulse).
    """
    if n_harmonics < 1:
        raise InvalidInputError("n_harmonics must be >= 1")
    lam = _as_tensor(lam)
    f0 = _as_tensor(f0)
    k = torch.arange(1, n_harmonics + 1, dtype=lam.dtype)
    shape = [n_harmonics] + [1] * lam.dim()
    k = k.reshape(shape)
    w = torch.exp(-0.5 * k * lam.unsqueeze(0))
    mask = (k * f0.unsqueeze(0)) <= nyquist
    w = w * mask.to(w.dtype)
    total = w.sum(dim=0, keepdim=True)
    silent = total == 0
    if bool(silent.any()):
        log.warning("all harmonics Nyquist-masked; pulse is silent")
    return torch.where(silent, w, w / torch.where(silent, torch.ones_like(total), total))


def pressure_envelope(phi, alpha, beta) -> torch.Tensor:
    """Exhaust pressure-release envelope ``(1 - exp(-alpha phi)) exp(-beta phi)``."""
    phi, alpha, beta = _as_tensor(phi), _as_tensor(alpha), _as_tensor(beta)
    if torch.any(alpha <= 0):
        raise ParameterRangeError("alpha must be positive")
    if torch.any(beta < 0):
        raise ParameterRangeError("beta must be non-negative")
    return (1.0 - torch.exp(-alpha * phi)) * torch.exp(-beta * phi)


def phase_bend(phi, nu) -> torch.Tensor:
    """Bend firing-cycle phase: ``2 pi (phi / 2 pi)^nu``, endpoints fixed."""
    phi, nu = _as_tensor(phi), _as_tensor(nu)
    if torch.any(nu <= 0) or torch.any(nu > 1):
        raise ParameterRangeError("nu must lie in (0, 1]")
    base = torch.clamp(phi / TWO_PI, min=0.0)
    # keep the power's base strictly positive so the gradient with respect
    # to nu (x^nu log x) stays finite at the firing instant, then restore
    # the exact zero there
    bent = TWO_PI * torch.clamp(base, min=1e-12) ** nu
    return torch.where(base > 0, bent, torch.zeros_like(bent))


def pulse_waveform(cyl_phase, lam, alpha, beta, nu, c, f0,
                   n_harmonics: int = 96, nyquist: float = 8000.0) -> torch.Tensor:
    """Audio-rate pressure pulse for one cylinder.

    All arguments are aligned audio-rate series (torch tensors or arrays);
    envelope runs on the raw firing phase, the sine stack on the bent phase.
    """
    cyl_phase = _as_tensor(cyl_phase)
    series = [_as_tensor(x) for x in (lam, alpha, beta, nu, c, f0)]
    for s in series:
        if s.shape != cyl_phase.shape:
            raise InvalidInputError("pulse_waveform series must share length")
    lam, alpha, beta, nu, c, f0 = series
    weights = harmonic_decay_weights(lam, n_harmonics, f0, nyquist)
    k = torch.arange(1, n_harmonics + 1, dtype=cyl_phase.dtype).unsqueeze(-1)
    bent = phase_bend(cyl_phase, nu)
    stack = (weights * torch.sin(k * bent.unsqueeze(0))).sum(dim=0)
    return pressure_envelope(cyl_phase, alpha, beta) * c * stack
