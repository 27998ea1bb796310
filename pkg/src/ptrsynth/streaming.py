"""Block-wise streaming synthesis.

Carries phase, noise position and resonator filter state across blocks so
a streamed control feed produces exactly the audio an offline render of
the same trajectory would (static, frame-zero parameters).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import torch

from . import control, engine, pulse, resonator
from .config import DEFAULT_DTYPE, InvalidInputError, SynthConfig
from .params import ParamSet
from .render import RIGHT_BANK_SEED


class StreamSynth:
    """Incremental engine-sound synthesizer (single-owner per stream).

    Control points arrive via :meth:`push`; fixed-size audio blocks come
    out of :meth:`pull` as soon as the control feed covers them.  Uses the
    frame-zero value of every frame-rate parameter.
    """

    def __init__(self, params: ParamSet, cfg: SynthConfig = None,
                 block: Optional[int] = None):
        cfg = cfg or SynthConfig()
        self.cfg = cfg
        self.block = block or cfg.stream_block
        self.params = params
        p = params.pulse
        self._static = {
            name: getattr(p, name)[:, 0].detach().cpu().numpy()
            for name in ("lam", "alpha", "beta", "nu", "c")
        }
        self._timing = p.timing.detach().cpu().numpy()
        self._offsets = engine.firing_offsets(params.engine)
        self._gains0 = params.noise.band_gains[:, 0].detach().cpu().numpy()
        self._phase_state = control.PhaseState()
        self._sample_pos = 0
        self._times: List[float] = []
        self._rpm: List[float] = []
        self._torque: List[float] = []
        self._filters = {}
        for name in ("left", "right", "shared"):
            coeffs = resonator.resonator_coeffs(params.resonators[name], sample=False)
            self._filters[name] = [coeffs, None]

    def push(self, t: float, rpm: float, torque: float) -> None:
        if rpm < 0:
            raise InvalidInputError("rpm must be non-negative")
        if self._times and t <= self._times[-1]:
            raise InvalidInputError("control time stamps must increase")
        self._times.append(float(t))
        self._rpm.append(float(rpm))
        self._torque.append(float(torque))

    def available(self) -> int:
        """Number of complete blocks the control feed currently covers."""
        if not self._times:
            return 0
        covered = int(self._times[-1] * self.cfg.sample_rate)
        return max(0, (covered - self._sample_pos) // self.block)

    def pull(self) -> List[np.ndarray]:
        """Render every currently available block."""
        out = []
        for _ in range(self.available()):
            out.append(self._render_block(self.block))
        return out

    def flush(self, pad_to_block: bool = False) -> List[np.ndarray]:
        """Render the remaining covered samples after the feed ended."""
        out = self.pull()
        if not self._times:
            return out
        covered = int(self._times[-1] * self.cfg.sample_rate)
        rest = covered - self._sample_pos
        if rest > 0:
            if pad_to_block:
                rest = self.block
            out.append(self._render_block(rest))
        return out

    def _render_block(self, n: int) -> np.ndarray:
        cfg = self.cfg
        fs = cfg.sample_rate
        n0 = self._sample_pos
        t = (n0 + np.arange(n)) / fs
        rpm = np.interp(t, self._times, self._rpm)
        torque = np.interp(t, self._times, self._torque)
        _, wrapped = control.accumulate_phase(rpm, fs, self._phase_state)
        g_thr = control.throttle_gate(torque, cfg.gate_epsilon)
        g_dfco = control.dfco_gate(torque, cfg.gate_epsilon)
        f0 = rpm / 120.0

        with torch.no_grad():
            wrapped_t = torch.as_tensor(wrapped, dtype=DEFAULT_DTYPE)
            f0_t = torch.as_tensor(f0, dtype=DEFAULT_DTYPE)
            ones = torch.ones(n, dtype=DEFAULT_DTYPE)
            pulses = []
            for i in range(self.params.engine.n_cylinders):
                phi = torch.remainder(
                    wrapped_t + self._offsets[i] + self._timing[i], 6.283185307179586)
                pulses.append(pulse.pulse_waveform(
                    phi,
                    *(float(self._static[k][i]) * ones
                      for k in ("lam", "alpha", "beta", "nu", "c")),
                    f0_t, n_harmonics=self.params.pulse.harmonics,
                    nyquist=cfg.nyquist))
            left, right = engine.mix_banks(pulses)
            g_thr_t = torch.as_tensor(g_thr, dtype=DEFAULT_DTYPE)
            left = left * g_thr_t
            right = right * g_thr_t
            nz = self.params.noise
            gains = torch.as_tensor(
                np.repeat(self._gains0[:, None], n, axis=1), dtype=DEFAULT_DTYPE)
            banks = {}
            for sig, name, seed in ((left, "left", nz.seed),
                                    (right, "right", nz.seed ^ RIGHT_BANK_SEED)):
                bands = engine.noise_bands(seed, n, fs, nz.n_bands,
                                           cfg.noise_block, cfg.noise_f_lo,
                                           start=n0)
                eta = engine.erb_noise_bank(gains, seed, n, fs, bands=bands)
                banks[name] = engine.augment_pulse(
                    sig, eta, torch.as_tensor(g_thr, dtype=DEFAULT_DTYPE),
                    torch.as_tensor(g_dfco, dtype=DEFAULT_DTYPE), wrapped_t,
                    nz.intake_alpha, nz.intake_beta, nz.turb_depth
                ).cpu().numpy()

        mixed = 0.0
        for name in ("left", "right"):
            coeffs, zi = self._filters[name]
            y, zf = resonator.lfilter_apply(banks[name], coeffs, zi)
            self._filters[name][1] = zf
            mixed = mixed + y
        coeffs, zi = self._filters["shared"]
        y, zf = resonator.lfilter_apply(mixed, coeffs, zi)
        self._filters["shared"][1] = zf
        self._sample_pos += n
        return y
