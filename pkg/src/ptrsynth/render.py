"""End-to-end rendering: control trajectory + parameters -> audio.

Two paths share all synthesis math: the differentiable path keeps the
resonators as truncated-IR convolutions (fit loop), the inference path
runs them as exact recursions (identical to streaming).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from torch.utils.checkpoint import checkpoint

from . import control, engine, pulse, resonator
from .config import DEFAULT_DTYPE, SynthConfig
from .params import ParamSet

#: xor'd into the noise seed for the right bank (independent realizations)
RIGHT_BANK_SEED = 0x5D2A


@dataclass
class Conditioning:
    """Audio-rate signals derived once per render from the trajectory."""

    rpm: np.ndarray
    torque: np.ndarray
    phase: np.ndarray
    phase_wrapped: np.ndarray
    f0: np.ndarray
    g_thr: np.ndarray
    g_dfco: np.ndarray
    sample_rate: float

    @property
    def n_samples(self) -> int:
        return len(self.rpm)


def condition(traj: control.ControlTrajectory, cfg: SynthConfig = None) -> Conditioning:
    cfg = cfg or SynthConfig()
    fs = cfg.sample_rate
    n = int(round(traj.duration * fs))
    t = np.arange(n) / fs
    t_ctrl = np.arange(len(traj.rpm)) / traj.control_rate
    rpm = np.interp(t, t_ctrl, traj.rpm)
    torque = np.interp(t, t_ctrl, traj.torque)
    phase, wrapped = control.accumulate_phase(rpm, fs)
    return Conditioning(
        rpm=rpm, torque=torque, phase=phase, phase_wrapped=wrapped,
        f0=rpm / 120.0,
        g_thr=control.throttle_gate(torque, cfg.gate_epsilon),
        g_dfco=control.dfco_gate(torque, cfg.gate_epsilon),
        sample_rate=fs,
    )


def _cylinder_block(phase_t, offset, timing, lam, alpha, beta, nu, c, f0_t,
                    n_harmonics, nyquist):
    phi = torch.remainder(phase_t + offset + timing, 6.283185307179586)
    return pulse.pulse_waveform(phi, lam, alpha, beta, nu, c, f0_t,
                                n_harmonics=n_harmonics, nyquist=nyquist)


def render_excitation(cond: Conditioning, params: ParamSet,
                      cfg: SynthConfig = None, dtype=DEFAULT_DTYPE,
                      use_checkpoint: bool = False):
    """Synthesize the augmented left/right bank excitation signals."""
    cfg = cfg or SynthConfig()
    n = cond.n_samples
    idx = control.upsample_indices(params.n_frames, cfg.model_rate, n, cfg.sample_rate)

    # the compensated wrapped copy keeps per-cylinder phases drift-free
    phase_t = torch.as_tensor(cond.phase_wrapped, dtype=dtype)
    wrapped_t = phase_t
    f0_t = torch.as_tensor(cond.f0, dtype=dtype)
    g_thr = torch.as_tensor(cond.g_thr, dtype=dtype)
    g_dfco = torch.as_tensor(cond.g_dfco, dtype=dtype)

    offsets = engine.firing_offsets(params.engine)
    p = params.pulse
    pulses = []
    for i in range(params.engine.n_cylinders):
        series = [control.upsample_frames_torch(x[i].to(dtype), idx)
                  for x in (p.lam, p.alpha, p.beta, p.nu, p.c)]
        args = (phase_t, torch.as_tensor(offsets[i], dtype=dtype),
                p.timing[i].to(dtype), *series, f0_t,
                p.harmonics, cfg.nyquist)
        if use_checkpoint:
            pulses.append(checkpoint(_cylinder_block, *args, use_reentrant=False))
        else:
            pulses.append(_cylinder_block(*args))
    # combustion ceases on overrun: the pulse train follows the throttle gate
    left, right = engine.mix_banks(pulses)
    left = left * g_thr
    right = right * g_thr

    nz = params.noise
    gains = control.upsample_frames_torch(nz.band_gains.to(dtype), idx)
    out = []
    for bank, seed in ((left, nz.seed), (right, nz.seed ^ RIGHT_BANK_SEED)):
        bands = engine.noise_bands(seed, n, cfg.sample_rate, nz.n_bands,
                                   cfg.noise_block, cfg.noise_f_lo)
        eta = engine.erb_noise_bank(gains, seed, n, cfg.sample_rate, bands=bands)
        out.append(engine.augment_pulse(
            bank, eta, g_thr, g_dfco, wrapped_t,
            nz.intake_alpha.to(dtype), nz.intake_beta.to(dtype),
            nz.turb_depth.to(dtype)))
    return out[0], out[1]


def render(traj_or_cond, params: ParamSet, cfg: SynthConfig = None,
           differentiable: bool = False, dtype=DEFAULT_DTYPE,
           generator: Optional[torch.Generator] = None,
           block_len: int = 8192, use_checkpoint: Optional[bool] = None):
    """Render mono engine audio.

    Inference (default) runs the resonators as exact recursions with delays
    at the logit argmax and returns a float64 numpy array.  The
    differentiable path samples delays (Gumbel, via ``generator``), runs
    truncated-IR resonators and returns a torch tensor.
    """
    cfg = cfg or SynthConfig()
    cond = traj_or_cond if isinstance(traj_or_cond, Conditioning) \
        else condition(traj_or_cond, cfg)
    if use_checkpoint is None:
        use_checkpoint = differentiable

    if differentiable:
        left, right = render_excitation(cond, params, cfg, dtype, use_checkpoint)
        return resonator.resonator_network(
            left, right, params.resonators, generator=generator,
            sample=generator is not None, block_len=block_len)

    with torch.no_grad():
        left, right = render_excitation(cond, params, cfg, dtype, False)
    left = left.cpu().numpy().astype(np.float64)
    right = right.cpu().numpy().astype(np.float64)
    mixed = 0.0
    for sig, name in ((left, "left"), (right, "right")):
        coeffs = resonator.resonator_coeffs(params.resonators[name], sample=False)
        y, _ = resonator.lfilter_apply(sig, coeffs)
        mixed = mixed + y
    shared = resonator.resonator_coeffs(params.resonators["shared"], sample=False)
    out, _ = resonator.lfilter_apply(mixed, shared)
    return out
