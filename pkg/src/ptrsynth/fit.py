"""Analysis-by-synthesis parameter fitting.

Optimizes every synthesis parameter directly (frame-rate series per
frame) against a target recording with decoupled-weight-decay adaptive
moments and an optional one-cycle learning-rate schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import torch

from .config import InvalidInputError, PtrError, SynthConfig
from .control import ControlTrajectory
from .losses import LossBreakdown, detach_breakdown, loss_breakdown
from .params import ParamSet, from_raw, to_raw
from .render import Conditioning, condition, render

#: raw parameters that are frame-rate series and get the smoothness penalty
FRAME_RATE_KEYS = ("pulse.lam", "pulse.alpha", "pulse.beta", "pulse.nu",
                   "pulse.c", "noise.band_gains")


class FitDivergenceError(PtrError):
    """Loss exploded past the divergence guard."""


@dataclass
class FitConfig:
    learning_rate: float = 1e-3
    weight_decay: float = 1e-2
    iterations: int = 200
    one_cycle: bool = True
    harmonic_weight: float = 1.0
    seed: int = 0
    tv_weight: float = 1e-3
    temperature_start: float = 2.0
    temperature_end: float = 0.5
    divergence_factor: float = 1e3
    stop_ratio: Optional[float] = None
    dtype: torch.dtype = torch.float64

    def __post_init__(self):
        if self.iterations < 0:
            raise InvalidInputError("iterations must be >= 0")
        if self.learning_rate <= 0:
            raise InvalidInputError("learning rate must be positive")


@dataclass
class TraceRow:
    iteration: int
    breakdown: LossBreakdown
    learning_rate: float


def _tv_penalty(leaves) -> torch.Tensor:
    tv = None
    for key in FRAME_RATE_KEYS:
        x = leaves[key]
        if x.shape[-1] < 2:
            continue
        term = (x[..., 1:] - x[..., :-1]).abs().mean()
        tv = term if tv is None else tv + term
    return tv if tv is not None else torch.zeros(())


def fit(target, traj: ControlTrajectory, init: ParamSet, cfg: FitConfig,
        synth_cfg: SynthConfig = None,
        on_iteration: Optional[Callable[[TraceRow], None]] = None):
    """Fit parameters to ``target`` audio; returns ``(best params, trace)``.

    Deterministic given ``cfg.seed``.  The per-iteration trace records the
    reconstruction loss breakdown (smoothness penalty excluded) and the
    learning rate in effect.
    """
    synth_cfg = synth_cfg or SynthConfig()
    cond = condition(traj, synth_cfg)
    target = np.asarray(target, dtype=np.float64)
    if len(target) != cond.n_samples:
        raise InvalidInputError(
            f"target length {len(target)} != render length {cond.n_samples}")
    target_t = torch.as_tensor(target, dtype=cfg.dtype)

    torch.manual_seed(cfg.seed)
    raw = to_raw(init, synth_cfg)
    leaves = {k: v.to(cfg.dtype).requires_grad_(True) for k, v in raw.items()}
    opt = torch.optim.AdamW(list(leaves.values()), lr=cfg.learning_rate,
                            weight_decay=cfg.weight_decay)
    sched = None
    if cfg.one_cycle and cfg.iterations > 0:
        sched = torch.optim.lr_scheduler.OneCycleLR(
            opt, max_lr=cfg.learning_rate, total_steps=cfg.iterations,
            pct_start=0.3, div_factor=25.0, final_div_factor=400.0)

    trace: List[TraceRow] = []
    best_loss, best_raw = None, None
    initial: Optional[LossBreakdown] = None

    steps = max(cfg.iterations, 1)
    for it in range(steps):
        if cfg.iterations > 0:
            frac = it / max(cfg.iterations - 1, 1)
            temperature = (cfg.temperature_start
                           + frac * (cfg.temperature_end - cfg.temperature_start))
            for r in init.resonators.values():
                r.temperature = temperature
        params = from_raw(leaves, init, synth_cfg)
        gen = torch.Generator().manual_seed(cfg.seed * 1000003 + it)
        y_hat = render(cond, params, synth_cfg, differentiable=True,
                       dtype=cfg.dtype, generator=gen)
        bd = loss_breakdown(target_t, y_hat, cond.rpm, synth_cfg.sample_rate,
                            cfg.harmonic_weight)
        row = TraceRow(iteration=it, breakdown=detach_breakdown(bd),
                       learning_rate=opt.param_groups[0]["lr"])
        trace.append(row)
        if on_iteration is not None:
            on_iteration(row)
        if initial is None:
            initial = row.breakdown
        if best_loss is None or row.breakdown.total < best_loss:
            best_loss = row.breakdown.total
            best_raw = {k: v.detach().clone() for k, v in leaves.items()}
        if row.breakdown.total > cfg.divergence_factor * max(initial.total, 1e-12):
            raise FitDivergenceError(
                f"iteration {it}: loss {row.breakdown.total:.4g} exceeds "
                f"{cfg.divergence_factor:g} x initial {initial.total:.4g}")
        if (cfg.stop_ratio is not None
                and row.breakdown.total <= cfg.stop_ratio * initial.total
                and row.breakdown.harmonic <= cfg.stop_ratio * max(initial.harmonic, 1e-12)):
            break
        if cfg.iterations == 0:
            break
        loss = bd.total + cfg.tv_weight * _tv_penalty(leaves).to(cfg.dtype)
        opt.zero_grad()
        loss.backward()
        opt.step()
        if sched is not None:
            sched.step()

    best = from_raw({k: v for k, v in best_raw.items()}, init, synth_cfg)
    detached = to_raw(best, synth_cfg)
    return from_raw(detached, init, synth_cfg), trace


def one_cycle_rates(learning_rate: float, iterations: int) -> List[float]:
    """Learning-rate trajectory of the schedule, for inspection and tests."""
    dummy = torch.nn.Parameter(torch.zeros(1))
    opt = torch.optim.AdamW([dummy], lr=learning_rate)
    sched = torch.optim.lr_scheduler.OneCycleLR(
        opt, max_lr=learning_rate, total_steps=iterations,
        pct_start=0.3, div_factor=25.0, final_div_factor=400.0)
    rates = []
    for _ in range(iterations):
        rates.append(opt.param_groups[0]["lr"])
        opt.step()
        sched.step()
    return rates
