"""Full parameter set: defaults, raw/constrained mappings, JSON persistence.

The on-disk format is the versioned ``ptr_params_v1`` JSON document; see
``docs/formats.md``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np
import torch

from .config import DEFAULT_DTYPE, TWO_PI, InvalidInputError, SynthConfig
from .engine import EngineConfig, NoiseParams
from .pulse import PulseParams
from .resonator import ResonatorParams

SCHEMA = "ptr_params_v1"


@dataclass
class ParamSet:
    """Everything the synthesizer needs besides the control trajectory."""

    pulse: PulseParams
    noise: NoiseParams
    engine: EngineConfig
    resonators: Dict[str, ResonatorParams]

    def __post_init__(self):
        if set(self.resonators) != {"left", "right", "shared"}:
            raise InvalidInputError("resonators must be keyed left/right/shared")

    @property
    def n_frames(self) -> int:
        return self.pulse.n_frames


def _t(x, dtype=DEFAULT_DTYPE):
    return torch.as_tensor(np.asarray(x, dtype=np.float64), dtype=dtype)


def default_params(n_frames: int, cfg: SynthConfig = None) -> ParamSet:
    """A hand-tuned, audible starting point (static across frames)."""
    cfg = cfg or SynthConfig()
    n_cyl = cfg.n_cylinders
    ones = torch.ones((n_cyl, n_frames), dtype=DEFAULT_DTYPE)
    pulse = PulseParams(
        lam=0.9 * ones, alpha=6.0 * ones, beta=0.8 * ones,
        nu=0.85 * ones, c=1.0 * ones,
        timing=torch.zeros(n_cyl, dtype=DEFAULT_DTYPE),
        harmonics=cfg.harmonics,
    )
    noise = NoiseParams(
        band_gains=0.03 * torch.ones((cfg.noise_bands, n_frames), dtype=DEFAULT_DTYPE),
        turb_depth=_t(0.3), intake_alpha=_t(3.0), intake_beta=_t(1.0),
        seed=0,
    )
    resonators = {}
    for name, delay in (("left", 120), ("right", 90), ("shared", 60)):
        logits = torch.zeros(cfg.delay_max - cfg.delay_min + 1, dtype=DEFAULT_DTYPE)
        logits[delay - cfg.delay_min] = 8.0
        resonators[name] = ResonatorParams(
            theta1=_t(0.4), theta2=_t(-0.3), gain_logit=_t(1.0),
            delay_logits=logits, temperature=1.0,
            delay_min=cfg.delay_min, delay_max=cfg.delay_max,
        )
    return ParamSet(pulse=pulse, noise=noise, engine=EngineConfig(),
                    resonators=resonators)


# ---------------------------------------------------------------------------
# raw (unconstrained) <-> constrained mappings used by the fitting loop

def softplus_inv(y: torch.Tensor) -> torch.Tensor:
    y = torch.clamp(y, min=1e-8)
    return y + torch.log(-torch.expm1(-y))


def _sigmoid_inv(y: torch.Tensor) -> torch.Tensor:
    y = torch.clamp(y, 1e-7, 1.0 - 1e-7)
    return torch.log(y) - torch.log1p(-y)


def to_raw(params: ParamSet, cfg: SynthConfig = None) -> Dict[str, torch.Tensor]:
    """Invert the range mappings to unconstrained fit variables."""
    cfg = cfg or SynthConfig()
    lim = cfg.timing_limit_rad
    p, nz = params.pulse, params.noise
    raw = {
        "pulse.lam": softplus_inv(p.lam),
        "pulse.alpha": softplus_inv(p.alpha - 0.1),
        "pulse.beta": softplus_inv(p.beta),
        "pulse.nu": _sigmoid_inv((p.nu - 0.01) / 0.99),
        "pulse.c": softplus_inv(p.c),
        "pulse.timing": torch.atanh(torch.clamp(p.timing / lim, -0.999999, 0.999999)),
        "noise.band_gains": softplus_inv(nz.band_gains),
        "noise.turb_depth": softplus_inv(nz.turb_depth),
        "noise.intake_alpha": softplus_inv(nz.intake_alpha - 0.1),
        "noise.intake_beta": softplus_inv(nz.intake_beta),
    }
    for name, r in params.resonators.items():
        raw[f"resonator.{name}.theta1"] = r.theta1.clone()
        raw[f"resonator.{name}.theta2"] = r.theta2.clone()
        raw[f"resonator.{name}.gain_logit"] = r.gain_logit.clone()
        raw[f"resonator.{name}.delay_logits"] = r.delay_logits.clone()
    return {k: v.detach().clone() for k, v in raw.items()}


def from_raw(raw: Dict[str, torch.Tensor], template: ParamSet,
             cfg: SynthConfig = None) -> ParamSet:
    """Rebuild a constrained :class:`ParamSet` from unconstrained variables."""
    cfg = cfg or SynthConfig()
    sp = torch.nn.functional.softplus
    lim = cfg.timing_limit_rad
    pulse = PulseParams(
        lam=sp(raw["pulse.lam"]),
        alpha=sp(raw["pulse.alpha"]) + 0.1,
        beta=sp(raw["pulse.beta"]),
        nu=0.01 + 0.99 * torch.sigmoid(raw["pulse.nu"]),
        c=sp(raw["pulse.c"]),
        timing=lim * torch.tanh(raw["pulse.timing"]),
        harmonics=template.pulse.harmonics,
    )
    noise = NoiseParams(
        band_gains=sp(raw["noise.band_gains"]),
        turb_depth=sp(raw["noise.turb_depth"]),
        intake_alpha=sp(raw["noise.intake_alpha"]) + 0.1,
        intake_beta=sp(raw["noise.intake_beta"]),
        seed=template.noise.seed,
    )
    resonators = {}
    for name, r in template.resonators.items():
        resonators[name] = ResonatorParams(
            theta1=raw[f"resonator.{name}.theta1"],
            theta2=raw[f"resonator.{name}.theta2"],
            gain_logit=raw[f"resonator.{name}.gain_logit"],
            delay_logits=raw[f"resonator.{name}.delay_logits"],
            temperature=r.temperature,
            delay_min=r.delay_min, delay_max=r.delay_max,
        )
    return ParamSet(pulse=pulse, noise=noise, engine=template.engine,
                    resonators=resonators)


# ---------------------------------------------------------------------------
# JSON persistence

def _arr(x: torch.Tensor):
    return x.detach().cpu().numpy().tolist()


def save_params(params: ParamSet, path, cfg: SynthConfig = None) -> None:
    cfg = cfg or SynthConfig()
    doc = {
        "schema": SCHEMA,
        "sample_rate": cfg.sample_rate,
        "model_rate": cfg.model_rate,
        "engine": {
            "firing_order": list(params.engine.firing_order),
            "cycle_degrees": params.engine.cycle_degrees,
            "timing_limit_deg": cfg.timing_limit_deg,
        },
        "pulse": {
            "harmonics": params.pulse.harmonics,
            "units": {"timing": "radians of engine-cycle phase"},
            "lambda": _arr(params.pulse.lam),
            "alpha": _arr(params.pulse.alpha),
            "beta": _arr(params.pulse.beta),
            "nu": _arr(params.pulse.nu),
            "gain": _arr(params.pulse.c),
            "timing": _arr(params.pulse.timing),
        },
        "noise": {
            "seed": params.noise.seed,
            "band_gains": _arr(params.noise.band_gains),
            "turb_depth": float(params.noise.turb_depth),
            "intake_alpha": float(params.noise.intake_alpha),
            "intake_beta": float(params.noise.intake_beta),
        },
        "resonators": {
            name: {
                "theta1": float(r.theta1),
                "theta2": float(r.theta2),
                "gain_logit": float(r.gain_logit),
                "delay_logits": _arr(r.delay_logits),
                "delay_min": r.delay_min,
                "delay_max": r.delay_max,
                "temperature": r.temperature,
            }
            for name, r in params.resonators.items()
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_params(path) -> ParamSet:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc
    if doc.get("schema") != SCHEMA:
        raise InvalidInputError(
            f"{path}: expected schema '{SCHEMA}', got {doc.get('schema')!r}")
    try:
        p = doc["pulse"]
        pulse = PulseParams(
            lam=_t(p["lambda"]), alpha=_t(p["alpha"]), beta=_t(p["beta"]),
            nu=_t(p["nu"]), c=_t(p["gain"]), timing=_t(p["timing"]),
            harmonics=int(p["harmonics"]),
        )
        nz = doc["noise"]
        noise = NoiseParams(
            band_gains=_t(nz["band_gains"]), turb_depth=_t(nz["turb_depth"]),
            intake_alpha=_t(nz["intake_alpha"]), intake_beta=_t(nz["intake_beta"]),
            seed=int(nz["seed"]),
        )
        engine = EngineConfig(firing_order=tuple(doc["engine"]["firing_order"]))
        resonators = {}
        for name in ("left", "right", "shared"):
            r = doc["resonators"][name]
            if "delay_logits" in r:
                logits = _t(r["delay_logits"])
            else:
                # inference snapshot: a fixed integer delay
                logits = torch.full((r["delay_max"] - r["delay_min"] + 1,), -30.0,
                                    dtype=DEFAULT_DTYPE)
                logits[int(r["delay"]) - r["delay_min"]] = 30.0
            resonators[name] = ResonatorParams(
                theta1=_t(r["theta1"]), theta2=_t(r["theta2"]),
                gain_logit=_t(r["gain_logit"]), delay_logits=logits,
                temperature=float(r.get("temperature", 1.0)),
                delay_min=int(r["delay_min"]), delay_max=int(r["delay_max"]),
            )
    except KeyError as exc:
        raise InvalidInputError(f"{path}: missing field {exc}") from exc
    return ParamSet(pulse=pulse, noise=noise, engine=engine, resonators=resonators)
