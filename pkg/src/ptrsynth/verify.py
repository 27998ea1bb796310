"""Self-check suites behind the ``verify`` CLI command.

Each suite pits an implementation against its independent oracle and
reports the worst-case number it saw.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import torch

from . import resonator
from .config import DEFAULT_DTYPE
from .control import dfco_gate, throttle_gate
from .pulse import pulse_waveform
from .tape import grad_check


@dataclass
class SuiteResult:
    name: str
    passed: bool
    worst: float
    detail: str


def random_stable_coeffs(rng: np.random.Generator, delay_min: int = 16,
                         delay_max: int = 400) -> resonator.AllPoleCoeffs:
    """Draw a resonator through the full parameterization (always stable).

    Draws whose poles land inside the truncated-impulse-response refusal
    band (within 1e-3 of the unit circle) are redrawn: the convolution path
    deliberately rejects them, so they are outside the equivalence contract.
    """
    while True:
        theta1, theta2, g = rng.normal(0.0, 1.2, 3)
        a1, a2 = resonator.reflection_to_direct(torch.tensor(theta1),
                                                torch.tensor(theta2))
        ae, be = resonator.integrate_gain(a1, a2, torch.tensor(g))
        delay = int(rng.integers(delay_min, delay_max + 1))
        coeffs = resonator.build_coeff_vector(delay, ae, be, delay_min, delay_max)
        if resonator.pole_radius_bound(coeffs) < 0.999:
            return coeffs


def suite_equivalence(trials: int = 100, length: int = 4096, tol: float = 1e-5,
                      seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        coeffs = random_stable_coeffs(rng)
        x = rng.uniform(-1.0, 1.0, length)
        y_ref = resonator.ks_recursive(x, coeffs)
        y = resonator.allpole_apply(torch.as_tensor(x, dtype=DEFAULT_DTYPE), coeffs)
        worst = max(worst, float(np.max(np.abs(y.numpy() - y_ref))))
    return SuiteResult("equivalence", worst < tol, worst,
                       f"max |allpole - recursive| over {trials} configs")


def suite_stability(trials: int = 10000, seed: int = 0,
                    inject_unstable: bool = False) -> SuiteResult:
    """Quadratic root-finding oracle over random (theta1, theta2, g) draws."""
    rng = np.random.default_rng(seed)
    worst, failures = 0.0, 0
    draws = rng.normal(0.0, 3.0, (trials, 3))
    for theta1, theta2, g in draws:
        a1, a2 = resonator.reflection_to_direct(torch.tensor(theta1),
                                                torch.tensor(theta2))
        ae, be = resonator.integrate_gain(a1, a2, torch.tensor(g))
        for c1, c2 in ((float(a1), float(a2)), (float(ae), float(be))):
            roots = np.roots([1.0, c1, c2])
            mag = float(np.max(np.abs(roots))) if len(roots) else 0.0
            worst = max(worst, mag)
            if mag >= 1.0:
                failures += 1
    if inject_unstable:
        # hidden hook: deliberately break one configuration (negative control)
        mag = float(np.max(np.abs(np.roots([1.0, 0.5, 1.01]))))
        worst = max(worst, mag)
        failures += 1
    return SuiteResult("stability", failures == 0, worst,
                       f"max pole magnitude over {trials} draws, {failures} failures")


def suite_gradients(tol: float = 1e-3, seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    n = 1600
    phase = np.mod(np.cumsum(np.full(n, 2 * np.pi * 25.0 / 16000.0)), 2 * np.pi)
    f0 = np.full(n, 25.0)

    def pulse_loss(leaves):
        ones = torch.ones(n, dtype=DEFAULT_DTYPE)
        y = pulse_waveform(
            torch.as_tensor(phase, dtype=DEFAULT_DTYPE),
            leaves["lam"] * ones, leaves["alpha"] * ones, leaves["beta"] * ones,
            leaves["nu"] * ones, leaves["c"] * ones,
            torch.as_tensor(f0, dtype=DEFAULT_DTYPE),
            n_harmonics=24, nyquist=8000.0)
        return (y ** 2).sum()

    report_p = grad_check(pulse_loss, {
        "lam": rng.uniform(0.3, 1.5), "alpha": rng.uniform(2.0, 6.0),
        "beta": rng.uniform(0.2, 1.0), "nu": rng.uniform(0.5, 0.95),
        "c": rng.uniform(0.5, 1.5)}, seed=seed)

    x = rng.uniform(-1.0, 1.0, 2048)

    def filt_loss(leaves):
        coeffs = resonator.build_coeff_vector(
            40, leaves["alpha_eff"], leaves["beta_eff"], 16, 400)
        y = resonator.allpole_apply(torch.as_tensor(x, dtype=DEFAULT_DTYPE), coeffs)
        return (y ** 2).sum()

    report_f = grad_check(filt_loss, {"alpha_eff": 0.4, "beta_eff": 0.3}, seed=seed)

    worst = max(report_p.max_rel_error, report_f.max_rel_error)
    return SuiteResult("gradients", worst < tol, worst,
                       "max relative error vs central finite differences")


def suite_gates(trials: int = 2000, seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    torque = rng.uniform(-1.0, 1.0, trials)
    eps = 0.02
    g_thr, g_dfco = throttle_gate(torque, eps), dfco_gate(torque, eps)
    checks = [
        float(np.min(g_thr) - eps ** 0.7),
        float(np.min(g_dfco) - eps),
        abs(float(throttle_gate(np.array([1.0]), eps)[0]) - 1.0),
        abs(float(dfco_gate(np.array([-1.0]), eps)[0]) - 1.0),
    ]
    worst = min(checks[0], checks[1])
    ok = checks[0] >= 0 and checks[1] >= 0 and checks[2] < 1e-12 and checks[3] < 1e-12
    return SuiteResult("gates", ok, worst, "gate floor margin (>= 0 means pass)")


SUITES = {
    "equivalence": suite_equivalence,
    "stability": suite_stability,
    "gradients": suite_gradients,
    "gates": suite_gates,
}


def run_suites(names: Optional[List[str]] = None, tolerance: Optional[float] = None,
               inject_unstable: bool = False, seed: int = 0) -> List[SuiteResult]:
    names = names or list(SUITES)
    results = []
    for name in names:
        kwargs: Dict = {"seed": seed}
        if name == "stability":
            kwargs["inject_unstable"] = inject_unstable
        if tolerance is not None and name in ("equivalence", "gradients"):
            kwargs["tol"] = tolerance
        results.append(SUITES[name](**kwargs))
    return results
