"""Exhaust resonance network.

Karplus-Strong delay-line feedback realized as a sparse all-pole filter:
two feedback taps at lags L and L+1, reflection-coefficient stability
parameterization, Gumbel-Softmax learnable delay, and the
left/right-bank-plus-shared topology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import torch

from .config import DEFAULT_DTYPE, InvalidInputError, UnstableFilterError

#: hard numerical guard on |a2| and on the stability-triangle bound
COEFF_CLAMP = 0.999
TRIANGLE_MARGIN = 0.9999
#: sigmoid saturation guard so the gain scale stays strictly below one
GAIN_EPS = 1e-9
#: truncated impulse responses decay to this relative tail level
IR_TAIL = 1e-7
POLE_LIMIT = 0.9995


@dataclass
class ResonatorParams:
    """Unconstrained parameters of one resonator."""

    theta1: torch.Tensor
    theta2: torch.Tensor
    gain_logit: torch.Tensor
    delay_logits: torch.Tensor
    temperature: float = 1.0
    delay_min: int = 16
    delay_max: int = 400

    def __post_init__(self):
        if self.temperature <= 0:
            raise InvalidInputError("temperature must be positive")
        expect = self.delay_max - self.delay_min + 1
        if self.delay_logits.shape != (expect,):
            raise InvalidInputError(
                f"delay_logits must have length {expect} for delays "
                f"[{self.delay_min}, {self.delay_max}]")


@dataclass
class AllPoleCoeffs:
    """Sparse denominator coefficients ``a`` (index i multiplies y[n-i]).

    ``a[0]`` is a placeholder for the implicit leading one and stays zero;
    nonzeros sit at indices ``L`` and ``L+1`` (or their soft mixture).
    """

    a: torch.Tensor
    delay: int
    delay_min: int = 16

    @property
    def order(self) -> int:
        return self.a.shape[0] - 1


def reflection_to_direct(theta1, theta2):
    """Map unconstrained logits to direct-form (a1, a2) inside the stability triangle."""
    theta1 = torch.as_tensor(theta1, dtype=DEFAULT_DTYPE) if not isinstance(theta1, torch.Tensor) else theta1
    theta2 = torch.as_tensor(theta2, dtype=DEFAULT_DTYPE) if not isinstance(theta2, torch.Tensor) else theta2
    k1, k2 = torch.tanh(theta1), torch.tanh(theta2)
    a2 = torch.clamp(k2, -COEFF_CLAMP, COEFF_CLAMP)
    a1 = k1 * (1.0 - a2)
    lim = (1.0 + a2) * TRIANGLE_MARGIN
    a1 = torch.clamp(a1, -lim, lim)
    return a1, a2


def integrate_gain(a1, a2, gain_logit):
    """Fold the feedback gain into the coefficients: scale by sigmoid(g)^0.35."""
    if not isinstance(gain_logit, torch.Tensor):
        gain_logit = torch.as_tensor(gain_logit, dtype=DEFAULT_DTYPE)
    s = torch.clamp(torch.sigmoid(gain_logit), max=1.0 - GAIN_EPS) ** 0.35
    return a1 * s, a2 * s


def select_delay(delay_logits: torch.Tensor, temperature: float, hard: bool = True,
                 generator: Optional[torch.Generator] = None, sample: bool = True):
    """Gumbel-Softmax delay choice.

    Returns ``(index, weights)`` where ``index`` is the hard argmax position
    and ``weights`` carries the straight-through gradient (forward one-hot,
    backward soft).  With ``sample=False`` no noise is added (inference).
    """
    if temperature <= 0:
        raise InvalidInputError("temperature must be positive")
    logits = delay_logits
    if sample:
        u = torch.rand(logits.shape, generator=generator, dtype=logits.dtype)
        inner = (-torch.log(u.clamp_min(1e-12))).clamp_min(1e-12)
        gumbel = -torch.log(inner)
        logits = logits + gumbel
    soft = torch.softmax(logits / temperature, dim=0)
    index = int(torch.argmax(soft).item())
    if hard:
        one_hot = torch.zeros_like(soft)
        one_hot[index] = 1.0
        weights = one_hot + soft - soft.detach()
    else:
        weights = soft
    return index, weights


def build_coeff_vector(delay, alpha_eff, beta_eff, delay_min: int,
                       delay_max: Optional[int] = None,
                       weights: Optional[torch.Tensor] = None) -> AllPoleCoeffs:
    """Place ``-alpha_eff`` / ``-beta_eff`` at lags L / L+1.

    ``delay`` is the hard lag; with ``weights`` (over candidates
    ``delay_min..delay_max``) the taps are the weighted mixture, which under
    straight-through weights keeps the forward pass hard while letting
    gradient reach the delay logits.  Indices below ``delay_min`` are
    structurally zero.
    """
    if delay_max is None:
        delay_max = delay if weights is None else delay_min + weights.shape[0] - 1
    if not (1 <= delay_min <= delay <= delay_max):
        raise InvalidInputError(f"delay {delay} outside [{delay_min}, {delay_max}]")
    if not isinstance(alpha_eff, torch.Tensor):
        alpha_eff = torch.as_tensor(alpha_eff, dtype=DEFAULT_DTYPE)
    if not isinstance(beta_eff, torch.Tensor):
        beta_eff = torch.as_tensor(beta_eff, dtype=DEFAULT_DTYPE)
    n = delay_max + 2
    if weights is None:
        weights = torch.zeros(delay_max - delay_min + 1, dtype=alpha_eff.dtype)
        weights[delay - delay_min] = 1.0
    a = torch.zeros(n, dtype=alpha_eff.dtype)
    a = a.index_add(0, torch.arange(delay_min, delay_max + 1), -alpha_eff * weights)
    a = a.index_add(0, torch.arange(delay_min + 1, delay_max + 2), -beta_eff * weights)
    return AllPoleCoeffs(a=a, delay=delay, delay_min=delay_min)


def pole_radius_bound(coeffs: AllPoleCoeffs) -> float:
    """Upper bound on pole magnitude: the positive root of r^(L+1) = |aL| r + |aL1|.

    Rigorous for the two-tap filter; may exceed the true radius (use
    :func:`max_pole_magnitude` to refine near one).
    """
    a = coeffs.a.detach()
    L = coeffs.delay
    ca = float(abs(a[L]))
    cb = float(abs(a[L + 1])) if L + 1 < a.shape[0] else 0.0
    if ca == 0.0 and cb == 0.0:
        return 0.0
    f = lambda r: r ** (L + 1) - ca * r - cb
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return hi


def max_pole_magnitude(coeffs: AllPoleCoeffs) -> float:
    """Exact max pole magnitude via polynomial root finding."""
    a = coeffs.a.detach().cpu().numpy()
    nz = np.nonzero(a)[0]
    if len(nz) == 0:
        return 0.0
    order = int(nz[-1])
    p = np.zeros(order + 1)
    p[0] = 1.0
    p[1:] = a[1:order + 1]
    return float(np.max(np.abs(np.roots(p))))


def ks_recursive(x: np.ndarray, coeffs: AllPoleCoeffs) -> np.ndarray:
    """Reference sample-by-sample recursion y[n] = x[n] - sum a_i y[n-i].

    Deliberately naive; serves as the oracle for :func:`allpole_apply`.
    """
    a = coeffs.a.detach().cpu().numpy()
    taps = [(int(i), float(a[i])) for i in np.nonzero(a)[0] if i > 0]
    x = np.asarray(x, dtype=np.float64)
    y = np.zeros(len(x))
    for n in range(len(x)):
        acc = x[n]
        for lag, coef in taps:
            if n - lag >= 0:
                acc -= coef * y[n - lag]
        y[n] = acc
    return y


def _truncated_impulse_response(coeffs: AllPoleCoeffs) -> torch.Tensor:
    """Differentiable truncated impulse response of 1/A(z).

    Sampled from the frequency response on a grid large enough that
    time-domain aliasing is far below the truncation tail, then cut where
    |h| falls under IR_TAIL times its peak.
    """
    rho = pole_radius_bound(coeffs)
    if rho >= POLE_LIMIT:
        rho_exact = max_pole_magnitude(coeffs)
        if rho_exact >= POLE_LIMIT:
            raise UnstableFilterError(
                f"pole magnitude {rho_exact:.6f} >= {POLE_LIMIT}; "
                "truncated impulse response would be unbounded")
        rho = rho_exact
    L_max = coeffs.order - 1
    if rho <= 0.0:
        n_trunc = coeffs.order + 1
    else:
        n_trunc = int(math.ceil(math.log(1e-12) / math.log(min(rho, POLE_LIMIT))))
        n_trunc = min(max(n_trunc, coeffs.order + 1),
                      int(math.ceil(4 * L_max / (1.0 - rho))) + coeffs.order + 1)
    n_fft = 1 << max(int(math.ceil(math.log2(2 * n_trunc + coeffs.order + 2))), 6)
    a = coeffs.a.clone()
    spectrum = torch.fft.rfft(
        torch.cat([torch.ones(1, dtype=a.dtype), a[1:]]), n=n_fft)
    h = torch.fft.irfft(1.0 / spectrum, n=n_fft)[:n_trunc]
    h_abs = h.detach().abs()
    keep = torch.nonzero(h_abs >= IR_TAIL * h_abs.max())
    n_keep = int(keep[-1].item()) + 1 if len(keep) else 1
    return h[:n_keep]


def allpole_apply(x: torch.Tensor, coeffs: AllPoleCoeffs,
                  block_len: int = 8192) -> torch.Tensor:
    """Non-recursive evaluation of the all-pole filter.

    Convolves ``x`` with the truncated impulse response using overlap-add,
    differentiable with respect to the coefficient values; matches
    :func:`ks_recursive` within 1e-5 absolute on unit-peak inputs.
    """
    if not isinstance(x, torch.Tensor):
        x = torch.as_tensor(x, dtype=DEFAULT_DTYPE)
    h = _truncated_impulse_response(coeffs).to(x.dtype)
    n = x.shape[-1]
    n_fft = 1 << int(math.ceil(math.log2(block_len + h.shape[0] - 1 + 1)))
    H = torch.fft.rfft(h, n=n_fft)
    out = torch.zeros(n + h.shape[0] - 1, dtype=x.dtype)
    for start in range(0, n, block_len):
        seg = x[start:start + block_len]
        conv = torch.fft.irfft(torch.fft.rfft(seg, n=n_fft) * H, n=n_fft)
        stop = min(start + seg.shape[0] + h.shape[0] - 1, out.shape[0])
        out = out.index_add(0, torch.arange(start, stop), conv[: stop - start])
    return out[:n]


def lfilter_apply(x: np.ndarray, coeffs: AllPoleCoeffs, zi: Optional[np.ndarray] = None):
    """Exact recursion via direct-form filtering, with optional carried state.

    Used on the inference/streaming path where no gradients are needed;
    numerically identical to :func:`ks_recursive`.  Returns ``(y, zi)``.
    """
    from scipy.signal import lfilter

    a = coeffs.a.detach().cpu().numpy().copy()
    a[0] = 1.0
    if zi is None:
        zi = np.zeros(len(a) - 1)
    y, zf = lfilter([1.0], a, np.asarray(x, dtype=np.float64), zi=zi)
    return y, zf


def resonator_coeffs(params: ResonatorParams,
                     generator: Optional[torch.Generator] = None,
                     sample: bool = True, soft_grad: bool = True,
                     hard: bool = True) -> AllPoleCoeffs:
    """Compose reflection mapping, gain integration and delay selection."""
    a1, a2 = reflection_to_direct(params.theta1, params.theta2)
    alpha_eff, beta_eff = integrate_gain(a1, a2, params.gain_logit)
    index, weights = select_delay(params.delay_logits, params.temperature,
                                  hard=hard, generator=generator, sample=sample)
    if not soft_grad:
        weights = None
    return build_coeff_vector(params.delay_min + index, alpha_eff, beta_eff,
                              params.delay_min, params.delay_max, weights=weights)


def resonator_network(left: torch.Tensor, right: torch.Tensor, params,
                      generator: Optional[torch.Generator] = None,
                      sample: bool = True, block_len: int = 8192) -> torch.Tensor:
    """Bank resonators in parallel followed by the shared exhaust resonator.

    ``params`` maps ``left``/``right``/``shared`` to :class:`ResonatorParams`.
    """
    if left.shape != right.shape:
        raise InvalidInputError("bank signals must share length")
    c_left = resonator_coeffs(params["left"], generator, sample)
    c_right = resonator_coeffs(params["right"], generator, sample)
    c_shared = resonator_coeffs(params["shared"], generator, sample)
    mixed = allpole_apply(left, c_left, block_len) + allpole_apply(right, c_right, block_len)
    return allpole_apply(mixed, c_shared, block_len)
