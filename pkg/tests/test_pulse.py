import math

import numpy as np
import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from ptrsynth.config import TWO_PI, InvalidInputError, ParameterRangeError
from ptrsynth.control import accumulate_phase
from ptrsynth.pulse import (PulseParams, harmonic_decay_weights, phase_bend,
                            pressure_envelope, pulse_waveform)



def _T(x):
    return torch.tensor(x, dtype=torch.float64)

# ---------------------------------------------------------------------------
# harmonic weights

def test_weights_zero_decay_uniform():
    w = harmonic_decay_weights(_T(0.0), 8, _T(10.0), 8000.0)
    assert torch.allclose(w, torch.full((8,), 0.125, dtype=torch.float64))


def test_weights_strong_decay_concentrates_on_fundamental():
    w = harmonic_decay_weights(_T(20.0), 16, _T(10.0), 8000.0)
    assert float(w[0]) == pytest.approx(1.0, abs=1e-4)
    assert float(w[1:].sum()) < 1e-4


def test_weights_frozen_four_harmonic_case():
    # exp(-0.5 k) for k = 1..4, normalized to unit sum
    w = harmonic_decay_weights(_T(1.0), 4, _T(10.0), 8000.0)
    expect = [0.45505423392341127, 0.27600434470659363,
              0.16740509727844333, 0.1015363240915518]
    assert w.numpy() == pytest.approx(expect, rel=1e-12)
    assert float(w.sum()) == pytest.approx(1.0, rel=1e-12)


def test_weights_nyquist_mask():
    # f0 = 3000 Hz: only harmonics 1 and 2 stay below 8 kHz
    w = harmonic_decay_weights(_T(0.5), 8, _T(3000.0), 8000.0)
    assert torch.all(w[2:] == 0)
    assert float(w.sum()) == pytest.approx(1.0, rel=1e-12)


def test_weights_all_masked_silent():
    w = harmonic_decay_weights(_T(0.5), 4, _T(9000.0), 8000.0)
    assert torch.all(w == 0)


def test_weights_series_input_shape():
    lam = torch.full((100,), 0.7, dtype=torch.float64)
    f0 = torch.full((100,), 25.0, dtype=torch.float64)
    w = harmonic_decay_weights(lam, 12, f0, 8000.0)
    assert w.shape == (12, 100)
    assert torch.allclose(w.sum(dim=0), torch.ones(100, dtype=torch.float64))


def test_weights_reject_bad_count():
    with pytest.raises(InvalidInputError):
        harmonic_decay_weights(_T(1.0), 0, _T(10.0), 8000.0)


# ---------------------------------------------------------------------------
# pressure envelope

def test_envelope_zero_at_firing_instant():
    e = pressure_envelope(_T(0.0), _T(2.0), _T(0.5))
    assert float(e) == 0.0


def test_envelope_peak_location_closed_form():
    # argmax of (1 - e^{-a phi}) e^{-b phi} is ln((a+b)/b)/a
    phi = torch.linspace(0.0, TWO_PI, 200001, dtype=torch.float64)
    e = pressure_envelope(phi, _T(2.0), _T(0.5))
    peak = float(phi[int(torch.argmax(e))])
    assert peak == pytest.approx(0.8047189562170501, abs=1e-4)


def test_envelope_no_decay_monotone():
    phi = torch.linspace(0.0, TWO_PI, 512, dtype=torch.float64)
    e = pressure_envelope(phi, _T(3.0), _T(0.0))
    assert torch.all(e[1:] >= e[:-1])
    assert float(e[-1]) == pytest.approx(1.0, abs=1e-6)


def test_envelope_rejects_bad_rates():
    with pytest.raises(ParameterRangeError):
        pressure_envelope(_T(1.0), _T(0.0), _T(0.5))
    with pytest.raises(ParameterRangeError):
        pressure_envelope(_T(1.0), _T(1.0), _T(-0.1))


@given(st.floats(0.11, 20.0), st.floats(0.0, 5.0), st.floats(0.0, 10.0))
def test_envelope_bounded(alpha, beta, phi):
    e = float(pressure_envelope(_T(phi), _T(alpha),
                                _T(beta)))
    assert 0.0 <= e <= 1.0


# ---------------------------------------------------------------------------
# phase bend

def test_phase_bend_identity_at_one():
    phi = torch.linspace(0.0, TWO_PI, 64, dtype=torch.float64)
    assert torch.allclose(phase_bend(phi, _T(1.0)), phi)


def test_phase_bend_fixed_endpoints():
    for nu in (0.3, 0.6, 0.95):
        assert float(phase_bend(_T(0.0), _T(nu))) == 0.0
        assert float(phase_bend(_T(TWO_PI), _T(nu))) \
            == pytest.approx(TWO_PI, rel=1e-12)


def test_phase_bend_half_power_quarter_cycle():
    # nu = 0.5 maps pi/2 (a quarter of the cycle) to pi (half of it)
    out = phase_bend(_T(TWO_PI / 4), _T(0.5))
    assert float(out) == pytest.approx(TWO_PI / 2, rel=1e-12)


def test_phase_bend_rejects_out_of_range():
    with pytest.raises(ParameterRangeError):
        phase_bend(_T(1.0), _T(0.0))
    with pytest.raises(ParameterRangeError):
        phase_bend(_T(1.0), _T(1.1))


@given(st.floats(0.05, 1.0), st.floats(0.0, TWO_PI))
def test_phase_bend_monotone_in_phase(nu, phi):
    a = float(phase_bend(_T(phi), _T(nu)))
    b = float(phase_bend(_T(min(phi + 0.1, TWO_PI)), _T(nu)))
    assert b >= a - 1e-12


# ---------------------------------------------------------------------------
# full pulse

def _const_series(n, **vals):
    out = {}
    for k, v in vals.items():
        out[k] = torch.full((n,), float(v), dtype=torch.float64)
    return out


def _render_pulse(rpm=3000.0, seconds=0.5, lam=0.8, alpha=4.0, beta=0.6,
                  nu=0.9, c=1.0, n_harmonics=48):
    fs = 16000.0
    n = int(seconds * fs)
    _, wrapped = accumulate_phase(np.full(n, rpm), fs)
    s = _const_series(n, lam=lam, alpha=alpha, beta=beta, nu=nu, c=c,
                      f0=rpm / 120.0)
    return pulse_waveform(torch.as_tensor(wrapped), s["lam"], s["alpha"],
                          s["beta"], s["nu"], s["c"], s["f0"],
                          n_harmonics=n_harmonics, nyquist=8000.0)


def test_pulse_zero_gain_silent():
    y = _render_pulse(c=0.0)
    assert torch.all(y == 0)


def test_pulse_zero_at_cycle_start():
    y = _render_pulse(rpm=3000.0)
    # 3000 RPM: the cycle restarts every 640 samples and the envelope
    # pins those instants to zero
    assert abs(float(y[0])) < 1e-12
    assert abs(float(y[640])) < 1e-10


def test_pulse_periodicity_autocorrelation():
    y = _render_pulse(rpm=3000.0, seconds=1.0).numpy()
    lag = 640
    a, b = y[:-lag], y[lag:]
    corr = np.dot(a - a.mean(), b - b.mean()) / (
        np.linalg.norm(a - a.mean()) * np.linalg.norm(b - b.mean()))
    assert corr > 0.99


def test_pulse_single_harmonic_reduces_to_enveloped_sine():
    fs, n = 16000.0, 1600
    _, wrapped = accumulate_phase(np.full(n, 3000.0), fs)
    phi = torch.as_tensor(wrapped)
    s = _const_series(n, lam=0.0, alpha=5.0, beta=0.5, nu=1.0, c=2.0,
                      f0=25.0)
    y = pulse_waveform(phi, s["lam"], s["alpha"], s["beta"], s["nu"], s["c"],
                       s["f0"], n_harmonics=1, nyquist=8000.0)
    expect = pressure_envelope(phi, s["alpha"], s["beta"]) * 2.0 * torch.sin(phi)
    assert torch.allclose(y, expect, atol=1e-12)


def test_pulse_elementwise_composition_oracle():
    # independent recomputation of the pulse equation from its parts
    fs, n = 16000.0, 800
    rng = np.random.default_rng(3)
    phi_np = rng.uniform(0.0, TWO_PI, n)
    phi = torch.as_tensor(phi_np)
    s = _const_series(n, lam=0.7, alpha=3.0, beta=0.4, nu=0.8, c=1.3, f0=25.0)
    y = pulse_waveform(phi, s["lam"], s["alpha"], s["beta"], s["nu"], s["c"],
                       s["f0"], n_harmonics=16, nyquist=8000.0)

    k = np.arange(1, 17)
    w = np.exp(-0.5 * k * 0.7)
    w /= w.sum()
    bent = TWO_PI * (phi_np / TWO_PI) ** 0.8
    stack = (w[:, None] * np.sin(k[:, None] * bent[None, :])).sum(axis=0)
    env = (1.0 - np.exp(-3.0 * phi_np)) * np.exp(-0.4 * phi_np)
    assert np.allclose(y.numpy(), env * 1.3 * stack, atol=1e-12)


def test_pulse_masked_harmonics_contribute_nothing():
    # f0 = 4500 Hz leaves only the fundamental below Nyquist, so a 16-harmonic
    # stack must renormalize onto it and match the single-harmonic render
    fs, n = 16000.0, 512
    phi = torch.as_tensor(np.random.default_rng(1).uniform(0, TWO_PI, n))
    s = _const_series(n, lam=0.5, alpha=4.0, beta=0.5, nu=0.9, c=1.0, f0=4500.0)
    args = (phi, s["lam"], s["alpha"], s["beta"], s["nu"], s["c"], s["f0"])
    y16 = pulse_waveform(*args, n_harmonics=16, nyquist=8000.0)
    y1 = pulse_waveform(*args, n_harmonics=1, nyquist=8000.0)
    assert torch.allclose(y16, y1, atol=1e-12)


def test_pulse_length_mismatch_rejected():
    with pytest.raises(InvalidInputError):
        pulse_waveform(torch.zeros(10, dtype=torch.float64),
                       *[torch.zeros(9, dtype=torch.float64)] * 5,
                       torch.zeros(10, dtype=torch.float64))


def test_pulse_params_validation():
    ones = torch.ones((8, 4), dtype=torch.float64)
    with pytest.raises(ParameterRangeError):
        PulseParams(lam=ones, alpha=ones, beta=ones, nu=1.5 * ones, c=ones,
                    timing=torch.zeros(8, dtype=torch.float64))
    with pytest.raises(InvalidInputError):
        PulseParams(lam=ones, alpha=torch.ones((8, 5), dtype=torch.float64),
                    beta=ones, nu=ones, c=ones,
                    timing=torch.zeros(8, dtype=torch.float64))
