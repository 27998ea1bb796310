import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ptrsynth.config import TWO_PI, InvalidInputError, ParameterRangeError
from ptrsynth.control import (ControlTrajectory, FeatureStats, PhaseState,
                              accumulate_phase, compute_stats, cylinder_phases,
                              derive_deltas, dfco_gate, standardize,
                              throttle_gate, upsample_frames_torch,
                              upsample_indices, upsample_to_audio)


# ---------------------------------------------------------------------------
# trajectory container and CSV loading

def test_trajectory_validation():
    with pytest.raises(InvalidInputError):
        ControlTrajectory(rpm=np.array([-1.0, 0.0]), torque=np.zeros(2),
                          control_rate=125.0)
    with pytest.raises(InvalidInputError):
        ControlTrajectory(rpm=np.zeros(3), torque=np.zeros(2), control_rate=125.0)
    with pytest.raises(InvalidInputError):
        ControlTrajectory(rpm=np.zeros(2), torque=np.zeros(2), control_rate=0.0)


def test_from_csv_uniform_roundtrip(tmp_path):
    path = tmp_path / "c.csv"
    rows = [(i / 125.0, 1000.0 + 10.0 * i, 0.1 * (i % 5)) for i in range(50)]
    path.write_text("time,rpm,torque\n"
                    + "\n".join(f"{t},{r},{q}" for t, r, q in rows) + "\n")
    traj = ControlTrajectory.from_csv(path, 125.0)
    assert np.allclose(traj.rpm, [r for _, r, _ in rows])
    assert np.allclose(traj.torque, [q for _, _, q in rows])


def test_from_csv_irregular_resamples_linearly(tmp_path):
    path = tmp_path / "c.csv"
    # rpm is linear in time, so any linear resampling must be exact
    path.write_text("time,rpm,torque\n0.0,1000,0\n0.013,1130,0\n0.1,2000,1\n")
    traj = ControlTrajectory.from_csv(path, 100.0)
    assert traj.rpm == pytest.approx([1000.0 + 1e4 * t for t in
                                      np.arange(len(traj.rpm)) / 100.0])


@pytest.mark.parametrize("body", [
    "not,a,header\n0,1,2\n",
    "time,rpm,torque\n0.0,1000\n",
    "time,rpm,torque\n0.0,1000,x\n0.1,1000,0\n",
    "time,rpm,torque\n0.0,1000,0\n0.0,1000,0\n",
    "time,rpm,torque\n0.0,1000,0\n",
])
def test_from_csv_rejects_malformed(tmp_path, body):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(InvalidInputError):
        ControlTrajectory.from_csv(path)


# ---------------------------------------------------------------------------
# frame features

def test_deltas_constant_input_all_zero():
    traj = ControlTrajectory(rpm=np.full(250, 1500.0),
                             torque=np.full(250, 0.3), control_rate=125.0)
    f = derive_deltas(traj, 125.0)
    assert np.all(f.d_rpm == 0) and np.all(f.dd_rpm == 0)
    assert np.all(f.d_torque == 0) and np.all(f.dd_torque == 0)
    assert f.rpm == pytest.approx(1500.0)


def test_deltas_linear_ramp_constant_first_difference():
    rpm = 1000.0 + 125.0 * np.arange(250)
    traj = ControlTrajectory(rpm=rpm, torque=np.zeros(250), control_rate=125.0)
    f = derive_deltas(traj, 125.0)
    assert f.d_rpm[0] == 0.0
    assert f.d_rpm[1:] == pytest.approx(125.0)
    assert f.dd_rpm[0] == 0.0 and f.dd_rpm[1] == pytest.approx(125.0)
    assert f.dd_rpm[2:] == pytest.approx(0.0, abs=1e-9)


def test_deltas_step_isolated_in_second_difference():
    rpm = np.full(200, 1000.0)
    rpm[100:] = 2000.0
    traj = ControlTrajectory(rpm=rpm, torque=np.zeros(200), control_rate=125.0)
    f = derive_deltas(traj, 125.0)
    hits = np.nonzero(np.abs(f.dd_rpm) > 1e-9)[0]
    assert 1 <= len(hits) <= 2
    assert np.all(np.abs(hits - 100) <= 1)


def test_frame_average_downsamples():
    # 500 Hz control feed, frames average 4 control samples each
    x = np.arange(500, dtype=np.float64)
    traj = ControlTrajectory(rpm=x, torque=np.zeros(500), control_rate=500.0)
    f = derive_deltas(traj, 125.0)
    assert f.n_frames == 125
    assert f.rpm[0] == pytest.approx(np.mean([0, 1, 2, 3]))
    assert f.rpm[10] == pytest.approx(np.mean([40, 41, 42, 43]))


def test_standardize_round_numbers():
    rpm = np.linspace(1000.0, 5000.0, 1000)
    traj = ControlTrajectory(rpm=rpm, torque=np.linspace(-1, 1, 1000),
                             control_rate=125.0)
    f = derive_deltas(traj, 125.0)
    z = standardize(f, compute_stats(f))
    assert float(z.rpm.mean()) == pytest.approx(0.0, abs=1e-10)
    assert float(z.rpm.std()) == pytest.approx(1.0, abs=1e-10)
    assert float(z.torque.mean()) == pytest.approx(0.0, abs=1e-10)


def test_stats_reject_zero_std():
    mean = {n: 0.0 for n in ("rpm", "torque", "d_rpm", "d_torque", "dd_rpm", "dd_torque")}
    std = dict(mean)
    with pytest.raises(InvalidInputError):
        FeatureStats(mean=mean, std=std)


# ---------------------------------------------------------------------------
# gates

def test_throttle_gate_frozen_values():
    g = throttle_gate(np.array([-1.0, 0.0, 0.02, 0.5, 1.0]))
    assert g[0] == pytest.approx(0.06467270065773575)   # floor: 0.02**0.7
    assert g[1] == pytest.approx(0.06467270065773575)
    assert g[2] == pytest.approx(0.06467270065773575)
    assert g[3] == pytest.approx(0.6155722066724582)    # 0.5**0.7
    assert g[4] == pytest.approx(1.0)


def test_dfco_gate_frozen_values():
    g = dfco_gate(np.array([1.0, 0.0, -0.25, -1.0]))
    assert g[0] == pytest.approx(0.02)
    assert g[1] == pytest.approx(0.02)
    assert g[2] == pytest.approx(0.25)
    assert g[3] == pytest.approx(1.0)


def test_gates_reject_bad_epsilon():
    with pytest.raises(ParameterRangeError):
        throttle_gate(np.zeros(3), epsilon=0.0)
    with pytest.raises(ParameterRangeError):
        dfco_gate(np.zeros(3), epsilon=-0.1)


@given(arrays(np.float64, st.integers(1, 64),
              elements=st.floats(-1.0, 1.0)))
def test_gates_stay_positive(torque):
    assert np.all(throttle_gate(torque) >= 0.02 ** 0.7 - 1e-15)
    assert np.all(dfco_gate(torque) >= 0.02 - 1e-15)


@given(st.floats(0.021, 1.0), st.floats(0.021, 1.0))
def test_throttle_gate_monotone_above_floor(t1, t2):
    lo, hi = sorted([t1, t2])
    g = throttle_gate(np.array([lo, hi]))
    assert g[0] <= g[1] + 1e-15


# ---------------------------------------------------------------------------
# phase accumulation

def test_phase_constant_rpm_exact_cycle():
    # 6000 RPM -> 50 Hz cycle rate -> one cycle per 320 samples at 16 kHz
    rpm = np.full(3201, 6000.0)
    unwrapped, wrapped = accumulate_phase(rpm, 16000.0)
    assert unwrapped[0] == 0.0
    assert unwrapped[320] == pytest.approx(TWO_PI, rel=1e-12)
    assert unwrapped[3200] == pytest.approx(10 * TWO_PI, rel=1e-12)
    assert np.all(wrapped >= 0) and np.all(wrapped < TWO_PI)


def test_phase_zero_rpm_holds():
    unwrapped, wrapped = accumulate_phase(np.zeros(100), 16000.0)
    assert np.all(unwrapped == 0) and np.all(wrapped == 0)


def test_phase_ramp_matches_integral_oracle():
    # linear 600 -> 6000 RPM over 4 s; the oracle is the closed-form
    # integral of the continuous cycle frequency (exact for a linear ramp)
    fs, n = 16000.0, 64000
    rpm = np.linspace(600.0, 6000.0, n)
    unwrapped, _ = accumulate_phase(rpm, fs)
    t_end = (n - 1) / fs
    oracle = TWO_PI * t_end * (600.0 + 6000.0) / (2 * 120.0)
    assert abs(unwrapped[-1] - oracle) < 1e-3


def test_wrapped_copy_drift_free_over_long_run():
    # 10 million samples of slowly wobbling rpm; compare against an
    # extended-precision accumulation of the same increments
    fs, n = 16000.0, 10_000_000
    rpm = 3000.0 + 500.0 * np.sin(np.arange(n) * 1e-4)
    _, wrapped = accumulate_phase(rpm, fs)
    f0 = rpm.astype(np.longdouble) / 120.0
    inc = np.zeros(n, dtype=np.longdouble)
    inc[1:] = np.longdouble(TWO_PI) * 0.5 * (f0[1:] + f0[:-1]) / np.longdouble(fs)
    ref = np.mod(np.cumsum(inc), np.longdouble(TWO_PI)).astype(np.float64)
    err = np.abs(wrapped - ref)
    err = np.minimum(err, TWO_PI - err)   # both sides of the wrap point
    assert float(err.max()) < 1e-6


def test_phase_streaming_continuation_matches_one_shot():
    rpm = np.linspace(800.0, 5000.0, 16000)
    ref_u, ref_w = accumulate_phase(rpm, 16000.0)
    state = PhaseState()
    parts_u, parts_w = [], []
    for lo in range(0, 16000, 700):
        u, w = accumulate_phase(rpm[lo:lo + 700], 16000.0, state)
        parts_u.append(u)
        parts_w.append(w)
    assert np.array_equal(np.concatenate(parts_u), ref_u)
    assert np.array_equal(np.concatenate(parts_w), ref_w)


def test_phase_rejects_negative_rpm():
    with pytest.raises(InvalidInputError):
        accumulate_phase(np.array([100.0, -1.0]), 16000.0)


# ---------------------------------------------------------------------------
# per-cylinder phases

def test_cylinder_phases_wrap_and_spacing():
    phase = np.linspace(0, 4 * TWO_PI, 1000)
    offsets = -np.arange(8) * TWO_PI / 8
    out = cylinder_phases(phase, offsets)
    assert out.shape == (8, 1000)
    assert np.all(out >= 0) and np.all(out < TWO_PI)
    # at engine phase zero the cylinders sit at evenly spaced points
    starts = np.sort(out[:, 0])
    assert starts == pytest.approx(np.arange(8) * TWO_PI / 8, abs=1e-12)


def test_cylinder_phases_torch_matches_numpy():
    phase = np.linspace(0, 3 * TWO_PI, 500)
    offsets = -np.arange(8) * TWO_PI / 8
    timing = torch.linspace(-0.3, 0.3, 8, dtype=torch.float64)
    out_t = cylinder_phases(torch.as_tensor(phase), offsets, timing)
    out_n = cylinder_phases(phase, offsets, timing.numpy())
    assert np.allclose(out_t.numpy(), out_n, atol=1e-12)


def test_cylinder_phases_timing_shift():
    phase = np.zeros(4)
    out = cylinder_phases(phase, np.zeros(1), np.array([0.25]))
    assert out[0] == pytest.approx(0.25)


# ---------------------------------------------------------------------------
# upsampling

def test_upsample_linear_between_frame_centers():
    series = np.array([0.0, 1.0, 2.0, 3.0])
    out = upsample_to_audio(series, 125.0, 512, 16000.0)
    # frame centers sit 128 samples apart, starting at sample 64
    assert out[64] == pytest.approx(0.0)
    assert out[192] == pytest.approx(1.0)
    assert out[128] == pytest.approx(0.5)
    assert out[0] == pytest.approx(0.0)      # held before the first center
    assert out[-1] == pytest.approx(3.0)


def test_upsample_torch_matches_numpy():
    rng = np.random.default_rng(7)
    series = rng.normal(size=25)
    ref = upsample_to_audio(series, 125.0, 3200, 16000.0)
    idx = upsample_indices(25, 125.0, 3200, 16000.0)
    out = upsample_frames_torch(torch.as_tensor(series), idx)
    assert np.allclose(out.numpy(), ref, atol=1e-12)
