import numpy as np
import pytest

from ptrsynth.config import InvalidInputError, SynthConfig
from ptrsynth.control import ControlTrajectory
from ptrsynth.params import default_params
from ptrsynth.render import render
from ptrsynth.streaming import StreamSynth


def _feed(synth, traj, rate=125.0):
    out = []
    for i in range(len(traj.rpm)):
        synth.push(i / rate, float(traj.rpm[i]), float(traj.torque[i]))
        out.extend(synth.pull())
    out.extend(synth.flush())
    return np.concatenate(out) if out else np.zeros(0)


@pytest.fixture
def ramp_traj():
    n = 251   # two seconds
    return ControlTrajectory(
        rpm=np.linspace(900.0, 4200.0, n),
        torque=np.concatenate([np.full(120, 0.8), np.full(131, -0.6)]),
        control_rate=125.0)


def test_stream_matches_offline_render(ramp_traj, cfg):
    params = default_params(250, cfg)
    offline = render(ramp_traj, params, cfg)
    synth = StreamSynth(params, cfg)
    streamed = _feed(synth, ramp_traj)
    n = min(len(offline), len(streamed))
    assert n >= 31000
    assert np.max(np.abs(streamed[:n] - offline[:n])) < 1e-6


def test_stream_block_size_invariance(ramp_traj, cfg):
    params = default_params(250, cfg)
    a = _feed(StreamSynth(params, cfg, block=256), ramp_traj)
    b = _feed(StreamSynth(params, cfg, block=2048), ramp_traj)
    n = min(len(a), len(b))
    assert np.max(np.abs(a[:n] - b[:n])) < 1e-6


def test_stream_block_sizes(cfg):
    params = default_params(50, cfg)
    synth = StreamSynth(params, cfg, block=512)
    synth.push(0.0, 1000.0, 0.5)
    assert synth.available() == 0
    synth.push(0.1, 1100.0, 0.5)
    # 0.1 s covers 1600 samples: three full 512-sample blocks
    assert synth.available() == 3
    blocks = synth.pull()
    assert len(blocks) == 3 and all(len(b) == 512 for b in blocks)
    rest = synth.flush()
    assert sum(len(b) for b in rest) == 1600 - 3 * 512


def test_stream_flush_pad_to_block(cfg):
    params = default_params(50, cfg)
    synth = StreamSynth(params, cfg, block=512)
    synth.push(0.0, 1000.0, 0.5)
    synth.push(0.01, 1000.0, 0.5)   # covers 160 samples
    out = synth.flush(pad_to_block=True)
    assert len(out) == 1 and len(out[0]) == 512


def test_stream_rejects_bad_pushes(cfg):
    synth = StreamSynth(default_params(50, cfg), cfg)
    synth.push(0.0, 1000.0, 0.0)
    with pytest.raises(InvalidInputError):
        synth.push(0.0, 1000.0, 0.0)    # non-increasing time
    with pytest.raises(InvalidInputError):
        synth.push(0.1, -5.0, 0.0)      # negative rpm


def test_stream_empty_feed(cfg):
    synth = StreamSynth(default_params(50, cfg), cfg)
    assert synth.available() == 0
    assert synth.pull() == []
    assert synth.flush() == []
