import numpy as np
import pytest
import torch

from ptrsynth.config import SynthConfig
from ptrsynth.control import ControlTrajectory
from ptrsynth.params import default_params

torch.set_num_threads(1)


@pytest.fixture
def cfg():
    return SynthConfig()


@pytest.fixture
def short_traj():
    """One second at constant 3000 RPM, half torque."""
    n = 126
    return ControlTrajectory(
        rpm=np.full(n, 3000.0), torque=np.full(n, 0.5), control_rate=125.0)


@pytest.fixture
def short_params(short_traj, cfg):
    return default_params(int(short_traj.duration * cfg.model_rate), cfg)
