"""Physics-informed pulse-train engine-sound synthesis and fitting."""

from .config import (InvalidInputError, ParameterRangeError, PtrError,
                     SynthConfig, UnstableFilterError)
from .control import ControlTrajectory
from .params import ParamSet, default_params, load_params, save_params
from .render import render
from .fit import FitConfig, fit

__all__ = [
    "ControlTrajectory", "FitConfig", "InvalidInputError", "ParamSet",
    "ParameterRangeError", "PtrError", "SynthConfig", "UnstableFilterError",
    "default_params", "fit", "load_params", "render", "save_params",
]

__version__ = "0.1.0"
