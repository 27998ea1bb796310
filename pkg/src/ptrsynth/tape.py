"""Reverse-mode differentiation over the synthesis graph.

A :class:`Tape` owns the named learnable leaves for one fit run, records
the forward computation built from them (torch autograd is the recording
engine) and maps a scalar loss back to one gradient per registered
parameter.  ``grad_check`` validates any such graph against central
finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
import torch

from .config import DEFAULT_DTYPE, PtrError


class TapeError(PtrError):
    """Misuse of the differentiation tape."""


class Tape:
    """Single-owner record of one differentiable forward pass.

    Parameters are registered by name before the forward computation;
    ``backward`` may run once per recorded pass, and every registered
    parameter receives a gradient (exactly zero when unused by the loss).
    """

    def __init__(self):
        self._params: Dict[str, torch.Tensor] = {}
        self._consumed = False

    def watch(self, name: str, value, dtype=DEFAULT_DTYPE) -> torch.Tensor:
        if name in self._params:
            raise TapeError(f"parameter '{name}' already registered")
        if isinstance(value, torch.Tensor):
            leaf = value.detach().clone().to(dtype).requires_grad_(True)
        else:
            leaf = torch.as_tensor(np.asarray(value, dtype=np.float64),
                                   dtype=dtype).requires_grad_(True)
        self._params[name] = leaf
        return leaf

    @property
    def parameters(self) -> Dict[str, torch.Tensor]:
        return dict(self._params)

    def backward(self, loss: torch.Tensor) -> Dict[str, np.ndarray]:
        if loss.dim() != 0:
            raise TapeError("loss must be scalar")
        if self._consumed:
            raise TapeError("backward already ran; reset the tape first")
        self._consumed = True
        leaves = list(self._params.values())
        grads = torch.autograd.grad(loss, leaves, allow_unused=True,
                                    retain_graph=False)
        out = {}
        for (name, leaf), g in zip(self._params.items(), grads):
            if g is None:
                g = torch.zeros_like(leaf)
            out[name] = g.detach().cpu().numpy()
        return out

    def reset(self):
        self._params.clear()
        self._consumed = False


@dataclass
class GradCheckEntry:
    name: str
    index: tuple
    analytic: float
    numeric: float
    rel_error: float
    abs_error: float


@dataclass
class GradCheckReport:
    """Worst finite-difference disagreements per parameter."""

    max_rel_error: float
    max_abs_error: float
    entries: List[GradCheckEntry]
    excluded: List[str] = field(default_factory=list)

    def passed(self, rel_tol: float = 1e-3, abs_tol: float = 1e-6) -> bool:
        return all(e.rel_error <= rel_tol or e.abs_error <= abs_tol
                   for e in self.entries)


def grad_check(fn: Callable[[Dict[str, torch.Tensor]], torch.Tensor],
               params: Dict[str, np.ndarray], step: float = 1e-4,
               max_entries_per_param: int = 4, seed: int = 0,
               excluded: Optional[List[str]] = None) -> GradCheckReport:
    """Compare tape gradients of ``fn`` against central finite differences.

    ``fn`` receives the named leaves and returns a scalar loss.  For large
    parameters a seeded random subset of coordinates is probed.
    """
    tape = Tape()
    leaves = {name: tape.watch(name, value) for name, value in params.items()}
    grads = tape.backward(fn(leaves))

    rng = np.random.default_rng(seed)
    entries: List[GradCheckEntry] = []

    def eval_at(shift_name, flat_index, delta) -> float:
        local = {}
        for name, value in params.items():
            arr = np.array(value, dtype=np.float64)
            if name == shift_name:
                arr.reshape(-1)[flat_index] += delta
            local[name] = torch.as_tensor(arr, dtype=DEFAULT_DTYPE)
        return float(fn(local).detach())

    for name, value in params.items():
        size = int(np.size(value))
        if size <= max_entries_per_param:
            picks = np.arange(size)
        else:
            picks = rng.choice(size, size=max_entries_per_param, replace=False)
        for flat in picks:
            hi = eval_at(name, int(flat), step)
            lo = eval_at(name, int(flat), -step)
            numeric = (hi - lo) / (2.0 * step)
            analytic = float(np.asarray(grads[name]).reshape(-1)[int(flat)])
            abs_err = abs(analytic - numeric)
            denom = max(abs(analytic), abs(numeric))
            rel = abs_err / denom if denom > 0 else 0.0
            entries.append(GradCheckEntry(
                name=name,
                index=np.unravel_index(int(flat), np.shape(value) or (1,)),
                analytic=analytic, numeric=numeric,
                rel_error=rel, abs_error=abs_err))
    entries.sort(key=lambda e: e.rel_error, reverse=True)
    return GradCheckReport(
        max_rel_error=max((e.rel_error for e in entries), default=0.0),
        max_abs_error=max((e.abs_error for e in entries), default=0.0),
        entries=entries, excluded=list(excluded or []))
