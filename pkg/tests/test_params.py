import json

import numpy as np
import pytest
import torch

from ptrsynth.config import InvalidInputError, SynthConfig
from ptrsynth.params import (ParamSet, default_params, from_raw, load_params,
                             save_params, softplus_inv, to_raw)


def test_default_params_shapes(cfg):
    p = default_params(125, cfg)
    assert p.pulse.lam.shape == (8, 125)
    assert p.pulse.timing.shape == (8,)
    assert p.noise.band_gains.shape == (16, 125)
    assert set(p.resonators) == {"left", "right", "shared"}
    assert p.resonators["left"].delay_logits.shape == (400 - 16 + 1,)


def test_softplus_inverse_roundtrip():
    y = torch.tensor([1e-6, 0.1, 1.0, 5.0, 30.0], dtype=torch.float64)
    x = softplus_inv(y)
    assert torch.allclose(torch.nn.functional.softplus(x), y, rtol=1e-9)


def test_raw_roundtrip_preserves_constrained_values(cfg):
    p = default_params(10, cfg)
    p.pulse.timing += 0.1
    raw = to_raw(p, cfg)
    back = from_raw(raw, p, cfg)
    assert torch.allclose(back.pulse.lam, p.pulse.lam, atol=1e-9)
    assert torch.allclose(back.pulse.nu, p.pulse.nu, atol=1e-9)
    assert torch.allclose(back.pulse.timing, p.pulse.timing, atol=1e-9)
    assert torch.allclose(back.noise.band_gains, p.noise.band_gains, atol=1e-9)
    assert torch.allclose(back.resonators["left"].theta1,
                          p.resonators["left"].theta1)


def test_from_raw_enforces_ranges(cfg):
    p = default_params(5, cfg)
    raw = to_raw(p, cfg)
    # push every raw variable far out; the mappings must keep ranges legal
    wild = {k: v + 40.0 for k, v in raw.items()}
    q = from_raw(wild, p, cfg)
    assert torch.all(q.pulse.nu > 0) and torch.all(q.pulse.nu <= 1)
    assert torch.all(q.pulse.alpha > 0.1 - 1e-9)
    assert torch.all(q.pulse.timing.abs() <= cfg.timing_limit_rad + 1e-12)
    assert torch.all(q.noise.band_gains >= 0)


def test_timing_limit_is_forty_crank_degrees(cfg):
    # 40 degrees of a 720-degree cycle as cycle phase
    assert cfg.timing_limit_rad == pytest.approx(40.0 / 720.0 * 2 * np.pi)


def test_save_load_roundtrip(tmp_path, cfg):
    p = default_params(7, cfg)
    p.noise.seed = 99
    path = tmp_path / "p.json"
    save_params(p, path, cfg)
    q = load_params(path)
    assert torch.allclose(q.pulse.lam, p.pulse.lam)
    assert torch.allclose(q.noise.band_gains, p.noise.band_gains)
    assert q.noise.seed == 99
    assert torch.allclose(q.resonators["shared"].delay_logits,
                          p.resonators["shared"].delay_logits)
    doc = json.loads(path.read_text())
    assert doc["schema"] == "ptr_params_v1"
    assert doc["engine"]["firing_order"] == [1, 5, 4, 8, 6, 3, 7, 2]


def test_load_fixed_delay_snapshot(tmp_path, cfg):
    p = default_params(4, cfg)
    path = tmp_path / "p.json"
    save_params(p, path, cfg)
    doc = json.loads(path.read_text())
    for name in doc["resonators"]:
        r = doc["resonators"][name]
        del r["delay_logits"]
        r["delay"] = 200
    path.write_text(json.dumps(doc))
    q = load_params(path)
    assert int(torch.argmax(q.resonators["left"].delay_logits)) == 200 - 16


def test_load_rejects_bad_schema(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"schema": "something_else"}')
    with pytest.raises(InvalidInputError):
        load_params(path)


def test_load_rejects_missing_field(tmp_path, cfg):
    p = default_params(4, cfg)
    path = tmp_path / "p.json"
    save_params(p, path, cfg)
    doc = json.loads(path.read_text())
    del doc["pulse"]["nu"]
    path.write_text(json.dumps(doc))
    with pytest.raises(InvalidInputError):
        load_params(path)


def test_load_rejects_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(InvalidInputError):
        load_params(path)


def test_paramset_requires_three_resonators(cfg):
    p = default_params(4, cfg)
    with pytest.raises(InvalidInputError):
        ParamSet(pulse=p.pulse, noise=p.noise, engine=p.engine,
                 resonators={"left": p.resonators["left"]})
