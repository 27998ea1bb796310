"""Command-line interface.

Exit codes: 0 ok, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import csv
import sys
from dataclasses import fields as dc_fields

import click
import numpy as np
import torch

from . import losses, verify
from .config import InvalidInputError, PtrError, SynthConfig
from .control import ControlTrajectory
from .fit import FitConfig, fit as run_fit
from .params import default_params, load_params, save_params
from .pulse import harmonic_decay_weights, phase_bend, pressure_envelope
from .render import render
from .streaming import StreamSynth
from .wavio import read_wav, write_wav


def load_config(path) -> dict:
    """Parse the ``key = value`` config file (see docs/config.md)."""
    out = {}
    valid = {f.name: f.type for f in dc_fields(SynthConfig)}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInputError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in valid:
                raise InvalidInputError(f"{path}:{lineno}: unknown key '{key}'")
            try:
                if key == "firing_order":
                    out[key] = tuple(int(v) for v in value.split(","))
                elif key in ("harmonics", "noise_bands", "noise_block", "delay_min",
                             "delay_max", "n_cylinders", "stream_block"):
                    out[key] = int(value)
                else:
                    out[key] = float(value)
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc
    return out


def build_config(config_path, **flag_overrides) -> SynthConfig:
    """Precedence: flags > config file > built-in defaults."""
    values = {}
    if config_path:
        values.update(load_config(config_path))
    values.update({k: v for k, v in flag_overrides.items() if v is not None})
    return SynthConfig(**values)


def _die(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(2)


@click.group()
def main():
    """Pulse-train engine-sound synthesizer."""


@main.command("render")
@click.argument("control_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@click.option("-p", "--params", "params_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the noise seed.")
@click.option("--sample-rate", type=float, default=None)
@click.option("--normalize", is_flag=True, help="Peak-normalize the output.")
@click.option("--pcm16", is_flag=True, help="Write 16-bit PCM instead of float32.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def cmd_render(control_csv, output, params_path, seed, sample_rate, normalize,
               pcm16, config_path):
    """Render a control trajectory to a mono WAV file."""
    try:
        cfg = build_config(config_path, sample_rate=sample_rate)
        traj = ControlTrajectory.from_csv(control_csv, cfg.model_rate)
        if params_path:
            params = load_params(params_path)
        else:
            n_frames = max(2, int(traj.duration * cfg.model_rate))
            params = default_params(n_frames, cfg)
        if seed is not None:
            params.noise.seed = seed
        audio = render(traj, params, cfg)
        if normalize:
            peak = np.max(np.abs(audio))
            if peak > 0:
                audio = audio / peak
        write_wav(output, audio, int(cfg.sample_rate), pcm16=pcm16)
    except (PtrError, OSError) as exc:
        _die(exc)
    click.echo(f"wrote {output} ({len(audio)} samples at {cfg.sample_rate:g} Hz)")


@main.command("fit")
@click.argument("target_wav", type=click.Path(exists=True, dir_okay=False))
@click.argument("control_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@click.option("--init", "init_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=0)
@click.option("--iters", type=int, default=200)
@click.option("--lr", type=float, default=1e-3)
@click.option("--weight-decay", type=float, default=1e-2)
@click.option("--harmonic-weight", type=float, default=1.0)
@click.option("--stop-ratio", type=float, default=None,
              help="Stop once total and harmonic loss reach this fraction of initial.")
@click.option("--one-cycle/--no-one-cycle", default=True)
@click.option("--float32", is_flag=True, help="Optimize in float32 (faster).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def cmd_fit(target_wav, control_csv, output, init_path, trace_path, seed, iters,
            lr, weight_decay, harmonic_weight, stop_ratio, one_cycle, float32,
            config_path):
    """Fit synthesis parameters to a target recording."""
    try:
        cfg = build_config(config_path)
        traj = ControlTrajectory.from_csv(control_csv, cfg.model_rate)
        target = read_wav(target_wav, int(cfg.sample_rate))
        if init_path:
            init = load_params(init_path)
        else:
            init = default_params(max(2, int(traj.duration * cfg.model_rate)), cfg)
        fit_cfg = FitConfig(
            learning_rate=lr, weight_decay=weight_decay, iterations=iters,
            one_cycle=one_cycle, harmonic_weight=harmonic_weight, seed=seed,
            stop_ratio=stop_ratio,
            dtype=torch.float32 if float32 else torch.float64)

        def progress(row):
            click.echo(f"iter {row.iteration:4d}  total {row.breakdown.total:.5f}  "
                       f"stft {row.breakdown.stft:.5f}  "
                       f"harmonic {row.breakdown.harmonic:.5f}  "
                       f"lr {row.learning_rate:.2e}", err=True)

        fitted, trace = run_fit(target, traj, init, fit_cfg, cfg,
                                on_iteration=progress)
        save_params(fitted, output, cfg)
        if trace_path:
            with open(trace_path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["iter", "total", "stft", "harmonic", "lr"])
                for row in trace:
                    writer.writerow([row.iteration, row.breakdown.total,
                                     row.breakdown.stft, row.breakdown.harmonic,
                                     row.learning_rate])
    except (PtrError, OSError) as exc:
        _die(exc)
    click.echo(f"wrote {output}; final loss {trace[-1].breakdown.total:.5f}")


@main.command("pulse-plot")
@click.option("-s", "--param-set", "param_sets", multiple=True, required=True,
              help="Comma-separated lam,alpha,beta,nu (repeatable).")
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@click.option("--resolution", type=int, default=1024)
def cmd_pulse_plot(param_sets, output, resolution):
    """Emit pulse-shape curves (base, envelope, bent, final) as CSV."""
    try:
        sets = []
        for spec_str in param_sets:
            vals = [float(v) for v in spec_str.split(",")]
            if len(vals) != 4:
                raise InvalidInputError(
                    f"parameter set '{spec_str}' must be lam,alpha,beta,nu")
            sets.append(vals)
        phase = torch.linspace(0.0, 2.0 * np.pi, resolution, dtype=torch.float64)
        n_harm = 24
        with open(output, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["set", "phase", "base", "envelope", "bent", "final"])
            for si, (lam, alpha, beta, nu) in enumerate(sets):
                w = harmonic_decay_weights(torch.tensor(float(lam)), n_harm,
                                           torch.tensor(0.0), 1.0)
                k = torch.arange(1, n_harm + 1, dtype=phase.dtype).unsqueeze(-1)
                base = (w.unsqueeze(-1) * torch.sin(k * phase)).sum(dim=0)
                env = pressure_envelope(phase, float(alpha), float(beta))
                bent = (w.unsqueeze(-1)
                        * torch.sin(k * phase_bend(phase, float(nu)))).sum(dim=0)
                final = env * bent
                for j in range(resolution):
                    writer.writerow([si, float(phase[j]), float(base[j]),
                                     float(env[j]), float(bent[j]), float(final[j])])
    except (PtrError, OSError, ValueError) as exc:
        _die(exc)
    click.echo(f"wrote {output}")


@main.command("verify")
@click.option("--suite", "suites", multiple=True,
              type=click.Choice(sorted(verify.SUITES)),
              help="Suites to run (default: all).")
@click.option("--tolerance", type=float, default=None)
@click.option("--seed", type=int, default=0)
@click.option("--inject-unstable", is_flag=True, hidden=True)
def cmd_verify(suites, tolerance, seed, inject_unstable):
    """Run oracle self-check suites; nonzero exit on failure."""
    results = verify.run_suites(list(suites) or None, tolerance=tolerance,
                                inject_unstable=inject_unstable, seed=seed)
    failed = False
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        click.echo(f"{status}  {r.name:12s} worst={r.worst:.3e}  ({r.detail})")
        failed = failed or not r.passed
    sys.exit(1 if failed else 0)


@main.command("stream")
@click.option("-p", "--params", "params_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--block", type=int, default=None)
@click.option("--duration-hint", type=float, default=8.0,
              help="Frame count used when building default parameters.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def cmd_stream(params_path, block, duration_hint, config_path):
    """Read time,rpm,torque lines on stdin; write float32 blocks to stdout."""
    try:
        cfg = build_config(config_path)
        if params_path:
            params = load_params(params_path)
        else:
            params = default_params(max(2, int(duration_hint * cfg.model_rate)), cfg)
        synth = StreamSynth(params, cfg, block=block)
    except (PtrError, OSError) as exc:
        _die(exc)
    out = sys.stdout.buffer
    for line in sys.stdin:
        line = line.strip()
        if not line or line.startswith("time"):
            continue
        try:
            t, rpm, torque = (float(v) for v in line.split(","))
            synth.push(t, rpm, torque)
        except (ValueError, InvalidInputError) as exc:
            click.echo(f"warning: dropped frame '{line}': {exc}", err=True)
            continue
        for blk in synth.pull():
            out.write(blk.astype(np.float32).tobytes())
            out.flush()
    for blk in synth.flush():
        out.write(blk.astype(np.float32).tobytes())
    out.flush()


if __name__ == "__main__":
    main()
