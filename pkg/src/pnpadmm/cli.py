"""Command line interface.

Four subcommands cover the experiment loop:

* ``degrade``: synthesise an observation from a reference image.
* ``restore``: run the solver on an observation.
* ``eval``: print PSNR/MSE between two images.
* ``trace-plot``: turn a trace CSV into a gnuplot-ready CSV.

``degrade`` and ``restore`` are driven by a JSON config (see
:mod:`pnpadmm.config`). External denoisers are selected by setting the
denoiser name to ``external``; the adapter command line is taken from
``--adapter``, then the ``PNP_ADAPTER`` environment variable, then the
config's ``denoiser.adapter`` entry.
"""

from __future__ import annotations

import csv
import functools
import json
import math
import os
from pathlib import Path

import click

from .apps import run_task
from .config import ConfigError, ExperimentConfig, load_config
from .core import load_image, mse_between, psnr, store_image
from .degrade import (
    add_gaussian_noise,
    apply_sampling,
    cfa_masks,
    make_random_pattern,
    make_regular_grid_pattern,
    sample_poisson,
)
from .denoise import make_denoiser
from .external import ExternalDenoiser

__all__ = ["main"]

ADAPTER_ENV = "PNP_ADAPTER"


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    if math.isinf(value):
        return "inf"
    return repr(value)


def _require_paths(cfg: ExperimentConfig, keys, command: str) -> None:
    missing = [key for key in keys if key not in cfg.paths]
    if missing:
        raise ConfigError(f"config.paths: {command} needs {missing}")


def _config_errors(fn):
    """Turn ConfigError into a clean CLI error instead of a traceback."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


@click.group()
def main() -> None:
    """Preconditioned plug-and-play ADMM image restoration."""


@main.command()
@click.option("--config", "-c", "config_path", required=True, type=click.Path(exists=True))
@_config_errors
def degrade(config_path: str) -> None:
    """Synthesise the degraded observation for a config."""
    cfg = load_config(config_path)
    task = cfg.task
    _require_paths(cfg, ["reference", "observation"], "degrade")
    reference = load_image(cfg.paths["reference"])
    height, width, channels = reference.shape

    mask = None
    if task.kind == "completion":
        mask = make_random_pattern(height, width, channels, task.rate, task.seed)
        observation = apply_sampling(reference, mask)
    elif task.kind == "interpolation":
        mask = make_regular_grid_pattern(height, width, channels, task.factor)
        observation = apply_sampling(reference, mask)
    elif task.kind == "demosaic":
        source = reference
        if task.noise_sigma > 0:
            source = add_gaussian_noise(reference, task.noise_sigma, task.seed)
        mask = cfa_masks(task.cfa, height, width)
        observation = apply_sampling(source, mask)
    else:
        observation = sample_poisson(reference, task.peak, task.seed)

    store_image(observation, cfg.paths["observation"])
    if mask is not None and "mask" in cfg.paths:
        store_image(mask, cfg.paths["mask"])
    meta = {
        "seed": task.seed,
        "task": task.kind,
        "observation": cfg.paths["observation"],
    }
    meta_path = Path(cfg.paths["observation"]).with_suffix(".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    click.echo(f"wrote {cfg.paths['observation']}")


def _resolve_denoiser(cfg: ExperimentConfig, adapter_flag: str | None):
    task = cfg.task
    if task.denoiser_name != "external":
        return make_denoiser(task.denoiser_name, task.denoiser_params), None
    command = adapter_flag or os.environ.get(ADAPTER_ENV) or cfg.adapter
    if not command:
        raise ConfigError(
            "external denoiser requested but no adapter command given "
            f"(use --adapter, ${ADAPTER_ENV} or config.denoiser.adapter)"
        )
    session = ExternalDenoiser(command)
    return session, session


def _write_trace(path: str, trace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "rho", "xy_mse", "psnr"])
        for row in trace:
            writer.writerow([row.k, _fmt(row.rho), _fmt(row.xy_mse), _fmt(row.psnr)])


@main.command()
@click.option("--config", "-c", "config_path", required=True, type=click.Path(exists=True))
@click.option("--adapter", "adapter_flag", default=None, help="external adapter command line")
@_config_errors
def restore(config_path: str, adapter_flag: str | None) -> None:
    """Restore an observation and write image plus trace outputs."""
    cfg = load_config(config_path)
    task = cfg.task
    _require_paths(cfg, ["observation"], "restore")
    observation = load_image(cfg.paths["observation"])
    mask = None
    if task.kind == "completion":
        _require_paths(cfg, ["mask"], "restore (completion)")
        mask = load_image(cfg.paths["mask"])
    reference = None
    if "reference" in cfg.paths:
        reference = load_image(cfg.paths["reference"])

    denoiser, session = _resolve_denoiser(cfg, adapter_flag)
    try:
        result = run_task(task, observation, mask=mask, reference=reference, denoiser=denoiser)
    finally:
        if session is not None:
            session.close()

    if "output_png" in cfg.paths:
        store_image(result.image, cfg.paths["output_png"])
    if "output_raw" in cfg.paths:
        store_image(result.image, cfg.paths["output_raw"])
    if "trace" in cfg.paths:
        _write_trace(cfg.paths["trace"], result.trace)
    if reference is not None:
        final = psnr(reference, result.image)
        click.echo(f"PSNR: {_fmt_psnr(final)}")
    click.echo(f"done after {result.n_iter} iterations")


def _fmt_psnr(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return f"{value:.4f} dB"


@main.command("eval")
@click.argument("reference", type=click.Path(exists=True))
@click.argument("test", type=click.Path(exists=True))
@click.option("--peak", default=1.0, show_default=True, help="PSNR peak value")
def eval_cmd(reference: str, test: str, peak: float) -> None:
    """Print PSNR and MSE between REFERENCE and TEST."""
    ref = load_image(reference)
    img = load_image(test)
    err = mse_between(ref, img)
    value = psnr(ref, img, peak=peak)
    click.echo(f"PSNR: {_fmt_psnr(value)}")
    click.echo(f"MSE: {_fmt(err)}")


@main.command("trace-plot")
@click.argument("trace", type=click.Path(exists=True))
@click.option("--output", "-o", required=True, type=click.Path())
def trace_plot(trace: str, output: str) -> None:
    """Reshape a trace CSV into a gnuplot-ready CSV."""
    with open(trace, newline="") as fh:
        rows = list(csv.DictReader(fh))
    with open(output, "w", newline="") as fh:
        fh.write("# k,xy_mse,psnr\n")
        writer = csv.writer(fh)
        for row in rows:
            writer.writerow([row["k"], row["xy_mse"], row.get("psnr", "")])
    click.echo(f"wrote {output}")


if __name__ == "__main__":
    main()
