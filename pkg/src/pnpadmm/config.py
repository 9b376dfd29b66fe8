"""Experiment configuration files.

Configs are JSON trees with an explicit ``schema_version``. Parsing is
strict: unknown keys anywhere in the tree are errors, as are keys that
do not apply to the configured task kind. Relative paths are resolved
against the directory containing the config file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .apps import (
    TaskConfig,
    completion_config,
    demosaic_config,
    interpolation_config,
    poisson_config,
)

__all__ = ["SCHEMA_VERSION", "ExperimentConfig", "ConfigError", "load_config", "parse_config", "config_to_dict"]

SCHEMA_VERSION = 1

_TASK_KEYS = {
    "completion": {"kind", "rate"},
    "interpolation": {"kind", "factor"},
    "demosaic": {"kind", "cfa", "noise_sigma"},
    "poisson": {"kind", "peak", "anscombe_init"},
}
_SOLVER_KEYS = {
    "sigma",
    "sigma0_den",
    "sigmaN_den",
    "preconditioner",
    "epsilon",
    "sigma_f_last",
    "passthrough",
    "poisson_floor",
    "update_precond",
}
_DENOISER_KEYS = {"name", "params", "adapter"}
_PATH_KEYS = {"reference", "observation", "mask", "output_png", "output_raw", "trace"}
_TOP_KEYS = {"schema_version", "task", "seed", "n_iter", "solver", "denoiser", "paths"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    task: TaskConfig
    paths: dict = field(default_factory=dict)
    adapter: str | None = None


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")


def _expect(value, types, where: str):
    if not isinstance(types, tuple):
        types = (types,)
    # bool passes isinstance(int) checks; only accept it when explicit
    if (isinstance(value, bool) and bool not in types) or not isinstance(value, types):
        names = "/".join(t.__name__ for t in types)
        raise ConfigError(f"{where}: expected {names}, got {type(value).__name__}")
    return value


def parse_config(tree: dict, *, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(tree, dict):
        raise ConfigError("config: top level must be an object")
    _check_keys(tree, _TOP_KEYS, "config")
    if "schema_version" not in tree:
        raise ConfigError("config: missing schema_version")
    if tree["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"config: unsupported schema_version {tree['schema_version']!r}, "
            f"expected {SCHEMA_VERSION}"
        )
    task_tree = tree.get("task")
    if not isinstance(task_tree, dict) or "kind" not in task_tree:
        raise ConfigError("config.task: must be an object with a 'kind' key")
    kind = task_tree["kind"]
    if kind not in _TASK_KEYS:
        raise ConfigError(f"config.task.kind: unknown task {kind!r}")
    _check_keys(task_tree, _TASK_KEYS[kind], "config.task")

    builder_kwargs: dict = {}
    seed = _expect(tree.get("seed", 0), int, "config.seed")
    n_iter = tree.get("n_iter")
    if n_iter is not None:
        builder_kwargs["n_iter"] = _expect(n_iter, int, "config.n_iter")

    solver = tree.get("solver", {})
    _expect(solver, dict, "config.solver")
    _check_keys(solver, _SOLVER_KEYS, "config.solver")

    denoiser = tree.get("denoiser", {})
    _expect(denoiser, dict, "config.denoiser")
    _check_keys(denoiser, _DENOISER_KEYS, "config.denoiser")
    adapter = denoiser.get("adapter")
    if adapter is not None:
        _expect(adapter, str, "config.denoiser.adapter")

    if kind == "completion":
        if "rate" not in task_tree:
            raise ConfigError("config.task: completion needs 'rate'")
        task = completion_config(
            float(_expect(task_tree["rate"], (int, float), "config.task.rate")),
            **builder_kwargs,
        )
    elif kind == "interpolation":
        if "factor" not in task_tree:
            raise ConfigError("config.task: interpolation needs 'factor'")
        task = interpolation_config(
            _expect(task_tree["factor"], int, "config.task.factor"),
            n_iter=builder_kwargs.get("n_iter"),
        )
    elif kind == "demosaic":
        task = demosaic_config(
            cfa=_expect(task_tree.get("cfa", "RGGB"), str, "config.task.cfa"),
            noise_sigma=float(
                _expect(
                    task_tree.get("noise_sigma", 0.0), (int, float), "config.task.noise_sigma"
                )
            ),
            **builder_kwargs,
        )
    else:
        if "peak" not in task_tree:
            raise ConfigError("config.task: poisson needs 'peak'")
        task = poisson_config(
            float(_expect(task_tree["peak"], (int, float), "config.task.peak")),
            anscombe_init=_expect(
                task_tree.get("anscombe_init", False), bool, "config.task.anscombe_init"
            ),
            **builder_kwargs,
        )

    solver_types = {
        "sigma": (int, float),
        "sigma0_den": (int, float),
        "sigmaN_den": (int, float),
        "preconditioner": str,
        "epsilon": (int, float),
        "sigma_f_last": (int, float),
        "passthrough": bool,
        "poisson_floor": (int, float, type(None)),
        "update_precond": bool,
    }
    overrides: dict = {"seed": seed}
    for key in _SOLVER_KEYS:
        if key in solver:
            value = _expect(solver[key], solver_types[key], f"config.solver.{key}")
            if isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            overrides[key] = value
    if "name" in denoiser:
        overrides["denoiser_name"] = _expect(denoiser["name"], str, "config.denoiser.name")
    if "params" in denoiser:
        overrides["denoiser_params"] = dict(
            _expect(denoiser["params"], dict, "config.denoiser.params")
        )
    try:
        task = task.with_overrides(**overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}") from exc

    paths_tree = tree.get("paths", {})
    _expect(paths_tree, dict, "config.paths")
    _check_keys(paths_tree, _PATH_KEYS, "config.paths")
    paths = {}
    for key, value in paths_tree.items():
        value = _expect(value, str, f"config.paths.{key}")
        path = Path(value)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        paths[key] = str(path)

    return ExperimentConfig(task=task, paths=paths, adapter=adapter)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        tree = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(tree, base_dir=path.parent)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Serialise back to the JSON tree shape accepted by parse_config."""
    task = cfg.task
    task_tree: dict = {"kind": task.kind}
    if task.kind == "completion":
        task_tree["rate"] = task.rate
    elif task.kind == "interpolation":
        task_tree["factor"] = task.factor
    elif task.kind == "demosaic":
        task_tree["cfa"] = task.cfa
        task_tree["noise_sigma"] = task.noise_sigma
    else:
        task_tree["peak"] = task.peak
        task_tree["anscombe_init"] = task.anscombe_init
    tree = {
        "schema_version": SCHEMA_VERSION,
        "task": task_tree,
        "seed": task.seed,
        "n_iter": task.n_iter,
        "solver": {
            "sigma": task.sigma,
            "sigma0_den": task.sigma0_den,
            "sigmaN_den": task.sigmaN_den,
            "preconditioner": task.preconditioner,
            "epsilon": task.epsilon,
            "sigma_f_last": task.sigma_f_last,
            "passthrough": task.passthrough,
            "poisson_floor": task.poisson_floor,
            "update_precond": task.update_precond,
        },
        "denoiser": {
            "name": task.denoiser_name,
            "params": dict(task.denoiser_params),
        },
        "paths": dict(cfg.paths),
    }
    if cfg.adapter is not None:
        tree["denoiser"]["adapter"] = cfg.adapter
    return tree
