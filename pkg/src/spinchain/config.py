"""Experiment configuration: JSON loading, defaults and validation.

A configuration file is a JSON object; every key is optional and falls
back to the defaults of the subcommand being run (the defaults reproduce
the acceptance-scale studies). Recognized keys:

    {
      "experiment": "free text id",
      "params": {"b": 1.2, "beta": 1.2, "q": 0.0, "N": 64, "c": 0.2},
      "q_grid":  {"min": -1.0, "max": 1.0, "n": 81},
      "p_grid":  {"min": -0.999, "max": 0.999, "n": 2001},
      "n_ladder": [50, 100, 200, 400],
      "integrator": {"t_end": 150.0, "grad_tol": 1e-8},
      "quench": {"q_from": 0.4, "beta0": 1.6, "beta1": 1.1, "a": 0.5},
      "seed": null
    }

``seed`` is reserved: the current pipelines are deterministic and consume
no randomness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .model import ModelParams

_DEFAULTS = {
    "equilibrium": {
        "params": {"b": 1.2, "beta": 1.2, "q": 0.0, "N": 400, "c": 0.2},
        "q_grid": {"min": -1.0, "max": 1.0, "n": 81},
        "n_ladder": [50, 100, 200, 400],
    },
    "fp": {
        "params": {"b": 1.0, "beta": 0.5, "q": 0.0, "N": 64, "c": 0.2},
        "quench": {"q_from": 0.4},
        "integrator": {"t_end": 150.0, "grad_tol": 1e-8},
    },
    "glauber": {
        "params": {"b": 1.0, "beta": 1.8, "q": -0.08, "N": 64, "c": 0.2},
        "integrator": {"t_end": 50.0},
        "n_ladder": [2, 4, 6, 8, 10],
    },
    "drift": {
        "params": {"b": 1.0, "beta": 1.8, "q": -0.08, "N": 100, "c": 0.2},
        "p_grid": {"min": -0.999, "max": 0.999, "n": 2001},
        "n_ladder": [100, 200, 400, 800, 1600],
    },
    "basin": {
        "params": {"b": 1.2, "beta": 1.2, "q": 0.0, "N": 400, "c": 0.2},
        "p_grid": {"min": -0.9999, "max": 0.9999, "n": 2001},
        "n_ladder": [100, 200, 400],
    },
    "chord": {
        "params": {"b": 1.2, "beta": 1.6, "q": 0.0, "N": 64, "c": 0.2},
        "quench": {"beta0": 1.6, "beta1": 1.1, "a": 0.5},
    },
    "toy": {
        "params": {"b": 1.0, "beta": 1.0, "q": 0.7, "N": 8, "c": 0.2},
        "integrator": {"t_end": 40.0},
    },
    "all": {
        "params": {"b": 1.2, "beta": 1.2, "q": 0.0, "N": 64, "c": 0.2},
    },
}


@dataclass
class ExperimentConfig:
    subcommand: str
    experiment: str
    params: ModelParams
    q_grid: np.ndarray
    p_grid: np.ndarray
    n_ladder: list[int]
    t_end: float
    grad_tol: float
    quench: dict
    seed: int | None
    raw: dict = field(repr=False, default_factory=dict)

    def as_dict(self) -> dict:
        return self.raw


def _grid(spec: dict, what: str) -> np.ndarray:
    try:
        lo, hi, n = float(spec["min"]), float(spec["max"]), int(spec["n"])
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigurationError(f"bad {what} grid spec: {spec!r}") from err
    if not (lo < hi and n >= 2):
        raise ConfigurationError(f"{what} grid needs min < max and n >= 2")
    return np.linspace(lo, hi, n)


def _merge(defaults: dict, override: dict) -> dict:
    out = dict(defaults)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(subcommand: str, path=None) -> ExperimentConfig:
    """Build the effective configuration for a subcommand.

    ``path`` may be None (pure defaults), a JSON file path, or an already
    parsed dict (used by tests).
    """
    if subcommand not in _DEFAULTS:
        raise ConfigurationError(f"unknown subcommand {subcommand!r}")
    override = {}
    if path is not None:
        if isinstance(path, dict):
            override = path
        else:
            p = Path(path)
            if not p.exists():
                raise ConfigurationError(f"config file not found: {p}")
            try:
                override = json.loads(p.read_text())
            except json.JSONDecodeError as err:
                raise ConfigurationError(f"config is not valid JSON: {err}") from err
            if not isinstance(override, dict):
                raise ConfigurationError("config root must be a JSON object")
    merged = _merge(_DEFAULTS[subcommand], override)
    merged.setdefault("experiment", subcommand)
    merged.setdefault("q_grid", {"min": -1.0, "max": 1.0, "n": 81})
    merged.setdefault("p_grid", {"min": -0.999, "max": 0.999, "n": 2001})
    merged.setdefault("n_ladder", [])
    merged.setdefault("integrator", {})
    merged.setdefault("quench", {})
    merged.setdefault("seed", None)

    pd = merged["params"]
    try:
        params = ModelParams(b=float(pd["b"]), beta=float(pd["beta"]),
                             q=float(pd.get("q", 0.0)), N=int(pd["N"]),
                             c=float(pd.get("c", 0.2)))
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigurationError(f"bad params block: {pd!r}") from err

    ladder = [int(n) for n in merged["n_ladder"]]
    if ladder and any(b2 <= a for a, b2 in zip(ladder, ladder[1:])):
        raise ConfigurationError("n_ladder must be strictly increasing")
    integ = merged["integrator"]
    t_end = float(integ.get("t_end", 50.0))
    grad_tol = float(integ.get("grad_tol", 1e-8))
    if t_end <= 0 or grad_tol <= 0:
        raise ConfigurationError("integrator tolerances must be positive")

    return ExperimentConfig(
        subcommand=subcommand,
        experiment=str(merged["experiment"]),
        params=params,
        q_grid=_grid(merged["q_grid"], "q"),
        p_grid=_grid(merged["p_grid"], "p"),
        n_ladder=ladder,
        t_end=t_end,
        grad_tol=grad_tol,
        quench=dict(merged["quench"]),
        seed=merged["seed"],
        raw=merged,
    )
