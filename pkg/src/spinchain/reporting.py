"""Deterministic CSV/JSON writers and run metadata sidecars.

Numbers are written with 17 significant digits, enough to round-trip IEEE
doubles, so identical configurations produce byte-identical artifacts.
Every artifact gets a ``<name>.meta.json`` sidecar with the configuration
hash, package version and the tolerance settings in force.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__

TOLERANCES = {
    "density_mass_rtol": 1e-12,
    "gradient_stop_w_norm": 1e-8,
    "potential_residual_rtol": 1e-10,
    "psi_drop_per_step": 1e-12,
    "boundary_band": 1e-9,
}


def fmt(value) -> str:
    """Fixed 17-significant-digit decimal rendering of one cell."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_canonical(v) for v in obj.tolist()]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_canonical(obj), indent=2, sort_keys=True) + "\n")
    return path


def config_hash(config: dict) -> str:
    blob = json.dumps(_canonical(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def write_sidecar(artifact_path, config: dict, extra: dict | None = None) -> Path:
    artifact_path = Path(artifact_path)
    meta = {
        "artifact": artifact_path.name,
        "config_hash": config_hash(config),
        "config": config,
        "package_version": __version__,
        "tolerances": TOLERANCES,
    }
    if extra:
        meta["extra"] = extra
    return write_json(artifact_path.with_suffix(artifact_path.suffix + ".meta.json"),
                      meta)
