"""Deterministic CSV and JSON manifest writers."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy

from . import dynamics, lattice, spectral

VERSION = "0.1.0"


def fmt(x) -> str:
    """17 significant digits for floats; ints and strings pass through."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x == 0.0:
            return "0"  # folds -0.0
        return format(x, ".17g")
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def tolerances() -> dict:
    return {
        "cluster_tol": spectral.CLUSTER_TOL,
        "ep_condition": spectral.EP_CONDITION,
        "defect_radius": spectral.DEFECT_RADIUS,
        "lattice_zero_tol": lattice.ZERO_TOL,
        "lattice_consistency_tol": lattice.CONSISTENCY_TOL,
        "propagation_cross_check_tol": dynamics.CROSS_CHECK_TOL,
        "csv_significant_digits": 17,
    }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(x.real), _jsonable(x.imag)]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def write_manifest(out: Path, command: str, config: dict, files: Sequence[Path],
                   results: dict | None = None) -> Path:
    out = Path(out)
    doc = {
        "command": command,
        "config": config,
        "versions": {"opspace": VERSION, "numpy": np.__version__, "scipy": scipy.__version__},
        "tolerances": tolerances(),
        "files": sorted(Path(f).name for f in files),
        "results": results or {},
    }
    seed = os.environ.get("OPSPACE_SEED")
    if seed is not None:
        doc["opspace_seed"] = seed  # reserved, no deterministic path reads it
    path = out / f"{command.replace('-', '_')}_manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    return path
