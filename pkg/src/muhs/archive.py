"""CSV and manifest writers for run archives."""
from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from muhs.timestep import DIAGNOSTIC_COLUMNS, TrajectoryRecord

__all__ = ["fmt", "write_csv", "write_trajectory", "write_diagnostics", "write_manifest", "read_csv"]


def fmt(v) -> str:
    """17 significant digits, enough to round-trip a float64."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def write_trajectory(path, traj: TrajectoryRecord) -> Path:
    n = traj.u[0].shape[0]
    header = ["t"] + [f"u_{j}" for j in range(n)] + [f"rho_{j}" for j in range(n)]
    rows = ([t, *u, *r] for t, u, r in zip(traj.times, traj.u, traj.rho))
    return write_csv(path, header, rows)


def write_diagnostics(path, traj: TrajectoryRecord) -> Path:
    rows = ([d[c] for c in DIAGNOSTIC_COLUMNS] for d in traj.diagnostics)
    return write_csv(path, DIAGNOSTIC_COLUMNS, rows)


def write_manifest(path, command: str, config: dict, files: dict, extra: dict | None = None) -> Path:
    """Plain-text manifest: config echo, code version, timestamp, file layout."""
    from muhs import __version__

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"command: {command}",
        f"muhs_version: {__version__}",
        f"numpy_version: {np.__version__}",
        f"written_utc: {datetime.now(timezone.utc).isoformat(timespec='seconds')}",
    ]
    for k, v in (extra or {}).items():
        lines.append(f"{k}: {fmt(v)}")
    lines.append("files:")
    for name, desc in files.items():
        lines.append(f"  {name}: {desc}")
    lines.append("config:")
    lines.append(json.dumps(config, indent=2, sort_keys=True))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
