"""Deterministic CSV/JSON emission and pulse-file ingestion.

All floats are written with 12 significant digits, '.' decimal separator,
comma-separated columns and LF line endings, so reruns with identical
configuration produce byte-identical files.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .protocols import Sampled

__all__ = [
    "fmt",
    "write_csv",
    "write_json",
    "write_pulse_csv",
    "read_pulse_csv",
    "sampled_from_pulse",
    "default_out_dir",
]

OUT_DIR_ENV = "QOCT_OUTDIR"


def fmt(x) -> str:
    """12-significant-digit representation of a float (ints pass through)."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def default_out_dir(override: str | None = None) -> Path:
    if override:
        return Path(override)
    return Path(os.environ.get(OUT_DIR_ENV, "qoct-out"))


def write_csv(path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")
    return path


def _jsonable(obj):
    if isinstance(obj, (np.floating, float)):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    return obj


def write_json(path, obj: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n",
                    encoding="ascii", newline="\n")
    return path


def write_pulse_csv(path, protocol_or_times, values=None, n_samples: int | None = None) -> Path:
    """Write a `t,u` pulse file, one row per uniform grid point (left edges)."""
    if values is None:
        protocol = protocol_or_times
        if isinstance(protocol, Sampled):
            times = np.arange(protocol.n_t) * protocol.dt
            vals = protocol.values
        else:
            n = n_samples or 2001
            times = np.linspace(0.0, protocol.T, n, endpoint=False)
            vals = np.asarray(protocol.u(times + 0.5 * (protocol.T / n)), dtype=float)
    else:
        times = np.asarray(protocol_or_times, dtype=float)
        vals = np.asarray(values, dtype=float)
    return write_csv(path, ["t", "u"], zip(times, vals))


def read_pulse_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read and validate a `t,u` pulse file.

    Requires the exact header, strictly increasing uniform times starting at
    zero; raises ValueError on malformed input.
    """
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines or lines[0].strip().replace(" ", "") != "t,u":
        raise ValueError(f"{path}: expected header 't,u'")
    try:
        data = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])
    except ValueError:
        raise ValueError(f"{path}: malformed numeric row") from None
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise ValueError(f"{path}: need at least two 't,u' rows")
    t, u = data[:, 0], data[:, 1]
    if abs(t[0]) > 1e-12:
        raise ValueError(f"{path}: time grid must start at 0")
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise ValueError(f"{path}: times must be strictly increasing")
    # tolerate the jitter left by 12-significant-digit formatting
    step = (t[-1] - t[0]) / (len(t) - 1)
    if np.max(np.abs(dt - step)) > 1e-6 * step:
        raise ValueError(f"{path}: time grid must be uniform")
    return t, u


def sampled_from_pulse(times: np.ndarray, values: np.ndarray, u_max: float) -> Sampled:
    """Interpret pulse rows as cell values on a uniform grid of step t[1]-t[0]."""
    dt = times[1] - times[0]
    if np.max(np.abs(values)) > u_max + 1e-12:
        raise ValueError("pulse exceeds the amplitude bound u_max")
    return Sampled(T=float(times[-1] + dt), u_max=float(u_max),
                   values=np.asarray(values, dtype=float))
