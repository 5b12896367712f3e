"""
Utility functions for the smoothppl package.
"""

import json
import platform
import sys
import zlib
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np


def make_rng(seed: int, *stream: str) -> np.random.Generator:
    """
    Counter-based generator for a named sub-stream of a seed.

    Every component of the randomness (each estimator chunk, each falsifier
    trial) gets its own stream so results do not depend on evaluation order.

    Args:
        seed (int): Master seed
        *stream (str): Stream path, e.g. ("svi", "step", "12")

    Returns:
        np.random.Generator: Philox generator for that stream
    """
    key = tuple(zlib.crc32(part.encode("utf-8")) for part in stream)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def parse_theta(text: str, params: Sequence[str] = ()) -> Dict[str, float]:
    """
    Parse a parameter valuation.

    Accepts ``name=value`` pairs (``theta1=1,theta2=2``) or bare values
    assigned to ``params`` in order (``1,2``).

    Raises:
        ValueError: On malformed input, unknown or missing names, or a count mismatch
    """
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if all("=" in p for p in parts):
        out = {}
        for p in parts:
            key, value = p.split("=", 1)
            out[key.strip()] = float(value)
        if not params:
            return out
        unknown = set(out) - set(params)
        if unknown:
            raise ValueError(f"unknown parameters: {', '.join(sorted(unknown))}")
        missing = [k for k in params if k not in out]
        if missing:
            raise ValueError(f"missing parameters: {', '.join(missing)}")
        return {k: out[k] for k in params}
    if any("=" in p for p in parts):
        raise ValueError(f"mixed positional and named values: {text!r}")
    if len(parts) != len(params):
        raise ValueError(f"expected {len(params)} values for {', '.join(params)}, got {len(parts)}")
    return {k: float(v) for k, v in zip(params, parts)}


def to_json(data) -> str:
    """Deterministic JSON rendering used for every artifact."""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_output(text: str, path: Optional[str] = None) -> None:
    """Write an artifact to ``path`` or, when None, to stdout."""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(path)
    ensure_directory_exists(target.parent)
    target.write_text(text, encoding="utf-8")


def ensure_directory_exists(directory) -> Path:
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def format_vector(values: Sequence[float], digits: int = 4) -> str:
    return "(" + ", ".join(f"{float(v):.{digits}f}" for v in values) + ")"


def get_system_info() -> dict:
    """
    Get system information for logging purposes.

    Returns:
        dict: System information
    """
    return {
        "system": platform.system(),
        "machine": platform.machine(),
        "python_version": platform.python_version(),
        "numpy_version": np.__version__,
    }
