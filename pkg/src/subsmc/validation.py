"""Input validation helpers shared by the estimators and the CLI harness."""

from __future__ import annotations

import numpy as np


def check_state(x, name: str = "state") -> np.ndarray:
    """Coerce to a finite (4,) state vector [px, py, vx, vy]."""
    arr = np.asarray(x, dtype=float)
    if arr.shape != (4,):
        raise ValueError(f"{name} must have shape (4,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values: {arr}")
    return arr


def check_measurement_set(z, name: str = "measurements") -> np.ndarray:
    """Coerce one step's measurements to a finite (M, 2) array (M may be 0)."""
    arr = np.asarray(z, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim == 1 and arr.shape == (2,):
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (M, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_measurement_sequence(measurements) -> list[np.ndarray]:
    """Coerce a per-step sequence of measurement sets, at least one step."""
    if isinstance(measurements, np.ndarray) and measurements.ndim == 2:
        measurements = [measurements]
    out = [check_measurement_set(z, name=f"measurements[{k}]")
           for k, z in enumerate(measurements)]
    if not out:
        raise ValueError("measurement sequence is empty")
    return out


def check_rng(random_state) -> np.random.Generator:
    """Accept None, an int seed, a SeedSequence, or a Generator."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)


def split_rng(random_state, n: int) -> list[np.random.Generator]:
    """Derive n independent generators from one seed source."""
    if isinstance(random_state, np.random.Generator):
        return random_state.spawn(n)
    seq = random_state if isinstance(random_state, np.random.SeedSequence) \
        else np.random.SeedSequence(random_state)
    return [np.random.default_rng(child) for child in seq.spawn(n)]
