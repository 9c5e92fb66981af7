"""Synthetic scenario generation, evaluation metrics, and data exchange.

A scenario is a ground-truth trajectory drawn from the motion model plus,
per step, the shuffled union of Gaussian target measurements and uniform
clutter (Poisson counts, no origin labels).  Metrics are the per-step
positional RMSE across runs and the normalized likelihood-evaluation
ratio D of the adaptive filter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adaptive import StepDiagnostics
from .model import MotionParams, ObservationParams, transition_sample


@dataclass
class Scenario:
    """Ground truth and measurements for one simulated run."""

    truth: np.ndarray
    measurements: list
    motion: MotionParams | None = None
    observation: ObservationParams | None = None
    seed: int | None = None

    def __post_init__(self):
        if len(self.truth) != len(self.measurements):
            raise ValueError(
                f"truth has {len(self.truth)} steps but measurements has "
                f"{len(self.measurements)}")
        if len(self.truth) < 1:
            raise ValueError("scenario must cover at least one time step")


@dataclass
class RunStats:
    """Per-step outputs of one tracking run."""

    estimates: np.ndarray
    diagnostics: list
    wall_time: float = 0.0


def simulate_trajectory(x0, mp: MotionParams, t_steps: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Ground-truth states for steps 1..t_steps, iterated from x0."""
    if t_steps < 1:
        raise ValueError(f"t_steps must be at least 1, got {t_steps}")
    x = np.asarray(x0, dtype=float)
    truth = np.empty((t_steps, 4))
    for k in range(t_steps):
        x = transition_sample(x, mp, rng)
        truth[k] = x
    return truth


def simulate_measurements(x_true, op: ObservationParams,
                          rng: np.random.Generator) -> np.ndarray:
    """One step's measurement set: Poisson target + clutter points, shuffled.

    Target points are Gaussian around the true position (not gated to the
    region); clutter is uniform over the sensor region centered on the
    origin.  The returned (M, 2) array carries no origin labels.
    """
    x_true = np.asarray(x_true, dtype=float)
    n_target = rng.poisson(op.lambda_x)
    n_clutter = rng.poisson(op.lambda_c)
    chol = np.linalg.cholesky(op.sigma)
    target = x_true[:2] + rng.standard_normal((n_target, 2)) @ chol.T
    half = np.array([op.region_x / 2.0, op.region_y / 2.0])
    clutter = rng.uniform(-half, half, size=(n_clutter, 2))
    pts = np.concatenate([target, clutter], axis=0)
    rng.shuffle(pts, axis=0)
    return pts


def generate_scenario(x0, mp: MotionParams, op: ObservationParams, t_steps: int,
                      seed: int) -> Scenario:
    """Self-contained scenario draw, reproducible from the seed alone."""
    rng = np.random.default_rng(seed)
    truth = simulate_trajectory(x0, mp, t_steps, rng)
    measurements = [simulate_measurements(truth[k], op, rng) for k in range(t_steps)]
    return Scenario(truth=truth, measurements=measurements, motion=mp, observation=op,
                    seed=seed)


def rmse(truths, estimates, n_runs: int) -> np.ndarray:
    """Per-step positional RMSE across runs.

    For each step, the root mean square error over runs is taken per
    position component and the two components are averaged, giving one
    scalar per step.
    """
    truths = np.asarray(truths, dtype=float)
    estimates = np.asarray(estimates, dtype=float)
    if truths.ndim == 2:
        truths = truths[None, ...]
    if estimates.ndim == 2:
        estimates = estimates[None, ...]
    if truths.shape[0] != n_runs or estimates.shape[0] != n_runs:
        raise ValueError(
            f"expected {n_runs} runs, got truths {truths.shape[0]} and "
            f"estimates {estimates.shape[0]}")
    if truths.shape[:2] != estimates.shape[:2]:
        raise ValueError(
            f"misaligned inputs: truths {truths.shape} vs estimates {estimates.shape}")
    err = estimates[..., :2] - truths[..., :2]
    per_component = np.sqrt(np.mean(err**2, axis=0))
    return per_component.mean(axis=1)


def step_subsample_ratio(diag: StepDiagnostics, n_iter: int) -> float:
    """One step's fraction of likelihood evaluations vs the full-data chain."""
    if len(diag.s_joint) != n_iter or len(diag.s_refine) != n_iter:
        raise ValueError(
            f"diagnostics incomplete: expected {n_iter} entries, got "
            f"{len(diag.s_joint)} joint / {len(diag.s_refine)} refine")
    return (int(diag.s_joint.sum()) + int(diag.s_refine.sum())) / (2.0 * n_iter * diag.m_k)


def subsample_ratio_D(diags, n_iter: int, t_steps: int) -> float:
    """Time-averaged normalized subsampled-measurement count D in (0, 1].

    Steps with an empty measurement set are excluded from the average
    (no likelihood evaluations exist to normalize against).
    """
    if len(diags) != t_steps:
        raise ValueError(f"expected {t_steps} step diagnostics, got {len(diags)}")
    ratios = [step_subsample_ratio(d, n_iter) for d in diags if d.m_k > 0]
    if not ratios:
        raise ValueError("no step with measurements; D undefined")
    return float(np.mean(ratios))


def dump_scenario(scenario: Scenario, path) -> None:
    """Write truth and measurements as plain text, one record per line.

    Line formats (1-based step index, 17 significant digits):
      ``truth <k> <px> <py> <vx> <vy>``
      ``meas <k> <zx> <zy>``
    The format is language-neutral and round-trips floats bit-exactly.
    """
    with open(path, "w", encoding="ascii") as fh:
        for k in range(len(scenario.truth)):
            vals = " ".join(format(v, ".17g") for v in scenario.truth[k])
            fh.write(f"truth {k + 1} {vals}\n")
            for z in scenario.measurements[k]:
                fh.write(f"meas {k + 1} {format(z[0], '.17g')} {format(z[1], '.17g')}\n")


def load_scenario(path, mp: MotionParams | None = None,
                  op: ObservationParams | None = None) -> Scenario:
    """Read a scenario written by :func:`dump_scenario`."""
    truth_by_step: dict[int, np.ndarray] = {}
    meas_by_step: dict[int, list] = {}
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            kind, k, rest = parts[0], int(parts[1]), [float(v) for v in parts[2:]]
            if kind == "truth" and len(rest) == 4:
                truth_by_step[k] = np.array(rest)
            elif kind == "meas" and len(rest) == 2:
                meas_by_step.setdefault(k, []).append(rest)
            else:
                raise ValueError(f"{path}:{line_no}: unrecognized record {parts[0]!r}")
    t_steps = len(truth_by_step)
    if sorted(truth_by_step) != list(range(1, t_steps + 1)):
        raise ValueError(f"{path}: truth records do not cover steps 1..{t_steps}")
    truth = np.array([truth_by_step[k] for k in range(1, t_steps + 1)])
    measurements = [np.array(meas_by_step.get(k, []), dtype=float).reshape(-1, 2)
                    for k in range(1, t_steps + 1)]
    return Scenario(truth=truth, measurements=measurements, motion=mp, observation=op)
