"""Sequential MCMC filter with full-data likelihood evaluation.

Each time step runs a Metropolis-Hastings chain targeting the joint
filtering posterior of (x_k, x_{k-1}), using the previous step's unweighted
particle cloud as the prior approximation.  Every iteration makes a joint
draw (fresh particle + motion-model propagation) followed by a local
random-walk refinement of x_k; iterates after burn-in form the new cloud.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import math

import numpy as np

from .model import (
    MotionParams,
    ObservationParams,
    loglik_single,
    transition_logpdf,
    transition_sample,
)


class ChainIterate(NamedTuple):
    """Current joint chain state (x_k, x_{k-1})."""

    xk: np.ndarray
    xk_prev: np.ndarray


def _as_spd(cov, dim: int, name: str) -> np.ndarray:
    arr = np.asarray(cov, dtype=float)
    if arr.ndim == 0:
        arr = float(arr) * np.eye(dim)
    if arr.shape != (dim, dim):
        raise ValueError(f"{name} must be a scalar or {dim}x{dim} matrix, got shape {arr.shape}")
    if not np.allclose(arr, arr.T, rtol=1e-10, atol=0.0):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(arr)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} must be positive definite") from None
    return arr


@dataclass(frozen=True, eq=False)
class McmcConfig:
    """Per-time-step chain settings: N total iterations, burn-in, and the
    refinement random-walk covariance (scalar means s*I)."""

    n_total: int = 500
    n_burn: int = 125
    sigma_q: np.ndarray = field(default_factory=lambda: 0.01 * np.eye(4))

    def __post_init__(self):
        if self.n_burn < 0:
            raise ValueError(f"n_burn must be nonnegative, got {self.n_burn}")
        if self.n_total <= self.n_burn:
            raise ValueError(f"n_total ({self.n_total}) must exceed n_burn ({self.n_burn})")
        object.__setattr__(self, "sigma_q", _as_spd(self.sigma_q, 4, "sigma_q"))

    @property
    def n_particles(self) -> int:
        return self.n_total - self.n_burn

    @cached_property
    def sigma_q_chol(self) -> np.ndarray:
        return np.linalg.cholesky(self.sigma_q)


def initial_cloud(mean, cov, n_particles: int, rng: np.random.Generator) -> np.ndarray:
    """Time-0 particle cloud: Gaussian draws around a configured state."""
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (4,):
        raise ValueError(f"initial mean must have shape (4,), got {mean.shape}")
    chol = np.linalg.cholesky(_as_spd(cov, 4, "initial covariance"))
    return mean + rng.standard_normal((n_particles, 4)) @ chol.T


def propose_joint(cloud: np.ndarray, mp: MotionParams, rng: np.random.Generator) -> ChainIterate:
    """Joint proposal: x_{k-1}* uniform from the cloud, x_k* from the motion model."""
    n = cloud.shape[0]
    if n == 0:
        raise ValueError("particle cloud is empty")
    x_prev = cloud[rng.integers(n)]
    return ChainIterate(xk=transition_sample(x_prev, mp, rng), xk_prev=x_prev)


def psi_joint(u: float, m_k: int) -> float:
    """Joint-draw acceptance threshold, log(u) / M_k.

    With the joint proposal being motion model times particle measure, the
    transition and particle factors in the full threshold cancel against
    the proposal density, leaving only the uniform draw.
    """
    if not (0.0 < u < 1.0):
        raise ValueError(f"u must lie in (0, 1), got {u}")
    if m_k < 1:
        raise ValueError(f"m_k must be at least 1, got {m_k}")
    return math.log(u) / m_k


def propose_refine(cur: ChainIterate, cfg: McmcConfig, rng: np.random.Generator) -> np.ndarray:
    """Refinement proposal: Gaussian random walk centered at the current x_k."""
    return cur.xk + cfg.sigma_q_chol @ rng.standard_normal(4)


def psi_refine(u: float, cur: ChainIterate, x_star: np.ndarray, mp: MotionParams, m_k: int) -> float:
    """Refinement acceptance threshold.

    (log u + log p(x_k | x_{k-1}) - log p(x* | x_{k-1})) / M_k; the
    random-walk proposal densities cancel by symmetry.
    """
    if not (0.0 < u < 1.0):
        raise ValueError(f"u must lie in (0, 1), got {u}")
    num = transition_logpdf(cur.xk, cur.xk_prev, mp)
    den = transition_logpdf(x_star, cur.xk_prev, mp)
    return (math.log(u) + num - den) / m_k


def full_loglik_ratio(z_all: np.ndarray, x_new: np.ndarray, x_old: np.ndarray,
                      op: ObservationParams) -> float:
    """Mean over all measurements of loglik(z, x_new) - loglik(z, x_old)."""
    z_all = np.asarray(z_all, dtype=float)
    if z_all.shape[0] == 0:
        raise ValueError("measurement set is empty")
    return float(np.mean(loglik_single(z_all, x_new, op) - loglik_single(z_all, x_old, op)))


def init_iterate(cloud_prev: np.ndarray, mp: MotionParams, rng: np.random.Generator) -> ChainIterate:
    """Starting iterate for a time step's chain: one joint proposal draw."""
    return propose_joint(cloud_prev, mp, rng)


def smcmc_time_update(cloud_prev: np.ndarray, z_k: np.ndarray, cfg: McmcConfig,
                      mp: MotionParams, op: ObservationParams,
                      rng: np.random.Generator, stats: dict | None = None) -> np.ndarray:
    """One time step of the full-data sequential MCMC filter.

    Runs cfg.n_total iterations of joint draw + refinement against the
    measurement set z_k, retaining post-burn-in iterates as the new cloud
    of cfg.n_particles particles.  With an empty z_k the step degenerates
    to prior propagation (every joint draw accepted, refinement moves
    judged on the transition density alone).

    If ``stats`` is a dict it receives acceptance counters
    (joint_accepts, refine_accepts, n_iter).
    """
    z_k = np.asarray(z_k, dtype=float).reshape(-1, 2)
    # an empty set contributes ratio 0 at every comparison; the divisor in
    # psi only rescales both sides' log(u) term, so 1 keeps decisions exact
    m_k = max(z_k.shape[0], 1)
    cur = init_iterate(cloud_prev, mp, rng)
    cloud = np.empty((cfg.n_particles, 4))
    joint_accepts = 0
    refine_accepts = 0
    for m in range(1, cfg.n_total + 1):
        prop = propose_joint(cloud_prev, mp, rng)
        u = rng.uniform()
        lam = full_loglik_ratio(z_k, prop.xk, cur.xk, op) if z_k.shape[0] else 0.0
        if lam > psi_joint(u, m_k):
            cur = prop
            joint_accepts += 1

        x_star = propose_refine(cur, cfg, rng)
        u = rng.uniform()
        lam = full_loglik_ratio(z_k, x_star, cur.xk, op) if z_k.shape[0] else 0.0
        if lam > psi_refine(u, cur, x_star, mp, m_k):
            cur = ChainIterate(xk=x_star, xk_prev=cur.xk_prev)
            refine_accepts += 1

        if m > cfg.n_burn:
            cloud[m - cfg.n_burn - 1] = cur.xk
    if stats is not None:
        stats.update(joint_accepts=joint_accepts, refine_accepts=refine_accepts,
                     n_iter=cfg.n_total)
    return cloud
