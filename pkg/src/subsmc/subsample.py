"""Adaptive measurement subsampling for MH acceptance tests.

The averaged log-likelihood ratio driving each acceptance decision is
estimated on a growing without-replacement subsample.  A first-order
Taylor proxy around an anchor state is subtracted from every term as a
control variate, and an empirical Bernstein bound certifies the decision
once the threshold falls outside the confidence interval.  The spread of
the corrected terms is bounded through the Taylor-Lagrange remainder,
which only needs squared distances to the anchor and a precomputed bound
on the log-likelihood Hessian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ObservationParams, loglik_single


@dataclass(frozen=True)
class SubsampleConfig:
    """Stopping-rule settings: batch growth factor, total failure budget,
    and the exponent of the per-stage budget schedule."""

    gamma: float = 1.2
    delta: float = 0.1
    p_exp: float = 2.0

    def __post_init__(self):
        if not (self.gamma > 1.0):
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not (self.p_exp > 1.0):
            raise ValueError(f"p_exp must exceed 1, got {self.p_exp}")


@dataclass(frozen=True, eq=False)
class ProxyContext:
    """Per-measurement gradients at an anchor state, powering the proxy.

    grads holds one 4-vector per measurement (velocity components are
    zero); y_bound is the Hessian spectral bound used by the range bound.
    """

    x_plus: np.ndarray
    grads: np.ndarray
    grad_mean: np.ndarray
    y_bound: float

    def __post_init__(self):
        if self.y_bound < 0.0:
            raise ValueError(f"y_bound must be nonnegative, got {self.y_bound}")


@dataclass
class SubsampleOutcome:
    """Result of one adaptive subsampling run.

    lambda_hat is the running mean of proxy-corrected log-ratio terms over
    the s_used consumed measurements; adding proxy_mean recovers the
    estimate of the full averaged log-likelihood ratio.  indices and
    stages are diagnostics (consumed measurement indices, loop count).
    """

    lambda_hat: float
    proxy_mean: float
    s_used: int
    exact: bool
    indices: np.ndarray
    stages: int
    trace: list | None = None


def delta_schedule(w: int, cfg: SubsampleConfig) -> float:
    """Stage w's share of the failure budget, (p-1)/(p w^p) * delta.

    The shares over w >= 1 sum to at most delta, which is what makes the
    union-bound coverage guarantee work.
    """
    if w < 1:
        raise ValueError(f"stage counter must be at least 1, got {w}")
    p = cfg.p_exp
    return (p - 1.0) / (p * w**p) * cfg.delta


def bernstein_halfwidth(v_sample: float, r: float, s: int, delta_s: float) -> float:
    """Empirical Bernstein confidence halfwidth.

    sqrt(2 V log(3/d) / S) + 3 R log(3/d) / S for sample variance V, range
    bound R, subsample size S and stage budget d.
    """
    if v_sample < 0.0:
        raise ValueError(f"sample variance must be nonnegative, got {v_sample}")
    if r < 0.0:
        raise ValueError(f"range bound must be nonnegative, got {r}")
    if s < 1:
        raise ValueError(f"subsample size must be at least 1, got {s}")
    if not (0.0 < delta_s < 1.0):
        raise ValueError(f"stage budget must lie in (0, 1), got {delta_s}")
    log_term = math.log(3.0 / delta_s)
    return math.sqrt(2.0 * v_sample * log_term / s) + 3.0 * r * log_term / s


def proxy_value(i: int, ctx: ProxyContext, x_old: np.ndarray, x_new: np.ndarray) -> float:
    """First-order proxy for measurement i's log ratio: grad_i . (x_new - x_old)."""
    if not 0 <= i < ctx.grads.shape[0]:
        raise IndexError(f"measurement index {i} out of range [0, {ctx.grads.shape[0]})")
    diff = np.asarray(x_new, dtype=float) - np.asarray(x_old, dtype=float)
    return float(ctx.grads[i] @ diff)


def range_upper_bound(ctx: ProxyContext, x_old: np.ndarray, x_new: np.ndarray) -> float:
    """Bound on the spread of proxy-corrected terms.

    Twice the sum of the two Taylor-Lagrange remainder bounds
    Y d^2 / 2, with d the position distance from each state to the anchor.
    """
    x_old = np.asarray(x_old, dtype=float)
    x_new = np.asarray(x_new, dtype=float)
    pos_plus = ctx.x_plus[:2]
    d_old = x_old[:2] - pos_plus
    d_new = x_new[:2] - pos_plus
    return ctx.y_bound * (float(d_old @ d_old) + float(d_new @ d_new))


def adaptive_loglik_ratio(z_all: np.ndarray, x_old: np.ndarray, x_new: np.ndarray,
                          psi: float, ctx: ProxyContext, cfg: SubsampleConfig,
                          op: ObservationParams, rng: np.random.Generator,
                          keep_trace: bool = False) -> SubsampleOutcome:
    """Estimate the averaged log-likelihood ratio on an adaptive subsample.

    Draws measurement batches without replacement, growing geometrically
    from an initial batch of one, and maintains the running mean and
    sample variance of the proxy-corrected terms.  Stops as soon as the
    empirical Bernstein halfwidth certifies which side of ``psi`` the full
    mean falls on, or when every measurement has been consumed (the
    estimate is then exact and the comparison decisive regardless of the
    bound).

    With ``keep_trace`` the outcome carries (s, lambda, halfwidth) tuples
    per stage, for coverage diagnostics.
    """
    z_all = np.asarray(z_all, dtype=float).reshape(-1, 2)
    m_k = z_all.shape[0]
    if m_k == 0:
        raise ValueError("measurement set is empty")
    if ctx.grads.shape[0] != m_k:
        raise ValueError(
            f"proxy context holds {ctx.grads.shape[0]} gradients for {m_k} measurements")
    x_old = np.asarray(x_old, dtype=float)
    x_new = np.asarray(x_new, dtype=float)
    diff = x_new - x_old
    proxy_mean = float(ctx.grad_mean @ diff)
    r_bound = range_upper_bound(ctx, x_old, x_new)
    # consuming a prefix of a fresh permutation is a without-replacement
    # draw at every stage, with one bulk RNG call per test
    perm = rng.permutation(m_k)

    s = 0
    b = 1
    w = 0
    mean = 0.0
    m2 = 0.0
    trace = [] if keep_trace else None
    while True:
        w += 1
        idx = perm[s:b]
        z_batch = z_all[idx]
        terms = (loglik_single(z_batch, x_new, op) - loglik_single(z_batch, x_old, op)
                 - ctx.grads[idx] @ diff)
        # merge the batch into the running mean/M2 (parallel Welford update)
        n_batch = terms.size
        batch_mean = float(terms.mean())
        batch_m2 = float(((terms - batch_mean) ** 2).sum())
        shift = batch_mean - mean
        mean += shift * n_batch / b
        m2 += batch_m2 + shift * shift * s * n_batch / b
        s = b

        v_sample = m2 / (s - 1) if s > 1 else 0.0
        c = bernstein_halfwidth(v_sample, r_bound, s, delta_schedule(w, cfg))
        if keep_trace:
            trace.append((s, mean, c))
        if s == m_k or abs(mean + proxy_mean - psi) >= c:
            break
        b = min(max(math.ceil(cfg.gamma * s), s + 1), m_k)

    return SubsampleOutcome(lambda_hat=mean, proxy_mean=proxy_mean, s_used=s,
                            exact=(s == m_k), indices=perm[:s], stages=w, trace=trace)
