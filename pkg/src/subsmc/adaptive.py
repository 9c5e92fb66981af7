"""Sequential MCMC filter with adaptively subsampled acceptance tests.

Same chain structure as :mod:`subsmc.chain`, but both acceptance tests per
iteration evaluate the log-likelihood ratio through the adaptive
subsampling routine, with the threshold shifted by the proxy mean.  The
proxy anchor is refreshed twice per time step: at the start (anchored at
the predicted mean of the previous cloud) and right after burn-in
(anchored at the chain's current state).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .chain import (
    ChainIterate,
    McmcConfig,
    init_iterate,
    propose_joint,
    propose_refine,
    psi_joint,
    psi_refine,
)
from .model import (
    MotionParams,
    ObservationParams,
    hessian_spectral_bound,
    loglik_grad,
    transition_logpdf,
    transition_mean,
)
from .subsample import ProxyContext, SubsampleConfig, adaptive_loglik_ratio

# anchor refresh points within a time step; exactly these two, in order
PROXY_UPDATE_MARKERS = ("start_of_step", "post_burn_in")


class DecisionRecord(NamedTuple):
    """One logged acceptance decision, replayable against the full data."""

    kind: str
    x_old: np.ndarray
    x_new: np.ndarray
    psi: float
    s_used: int
    accepted: bool


@dataclass
class StepDiagnostics:
    """Per-iteration subsample sizes and bookkeeping for one time step."""

    s_joint: np.ndarray
    s_refine: np.ndarray
    m_k: int
    anchors: list
    joint_accepts: int = 0
    refine_accepts: int = 0
    decisions: list | None = None


def update_proxy_context(z_k: np.ndarray, x_anchor: np.ndarray, op: ObservationParams,
                         y_bound: float) -> ProxyContext:
    """Cache every measurement's log-likelihood gradient at the anchor."""
    z_k = np.asarray(z_k, dtype=float).reshape(-1, 2)
    x_anchor = np.asarray(x_anchor, dtype=float)
    grads = loglik_grad(z_k, x_anchor, op)
    grad_mean = grads.mean(axis=0) if z_k.shape[0] else np.zeros(4)
    return ProxyContext(x_plus=x_anchor.copy(), grads=grads, grad_mean=grad_mean,
                        y_bound=float(y_bound))


def _prior_propagation(cloud_prev: np.ndarray, cfg: McmcConfig, mp: MotionParams,
                       rng: np.random.Generator) -> tuple[np.ndarray, StepDiagnostics]:
    """Degenerate step for an empty measurement set: the likelihood is
    constant, so joint draws are always accepted and refinement reduces to
    an MH move on the transition density alone."""
    cur = init_iterate(cloud_prev, mp, rng)
    cloud = np.empty((cfg.n_particles, 4))
    for m in range(1, cfg.n_total + 1):
        cur = propose_joint(cloud_prev, mp, rng)
        rng.uniform()
        x_star = propose_refine(cur, cfg, rng)
        u = rng.uniform()
        better = (transition_logpdf(x_star, cur.xk_prev, mp)
                  - transition_logpdf(cur.xk, cur.xk_prev, mp))
        if better > np.log(u):
            cur = ChainIterate(xk=x_star, xk_prev=cur.xk_prev)
        if m > cfg.n_burn:
            cloud[m - cfg.n_burn - 1] = cur.xk
    n = cfg.n_total
    diag = StepDiagnostics(s_joint=np.zeros(n, dtype=int), s_refine=np.zeros(n, dtype=int),
                           m_k=0, anchors=[])
    return cloud, diag


def asmcmc_time_update(cloud_prev: np.ndarray, z_k: np.ndarray, cfg: McmcConfig,
                       scfg: SubsampleConfig, mp: MotionParams, op: ObservationParams,
                       rng: np.random.Generator,
                       subsample_rng: np.random.Generator | None = None,
                       y_bound: float | None = None,
                       log_decisions: bool = False) -> tuple[np.ndarray, StepDiagnostics]:
    """One time step of the adaptive-subsampling sequential MCMC filter.

    Mirrors :func:`subsmc.chain.smcmc_time_update` with the acceptance
    tests routed through :func:`subsmc.subsample.adaptive_loglik_ratio`;
    a proposal is accepted when its corrected estimate exceeds the
    proxy-shifted threshold.  Returns the post-burn-in cloud together with
    per-iteration subsample-size diagnostics.

    ``subsample_rng`` feeds only the measurement-index draws; keeping it
    separate from ``rng`` leaves the proposal/uniform stream identical to
    the full-data chain's, which is what makes paired comparisons and
    forced-exact equivalence checks meaningful.  ``y_bound`` may be passed
    in when the Hessian bound was precomputed for the parameter set.
    """
    z_k = np.asarray(z_k, dtype=float).reshape(-1, 2)
    if z_k.shape[0] == 0:
        return _prior_propagation(cloud_prev, cfg, mp, rng)
    if subsample_rng is None:
        subsample_rng = rng
    if y_bound is None:
        y_bound = hessian_spectral_bound(op)
    m_k = z_k.shape[0]

    anchor = transition_mean(cloud_prev.mean(axis=0), mp)
    ctx = update_proxy_context(z_k, anchor, op, y_bound)
    anchors = [anchor]

    cur = init_iterate(cloud_prev, mp, rng)
    cloud = np.empty((cfg.n_particles, 4))
    s_joint = np.empty(cfg.n_total, dtype=int)
    s_refine = np.empty(cfg.n_total, dtype=int)
    joint_accepts = 0
    refine_accepts = 0
    decisions: list | None = [] if log_decisions else None

    for m in range(1, cfg.n_total + 1):
        if m == cfg.n_burn + 1:
            ctx = update_proxy_context(z_k, cur.xk, op, y_bound)
            anchors.append(cur.xk.copy())

        prop = propose_joint(cloud_prev, mp, rng)
        u = rng.uniform()
        psi = psi_joint(u, m_k)
        out = adaptive_loglik_ratio(z_k, cur.xk, prop.xk, psi, ctx, scfg, op, subsample_rng)
        accepted = out.lambda_hat > psi - out.proxy_mean
        if decisions is not None:
            decisions.append(DecisionRecord("joint", cur.xk.copy(), prop.xk.copy(),
                                            psi, out.s_used, accepted))
        s_joint[m - 1] = out.s_used
        if accepted:
            cur = prop
            joint_accepts += 1

        x_star = propose_refine(cur, cfg, rng)
        u = rng.uniform()
        psi = psi_refine(u, cur, x_star, mp, m_k)
        out = adaptive_loglik_ratio(z_k, cur.xk, x_star, psi, ctx, scfg, op, subsample_rng)
        accepted = out.lambda_hat > psi - out.proxy_mean
        if decisions is not None:
            decisions.append(DecisionRecord("refine", cur.xk.copy(), x_star.copy(),
                                            psi, out.s_used, accepted))
        s_refine[m - 1] = out.s_used
        if accepted:
            cur = ChainIterate(xk=x_star, xk_prev=cur.xk_prev)
            refine_accepts += 1

        if m > cfg.n_burn:
            cloud[m - cfg.n_burn - 1] = cur.xk

    diag = StepDiagnostics(s_joint=s_joint, s_refine=s_refine, m_k=m_k, anchors=anchors,
                           joint_accepts=joint_accepts, refine_accepts=refine_accepts,
                           decisions=decisions)
    return cloud, diag
