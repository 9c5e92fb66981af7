"""Scikit-learn style tracker estimators.

Both trackers consume a per-step sequence of planar measurement sets via
``fit`` and expose per-step posterior-mean state estimates and particle
clouds as fitted attributes.  Hyperparameters follow the sklearn
convention (stored verbatim in ``__init__``, validated in ``fit``), so
``get_params``/``set_params``/``clone`` compose with the wider ecosystem.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .adaptive import asmcmc_time_update
from .chain import McmcConfig, initial_cloud, smcmc_time_update
from .model import MotionParams, ObservationParams, hessian_spectral_bound
from .scenario import subsample_ratio_D
from .validation import check_measurement_sequence, check_state, split_rng

DEFAULT_INIT_MEAN = (0.0, 0.0, 1.0, 1.0)


class SequentialMcmcTracker(BaseEstimator):
    """Single-target tracker: per-step MCMC over the full measurement set.

    Each time step runs ``n_iter`` Metropolis-Hastings iterations (joint
    draw from the previous particle cloud plus motion model, then a local
    random-walk refinement), evaluating every measurement's likelihood for
    each acceptance test.  Iterates after ``n_burn`` form the new cloud.

    Parameters
    ----------
    n_iter : int, default=500
        MCMC iterations per time step.
    n_burn : int, default=125
        Burn-in iterations discarded per time step.
    refine_cov : float or array-like of shape (4, 4), default=0.01
        Random-walk covariance of the refinement move; a scalar means
        that multiple of the identity.
    ts : float, default=1.0
        Sampling period of the near-constant-velocity motion model.
    sigma_x : float, default=0.5
        Process-noise intensity of the motion model.
    lambda_x : float, default=500.0
        Mean number of target-generated measurements per step.
    lambda_c : float, default=2000.0
        Mean number of clutter measurements per step.
    measurement_cov : float or array-like of shape (2, 2), default=1.0
        Covariance of target-generated measurements around the position.
    region_x, region_y : float, default=200.0
        Sensor region extents; clutter is uniform over their product.
    init_mean : array-like of shape (4,), default=(0, 0, 1, 1)
        Center of the Gaussian time-0 particle cloud.
    init_cov : float or array-like of shape (4, 4), default=1.0
        Covariance of the time-0 particle cloud.
    random_state : None, int, SeedSequence or Generator, default=None
        Seeds the chain's randomness.

    Attributes
    ----------
    estimates_ : ndarray of shape (T, 4)
        Posterior-mean state per step (mean of the retained cloud).
    clouds_ : list of ndarray of shape (n_iter - n_burn, 4)
        Retained particle cloud per step.
    acceptance_rates_ : ndarray of shape (T, 2)
        Joint-draw and refinement acceptance rates per step.
    n_steps_ : int
        Number of time steps consumed.
    """

    def __init__(self, n_iter=500, n_burn=125, refine_cov=0.01, ts=1.0, sigma_x=0.5,
                 lambda_x=500.0, lambda_c=2000.0, measurement_cov=1.0,
                 region_x=200.0, region_y=200.0, init_mean=DEFAULT_INIT_MEAN,
                 init_cov=1.0, random_state=None):
        self.n_iter = n_iter
        self.n_burn = n_burn
        self.refine_cov = refine_cov
        self.ts = ts
        self.sigma_x = sigma_x
        self.lambda_x = lambda_x
        self.lambda_c = lambda_c
        self.measurement_cov = measurement_cov
        self.region_x = region_x
        self.region_y = region_y
        self.init_mean = init_mean
        self.init_cov = init_cov
        self.random_state = random_state

    def _materialize(self):
        mp = MotionParams(ts=self.ts, sigma_x=self.sigma_x)
        op = ObservationParams(lambda_x=self.lambda_x, lambda_c=self.lambda_c,
                               sigma=self.measurement_cov, region_x=self.region_x,
                               region_y=self.region_y)
        cfg = McmcConfig(n_total=self.n_iter, n_burn=self.n_burn, sigma_q=self.refine_cov)
        return mp, op, cfg

    def _step(self, cloud, z_k, cfg, mp, op, rngs):
        stats = {}
        cloud = smcmc_time_update(cloud, z_k, cfg, mp, op, rngs[0], stats=stats)
        rates = (stats["joint_accepts"] / cfg.n_total, stats["refine_accepts"] / cfg.n_total)
        return cloud, rates, None

    def fit(self, measurements, y=None):
        """Run the filter over a per-step sequence of (M_k, 2) arrays."""
        seq = check_measurement_sequence(measurements)
        mp, op, cfg = self._materialize()
        init_mean = check_state(self.init_mean, "init_mean")
        rngs = split_rng(self.random_state, 3)
        cloud = initial_cloud(init_mean, self.init_cov, cfg.n_particles, rngs[2])

        estimates = np.empty((len(seq), 4))
        rates = np.empty((len(seq), 2))
        clouds = []
        diagnostics = []
        for k, z_k in enumerate(seq):
            cloud, step_rates, diag = self._step(cloud, z_k, cfg, mp, op, rngs)
            estimates[k] = cloud.mean(axis=0)
            rates[k] = step_rates
            clouds.append(cloud)
            if diag is not None:
                diagnostics.append(diag)
        self.estimates_ = estimates
        self.clouds_ = clouds
        self.acceptance_rates_ = rates
        self.n_steps_ = len(seq)
        if diagnostics:
            self.diagnostics_ = diagnostics
            self.d_ratio_ = subsample_ratio_D(diagnostics, cfg.n_total, len(seq))
        return self

    def fit_predict(self, measurements, y=None) -> np.ndarray:
        """Fit and return the (T, 4) posterior-mean estimates."""
        return self.fit(measurements).estimates_


class AdaptiveSubsamplingTracker(SequentialMcmcTracker):
    """Tracker whose acceptance tests subsample the measurement set.

    Drop-in variant of :class:`SequentialMcmcTracker`: each acceptance
    test consumes measurements only until an empirical Bernstein bound
    (tightened by a first-order Taylor proxy) certifies the decision.

    Parameters
    ----------
    gamma : float, default=1.2
        Geometric growth factor of the subsample batches.
    delta : float, default=0.1
        Total failure budget of the decision guarantee.
    p_exp : float, default=2.0
        Exponent of the per-stage budget schedule.

    Remaining parameters are as in :class:`SequentialMcmcTracker`.

    Attributes
    ----------
    diagnostics_ : list of StepDiagnostics
        Per-step subsample sizes and proxy anchors.
    d_ratio_ : float
        Fraction of likelihood evaluations used, relative to full data.

    Plus the attributes of :class:`SequentialMcmcTracker`.
    """

    def __init__(self, n_iter=500, n_burn=125, refine_cov=0.01, ts=1.0, sigma_x=0.5,
                 lambda_x=500.0, lambda_c=2000.0, measurement_cov=1.0,
                 region_x=200.0, region_y=200.0, init_mean=DEFAULT_INIT_MEAN,
                 init_cov=1.0, random_state=None, gamma=1.2, delta=0.1, p_exp=2.0):
        super().__init__(n_iter=n_iter, n_burn=n_burn, refine_cov=refine_cov, ts=ts,
                         sigma_x=sigma_x, lambda_x=lambda_x, lambda_c=lambda_c,
                         measurement_cov=measurement_cov, region_x=region_x,
                         region_y=region_y, init_mean=init_mean, init_cov=init_cov,
                         random_state=random_state)
        self.gamma = gamma
        self.delta = delta
        self.p_exp = p_exp

    def _materialize(self):
        from .subsample import SubsampleConfig

        mp, op, cfg = super()._materialize()
        self._scfg = SubsampleConfig(gamma=self.gamma, delta=self.delta, p_exp=self.p_exp)
        self._y_bound = hessian_spectral_bound(op)
        return mp, op, cfg

    def _step(self, cloud, z_k, cfg, mp, op, rngs):
        cloud, diag = asmcmc_time_update(cloud, z_k, cfg, self._scfg, mp, op, rngs[0],
                                         subsample_rng=rngs[1], y_bound=self._y_bound)
        rates = (diag.joint_accepts / cfg.n_total, diag.refine_accepts / cfg.n_total)
        return cloud, rates, diag
