"""Motion and measurement models for planar target tracking in clutter.

State layout is the 4-vector ``[px, py, vx, vy]`` (position and velocity).
Measurements are planar points ``[zx, zy]``; each one is either
target-generated (Gaussian around the target position) or clutter
(uniform over the sensor region), with Poisson-distributed counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)


def _as_spd_2x2(sigma, name: str) -> np.ndarray:
    """Coerce to a symmetric positive definite 2x2 array; scalars mean s*I."""
    arr = np.asarray(sigma, dtype=float)
    if arr.ndim == 0:
        arr = float(arr) * np.eye(2)
    if arr.shape != (2, 2):
        raise ValueError(f"{name} must be a scalar or 2x2 matrix, got shape {arr.shape}")
    if not np.allclose(arr, arr.T, rtol=1e-10, atol=0.0):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(arr)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} must be positive definite") from None
    return arr


@dataclass(frozen=True)
class MotionParams:
    """Near-constant-velocity motion model: x_k ~ N(A x_{k-1}, Q).

    ``ts`` is the sampling period and ``sigma_x`` the process-noise
    intensity; Q scales as sigma_x**2 with the standard third-order
    integrated-noise block structure.
    """

    ts: float = 1.0
    sigma_x: float = 0.5

    def __post_init__(self):
        if not (self.ts > 0.0):
            raise ValueError(f"ts must be positive, got {self.ts}")
        if not (self.sigma_x > 0.0):
            raise ValueError(f"sigma_x must be positive, got {self.sigma_x}")

    @cached_property
    def a_matrix(self) -> np.ndarray:
        a = np.eye(4)
        a[0, 2] = self.ts
        a[1, 3] = self.ts
        return a

    @cached_property
    def q_matrix(self) -> np.ndarray:
        t = self.ts
        s2 = self.sigma_x**2
        q = np.zeros((4, 4))
        q[0, 0] = q[1, 1] = s2 * t**3 / 3.0
        q[2, 2] = q[3, 3] = s2 * t
        q[0, 2] = q[2, 0] = s2 * t**2 / 2.0
        q[1, 3] = q[3, 1] = s2 * t**2 / 2.0
        return q

    @cached_property
    def q_chol(self) -> np.ndarray:
        return np.linalg.cholesky(self.q_matrix)

    @cached_property
    def q_inv(self) -> np.ndarray:
        return np.linalg.inv(self.q_matrix)

    @cached_property
    def _logpdf_const(self) -> float:
        sign, logdet = np.linalg.slogdet(self.q_matrix)
        return -0.5 * (4.0 * LOG_2PI + logdet)


def transition_mean(x_prev: np.ndarray, mp: MotionParams) -> np.ndarray:
    """A @ x_prev: positions advanced by ts*velocity, velocities kept."""
    x_prev = np.asarray(x_prev, dtype=float)
    out = x_prev.copy()
    out[..., 0] += mp.ts * x_prev[..., 2]
    out[..., 1] += mp.ts * x_prev[..., 3]
    return out


def transition_sample(x_prev: np.ndarray, mp: MotionParams, rng: np.random.Generator) -> np.ndarray:
    """Draw x_k ~ N(A x_prev, Q)."""
    x_prev = np.asarray(x_prev, dtype=float)
    noise = rng.standard_normal(x_prev.shape) @ mp.q_chol.T
    return transition_mean(x_prev, mp) + noise


def transition_logpdf(x: np.ndarray, x_prev: np.ndarray, mp: MotionParams) -> float:
    """Log density of x under N(A x_prev, Q)."""
    d = np.asarray(x, dtype=float) - transition_mean(x_prev, mp)
    return mp._logpdf_const - 0.5 * float(d @ mp.q_inv @ d)


@dataclass(frozen=True, eq=False)
class ObservationParams:
    """Poisson mixture measurement model.

    A time step yields Poisson(lambda_x) target points drawn from
    N(position, sigma) plus Poisson(lambda_c) clutter points uniform over
    the region_x-by-region_y sensor area centered on the origin.  The
    per-measurement log likelihood is
    log(lambda_x * N(z; pos, sigma) + lambda_c / area).
    """

    lambda_x: float = 500.0
    lambda_c: float = 2000.0
    sigma: np.ndarray = field(default_factory=lambda: np.eye(2))
    region_x: float = 200.0
    region_y: float = 200.0

    def __post_init__(self):
        if self.lambda_x < 0.0:
            raise ValueError(f"lambda_x must be nonnegative, got {self.lambda_x}")
        if self.lambda_c < 0.0:
            raise ValueError(f"lambda_c must be nonnegative, got {self.lambda_c}")
        if not (self.region_x > 0.0 and self.region_y > 0.0):
            raise ValueError("region_x and region_y must be positive")
        object.__setattr__(self, "sigma", _as_spd_2x2(self.sigma, "sigma"))

    @property
    def area(self) -> float:
        return self.region_x * self.region_y

    @cached_property
    def clutter_density(self) -> float:
        return self.lambda_c / self.area

    @cached_property
    def log_clutter(self) -> float:
        c = self.clutter_density
        return math.log(c) if c > 0.0 else -math.inf

    @cached_property
    def sigma_inv(self) -> np.ndarray:
        return np.linalg.inv(self.sigma)

    @cached_property
    def _log_gauss_peak(self) -> float:
        # log of lambda_x * N(z; z, sigma), the mixture's Gaussian term at zero offset
        if self.lambda_x == 0.0:
            return -math.inf
        det = float(np.linalg.det(self.sigma))
        return math.log(self.lambda_x) - LOG_2PI - 0.5 * math.log(det)

    def _quadform(self, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
        si = self.sigma_inv
        return si[0, 0] * dx * dx + 2.0 * si[0, 1] * dx * dy + si[1, 1] * dy * dy


def loglik_single(z: np.ndarray, x: np.ndarray, op: ObservationParams):
    """Per-measurement log likelihood log(lambda_x*N(z; pos(x), sigma) + lambda_c/area).

    ``z`` may be a single point (2,) or a stack (M, 2); the result matches.
    Computed with log-sum-exp so distant measurements do not underflow.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    dx = z[..., 0] - x[0]
    dy = z[..., 1] - x[1]
    log_gauss = op._log_gauss_peak - 0.5 * op._quadform(dx, dy)
    return np.logaddexp(log_gauss, op.log_clutter)


def _gauss_weight(z: np.ndarray, x: np.ndarray, op: ObservationParams):
    """Posterior weight of the Gaussian mixture component, in [0, 1]."""
    if op.lambda_x == 0.0:
        z = np.asarray(z, dtype=float)
        return np.zeros(z.shape[:-1])
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    dx = z[..., 0] - x[0]
    dy = z[..., 1] - x[1]
    log_gauss = op._log_gauss_peak - 0.5 * op._quadform(dx, dy)
    return np.exp(log_gauss - np.logaddexp(log_gauss, op.log_clutter))


def loglik_grad(z: np.ndarray, x: np.ndarray, op: ObservationParams) -> np.ndarray:
    """Gradient of loglik_single with respect to the state.

    Only the position block is nonzero: w * sigma^{-1} (z - pos) with w the
    Gaussian component weight.  Returns (..., 4) matching z's leading shape.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    w = _gauss_weight(z, x, op)
    d = z - x[:2]
    v = d @ op.sigma_inv.T
    out = np.zeros(z.shape[:-1] + (4,))
    out[..., :2] = w[..., None] * v
    return out


def loglik_hessian(z: np.ndarray, x: np.ndarray, op: ObservationParams) -> np.ndarray:
    """Position-block Hessian of loglik_single: w(1-w) v v^T - w sigma^{-1}.

    Here v = sigma^{-1}(z - pos) and w is the Gaussian component weight.
    Returns (..., 2, 2) matching z's leading shape.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    w = _gauss_weight(z, x, op)
    d = z - x[:2]
    v = d @ op.sigma_inv.T
    ww = (w * (1.0 - w))[..., None, None]
    outer = v[..., :, None] * v[..., None, :]
    return ww * outer - w[..., None, None] * op.sigma_inv


def _norms_2x2(h11, h22, h12):
    """Spectral norm of symmetric [[h11, h12], [h12, h22]], elementwise."""
    mean = 0.5 * (h11 + h22)
    rad = np.sqrt((0.5 * (h11 - h22)) ** 2 + h12**2)
    return np.abs(mean) + rad


def _hessian_norm_grid(op: ObservationParams, s: np.ndarray, rs: np.ndarray, thetas: np.ndarray):
    """Hessian spectral norms over an offset grid, in sigma's eigenbasis."""
    r = rs[:, None]
    e1 = r * np.cos(thetas)[None, :]
    e2 = r * np.sin(thetas)[None, :]
    q = e1**2 / s[0] + e2**2 / s[1]
    log_gauss = op._log_gauss_peak - 0.5 * q
    w = np.exp(log_gauss - np.logaddexp(log_gauss, op.log_clutter))
    v1 = e1 / s[0]
    v2 = e2 / s[1]
    ww = w * (1.0 - w)
    return _norms_2x2(ww * v1 * v1 - w / s[0], ww * v2 * v2 - w / s[1], ww * v1 * v2)


def hessian_spectral_bound(op: ObservationParams) -> float:
    """Upper bound on the spectral norm of loglik_hessian over all (z, x).

    The Hessian depends only on the offset z - pos(x); the bound is found
    by numerical maximization over offsets (a radial scan, with an angular
    sweep when sigma is anisotropic) and inflated by 1%.  Computed once per
    parameter set.
    """
    if op.lambda_x == 0.0:
        return 0.0
    s, _ = np.linalg.eigh(op.sigma)
    if op.lambda_c == 0.0:
        # weight is identically 1, so the Hessian is the constant -sigma^{-1}
        return 1.0 / float(s[0])
    # weight decays like exp(-q/2) past the crossover quadratic radius; the
    # norm is negligible well before q reaches crossover + 100
    q_max = max(2.0 * (op._log_gauss_peak - op.log_clutter), 0.0) + 100.0
    r_max = math.sqrt(q_max * float(s[1]))
    isotropic = (s[1] - s[0]) <= 1e-12 * s[1]
    thetas = np.array([0.0]) if isotropic else np.linspace(0.0, 0.5 * math.pi, 61)
    rs = np.linspace(0.0, r_max, 2001)
    norms = _hessian_norm_grid(op, s, rs, thetas)
    best = float(norms.max())
    ri, ti = np.unravel_index(int(norms.argmax()), norms.shape)
    # two rounds of local grid refinement around the coarse maximizer
    dr = rs[1] - rs[0]
    dt = 0.0 if isotropic else (thetas[1] - thetas[0])
    r0, t0 = float(rs[ri]), float(thetas[ti])
    for _ in range(2):
        rs_f = np.linspace(max(r0 - dr, 0.0), r0 + dr, 201)
        thetas_f = np.array([t0]) if isotropic else np.linspace(t0 - dt, t0 + dt, 21)
        norms_f = _hessian_norm_grid(op, s, rs_f, thetas_f)
        best = max(best, float(norms_f.max()))
        ri, ti = np.unravel_index(int(norms_f.argmax()), norms_f.shape)
        r0, t0 = float(rs_f[ri]), float(thetas_f[ti])
        dr = rs_f[1] - rs_f[0]
        dt = 0.0 if isotropic else (thetas_f[1] - thetas_f[0])
    return 1.01 * best
