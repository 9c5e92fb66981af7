"""Experiment runner: config parsing, seeded runs, replay oracle, CSV output.

Runs are reproducible: every (sweep point, run index, purpose) triple maps
to its own counter-derived random stream, so scenario data never shares
randomness with either algorithm and paired runs consume identical
scenarios.  Result rows are emitted in deterministic (sweep, seed) order
regardless of worker scheduling.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .chain import full_loglik_ratio
from .estimators import AdaptiveSubsamplingTracker, SequentialMcmcTracker
from .scenario import Scenario, rmse, simulate_measurements, simulate_trajectory, step_subsample_ratio

MODES = ("standard", "adaptive", "paired", "replay-oracle")

# purpose codes of the per-run random streams
_PURPOSE_SCENARIO = 0
_PURPOSE_STANDARD = 1
_PURPOSE_ADAPTIVE = 2

CSV_COLUMNS = ("sweep", "seed", "algo", "step", "rmse", "d_ratio",
               "s_mean_joint", "s_mean_refine", "wall_ms", "fingerprint")


class ConfigError(Exception):
    """Invalid experiment configuration; the message names the offending key."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment settings (defaults match the reference
    cluttered-tracking setup)."""

    # measurement/motion model
    ts: float = 1.0
    sigma_x: float = 0.5
    lambda_x: float = 500.0
    lambda_c: float = 2000.0
    sigma_z: float = 1.0
    region_x: float = 200.0
    region_y: float = 200.0
    # per-step chain
    n_total: int = 500
    n_burn: int = 125
    sigma_q: float = 0.01
    # subsampling
    gamma: float = 1.2
    delta: float = 0.1
    p_exp: float = 2.0
    # ground truth start and time-0 cloud
    x0: tuple = (0.0, 0.0, 1.0, 1.0)
    init_mean: tuple | None = None
    init_cov: float = 1.0
    # run control
    n_runs: int = 50
    t_steps: int = 20
    master_seed: int = 0
    mode: str = "paired"
    workers: int = 1
    timings: bool = False
    sweep: tuple = ()


def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_pos_float(raw: str) -> float:
    v = float(raw)
    if not v > 0.0:
        raise ValueError(f"must be positive, got {v}")
    return v


def _parse_int(raw: str) -> int:
    return int(raw)

def _parse_pos_int(raw: str) -> int:
    v = int(raw)
    if v < 1:
        raise ValueError(f"must be at least 1, got {v}")
    return v


def _parse_vec4(raw: str) -> tuple:
    parts = tuple(float(v) for v in raw.split())
    if len(parts) != 4:
        raise ValueError(f"expected 4 numbers, got {len(parts)}")
    return parts


def _parse_mode(raw: str) -> str:
    if raw not in MODES:
        raise ValueError(f"must be one of {MODES}, got {raw!r}")
    return raw


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


_KEY_MAP = {
    "model.ts": ("ts", _parse_pos_float),
    "model.sigma_x": ("sigma_x", _parse_pos_float),
    "model.lambda_x": ("lambda_x", _parse_float),
    "model.lambda_c": ("lambda_c", _parse_float),
    "model.sigma_z": ("sigma_z", _parse_pos_float),
    "model.region_x": ("region_x", _parse_pos_float),
    "model.region_y": ("region_y", _parse_pos_float),
    "mcmc.n_total": ("n_total", _parse_pos_int),
    "mcmc.n_burn": ("n_burn", _parse_int),
    "mcmc.sigma_q": ("sigma_q", _parse_pos_float),
    "subsample.gamma": ("gamma", _parse_float),
    "subsample.delta": ("delta", _parse_float),
    "subsample.p_exp": ("p_exp", _parse_float),
    "init.x0": ("x0", _parse_vec4),
    "init.mean": ("init_mean", _parse_vec4),
    "init.cov": ("init_cov", _parse_pos_float),
    "run.n_runs": ("n_runs", _parse_pos_int),
    "run.t_steps": ("t_steps", _parse_pos_int),
    "run.master_seed": ("master_seed", _parse_int),
    "run.mode": ("mode", _parse_mode),
    "run.workers": ("workers", _parse_pos_int),
    "run.timings": ("timings", _parse_bool),
}

# keys a sweep point may override
_SWEEPABLE = {k for k in _KEY_MAP
              if not k.startswith("run.") or k in ("run.n_runs", "run.t_steps")}


def _set_key(values: dict, key: str, raw: str) -> None:
    if key not in _KEY_MAP:
        raise ConfigError(f"unknown key {key!r}")
    attr, parse = _KEY_MAP[key]
    try:
        values[attr] = parse(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: {exc}") from None


def parse_config(path) -> ExperimentConfig:
    """Read a flat key=value config file ('#' starts a comment).

    Sweep points are declared as ``sweep.<id>.<key> = <value>`` lines; all
    other lines set base parameters, e.g. ``model.sigma_x = 0.5``.
    """
    values: dict = {}
    sweeps: dict[str, dict] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigError(f"{path}:{line_no}: expected key = value, got {body!r}")
            key, raw = (part.strip() for part in body.split("=", 1))
            if key.startswith("sweep."):
                rest = key[len("sweep."):]
                sweep_id, _, param = rest.partition(".")
                if not sweep_id or not param:
                    raise ConfigError(f"{path}:{line_no}: malformed sweep key {key!r}")
                if param not in _SWEEPABLE:
                    raise ConfigError(
                        f"{path}:{line_no}: key {param!r} cannot be swept"
                        if param in _KEY_MAP else f"{path}:{line_no}: unknown key {param!r}")
                sweeps.setdefault(sweep_id, {})[param] = raw
            else:
                try:
                    _set_key(values, key, raw)
                except ConfigError as exc:
                    raise ConfigError(f"{path}:{line_no}: {exc}") from None
    values["sweep"] = tuple(sorted(sweeps.items()))
    cfg = ExperimentConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.n_burn < 0 or cfg.n_total <= cfg.n_burn:
        raise ConfigError(
            f"key 'mcmc.n_burn': need 0 <= n_burn < n_total, got "
            f"n_burn={cfg.n_burn}, n_total={cfg.n_total}")
    if cfg.lambda_x < 0:
        raise ConfigError(f"key 'model.lambda_x': must be nonnegative, got {cfg.lambda_x}")
    if cfg.lambda_c < 0:
        raise ConfigError(f"key 'model.lambda_c': must be nonnegative, got {cfg.lambda_c}")
    if not cfg.gamma > 1.0:
        raise ConfigError(f"key 'subsample.gamma': must exceed 1, got {cfg.gamma}")
    if not 0.0 < cfg.delta < 1.0:
        raise ConfigError(f"key 'subsample.delta': must lie in (0, 1), got {cfg.delta}")
    if not cfg.p_exp > 1.0:
        raise ConfigError(f"key 'subsample.p_exp': must exceed 1, got {cfg.p_exp}")
    if cfg.mode not in MODES:
        raise ConfigError(f"key 'run.mode': must be one of {MODES}, got {cfg.mode!r}")


def apply_overrides(cfg: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Return cfg with dotted-key overrides applied (raw string values)."""
    values: dict = {}
    for key, raw in overrides.items():
        _set_key(values, key, raw)
    out = replace(cfg, **values)
    _validate(out)
    return out


def config_fingerprint(cfg: ExperimentConfig) -> str:
    """Short digest of every result-determining parameter."""
    skip = {"workers", "timings", "sweep"}
    lines = [f"{f.name}={getattr(cfg, f.name)!r}"
             for f in fields(cfg) if f.name not in skip]
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:12]


def _stream(cfg: ExperimentConfig, sweep_idx: int, run_idx: int,
            purpose: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(cfg.master_seed, spawn_key=(sweep_idx, run_idx, purpose))


def _make_scenario(cfg: ExperimentConfig, sweep_idx: int, run_idx: int) -> Scenario:
    rng = np.random.default_rng(_stream(cfg, sweep_idx, run_idx, _PURPOSE_SCENARIO))
    mp, op = _model_params(cfg)
    truth = simulate_trajectory(cfg.x0, mp, cfg.t_steps, rng)
    measurements = [simulate_measurements(truth[k], op, rng) for k in range(cfg.t_steps)]
    return Scenario(truth=truth, measurements=measurements, motion=mp, observation=op)


def _model_params(cfg: ExperimentConfig):
    from .model import MotionParams, ObservationParams

    mp = MotionParams(ts=cfg.ts, sigma_x=cfg.sigma_x)
    op = ObservationParams(lambda_x=cfg.lambda_x, lambda_c=cfg.lambda_c,
                           sigma=cfg.sigma_z**2 * np.eye(2), region_x=cfg.region_x,
                           region_y=cfg.region_y)
    return mp, op


def _tracker_kwargs(cfg: ExperimentConfig) -> dict:
    return dict(n_iter=cfg.n_total, n_burn=cfg.n_burn, refine_cov=cfg.sigma_q,
                ts=cfg.ts, sigma_x=cfg.sigma_x, lambda_x=cfg.lambda_x,
                lambda_c=cfg.lambda_c, measurement_cov=cfg.sigma_z**2,
                region_x=cfg.region_x, region_y=cfg.region_y,
                init_mean=cfg.init_mean if cfg.init_mean is not None else cfg.x0,
                init_cov=cfg.init_cov)


def _run_point(cfg: ExperimentConfig, sweep_id: str, sweep_idx: int, run_idx: int) -> list[dict]:
    """All result rows for one (sweep point, run index) pair."""
    scenario = _make_scenario(cfg, sweep_idx, run_idx)
    fingerprint = config_fingerprint(cfg)
    algos = {"standard": ["standard"], "adaptive": ["adaptive"],
             "paired": ["standard", "adaptive"]}[cfg.mode]
    rows = []
    for algo in algos:
        if algo == "standard":
            tracker = SequentialMcmcTracker(
                random_state=_stream(cfg, sweep_idx, run_idx, _PURPOSE_STANDARD),
                **_tracker_kwargs(cfg))
        else:
            tracker = AdaptiveSubsamplingTracker(
                random_state=_stream(cfg, sweep_idx, run_idx, _PURPOSE_ADAPTIVE),
                gamma=cfg.gamma, delta=cfg.delta, p_exp=cfg.p_exp,
                **_tracker_kwargs(cfg))
        start = time.perf_counter()
        tracker.fit(scenario.measurements)
        wall_ms = 1000.0 * (time.perf_counter() - start)
        step_rmse = rmse(scenario.truth, tracker.estimates_, 1)
        for k in range(cfg.t_steps):
            row = {"sweep": sweep_id, "seed": run_idx, "algo": algo, "step": k + 1,
                   "rmse": step_rmse[k], "d_ratio": "", "s_mean_joint": "",
                   "s_mean_refine": "", "wall_ms": wall_ms if cfg.timings else "",
                   "fingerprint": fingerprint}
            if algo == "adaptive":
                diag = tracker.diagnostics_[k]
                if diag.m_k > 0:
                    row["d_ratio"] = step_subsample_ratio(diag, cfg.n_total)
                    row["s_mean_joint"] = float(diag.s_joint.mean())
                    row["s_mean_refine"] = float(diag.s_refine.mean())
            rows.append(row)
    return rows


def _job(args) -> tuple:
    cfg, sweep_id, sweep_idx, run_idx = args
    return (sweep_idx, run_idx), _run_point(cfg, sweep_id, sweep_idx, run_idx)


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Execute every (sweep point, run) pair and return ordered result rows.

    Without sweep entries a single point labeled ``base`` is run.  Rows
    come back sorted by (sweep order, run, algo order, step) regardless of
    how many workers executed them.
    """
    if cfg.mode == "replay-oracle":
        raise ConfigError("key 'run.mode': use run_replay_oracle for replay-oracle mode")
    points = list(cfg.sweep) if cfg.sweep else [("base", {})]
    jobs = []
    for sweep_idx, (sweep_id, overrides) in enumerate(points):
        point_cfg = apply_overrides(cfg, dict(overrides))
        for run_idx in range(point_cfg.n_runs):
            jobs.append((point_cfg, sweep_id, sweep_idx, run_idx))
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            keyed = dict(pool.map(_job, jobs))
    else:
        keyed = dict(map(_job, jobs))
    rows: list[dict] = []
    for key in sorted(keyed):
        rows.extend(keyed[key])
    return rows


@dataclass
class ReplayReport:
    """Replay-oracle outcome: subsampled decisions rechecked on full data."""

    total: int
    disagreements: int
    per_step_total: np.ndarray
    per_step_disagreements: np.ndarray
    n_runs: int

    @property
    def rate(self) -> float:
        return self.disagreements / self.total if self.total else 0.0


def run_replay_oracle(cfg: ExperimentConfig) -> ReplayReport:
    """Log every adaptive acceptance decision, then recheck it on all data.

    Each of cfg.n_runs runs tracks its scenario with decision logging on;
    every (proposal, threshold) pair is re-evaluated with the exact
    averaged log-likelihood ratio and disagreements are counted per step.
    """
    from .adaptive import asmcmc_time_update
    from .chain import McmcConfig, initial_cloud
    from .model import hessian_spectral_bound
    from .subsample import SubsampleConfig
    from .validation import split_rng

    mp, _ = _model_params(cfg)
    mcfg = McmcConfig(n_total=cfg.n_total, n_burn=cfg.n_burn, sigma_q=cfg.sigma_q)
    scfg = SubsampleConfig(gamma=cfg.gamma, delta=cfg.delta, p_exp=cfg.p_exp)
    per_step_total = np.zeros(cfg.t_steps, dtype=int)
    per_step_dis = np.zeros(cfg.t_steps, dtype=int)
    for run_idx in range(cfg.n_runs):
        scenario = _make_scenario(cfg, 0, run_idx)
        op = scenario.observation
        y_bound = hessian_spectral_bound(op)
        chain_rng, sub_rng, init_rng = split_rng(
            _stream(cfg, 0, run_idx, _PURPOSE_ADAPTIVE), 3)
        init_mean = cfg.init_mean if cfg.init_mean is not None else cfg.x0
        cloud = initial_cloud(init_mean, cfg.init_cov, mcfg.n_particles, init_rng)
        for k, z_k in enumerate(scenario.measurements):
            cloud, diag = asmcmc_time_update(cloud, z_k, mcfg, scfg, mp, op, chain_rng,
                                             subsample_rng=sub_rng, y_bound=y_bound,
                                             log_decisions=True)
            for rec in diag.decisions or ():
                full = full_loglik_ratio(z_k, rec.x_new, rec.x_old, op)
                per_step_total[k] += 1
                per_step_dis[k] += (full > rec.psi) != rec.accepted
    return ReplayReport(total=int(per_step_total.sum()),
                        disagreements=int(per_step_dis.sum()),
                        per_step_total=per_step_total,
                        per_step_disagreements=per_step_dis, n_runs=cfg.n_runs)


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(rows: list[dict], path) -> None:
    """Write result rows with the stable column schema."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[col]) for col in CSV_COLUMNS) + "\n")


def write_replay_csv(report: ReplayReport, path) -> None:
    """Write the per-step disagreement breakdown plus a total row."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("step,decisions,disagreements,rate\n")
        for k in range(len(report.per_step_total)):
            n = int(report.per_step_total[k])
            d = int(report.per_step_disagreements[k])
            rate = d / n if n else 0.0
            fh.write(f"{k + 1},{n},{d},{_fmt(rate)}\n")
        fh.write(f"total,{report.total},{report.disagreements},{_fmt(report.rate)}\n")
