"""Synthetic mixed survival datasets with irregular longitudinal predictors.

Two trajectory families are provided. Scenario ``"A"`` draws trigonometric
curves ``a1 sin(pi s) + a2 cos(pi s)`` on rescaled time ``s = t / |T|``,
with larger amplitudes for part of the censored group; scenario ``"B"``
draws linear trends, with an added oscillation for the censored group.
Every trajectory receives Gaussian-process noise with exponential
covariance, is observed at a random subset of a global grid up to the
subject's survival time, and is measured with additive Gaussian error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataio import LongitudinalSample, SurvivalRecord, join


@dataclass
class SimConfig:
    scenario: str = "A"
    n: int = 200
    seed: int = 0
    event_fraction: float = 0.40
    window: tuple[float, float] | None = None
    gp_scale: float = 12.0
    gp_rate: float = 0.5
    obs_noise_variance: float = 18.0
    n_global: int | None = None
    keep_probability: float = 0.5
    min_observations: int = 3
    # scenario A
    group1_range: tuple[float, float] = (1.0, 20.0)
    group2_ranges: tuple[tuple[float, float], tuple[float, float]] = ((15.0, 30.0), (10.0, 30.0))
    mixing_probability: float = 0.60
    # scenario B
    slope: float = 4.0
    amplitude: float = 12.0
    frequency: float = 0.7
    phase_range: tuple[float, float] = (0.10, 0.45)
    n_covariates: dict = field(default_factory=lambda: {"bernoulli": 2, "normal": 2})

    def __post_init__(self):
        self.scenario = str(self.scenario).upper()
        if self.scenario not in ("A", "B"):
            raise ValueError(f"unknown scenario {self.scenario!r}; expected 'A' or 'B'")
        if self.window is None:
            self.window = (0.0, 180.0) if self.scenario == "A" else (0.0, 100.0)
        if self.n_global is None:
            self.n_global = 60 if self.scenario == "A" else 40
        if not 0.0 < self.event_fraction < 1.0:
            raise ValueError("event_fraction must be in (0, 1)")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not self.window[0] < self.window[1]:
            raise ValueError("invalid window")


@dataclass(frozen=True)
class SimTruth:
    """Ground truth kept alongside a simulated dataset for oracle checks."""

    window: tuple[float, float]
    grid: np.ndarray
    groups: np.ndarray
    trajectories: np.ndarray  # noiseless curves on ``grid``, shape (N, G)
    latent: dict  # subject id -> trajectory plus GP noise at observation times

    def to_json(self, ids) -> dict:
        return {
            "window": list(self.window),
            "grid": self.grid.tolist(),
            "subjects": [
                {
                    "id": sid,
                    "group": int(g),
                    "trajectory": traj.tolist(),
                    "latent": self.latent[sid].tolist(),
                }
                for sid, g, traj in zip(ids, self.groups, self.trajectories)
            ],
        }


def gp_noise(times, scale: float, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean Gaussian draw with covariance ``scale * exp(-rate |s - t|)``."""
    times = np.asarray(times, dtype=float)
    K = scale * np.exp(-rate * np.abs(times[:, None] - times[None, :]))
    vals, vecs = np.linalg.eigh(K)
    root = (vecs * np.sqrt(np.maximum(vals, 1e-10))) @ vecs.T
    return root @ rng.standard_normal(times.size)


def scalar_covariates(n: int, rng: np.random.Generator, n_bernoulli: int = 2, n_normal: int = 2) -> np.ndarray:
    """Bernoulli(0.5) columns followed by standard normal columns."""
    binary = rng.binomial(1, 0.5, size=(n, n_bernoulli)).astype(float)
    normal = rng.standard_normal((n, n_normal))
    return np.hstack([binary, normal])


def _trajectory_a(cfg: SimConfig, group: int, rng: np.random.Generator):
    lo, hi = cfg.group1_range
    if group == 1:
        a1, a2 = rng.uniform(lo, hi), rng.uniform(lo, hi)
    else:
        u = rng.random() < cfg.mixing_probability
        if u:
            (l1, h1), (l2, h2) = cfg.group2_ranges
            a1, a2 = rng.uniform(l1, h1), rng.uniform(l2, h2)
        else:
            a1, a2 = rng.uniform(lo, hi), rng.uniform(lo, hi)
    span = cfg.window[1] - cfg.window[0]

    def f(t):
        s = (np.asarray(t) - cfg.window[0]) / span
        return a1 * np.sin(np.pi * s) + a2 * np.cos(np.pi * s)

    return f


def _trajectory_b(cfg: SimConfig, group: int, rng: np.random.Generator):
    theta = rng.uniform(*cfg.phase_range)

    def f(t):
        t = np.asarray(t, dtype=float)
        base = cfg.slope * t
        if group == 1:
            return base
        return base + cfg.amplitude * np.sin(cfg.frequency * np.pi * (t + theta))

    return f


def simulate(config: SimConfig | None = None, truth_grid_size: int = 101):
    """Generate a :class:`MixedSurvivalDataset` and its :class:`SimTruth`.

    The first ``round(event_fraction * n)`` subjects form the event group
    (``status == 1``), the rest are censored. Survival times are uniform on
    the upper half of the window.
    """
    cfg = config or SimConfig()
    root = np.random.SeedSequence(cfg.seed)
    cov_rng, *subject_seeds = [np.random.default_rng(s) for s in root.spawn(cfg.n + 1)]
    a, b = cfg.window
    global_grid = np.linspace(a, b, cfg.n_global)
    truth_grid = np.linspace(a, b, truth_grid_size)
    n_events = int(round(cfg.event_fraction * cfg.n))
    width = len(str(cfg.n))
    X = scalar_covariates(cfg.n, cov_rng, cfg.n_covariates["bernoulli"], cfg.n_covariates["normal"])

    long, surv, groups, trajs, latent = [], [], [], [], {}
    for i, rng in enumerate(subject_seeds):
        sid = f"s{i + 1:0{width}d}"
        group = 1 if i < n_events else 2
        make = _trajectory_a if cfg.scenario == "A" else _trajectory_b
        f = make(cfg, group, rng)
        t_star = float(rng.uniform((a + b) / 2.0, b))
        keep = rng.random(global_grid.size) < cfg.keep_probability
        eligible = global_grid <= t_star
        chosen = keep & eligible
        if chosen.sum() < cfg.min_observations:
            pool = np.flatnonzero(eligible & ~chosen)
            extra = rng.choice(pool, size=cfg.min_observations - int(chosen.sum()), replace=False)
            chosen[extra] = True
        times = global_grid[chosen]
        h = f(times) + gp_noise(times, cfg.gp_scale, cfg.gp_rate, rng)
        y = h + rng.normal(0.0, np.sqrt(cfg.obs_noise_variance), size=times.size)
        long.append(LongitudinalSample(sid, times, y))
        surv.append(SurvivalRecord(sid, t_star, 1 if group == 1 else 0, X[i]))
        groups.append(group)
        trajs.append(f(truth_grid))
        latent[sid] = h
    dataset = join(long, surv, cfg.window)
    # join sorts by id; the zero-padded ids keep generation order
    truth = SimTruth(cfg.window, truth_grid, np.array(groups), np.array(trajs), latent)
    return dataset, truth
