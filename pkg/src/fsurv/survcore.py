"""Censoring-aware survival primitives.

Kaplan-Meier and Nelson-Aalen estimators, the standardized log-rank
statistic used for node splitting, and the inverse-probability-of-censoring
weighted Brier score used as the permutation-importance loss.

Tied times follow the usual convention: at a shared time, events are
counted before censorings, so a subject censored at ``t`` is still in the
risk set of an event at ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import trapezoid

#: Lower bound applied to the censoring survival function in IPCW weights.
CENSORING_FLOOR = 0.05


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function.

    Parameters
    ----------
    jump_times : ndarray
        Strictly increasing jump locations.
    values : ndarray
        Value on ``[jump_times[k], jump_times[k + 1])``.
    value_before_first : float
        Value for ``t < jump_times[0]`` (1 for a survival function, 0 for
        a cumulative hazard).
    """

    jump_times: np.ndarray
    values: np.ndarray
    value_before_first: float

    def __post_init__(self):
        t = np.asarray(self.jump_times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("jump_times and values must be 1-d arrays of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("jump_times must be strictly increasing")
        object.__setattr__(self, "jump_times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "value_before_first", float(self.value_before_first))

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t_arr, side="right") - 1
        padded = np.concatenate(([self.value_before_first], self.values))
        out = padded[idx + 1]
        return float(out) if out.ndim == 0 else out

    def left_limit(self, t):
        """Value just before ``t``, i.e. ``f(t-)``."""
        t_arr = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t_arr, side="left") - 1
        padded = np.concatenate(([self.value_before_first], self.values))
        out = padded[idx + 1]
        return float(out) if out.ndim == 0 else out

    def to_json(self) -> dict:
        return {
            "t": self.jump_times.tolist(),
            "v": self.values.tolist(),
            "v0": self.value_before_first,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "StepFunction":
        return cls(np.asarray(payload["t"], float), np.asarray(payload["v"], float), payload["v0"])


def _validate(times, status) -> tuple[np.ndarray, np.ndarray]:
    times = np.asarray(times, dtype=float)
    status = np.asarray(status)
    if times.ndim != 1 or times.shape != status.shape:
        raise ValueError("times and status must be 1-d arrays of equal length")
    if times.size == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(times)):
        raise ValueError("times must be finite")
    if not np.all(np.isin(status, (0, 1))):
        raise ValueError("status must contain only 0 and 1")
    return times, status.astype(int)


def risk_table(times, status) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct event times with their event counts and risk-set sizes."""
    times, status = _validate(times, status)
    event_times = np.unique(times[status == 1])
    order = np.sort(times)
    at_risk = times.size - np.searchsorted(order, event_times, side="left")
    events = np.array([np.sum((times == t) & (status == 1)) for t in event_times], dtype=float)
    return event_times, events, at_risk.astype(float)


def kaplan_meier(times, status) -> StepFunction:
    """Kaplan-Meier survival estimate as a step function."""
    event_times, d, r = risk_table(times, status)
    return StepFunction(event_times, np.cumprod(1.0 - d / r), 1.0)


def nelson_aalen(times, status) -> StepFunction:
    """Nelson-Aalen cumulative hazard estimate as a step function."""
    event_times, d, r = risk_table(times, status)
    return StepFunction(event_times, np.cumsum(d / r), 0.0)


class LogRankResult(NamedTuple):
    statistic: float
    variance: float
    degenerate: bool

    @property
    def p_value(self) -> float:
        return logrank_p_value(self.statistic)


def logrank_p_value(statistic: float) -> float:
    """Two-sided p-value of the chi-square(1) approximation of ``L**2``."""
    return math.erfc(abs(statistic) / math.sqrt(2.0))


def logrank_statistic(left, right) -> LogRankResult:
    """Standardized two-sample log-rank statistic with group 1 = ``left``.

    ``left`` and ``right`` are ``(times, status)`` pairs. Terms with a single
    subject at risk carry no variance and are skipped in the denominator.
    A zero total variance yields ``statistic == 0`` and ``degenerate=True``.
    """
    t1, s1 = _validate(*left)
    t2, s2 = _validate(*right)
    times = np.concatenate([t1, t2])
    status = np.concatenate([s1, s2])
    if not np.any(status == 1):
        raise ValueError("log-rank statistic needs at least one event")
    event_times = np.unique(times[status == 1])

    s1_sorted = np.sort(t1)
    all_sorted = np.sort(times)
    r1 = t1.size - np.searchsorted(s1_sorted, event_times, side="left")
    r = times.size - np.searchsorted(all_sorted, event_times, side="left")
    d1 = np.array([np.sum((t1 == t) & (s1 == 1)) for t in event_times], dtype=float)
    d = np.array([np.sum((times == t) & (status == 1)) for t in event_times], dtype=float)
    r1 = r1.astype(float)
    r = r.astype(float)

    numerator = float(np.sum(d1 - r1 * d / r))
    keep = r > 1
    frac = r1[keep] / r[keep]
    variance = float(np.sum(frac * (1.0 - frac) * (r[keep] - d[keep]) / (r[keep] - 1.0) * d[keep]))
    if variance <= 0.0:
        return LogRankResult(0.0, 0.0, True)
    return LogRankResult(numerator / math.sqrt(variance), variance, False)


def censoring_km(times, status) -> StepFunction:
    """Kaplan-Meier estimate of the censoring distribution (status flipped)."""
    times, status = _validate(times, status)
    return kaplan_meier(times, 1 - status)


def _ipcw_weights(times, status, t, G: StepFunction) -> np.ndarray:
    g_at_t = max(G(t), CENSORING_FLOOR)
    g_before = np.maximum(G.left_limit(times), CENSORING_FLOOR)
    died = (times <= t) & (status == 1)
    alive = times > t
    return np.where(died, 1.0 / g_before, 0.0) + np.where(alive, 1.0 / g_at_t, 0.0)


def ipcw_brier(predicted_sf, times, status, t: float) -> float:
    """IPCW Brier score at time ``t``.

    Parameters
    ----------
    predicted_sf : sequence of StepFunction or array_like
        Per-subject survival predictions, either as step functions or as
        the already-evaluated values ``S_i(t)``.
    times, status : array_like
        Observed times and event indicators of the evaluation subjects.
    t : float
        Evaluation time; must lie within the observed time range.
    """
    times, status = _validate(times, status)
    if not (times.min() <= t <= times.max()):
        raise ValueError(f"t={t} outside observed range [{times.min()}, {times.max()}]")
    if len(predicted_sf) and isinstance(predicted_sf[0], StepFunction):
        pred = np.array([sf(t) for sf in predicted_sf], dtype=float)
    else:
        pred = np.asarray(predicted_sf, dtype=float)
    if pred.shape != times.shape:
        raise ValueError("one prediction per subject is required")
    G = censoring_km(times, status)
    w = _ipcw_weights(times, status, t, G)
    target = (times > t).astype(float)
    return float(np.mean(w * (target - pred) ** 2))


def brier_curve(pred_matrix, times, status, grid) -> np.ndarray:
    """IPCW Brier score at every grid time.

    ``pred_matrix[i, m]`` is subject ``i``'s predicted survival at
    ``grid[m]``.
    """
    times, status = _validate(times, status)
    grid = np.asarray(grid, dtype=float)
    pred = np.asarray(pred_matrix, dtype=float)
    if pred.shape != (times.size, grid.size):
        raise ValueError("pred_matrix must have shape (n_subjects, n_grid)")
    if grid.size and (grid.min() < times.min() or grid.max() > times.max()):
        raise ValueError("grid extends outside the observed time range")
    G = censoring_km(times, status)
    g_before = np.maximum(G.left_limit(times), CENSORING_FLOOR)
    g_grid = np.maximum(G(grid), CENSORING_FLOOR)
    died = (times[:, None] <= grid[None, :]) & (status[:, None] == 1)
    alive = times[:, None] > grid[None, :]
    w = np.where(died, 1.0 / g_before[:, None], 0.0) + np.where(alive, 1.0 / g_grid[None, :], 0.0)
    return np.mean(w * (alive.astype(float) - pred) ** 2, axis=0)


def integrated_brier(pred_matrix, times, status, grid) -> float:
    """Trapezoid-integrated Brier score over ``grid``, divided by its span."""
    grid = np.asarray(grid, dtype=float)
    curve = brier_curve(pred_matrix, times, status, grid)
    if grid.size < 2:
        return float(curve[0])
    return float(trapezoid(curve, grid) / (grid[-1] - grid[0]))


def evaluate_step_functions(functions: Sequence[StepFunction], grid) -> np.ndarray:
    """Stack step functions evaluated on a common grid into a matrix."""
    grid = np.asarray(grid, dtype=float)
    return np.vstack([f(grid) for f in functions]) if functions else np.empty((0, grid.size))
