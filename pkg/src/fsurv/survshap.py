"""Time-dependent Shapley explanations of survival predictions.

A model here is any object with an ``event_grid`` array and a
``predict_sf(W)`` method returning survival probabilities of shape
``(n, len(event_grid))``. Coalition values are estimated by overwriting
columns of background rows with the explained unit's values and averaging
the predictions, so every coalition yields a whole curve over the grid and
the Shapley arithmetic runs on all time points at once.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np
import scipy.linalg

from .smoothfn import fit_penalized, integrate, select_lambda, trapezoid_aggregate

EXACT_MAX_FEATURES = 12
DEFAULT_BUDGET_CAP = 2048
MAX_ROWS_PER_BATCH = 200_000
RIDGE = 1e-10


@dataclass(frozen=True)
class ShapMatrix:
    """Contributions ``phi[m, j]`` of feature ``j`` at time ``times[m]``."""

    unit_id: str
    times: np.ndarray
    phi: np.ndarray
    baseline: np.ndarray
    prediction: np.ndarray
    normalized: np.ndarray | None = None
    feature_names: tuple[str, ...] = ()

    @property
    def n_features(self) -> int:
        return self.phi.shape[1]


@dataclass(frozen=True)
class ContributionSummary:
    unit_id: str
    feature: int
    interval: tuple[float, float]
    delta: float
    gamma: float
    tsd: float
    tnsd: float
    start_value: float
    end_value: float


def event_free_intervals(times, status=None) -> list[tuple[float, float]]:
    """Consecutive pairs of the sorted distinct event times.

    ``times`` may be a dataset exposing ``event_times`` and ``status``; with
    ``status`` omitted, every entry of ``times`` is treated as an event.
    """
    if hasattr(times, "event_times"):
        times, status = times.event_times, times.status
    times = np.asarray(times, dtype=float)
    events = times if status is None else times[np.asarray(status) == 1]
    distinct = np.unique(events)
    return [(float(a), float(b)) for a, b in zip(distinct[:-1], distinct[1:])]


def _masks_to_bool(masks: np.ndarray, d: int) -> np.ndarray:
    return ((np.asarray(masks, dtype=np.int64)[:, None] >> np.arange(d)) & 1).astype(bool)


def coalition_values(model, w, background, coalitions) -> np.ndarray:
    """Value curves for a batch of coalitions given as a boolean (K, d) array."""
    w = np.asarray(w, dtype=float)
    bg = np.atleast_2d(np.asarray(background, dtype=float))
    if bg.shape[0] == 0:
        raise ValueError("background sample is empty")
    Z = np.atleast_2d(np.asarray(coalitions, dtype=bool))
    nb, d = bg.shape
    if w.shape != (d,) or Z.shape[1] != d:
        raise ValueError("feature dimension mismatch between unit, background and coalitions")
    out = np.empty((Z.shape[0], np.asarray(model.event_grid).size))
    step = max(1, MAX_ROWS_PER_BATCH // nb)
    for start in range(0, Z.shape[0], step):
        block = Z[start:start + step]
        hybrid = np.where(block[:, None, :], w[None, None, :], bg[None, :, :]).reshape(-1, d)
        pred = np.asarray(model.predict_sf(hybrid)).reshape(block.shape[0], nb, -1)
        out[start:start + step] = pred.mean(axis=1)
    return out


def value_function(model, w, subset: Sequence[int], background, t: float | None = None):
    """Mean prediction over background rows with ``subset`` columns set to ``w``.

    Returns the whole curve on ``model.event_grid``, or its value at ``t``
    (right-continuous step lookup, 1 before the first grid time).
    """
    d = np.asarray(w).size
    z = np.zeros((1, d), dtype=bool)
    z[0, list(subset)] = True
    curve = coalition_values(model, w, background, z)[0]
    if t is None:
        return curve
    grid = np.asarray(model.event_grid)
    idx = int(np.searchsorted(grid, t, side="right")) - 1
    return 1.0 if idx < 0 else float(curve[idx])


def _finish(model, unit_id, w, phi, v_empty, v_full, names) -> ShapMatrix:
    shap = ShapMatrix(str(unit_id), np.asarray(model.event_grid, dtype=float).copy(), phi.T.copy(),
                      v_empty.copy(), v_full.copy(), None, tuple(names or ()))
    return normalize(shap)


def _shapley_weights(d: int) -> np.ndarray:
    """``s! (d - s - 1)! / d!`` for coalition sizes ``s = 0..d-1``."""
    return np.array([math.factorial(s) * math.factorial(d - s - 1) / math.factorial(d) for s in range(d)])


def survshap_exact(model, w, background, unit_id: str = "", feature_names=None) -> ShapMatrix:
    """Exact Shapley contributions at every grid time.

    Each of the ``2**d`` coalition values is computed once and combined with
    the subset weights ``|S|! (d - |S| - 1)! / d!``.
    """
    w = np.asarray(w, dtype=float)
    d = w.size
    if d > EXACT_MAX_FEATURES:
        raise ValueError(f"exact mode supports at most {EXACT_MAX_FEATURES} features (got {d}); use survshap_kernel")
    masks = np.arange(2**d)
    values = coalition_values(model, w, background, _masks_to_bool(masks, d))
    sizes = np.array([bin(m).count("1") for m in masks])
    weight = _shapley_weights(d)
    phi = np.zeros((d, values.shape[1]))
    for j in range(d):
        without = masks[(masks >> j) & 1 == 0]
        gains = values[without | (1 << j)] - values[without]
        phi[j] = weight[sizes[without]] @ gains
    return _finish(model, unit_id, w, phi, values[0], values[-1], feature_names)


def kernel_weight(k: int, d: int) -> Fraction:
    """Shapley kernel weight ``(d - 1) / (C(d, k) k (d - k))`` as an exact rational."""
    if not 1 <= k <= d - 1:
        raise ValueError(f"kernel weight is infinite for k={k}, d={d}; empty and full coalitions are constraints")
    return Fraction(d - 1, math.comb(d, k) * k * (d - k))


def _sample_coalitions(d: int, budget: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Coalition masks and regression weights within ``budget``.

    Size classes are enumerated completely, smallest and largest first, while
    the budget allows; the rest of the budget is spent on paired random
    coalitions whose sizes are drawn in proportion to the class weights.
    """
    class_weight = {k: float(kernel_weight(k, d)) * math.comb(d, k) for k in range(1, d)}
    chosen: dict[int, float] = {}
    remaining = budget
    pending = []
    for k in range(1, d // 2 + 1):
        group = sorted({k, d - k})
        need = sum(math.comb(d, s) for s in group)
        if not pending and need <= remaining:
            for s in group:
                for combo in _combinations_masks(d, s):
                    chosen[combo] = float(kernel_weight(s, d))
            remaining -= need
        else:
            pending.extend(group)
    if pending and remaining > 0:
        sampled: dict[int, list[int]] = {k: [] for k in pending}
        probs = np.array([class_weight[k] for k in pending])
        probs /= probs.sum()
        full = (1 << d) - 1
        capacity = sum(math.comb(d, k) for k in pending)
        attempts = 0
        while remaining > 0 and attempts < 50 * budget and sum(map(len, sampled.values())) < capacity:
            attempts += 1
            k = pending[int(rng.choice(len(pending), p=probs))]
            mask = int(np.sum(1 << rng.choice(d, size=k, replace=False)))
            if mask in sampled[k]:
                continue
            sampled[k].append(mask)
            remaining -= 1
            comp = full ^ mask
            if remaining > 0 and comp not in sampled[d - k]:
                sampled[d - k].append(comp)
                remaining -= 1
        for k, masks in sampled.items():
            for m in masks:
                chosen[m] = class_weight[k] / len(masks)
    masks = np.array(sorted(chosen), dtype=np.int64)
    return masks, np.array([chosen[m] for m in masks])


def _combinations_masks(d: int, k: int):
    for combo in combinations(range(d), k):
        yield sum(1 << j for j in combo)


def survshap_kernel(model, w, background, coalition_budget: int | None = None, seed: int = 0,
                    unit_id: str = "", feature_names=None) -> ShapMatrix:
    """Kernel (weighted least squares) Shapley contributions.

    The empty and full coalitions enter as exact constraints: the last
    feature's contribution is eliminated as ``v(full) - v(empty)`` minus the
    others, so efficiency holds at every time by construction. A budget of
    ``2**d - 2`` or more enumerates every coalition and reproduces the exact
    values.
    """
    w = np.asarray(w, dtype=float)
    d = w.size
    n_proper = 2**d - 2
    budget = min(n_proper, DEFAULT_BUDGET_CAP) if coalition_budget is None else int(coalition_budget)
    if budget < min(2 * d + 2, n_proper):
        raise ValueError(f"coalition_budget must be at least {min(2 * d + 2, n_proper)}")
    ends = coalition_values(model, w, background, np.array([[False] * d, [True] * d]))
    v_empty, v_full = ends[0], ends[1]
    delta = v_full - v_empty
    if d == 1:
        return _finish(model, unit_id, w, delta[None, :], v_empty, v_full, feature_names)
    masks, omega = _sample_coalitions(d, min(budget, n_proper), np.random.default_rng(seed))
    Z = _masks_to_bool(masks, d).astype(float)
    Y = coalition_values(model, w, background, Z.astype(bool)) - v_empty
    X = Z[:, :-1] - Z[:, -1:]
    target = Y - Z[:, -1:] * delta
    XtW = X.T * omega
    A = XtW @ X
    rhs = XtW @ target
    try:
        beta = scipy.linalg.solve(A, rhs, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        try:
            beta = scipy.linalg.solve(A + RIDGE * np.eye(d - 1), rhs, assume_a="pos")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            raise ValueError("kernel normal equations are singular; increase coalition_budget") from None
    phi = np.vstack([beta, delta - beta.sum(axis=0)])
    return _finish(model, unit_id, w, phi, v_empty, v_full, feature_names)


def normalize(shap: ShapMatrix) -> ShapMatrix:
    """Rescale every time row by its absolute sum; all-zero rows stay zero."""
    scale = np.abs(shap.phi).sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        star = np.where(scale > 0, shap.phi / np.where(scale > 0, scale, 1.0), 0.0)
    return replace(shap, normalized=star)


def _check_interval(times: np.ndarray, interval) -> tuple[float, float]:
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ValueError(f"interval [{a}, {b}] is empty")
    if a < times[0] or b > times[-1]:
        raise ValueError(f"interval [{a}, {b}] is outside the time grid")
    inside = times[(times > a) & (times < b)]
    if inside.size:
        raise ValueError(f"interval [{a}, {b}] contains event time {inside[0]}")
    return a, b


def interval_summary(t, y, interval, curve) -> tuple[float, float, float, float]:
    """(Delta, Gamma, difference, difference per unit time) on ``interval``."""
    a, b = _check_interval(np.asarray(t), interval)
    delta = integrate(curve, a, b)
    gamma = trapezoid_aggregate(t, y, a, b)
    diff = delta - gamma
    return delta, gamma, diff, diff / (b - a)


def smooth_series(t, y, lam: float | None = None):
    lam = select_lambda(t, y) if lam is None else float(lam)
    return fit_penalized(t, y, lam)


def shap_summaries(shap: ShapMatrix, j: int, intervals, lam: float | None = None) -> list[ContributionSummary]:
    """Summaries of feature ``j`` over several intervals from one smoothing fit."""
    if shap.normalized is None:
        shap = normalize(shap)
    t = shap.times
    y = shap.normalized[:, j]
    curve = smooth_series(t, y, lam)
    out = []
    for interval in intervals:
        delta, gamma, tsd, tnsd = interval_summary(t, y, interval, curve)
        a, b = float(interval[0]), float(interval[1])
        out.append(ContributionSummary(shap.unit_id, j, (a, b), delta, gamma, tsd, tnsd,
                                       float(np.interp(a, t, y)), float(np.interp(b, t, y))))
    return out


def shap_summary(shap: ShapMatrix, j: int, interval, lam: float | None = None) -> ContributionSummary:
    return shap_summaries(shap, j, [interval], lam)[0]


def _feature_label(shap: ShapMatrix, j: int) -> str:
    return shap.feature_names[j] if shap.feature_names else f"w{j + 1}"


def write_shap_csv(shap: ShapMatrix, path) -> None:
    """Long CSV with columns ``t,feature,phi,phi_star``."""
    star = shap.normalized if shap.normalized is not None else normalize(shap).normalized
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "feature", "phi", "phi_star"])
        for m, t in enumerate(shap.times.tolist()):
            for j in range(shap.n_features):
                w.writerow([repr(t), _feature_label(shap, j), repr(float(shap.phi[m, j])), repr(float(star[m, j]))])


def format_interval(interval) -> str:
    return f"[{float(interval[0])!r},{float(interval[1])!r}]"


def write_summary_csv(summaries: Sequence[ContributionSummary], path, names=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "interval", "phi_star_at_ta", "phi_star_at_tb", "tsd", "tnsd"])
        for s in summaries:
            label = names[s.feature] if names else f"w{s.feature + 1}"
            w.writerow([label, format_interval(s.interval), repr(s.start_value), repr(s.end_value),
                        repr(s.tsd), repr(s.tnsd)])
