"""Time-resolved permutation feature importance.

Importance of column ``j`` at time ``t`` is the IPCW Brier score of the
unpermuted data minus that of data with column ``j`` shuffled, averaged over
repeated permutations. With this sign convention, informative features get
negative values; rankings use magnitudes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .forest import oob_predict_sf
from .smoothfn import SmoothCurve
from .survcore import brier_curve
from .survshap import format_interval, interval_summary, smooth_series

DEFAULT_REPEATS = 10


class OOBModel:
    """Scores a forest's training rows through out-of-bag predictions."""

    def __init__(self, forest):
        self.forest = forest
        self.event_grid = forest.event_grid

    def predict_sf(self, W) -> np.ndarray:
        return oob_predict_sf(self.forest, W)


@dataclass(frozen=True)
class SurvivalData:
    features: np.ndarray
    times: np.ndarray
    status: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", np.atleast_2d(np.asarray(self.features, dtype=float)))
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "status", np.asarray(self.status).astype(int))


@dataclass(frozen=True)
class ImportanceCurve:
    feature: int
    times: np.ndarray
    raw: np.ndarray
    repeats: int
    smooth: SmoothCurve | None = None


@dataclass(frozen=True)
class ImportanceSummary:
    feature: int
    interval: tuple[float, float]
    delta: float
    upsilon: float
    mtgd: float
    mtngd: float
    start_value: float
    end_value: float


def _grid(model) -> np.ndarray:
    return np.asarray(model.event_grid, dtype=float)


def baseline_loss(model, data: SurvivalData) -> np.ndarray:
    """IPCW Brier score of unpermuted predictions at every grid time."""
    return brier_curve(model.predict_sf(data.features), data.times, data.status, _grid(model))


def permuted_loss(model, data: SurvivalData, j: int, rng: np.random.Generator) -> np.ndarray:
    """Brier curve after shuffling column ``j`` by ``rng.permutation``."""
    if not 0 <= j < data.features.shape[1]:
        raise ValueError(f"feature index {j} out of range")
    W = data.features.copy()
    W[:, j] = W[rng.permutation(W.shape[0]), j]
    return brier_curve(model.predict_sf(W), data.times, data.status, _grid(model))


def _repeat_rng(seed: int, j: int, r: int) -> np.random.Generator:
    return np.random.default_rng([seed, j, r])


def averaged_importance(model, data: SurvivalData, j: int, repeats: int = DEFAULT_REPEATS, seed: int = 0,
                        baseline: np.ndarray | None = None, lam: float | None = None,
                        smooth: bool = False) -> ImportanceCurve:
    """Mean over ``repeats`` permutations of baseline minus permuted loss."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    fi0 = baseline_loss(model, data) if baseline is None else baseline
    total = np.zeros_like(fi0)
    for r in range(repeats):
        total += fi0 - permuted_loss(model, data, j, _repeat_rng(seed, j, r))
    raw = total / repeats
    grid = _grid(model)
    fit = smooth_series(grid, raw, lam) if smooth else None
    return ImportanceCurve(j, grid, raw, repeats, fit)


def importance_summaries(curve: ImportanceCurve, intervals, lam: float | None = None) -> list[ImportanceSummary]:
    """MTGD and MTNGD of one curve over several event-free intervals."""
    fit = curve.smooth if (curve.smooth is not None and lam is None) else smooth_series(curve.times, curve.raw, lam)
    out = []
    for interval in intervals:
        delta, upsilon, mtgd, mtngd = interval_summary(curve.times, curve.raw, interval, fit)
        a, b = float(interval[0]), float(interval[1])
        out.append(ImportanceSummary(curve.feature, (a, b), delta, upsilon, mtgd, mtngd,
                                     float(np.interp(a, curve.times, curve.raw)),
                                     float(np.interp(b, curve.times, curve.raw))))
    return out


def importance_summary(curve: ImportanceCurve, interval, lam: float | None = None) -> tuple[float, float]:
    s = importance_summaries(curve, [interval], lam)[0]
    return s.mtgd, s.mtngd


def rank_features(model, data: SurvivalData, repeats: int = DEFAULT_REPEATS, seed: int = 0,
                  features: Sequence[int] | None = None) -> list[tuple[int, float]]:
    """Features by descending ``|mean over grid of the averaged importance|``.

    Ties keep ascending column order.
    """
    cols = range(data.features.shape[1]) if features is None else features
    fi0 = baseline_loss(model, data)
    scores = [(j, abs(float(np.mean(averaged_importance(model, data, j, repeats, seed, fi0).raw)))) for j in cols]
    return sorted(scores, key=lambda item: -item[1])


def write_curve_csv(curve: ImportanceCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "fi_bar"])
        for t, v in zip(curve.times.tolist(), curve.raw.tolist()):
            w.writerow([repr(t), repr(v)])


def write_summary_csv(summaries: Sequence[ImportanceSummary], path, names=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "interval", "fi_at_ta", "fi_at_tb", "mtgd", "mtngd"])
        for s in summaries:
            label = names[s.feature] if names else f"w{s.feature + 1}"
            w.writerow([label, format_interval(s.interval), repr(s.start_value), repr(s.end_value),
                        repr(s.mtgd), repr(s.mtngd)])
