"""Loading, validating and joining longitudinal and survival tables."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DataError(ValueError):
    """Invalid or inconsistent input data."""


@dataclass(frozen=True)
class LongitudinalSample:
    """Irregularly observed measurements ``(times, values)`` of one subject."""

    subject_id: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise DataError(f"subject {self.subject_id}: times and values must be non-empty and equal length")
        if np.any(np.diff(t) <= 0):
            raise DataError(f"subject {self.subject_id}: times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise DataError(f"subject {self.subject_id}: non-finite time or value")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SurvivalRecord:
    subject_id: str
    event_time: float
    status: int
    covariates: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.event_time) and self.event_time > 0):
            raise DataError(f"subject {self.subject_id}: event time must be positive and finite")
        if self.status not in (0, 1):
            raise DataError(f"subject {self.subject_id}: status must be 0 or 1")
        x = np.asarray(self.covariates, dtype=float).reshape(-1)
        if not np.all(np.isfinite(x)):
            raise DataError(f"subject {self.subject_id}: non-finite covariate")
        object.__setattr__(self, "covariates", x)
        object.__setattr__(self, "event_time", float(self.event_time))
        object.__setattr__(self, "status", int(self.status))


@dataclass(frozen=True)
class MixedSurvivalDataset:
    """Paired longitudinal and survival data over a closed study window.

    Subjects are kept sorted by identifier so the dataset does not depend on
    the row order of the source tables.
    """

    records: tuple[tuple[LongitudinalSample, SurvivalRecord], ...]
    window: tuple[float, float]

    def __len__(self) -> int:
        return len(self.records)

    @property
    def ids(self) -> list[str]:
        return [s.subject_id for s, _ in self.records]

    @property
    def samples(self) -> list[LongitudinalSample]:
        return [s for s, _ in self.records]

    @property
    def event_times(self) -> np.ndarray:
        return np.array([r.event_time for _, r in self.records])

    @property
    def status(self) -> np.ndarray:
        return np.array([r.status for _, r in self.records], dtype=int)

    @property
    def covariates(self) -> np.ndarray:
        q = self.records[0][1].covariates.size
        return np.array([r.covariates for _, r in self.records], dtype=float).reshape(len(self), q)

    def to_json(self) -> dict:
        return {
            "window": [self.window[0], self.window[1]],
            "subjects": [
                {
                    "id": s.subject_id,
                    "times": s.times.tolist(),
                    "values": s.values.tolist(),
                    "event_time": r.event_time,
                    "status": r.status,
                    "covariates": r.covariates.tolist(),
                }
                for s, r in self.records
            ],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "MixedSurvivalDataset":
        long, surv = [], []
        for subj in payload["subjects"]:
            long.append(LongitudinalSample(subj["id"], subj["times"], subj["values"]))
            surv.append(SurvivalRecord(subj["id"], subj["event_time"], subj["status"], subj["covariates"]))
        return join(long, surv, tuple(payload["window"]))


def _parse_float(cell: str, line: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"line {line}: non-numeric {column} {cell!r}") from None
    if not math.isfinite(value):
        raise DataError(f"line {line}: non-finite {column} {cell!r}")
    return value


def load_longitudinal(path) -> list[LongitudinalSample]:
    """Read a long-format CSV with header ``id,time,value``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "time", "value"]:
            raise DataError(f"{path}: header must be exactly id,time,value")
        rows: dict[str, dict[float, float]] = {}
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"line {line}: expected 3 cells, got {len(row)}")
            sid = row[0].strip()
            t = _parse_float(row[1], line, "time")
            v = _parse_float(row[2], line, "value")
            per_subject = rows.setdefault(sid, {})
            if t in per_subject:
                raise DataError(f"line {line}: duplicate observation for id {sid!r} at time {t!r}")
            per_subject[t] = v
    samples = []
    for sid, obs in rows.items():
        times = np.array(sorted(obs))
        samples.append(LongitudinalSample(sid, times, np.array([obs[t] for t in times])))
    return samples


def load_survival(path) -> list[SurvivalRecord]:
    """Read a survival CSV with header ``id,time,status,x1,...,xq``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["id", "time", "status"]:
            raise DataError(f"{path}: header must start with id,time,status")
        q = len(header) - 3
        records, seen = [], set()
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != q + 3 or any(c.strip() == "" for c in row):
                raise DataError(f"line {line}: expected {q + 3} non-empty cells")
            sid = row[0].strip()
            if sid in seen:
                raise DataError(f"line {line}: duplicate id {sid!r}")
            seen.add(sid)
            t = _parse_float(row[1], line, "time")
            status = _parse_float(row[2], line, "status")
            if status not in (0.0, 1.0):
                raise DataError(f"line {line}: status must be 0 or 1, got {row[2]!r}")
            x = [_parse_float(c, line, header[3 + k]) for k, c in enumerate(row[3:])]
            records.append(SurvivalRecord(sid, t, int(status), np.array(x, dtype=float)))
    return records


def join(long: Sequence[LongitudinalSample], surv: Sequence[SurvivalRecord], window) -> MixedSurvivalDataset:
    """Pair samples and records by subject id.

    Observations after a subject's event time are kept as-is.
    """
    a, b = float(window[0]), float(window[1])
    if not a < b:
        raise DataError(f"invalid study window [{a}, {b}]")
    by_long = {s.subject_id: s for s in long}
    by_surv = {r.subject_id: r for r in surv}
    if len(by_long) != len(long) or len(by_surv) != len(surv):
        raise DataError("duplicate subject ids")
    orphans = sorted(set(by_long) ^ set(by_surv))
    if orphans:
        raise DataError(f"subjects present in only one table: {', '.join(orphans)}")
    if len(by_long) < 2:
        raise DataError("at least two subjects are required")
    widths = {r.covariates.size for r in surv}
    if len(widths) != 1:
        raise DataError("covariate vectors differ in length")
    records = []
    for sid in sorted(by_long):
        s, r = by_long[sid], by_surv[sid]
        if s.times[0] < a or s.times[-1] > b:
            raise DataError(f"subject {sid}: observation times outside window [{a}, {b}]")
        if r.event_time > b:
            raise DataError(f"subject {sid}: event time {r.event_time} outside window [{a}, {b}]")
        records.append((s, r))
    return MixedSurvivalDataset(tuple(records), (a, b))


def infer_window(long: Iterable[LongitudinalSample], surv: Iterable[SurvivalRecord]) -> tuple[float, float]:
    """Smallest closed window holding every observation and event time."""
    lo = min(min(s.times[0] for s in long), 0.0)
    hi = max(max(s.times[-1] for s in long), max(r.event_time for r in surv))
    return float(lo), float(hi)


def write_longitudinal(samples: Iterable[LongitudinalSample], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "time", "value"])
        for s in samples:
            for t, v in zip(s.times.tolist(), s.values.tolist()):
                w.writerow([s.subject_id, repr(t), repr(v)])


def write_survival(records: Sequence[SurvivalRecord], path) -> None:
    q = records[0].covariates.size if records else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "time", "status"] + [f"x{k + 1}" for k in range(q)])
        for r in records:
            w.writerow([r.subject_id, repr(r.event_time), r.status] + [repr(x) for x in r.covariates.tolist()])


def write_dataset(dataset: MixedSurvivalDataset, directory) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    long_path, surv_path = directory / "longitudinal.csv", directory / "survival.csv"
    write_longitudinal(dataset.samples, long_path)
    write_survival([r for _, r in dataset.records], surv_path)
    return long_path, surv_path


def save_dataset_json(dataset: MixedSurvivalDataset, path) -> None:
    Path(path).write_text(json.dumps(dataset.to_json(), indent=1) + "\n", encoding="utf-8")
