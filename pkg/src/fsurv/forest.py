"""Bootstrap forests of functional mixed survival trees.

Every tree is grown on a bootstrap resample with its own generator derived
from ``(seed, tree index)``, so a forest does not depend on the order in
which trees are built. Ensemble estimates are plain means over trees on the
pooled event-time grid, accumulated in ascending tree order.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .survcore import integrated_brier
from .tree import FeatureMatrix, Tree, TreeConfig, grow_tree, tree_from_json, tree_to_json

MAX_RESAMPLES = 100


@dataclass
class ForestConfig:
    n_trees: int = 1000
    mtry: int | None = None
    tree: TreeConfig = field(default_factory=TreeConfig)

    def resolved_mtry(self, n_features: int) -> int:
        m = self.mtry if self.mtry is not None else math.ceil(math.sqrt(n_features))
        if not 1 <= m <= n_features:
            raise ValueError(f"mtry must be in [1, {n_features}], got {m}")
        return m

    def to_json(self) -> dict:
        return {"n_trees": self.n_trees, "mtry": self.mtry, "tree": asdict(self.tree)}

    @classmethod
    def from_json(cls, payload: dict) -> "ForestConfig":
        return cls(payload["n_trees"], payload.get("mtry"), TreeConfig(**payload.get("tree", {})))


@dataclass
class Forest:
    trees: list[Tree]
    ib_indices: list[np.ndarray]
    oob_indices: list[np.ndarray]
    event_grid: np.ndarray
    seed: int
    config: ForestConfig
    features: FeatureMatrix
    times: np.ndarray | None = None
    status: np.ndarray | None = None
    ids: tuple[str, ...] = ()
    _leaf_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_features(self) -> int:
        return self.features.n_features

    def predict_sf(self, W) -> np.ndarray:
        """Ensemble SF on ``event_grid`` for every row of ``W``."""
        return predict_batch(self, W)[1]

    def leaf_tables(self, b: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-node (CHF, SF) values on the event grid for tree ``b``.

        Rows of internal nodes are left at zero; they are never indexed.
        """
        if b not in self._leaf_cache:
            tree = self.trees[b]
            chf = np.zeros((len(tree.nodes), self.event_grid.size))
            sf = np.zeros_like(chf)
            for node in tree.terminals():
                chf[node.node_id] = node.chf(self.event_grid)
                sf[node.node_id] = node.sf(self.event_grid)
            self._leaf_cache[b] = (chf, sf)
        return self._leaf_cache[b]


def _thread_count() -> int:
    raw = os.environ.get("FSURV_THREADS")
    cap = os.cpu_count() or 1
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"FSURV_THREADS must be an integer, got {raw!r}") from None
    return max(1, min(n, cap))


def _tree_rng(seed: int, b: int) -> np.random.Generator:
    return np.random.default_rng([seed, b])


def _bootstrap(rng, n: int, status: np.ndarray) -> np.ndarray:
    for _ in range(MAX_RESAMPLES):
        rows = np.sort(rng.integers(0, n, size=n))
        if status[rows].any():
            return rows
    raise ValueError(f"no bootstrap sample with an event after {MAX_RESAMPLES} attempts")


def grow_forest(features: FeatureMatrix, times, status, config: ForestConfig | None = None,
                seed: int = 0, bootstrap: bool = True, ids=()) -> Forest:
    """Grow ``config.n_trees`` trees on bootstrap resamples.

    With ``bootstrap=False`` every tree is grown on all rows, which is only
    useful for checking the degenerate single-tree case.
    """
    config = config or ForestConfig()
    if config.n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    times = np.asarray(times, dtype=float)
    status = np.asarray(status).astype(int)
    n = times.size
    if features.values.shape[0] != n or status.size != n:
        raise ValueError("features, times and status must have the same number of rows")
    if not status.any():
        raise ValueError("the dataset has no events")
    mtry = config.resolved_mtry(features.n_features)
    tree_cfg = TreeConfig(config.tree.min_node_size, config.tree.max_depth, mtry, config.tree.alpha)

    def grow_one(b: int):
        rng = _tree_rng(seed, b)
        rows = _bootstrap(rng, n, status) if bootstrap else np.arange(n)
        return rows, grow_tree(features, times, status, tree_cfg, rng, rows)

    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            grown = list(pool.map(grow_one, range(config.n_trees)))
    else:
        grown = [grow_one(b) for b in range(config.n_trees)]
    ib = [rows for rows, _ in grown]
    oob = [np.setdiff1d(np.arange(n), rows) for rows in ib]
    grid = np.unique(times[status == 1])
    return Forest([t for _, t in grown], ib, oob, grid, int(seed), config, features, times, status, tuple(ids))


def _check_inputs(forest: Forest, W) -> np.ndarray:
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.shape[1] != forest.n_features:
        raise ValueError(f"expected {forest.n_features} features, got {W.shape[1]}")
    if np.isnan(W).any():
        raise ValueError("features contain NaN")
    return W


def predict_batch(forest: Forest, W) -> tuple[np.ndarray, np.ndarray]:
    """Ensemble (CHF, SF) for every row of ``W``, each of shape (n, M)."""
    W = _check_inputs(forest, W)
    chf = np.zeros((W.shape[0], forest.event_grid.size))
    sf = np.zeros_like(chf)
    for b, tree in enumerate(forest.trees):
        leaves = tree.apply(W)
        c, s = forest.leaf_tables(b)
        chf += c[leaves]
        sf += s[leaves]
    chf /= forest.n_trees
    sf /= forest.n_trees
    return chf, np.clip(sf, 0.0, 1.0)


def predict_forest(forest: Forest, w) -> tuple[np.ndarray, np.ndarray]:
    """Ensemble CHF and SF of one feature vector on ``forest.event_grid``."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise ValueError("w must be a single feature vector")
    chf, sf = predict_batch(forest, w[None, :])
    return chf[0], sf[0]


def predict_sf(forest: Forest, W) -> np.ndarray:
    return predict_batch(forest, W)[1]


def oob_predict_sf(forest: Forest, W=None, rows=None) -> np.ndarray:
    """Out-of-bag ensemble SF for training rows.

    ``W`` replaces the stored training features (same row order), which is
    how permuted copies are scored. Raises if a requested row is in-bag in
    every tree.
    """
    W = forest.features.values if W is None else _check_inputs(forest, W)
    n = forest.features.values.shape[0]
    if W.shape[0] != n:
        raise ValueError("W must have one row per training subject")
    rows = np.arange(n) if rows is None else np.asarray(rows, dtype=np.int64)
    wanted = np.zeros(n, dtype=bool)
    wanted[rows] = True
    total = np.zeros((n, forest.event_grid.size))
    count = np.zeros(n)
    for b, tree in enumerate(forest.trees):
        oob = forest.oob_indices[b]
        oob = oob[wanted[oob]]
        if oob.size == 0:
            continue
        _, s = forest.leaf_tables(b)
        total[oob] += s[tree.apply(W[oob])]
        count[oob] += 1
    missing = rows[count[rows] == 0]
    if missing.size:
        raise ValueError(f"subject index {int(missing[0])} is never out-of-bag")
    return np.clip(total[rows] / count[rows, None], 0.0, 1.0)


def oob_ensemble_sf(forest: Forest, i: int) -> np.ndarray:
    """OOB ensemble SF of training subject ``i`` on the event grid."""
    return oob_predict_sf(forest, rows=[i])[0]


def inbag_predict_sf(forest: Forest) -> np.ndarray:
    """Ensemble SF of training rows averaged over the trees that saw them."""
    W = forest.features.values
    n = W.shape[0]
    total = np.zeros((n, forest.event_grid.size))
    count = np.zeros(n)
    for b, tree in enumerate(forest.trees):
        ib = np.unique(forest.ib_indices[b])
        _, s = forest.leaf_tables(b)
        total[ib] += s[tree.apply(W[ib])]
        count[ib] += 1
    count = np.maximum(count, 1)
    return np.clip(total / count[:, None], 0.0, 1.0)


def evaluation_grid(forest: Forest, times) -> np.ndarray:
    """Event grid restricted to the observed follow-up range."""
    times = np.asarray(times, dtype=float)
    g = forest.event_grid
    return g[(g >= times.min()) & (g <= times.max())]


def oob_integrated_brier(forest: Forest, times, status) -> float:
    grid = evaluation_grid(forest, times)
    return integrated_brier(oob_predict_sf(forest), times, status, grid)


def step_values(grid: np.ndarray, values: np.ndarray, t, before: float) -> np.ndarray:
    """Right-continuous step interpolation of grid values at times ``t``."""
    idx = np.searchsorted(grid, np.asarray(t, dtype=float), side="right") - 1
    out = np.where(idx >= 0, values[..., np.maximum(idx, 0)], before)
    return out


def save_forest(forest: Forest, path) -> None:
    """JSON lines: a header record followed by one record per tree."""
    fm = forest.features
    header = {
        "kind": "header",
        "seed": forest.seed,
        "config": forest.config.to_json(),
        "event_grid": forest.event_grid.tolist(),
        "features": {
            "values": fm.values.tolist(),
            "kinds": list(fm.kinds),
            "components": list(fm.components),
            "names": list(fm.names),
        },
        "times": None if forest.times is None else forest.times.tolist(),
        "status": None if forest.status is None else forest.status.tolist(),
        "ids": list(forest.ids),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for b, tree in enumerate(forest.trees):
            fh.write(json.dumps({"kind": "tree", "index": b, "ib": forest.ib_indices[b].tolist(),
                                 "tree": tree_to_json(tree)}) + "\n")


def load_forest(path) -> Forest:
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("kind") != "header":
        raise ValueError(f"{path}: missing forest header record")
    h = lines[0]
    f = h["features"]
    fm = FeatureMatrix(np.array(f["values"], dtype=float).reshape(-1, len(f["kinds"])), tuple(f["kinds"]),
                       tuple(f["components"]), tuple(f["names"]))
    n = fm.values.shape[0]
    trees, ib, oob = [], [], []
    for rec in lines[1:]:
        rows = np.asarray(rec["ib"], dtype=np.int64)
        trees.append(tree_from_json(rec["tree"]))
        ib.append(rows)
        oob.append(np.setdiff1d(np.arange(n), rows))
    times = None if h.get("times") is None else np.asarray(h["times"], dtype=float)
    status = None if h.get("status") is None else np.asarray(h["status"], dtype=int)
    return Forest(trees, ib, oob, np.asarray(h["event_grid"], dtype=float), int(h["seed"]),
                  ForestConfig.from_json(h["config"]), fm, times, status, tuple(h.get("ids", ())))


def write_predictions(path, ids, grid, chf, sf) -> None:
    """Long CSV with columns ``id,t,sf,chf``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "t", "sf", "chf"])
        for sid, crow, srow in zip(ids, np.atleast_2d(chf), np.atleast_2d(sf)):
            for t, s, c in zip(grid.tolist(), srow.tolist(), crow.tolist()):
                w.writerow([sid, repr(t), repr(s), repr(c)])


__all__ = [
    "Forest",
    "ForestConfig",
    "grow_forest",
    "predict_forest",
    "predict_batch",
    "predict_sf",
    "oob_predict_sf",
    "oob_ensemble_sf",
    "inbag_predict_sf",
    "oob_integrated_brier",
    "save_forest",
    "load_forest",
    "write_predictions",
]
