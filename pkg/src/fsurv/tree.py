"""Functional mixed survival trees.

A tree is grown over a mixed feature matrix ``W = (X, V)`` of scalar
covariates and FPC scores by exhaustive log-rank split search. Terminal
nodes carry Kaplan-Meier and Nelson-Aalen estimates of their members.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .survcore import StepFunction, kaplan_meier, logrank_p_value, logrank_statistic, nelson_aalen

SCALAR = "scalar"
FPC = "fpc_score"
TIE_TOL = 1e-12


@dataclass(frozen=True)
class FeatureMatrix:
    """Mixed features with per-column kinds.

    ``components[j]`` is the 1-based FPC index of an ``fpc_score`` column
    and ``None`` for scalar columns.
    """

    values: np.ndarray
    kinds: tuple[str, ...]
    components: tuple[Optional[int], ...]
    names: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("feature values must be a 2-d array")
        d = v.shape[1]
        if not (len(self.kinds) == len(self.components) == len(self.names) == d):
            raise ValueError("column metadata length must match the number of columns")
        fpcs = [c for k, c in zip(self.kinds, self.components) if k == FPC]
        if len(set(fpcs)) != len(fpcs) or any(c is None or c < 1 for c in fpcs):
            raise ValueError("fpc components must be distinct positive indices")
        if any(k not in (SCALAR, FPC) for k in self.kinds):
            raise ValueError("column kinds must be 'scalar' or 'fpc_score'")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_parts(cls, covariates, scores, scalar_names=None) -> "FeatureMatrix":
        X = np.asarray(covariates, dtype=float)
        V = np.asarray(scores, dtype=float)
        n = V.shape[0] if V.ndim == 2 else X.shape[0]
        X = X.reshape(n, -1)
        V = V.reshape(n, -1)
        q, p = X.shape[1], V.shape[1]
        names = tuple(scalar_names or [f"x{k + 1}" for k in range(q)]) + tuple(f"pc{m + 1}" for m in range(p))
        return cls(
            np.hstack([X, V]),
            (SCALAR,) * q + (FPC,) * p,
            (None,) * q + tuple(range(1, p + 1)),
            names,
        )

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


@dataclass
class TreeConfig:
    min_node_size: int = 5
    max_depth: int = 10
    mtry: Optional[int] = None
    alpha: Optional[float] = None

    def validate(self, n_features: int | None = None) -> None:
        if self.min_node_size < 1:
            raise ValueError("min_node_size must be >= 1")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.mtry is not None and n_features is not None and not 1 <= self.mtry <= n_features:
            raise ValueError(f"mtry must be in [1, {n_features}]")
        if self.alpha is not None and not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    statistic: float  # |L|
    p_value: float


@dataclass
class TreeNode:
    node_id: int
    depth: int
    members: np.ndarray
    split: Optional[Split] = None
    left: Optional[int] = None
    right: Optional[int] = None
    chf: Optional[StepFunction] = None
    sf: Optional[StepFunction] = None
    parent: Optional[int] = None

    @property
    def is_terminal(self) -> bool:
        return self.split is None


@dataclass
class Tree:
    nodes: list[TreeNode]
    n_features: int
    kinds: tuple[str, ...] = ()
    components: tuple[Optional[int], ...] = ()
    names: tuple[str, ...] = ()
    _arrays: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def terminals(self) -> list[TreeNode]:
        return [n for n in self.nodes if n.is_terminal]

    @property
    def depth(self) -> int:
        return max(n.depth for n in self.nodes)

    def path_to(self, node_id: int) -> list[TreeNode]:
        """Nodes from the root down to ``node_id`` (inclusive)."""
        path = [self.nodes[node_id]]
        while path[-1].parent is not None:
            path.append(self.nodes[path[-1].parent])
        return path[::-1]

    def _compiled(self):
        if not self._arrays:
            n = len(self.nodes)
            feat = np.full(n, -1, dtype=np.int64)
            thr = np.zeros(n)
            left = np.full(n, -1, dtype=np.int64)
            right = np.full(n, -1, dtype=np.int64)
            for node in self.nodes:
                if node.split is not None:
                    feat[node.node_id] = node.split.feature
                    thr[node.node_id] = node.split.threshold
                    left[node.node_id] = node.left
                    right[node.node_id] = node.right
            self._arrays.update(feature=feat, threshold=thr, left=left, right=right)
        return self._arrays

    def apply(self, W) -> np.ndarray:
        """Terminal node id reached by every row of ``W``."""
        W = np.atleast_2d(np.asarray(W, dtype=float))
        if W.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {W.shape[1]}")
        if np.isnan(W).any():
            raise ValueError("features contain NaN")
        a = self._compiled()
        idx = np.zeros(W.shape[0], dtype=np.int64)
        rows = np.arange(W.shape[0])
        active = a["feature"][idx] >= 0
        while active.any():
            cur = idx[active]
            f = a["feature"][cur]
            go_left = W[rows[active], f] <= a["threshold"][cur]
            idx[active] = np.where(go_left, a["left"][cur], a["right"][cur])
            active = a["feature"][idx] >= 0
        return idx


def _column_scan(x, ev_ind, risk_ind, d, r, min_node_size):
    """|L| for every ``<= threshold`` split of one column.

    Returns candidate thresholds and statistics, both in ascending threshold
    order, restricted to splits with at least ``min_node_size`` members on
    each side.
    """
    n = x.size
    order = np.argsort(x, kind="stable")
    xs = x[order]
    k = np.arange(1, n)  # left size
    valid = (xs[1:] > xs[:-1]) & (k >= min_node_size) & (n - k >= min_node_size)
    if not valid.any():
        return np.empty(0), np.empty(0)
    R1 = np.cumsum(risk_ind[order], axis=0)[:-1][valid]
    D1 = np.cumsum(ev_ind[order], axis=0)[:-1][valid]
    numerator = np.sum(D1 - R1 * (d / r), axis=1)
    keep = r > 1
    frac = R1[:, keep] / r[keep]
    var_terms = frac * (1.0 - frac) * ((r[keep] - d[keep]) / (r[keep] - 1.0) * d[keep])
    variance = np.sum(var_terms, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = np.where(variance > 0, np.abs(numerator) / np.sqrt(np.where(variance > 0, variance, 1.0)), 0.0)
    thresholds = (xs[:-1][valid] + xs[1:][valid]) / 2.0
    return thresholds, stat


def best_split(rows, features: FeatureMatrix | np.ndarray, times, status, config: TreeConfig | None = None,
               columns: Sequence[int] | None = None) -> Optional[Split]:
    """Best log-rank split of ``rows`` over the candidate ``columns``.

    Thresholds are midpoints between consecutive distinct values; rows with
    ``W[:, j] <= threshold`` go left. Ties in ``|L|`` go to the lowest
    column, then the lowest threshold. Returns ``None`` when no admissible
    split exists.
    """
    config = config or TreeConfig()
    W = features.values if isinstance(features, FeatureMatrix) else np.asarray(features, float)
    rows = np.asarray(rows)
    T = np.asarray(times, float)[rows]
    D = np.asarray(status)[rows]
    if rows.size < 2 * config.min_node_size or not np.any(D == 1):
        return None
    ev_times = np.unique(T[D == 1])
    risk_ind = (T[:, None] >= ev_times[None, :]).astype(float)
    ev_ind = ((T[:, None] == ev_times[None, :]) & (D[:, None] == 1)).astype(float)
    d = ev_ind.sum(0)
    r = risk_ind.sum(0)
    cols = range(W.shape[1]) if columns is None else sorted(columns)
    best_col, best_thr, best_stat = -1, 0.0, -np.inf
    for j in cols:
        thr, stat = _column_scan(W[rows, j], ev_ind, risk_ind, d, r, config.min_node_size)
        if stat.size == 0:
            continue
        top = stat.max()
        if top > best_stat + TIE_TOL:
            first = int(np.flatnonzero(stat >= top - TIE_TOL)[0])
            best_col, best_thr, best_stat = int(j), float(thr[first]), float(top)
    if best_col < 0 or best_stat <= 0.0:
        return None
    x = W[rows, best_col]
    left = x <= best_thr
    exact = abs(logrank_statistic((T[left], D[left]), (T[~left], D[~left])).statistic)
    return Split(best_col, best_thr, exact, logrank_p_value(exact))


def _terminal_estimates(T, D):
    return nelson_aalen(T, D), kaplan_meier(T, D)


def grow_tree(features: FeatureMatrix | np.ndarray, times, status, config: TreeConfig | None = None,
              rng: np.random.Generator | None = None, rows=None) -> Tree:
    """Grow a survival tree on ``rows`` (default: every row).

    ``rows`` may contain repeats, as for a bootstrap sample. When
    ``config.mtry`` is set, each node searches a random subset of that many
    columns drawn from ``rng``.
    """
    config = config or TreeConfig()
    if isinstance(features, FeatureMatrix):
        fm = features
    else:
        W = np.asarray(features, float)
        fm = FeatureMatrix(W, (SCALAR,) * W.shape[1], (None,) * W.shape[1],
                           tuple(f"w{j + 1}" for j in range(W.shape[1])))
    W = fm.values
    d_feat = W.shape[1]
    config.validate(d_feat)
    times = np.asarray(times, float)
    status = np.asarray(status).astype(int)
    if rows is None:
        rows = np.arange(W.shape[0])
    rows = np.asarray(rows, dtype=np.int64)
    if config.mtry is not None and config.mtry < d_feat and rng is None:
        rng = np.random.default_rng(0)

    nodes: list[TreeNode] = []
    stack = [(rows, 0, None, None)]  # members, depth, parent, side
    while stack:
        members, depth, parent, side = stack.pop()
        node = TreeNode(len(nodes), depth, members, parent=parent)
        nodes.append(node)
        if parent is not None:
            setattr(nodes[parent], side, node.node_id)
        T, D = times[members], status[members]
        split = None
        pure = np.unique(T[D == 1]).size <= 1
        if depth < config.max_depth and not pure:
            columns = None
            if config.mtry is not None and config.mtry < d_feat:
                columns = rng.choice(d_feat, size=config.mtry, replace=False)
            split = best_split(members, W, times, status, config, columns)
            if split is not None and config.alpha is not None and split.p_value > config.alpha:
                split = None
        if split is None:
            node.chf, node.sf = _terminal_estimates(T, D)
            continue
        node.split = split
        go_left = W[members, split.feature] <= split.threshold
        # right pushed first so the left child gets the smaller id
        stack.append((members[~go_left], depth + 1, node.node_id, "right"))
        stack.append((members[go_left], depth + 1, node.node_id, "left"))
    return Tree(nodes, d_feat, fm.kinds, fm.components, fm.names)


def predict_tree(tree: Tree, w) -> tuple[StepFunction, StepFunction]:
    """CHF and SF of the terminal node that ``w`` falls into."""
    w = np.asarray(w, dtype=float).reshape(1, -1)
    node = tree.nodes[int(tree.apply(w)[0])]
    return node.chf, node.sf


@dataclass(frozen=True)
class GraphicalSurvivalSet:
    node_id: int
    trajectories: np.ndarray  # (|I_s|, G)
    chf: StepFunction
    sf: StepFunction
    members: np.ndarray


def graphical_set(tree: Tree, terminal_id: int, basis, scores) -> GraphicalSurvivalSet:
    """Reconstructed member trajectories bundled with the terminal estimates."""
    from .fpca import reconstruct

    node = tree.nodes[terminal_id]
    if not node.is_terminal:
        raise ValueError(f"node {terminal_id} is not terminal")
    V = np.asarray(getattr(scores, "values", scores), dtype=float)
    traj = np.array([reconstruct(V[i], basis) for i in node.members]).reshape(node.members.size, -1)
    return GraphicalSurvivalSet(terminal_id, traj, node.chf, node.sf, node.members.copy())


def _node_to_json(node: TreeNode) -> dict:
    out = {
        "node": node.node_id,
        "depth": node.depth,
        "parent": node.parent,
        "members": node.members.tolist(),
    }
    if node.split is not None:
        out["split"] = {
            "feature": node.split.feature,
            "threshold": node.split.threshold,
            "statistic": node.split.statistic,
            "p_value": node.split.p_value,
        }
        out["left"] = node.left
        out["right"] = node.right
    else:
        out["chf"] = node.chf.to_json()
        out["sf"] = node.sf.to_json()
    return out


def tree_to_json(tree: Tree) -> dict:
    """Flat node list; ``left``/``right`` hold child node ids."""
    return {
        "n_features": tree.n_features,
        "kinds": list(tree.kinds),
        "components": list(tree.components),
        "names": list(tree.names),
        "nodes": [_node_to_json(n) for n in tree.nodes],
    }


def tree_from_json(payload: dict) -> Tree:
    nodes = []
    for item in payload["nodes"]:
        node = TreeNode(item["node"], item["depth"], np.asarray(item["members"], dtype=np.int64),
                        parent=item.get("parent"))
        if "split" in item:
            s = item["split"]
            node.split = Split(int(s["feature"]), float(s["threshold"]), float(s["statistic"]), float(s["p_value"]))
            node.left, node.right = item["left"], item["right"]
        else:
            node.chf = StepFunction.from_json(item["chf"])
            node.sf = StepFunction.from_json(item["sf"])
        nodes.append(node)
    return Tree(nodes, int(payload["n_features"]), tuple(payload.get("kinds", ())),
                tuple(payload.get("components", ())), tuple(payload.get("names", ())))

