"""Discrimination curves along tree paths and the L2 separability metric.

An FPC split ``nu_m <= c`` at node ``h`` corresponds to the curve
``mu(t) + c * xi_m(t)`` in trajectory space. Adding these offsets over the
FPC-split nodes of a root-to-node path gives the (global) discrimination
curve; replacing ``mu`` by the mean reconstruction of the node's members
gives the localized version. Consecutive localized curves along a path are
compared by their L2 distance over the study window.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .fpca import FunctionalBasis, reconstruct
from .tree import FPC, Tree, tree_to_json

FSDC = "fsdc"
LFSDC = "lfsdc"


@dataclass(frozen=True)
class DiscriminationCurve:
    grid: np.ndarray
    values: np.ndarray
    node_id: int | None
    kind: str
    contributing_nodes: tuple[tuple[int | None, int, float], ...]  # (node, component m, threshold)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("curve values must be finite")
        if self.kind not in (FSDC, LFSDC):
            raise ValueError(f"unknown curve kind {self.kind!r}")


@dataclass(frozen=True)
class SeparationRegions:
    node_id: int
    left_ids: np.ndarray
    right_ids: np.ndarray
    threshold: float
    feature: int
    feature_kind: str


def _score_values(scores) -> np.ndarray:
    return np.asarray(getattr(scores, "values", scores), dtype=float)


def local_mean(members, scores, basis: FunctionalBasis) -> np.ndarray:
    """Average reconstructed trajectory of ``members`` on the basis grid.

    ``members`` is taken as stored, so repeated bootstrap rows count once
    per occurrence.
    """
    members = np.asarray(members, dtype=np.int64)
    if members.size == 0:
        raise ValueError("local mean of an empty membership")
    return np.mean(reconstruct(_score_values(scores)[members], basis), axis=0)


def fpc_path(tree: Tree, node_id: int) -> list[tuple[int, int, float]]:
    """(node, component, threshold) for FPC splits from the root to ``node_id``.

    The node itself is included when it splits on an FPC column.
    """
    out = []
    for node in tree.path_to(node_id):
        if node.split is not None and tree.kinds[node.split.feature] == FPC:
            out.append((node.node_id, int(tree.components[node.split.feature]), float(node.split.threshold)))
    return out


def _offset(basis: FunctionalBasis, path) -> np.ndarray:
    total = np.zeros(basis.grid.size)
    for _, m, c in path:
        if not 1 <= m <= basis.p:
            raise ValueError(f"component {m} not in basis (p = {basis.p})")
        total = total + c * basis.eigenfunctions[m - 1]
    return total


def _as_triples(path) -> list[tuple[int | None, int, float]]:
    out = []
    for item in path:
        if len(item) == 2:
            out.append((None, int(item[0]), float(item[1])))
        else:
            out.append((item[0], int(item[1]), float(item[2])))
    return out


def fsdc(basis: FunctionalBasis, path=(), node_id: int | None = None) -> DiscriminationCurve:
    """Global mean plus threshold-weighted eigenfunctions of ``path``.

    ``path`` holds ``(m, c)`` or ``(node, m, c)`` entries.
    """
    triples = _as_triples(path)
    values = basis.mean.values + _offset(basis, triples)
    return DiscriminationCurve(basis.grid, values, node_id, FSDC, tuple(triples))


def lfsdc(tree: Tree, node_id: int, scores, basis: FunctionalBasis) -> DiscriminationCurve:
    """Local mean of the node's members plus the FPC-split offsets of its path."""
    path = fpc_path(tree, node_id)
    values = local_mean(tree.nodes[node_id].members, scores, basis) + _offset(basis, path)
    return DiscriminationCurve(basis.grid, values, node_id, LFSDC, tuple(path))


def separation_regions(tree: Tree, node_id: int) -> SeparationRegions:
    node = tree.nodes[node_id]
    if node.split is None:
        raise ValueError(f"node {node_id} is terminal and has no separation regions")
    return SeparationRegions(
        node_id,
        tree.nodes[node.left].members.copy(),
        tree.nodes[node.right].members.copy(),
        node.split.threshold,
        node.split.feature,
        tree.kinds[node.split.feature],
    )


def l2_distance(a, b) -> float:
    """Trapezoidal L2 distance between two curves on the same grid."""
    ga, gb = np.asarray(a.grid), np.asarray(b.grid)
    if ga.shape != gb.shape or not np.array_equal(ga, gb):
        raise ValueError("curves are defined on different grids")
    diff = np.asarray(a.values) - np.asarray(b.values)
    return math.sqrt(max(float(trapezoid(diff * diff, ga)), 0.0))


def path_distance_profile(tree: Tree, leaf: int, scores, basis: FunctionalBasis) -> list[tuple[int, float]]:
    """(depth, d2 to parent) for every non-root node on the path to ``leaf``."""
    path = tree.path_to(leaf)
    curves = [lfsdc(tree, n.node_id, scores, basis) for n in path]
    return [(path[k].depth, l2_distance(curves[k], curves[k - 1])) for k in range(1, len(path))]


def export_tree(tree: Tree, scores, basis: FunctionalBasis, ids=None) -> dict:
    """Tree JSON with a per-node discrimination payload.

    Region memberships are reported as subject identifiers when ``ids`` is
    given (or ``scores`` carries them), otherwise as row indices.
    """
    ids = ids if ids is not None else getattr(scores, "ids", None)
    label = (lambda rows: [ids[i] for i in rows]) if ids is not None else (lambda rows: [int(i) for i in rows])
    payload = tree_to_json(tree)
    curves = {n.node_id: lfsdc(tree, n.node_id, scores, basis) for n in tree.nodes}
    for item, node in zip(payload["nodes"], tree.nodes):
        disc = {"node": node.node_id, "lfsdc": curves[node.node_id].values.tolist()}
        if node.split is not None:
            disc["regions"] = {
                "left": label(tree.nodes[node.left].members),
                "right": label(tree.nodes[node.right].members),
            }
        disc["d2_from_parent"] = (
            None if node.parent is None else l2_distance(curves[node.node_id], curves[node.parent])
        )
        item["discrimination"] = disc
    payload["grid"] = basis.grid.tolist()
    return payload


def profile_from_export(payload: dict, leaf: int) -> list[tuple[int, float]]:
    """Recompute the path profile from the curves stored in an export."""
    grid = np.asarray(payload["grid"], dtype=float)
    nodes = {item["node"]: item for item in payload["nodes"]}
    chain = [nodes[leaf]]
    while chain[-1]["parent"] is not None:
        chain.append(nodes[chain[-1]["parent"]])
    chain.reverse()

    def curve(item):
        return DiscriminationCurve(grid, np.asarray(item["discrimination"]["lfsdc"]), item["node"], LFSDC, ())

    return [(chain[k]["depth"], l2_distance(curve(chain[k]), curve(chain[k - 1]))) for k in range(1, len(chain))]


def write_curve_csv(curve: DiscriminationCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value"])
        for t, v in zip(curve.grid.tolist(), curve.values.tolist()):
            w.writerow([repr(t), repr(v)])
