import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsurv.fpca import fit_pace, reconstruct
from fsurv.sim import SimConfig, simulate
from fsurv.survcore import kaplan_meier, logrank_statistic
from fsurv.tree import (
    FPC,
    FeatureMatrix,
    TreeConfig,
    best_split,
    graphical_set,
    grow_tree,
    predict_tree,
    tree_from_json,
    tree_to_json,
)
from oracles import brute_force_best_split


def _random_survival(rng, n, d, censor=0.3):
    W = rng.normal(size=(n, d))
    times = rng.exponential(1.0, n) + 0.01
    status = (rng.random(n) > censor).astype(int)
    status[0] = 1
    return W, times, status


def test_perfectly_ordered_feature():
    x = np.arange(20, dtype=float)
    times = np.arange(1, 21, dtype=float)
    status = np.ones(20, dtype=int)
    split = best_split(np.arange(20), x[:, None], times, status, TreeConfig())
    thr, stat = brute_force_best_split(x, times, status, 5)
    assert split.threshold == thr
    assert abs(split.statistic - stat) < 1e-12
    assert split.statistic > 3
    assert 4.5 <= split.threshold <= 14.5


@pytest.mark.parametrize("seed", range(8))
def test_matches_brute_force_scan(seed):
    rng = np.random.default_rng(seed)
    W, times, status = _random_survival(rng, 40, 3)
    W[:, 1] = np.round(W[:, 1], 1)  # ties inside a column
    split = best_split(np.arange(40), W, times, status, TreeConfig(min_node_size=4))
    per_col = [brute_force_best_split(W[:, j], times, status, 4) for j in range(3)]
    best = max(s for _, s in per_col)
    j = next(k for k, (_, s) in enumerate(per_col) if s >= best - 1e-12)
    assert split.feature == j
    assert split.threshold == per_col[j][0]
    assert abs(split.statistic - best) < 1e-12


def test_constant_columns_and_no_events():
    times = np.arange(1, 21, dtype=float)
    status = np.ones(20, dtype=int)
    assert best_split(np.arange(20), np.ones((20, 3)), times, status) is None
    W = np.arange(20.0)[:, None]
    assert best_split(np.arange(20), W, times, np.zeros(20, dtype=int)) is None
    assert best_split(np.arange(9), W, times, status) is None  # fewer than 2 * min_node_size


def test_identical_columns_pick_lowest_index():
    rng = np.random.default_rng(4)
    W, times, status = _random_survival(rng, 30, 1)
    split = best_split(np.arange(30), np.hstack([W, W, W]), times, status)
    assert split.feature == 0
    split = best_split(np.arange(30), np.hstack([W, W]), times, status, columns=[1, 0])
    assert split.feature == 0


def test_max_depth_zero_is_pooled_km():
    rng = np.random.default_rng(5)
    W, times, status = _random_survival(rng, 30, 2)
    tree = grow_tree(W, times, status, TreeConfig(max_depth=0))
    assert len(tree.nodes) == 1 and tree.root.is_terminal
    km = kaplan_meier(times, status)
    grid = np.linspace(0, times.max() + 1, 50)
    for w in rng.normal(size=(5, 2)):
        assert np.array_equal(predict_tree(tree, w)[1](grid), km(grid))


def test_single_event_gives_root_terminal():
    times = np.arange(1, 31, dtype=float)
    status = np.zeros(30, dtype=int)
    status[7] = 1
    tree = grow_tree(np.arange(30.0)[:, None], times, status)
    assert len(tree.nodes) == 1


def test_threshold_boundary_routes_left():
    rng = np.random.default_rng(6)
    W, times, status = _random_survival(rng, 40, 2)
    tree = grow_tree(W, times, status, TreeConfig(max_depth=1))
    s = tree.root.split
    w = np.zeros(2)
    w[s.feature] = s.threshold
    assert tree.apply(w[None, :])[0] == tree.root.left
    w[s.feature] = np.nextafter(s.threshold, np.inf)
    assert tree.apply(w[None, :])[0] == tree.root.right


def test_nan_rejected(tree_a):
    w = np.zeros(tree_a.n_features)
    w[2] = np.nan
    with pytest.raises(ValueError):
        predict_tree(tree_a, w)
    with pytest.raises(ValueError):
        predict_tree(tree_a, np.zeros(tree_a.n_features + 1))


def test_tree_structure_invariants(tree_a, features_a, scenario_a):
    dataset, _ = scenario_a
    W = features_a.values
    T, D = dataset.event_times, dataset.status
    terminals = tree_a.terminals()
    all_members = np.sort(np.concatenate([n.members for n in terminals]))
    assert np.array_equal(all_members, np.arange(len(dataset)))
    leaf_of = tree_a.apply(W)
    for node in terminals:
        assert np.all(leaf_of[node.members] == node.node_id)
        v = node.sf.values
        assert np.all(np.diff(v) <= 0) and np.all((v >= 0) & (v <= 1))
    for node in tree_a.nodes:
        if node.is_terminal:
            continue
        left, right = tree_a.nodes[node.left], tree_a.nodes[node.right]
        col = W[node.members, node.split.feature]
        assert np.array_equal(left.members, node.members[col <= node.split.threshold])
        assert np.array_equal(right.members, node.members[col > node.split.threshold])
        L = logrank_statistic((T[left.members], D[left.members]), (T[right.members], D[right.members]))
        assert abs(abs(L.statistic) - node.split.statistic) <= 1e-12
    assert tree_a.depth >= 2


def _partition_sequence(tree):
    return [(n.split.feature if n.split else None, tuple(n.members.tolist())) for n in tree.nodes]


@given(st.integers(0, 10_000), st.integers(0, 3), st.sampled_from(["exp", "cube", "affine"]))
@settings(max_examples=25, deadline=None)
def test_monotone_transform_invariance(seed, col, kind):
    rng = np.random.default_rng(seed)
    W, times, status = _random_survival(rng, 50, 4)
    f = {"exp": np.exp, "cube": lambda x: x**3 + x, "affine": lambda x: 3 * x - 7}[kind]
    W2 = W.copy()
    W2[:, col] = f(W[:, col])
    cfg = TreeConfig(max_depth=3)
    assert _partition_sequence(grow_tree(W, times, status, cfg)) == _partition_sequence(grow_tree(W2, times, status, cfg))


def test_alpha_gate_prunes():
    rng = np.random.default_rng(8)
    W, times, status = _random_survival(rng, 60, 3)
    full = grow_tree(W, times, status)
    gated = grow_tree(W, times, status, TreeConfig(alpha=1e-6))
    assert len(gated.nodes) <= len(full.nodes)
    assert all(n.split.p_value <= 1e-6 for n in gated.nodes if n.split)


def test_config_validation():
    with pytest.raises(ValueError):
        TreeConfig(min_node_size=0).validate()
    with pytest.raises(ValueError):
        TreeConfig(mtry=5).validate(4)
    with pytest.raises(ValueError):
        FeatureMatrix(np.zeros((3, 2)), ("scalar", "fpc_score"), (None, 0), ("a", "b"))


def test_graphical_sets(tree_a, fpca_a, scenario_a):
    basis, scores = fpca_a
    seen = []
    for node in tree_a.terminals():
        gs = graphical_set(tree_a, node.node_id, basis, scores)
        assert gs.trajectories.shape == (node.members.size, basis.grid.size)
        for row, i in zip(gs.trajectories, node.members):
            assert np.array_equal(row, reconstruct(scores.values[i], basis))
        seen.extend(gs.members.tolist())
    assert sorted(seen) == list(range(len(scenario_a[0])))
    with pytest.raises(ValueError):
        graphical_set(tree_a, tree_a.root.node_id, basis, scores)


def test_single_member_terminal():
    times = np.array([1.0, 2.0, 3.0, 4.0])
    status = np.array([1, 1, 1, 1])
    tree = grow_tree(np.arange(4.0)[:, None], times, status, TreeConfig(min_node_size=1, max_depth=5))
    leaf = next(n for n in tree.terminals() if n.members.size == 1)
    i = leaf.members[0]
    assert np.array_equal(leaf.sf(times), kaplan_meier(times[[i]], status[[i]])(times))


def test_json_roundtrip(tree_a, features_a):
    payload = tree_to_json(tree_a)
    text = json.dumps(payload)
    back = tree_from_json(json.loads(text))
    assert json.dumps(tree_to_json(back)) == text
    assert np.array_equal(back.apply(features_a.values), tree_a.apply(features_a.values))


def test_root_split_on_fpc_across_seeds():
    hits = 0
    for seed in range(20):
        dataset, _ = simulate(SimConfig(scenario="A", n=200, seed=100 + seed))
        _, scores = fit_pace(dataset.samples, dataset.window)
        fm = FeatureMatrix.from_parts(dataset.covariates, scores.values)
        tree = grow_tree(fm, dataset.event_times, dataset.status)
        hits += fm.kinds[tree.root.split.feature] == FPC and tree.depth >= 2
    assert hits >= 16
