import numpy as np
import pytest

from fsurv.forest import ForestConfig, grow_forest
from fsurv.fpca import fit_pace
from fsurv.sim import SimConfig, simulate
from fsurv.tree import FeatureMatrix, TreeConfig, grow_tree


@pytest.fixture(scope="session")
def scenario_a():
    dataset, truth = simulate(SimConfig(scenario="A", n=200, seed=1))
    return dataset, truth


@pytest.fixture(scope="session")
def fpca_a(scenario_a):
    dataset, _ = scenario_a
    basis, scores = fit_pace(dataset.samples, dataset.window)
    return basis, scores


@pytest.fixture(scope="session")
def features_a(scenario_a, fpca_a):
    dataset, _ = scenario_a
    _, scores = fpca_a
    return FeatureMatrix.from_parts(dataset.covariates, scores.values)


@pytest.fixture(scope="session")
def tree_a(scenario_a, features_a):
    dataset, _ = scenario_a
    return grow_tree(features_a, dataset.event_times, dataset.status, TreeConfig(), np.random.default_rng(0))


@pytest.fixture(scope="session")
def forest_a(scenario_a, features_a):
    dataset, _ = scenario_a
    config = ForestConfig(n_trees=100)
    return grow_forest(features_a, dataset.event_times, dataset.status, config, seed=3, ids=dataset.ids)


# filled by test_acceptance.py, one "criterion N: PASS/FAIL ..." line per check
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
