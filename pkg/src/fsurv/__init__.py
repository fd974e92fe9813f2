"""Functional survival trees and forests with interpretability tools.

Subjects carry an irregularly sampled longitudinal predictor plus scalar
covariates and a right-censored survival outcome. The longitudinal part is
summarized by PACE functional principal component scores; trees and bootstrap
forests split on the mixed features by the log-rank statistic. Discrimination
curves, time-dependent Shapley values and permutation importance explain the
fitted models.
"""

__version__ = "0.1.0"
