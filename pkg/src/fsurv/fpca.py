"""PACE decomposition of irregularly sampled longitudinal data.

Mean and covariance are estimated with local linear smoothers (Epanechnikov
kernel) on an equispaced grid, the covariance surface is eigendecomposed
under trapezoidal quadrature, and subject scores are the Gaussian
conditional expectations given each subject's observations.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import LinAlgError, cho_factor, cho_solve

#: Bandwidths at or above this multiple of the window length use uniform weights.
GLOBAL_BANDWIDTH_FACTOR = 10.0


@dataclass(frozen=True)
class MeanFunction:
    grid: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        return np.interp(t, self.grid, self.values)


@dataclass(frozen=True)
class FunctionalBasis:
    """Mean, leading eigenpairs and measurement-error variance on a grid."""

    grid: np.ndarray
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # shape (p, G)
    noise_variance: float
    mean: MeanFunction

    @property
    def p(self) -> int:
        return int(self.eigenvalues.size)

    def covariance(self) -> np.ndarray:
        """Covariance surface implied by the retained components."""
        return (self.eigenfunctions.T * self.eigenvalues) @ self.eigenfunctions

    def to_json(self) -> dict:
        return {
            "grid": self.grid.tolist(),
            "mean": self.mean.values.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "eigenfunctions": self.eigenfunctions.tolist(),
            "sigma2": self.noise_variance,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "FunctionalBasis":
        grid = np.asarray(payload["grid"], dtype=float)
        phi = np.asarray(payload["eigenfunctions"], dtype=float).reshape(-1, grid.size)
        return cls(
            grid=grid,
            eigenvalues=np.asarray(payload["eigenvalues"], dtype=float),
            eigenfunctions=phi,
            noise_variance=float(payload["sigma2"]),
            mean=MeanFunction(grid, np.asarray(payload["mean"], dtype=float)),
        )


@dataclass(frozen=True)
class ScoreMatrix:
    ids: list[str]
    values: np.ndarray  # shape (N, p)

    def to_csv(self, path) -> None:
        p = self.values.shape[1]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id"] + [f"pc{m + 1}" for m in range(p)])
            for sid, row in zip(self.ids, self.values.tolist()):
                w.writerow([sid] + [repr(v) for v in row])

    @classmethod
    def from_csv(cls, path) -> "ScoreMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[0] != "id":
                raise ValueError("scores CSV must start with an id column")
            ids, rows = [], []
            for row in reader:
                if row:
                    ids.append(row[0])
                    rows.append([float(c) for c in row[1:]])
        return cls(ids, np.array(rows, dtype=float).reshape(len(ids), len(header) - 1))


@dataclass
class FPCAConfig:
    n_grid: int = 101
    p: int = 14
    fve: float | None = None
    bw_mean: float | None = None
    bw_cov: float | None = None
    mean_fraction: float = 0.10
    cov_fraction: float = 0.15

    def validate(self) -> None:
        if self.n_grid < 50:
            raise ValueError("n_grid must be at least 50")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.fve is not None and not 0 < self.fve <= 1:
            raise ValueError("fve must be in (0, 1]")
        for name in ("bw_mean", "bw_cov"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be positive")


def make_grid(window, n_grid: int = 101) -> np.ndarray:
    a, b = float(window[0]), float(window[1])
    return np.linspace(a, b, n_grid)


def _epanechnikov(u: np.ndarray) -> np.ndarray:
    return np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)


def _pooled(samples) -> tuple[np.ndarray, np.ndarray]:
    t = np.concatenate([s.times for s in samples])
    y = np.concatenate([s.values for s in samples])
    return t, y


def _bin_1d(x: np.ndarray, y: np.ndarray):
    ux, inv, counts = np.unique(x, return_inverse=True, return_counts=True)
    sums = np.bincount(inv, weights=y, minlength=ux.size)
    return ux, sums / counts, counts.astype(float)


def _kernel_1d(x, grid, h, span):
    if h >= GLOBAL_BANDWIDTH_FACTOR * span:
        return np.ones((grid.size, x.size))
    return _epanechnikov((x[None, :] - grid[:, None]) / h)


def local_linear_1d(x, y, grid, bandwidth: float, span: float, weights=None) -> np.ndarray:
    """Local linear smoother of ``(x, y)`` evaluated on ``grid``.

    Grid points whose kernel window holds fewer than two distinct ``x``
    values get their bandwidth widened (with a warning) until the local fit
    is identifiable.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    wts = np.ones_like(x) if weights is None else np.asarray(weights, float)
    out = np.empty(grid.size)
    widened = 0
    todo = np.arange(grid.size)
    h = float(bandwidth)
    while todo.size:
        g = grid[todo]
        K = _kernel_1d(x, g, h, span) * wts[None, :]
        dx = x[None, :] - g[:, None]
        s0 = K.sum(1)
        s1 = (K * dx).sum(1)
        s2 = (K * dx * dx).sum(1)
        t0 = K @ y
        t1 = (K * dx) @ y
        det = s0 * s2 - s1 * s1
        support = (K > 0).sum(1)
        ok = (support >= 2) & (det > 1e-12 * np.maximum(s0 * s2, 1e-300))
        out[todo[ok]] = (s2[ok] * t0[ok] - s1[ok] * t1[ok]) / det[ok]
        todo = todo[~ok]
        if todo.size:
            widened += todo.size
            h *= 1.25
    if widened:
        warnings.warn(f"local linear smoother: bandwidth widened at {widened} grid evaluations", stacklevel=2)
    return out


def estimate_mean(samples, bandwidth: float, grid: np.ndarray) -> MeanFunction:
    """Local linear estimate of the mean function from pooled observations."""
    t, y = _pooled(samples)
    if t.size < 10:
        raise ValueError("at least 10 pooled observations are required")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    span = float(grid[-1] - grid[0])
    ux, ybar, counts = _bin_1d(t, y)
    return MeanFunction(grid, local_linear_1d(ux, ybar, grid, bandwidth, span, counts))


def _raw_covariances(samples, mean: MeanFunction):
    s_list, t_list, c_list, diag_t, diag_c = [], [], [], [], []
    for smp in samples:
        r = smp.values - mean(smp.times)
        J = r.size
        diag_t.append(smp.times)
        diag_c.append(r * r)
        if J < 2:
            continue
        jj, ll = np.meshgrid(np.arange(J), np.arange(J), indexing="ij")
        off = jj != ll
        s_list.append(smp.times[jj[off]])
        t_list.append(smp.times[ll[off]])
        c_list.append((r[:, None] * r[None, :])[off])
    if not s_list:
        raise ValueError("no subject has two or more observations; covariance is not estimable")
    return (
        np.concatenate(s_list),
        np.concatenate(t_list),
        np.concatenate(c_list),
        np.concatenate(diag_t),
        np.concatenate(diag_c),
    )


def local_linear_2d(s, t, y, weights, grid, bandwidth: float, span: float) -> np.ndarray:
    """Local linear surface smoother with a product Epanechnikov kernel."""
    G = grid.size
    out = np.empty((G, G))
    todo = np.ones((G, G), dtype=bool)
    h = float(bandwidth)
    widened = 0
    while todo.any():
        Ks = _kernel_1d(s, grid, h, span) * weights[None, :]
        Kt = _kernel_1d(t, grid, h, span)
        Ds = s[None, :] - grid[:, None]
        Dt = t[None, :] - grid[:, None]
        KsD, KtD = Ks * Ds, Kt * Dt
        m00 = Ks @ Kt.T
        m10 = KsD @ Kt.T
        m01 = Ks @ KtD.T
        m20 = (KsD * Ds) @ Kt.T
        m02 = Ks @ (KtD * Dt).T
        m11 = KsD @ KtD.T
        r0 = (Ks * y) @ Kt.T
        r1 = (KsD * y) @ Kt.T
        r2 = (Ks * y) @ KtD.T
        A = np.stack(
            [np.stack([m00, m10, m01], -1), np.stack([m10, m20, m11], -1), np.stack([m01, m11, m02], -1)], -2
        )
        rhs = np.stack([r0, r1, r2], -1)
        det = np.linalg.det(A)
        scale = m00 * m20 * m02
        ok = todo & (det > 1e-10 * np.maximum(scale, 1e-300))
        idx = np.nonzero(ok)
        if idx[0].size:
            sol = np.linalg.solve(A[idx], rhs[idx][..., None])[..., 0]
            out[idx] = sol[:, 0]
        todo &= ~ok
        if todo.any():
            widened += int(todo.sum())
            h *= 1.25
    if widened:
        warnings.warn(f"surface smoother: bandwidth widened at {widened} grid evaluations", stacklevel=2)
    return out


def estimate_covariance(samples, mean: MeanFunction, bandwidth: float) -> tuple[np.ndarray, float]:
    """Smoothed covariance surface on ``mean.grid`` and noise variance.

    Off-diagonal raw products feed the surface; the raw diagonal products
    are smoothed separately and the noise variance is the grid average of
    their excess over the surface diagonal, floored at zero.
    """
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    grid = mean.grid
    span = float(grid[-1] - grid[0])
    s, t, c, dt, dc = _raw_covariances(samples, mean)
    pairs = np.stack([s, t], axis=1)
    upairs, inv, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
    inv = inv.reshape(-1)
    cbar = np.bincount(inv, weights=c, minlength=counts.size) / counts
    C = local_linear_2d(upairs[:, 0], upairs[:, 1], cbar, counts.astype(float), grid, bandwidth, span)
    C = (C + C.T) / 2.0
    ux, vbar, vcounts = _bin_1d(dt, dc)
    V = local_linear_1d(ux, vbar, grid, bandwidth, span, vcounts)
    sigma2 = max(float(np.mean(V - np.diag(C))), 0.0)
    return C, sigma2


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    h = np.diff(grid)
    w = np.zeros(grid.size)
    w[:-1] += h / 2.0
    w[1:] += h / 2.0
    return w


def _orient(phi: np.ndarray, grid: np.ndarray) -> np.ndarray:
    integral = trapezoid(phi, grid)
    if abs(integral) <= 1e-12:
        nz = np.flatnonzero(np.abs(phi) > 1e-12)
        return -phi if nz.size and phi[nz[0]] < 0 else phi
    return -phi if integral < 0 else phi


def eigendecompose(
    cov: np.ndarray,
    grid: np.ndarray,
    p: int = 14,
    *,
    mean: MeanFunction | None = None,
    noise_variance: float = 0.0,
    fve: float | None = None,
) -> FunctionalBasis:
    """Leading eigenpairs of the covariance operator under trapezoid quadrature.

    Eigenfunctions have unit quadrature norm and a non-negative integral.
    Components stop before the first non-positive eigenvalue; if fewer than
    ``p`` remain a warning is issued. With ``fve`` set, the smallest number
    of components reaching that fraction of positive variance is kept
    (still capped at ``p``).
    """
    cov = np.asarray(cov, dtype=float)
    G = grid.size
    if cov.shape != (G, G):
        raise ValueError("covariance must be G x G on the grid")
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
        raise ValueError("covariance must be symmetric")
    if not 1 <= p <= G:
        raise ValueError("p must satisfy 1 <= p <= G")
    w = trapezoid_weights(grid)
    sw = np.sqrt(w)
    M = sw[:, None] * cov * sw[None, :]
    vals, vecs = np.linalg.eigh((M + M.T) / 2.0)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    tol = 1e-12 * max(vals[0], 0.0)
    nonpos = np.flatnonzero(vals <= tol)
    n_pos = int(nonpos[0]) if nonpos.size else G
    if n_pos == 0:
        raise ValueError("covariance has no positive eigenvalues")
    keep = min(p, n_pos)
    if fve is not None:
        ratio = np.cumsum(vals[:n_pos]) / np.sum(vals[:n_pos])
        keep = min(keep, int(np.searchsorted(ratio, fve - 1e-12) + 1))
    elif keep < p:
        warnings.warn(f"only {n_pos} positive eigenvalues; keeping {keep} of {p} requested components", stacklevel=2)
    phi = (vecs[:, :keep] / sw[:, None]).T
    phi = np.array([_orient(f, grid) for f in phi])
    if mean is None:
        mean = MeanFunction(grid, np.zeros(G))
    return FunctionalBasis(grid, vals[:keep].copy(), phi, float(noise_variance), mean)


def _interp_rows(rows: np.ndarray, grid: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.array([np.interp(t, grid, r) for r in rows])


def subject_score(sample, basis: FunctionalBasis) -> np.ndarray:
    """Conditional-expectation scores of one subject."""
    t = sample.times
    if t[0] < basis.grid[0] - 1e-12 or t[-1] > basis.grid[-1] + 1e-12:
        raise ValueError(f"subject {sample.subject_id}: observation times outside the basis grid")
    phi = _interp_rows(basis.eigenfunctions, basis.grid, t)  # p x J
    resid = sample.values - basis.mean(t)
    J = t.size
    sigma = (phi.T * basis.eigenvalues) @ phi + basis.noise_variance * np.eye(J)
    try:
        factor = cho_factor(sigma)
        singular = np.linalg.cond(sigma) > 1e12
    except LinAlgError:
        singular = True
    if singular:
        jitter = 1e-10 * np.trace(sigma) / J
        try:
            factor = cho_factor(sigma + jitter * np.eye(J))
        except LinAlgError:
            raise ValueError(f"subject {sample.subject_id}: singular covariance even after jitter") from None
    return basis.eigenvalues * (phi @ cho_solve(factor, resid))


def pace_scores(samples: Sequence, basis: FunctionalBasis) -> ScoreMatrix:
    """Score matrix with one row per sample, in input order."""
    values = np.array([subject_score(s, basis) for s in samples]).reshape(len(samples), basis.p)
    return ScoreMatrix([s.subject_id for s in samples], values)


def reconstruct(scores, basis: FunctionalBasis) -> np.ndarray:
    """Predicted trajectory on the basis grid for a score vector (or matrix)."""
    scores = np.asarray(scores, dtype=float)
    if scores.shape[-1] != basis.p:
        raise ValueError(f"expected {basis.p} scores, got {scores.shape[-1]}")
    return basis.mean.values + scores @ basis.eigenfunctions


def fit_pace(samples, window, config: FPCAConfig | None = None) -> tuple[FunctionalBasis, ScoreMatrix]:
    """Estimate the basis from ``samples`` and score every subject."""
    config = config or FPCAConfig()
    config.validate()
    grid = make_grid(window, config.n_grid)
    span = float(grid[-1] - grid[0])
    bw_mean = config.bw_mean or config.mean_fraction * span
    bw_cov = config.bw_cov or config.cov_fraction * span
    mean = estimate_mean(samples, bw_mean, grid)
    cov, sigma2 = estimate_covariance(samples, mean, bw_cov)
    basis = eigendecompose(cov, grid, config.p, mean=mean, noise_variance=sigma2, fve=config.fve)
    return basis, pace_scores(samples, basis)


def save_basis(basis: FunctionalBasis, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(basis.to_json(), fh)
        fh.write("\n")


def load_basis(path) -> FunctionalBasis:
    with open(path, encoding="utf-8") as fh:
        return FunctionalBasis.from_json(json.load(fh))
