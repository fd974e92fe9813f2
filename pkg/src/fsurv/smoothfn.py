"""Penalized cubic smoothing of discrete time-indexed series.

The fit minimizes ``sum (y_m - f(t_m))**2 + lam * integral f''(t)**2`` over
natural cubic splines with knots at the data times (Reinsch form), solved
through a pentadiagonal symmetric system. Fitted curves are stored as
piecewise cubics so they can be integrated exactly.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PPoly
from scipy.linalg import solveh_banded

#: Candidate penalties scanned by :func:`select_lambda`.
LAMBDA_GRID = np.logspace(-6, 4, 25)


@dataclass(frozen=True)
class SmoothCurve:
    """Fitted smooth curve on ``[domain[0], domain[1]]``."""

    knots: np.ndarray
    coefficients: np.ndarray
    lam: float
    domain: tuple[float, float]

    @property
    def _ppoly(self) -> PPoly:
        return PPoly(self.coefficients, self.knots, extrapolate=False)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        lo, hi = self.domain
        # endpoints are part of the domain; PPoly treats the last breakpoint as inside
        clipped = np.clip(t_arr, lo, hi)
        if np.any(np.abs(clipped - t_arr) > 0):
            raise ValueError("evaluation outside the curve domain")
        out = self._ppoly(clipped)
        return float(out) if np.ndim(out) == 0 else out

    def sample(self, n: int = 200) -> tuple[np.ndarray, np.ndarray]:
        t = np.linspace(self.domain[0], self.domain[1], n)
        return t, self(t)


def _check_points(t, y) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.ndim != 1 or t.shape != y.shape:
        raise ValueError("t and y must be 1-d arrays of equal length")
    if t.size == 0:
        raise ValueError("no points to fit")
    order = np.argsort(t, kind="stable")
    t, y = t[order], y[order]
    if np.any(np.diff(t) == 0):
        raise ValueError("duplicate times are not allowed")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite points")
    return t, y


def _reinsch_matrices(t: np.ndarray):
    """Banded forms of ``R`` and ``Q^T Q`` for knots ``t`` (n >= 3)."""
    h = np.diff(t)
    n = t.size
    # Q is n x (n-2); column k has entries at rows k, k+1, k+2
    q0 = 1.0 / h[:-1]
    q2 = 1.0 / h[1:]
    q1 = -q0 - q2
    m = n - 2
    # R: tridiagonal, diag (h_k + h_{k+1}) / 3, off-diag h_{k+1} / 6
    r_diag = (h[:-1] + h[1:]) / 3.0
    r_off = h[1:-1] / 6.0
    # Q^T Q is pentadiagonal
    qtq0 = q0**2 + q1**2 + q2**2
    # columns k and k+1 overlap on rows k+1, k+2
    qtq1 = q1[:-1] * q0[1:] + q2[:-1] * q1[1:]
    # col k and col k+2 overlap on row k+2
    qtq2 = q2[:-2] * q0[2:]
    return (q0, q1, q2), (r_diag, r_off), (qtq0, qtq1, qtq2), m


def _banded_system(R, QtQ, lam: float, m: int) -> np.ndarray:
    ab = np.zeros((3, m))
    ab[2] = R[0] + lam * QtQ[0]
    ab[1, 1:] = R[1] + lam * QtQ[1]
    ab[0, 2:] = lam * QtQ[2]
    return ab


def _q_apply(Q, gamma: np.ndarray, n: int) -> np.ndarray:
    q0, q1, q2 = Q
    out = np.zeros(n)
    out[:-2] += q0 * gamma
    out[1:-1] += q1 * gamma
    out[2:] += q2 * gamma
    return out


def _qt_apply(Q, y: np.ndarray) -> np.ndarray:
    q0, q1, q2 = Q
    return q0 * y[:-2] + q1 * y[1:-1] + q2 * y[2:]


def _natural_cubic_pp(t: np.ndarray, f: np.ndarray, gamma_full: np.ndarray) -> np.ndarray:
    """Local power-basis coefficients from knot values and second derivatives."""
    h = np.diff(t)
    c2 = gamma_full[:-1] / 2.0
    c3 = (gamma_full[1:] - gamma_full[:-1]) / (6.0 * h)
    c1 = np.diff(f) / h - h * (2.0 * gamma_full[:-1] + gamma_full[1:]) / 6.0
    c0 = f[:-1]
    return np.vstack([c3, c2, c1, c0])


def _solve(t: np.ndarray, y: np.ndarray, lam: float):
    Q, R, QtQ, m = _reinsch_matrices(t)
    ab = _banded_system(R, QtQ, lam, m)
    gamma = solveh_banded(ab, _qt_apply(Q, y))
    f = y - lam * _q_apply(Q, gamma, t.size)
    return f, gamma


def fit_penalized(t, y, lam: float) -> SmoothCurve:
    """Cubic smoothing spline through ``(t, y)`` with penalty weight ``lam``.

    With fewer than four points the exact interpolating polynomial is
    returned instead, with a warning.
    """
    t, y = _check_points(t, y)
    if lam < 0:
        raise ValueError("lam must be non-negative")
    domain = (float(t[0]), float(t[-1]))
    if t.size < 4:
        warnings.warn("fewer than 4 points: using exact polynomial interpolation", stacklevel=2)
        if t.size == 1:
            return SmoothCurve(np.array([t[0], t[0] + 1.0]), np.array([[y[0]]]), float(lam), domain)
        poly = np.polynomial.polynomial.Polynomial.fit(t - t[0], y, t.size - 1, domain=[0, 1], window=[0, 1])
        coefs = poly.convert().coef[::-1][:, None]
        return SmoothCurve(np.array([t[0], t[-1]]), coefs, float(lam), domain)
    f, gamma = _solve(t, y, float(lam))
    gamma_full = np.concatenate(([0.0], gamma, [0.0]))
    return SmoothCurve(t.copy(), _natural_cubic_pp(t, f, gamma_full), float(lam), domain)


def _hat_trace(t: np.ndarray, lam: float) -> float:
    """Trace of the smoother matrix ``A = I - lam Q (R + lam Q^T Q)^-1 Q^T``."""
    Q, R, QtQ, m = _reinsch_matrices(t)
    ab = _banded_system(R, QtQ, lam, m)
    # tr(lam Q M^-1 Q^T) = lam tr(M^-1 Q^T Q)
    qtq = np.zeros((m, m))
    qtq[np.arange(m), np.arange(m)] = QtQ[0]
    qtq[np.arange(m - 1), np.arange(1, m)] = QtQ[1]
    qtq[np.arange(1, m), np.arange(m - 1)] = QtQ[1]
    qtq[np.arange(m - 2), np.arange(2, m)] = QtQ[2]
    qtq[np.arange(2, m), np.arange(m - 2)] = QtQ[2]
    return t.size - lam * float(np.trace(solveh_banded(ab, qtq)))


def gcv_score(t, y, lam: float) -> float:
    t, y = _check_points(t, y)
    f, _ = _solve(t, y, lam)
    n = t.size
    rss = float(np.sum((y - f) ** 2))
    denom = (1.0 - _hat_trace(t, lam) / n) ** 2
    return np.inf if denom <= 0 else (rss / n) / denom


def select_lambda(t, y) -> float:
    """GCV choice of the penalty over :data:`LAMBDA_GRID` (ties to smaller)."""
    t, y = _check_points(t, y)
    if t.size < 6:
        raise ValueError("select_lambda needs at least 6 points")
    scores = np.array([gcv_score(t, y, lam) for lam in LAMBDA_GRID])
    return float(LAMBDA_GRID[int(np.argmin(scores))])


def integrate(curve: SmoothCurve, a: float, b: float) -> float:
    """Exact integral of the fitted piecewise cubic over ``[a, b]``."""
    lo, hi = curve.domain
    if not a < b:
        raise ValueError("integration bounds must satisfy a < b")
    if a < lo or b > hi:
        raise ValueError(f"[{a}, {b}] is outside the curve domain [{lo}, {hi}]")
    return float(curve._ppoly.integrate(a, b))


def trapezoid_aggregate(t, y, a: float, b: float) -> float:
    """Trapezoid rule over the raw points restricted to ``[a, b]``.

    Endpoints falling between sample times are linearly interpolated.
    """
    t, y = _check_points(t, y)
    if not a < b:
        raise ValueError("integration bounds must satisfy a < b")
    if a < t[0] or b > t[-1]:
        raise ValueError(f"[{a}, {b}] is outside the point range [{t[0]}, {t[-1]}]")
    inner = (t > a) & (t < b)
    tt = np.concatenate(([a], t[inner], [b]))
    yy = np.concatenate(([np.interp(a, t, y)], y[inner], [np.interp(b, t, y)]))
    return float(np.sum(np.diff(tt) * (yy[1:] + yy[:-1]) / 2.0))


def write_curve_csv(curve: SmoothCurve, path, n: int = 200) -> None:
    """Sample ``curve`` on ``n`` equispaced points and write ``t,value`` rows."""
    t, y = curve.sample(n)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value"])
        for a, b in zip(t.tolist(), np.atleast_1d(y).tolist()):
            w.writerow([repr(a), repr(b)])
