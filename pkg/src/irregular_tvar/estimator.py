"""Quasi-MLE local-polynomial estimation of the AR coefficient curve.

At a point ``x`` with bandwidth ``h`` the estimator maximises
``sum_k p(k/N)`` over the window ``|k/N - x| <= h`` subject to
``p(k/N) <= Y_k``, where ``p(t) = sum_i b_i (t - x)**i`` has degree
``<beta>`` (largest integer below ``beta``).  The estimate is ``b_0``.  For
``beta <= 1`` this reduces to the window minimum of ``Y_k``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import lp_core
from .errors import (
    DegenerateWindowError,
    DiagnosticsUnavailableError,
    DomainError,
    EmptyWindowError,
    LPError,
    WindowTooSmallError,
)
from .lp_core import LinearProgram, LpStatus
from .process import _WINDOW_SLACK, Path, RegressionSample, hoelder_degree, modified_innovations, window_indices

# Truncation levels below log(3)**2 would clip ordinary estimates in tiny windows.
_MIN_TRUNCATION_N = 3


@dataclass(frozen=True)
class LocalFit:
    x: float
    h: float
    degree: int
    coefficients: np.ndarray
    f_hat: float
    n_local: int
    lp_status: LpStatus
    window: tuple

    def polynomial(self, t):
        t = np.asarray(t, dtype=float) - self.x
        return sum(b * t**i for i, b in enumerate(self.coefficients))


def build_local_lp(sample: RegressionSample, x: float, h: float, degree: int):
    """LP data for the fit at ``x``; returns ``(lp, window_indices)``."""
    try:
        ks, n = window_indices(sample.N, x, h)
    except EmptyWindowError as exc:
        raise WindowTooSmallError(str(exc)) from exc
    if n < degree + 1:
        raise WindowTooSmallError(f"window at x={x} holds {n} points, degree {degree} needs {degree + 1}")
    dt = sample.t[ks - 1] - x
    A = np.vander(dt, degree + 1, increasing=True)
    return LinearProgram(A.sum(axis=0), A, sample.y[ks - 1]), ks


def fit_local(sample: RegressionSample, x: float, h: float, beta: float) -> LocalFit:
    degree = hoelder_degree(beta)
    lp, ks = build_local_lp(sample, x, h, degree)
    sol = lp_core.solve_lp(lp)
    if not sol.status.solved:
        raise LPError(f"local LP at x={x} returned {sol.status}")
    return LocalFit(
        x=float(x),
        h=float(h),
        degree=degree,
        coefficients=sol.coefficients,
        f_hat=float(sol.coefficients[0]),
        n_local=len(ks),
        lp_status=sol.status,
        window=(int(ks[0]), int(ks[-1])),
    )


def optimal_bandwidth(N: int, a: float, beta: float) -> float:
    """Rate-optimal bandwidth ``N**(-1/(a*beta + 1))``."""
    if N < 2 or a <= 0 or beta <= 0:
        raise DomainError("optimal_bandwidth needs N >= 2, a > 0, beta > 0")
    return float(N) ** (-1.0 / (a * beta + 1.0))


def truncation_level(n: int) -> float:
    """``log(n)**2``, with ``n`` floored at 3 so the level stays above 1."""
    return math.log(max(int(n), _MIN_TRUNCATION_N)) ** 2


def truncate_estimate(f_hat: float, tau: float) -> float:
    """Keep ``f_hat`` when ``|f_hat| <= tau``, otherwise return ``tau``."""
    if not tau > 0:
        raise DomainError(f"truncation level must be positive, got {tau!r}")
    return f_hat if abs(f_hat) <= tau else tau


def truncate_array(f_hat, n_local) -> np.ndarray:
    """:func:`truncate_estimate` applied elementwise with ``tau = truncation_level(n)``."""
    f_hat = np.asarray(f_hat, dtype=float)
    n_local = np.asarray(n_local)
    tau = np.empty(f_hat.shape)
    for n in np.unique(n_local):
        tau[n_local == n] = truncation_level(int(n))
    return np.where(np.abs(f_hat) <= tau, f_hat, tau)


def _window_bounds_array(N: int, grid: np.ndarray, h: float):
    """Vectorised :func:`window_bounds`; same floating-point operations."""
    if not h > 0:
        raise DomainError(f"bandwidth must be positive, got {h!r}")
    lo = np.maximum(1, np.ceil(N * (grid - h) - _WINDOW_SLACK)).astype(int)
    hi = np.minimum(N, np.floor(N * (grid + h) + _WINDOW_SLACK)).astype(int)
    return lo, hi


def _range_min(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Exact minima of ``values[lo:hi+1]`` for each pair, via a sparse table."""
    lengths = hi - lo + 1
    kmax = int(lengths.max()).bit_length() - 1
    levels = [values]
    for j in range(1, kmax + 1):
        half = 1 << (j - 1)
        prev = levels[-1]
        levels.append(np.minimum(prev[:-half], prev[half:]))
    out = np.empty(lo.shape)
    ks = np.array([int(v).bit_length() - 1 for v in lengths])
    for k in np.unique(ks):
        sel = ks == k
        tab = levels[k]
        out[sel] = np.minimum(tab[lo[sel]], tab[hi[sel] - (1 << k) + 1])
    return out


@dataclass(frozen=True)
class CurveEstimate:
    x: np.ndarray
    h: float
    degree: int
    n_local: np.ndarray
    f_hat: np.ndarray
    f_hat_truncated: np.ndarray
    lp_status: tuple

    def to_csv(self, file) -> None:
        with open(file, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "h", "n_local", "f_hat", "f_hat_truncated", "lp_status"])
            for i in range(len(self.x)):
                w.writerow(
                    [
                        format(self.x[i], ".17g"),
                        format(self.h, ".17g"),
                        int(self.n_local[i]),
                        format(self.f_hat[i], ".17g"),
                        format(self.f_hat_truncated[i], ".17g"),
                        str(self.lp_status[i]),
                    ]
                )

    def pairs(self):
        return list(zip(self.x.tolist(), self.f_hat_truncated.tolist()))


def estimate_curve(
    sample: RegressionSample,
    grid: Sequence[float],
    a: float,
    beta: float,
    h_override: Optional[float] = None,
) -> CurveEstimate:
    """Truncated estimates on ``grid`` with ``h = h_override or h*``.

    Degree-0 fits are evaluated as exact window minima through a sparse
    table; this is the same number the degree-0 LP returns.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid > 1):
        raise DomainError("grid points must lie in [0, 1]")
    h = optimal_bandwidth(sample.N, a, beta) if h_override is None else float(h_override)
    degree = hoelder_degree(beta)
    if degree == 0:
        lo, hi = _window_bounds_array(sample.N, grid, h)
        if np.any(lo > hi):
            bad = grid[np.argmax(lo > hi)]
            raise WindowTooSmallError(f"no design point within {h} of x={bad}")
        f_hat = _range_min(np.asarray(sample.y), lo - 1, hi - 1)
        n_local = hi - lo + 1
        status = (LpStatus.OPTIMAL,) * len(grid)
    else:
        fits = [fit_local(sample, xi, h, beta) for xi in grid]
        f_hat = np.array([ft.f_hat for ft in fits])
        n_local = np.array([ft.n_local for ft in fits])
        status = tuple(ft.lp_status for ft in fits)
    trunc = truncate_array(f_hat, n_local)
    return CurveEstimate(grid, h, degree, np.asarray(n_local), np.asarray(f_hat, dtype=float), trunc, status)


def regularized_baseline(path: Path, x: float, h: float) -> float:
    """Least-squares AR slope after subtracting the window mean.

    Regresses ``X_k - m`` on ``X_{k-1} - m`` over the window, ``m`` being the
    window mean of ``X_k``.  This is the regular-case comparison estimator.
    """
    ks, _ = window_indices(path.N, x, h)
    X = np.asarray(path.x_values)
    m = X[ks].mean()
    cur, prev = X[ks] - m, X[ks - 1] - m
    denom = float(prev @ prev)
    if denom <= 1e-24 * max(1.0, float(X[ks] @ X[ks])):
        raise DegenerateWindowError(f"regressor has zero variance in the window at x={x}")
    return float(cur @ prev) / denom


@dataclass(frozen=True)
class BinMinima:
    """Minima ``Z_j`` of the modified errors over the sub-bins of a window.

    Only bins ``x + h*I_j`` contained in ``[0, 1]`` and holding at least one
    design point are kept; ``bin_index`` records which ``j`` they are.
    """

    J: int
    z_values: np.ndarray
    bins: tuple
    bin_index: tuple
    counts: tuple

    @property
    def max_z(self) -> float:
        return float(np.max(self.z_values)) if len(self.z_values) else math.nan


def bin_intervals(J: int):
    return [(-1.0 + (j - 1) / J, -1.0 + j / J) for j in range(1, 2 * J + 1)]


def bin_minima(path: Path, x: float, h: float, J: int) -> BinMinima:
    if path.innovations is None:
        raise DiagnosticsUnavailableError("bin minima need the true innovations")
    if J < 1:
        raise DomainError("J must be a positive integer")
    eps_mod = modified_innovations(path)
    N = path.N
    zs, bins, idx, counts = [], [], [], []
    for j, (a, b) in enumerate(bin_intervals(J), start=1):
        lo_t, hi_t = x + h * a, x + h * b
        if lo_t < -1e-12 or hi_t > 1 + 1e-12:
            continue
        lo = max(1, math.ceil(N * lo_t - 1e-9))
        hi = min(N, math.floor(N * hi_t + 1e-9))
        if lo > hi:
            continue
        zs.append(float(eps_mod[lo - 1 : hi].min()))
        bins.append((lo_t, hi_t))
        idx.append(j)
        counts.append(hi - lo + 1)
    return BinMinima(J, np.array(zs), tuple(bins), tuple(idx), tuple(counts))


def default_bin_count(beta: float) -> int:
    return hoelder_degree(beta) + 1
