"""One-step prediction with plug-in residuals.

    eps_hat_k = X_k - f_tau(k/N) X_{k-1},            k = 2..N
    X_hat_{N+1} = X_N f_tau(1) + mean(eps_hat_2..eps_hat_N)
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, GridMismatchError
from .estimator import CurveEstimate
from .process import Path

_GRID_TOL = 1e-12


@dataclass(frozen=True)
class PredictionResult:
    x_hat_next: float
    residual_mean: float
    residuals: np.ndarray
    mse_estimate: Optional[float] = None


def plugin_grid(N: int) -> np.ndarray:
    """The evaluation points ``k/N``, ``k = 2..N``, the predictor needs."""
    return np.arange(2, N + 1) / N


def _curve_values(N: int, f_hat_curve) -> np.ndarray:
    """Accept a CurveEstimate, a sequence of (x, value) pairs, or a plain
    array aligned with :func:`plugin_grid`."""
    if isinstance(f_hat_curve, CurveEstimate):
        xs, vals = f_hat_curve.x, f_hat_curve.f_hat_truncated
    else:
        arr = np.asarray(f_hat_curve, dtype=float)
        if arr.ndim == 2 and arr.shape[1] == 2:
            xs, vals = arr[:, 0], arr[:, 1]
        elif arr.ndim == 1:
            xs, vals = plugin_grid(N), arr
            if arr.size != N - 1:
                raise GridMismatchError(f"expected {N - 1} curve values, got {arr.size}")
        else:
            raise GridMismatchError("curve must be a CurveEstimate, (x, f) pairs or a value array")
    expected = plugin_grid(N)
    xs = np.asarray(xs, dtype=float)
    if xs.shape != expected.shape or np.max(np.abs(xs - expected)) > _GRID_TOL:
        raise GridMismatchError("curve must be evaluated at k/N for k = 2..N")
    return np.asarray(vals, dtype=float)


def plugin_residuals(path: Path, f_hat_curve) -> np.ndarray:
    N = path.N
    vals = _curve_values(N, f_hat_curve)
    X = np.asarray(path.x_values)
    return X[2:] - vals * X[1:-1]


def predict_next(path: Path, f_hat_curve) -> PredictionResult:
    N = path.N
    if N < 3:
        raise DomainError("prediction needs N >= 3")
    vals = _curve_values(N, f_hat_curve)
    X = np.asarray(path.x_values)
    resid = X[2:] - vals * X[1:-1]
    rbar = float(np.sum(resid) / (N - 1))
    return PredictionResult(float(X[N] * vals[-1] + rbar), rbar, resid)


def write_prediction_csv(rows, file) -> None:
    """Rows of ``(N, mse_hat, var_eps, abs_gap)``."""
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "mse_hat", "var_eps", "abs_gap"])
        for N, mse, var, gap in rows:
            w.writerow([int(N), format(mse, ".17g"), format(var, ".17g"), format(gap, ".17g")])
