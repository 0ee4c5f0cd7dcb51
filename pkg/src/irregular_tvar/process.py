"""Simulation of the time-varying AR(1) process with one-sided innovations.

The model is ``X_k = f(k/N) X_{k-1} + eps_k`` for ``k = 1..N``.  ``f`` is
extended to the real line by ``f(u) = f(0)`` for ``u < 0`` and ``f(u) = f(1)``
for ``u > 1``.  ``X_0`` comes from a burn-in run with the frozen coefficient
``f(0)``, started at ``X_{-B} = eps_{-B}`` where ``B`` is the smallest
integer with ``rho**B < 1e-14``.

Random draws for one path are taken in a single call of
:func:`irregular_tvar.distributions.sample` of size ``B + 1 + N`` from
``numpy.random.default_rng(seed)``: first ``eps_{-B}..eps_0``, then
``eps_1..eps_N``.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import distributions as dists
from .distributions import InnovationDist
from .errors import (
    DegeneratePathError,
    DiagnosticsUnavailableError,
    DomainError,
    EmptyWindowError,
)

BURN_IN_TARGET = 1e-14

# Window membership slack, in units of the design spacing 1/N.
_WINDOW_SLACK = 1e-9


def hoelder_degree(beta: float) -> int:
    """Largest integer strictly below ``beta``."""
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    return int(math.ceil(beta)) - 1


@dataclass(frozen=True)
class CoefficientFunction:
    """A coefficient curve ``f: [0, 1] -> [0, rho]`` with Hoelder metadata.

    Calling the object evaluates ``f`` with the constant extension outside
    ``[0, 1]``; ``evaluator`` only ever sees arguments in ``[0, 1]``.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    hoelder_L: float
    hoelder_beta: float
    rho: float
    label: str

    def __post_init__(self):
        if not (0.0 <= self.rho < 1.0):
            raise DomainError(f"rho must lie in [0, 1), got {self.rho!r}")
        grid = self(np.linspace(0.0, 1.0, 10_001))
        if np.any(grid < 0) or np.any(grid > self.rho + 1e-12):
            raise DomainError(f"{self.label}: values leave [0, rho={self.rho}]")

    def __call__(self, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        out = np.broadcast_to(np.asarray(self.evaluator(u), dtype=float), u.shape)
        return out[()] if out.ndim == 0 else np.array(out)


def constant(c: float, beta: float = 1.0) -> CoefficientFunction:
    c = float(c)
    return CoefficientFunction(lambda u: np.full_like(u, c), 0.0, float(beta), c, f"const({c!r})")


def affine(a: float, b: float, beta: float = 1.0) -> CoefficientFunction:
    """``f(u) = a + b*u``; Lipschitz constant ``|b|``, derivative constant."""
    a, b = float(a), float(b)
    L = abs(b) if hoelder_degree(beta) == 0 else 0.0
    return CoefficientFunction(lambda u: a + b * u, L, float(beta), max(a, a + b), f"affine({a!r},{b!r})")


def sine(c0: float, c1: float, beta: float = 2.0) -> CoefficientFunction:
    """``f(u) = c0 + c1*sin(2*pi*u)``.

    The ``m = <beta>``-th derivative has Lipschitz constant
    ``(2*pi)**(m+1) * |c1|``, which bounds its Hoelder constant on ``[0, 1]``
    for every exponent in ``(0, 1]``.
    """
    c0, c1 = float(c0), float(c1)
    L = (2 * math.pi) ** (hoelder_degree(beta) + 1) * abs(c1)
    return CoefficientFunction(
        lambda u: c0 + c1 * np.sin(2 * np.pi * u), L, float(beta), c0 + abs(c1), f"sine({c0!r},{c1!r})"
    )


def ramp(c0: float, c1: float, t0: float, t1: float, beta: float = 1.0) -> CoefficientFunction:
    """Piecewise-linear: ``c0`` up to ``t0``, linear to ``c1`` at ``t1``, then flat."""
    c0, c1, t0, t1 = map(float, (c0, c1, t0, t1))
    if not (0.0 <= t0 < t1 <= 1.0):
        raise DomainError("ramp needs 0 <= t0 < t1 <= 1")
    if beta > 1.0:
        raise DomainError("a ramp is only Lipschitz; beta must be <= 1")
    slope = (c1 - c0) / (t1 - t0)
    return CoefficientFunction(
        lambda u: c0 + slope * (np.clip(u, t0, t1) - t0),
        abs(slope),
        float(beta),
        max(c0, c1),
        f"ramp({c0!r},{c1!r},{t0!r},{t1!r})",
    )


def step(level: float, cut: float) -> CoefficientFunction:
    """``level * 1{u <= cut}``; deliberately not Hoelder (``hoelder_L = inf``)."""
    level, cut = float(level), float(cut)
    return CoefficientFunction(
        lambda u: np.where(u <= cut, level, 0.0), math.inf, 1.0, level, f"step({level!r},{cut!r})"
    )


_FUNC_RE = re.compile(r"^\s*([a-z]+)\s*\(([^()]*)\)\s*$")
_FUNC_ARITY = {"const": (1, constant), "affine": (2, affine), "sine": (2, sine), "ramp": (4, ramp)}


def parse_coefficient(text: str, beta: Optional[float] = None) -> CoefficientFunction:
    """Parse ``const(c)``, ``affine(a,b)``, ``sine(c0,c1)`` or ``ramp(c0,c1,t0,t1)``."""
    m = _FUNC_RE.match(text.lower())
    if not m or m.group(1) not in _FUNC_ARITY:
        raise DomainError(f"cannot parse coefficient function {text!r}")
    arity, build = _FUNC_ARITY[m.group(1)]
    try:
        args = [float(s) for s in m.group(2).split(",")]
    except ValueError as exc:
        raise DomainError(f"non-numeric argument in {text!r}") from exc
    if len(args) != arity:
        raise DomainError(f"{m.group(1)} takes {arity} arguments, got {len(args)}")
    kwargs = {} if beta is None else {"beta": float(beta)}
    return build(*args, **kwargs)


def burn_in_length(rho: float) -> int:
    if rho <= 0.0:
        return 1
    return max(1, math.ceil(math.log(BURN_IN_TARGET) / math.log(rho)))


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Path:
    """One trajectory ``X_0..X_N``.

    ``innovations`` holds ``eps_1..eps_N``.  ``prehistory_innovations`` and
    ``prehistory_x`` hold ``eps_{-B}..eps_0`` and ``X_{-B}..X_0``; they are
    ``None`` for imported paths.
    """

    N: int
    x_values: np.ndarray
    innovations: Optional[np.ndarray] = None
    seed: Optional[int] = None
    f_truth: Optional[CoefficientFunction] = None
    dist: Optional[InnovationDist] = None
    prehistory_innovations: Optional[np.ndarray] = field(default=None, repr=False)
    prehistory_x: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def burn_in(self) -> int:
        return 0 if self.prehistory_x is None else len(self.prehistory_x) - 1

    def reconstruction_error(self) -> float:
        """``max_k |X_k - f(k/N) X_{k-1} - eps_k| / X_k``."""
        if self.innovations is None or self.f_truth is None:
            raise DiagnosticsUnavailableError("reconstruction needs f_truth and innovations")
        k = np.arange(1, self.N + 1)
        x = self.x_values
        resid = x[1:] - self.f_truth(k / self.N) * x[:-1] - self.innovations
        return float(np.max(np.abs(resid) / x[1:]))


def _run_recursion(coefs: np.ndarray, eps: np.ndarray, burn_in: int, f0: float) -> np.ndarray:
    """Vectorised recursion over rows of ``eps`` (shape ``reps x (B+1+T)``).

    Returns the full state ``X_{-B}..X_T`` per row.
    """
    reps, total = eps.shape
    x = np.empty((reps, total))
    x[:, 0] = eps[:, 0]
    for j in range(1, burn_in + 1):
        x[:, j] = f0 * x[:, j - 1] + eps[:, j]
    for k, fk in enumerate(coefs, start=burn_in + 1):
        x[:, k] = fk * x[:, k - 1] + eps[:, k]
    return x


def _coefficients(f: CoefficientFunction, N: int, steps: int) -> np.ndarray:
    return np.asarray(f(np.arange(1, steps + 1) / N), dtype=float).tolist()


def simulate_path(f: CoefficientFunction, dist: InnovationDist, N: int, seed: int) -> Path:
    """Simulate one path; a pure function of ``(f, dist, N, seed)``."""
    if N < 2:
        raise DomainError(f"N must be at least 2, got {N}")
    x, eps, B = simulate_from_seeds(f, dist, N, [seed])
    return Path(
        N=int(N),
        x_values=_frozen(x[0, B:]),
        innovations=_frozen(eps[0, B + 1 :]),
        seed=int(seed),
        f_truth=f,
        dist=dist,
        prehistory_innovations=_frozen(eps[0, : B + 1]),
        prehistory_x=_frozen(x[0, : B + 1]),
    )


def simulate_from_seeds(
    f: CoefficientFunction, dist: InnovationDist, N: int, seeds: Sequence[int], extra_steps: int = 0
):
    """Simulate one path per seed, row ``r`` matching ``simulate_path(seeds[r])``.

    ``extra_steps`` appends ``X_{N+1}..X_{N+extra}`` driven by ``f(1)``.
    Returns ``(x, eps, B)`` where row ``r`` of ``x`` is ``X_{-B}..X_{N+extra}``
    and of ``eps`` is ``eps_{-B}..eps_{N+extra}``.
    """
    B = burn_in_length(f.rho)
    total = B + 1 + N + extra_steps
    eps = np.empty((len(seeds), total))
    for r, s in enumerate(seeds):
        eps[r] = dists.sample(dist, np.random.default_rng(s), size=total)
    x = _run_recursion(_coefficients(f, N, N + extra_steps), eps, B, float(f(0.0)))
    return x, eps, B


def simulate_batch(
    f: CoefficientFunction, dist: InnovationDist, N: int, rng: np.random.Generator, reps: int, extra_steps: int = 0
):
    """Like :func:`simulate_from_seeds` but all rows share one generator."""
    B = burn_in_length(f.rho)
    eps = dists.sample(dist, rng, size=(reps, B + 1 + N + extra_steps))
    x = _run_recursion(_coefficients(f, N, N + extra_steps), eps, B, float(f(0.0)))
    return x, eps, B


@dataclass(frozen=True)
class RegressionSample:
    """Pairs ``(t_k, Y_k) = (k/N, X_k / X_{k-1})`` for ``k = 1..N``."""

    N: int
    t: np.ndarray
    y: np.ndarray
    f_truth: Optional[CoefficientFunction] = None


def regression_transform(path: Path) -> RegressionSample:
    x = np.asarray(path.x_values, dtype=float)
    if np.any(x[:-1] <= 0):
        raise DegeneratePathError("regression transform needs X_k > 0 for k < N")
    N = len(x) - 1
    t = np.arange(1, N + 1) / N
    return RegressionSample(N, _frozen(t), _frozen(x[1:] / x[:-1]), path.f_truth)


def window_bounds(N: int, x: float, h: float) -> tuple[int, int]:
    """Inclusive index range ``[lo, hi]`` of ``{k in 1..N : |k/N - x| <= h}``.

    ``lo > hi`` signals an empty window.
    """
    if not h > 0:
        raise DomainError(f"bandwidth must be positive, got {h!r}")
    lo = max(1, math.ceil(N * (x - h) - _WINDOW_SLACK))
    hi = min(N, math.floor(N * (x + h) + _WINDOW_SLACK))
    return lo, hi


def window_indices(N: int, x: float, h: float) -> tuple[np.ndarray, int]:
    """Design indices within ``h`` of ``x`` and their count ``n``."""
    lo, hi = window_bounds(N, x, h)
    if lo > hi:
        raise EmptyWindowError(f"no design point k/N within {h} of x={x} (N={N})")
    return np.arange(lo, hi + 1), hi - lo + 1


def modified_innovations(path: Path) -> np.ndarray:
    """``eps_k / X_{k-1}`` for ``k = 1..N``."""
    if path.innovations is None:
        raise DiagnosticsUnavailableError("path carries no innovations")
    return np.asarray(path.innovations) / np.asarray(path.x_values[:-1])


def tail_split_norm(path: Path, lag: int) -> float:
    """Average over ``k = 1..N`` of ``X_k^(2) = sum_{i>lag} f_{k,i} eps_{k-i}``.

    Uses ``X_k^(2) = (prod_{l=0}^{lag} f((k-l)/N)) * X_{k-lag-1}``, which is
    the same sum with no cancellation error.  Needs ``lag <= B`` so that
    ``X_{k-lag-1}`` is available from the retained pre-history.
    """
    lag = int(lag)
    if lag < 0:
        raise DomainError("lag must be non-negative")
    if path.f_truth is None or path.prehistory_x is None:
        raise DiagnosticsUnavailableError("tail split needs f_truth and pre-history")
    B = path.burn_in
    if lag > B:
        raise DiagnosticsUnavailableError(f"lag {lag} exceeds retained pre-history B={B}")
    N = path.N
    full_x = np.concatenate([path.prehistory_x[:-1], path.x_values])  # X_{-B}..X_N
    k = np.arange(1, N + 1)
    weights = np.ones(N)
    for l in range(lag + 1):
        weights *= path.f_truth((k - l) / N)
    return float(np.mean(weights * full_x[k - lag - 1 + B]))


# -- CSV ---------------------------------------------------------------------

def _fmt(v) -> str:
    return format(float(v), ".17g")


def write_path_csv(path: Path, file) -> None:
    """Columns ``k, t, X, eps``; ``eps`` at ``k = 0`` is ``eps_0`` when known."""
    N = path.N
    eps0 = None if path.prehistory_innovations is None else path.prehistory_innovations[-1]
    rows = []
    for k in range(N + 1):
        if k == 0:
            e = "" if eps0 is None else _fmt(eps0)
        else:
            e = "" if path.innovations is None else _fmt(path.innovations[k - 1])
        rows.append([str(k), _fmt(k / N), _fmt(path.x_values[k]), e])
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "t", "X", "eps"])
        w.writerows(rows)


def read_path_csv(file, dist: Optional[InnovationDist] = None) -> Path:
    with open(file, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["k", "t", "X", "eps"]:
            raise DomainError(f"unexpected path CSV header {header!r}")
        rows = [r for r in reader if r]
    ks = [int(r[0]) for r in rows]
    if ks != list(range(len(rows))):
        raise DomainError("path CSV rows must be k = 0..N in order")
    x = [float(r[2]) for r in rows]
    eps = [r[3].strip() for r in rows[1:]]
    innovations = None if any(e == "" for e in eps) else _frozen([float(e) for e in eps])
    return Path(N=len(rows) - 1, x_values=_frozen(x), innovations=innovations, dist=dist)
