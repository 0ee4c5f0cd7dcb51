"""Two-point lower-bound construction and its Monte Carlo checks.

Under ``H0`` the coefficient is ``f_amp * 1{u <= n*/N}``, under ``H1`` it is
zero; innovations are Gamma(a, b) under both.  Only ``X_0..X_{n*}`` carry
information, and the likelihood ratio is taken conditionally on ``X_0``:

    dP0/dP1 = prod_{k<=n*} (1 - f x_{k-1}/x_k)**(a-1) * exp(b f x_{k-1}) * 1{x_k > f x_{k-1}}

With truncation level ``tau`` the statistic

    U_k = (a-1) log(1 - f X_{k-1}/X_k) 1{X_k > f X_{k-1}, X_{k-1} <= tau}
          + b f X_{k-1} 1{X_{k-1} <= tau}

gives ``exp(sum U_k)`` for the truncated ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import distributions as dists
from .errors import ConfigError, DomainError, OutOfRegimeError
from .process import _run_recursion, burn_in_length, step

NP_GRID = np.logspace(-3, 3, 50)

# Rows per simulation chunk; bounds peak memory for long samples.
_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class HypothesisPair:
    N: int
    a: float
    b: float
    c_f: float
    n_star: int
    f_amp: float
    beta: float
    tau: float

    @property
    def dist(self):
        return dists.gamma(self.a, self.b)

    def coefficient(self):
        """The ``H0`` coefficient as a step function on ``[0, 1]``."""
        return step(self.f_amp, self.n_star / self.N)


def local_sample_size(N: int, a: float, beta: float) -> int:
    """``N**(a*beta/(a*beta+1))`` rounded half up, at least 1."""
    return max(1, int(math.floor(N ** (a * beta / (a * beta + 1.0)) + 0.5)))


def build_hypotheses(N: int, a: float, b: float, beta: float, c_f: float) -> HypothesisPair:
    if not (0.0 < a < 2.0):
        raise OutOfRegimeError(f"the two-point construction needs shape in (0, 2), got {a!r}")
    if N < 2 or b <= 0 or beta <= 0 or c_f <= 0:
        raise DomainError("build_hypotheses needs N >= 2 and positive b, beta, c_f")
    n_star = local_sample_size(N, a, beta)
    f_amp = (c_f * n_star) ** (-1.0 / a)
    return HypothesisPair(int(N), float(a), float(b), float(c_f), n_star, float(f_amp), float(beta), math.log(N) ** 2)


def u_statistic(x_prev, x_cur, hp: HypothesisPair):
    x_prev = np.asarray(x_prev, dtype=float)
    x_cur = np.asarray(x_cur, dtype=float)
    f = hp.f_amp
    keep = x_prev <= hp.tau
    ratio = f * x_prev / x_cur
    ok = (x_cur > f * x_prev) & keep
    with np.errstate(divide="ignore", invalid="ignore"):
        log_term = np.where(ok, np.log1p(-np.where(ok, ratio, 0.0)), 0.0)
    out = (hp.a - 1.0) * log_term + hp.b * f * x_prev * keep
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class LikelihoodEvaluation:
    """``rn_value`` is the untruncated product form; ``rn_truncated`` is
    ``exp(log_sum_u)`` times the truncated indicators."""

    rn_value: float
    log_sum_u: float
    indicator_product: int
    truncation_ok: int
    rn_truncated: float


def _rn_rows(X: np.ndarray, hp: HypothesisPair):
    """Row-wise likelihood quantities for samples ``X_0..X_{n*}`` (2-D)."""
    ns = hp.n_star
    prev, cur = X[:, :ns], X[:, 1 : ns + 1]
    f = hp.f_amp
    above = cur > f * prev
    # overflow to inf is a legitimate ratio value under strong separation
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        base = np.where(above, 1.0 - f * prev / np.where(above, cur, 1.0), 1.0)
        factors = np.where(above, base ** (hp.a - 1.0) * np.exp(hp.b * f * prev), 0.0)
        rn = np.prod(factors, axis=1)
    u = u_statistic(prev, cur, hp)
    log_sum_u = u.sum(axis=1)
    ind = above.all(axis=1)
    trunc_ok = (prev <= hp.tau).all(axis=1)
    both = (above & (prev <= hp.tau)).all(axis=1)
    with np.errstate(over="ignore"):
        rn_trunc = np.where(both, np.exp(log_sum_u), 0.0)
    return rn, log_sum_u, ind, trunc_ok, rn_trunc


def rn_derivative(sample, hp: HypothesisPair) -> LikelihoodEvaluation:
    """Likelihood ratio for one sample ``X_0, X_1, ...`` (length >= n*+1)."""
    X = np.asarray(sample, dtype=float)
    if X.ndim != 1 or X.size < hp.n_star + 1:
        raise DomainError(f"sample must hold X_0..X_{{n*}} with n*={hp.n_star}")
    if np.any(X <= 0):
        raise DomainError("sample values must be positive")
    rn, lsu, ind, tok, rnt = _rn_rows(X[None, : hp.n_star + 1], hp)
    return LikelihoodEvaluation(float(rn[0]), float(lsu[0]), int(ind[0]), int(tok[0]), float(rnt[0]))


def _chunks(reps: int, width: int):
    size = max(1, _CHUNK_CELLS // max(width, 1))
    start = 0
    while start < reps:
        yield min(size, reps - start)
        start += size


def sample_h1(hp: HypothesisPair, rng: np.random.Generator, reps: int, length: int = None) -> np.ndarray:
    """Rows ``X_0..X_{length-1}`` of iid Gamma draws (``H1``)."""
    length = hp.n_star + 1 if length is None else length
    return dists.sample(hp.dist, rng, size=(reps, length))


def sample_h0(hp: HypothesisPair, rng: np.random.Generator, reps: int) -> np.ndarray:
    """Rows ``X_0..X_{n*}`` under ``H0``; ``X_0`` is burnt in with ``f_amp``."""
    B = burn_in_length(hp.f_amp)
    eps = dists.sample(hp.dist, rng, size=(reps, B + 1 + hp.n_star))
    x = _run_recursion([hp.f_amp] * hp.n_star, eps, B, hp.f_amp)
    return x[:, B:]


@dataclass(frozen=True)
class MomentReport:
    mean_u: float
    mean_u_se: float
    mean_u2: float
    mean_u2_se: float
    var_u: float
    f_pow_a: float
    ratio_1: float
    ratio_2: float
    ratio_v: float
    reps: int


def moment_check(hp: HypothesisPair, reps: int, seed: int) -> MomentReport:
    """Monte Carlo first two moments of ``U_k`` under ``H1``."""
    if 2.0 * hp.f_amp * hp.tau > 1.0:
        raise ConfigError(f"moment check needs 2*f*tau <= 1, got {2 * hp.f_amp * hp.tau:.4g}")
    rng = np.random.default_rng(seed)
    pairs = sample_h1(hp, rng, reps, length=2)
    u = u_statistic(pairs[:, 0], pairs[:, 1], hp)
    m1, m2 = float(u.mean()), float((u * u).mean())
    s1 = float(u.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
    s2 = float((u * u).std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
    var = float(u.var(ddof=1)) if reps > 1 else math.nan
    fa = hp.f_amp**hp.a
    if fa > 0:
        r1, r2, rv = abs(m1) / fa, m2 / fa, var / fa
    else:
        r1 = r2 = rv = math.nan
    return MomentReport(m1, s1, m2, s2, var, fa, r1, r2, rv, int(reps))


def indicator_product_check(hp: HypothesisPair, reps: int, seed: int) -> float:
    """Frequency under ``H1`` that ``X_k > f X_{k-1}`` for all ``k <= n*``."""
    rng = np.random.default_rng(seed)
    hits = 0
    for size in _chunks(reps, hp.n_star + 1):
        X = sample_h1(hp, rng, size)
        hits += int(np.count_nonzero((X[:, 1:] > hp.f_amp * X[:, :-1]).all(axis=1)))
    return hits / reps


def truncation_check(hp: HypothesisPair, reps: int, seed: int, tau: float = None) -> float:
    """Frequency under ``H1`` that ``max_{0<=k<=N} X_k <= tau`` (default ``log(N)**2``)."""
    tau = hp.tau if tau is None else tau
    if math.isinf(tau) and tau > 0:
        return 1.0
    rng = np.random.default_rng(seed)
    hits = 0
    for size in _chunks(reps, hp.N + 1):
        X = sample_h1(hp, rng, size, length=hp.N + 1)
        hits += int(np.count_nonzero(X.max(axis=1) <= tau))
    return hits / reps


@dataclass(frozen=True)
class RiskEstimate:
    risk: float
    risk_se: float
    type_one: float
    type_two: float
    np_functional: float
    np_argmax: float
    np_grid: np.ndarray = field(repr=False)
    reps: int = 0


def _rn_batches(hp, rng, reps, sampler):
    out = []
    for size in _chunks(reps, hp.n_star + 1):
        out.append(_rn_rows(sampler(hp, rng, size), hp)[0])
    return np.concatenate(out)


def lr_test_risk(hp: HypothesisPair, reps: int, seed: int, grid=None) -> RiskEstimate:
    """Summed error of the test that decides ``H0`` when ``dP0/dP1 > 1``.

    Also returns ``max_x x/(1+x) * P1(dP0/dP1 >= x)`` over ``grid``
    (default: 50 log-spaced points in ``[1e-3, 1e3]``).
    """
    grid = NP_GRID if grid is None else np.asarray(grid, dtype=float)
    ss0, ss1 = np.random.SeedSequence(seed).spawn(2)
    rn0 = _rn_batches(hp, np.random.default_rng(ss0), reps, sample_h0)
    rn1 = _rn_batches(hp, np.random.default_rng(ss1), reps, sample_h1)
    t1 = float(np.mean(rn0 <= 1.0))
    t2 = float(np.mean(rn1 > 1.0))
    se = math.sqrt((t1 * (1 - t1) + t2 * (1 - t2)) / reps)
    rn1_sorted = np.sort(rn1)
    tail = 1.0 - np.searchsorted(rn1_sorted, grid, side="left") / reps
    vals = grid / (1.0 + grid) * tail
    i = int(np.argmax(vals))
    return RiskEstimate(t1 + t2, se, t1, t2, float(vals[i]), float(grid[i]), grid, int(reps))


def rn_normalization(hp: HypothesisPair, reps: int, seed: int) -> tuple[float, float]:
    """Monte Carlo ``E_P1[dP0/dP1]`` (untruncated) and its standard error."""
    rn = _rn_batches(hp, np.random.default_rng(seed), reps, sample_h1)
    return float(rn.mean()), float(rn.std(ddof=1) / math.sqrt(reps))


def lower_bound_sweep(points, a, b, beta, reps, seed, moment_reps=None, truncation_reps=None) -> dict:
    """Run every check over a sweep of ``(N, c_f)`` points.

    Returns the report mapping with one array entry per sweep point.  Moment
    ratios are ``None`` where ``2*f*tau > 1`` rules the check out.
    """
    moment_reps = reps if moment_reps is None else moment_reps
    truncation_reps = reps if truncation_reps is None else truncation_reps
    keys = ("n_star", "f_amp", "risk", "risk_se", "np_functional", "moment_ratio_1", "moment_ratio_2",
            "indicator_freq", "truncation_freq")
    out = {k: [] for k in keys}
    out["N"], out["c_f"] = [], []
    for i, (N, c_f) in enumerate(points):
        hp = build_hypotheses(N, a, b, beta, c_f)
        s = np.random.SeedSequence([seed, i]).generate_state(4)
        risk = lr_test_risk(hp, reps, int(s[0]))
        try:
            mom = moment_check(hp, moment_reps, int(s[1]))
            r1, r2 = mom.ratio_1, mom.ratio_2
        except ConfigError:
            r1 = r2 = None
        out["N"].append(int(N))
        out["c_f"].append(float(c_f))
        out["n_star"].append(hp.n_star)
        out["f_amp"].append(hp.f_amp)
        out["risk"].append(risk.risk)
        out["risk_se"].append(risk.risk_se)
        out["np_functional"].append(risk.np_functional)
        out["moment_ratio_1"].append(r1)
        out["moment_ratio_2"].append(r2)
        out["indicator_freq"].append(indicator_product_check(hp, reps, int(s[2])))
        out["truncation_freq"].append(truncation_check(hp, truncation_reps, int(s[3])))
    return out
