"""One-sided innovation laws whose CDF vanishes like ``c * y**a`` at zero.

Three families are shipped:

* ``gamma(a, b)``: shape ``a``, rate ``b``; ``F(y) = P(a, b*y)``.
* ``weibull(a)``: ``F(y) = 1 - exp(-y**a)``.
* ``poweruniform(a)``: ``F(y) = min(y, 1)**a`` on ``[0, 1]``.

Each satisfies ``|F(y) - c*y**a| <= c_g * y**(a + delta)`` near zero, with
``(a, c, delta)`` available in closed form from :func:`decay_constants`.

Sampling
--------
Weibull and PowerUniform draws use the inverse CDF applied to one uniform
from ``rng.random()``.  Gamma draws use ``rng.standard_gamma(a) / b``,
which is the Marsaglia-Tsang squeeze/rejection method (for ``a < 1`` it is
boosted via ``G(a) = G(a+1) * U**(1/a)``).  Draws that underflow to zero
are replaced by the smallest positive normal double so every draw is
strictly positive.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, UnsupportedMomentError

KINDS = ("gamma", "weibull", "poweruniform")

# Slack above 2a in the moment requirement; any small positive value works.
MOMENT_SLACK = 0.1

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class InnovationDist:
    """Immutable description of a one-sided innovation law.

    Use :func:`gamma`, :func:`weibull` or :func:`power_uniform` to build
    instances; they fill in the derived decay and smoothness metadata.
    """

    kind: str
    shape: float
    rate: float
    decay_constant: float
    decay_remainder_exponent: float
    cdf_lipschitz: float
    cdf_hoelder_exponent: float

    @property
    def cdf_smoothness(self) -> tuple[float, float]:
        return (self.cdf_lipschitz, self.cdf_hoelder_exponent)

    def spec(self) -> str:
        """Round-trippable description string, e.g. ``'gamma(1,1)'``."""
        if self.kind == "gamma":
            return f"gamma({self.shape!r},{self.rate!r})"
        return f"{self.kind}({self.shape!r})"

    def __str__(self) -> str:
        return self.spec()


def _check_positive(name, value):
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    return value


def gamma(a: float, b: float = 1.0) -> InnovationDist:
    a = _check_positive("shape", a)
    b = _check_positive("rate", b)
    c = b**a / math.gamma(a + 1.0)
    if a >= 1.0:
        mode = (a - 1.0) / b
        if a == 1.0:
            lip = b
        else:
            lip = math.exp(a * math.log(b) + (a - 1.0) * math.log(mode) - b * mode - math.lgamma(a))
        hexp = 1.0
    else:
        # F(y) - F(z) <= c * (y**a - z**a) <= c * (y - z)**a
        lip, hexp = c, a
    return InnovationDist("gamma", a, b, c, 1.0, lip, hexp)


def weibull(a: float) -> InnovationDist:
    a = _check_positive("shape", a)
    if a > 1.0:
        mode = ((a - 1.0) / a) ** (1.0 / a)
        lip = a * mode ** (a - 1.0) * math.exp(-(mode**a))
        hexp = 1.0
    elif a == 1.0:
        lip, hexp = 1.0, 1.0
    else:
        lip, hexp = 1.0, a
    return InnovationDist("weibull", a, 1.0, 1.0, a, lip, hexp)


def power_uniform(a: float) -> InnovationDist:
    a = _check_positive("shape", a)
    if a >= 1.0:
        lip, hexp = a, 1.0
    else:
        lip, hexp = 1.0, a
    # The remainder is identically zero, so any positive exponent is valid.
    return InnovationDist("poweruniform", a, 1.0, 1.0, 1.0, lip, hexp)


_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*\(([^()]*)\)\s*$")


def parse_dist(text: str) -> InnovationDist:
    """Parse ``gamma(a,b)``, ``weibull(a)`` or ``poweruniform(a)`` (any case)."""
    m = _SPEC_RE.match(text.lower())
    if not m:
        raise DomainError(f"cannot parse distribution {text!r}")
    name, raw_args = m.groups()
    try:
        args = [float(s) for s in raw_args.split(",")] if raw_args.strip() else []
    except ValueError as exc:
        raise DomainError(f"non-numeric argument in distribution {text!r}") from exc
    name = name.replace("_", "")
    if name == "gamma" and len(args) in (1, 2):
        return gamma(*args)
    if name == "weibull" and len(args) == 1:
        return weibull(*args)
    if name in ("poweruniform", "power") and len(args) == 1:
        return power_uniform(*args)
    raise DomainError(f"unknown distribution or wrong arity in {text!r}")


def quantile(dist: InnovationDist, u):
    """Inverse CDF at probability ``u`` in [0, 1)."""
    u = np.asarray(u, dtype=float)
    if dist.kind == "weibull":
        out = (-np.log1p(-u)) ** (1.0 / dist.shape)
    elif dist.kind == "poweruniform":
        out = u ** (1.0 / dist.shape)
    else:
        out = special.gammaincinv(dist.shape, u) / dist.rate
    return out[()] if out.ndim == 0 else out


def sample(dist: InnovationDist, rng: np.random.Generator, size=None):
    """Draw from ``dist`` using ``rng``; all draws are strictly positive.

    With ``size=None`` a Python float is returned, otherwise an array.
    """
    if dist.kind == "gamma":
        out = np.asarray(rng.standard_gamma(dist.shape, size=size), dtype=float) / dist.rate
    else:
        out = np.asarray(quantile(dist, rng.random(size=size)), dtype=float)
    out = np.maximum(out, _TINY)
    if size is None:
        return float(out)
    return out


def cdf(dist: InnovationDist, y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(np.isnan(y)):
        raise DomainError("cdf is only defined for y >= 0")
    if dist.kind == "gamma":
        out = special.gammainc(dist.shape, dist.rate * y)
    elif dist.kind == "weibull":
        out = -np.expm1(-(y**dist.shape))
    else:
        out = np.minimum(y, 1.0) ** dist.shape
    return out[()] if out.ndim == 0 else out


def pdf(dist: InnovationDist, y):
    y = np.asarray(y, dtype=float)
    a = dist.shape
    with np.errstate(divide="ignore", invalid="ignore"):
        if dist.kind == "gamma":
            out = np.where(y > 0, np.exp(a * math.log(dist.rate) + (a - 1) * np.log(y) - dist.rate * y - math.lgamma(a)), 0.0)
        elif dist.kind == "weibull":
            out = np.where(y > 0, a * y ** (a - 1) * np.exp(-(y**a)), 0.0)
        else:
            out = np.where((y > 0) & (y <= 1), a * y ** (a - 1), 0.0)
    return out[()] if out.ndim == 0 else out


def decay_constants(dist: InnovationDist) -> tuple[float, float, float]:
    """Return ``(a, c, delta)`` with ``F(y) = c*y**a + O(y**(a+delta))``."""
    return (dist.shape, dist.decay_constant, dist.decay_remainder_exponent)


def moment(dist: InnovationDist, p: float) -> float:
    """Analytic ``E eps**p``.

    All three families have finite moments of every positive order, so only
    non-positive or non-finite ``p`` is rejected.
    """
    p = float(p)
    if not (p > 0 and math.isfinite(p)):
        raise UnsupportedMomentError(f"moment order must be positive and finite, got {p!r}")
    a = dist.shape
    if dist.kind == "gamma":
        return math.exp(math.lgamma(a + p) - math.lgamma(a) - p * math.log(dist.rate))
    if dist.kind == "weibull":
        return math.gamma(1.0 + p / a)
    return a / (a + p)


def mean(dist: InnovationDist) -> float:
    return moment(dist, 1.0)


def variance(dist: InnovationDist) -> float:
    m1 = moment(dist, 1.0)
    return moment(dist, 2.0) - m1 * m1


def required_moment_order(dist: InnovationDist) -> float:
    """Largest moment order the estimator theory needs, ``max(1, 2a + slack)``."""
    return max(1.0, 2.0 * dist.shape + MOMENT_SLACK)


def satisfies_moment_condition(dist: InnovationDist) -> bool:
    try:
        return math.isfinite(moment(dist, required_moment_order(dist)))
    except (UnsupportedMomentError, OverflowError):
        return False
