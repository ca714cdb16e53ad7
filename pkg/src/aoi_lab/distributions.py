"""Mean-normalized inter-generation and service time distributions.

Every family is parameterized by a rate, so that ``mean() == 1 / rate``
exactly, plus an optional shape that controls the tail:

=========  =======================  ========================================
literal    family                   shape
=========  =======================  ========================================
det        point mass at 1/rate     none
exp        exponential              none
pareto:A   Pareto, scale theta(A)   tail index ``A > 1``
lognorm:S  log-normal               log-scale standard deviation ``S > 0``
weibull:K  Weibull, scale beta(K)   shape ``K > 0``
=========  =======================  ========================================

Expectations of bounded functions are computed by adaptive quadrature in the
quantile domain (``u = P(S > s)`` for the inverse-survival families, the
standard normal variate for log-normal). That keeps the integration range
finite no matter how heavy the tail is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, special

from .errors import ParameterError, QuadratureError

__all__ = ["Kind", "Distribution", "parse_distribution"]

# quadrature settings; failure threshold is relative to max(1, |value|)
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-11
QUAD_LIMIT = 500
QUAD_FAIL = 1e-8

# standard normal density is below 1e-300 outside this range
_Z_MAX = 37.0


class Kind(str, Enum):
    DETERMINISTIC = "det"
    EXPONENTIAL = "exp"
    PARETO = "pareto"
    LOGNORMAL = "lognorm"
    WEIBULL = "weibull"


_SHAPED = {Kind.PARETO, Kind.LOGNORMAL, Kind.WEIBULL}


@dataclass(frozen=True)
class Distribution:
    """An immutable, mean-normalized probability law on the positive reals."""

    kind: Kind
    rate: float
    shape: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ParameterError(f"rate must be a positive finite number, got {self.rate}")
        if self.kind in _SHAPED:
            if self.shape is None or not math.isfinite(self.shape):
                raise ParameterError(f"{self.kind.value} needs a finite shape parameter")
            if self.kind is Kind.PARETO and not self.shape > 1:
                raise ParameterError(f"Pareto tail index must exceed 1, got {self.shape}")
            if self.shape <= 0:
                raise ParameterError(f"{self.kind.value} shape must be positive, got {self.shape}")
        elif self.shape is not None:
            raise ParameterError(f"{self.kind.value} takes no shape parameter")

    # -- constructors -----------------------------------------------------

    @classmethod
    def deterministic(cls, rate: float) -> Distribution:
        return cls(Kind.DETERMINISTIC, rate)

    @classmethod
    def exponential(cls, rate: float) -> Distribution:
        return cls(Kind.EXPONENTIAL, rate)

    @classmethod
    def pareto(cls, rate: float, alpha: float) -> Distribution:
        return cls(Kind.PARETO, rate, alpha)

    @classmethod
    def lognormal(cls, rate: float, sigma: float) -> Distribution:
        return cls(Kind.LOGNORMAL, rate, sigma)

    @classmethod
    def weibull(cls, rate: float, kappa: float) -> Distribution:
        return cls(Kind.WEIBULL, rate, kappa)

    def with_rate(self, rate: float) -> Distribution:
        return Distribution(self.kind, rate, self.shape)

    @property
    def literal(self) -> str:
        """The CLI literal (``det``, ``pareto:1.5``, ...) without the rate."""
        if self.shape is None:
            return self.kind.value
        return f"{self.kind.value}:{self.shape:g}"

    @property
    def is_deterministic(self) -> bool:
        return self.kind is Kind.DETERMINISTIC

    @property
    def is_exponential(self) -> bool:
        return self.kind is Kind.EXPONENTIAL

    def __str__(self):
        return f"{self.literal}@{self.rate:g}"

    # -- scale parameters -------------------------------------------------

    @property
    def pareto_scale(self) -> float:
        """theta = (1/rate)(1 - 1/alpha), the left end of the Pareto support."""
        return (1.0 - 1.0 / self.shape) / self.rate

    @property
    def weibull_scale(self) -> float:
        """beta = 1 / (rate * Gamma(1 + 1/kappa))."""
        return math.exp(-math.log(self.rate) - special.gammaln(1.0 + 1.0 / self.shape))

    @property
    def lognormal_location(self) -> float:
        """Mean of log(S): -log(rate) - sigma^2 / 2."""
        return -math.log(self.rate) - 0.5 * self.shape ** 2

    # -- moments ----------------------------------------------------------

    def mean(self) -> float:
        return 1.0 / self.rate

    def second_moment(self) -> float:
        """E[S^2]; ``math.inf`` when it diverges or overflows a double."""
        r = self.rate
        k = self.kind
        if k is Kind.DETERMINISTIC:
            return 1.0 / r ** 2
        if k is Kind.EXPONENTIAL:
            return 2.0 / r ** 2
        if k is Kind.PARETO:
            a = self.shape
            if a <= 2:
                return math.inf
            return a * self.pareto_scale ** 2 / (a - 2)
        if k is Kind.LOGNORMAL:
            log_m2 = self.shape ** 2 - 2 * math.log(r)
        else:
            kap = self.shape
            log_m2 = special.gammaln(1 + 2 / kap) - 2 * special.gammaln(1 + 1 / kap) - 2 * math.log(r)
        return math.exp(log_m2) if log_m2 < 709.0 else math.inf

    def variance(self) -> float:
        m2 = self.second_moment()
        return m2 - self.mean() ** 2 if math.isfinite(m2) else math.inf

    # -- distribution functions -------------------------------------------

    def tail(self, x: float) -> float:
        """P(S > x)."""
        if x <= 0:
            return 1.0
        k = self.kind
        if k is Kind.DETERMINISTIC:
            return 1.0 if x < self.mean() else 0.0
        if k is Kind.EXPONENTIAL:
            return math.exp(-self.rate * x)
        if k is Kind.PARETO:
            theta = self.pareto_scale
            return 1.0 if x < theta else (theta / x) ** self.shape
        if k is Kind.LOGNORMAL:
            if math.isinf(x):
                return 0.0
            return float(special.ndtr(-(math.log(x) - self.lognormal_location) / self.shape))
        return math.exp(-self._weibull_y(x))

    def cdf(self, x: float) -> float:
        """P(S <= x)."""
        if self.kind is Kind.LOGNORMAL and 0 < x < math.inf:
            return float(special.ndtr((math.log(x) - self.lognormal_location) / self.shape))
        if self.kind is Kind.EXPONENTIAL and x > 0:
            return -math.expm1(-self.rate * x)
        if self.kind is Kind.WEIBULL and x > 0:
            return -math.expm1(-self._weibull_y(x))
        return 1.0 - self.tail(x)

    def truncated_mean(self, x: float) -> float:
        """E[S 1{S <= x}]; tends to ``mean()`` as x grows."""
        if x <= 0:
            return 0.0
        if math.isinf(x):
            return self.mean()
        r = self.rate
        k = self.kind
        if k is Kind.DETERMINISTIC:
            return self.mean() if x >= self.mean() else 0.0
        if k is Kind.EXPONENTIAL:
            return float(special.gammainc(2.0, r * x)) / r
        if k is Kind.PARETO:
            theta = self.pareto_scale
            if x < theta:
                return 0.0
            # integral of s * a theta^a s^(-a-1) over [theta, x]
            return -math.expm1((self.shape - 1) * math.log(theta / x)) / r
        if k is Kind.LOGNORMAL:
            z = (math.log(x) - self.lognormal_location) / self.shape
            return float(special.ndtr(z - self.shape)) / r
        # y = (t/beta)^kappa turns the integral into a lower incomplete gamma
        return float(special.gammainc(1.0 + 1.0 / self.shape, self._weibull_y(x))) / r

    def _weibull_y(self, x: float) -> float:
        if math.isinf(x):
            return math.inf
        # (x / beta)^kappa, computed in logs: beta underflows for small kappa
        log_y = self.shape * (math.log(x) + math.log(self.rate)
                              + special.gammaln(1.0 + 1.0 / self.shape))
        return math.exp(log_y) if log_y < 709.0 else math.inf

    def isf(self, u):
        """Inverse survival function: the s with P(S > s) = u, for u in (0, 1]."""
        u = np.asarray(u, dtype=float)
        k = self.kind
        if k is Kind.DETERMINISTIC:
            return np.full_like(u, self.mean())
        if k is Kind.EXPONENTIAL:
            return -np.log(u) / self.rate
        if k is Kind.PARETO:
            return self.pareto_scale * u ** (-1.0 / self.shape)
        if k is Kind.WEIBULL:
            with np.errstate(over="ignore"):
                return np.exp(np.log(-np.log(u)) / self.shape + math.log(self.weibull_scale))
        return np.exp(self.lognormal_location - self.shape * special.ndtri(u))

    def _scalar_isf(self) -> Callable[[float], float]:
        r = self.rate
        if self.kind is Kind.EXPONENTIAL:
            return lambda u: -math.log(u) / r
        if self.kind is Kind.PARETO:
            theta, inv = self.pareto_scale, -1.0 / self.shape
            return lambda u: theta * u ** inv
        log_beta, inv = math.log(self.weibull_scale), 1.0 / self.shape

        def weibull_isf(u):
            if u >= 1.0:
                return 0.0
            e = math.log(-math.log(u)) * inv + log_beta
            return math.exp(e) if e < 709.0 else math.inf

        return weibull_isf

    def _scalar_ppf(self) -> Callable[[float], float]:
        """Quantile for P(S <= s) = v, precise for small v."""
        r = self.rate
        if self.kind is Kind.EXPONENTIAL:
            return lambda v: -math.log1p(-v) / r
        if self.kind is Kind.PARETO:
            theta, inv = self.pareto_scale, 1.0 / self.shape
            return lambda v: theta * math.exp(-math.log1p(-v) * inv)
        log_beta, inv = math.log(self.weibull_scale), 1.0 / self.shape

        def weibull_ppf(v):
            if v <= 0.0:
                return 0.0
            return math.exp(math.log(-math.log1p(-v)) * inv + log_beta)

        return weibull_ppf

    # -- transforms -------------------------------------------------------

    def laplace(self, s: float) -> float:
        """E[exp(-s S)] for s >= 0."""
        if s < 0:
            raise ParameterError(f"Laplace argument must be nonnegative, got {s}")
        if s == 0:
            return 1.0
        k = self.kind
        if k is Kind.DETERMINISTIC:
            return math.exp(-s / self.rate)
        if k is Kind.EXPONENTIAL:
            return self.rate / (self.rate + s)
        # quadrature noise can nudge a near-degenerate transform above 1
        return min(self.expect(lambda x: math.exp(-s * x), breaks=(1.0 / s,)), 1.0)

    def laplace_derivative(self, s: float) -> float:
        """d/ds E[exp(-s S)] = -E[S exp(-s S)] for s >= 0."""
        if s < 0:
            raise ParameterError(f"Laplace argument must be nonnegative, got {s}")
        if s == 0:
            return -self.mean()
        k = self.kind
        if k is Kind.DETERMINISTIC:
            m = self.mean()
            return -m * math.exp(-s * m)
        if k is Kind.EXPONENTIAL:
            return -self.rate / (self.rate + s) ** 2
        return -self.expect(lambda x: x * math.exp(-s * x), breaks=(1.0 / s,))

    # -- generic expectation ----------------------------------------------

    def expect(self, g: Callable[[float], float], breaks: Iterable[float] = ()) -> float:
        """E[g(S)] for a bounded, piecewise-smooth ``g``.

        ``breaks`` lists points of the support where ``g`` changes quickly or
        jumps; they become quadrature breakpoints.
        """
        return self.expect_with_error(g, breaks)[0]

    def expect_with_error(self, g: Callable[[float], float],
                          breaks: Iterable[float] = ()) -> tuple[float, float]:
        if self.kind is Kind.DETERMINISTIC:
            return float(g(self.mean())), 0.0
        breaks = [b for b in breaks if 0 < b < math.inf]
        breaks.append(self.mean())
        if self.kind is Kind.LOGNORMAL:
            loc, sig = self.lognormal_location, self.shape
            pts = sorted({(math.log(b) - loc) / sig for b in breaks} | {0.0})
            pts = [p for p in pts if -_Z_MAX < p < _Z_MAX]

            def integrand(z):
                return g(math.exp(loc + sig * z)) * math.exp(-0.5 * z * z)

            val, err = _quad(integrand, -_Z_MAX, _Z_MAX, pts)
            norm = 1.0 / math.sqrt(2 * math.pi)
            val, err = val * norm, err * norm
        else:
            # upper half over u = P(S > s), lower half over v = P(S <= s):
            # each quantile is then accurate right up to its own end point
            median = float(self.isf(0.5))
            upper = sorted({self.tail(b) for b in breaks if b >= median})
            lower = sorted({self.cdf(b) for b in breaks if b < median})
            isf, ppf = self._scalar_isf(), self._scalar_ppf()

            def upper_part(u):
                return g(isf(u)) if u > 0 else g(math.inf)

            def lower_part(v):
                return g(ppf(v))

            v1, e1 = _quad(upper_part, 0.0, 0.5, _with_decades(upper))
            v2, e2 = _quad(lower_part, 0.0, 0.5, _with_decades(lower))
            val, err = v1 + v2, e1 + e2
        if err > QUAD_FAIL * max(1.0, abs(val)):
            raise QuadratureError(f"expectation under {self} did not converge", err)
        return val, err

    # -- sampling ---------------------------------------------------------

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Draw from the law; inverse-CDF except log-normal (exp of a normal)."""
        n = 1 if size is None else size
        if self.kind is Kind.DETERMINISTIC:
            out = np.full(n, self.mean())
        elif self.kind is Kind.LOGNORMAL:
            out = np.exp(self.lognormal_location + self.shape * rng.standard_normal(n))
        else:
            # 1 - U lies in (0, 1], keeping every draw finite
            out = self.isf(1.0 - rng.random(n))
        return float(out[0]) if size is None else out


_DECADES = tuple(10.0 ** -k for k in range(1, 17))


def _with_decades(points):
    # features of g can sit many decades deep in the quantile
    return sorted({p for p in points if 0 < p < 0.5} | set(_DECADES))


def _quad(f, a, b, points):
    with np.errstate(all="ignore"):
        res = integrate.quad(f, a, b, points=points or None, epsabs=QUAD_EPSABS,
                             epsrel=QUAD_EPSREL, limit=QUAD_LIMIT, full_output=1)
    return res[0], res[1]


def parse_distribution(literal: str, rate: float) -> Distribution:
    """Build a distribution from ``det``, ``exp``, ``pareto:A``, ``lognorm:S``
    or ``weibull:K`` and a rate."""
    name, _, arg = literal.strip().partition(":")
    try:
        kind = Kind(name.lower())
    except ValueError:
        raise ParameterError(f"unknown distribution {name!r}; expected one of "
                             + ", ".join(k.value for k in Kind)) from None
    if kind in _SHAPED:
        if not arg:
            raise ParameterError(f"{kind.value} needs a shape, e.g. {kind.value}:1.5")
        try:
            shape = float(arg)
        except ValueError:
            raise ParameterError(f"bad shape {arg!r} in {literal!r}") from None
        return Distribution(kind, rate, shape)
    if arg:
        raise ParameterError(f"{kind.value} takes no shape, got {literal!r}")
    return Distribution(kind, rate)
