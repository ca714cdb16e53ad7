"""Closed-form and semi-numeric peak / average age calculators.

Covers single-server FCFS (D/D/1 bounds, G/M/1 via the system-time fixed
point, M/G/1), single-server LCFS with preemption (general G/G/1 through
three cross-expectations of the independent pair (X, S), plus the M/G/1 and
G/M/1 shortcuts) and the infinite-server G/G/inf average age.

Throughout ``lam`` is the packet generation rate 1/E[X] and ``mu`` the
service rate 1/E[S].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .distributions import Distribution
from .errors import (BracketError, InfiniteMomentError, ParameterError,
                     StabilityError, UnsupportedError)

__all__ = [
    "Discipline", "QueueSpec", "AnalyticAge", "CrossExpectations",
    "fcfs_dd1", "fcfs_gg1_bounds", "solve_alpha_bar", "fcfs_gm1",
    "fcfs_mg1_peak", "fcfs_mg1_average", "fcfs_mg1", "cross_expectations",
    "lcfsp_gg1", "lcfsp_mg1", "lcfsp_gm1", "gginf_average",
    "delay_fcfs_mg1", "delay_lcfsp_mg1", "residual_mean", "analyze",
]

MAX_FCFS_LOAD = 0.999
FIXED_POINT_TOL = 1e-10
DEGENERATE_P = 1e-12
GGINF_SAMPLES = 1_000_000
GGINF_MAX_TERMS = 100_000
_GGINF_CHUNK = 1 << 18


class Discipline(str, Enum):
    FCFS_1 = "fcfs"
    LCFS_PREEMPTIVE_1 = "lcfsp"
    INFINITE_SERVER = "inf"


@dataclass(frozen=True)
class QueueSpec:
    discipline: Discipline
    arrival: Distribution
    service: Distribution

    def __post_init__(self):
        object.__setattr__(self, "discipline", Discipline(self.discipline))
        if self.discipline is Discipline.FCFS_1:
            _check_stable(self.lam, self.mu)
        if (self.discipline is Discipline.LCFS_PREEMPTIVE_1
                and self.arrival.is_deterministic and self.service.is_deterministic):
            raise ParameterError("LCFS with preemption needs a continuous inter-generation "
                                 "or service distribution (got det/det)")

    @property
    def lam(self) -> float:
        return self.arrival.rate

    @property
    def mu(self) -> float:
        return self.service.rate

    @property
    def rho(self) -> float:
        return self.lam / self.mu

    def label(self) -> str:
        return f"{self.discipline.value} {self.arrival} / {self.service}"


@dataclass(frozen=True)
class AnalyticAge:
    peak: float | None
    average: float | None
    method: str = "closed_form"
    error_estimate: float = 0.0
    note: str = ""

    def as_dict(self) -> dict:
        return {"peak": self.peak, "average": self.average, "method": self.method,
                "error_estimate": self.error_estimate, "note": self.note}


def _check_stable(lam: float, mu: float):
    if not (lam > 0 and mu > 0):
        raise ParameterError(f"rates must be positive (lambda={lam}, mu={mu})")
    if lam >= mu:
        raise StabilityError(f"FCFS queue is unstable: lambda={lam:g} >= mu={mu:g}")
    if lam / mu > MAX_FCFS_LOAD:
        raise StabilityError(f"FCFS load rho={lam / mu:.6g} exceeds {MAX_FCFS_LOAD}; "
                             "age diverges as rho -> 1")


def _finite_second_moment(d: Distribution, role: str) -> float:
    m2 = d.second_moment()
    if not math.isfinite(m2):
        raise InfiniteMomentError(f"infinite second moment of {role} time ({d.literal})")
    return m2


def residual_mean(d: Distribution) -> float:
    """E[X^2] / (2 E[X]), the floor every age metric here sits above."""
    return 0.5 * _finite_second_moment(d, "inter-generation") * d.rate


# -- FCFS ------------------------------------------------------------------

def fcfs_dd1(lam: float, mu: float) -> AnalyticAge:
    """Periodic generation, deterministic service."""
    _check_stable(lam, mu)
    return AnalyticAge(peak=1 / lam + 1 / mu, average=1 / (2 * lam) + 1 / mu)


def fcfs_gg1_bounds(lam: float, mu: float) -> AnalyticAge:
    """Universal FCFS lower bounds; attained by D/D/1."""
    age = fcfs_dd1(lam, mu)
    return AnalyticAge(age.peak, age.average, note="lower bound over all F_X, F_S")


def solve_alpha_bar(arrival: Distribution, mu: float) -> float:
    """Root in (0, mu) of alpha = mu - mu * E[exp(-alpha X)].

    The G/M/1 system time is exponential with this rate. ``f(a) = a - mu +
    mu L_X(a)`` vanishes at 0, dips below zero (slope 1 - mu/lam) and is
    positive at mu, so bisection on a bracket just inside (0, mu) finds the
    unique interior root.
    """
    lam = arrival.rate
    _check_stable(lam, mu)

    def f(a):
        return a - mu + mu * arrival.laplace(a)

    lo, hi = 1e-12, mu - 1e-12
    f_lo, f_hi = f(lo), f(hi)
    if not (f_lo < 0 < f_hi):
        raise BracketError(f"fixed-point bracket [{lo:g}, {hi:g}] does not straddle a root "
                           f"(residuals {f_lo:.3g}, {f_hi:.3g})")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    residual = abs(f(root))
    if residual >= FIXED_POINT_TOL:
        raise BracketError(f"bisection stalled at alpha={root:.12g} with residual {residual:.3g}")
    return root


def fcfs_gm1(arrival: Distribution, mu: float) -> AnalyticAge:
    """FCFS with general renewal generation and exponential service."""
    lam = arrival.rate
    m2 = _finite_second_moment(arrival, "inter-generation")
    a = solve_alpha_bar(arrival, mu)
    peak = 1 / a + 1 / lam
    # E[X exp(-a X)] is minus the Laplace derivative at a
    average = lam * (0.5 * m2 - arrival.laplace_derivative(a) / a) + 1 / mu
    closed = arrival.is_deterministic or arrival.is_exponential
    return AnalyticAge(peak, average, "closed_form" if closed else "quadrature",
                       0.0 if closed else FIXED_POINT_TOL / a ** 2)


def fcfs_mg1_peak(lam: float, service: Distribution) -> float:
    mu = service.rate
    _check_stable(lam, mu)
    m2 = _finite_second_moment(service, "service")
    rho = lam / mu
    return (1 + 1 / rho + rho / (1 - rho) * 0.5 * m2 * mu ** 2) / mu


def fcfs_mg1_average(lam: float, service: Distribution) -> float:
    mu = service.rate
    _check_stable(lam, mu)
    m2 = _finite_second_moment(service, "service")
    rho = lam / mu
    return 1 / mu + (1 - rho) / (lam * service.laplace(lam)) + 0.5 * lam * m2 / (1 - rho)


def fcfs_mg1(lam: float, service: Distribution) -> AnalyticAge:
    closed = service.is_deterministic or service.is_exponential
    return AnalyticAge(fcfs_mg1_peak(lam, service), fcfs_mg1_average(lam, service),
                       "closed_form" if closed else "quadrature")


def delay_fcfs_mg1(lam: float, service: Distribution) -> float:
    """Mean system time of FCFS M/G/1 (Pollaczek-Khinchine)."""
    mu = service.rate
    _check_stable(lam, mu)
    m2 = _finite_second_moment(service, "service")
    return 1 / mu + lam * m2 / (2 * (1 - lam / mu))


def delay_lcfsp_mg1(lam: float, service: Distribution) -> float:
    """Mean packet delay quoted for LCFS M/G/1; ``inf`` when E[S^2] diverges
    or the load reaches 1."""
    mu = service.rate
    rho = lam / mu
    m2 = service.second_moment()
    if rho >= 1 or not math.isfinite(m2):
        return math.inf
    return 0.5 * lam * m2 / (1 - rho) + 1 / mu


# -- LCFS with preemption ---------------------------------------------------

@dataclass(frozen=True)
class CrossExpectations:
    """P(S < X), E[S 1{S < X}] and E[min(X, S)] for independent X, S."""

    p_served: float
    served_service: float
    mean_min: float
    error: float = 0.0
    method: str = "closed_form"


def cross_expectations(arrival: Distribution, service: Distribution,
                       general: bool = False) -> CrossExpectations:
    """Cross-expectations of the virtual-service coupling.

    Exponential X or S reduce everything to Laplace transforms of the other
    variable. Otherwise (or with ``general=True``) the three quantities are
    one-dimensional integrals over S of closed-form functions of X:
    ``P(X > s)``, ``s P(X > s)`` and ``E[min(X, s)]``.
    """
    if arrival.is_deterministic and service.is_deterministic:
        raise ParameterError("cross-expectations need a continuous X or S (got det/det)")
    lam, mu = arrival.rate, service.rate
    if not general and arrival.is_exponential:
        ls = service.laplace(lam)
        closed = service.is_deterministic or service.is_exponential
        return CrossExpectations(ls, -service.laplace_derivative(lam), (1 - ls) / lam,
                                 method="closed_form" if closed else "quadrature")
    if not general and service.is_exponential:
        lx = arrival.laplace(mu)
        p = 1 - lx
        closed = arrival.is_deterministic
        return CrossExpectations(p, p / mu + arrival.laplace_derivative(mu), p / mu,
                                 method="closed_form" if closed else "quadrature")

    breaks = (arrival.mean(),)
    p, e1 = service.expect_with_error(arrival.tail, breaks)
    s_ind, e2 = service.expect_with_error(lambda s: s * arrival.tail(s), breaks)
    m, e3 = service.expect_with_error(
        lambda s: arrival.truncated_mean(s) + s * arrival.tail(s), breaks)
    return CrossExpectations(p, s_ind, m, e1 + e2 + e3,
                             "closed_form" if service.is_deterministic else "quadrature")


def _lcfsp_from_cross(arrival: Distribution, ce: CrossExpectations,
                      average_floor: float) -> AnalyticAge:
    if ce.p_served < DEGENERATE_P:
        return AnalyticAge(math.inf, math.inf, ce.method, 0.0,
                           note=f"P(S<X)={ce.p_served:.3g}: packets almost never complete")
    p = ce.p_served
    peak = (arrival.mean() + ce.served_service) / p
    average = average_floor + ce.mean_min / p
    err = ce.error * (1 + max(peak, average)) / p
    return AnalyticAge(peak, average, ce.method, err)


def lcfsp_gg1(spec: QueueSpec, general: bool = False) -> AnalyticAge:
    """Peak and average age of the preemptive LCFS G/G/1 queue.

    peak    = (E[X] + E[S 1{S<X}]) / P(S<X)
    average = E[X^2] / (2 E[X]) + E[min(X, S)] / P(S<X)
    """
    if spec.discipline is not Discipline.LCFS_PREEMPTIVE_1:
        raise ParameterError(f"lcfsp_gg1 needs discipline lcfsp, got {spec.discipline.value}")
    floor = residual_mean(spec.arrival)
    ce = cross_expectations(spec.arrival, spec.service, general=general)
    return _lcfsp_from_cross(spec.arrival, ce, floor)


def lcfsp_mg1(lam: float, service: Distribution) -> AnalyticAge:
    """Poisson generation at rate ``lam``; no stability condition needed.

    With L = E[exp(-lam S)]: average = 1/(lam L), and the peak is the mean
    age at a generation instant plus the mean service time of a packet that
    completes, 1/(lam L) + E[S exp(-lam S)] / L.
    """
    if lam <= 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    ls = service.laplace(lam)
    if ls < DEGENERATE_P:
        return AnalyticAge(math.inf, math.inf, note="E[exp(-lam S)] vanishes")
    average = 1 / (lam * ls)
    peak = average - service.laplace_derivative(lam) / ls
    closed = service.is_deterministic or service.is_exponential
    return AnalyticAge(peak, average, "closed_form" if closed else "quadrature")


def lcfsp_gm1(arrival: Distribution, mu: float) -> AnalyticAge:
    """Exponential service at rate ``mu``.

    average = E[X^2] / (2 E[X]) + 1/mu
    peak    = 1/mu + E[X (1 - exp(-mu X))] / E[1 - exp(-mu X)]
    """
    if mu <= 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    average = residual_mean(arrival) + 1 / mu
    p = 1 - arrival.laplace(mu)
    if p < DEGENERATE_P:
        return AnalyticAge(math.inf, average, note="P(S<X) vanishes")
    peak = 1 / mu + (arrival.mean() + arrival.laplace_derivative(mu)) / p
    closed = arrival.is_deterministic or arrival.is_exponential
    return AnalyticAge(peak, average, "closed_form" if closed else "quadrature")


# -- infinite servers -------------------------------------------------------

def _min_delivery_delay(arrival, service, n, rng, max_terms):
    """Samples of D = min over l >= 0 of (X_1 + ... + X_l + S_{l+1}).

    Candidates are scanned in order of l; once the partial sum of X alone
    reaches the running minimum no later candidate can win (S >= 0).
    """
    best = service.sample(rng, n)
    acc = np.zeros(n)
    active = np.arange(n)
    for _ in range(max_terms):
        acc_a = acc[active] + arrival.sample(rng, active.size)
        keep = acc_a < best[active]
        active = active[keep]
        if active.size == 0:
            break
        acc[active] = acc_a[keep]
        best[active] = np.minimum(best[active], acc[active] + service.sample(rng, active.size))
    return best, active.size


def gginf_average(spec: QueueSpec, samples: int = GGINF_SAMPLES,
                  rng: np.random.Generator | None = None,
                  max_terms: int = GGINF_MAX_TERMS) -> AnalyticAge:
    """Average age of the G/G/inf queue.

    E[X^2]/(2E[X]) in closed form plus a Monte Carlo estimate of
    E[min_l (X_1 + ... + X_l + S_{l+1})]; deterministic service makes the
    minimum S_1 and is returned exactly. ``error_estimate`` is the standard
    error of the Monte Carlo term.
    """
    if spec.discipline is not Discipline.INFINITE_SERVER:
        raise ParameterError(f"gginf_average needs discipline inf, got {spec.discipline.value}")
    floor = residual_mean(spec.arrival)
    if spec.service.is_deterministic:
        return AnalyticAge(None, floor + spec.service.mean(), "closed_form")
    if samples < 2:
        raise ParameterError("gginf_average needs at least 2 samples")
    rng = np.random.default_rng() if rng is None else rng
    total = total_sq = 0.0
    unfinished = 0
    done = 0
    while done < samples:
        n = min(_GGINF_CHUNK, samples - done)
        d, left = _min_delivery_delay(spec.arrival, spec.service, n, rng, max_terms)
        total += float(d.sum())
        total_sq += float(np.square(d).sum())
        unfinished += left
        done += n
    mean = total / samples
    var = max(total_sq / samples - mean ** 2, 0.0) * samples / (samples - 1)
    stderr = math.sqrt(var / samples)
    note = ""
    if unfinished:
        # an unfinished scan holds an upper bound; widen by the worst case
        stderr += mean * unfinished / samples
        note = f"{unfinished} samples hit the {max_terms}-term budget"
    return AnalyticAge(None, floor + mean, "monte_carlo", stderr, note)


# -- dispatch ---------------------------------------------------------------

def analyze(spec: QueueSpec, samples: int = GGINF_SAMPLES,
            rng: np.random.Generator | None = None) -> AnalyticAge:
    """Pick the formula that covers ``spec``."""
    arr, srv = spec.arrival, spec.service
    if spec.discipline is Discipline.FCFS_1:
        if arr.is_deterministic and srv.is_deterministic:
            return fcfs_dd1(spec.lam, spec.mu)
        if srv.is_exponential:
            return fcfs_gm1(arr, spec.mu)
        if arr.is_exponential:
            return fcfs_mg1(spec.lam, srv)
        raise UnsupportedError(f"no closed form for FCFS {arr.literal}/{srv.literal}/1; "
                               "only the D/D/1 lower bounds apply (use simulate)")
    if spec.discipline is Discipline.LCFS_PREEMPTIVE_1:
        if arr.is_exponential:
            return lcfsp_mg1(spec.lam, srv)
        if srv.is_exponential:
            return lcfsp_gm1(arr, spec.mu)
        return lcfsp_gg1(spec)
    return gginf_average(spec, samples, rng)
