import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from aoi_lab.analytic import (Discipline, QueueSpec, analyze, cross_expectations,
                              delay_fcfs_mg1, delay_lcfsp_mg1, fcfs_dd1, fcfs_gg1_bounds,
                              fcfs_gm1, fcfs_mg1, fcfs_mg1_average, fcfs_mg1_peak,
                              gginf_average, lcfsp_gg1, lcfsp_gm1, lcfsp_mg1, residual_mean,
                              solve_alpha_bar)
from aoi_lab.distributions import Distribution, parse_distribution
from aoi_lab.errors import (InfiniteMomentError, ParameterError, StabilityError,
                            UnsupportedError)

EXP = Distribution.exponential
DET = Distribution.deterministic


def rng(seed=0):
    return np.random.default_rng(seed)


# -- FCFS -------------------------------------------------------------------

def test_dd1_values():
    age = fcfs_dd1(0.5, 1.0)
    assert age.peak == 3.0
    # 1/(2 lam) + 1/mu: the sawtooth runs from 1 to 3 every 2 time units
    assert age.average == 2.0


def test_gg1_bounds_equal_dd1():
    b, d = fcfs_gg1_bounds(0.3, 0.7), fcfs_dd1(0.3, 0.7)
    assert (b.peak, b.average) == (d.peak, d.average)


@pytest.mark.parametrize("lam, mu", [(1.0, 1.0), (2.0, 1.0), (0.9995, 1.0)])
def test_fcfs_rejects_unstable_or_near_critical(lam, mu):
    with pytest.raises(StabilityError):
        fcfs_dd1(lam, mu)
    with pytest.raises(StabilityError):
        fcfs_mg1(lam, EXP(mu))


def test_fcfs_allows_load_0999():
    assert math.isfinite(fcfs_mg1(0.999, EXP(1.0)).average)


def test_alpha_bar_mm1_is_mu_minus_lambda():
    assert solve_alpha_bar(EXP(0.5), 1.0) == pytest.approx(0.5, abs=1e-10)


@pytest.mark.parametrize("arrival", ["det", "weibull:2", "weibull:0.5", "lognorm:1", "pareto:1.5"])
def test_alpha_bar_matches_brentq(arrival):
    x = parse_distribution(arrival, 0.6)
    mu = 1.0
    oracle = optimize.brentq(lambda a: a - mu + mu * x.laplace(a), 1e-9, mu - 1e-9, xtol=1e-14)
    a = solve_alpha_bar(x, mu)
    assert a == pytest.approx(oracle, abs=1e-9)
    assert abs(a - mu + mu * x.laplace(a)) < 1e-10


def test_dm1_closed_form():
    a = optimize.brentq(lambda a: a - 1 + math.exp(-2 * a), 1e-6, 1 - 1e-9, xtol=1e-15)
    age = fcfs_gm1(DET(0.5), 1.0)
    # with e^{-2a} = 1 - a the average collapses to 1/a + 1
    assert age.average == pytest.approx(1 / a + 1, rel=1e-9)
    assert age.peak == pytest.approx(1 / a + 2, rel=1e-9)
    assert age.average == pytest.approx(2.2550, abs=5e-5)


def test_mm1_two_routes_agree():
    a = fcfs_mg1(0.5, EXP(1.0))
    b = fcfs_gm1(EXP(0.5), 1.0)
    assert a.average == pytest.approx(3.5, abs=1e-12)
    assert b.average == pytest.approx(3.5, abs=1e-9)
    assert a.peak == pytest.approx(4.0, abs=1e-12)
    assert b.peak == pytest.approx(4.0, abs=1e-9)


def test_md1_average_and_peak():
    # 1/mu + (1 - rho)/(lam L) + lam E[S^2] / (2(1 - rho)) with L = e^{-1/2}
    assert fcfs_mg1_average(0.5, DET(1.0)) == pytest.approx(1 + math.exp(0.5) + 0.5, rel=1e-12)
    assert fcfs_mg1_average(0.5, DET(1.0)) == pytest.approx(3.148721, abs=1e-6)
    assert fcfs_mg1_peak(0.5, DET(1.0)) == pytest.approx(3.5, rel=1e-12)


def test_mg1_peak_is_mean_gap_plus_pk_delay():
    for lit in ["det", "exp", "lognorm:1", "weibull:0.5", "pareto:2.5"]:
        s = parse_distribution(lit, 1.0)
        assert fcfs_mg1_peak(0.4, s) == pytest.approx(1 / 0.4 + delay_fcfs_mg1(0.4, s), rel=1e-12)


def test_mg1_average_lognormal_against_scipy_moments():
    s = parse_distribution("lognorm:1", 1.0)
    f = stats.lognorm(s=1.0, scale=math.exp(-0.5))
    lam, rho = 0.5, 0.5
    lt, _ = integrate.quad(lambda x: math.exp(-lam * x) * f.pdf(x), 0, np.inf, epsrel=1e-12)
    expected = 1 + (1 - rho) / (lam * lt) + lam * f.moment(2) / (2 * (1 - rho))
    assert fcfs_mg1_average(lam, s) == pytest.approx(expected, rel=1e-8)


def test_fcfs_mg1_rejects_infinite_second_moment():
    with pytest.raises(InfiniteMomentError, match="infinite second moment"):
        fcfs_mg1(0.5, parse_distribution("pareto:1.5", 1.0))
    with pytest.raises(InfiniteMomentError):
        fcfs_mg1_average(0.05, parse_distribution("pareto:1.05", 1.0))


def test_low_load_heavy_tails_do_not_beat_deterministic_service():
    # finite-variance heavy tails at rho = 0.05, 0.1: det stays best
    for lam in (0.05, 0.1):
        det = fcfs_mg1_average(lam, DET(1.0))
        for lit in ["exp", "pareto:2.5", "pareto:2.1", "lognorm:1", "weibull:0.5"]:
            assert det < fcfs_mg1_average(lam, parse_distribution(lit, 1.0))


def test_fcfs_general_pair_unsupported():
    spec = QueueSpec(Discipline.FCFS_1, parse_distribution("weibull:2", 0.5),
                     parse_distribution("lognorm:1", 1.0))
    with pytest.raises(UnsupportedError):
        analyze(spec)


def test_delay_formulas():
    assert delay_fcfs_mg1(0.5, EXP(1.0)) == pytest.approx(2.0)
    assert delay_fcfs_mg1(0.5, DET(1.0)) == pytest.approx(1.5)
    assert delay_lcfsp_mg1(0.5, DET(1.0)) == pytest.approx(1.5)
    assert delay_lcfsp_mg1(0.5, EXP(1.0)) == pytest.approx(2.0)
    assert delay_lcfsp_mg1(0.5, parse_distribution("pareto:1.5", 1.0)) == math.inf
    assert delay_lcfsp_mg1(1.0, EXP(1.0)) == math.inf


# -- LCFS with preemption ----------------------------------------------------

def test_lcfsp_mm1_unit_rates():
    age = lcfsp_mg1(1.0, EXP(1.0))
    assert age.average == pytest.approx(2.0, abs=1e-12)
    # 1/(lam L) + E[S e^{-lam S}] / L with L = 1/2, E[S e^{-S}] = 1/4
    assert age.peak == pytest.approx(2.5, abs=1e-12)


def test_lcfsp_md1():
    age = lcfsp_mg1(0.5, DET(1.0))
    assert age.average == pytest.approx(math.exp(0.5) / 0.5, rel=1e-12)
    assert age.average == pytest.approx(3.2974, abs=5e-5)
    # a completing packet always took exactly 1 time unit
    assert age.peak == pytest.approx(age.average + 1.0, rel=1e-12)


def test_lcfsp_heavy_tail_limits():
    assert lcfsp_mg1(0.9, parse_distribution("pareto:1.001", 1.0)).average == \
        pytest.approx(1 / 0.9, rel=0.02)
    assert lcfsp_mg1(0.9, parse_distribution("lognorm:50", 1.0)).average == \
        pytest.approx(1 / 0.9, rel=0.02)


def test_lcfsp_gm1_closed_forms():
    det = lcfsp_gm1(DET(0.5), 1.0)
    assert det.average == pytest.approx(2.0)
    assert det.peak == pytest.approx(3.0)
    exp = lcfsp_gm1(EXP(0.5), 1.0)
    assert exp.average == pytest.approx(3.0)
    assert exp.peak == pytest.approx(1 + (2 - 0.5 / 2.25) / (2 / 3))
    assert exp.peak == pytest.approx(lcfsp_mg1(0.5, EXP(1.0)).peak, rel=1e-12)


def test_lcfsp_det_det_rejected():
    with pytest.raises(ParameterError):
        QueueSpec(Discipline.LCFS_PREEMPTIVE_1, DET(0.5), DET(1.0))


def _swapped_order_cross(x: Distribution, s: Distribution):
    """P(S<X), E[S 1{S<X}], E[min(X,S)] integrating over X (the library
    integrates over S), with every inner quantity from scipy.stats."""
    fx, fs = _frozen(x), _frozen(s)

    def outer(h):
        return integrate.quad(lambda xv: h(xv) * fx.pdf(xv), 0, np.inf, limit=400,
                              epsabs=1e-13, epsrel=1e-11)[0]

    def partial(xv):
        return fs.expect(lambda v: v, lb=0, ub=xv, epsabs=1e-13, epsrel=1e-11) if xv > 0 else 0.0

    p = outer(fs.cdf)
    e = outer(partial)
    m = outer(lambda xv: partial(xv) + xv * fs.sf(xv))
    return p, e, m


def _frozen(d):
    if d.kind.value == "weibull":
        return stats.weibull_min(c=d.shape, scale=d.weibull_scale)
    if d.kind.value == "lognorm":
        return stats.lognorm(s=d.shape, scale=math.exp(d.lognormal_location))
    return stats.expon(scale=1 / d.rate)


@pytest.mark.parametrize("arrival, service", [("weibull:2", "lognorm:0.5"),
                                              ("lognorm:0.5", "weibull:1.5")])
def test_general_cross_expectations_match_swapped_order(arrival, service):
    x, s = parse_distribution(arrival, 0.7), parse_distribution(service, 1.0)
    ce = cross_expectations(x, s)
    p, e, m = _swapped_order_cross(x, s)
    assert ce.p_served == pytest.approx(p, rel=1e-6)
    assert ce.served_service == pytest.approx(e, rel=1e-6)
    assert ce.mean_min == pytest.approx(m, rel=1e-6)


@pytest.mark.parametrize("service", ["det", "exp", "pareto:1.5", "pareto:1.01", "lognorm:1",
                                     "lognorm:4", "weibull:0.5", "weibull:3"])
@pytest.mark.parametrize("lam", [0.2, 0.9, 1.7])
def test_general_route_matches_poisson_shortcut(service, lam):
    s = parse_distribution(service, 1.0)
    general = lcfsp_gg1(QueueSpec(Discipline.LCFS_PREEMPTIVE_1, EXP(lam), s), general=True)
    short = lcfsp_mg1(lam, s)
    assert general.average == pytest.approx(short.average, abs=1e-6)
    assert general.peak == pytest.approx(short.peak, abs=1e-6)


@pytest.mark.parametrize("arrival", ["det", "weibull:2", "weibull:0.5", "lognorm:1",
                                     "pareto:2.5"])
def test_general_route_matches_exponential_service_shortcut(arrival):
    x = parse_distribution(arrival, 0.6)
    general = lcfsp_gg1(QueueSpec(Discipline.LCFS_PREEMPTIVE_1, x, EXP(1.3)), general=True)
    short = lcfsp_gm1(x, 1.3)
    assert general.average == pytest.approx(short.average, abs=1e-6)
    assert general.peak == pytest.approx(short.peak, abs=1e-6)


def test_lcfsp_needs_finite_arrival_second_moment():
    spec = QueueSpec(Discipline.LCFS_PREEMPTIVE_1, parse_distribution("pareto:1.5", 0.5), EXP(1.0))
    with pytest.raises(InfiniteMomentError):
        analyze(spec)


# -- infinite servers --------------------------------------------------------

def mginf_oracle(lam: float, service: Distribution) -> float:
    """Exact M/G/inf average age for Poisson generation.

    The minimum delivery delay D exceeds t iff packet 1 is still in service
    and none of the Poisson arrivals in (0, t] has finished by t; the count
    of those is Poisson with mean lam * integral_0^t F_S.
    """
    def survival(t):
        inner, _ = integrate.quad(service.cdf, 0, t, limit=200, epsabs=1e-12)
        return service.tail(t) * math.exp(-lam * inner)

    top = service.mean() * 40 + 40 / lam
    pts = [service.mean()]
    if service.kind.value == "pareto":
        pts.append(service.pareto_scale)
    ed, _ = integrate.quad(survival, 0, top, points=pts, limit=400, epsabs=1e-10)
    return 1 / lam + ed


def test_gginf_deterministic_service_is_exact():
    spec = QueueSpec(Discipline.INFINITE_SERVER, EXP(0.5), DET(1.0))
    age = gginf_average(spec)
    assert age.method == "closed_form"
    assert age.average == 3.0
    assert age.error_estimate == 0.0


@pytest.mark.parametrize("service", ["exp", "pareto:1.5", "lognorm:1", "weibull:0.5"])
def test_gginf_matches_exact_mginf_oracle(service):
    s = parse_distribution(service, 1.0)
    spec = QueueSpec(Discipline.INFINITE_SERVER, EXP(0.6), s)
    age = gginf_average(spec, 400_000, rng(3))
    assert age.error_estimate > 0
    assert abs(age.average - mginf_oracle(0.6, s)) < 4 * age.error_estimate


def test_gginf_pareto_reaches_bound():
    spec = QueueSpec(Discipline.INFINITE_SERVER, EXP(0.9), parse_distribution("pareto:1.001", 1.0))
    assert gginf_average(spec, 200_000, rng(1)).average == pytest.approx(1 / 0.9, rel=0.03)


def test_gginf_seeded_reproducible():
    spec = QueueSpec(Discipline.INFINITE_SERVER, parse_distribution("weibull:2", 0.5), EXP(1.0))
    assert gginf_average(spec, 10_000, rng(5)) == gginf_average(spec, 10_000, rng(5))


def test_gginf_term_budget_flagged_and_widened():
    spec = QueueSpec(Discipline.INFINITE_SERVER, EXP(2.0), parse_distribution("lognorm:2", 0.1))
    full = gginf_average(spec, 5_000, rng(2))
    cut = gginf_average(spec, 5_000, rng(2), max_terms=1)
    assert "budget" in cut.note
    assert cut.error_estimate > full.error_estimate


def test_gginf_rejects_wrong_discipline():
    with pytest.raises(ParameterError):
        gginf_average(QueueSpec(Discipline.LCFS_PREEMPTIVE_1, EXP(1.0), EXP(1.0)))


# -- orderings as properties -------------------------------------------------

service_laws = st.one_of(
    st.builds(lambda a: f"pareto:{a:.4g}", st.floats(1.001, 5.0)),
    st.builds(lambda s: f"lognorm:{s:.4g}", st.floats(0.05, 8.0)),
    st.builds(lambda k: f"weibull:{k:.4g}", st.floats(0.2, 8.0)),
    st.just("exp"),
)
arrival_laws = st.one_of(
    st.builds(lambda k: f"weibull:{k:.4g}", st.floats(0.3, 8.0)),
    st.builds(lambda s: f"lognorm:{s:.4g}", st.floats(0.05, 2.0)),
    st.builds(lambda a: f"pareto:{a:.4g}", st.floats(2.05, 6.0)),
    st.just("exp"),
)


@settings(max_examples=80, deadline=None)
@given(service_laws, st.floats(0.05, 3.0))
def test_lcfsp_mg1_deterministic_service_is_worst(service, lam):
    det = lcfsp_mg1(lam, DET(1.0))
    other = lcfsp_mg1(lam, parse_distribution(service, 1.0))
    assert other.average <= det.average * (1 + 1e-12)
    assert other.peak <= det.peak * (1 + 1e-12)
    # and never below the 1/lam floor
    assert other.average >= 1 / lam * (1 - 1e-9)
    assert other.peak >= 1 / lam * (1 - 1e-9)


@settings(max_examples=60, deadline=None)
@given(arrival_laws, st.floats(0.05, 0.95))
def test_fcfs_gm1_periodic_arrivals_best(arrival, lam):
    det = fcfs_gm1(DET(lam), 1.0)
    other = fcfs_gm1(parse_distribution(arrival, lam), 1.0)
    assert det.average <= other.average * (1 + 1e-9)
    assert det.peak <= other.peak * (1 + 1e-9)
    bound = fcfs_gg1_bounds(lam, 1.0)
    assert bound.average <= det.average and bound.peak <= det.peak


@settings(max_examples=60, deadline=None)
@given(service_laws.filter(lambda s: not s.startswith("pareto")) | st.builds(
    lambda a: f"pareto:{a:.4g}", st.floats(2.05, 6.0)), st.floats(0.05, 0.95))
def test_fcfs_mg1_peak_deterministic_service_best(service, lam):
    s = parse_distribution(service, 1.0)
    assert fcfs_mg1_peak(lam, DET(1.0)) <= fcfs_mg1_peak(lam, s) * (1 + 1e-12)
    assert fcfs_mg1_average(lam, s) >= fcfs_dd1(lam, 1.0).average


@settings(max_examples=40, deadline=None)
@given(arrival_laws, st.floats(0.05, 2.0))
def test_lcfsp_gm1_periodic_arrivals_best(arrival, lam):
    det = lcfsp_gm1(DET(lam), 1.0)
    other = lcfsp_gm1(parse_distribution(arrival, lam), 1.0)
    assert det.average <= other.average * (1 + 1e-9)
    assert det.peak <= other.peak * (1 + 1e-9)


@settings(max_examples=30, deadline=None)
@given(arrival_laws, service_laws, st.floats(0.1, 2.0))
def test_lcfsp_gg1_bounds(arrival, service, lam):
    x = parse_distribution(arrival, lam)
    spec = QueueSpec(Discipline.LCFS_PREEMPTIVE_1, x, parse_distribution(service, 1.0))
    age = analyze(spec)
    assert age.peak >= x.mean() * (1 - 1e-9)
    assert age.average >= residual_mean(x) * (1 - 1e-9)


def test_analyze_dispatch():
    assert analyze(QueueSpec("fcfs", DET(0.5), DET(1.0))) == fcfs_dd1(0.5, 1.0)
    assert analyze(QueueSpec("fcfs", EXP(0.5), DET(1.0))).average == \
        fcfs_mg1_average(0.5, DET(1.0))
    assert analyze(QueueSpec("lcfsp", DET(0.5), EXP(1.0))) == lcfsp_gm1(DET(0.5), 1.0)
    assert analyze(QueueSpec("inf", EXP(0.5), DET(1.0))).average == 3.0
