"""Figure sweeps, ordering checks and the age-vs-delay table as CSV.

Every sweep returns a list of dataclass rows in deterministic grid order and
optionally writes them with :func:`write_csv` (header row, floats with six
significant digits, missing values as empty fields). Grid points are
evaluated on a thread pool sized by ``AOI_LAB_THREADS``.
"""
from __future__ import annotations

import csv
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from . import analytic as an
from .analytic import Discipline, QueueSpec
from .distributions import Distribution, parse_distribution
from .errors import ConfigError
from .simulator import SimConfig, run

__all__ = [
    "SweepRow", "CheckRow", "AgeDelayRow", "lambda_grid", "workers", "write_csv",
    "figure3", "figure4", "figure6", "theorem_suite", "age_vs_delay",
    "inversion_checks", "simulation_checks", "format_cell", "row_dict", "FIGURE3_SERVICES", "FIGURE4_SERVICES",
]

THREADS_ENV = "AOI_LAB_THREADS"
FIGURE3_SERVICES = ("det", "exp", "pareto:1.5", "pareto:1.1", "pareto:1.01", "pareto:1.001")
FIGURE4_SERVICES = ("det", "exp", "lognorm:1", "lognorm:2", "lognorm:4", "lognorm:50")
THEOREM_LAMBDAS = tuple(round(0.1 * k, 10) for k in range(1, 10))
ANALYTIC_TOL = 1e-9
CONSISTENCY_TOL = 1e-6
HEAVY_LAMBDA = 0.9
BOUND = "bound"


@dataclass
class SweepRow:
    scenario: str
    discipline: str
    arrival_spec: str
    service_spec: str
    lambda_: float
    mu: float
    param: float | None = None
    analytic_peak: float | None = None
    analytic_average: float | None = None
    sim_peak: float | None = None
    sim_average: float | None = None
    sim_delay_mean: float | None = None
    sim_delay_var: float | None = None
    ci_average: float | None = None
    ci_peak: float | None = None
    seed: int | None = None
    analytic_error: float | None = None


@dataclass
class CheckRow:
    """One ordering claim ``lhs <= rhs``; ``margin = rhs - lhs``."""

    theorem: str
    point: str
    lhs: float
    rhs: float
    margin: float
    passed: bool


@dataclass
class AgeDelayRow:
    discipline: str
    service_spec: str
    lambda_: float
    mu: float
    delay_mean: float | None
    delay_var: float | None
    average_age: float
    age_error: float | None
    sim_delay_mean: float | None = None
    sim_delay_var: float | None = None
    delay_rank: int | None = None
    age_rank: int | None = None


# -- plumbing ---------------------------------------------------------------

def _header(name: str) -> str:
    return "lambda" if name == "lambda_" else name


def format_cell(value) -> str:
    """CSV text for one value: 6 significant digits, empty for missing."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6g}"
    return str(value)


def row_dict(row) -> dict:
    """Row as an ordered dict keyed by CSV header names (raw values)."""
    return {_header(f.name): getattr(row, f.name) for f in fields(row)}


def write_csv(rows: Sequence, out=None, row_type: type | None = None) -> None:
    """Write dataclass rows to ``out`` (path, open file, or stdout if None)."""
    cls = row_type or (type(rows[0]) if rows else None)
    if cls is None:
        raise ConfigError("no rows and no row type to take the header from")
    names = [f.name for f in fields(cls)]
    if out is None or hasattr(out, "write"):
        _write(rows, names, out or sys.stdout)
    else:
        with open(out, "w", newline="") as fh:
            _write(rows, names, fh)


def _write(rows, names, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([_header(n) for n in names])
    for r in rows:
        w.writerow([format_cell(getattr(r, n)) for n in names])


def lambda_grid(start: float = 0.5, stop: float = 0.99, step: float = 0.01) -> list[float]:
    """Inclusive grid built from integer steps so endpoints are exact."""
    if not (start > 0 and step > 0 and stop >= start):
        raise ConfigError(f"bad lambda grid {start}:{stop}:{step}")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + k * step, 10) for k in range(n + 1)]


def workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _pmap(fn: Callable, items: Sequence) -> list:
    n = min(workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _mc_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _param(d: Distribution) -> float | None:
    return d.shape


def _close(a: float, b: float) -> bool:
    return abs(a - b) < 1e-9


def _simulate(spec: QueueSpec, packets: int, replications: int, seed: int):
    return run(SimConfig(spec, packet_budget=packets, seed=seed, replications=replications))


def _fill_sim(row: SweepRow, spec: QueueSpec, packets: int, replications: int, seed: int):
    res = _simulate(spec, packets, replications, seed)
    row.sim_peak, row.sim_average = res.peak_age, res.average_age
    row.sim_delay_mean, row.sim_delay_var = res.delay_mean, res.delay_variance
    row.ci_average, row.ci_peak = res.ci_halfwidth_average, res.ci_halfwidth_peak
    row.seed = seed


# -- figures ----------------------------------------------------------------

def _service_sweep(scenario: str, discipline: Discipline, services: Iterable[str],
                   lambdas: Sequence[float], mu: float, evaluate: Callable,
                   sim_at: Sequence[float], sim_packets: int, sim_replications: int,
                   seed: int) -> list[SweepRow]:
    services = list(services)
    points = [(i, j, s, lam) for i, s in enumerate(services) for j, lam in enumerate(lambdas)]

    def one(point):
        i, j, literal, lam = point
        spec = QueueSpec(discipline, Distribution.exponential(lam), parse_distribution(literal, mu))
        res = evaluate(spec, i, j)
        row = SweepRow(scenario, discipline.value, "exp", literal, lam, mu,
                       param=_param(spec.service), analytic_peak=res.peak,
                       analytic_average=res.average,
                       analytic_error=res.error_estimate if res.method == "monte_carlo" else None)
        if any(_close(lam, x) for x in sim_at):
            _fill_sim(row, spec, sim_packets, sim_replications, seed)
        return row

    rows = _pmap(one, points)
    # floor for Poisson generation: E[X] = E[X^2]/(2E[X]) = 1/lambda
    rows += [SweepRow(scenario, discipline.value, "exp", BOUND, lam, mu,
                      analytic_peak=1 / lam if discipline is not Discipline.INFINITE_SERVER else None,
                      analytic_average=1 / lam)
             for lam in lambdas]
    return rows


def _lcfsp_eval(spec, i, j):
    return an.lcfsp_mg1(spec.lam, spec.service)


def figure3(out=None, lambdas: Sequence[float] | None = None, mu: float = 1.0,
            services: Iterable[str] = FIGURE3_SERVICES, sim_at: Sequence[float] = (),
            sim_packets: int = 1_000_000, sim_replications: int = 5,
            seed: int = 0) -> list[SweepRow]:
    """Preemptive LCFS M/G/1 average age across the Pareto ladder."""
    rows = _service_sweep("figure3", Discipline.LCFS_PREEMPTIVE_1, services,
                          lambdas or lambda_grid(), mu, _lcfsp_eval,
                          sim_at, sim_packets, sim_replications, seed)
    if out is not None:
        write_csv(rows, out)
    return rows


def figure4(out=None, lambdas: Sequence[float] | None = None, mu: float = 1.0,
            services: Iterable[str] = FIGURE4_SERVICES, sim_at: Sequence[float] = (),
            sim_packets: int = 1_000_000, sim_replications: int = 5,
            seed: int = 0) -> list[SweepRow]:
    """Preemptive LCFS M/G/1 average age across the log-normal ladder."""
    rows = _service_sweep("figure4", Discipline.LCFS_PREEMPTIVE_1, services,
                          lambdas or lambda_grid(), mu, _lcfsp_eval,
                          sim_at, sim_packets, sim_replications, seed)
    if out is not None:
        write_csv(rows, out)
    return rows


def figure6(out=None, lambdas: Sequence[float] | None = None, mu: float = 1.0,
            services: Iterable[str] = FIGURE3_SERVICES, samples: int = an.GGINF_SAMPLES,
            sim_at: Sequence[float] = (), sim_packets: int = 1_000_000,
            sim_replications: int = 5, seed: int = 0) -> list[SweepRow]:
    """M/G/inf average age; ``analytic_error`` holds the Monte Carlo stderr."""
    def evaluate(spec, i, j):
        return an.gginf_average(spec, samples, _mc_rng(seed, i, j))

    rows = _service_sweep("figure6", Discipline.INFINITE_SERVER, services,
                          lambdas or lambda_grid(), mu, evaluate,
                          sim_at, sim_packets, sim_replications, seed)
    for r in rows:
        if r.service_spec != BOUND and r.analytic_error is not None:
            r.seed = seed
    if out is not None:
        write_csv(rows, out)
    return rows


# -- ordering checks --------------------------------------------------------

def _check(theorem: str, point: str, lhs: float, rhs: float,
           tol: float = ANALYTIC_TOL) -> CheckRow:
    margin = rhs - lhs
    ok = bool(math.isfinite(lhs) or math.isinf(rhs)) and margin >= -tol * max(1.0, abs(rhs))
    if math.isinf(lhs) and math.isinf(rhs):
        ok, margin = lhs <= rhs, 0.0
    return CheckRow(theorem, point, lhs, rhs, margin, ok)


def _pt(**kw) -> str:
    return ";".join(f"{k}={format_cell(v)}" for k, v in kw.items())


def _fcfs_checks(lambdas, mu):
    rows = []
    pairs = [("exp", "exp"), ("exp", "det"), ("det", "exp"), ("exp", "lognorm:1"),
             ("exp", "weibull:0.5"), ("exp", "weibull:2"), ("weibull:2", "exp"),
             ("lognorm:1", "exp"), ("weibull:0.5", "exp")]
    for lam in lambdas:
        bound = an.fcfs_gg1_bounds(lam, mu)
        for a, s in pairs:
            spec = QueueSpec(Discipline.FCFS_1, parse_distribution(a, lam), parse_distribution(s, mu))
            age = an.analyze(spec)
            for metric in ("peak", "average"):
                rows.append(_check("fcfs_periodic_deterministic_lower_bound",
                                   _pt(**{"lambda": lam, "mu": mu, "arrival": a, "service": s,
                                          "metric": metric}),
                                   getattr(bound, metric), getattr(age, metric)))
        for other in ("exp", "weibull:2", "weibull:0.5", "lognorm:1"):
            det = an.fcfs_gm1(Distribution.deterministic(lam), mu)
            alt = an.fcfs_gm1(parse_distribution(other, lam), mu)
            for metric in ("peak", "average"):
                rows.append(_check("fcfs_gm1_periodic_arrivals_best",
                                   _pt(**{"lambda": lam, "mu": mu, "arrival": other,
                                          "metric": metric}),
                                   getattr(det, metric), getattr(alt, metric)))
        det_peak = an.fcfs_mg1_peak(lam, Distribution.deterministic(mu))
        for other in ("exp", "lognorm:1", "weibull:0.5", "weibull:2", "pareto:2.5"):
            rows.append(_check("fcfs_mg1_peak_deterministic_service_best",
                               _pt(**{"lambda": lam, "mu": mu, "service": other}),
                               det_peak, an.fcfs_mg1_peak(lam, parse_distribution(other, mu))))
    return rows


def _fcfs_sim_checks(mu, packets, replications, seed):
    rows = []
    lam = 0.5
    bound = an.fcfs_gg1_bounds(lam, mu)
    for a, s in (("exp", "exp"), ("weibull:2", "lognorm:1"), ("det", "weibull:0.5")):
        spec = QueueSpec(Discipline.FCFS_1, parse_distribution(a, lam), parse_distribution(s, mu))
        res = _simulate(spec, packets, replications, seed)
        for metric, value, ci in (("peak", res.peak_age, res.ci_halfwidth_peak),
                                  ("average", res.average_age, res.ci_halfwidth_average)):
            rows.append(_check("fcfs_periodic_deterministic_lower_bound",
                               _pt(**{"lambda": lam, "mu": mu, "arrival": a, "service": s,
                                      "metric": metric, "source": "simulation"}),
                               getattr(bound, metric), value - ci))
    return rows


def _lcfsp_checks(lambdas, mu):
    rows = []
    others = ("exp", "pareto:1.5", "pareto:1.1", "lognorm:1", "weibull:0.5", "weibull:2")
    for lam in lambdas:
        det = an.lcfsp_mg1(lam, Distribution.deterministic(mu))
        for other in others:
            alt = an.lcfsp_mg1(lam, parse_distribution(other, mu))
            for metric in ("peak", "average"):
                rows.append(_check("lcfsp_mg1_deterministic_service_worst",
                                   _pt(**{"lambda": lam, "mu": mu, "service": other,
                                          "metric": metric}),
                                   getattr(alt, metric), getattr(det, metric)))
        det = an.lcfsp_gm1(Distribution.deterministic(lam), mu)
        for other in ("exp", "weibull:2", "weibull:0.5", "lognorm:1"):
            alt = an.lcfsp_gm1(parse_distribution(other, lam), mu)
            for metric in ("peak", "average"):
                rows.append(_check("lcfsp_gm1_periodic_arrivals_best",
                                   _pt(**{"lambda": lam, "mu": mu, "arrival": other,
                                          "metric": metric}),
                                   getattr(det, metric), getattr(alt, metric)))
        for a in ("exp", "det", "weibull:2"):
            arrival = parse_distribution(a, lam)
            for s in ("det", "exp", "pareto:1.5", "lognorm:1", "weibull:0.5"):
                if a == "det" and s == "det":
                    continue
                spec = QueueSpec(Discipline.LCFS_PREEMPTIVE_1, arrival, parse_distribution(s, mu))
                age = an.analyze(spec)
                where = {"lambda": lam, "mu": mu, "arrival": a, "service": s}
                rows.append(_check("lcfsp_peak_above_mean_gap", _pt(**where, metric="peak"),
                                   arrival.mean(), age.peak))
                rows.append(_check("lcfsp_average_above_residual", _pt(**where, metric="average"),
                                   an.residual_mean(arrival), age.average))
    return rows


def _consistency_checks(lambdas, mu):
    rows = []
    for lam in lambdas:
        for s in ("det", "exp", "pareto:1.5", "lognorm:1", "weibull:0.5"):
            srv = parse_distribution(s, mu)
            spec = QueueSpec(Discipline.LCFS_PREEMPTIVE_1, Distribution.exponential(lam), srv)
            general, short = an.lcfsp_gg1(spec, general=True), an.lcfsp_mg1(lam, srv)
            for metric in ("peak", "average"):
                rows.append(_check("lcfsp_general_matches_poisson_shortcut",
                                   _pt(**{"lambda": lam, "mu": mu, "service": s, "metric": metric}),
                                   abs(getattr(general, metric) - getattr(short, metric)),
                                   CONSISTENCY_TOL, tol=0.0))
        for a in ("det", "weibull:2", "weibull:0.5", "lognorm:1"):
            arr = parse_distribution(a, lam)
            spec = QueueSpec(Discipline.LCFS_PREEMPTIVE_1, arr, Distribution.exponential(mu))
            general, short = an.lcfsp_gg1(spec, general=True), an.lcfsp_gm1(arr, mu)
            for metric in ("peak", "average"):
                rows.append(_check("lcfsp_general_matches_exponential_service_shortcut",
                                   _pt(**{"lambda": lam, "mu": mu, "arrival": a, "metric": metric}),
                                   abs(getattr(general, metric) - getattr(short, metric)),
                                   CONSISTENCY_TOL, tol=0.0))
    return rows


def _ladder_checks(mu, samples, seed):
    rows = []
    lam = HEAVY_LAMBDA
    floor = 1 / lam
    for name, ladder in (("pareto", ("pareto:1.5", "pareto:1.1", "pareto:1.01", "pareto:1.001")),
                         ("lognorm", ("lognorm:1", "lognorm:2", "lognorm:4", "lognorm:50"))):
        ages = [an.lcfsp_mg1(lam, parse_distribution(s, mu)).average for s in ladder]
        for prev, nxt, a0, a1 in zip(ladder, ladder[1:], ages, ages[1:]):
            rows.append(_check("lcfsp_heavy_tail_ladder_monotone",
                               _pt(**{"lambda": lam, "mu": mu, "from": prev, "to": nxt}), a1, a0))
        rows.append(_check("lcfsp_heavy_tail_reaches_bound",
                           _pt(**{"lambda": lam, "mu": mu, "service": ladder[-1],
                                  "metric": "relative_gap"}),
                           (ages[-1] - floor) / floor, 0.01, tol=0.0))
        if name == "pareto":
            # the looser 2% tolerance quoted for the curves
            rows.append(_check("lcfsp_heavy_tail_within_2pct",
                               _pt(**{"lambda": lam, "mu": mu, "service": ladder[-1]}),
                               abs(ages[-1] - floor) / floor, 0.02, tol=0.0))
    ladder = ("pareto:1.5", "pareto:1.1", "pareto:1.01", "pareto:1.001")
    res = [an.gginf_average(QueueSpec(Discipline.INFINITE_SERVER, Distribution.exponential(lam),
                                      parse_distribution(s, mu)), samples, _mc_rng(seed, 90, k))
           for k, s in enumerate(ladder)]
    for prev, nxt, r0, r1 in zip(ladder, ladder[1:], res, res[1:]):
        rows.append(_check("gginf_heavy_tail_ladder_monotone",
                           _pt(**{"lambda": lam, "mu": mu, "from": prev, "to": nxt}),
                           r1.average - 3 * (r0.error_estimate + r1.error_estimate), r0.average))
    rows.append(_check("gginf_heavy_tail_within_3pct",
                       _pt(**{"lambda": lam, "mu": mu, "service": ladder[-1]}),
                       abs(res[-1].average - floor) / floor, 0.03, tol=0.0))
    return rows


def _gginf_checks(lambdas, mu, samples, seed):
    others = ("exp", "pareto:1.5", "lognorm:1", "weibull:0.5")
    points = [(i, lam) for i, lam in enumerate(lambdas)]

    def one(point):
        i, lam = point
        arr = Distribution.exponential(lam)
        det = an.gginf_average(QueueSpec(Discipline.INFINITE_SERVER, arr,
                                         Distribution.deterministic(mu)))
        out = []
        for k, s in enumerate(others):
            r = an.gginf_average(QueueSpec(Discipline.INFINITE_SERVER, arr,
                                           parse_distribution(s, mu)),
                                 samples, _mc_rng(seed, i, k))
            where = {"lambda": lam, "mu": mu, "service": s}
            out.append(_check("gginf_deterministic_service_worst", _pt(**where),
                              r.average + 3 * r.error_estimate, det.average))
            out.append(_check("gginf_above_residual", _pt(**where),
                              an.residual_mean(arr) - 3 * r.error_estimate, r.average))
        return out

    return [row for rows in _pmap(one, points) for row in rows]


def theorem_suite(out=None, lambdas: Sequence[float] = THEOREM_LAMBDAS, mu: float = 1.0,
                  samples: int = an.GGINF_SAMPLES, sim_packets: int = 200_000,
                  sim_replications: int = 5, seed: int = 0) -> list[CheckRow]:
    """Evaluate every ordering and bound claim on the standard grid.

    ``sim_packets=0`` skips the simulated FCFS lower-bound rows.
    """
    rows = _fcfs_checks(lambdas, mu)
    if sim_packets:
        rows += _fcfs_sim_checks(mu, sim_packets, sim_replications, seed)
    rows += _lcfsp_checks(lambdas, mu)
    rows += _consistency_checks(lambdas, mu)
    rows += _gginf_checks(lambdas, mu, samples, seed)
    rows += _ladder_checks(mu, samples, seed)
    rows += inversion_checks(age_vs_delay(samples=samples, seed=seed))
    if out is not None:
        write_csv(rows, out, CheckRow)
    return rows


# -- age vs delay -----------------------------------------------------------

AGE_DELAY_SERVICES = FIGURE3_SERVICES


def _dense_rank(values: list[float], reverse: bool = False) -> list[int | None]:
    known = sorted({v for v in values if v is not None}, reverse=reverse)
    return [None if v is None else known.index(v) + 1 for v in values]


def age_vs_delay(out=None, lam: float = 0.5, mu: float = 1.0,
                 services: Iterable[str] = AGE_DELAY_SERVICES,
                 samples: int = an.GGINF_SAMPLES, sim_packets: int = 0,
                 sim_replications: int = 5, seed: int = 0) -> list[AgeDelayRow]:
    """Delay and average age side by side for LCFSp M/G/1 and M/G/inf.

    ``delay_rank`` orders by mean delay for LCFSp and by delay variance for
    the infinite-server system (its mean delay is E[S] for every service);
    1 is the smallest. ``age_rank`` is 1 for the largest average age.
    """
    services = list(services)
    arrival = Distribution.exponential(lam)
    rows: list[AgeDelayRow] = []
    for k, s in enumerate(services):
        srv = parse_distribution(s, mu)
        age = an.lcfsp_mg1(lam, srv)
        rows.append(AgeDelayRow(Discipline.LCFS_PREEMPTIVE_1.value, s, lam, mu,
                                an.delay_lcfsp_mg1(lam, srv), None, age.average, None))
    for k, s in enumerate(services):
        srv = parse_distribution(s, mu)
        age = an.gginf_average(QueueSpec(Discipline.INFINITE_SERVER, arrival, srv),
                               samples, _mc_rng(seed, 70, k))
        rows.append(AgeDelayRow(Discipline.INFINITE_SERVER.value, s, lam, mu,
                                srv.mean(), srv.variance(), age.average, age.error_estimate))
    if sim_packets:
        for r in rows:
            spec = QueueSpec(Discipline(r.discipline), arrival, parse_distribution(r.service_spec, mu))
            res = _simulate(spec, sim_packets, sim_replications, seed)
            r.sim_delay_mean, r.sim_delay_var = res.delay_mean, res.delay_variance
    for disc, key in ((Discipline.LCFS_PREEMPTIVE_1.value, "delay_mean"),
                      (Discipline.INFINITE_SERVER.value, "delay_var")):
        group = [r for r in rows if r.discipline == disc]
        for r, d, a in zip(group, _dense_rank([getattr(r, key) for r in group]),
                           _dense_rank([r.average_age for r in group], reverse=True)):
            r.delay_rank, r.age_rank = d, a
    if out is not None:
        write_csv(rows, out, AgeDelayRow)
    return rows


def inversion_checks(rows: Sequence[AgeDelayRow]) -> list[CheckRow]:
    """Deterministic service is delay-best and age-worst in each group."""
    out = []
    for disc, key in ((Discipline.LCFS_PREEMPTIVE_1.value, "delay_mean"),
                      (Discipline.INFINITE_SERVER.value, "delay_var")):
        group = [r for r in rows if r.discipline == disc]
        det = next((r for r in group if r.service_spec == "det"), None)
        if det is None:
            continue
        for r in group:
            if r is det:
                continue
            where = {"discipline": disc, "lambda": r.lambda_, "mu": r.mu,
                     "service": r.service_spec}
            out.append(_check("age_delay_inversion_delay", _pt(**where, metric=key),
                              getattr(det, key), getattr(r, key)))
            slack = 3 * (r.age_error or 0.0)
            out.append(_check("age_delay_inversion_age", _pt(**where, metric="average_age"),
                              r.average_age + slack, det.average_age))
    return out


# -- analytic vs simulation -------------------------------------------------

SIM_CI_MULTIPLE = 3.0


def simulation_checks(packets: int = 200_000, replications: int = 10, seed: int = 0,
                      lam: float = 0.5, mu: float = 1.0,
                      samples: int = an.GGINF_SAMPLES) -> list[CheckRow]:
    """|simulated - analytic| against a tolerance of three times the 95% CI
    half-width (plus three Monte Carlo standard errors where the analytic
    side is itself Monte Carlo). Rows use lhs = |difference|, rhs = tolerance."""
    cases = [
        (Discipline.FCFS_1, "exp", "exp"), (Discipline.FCFS_1, "exp", "det"),
        (Discipline.FCFS_1, "det", "exp"), (Discipline.FCFS_1, "exp", "lognorm:1"),
        (Discipline.LCFS_PREEMPTIVE_1, "exp", "exp"), (Discipline.LCFS_PREEMPTIVE_1, "exp", "det"),
        (Discipline.LCFS_PREEMPTIVE_1, "det", "exp"),
        (Discipline.LCFS_PREEMPTIVE_1, "exp", "pareto:1.5"),
        (Discipline.LCFS_PREEMPTIVE_1, "weibull:2", "lognorm:1"),
        (Discipline.INFINITE_SERVER, "exp", "exp"), (Discipline.INFINITE_SERVER, "exp", "det"),
        (Discipline.INFINITE_SERVER, "exp", "weibull:0.5"),
    ]

    def one(case):
        idx, (disc, a, s) = case
        spec = QueueSpec(disc, parse_distribution(a, lam), parse_distribution(s, mu))
        ref = an.analyze(spec, samples, _mc_rng(seed, 50, idx))
        res = _simulate(spec, packets, replications, seed)
        where = dict(discipline=disc.value, arrival=a, service=s, **{"lambda": lam, "mu": mu})
        out = []
        mc = 3 * ref.error_estimate if ref.method == "monte_carlo" else 0.0
        pairs = [("average", res.average_age, ref.average, res.ci_halfwidth_average)]
        if ref.peak is not None:
            pairs.append(("peak", res.peak_age, ref.peak, res.ci_halfwidth_peak))
        for metric, sim, exact, ci in pairs:
            out.append(_check("simulation_matches_analytic", _pt(**where, metric=metric),
                              abs(sim - exact), SIM_CI_MULTIPLE * ci + mc, tol=1e-12))
        if disc is Discipline.FCFS_1 and spec.arrival.is_exponential:
            exact = an.delay_fcfs_mg1(lam, spec.service)
            tol = SIM_CI_MULTIPLE * res.ci_halfwidth_delay
            out.append(_check("simulation_matches_analytic", _pt(**where, metric="delay_mean"),
                              abs(res.delay_mean - exact), tol, tol=1e-12))
        if disc is Discipline.LCFS_PREEMPTIVE_1:
            ce = an.cross_expectations(spec.arrival, spec.service)
            out.append(_check("simulation_matches_analytic",
                              _pt(**where, metric="informative_fraction"),
                              abs(res.informative_fraction - ce.p_served), 0.01, tol=1e-12))
            tol = SIM_CI_MULTIPLE * res.ci_halfwidth_delay
            out.append(_check("simulation_matches_analytic",
                              _pt(**where, metric="delay_mean_completed"),
                              abs(res.delay_mean - ce.served_service / ce.p_served), tol,
                              tol=1e-12))
        return out

    return [row for rows in _pmap(one, list(enumerate(cases))) for row in rows]

