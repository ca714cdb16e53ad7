"""Seeded simulation of the age sawtooth for FCFS, preemptive LCFS and
infinite-server systems.

A sample path is a renewal sequence of generation times ``t_i`` (packet i is
generated at X_1 + ... + X_i) and i.i.d. service requirements ``S_i``.
Departure times follow from the discipline:

* ``fcfs``  -- single server, head-of-line service, order preserved.
* ``lcfsp`` -- a new packet displaces the one in service, which is discarded;
  packet i therefore completes iff S_i < X_{i+1}.
* ``inf``   -- every packet gets its own server and leaves at t_i + S_i.

The destination keeps the generation time U of the freshest delivered packet
and the age is A(t) = t - U. A departure is informative iff it carries a
generation time newer than U. The age before the first delivery is measured
from time 0.

Two engines produce departures: a vectorized one used by :func:`run` and a
heap-driven event loop used by :func:`trace` (and available to ``run`` with
``engine="event"``). Both feed the same exact sawtooth integration.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np
from scipy import stats

from .analytic import Discipline, QueueSpec
from .errors import ConfigError

__all__ = ["SimConfig", "SimResult", "Path", "TraceEvent", "stream", "draw_path",
           "departures", "event_departures", "Sawtooth", "run", "trace",
           "trace_path", "write_trace"]

ARRIVAL, SERVICE = 0, 1
CI_LEVEL = 0.95
BATCHES = 10
MIN_PEAKS = 2


def stream(seed: int, replication: int, role: int) -> np.random.Generator:
    """Independent generator keyed by (seed, replication, role)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replication, role))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class SimConfig:
    spec: QueueSpec
    horizon: float | None = None
    packet_budget: int | None = None
    warmup_fraction: float = 0.1
    seed: int = 0
    replications: int = 1

    def __post_init__(self):
        if (self.horizon is None) == (self.packet_budget is None):
            raise ConfigError("set exactly one of horizon and packet_budget")
        if self.horizon is not None and not self.horizon > 0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if self.packet_budget is not None and self.packet_budget < 2:
            raise ConfigError(f"packet budget must be at least 2, got {self.packet_budget}")
        if not 0 <= self.warmup_fraction < 0.5:
            raise ConfigError(f"warmup fraction must lie in [0, 0.5), got {self.warmup_fraction}")
        if self.replications < 1:
            raise ConfigError("need at least one replication")


@dataclass
class SimResult:
    average_age: float
    peak_age: float
    delay_mean: float
    delay_variance: float
    informative_fraction: float
    preemption_count: int
    ci_halfwidth_average: float
    ci_halfwidth_peak: float
    seed: int
    ci_halfwidth_delay: float = math.nan
    replications: int = 1
    packets: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class Path:
    """One realized sample path."""

    gen: np.ndarray
    service: np.ndarray
    dep: np.ndarray = field(default=None)          # nan where discarded
    informative: np.ndarray = field(default=None)


def draw_path(spec: QueueSpec, seed: int, replication: int,
              horizon: float | None = None, packets: int | None = None) -> Path:
    """Draw generation and service times; with ``horizon`` the path runs one
    packet past it so every inter-generation gap inside it is known."""
    arr_rng = stream(seed, replication, ARRIVAL)
    srv_rng = stream(seed, replication, SERVICE)
    if packets is not None:
        gen = np.cumsum(spec.arrival.sample(arr_rng, packets))
    else:
        chunk = int(horizon * spec.lam * 1.05) + 64
        parts, last = [], 0.0
        while last <= horizon:
            part = last + np.cumsum(spec.arrival.sample(arr_rng, chunk))
            parts.append(part)
            last = part[-1]
        gen = np.concatenate(parts)
        gen = gen[:np.searchsorted(gen, horizon, side="right") + 1]
    return Path(gen, spec.service.sample(srv_rng, gen.size))


def departures(discipline: Discipline, gen: np.ndarray, service: np.ndarray):
    """Vectorized departure times (nan if discarded) and informative flags."""
    discipline = Discipline(discipline)
    n = gen.size
    if discipline is Discipline.FCFS_1:
        # D_i = max(D_{i-1}, t_i) + S_i unrolled: C_i + max_{j<=i}(t_j - C_{j-1})
        c = np.cumsum(service)
        dep = c + np.maximum.accumulate(gen - (c - service))
        return dep, np.ones(n, dtype=bool)
    if discipline is Discipline.LCFS_PREEMPTIVE_1:
        # absolute times, not S < gap: a generation tying with a finish preempts it
        finish = gen + service
        done = finish < np.append(gen[1:], np.inf)
        dep = np.where(done, finish, np.nan)
        return dep, done
    dep = gen + service
    later_min = np.append(np.minimum.accumulate(dep[::-1])[::-1][1:], np.inf)
    return dep, dep < later_min


@dataclass(frozen=True)
class TraceEvent:
    time: float
    event: str          # generate | depart | preempt | age_drop
    packet: int
    age_before: float
    age_after: float


def event_departures(discipline: Discipline, gen: np.ndarray, service: np.ndarray,
                     max_events: int | None = None, record_log: bool = True):
    """Heap-driven event loop.

    Returns ``(dep, informative, log)``. With ``record_log`` the loop stops
    once ``log`` holds ``max_events`` :class:`TraceEvent` records; without it
    nothing is logged and the whole path is processed.
    """
    discipline = Discipline(discipline)
    n = gen.size
    dep = np.full(n, np.nan)
    informative = np.zeros(n, dtype=bool)
    log: list[TraceEvent] = []
    # (time, priority, tiebreak, kind, packet); generations sort before
    # departures at equal times, fresher departures before older ones
    heap = [(float(gen[i]), 0, i, "generate", i) for i in range(n)]
    heapq.heapify(heap)
    fresh = 0.0                 # generation time of the freshest delivery
    queue: list[int] = []       # FCFS waiting line
    q_head = 0
    in_service = -1

    def record(t, kind, pid, before, after):
        if record_log and (max_events is None or len(log) < max_events):
            log.append(TraceEvent(t, kind, pid, before, after))

    def start(t, pid):
        nonlocal in_service
        in_service = pid
        heapq.heappush(heap, (t + float(service[pid]), 1, -pid, "depart", pid))

    while heap:
        if record_log and max_events is not None and len(log) >= max_events:
            break
        t, _, _, kind, pid = heapq.heappop(heap)
        age = t - fresh
        if kind == "generate":
            record(t, "generate", pid, age, age)
            if discipline is Discipline.INFINITE_SERVER:
                start(t, pid)
            elif discipline is Discipline.LCFS_PREEMPTIVE_1:
                if in_service >= 0:
                    record(t, "preempt", in_service, age, age)
                start(t, pid)
            elif in_service < 0:
                start(t, pid)
            else:
                queue.append(pid)
            continue
        if discipline is Discipline.LCFS_PREEMPTIVE_1 and pid != in_service:
            continue            # departure of a displaced packet never happens
        dep[pid] = t
        record(t, "depart", pid, age, age)
        if gen[pid] > fresh:
            informative[pid] = True
            fresh = float(gen[pid])
            record(t, "age_drop", pid, age, t - fresh)
        if discipline is not Discipline.INFINITE_SERVER:
            in_service = -1
            if discipline is Discipline.FCFS_1 and q_head < len(queue):
                q_head += 1
                start(t, queue[q_head - 1])
    return dep, informative, log


class Sawtooth:
    """Exact piecewise-linear age curve built from informative deliveries."""

    def __init__(self, gen: np.ndarray, dep: np.ndarray, informative: np.ndarray):
        mask = informative & ~np.isnan(dep)
        order = np.argsort(dep[mask], kind="stable")
        self.drop_times = np.concatenate(([0.0], dep[mask][order]))
        self.fresh_gen = np.concatenate(([0.0], gen[mask][order]))

    def area(self, t0: float, t1: float) -> float:
        """Integral of A(t) over [t0, t1]."""
        starts = np.clip(self.drop_times, t0, t1)
        ends = np.clip(np.append(self.drop_times[1:], np.inf), t0, t1)
        return float(np.sum((ends - starts) * (0.5 * (ends + starts) - self.fresh_gen)))

    def peaks(self, t0: float, t1: float) -> np.ndarray:
        """Age just before each drop falling in (t0, t1]."""
        times = self.drop_times[1:]
        sel = (times > t0) & (times <= t1)
        return times[sel] - self.fresh_gen[:-1][sel]

    def age_at(self, t: float) -> float:
        k = np.searchsorted(self.drop_times, t, side="right") - 1
        return t - float(self.fresh_gen[k])


@dataclass
class _RepStats:
    area: float
    length: float
    peak_sum: float
    peak_count: int
    delays: np.ndarray
    informative: int
    generated: int
    preempted: int
    batch_avg: np.ndarray
    batch_peak: np.ndarray
    batch_delay: np.ndarray


def _replication(config: SimConfig, rep: int, engine: str) -> _RepStats:
    spec = config.spec
    path = draw_path(spec, config.seed, rep, config.horizon, config.packet_budget)
    if engine == "event":
        dep, info, _ = event_departures(spec.discipline, path.gen, path.service,
                                       record_log=False)
    elif engine == "vector":
        dep, info = departures(spec.discipline, path.gen, path.service)
    else:
        raise ConfigError(f"unknown engine {engine!r}")
    t1 = config.horizon if config.horizon is not None else float(path.gen[-1])
    t0 = config.warmup_fraction * t1
    saw = Sawtooth(path.gen, dep, info)
    peaks = saw.peaks(t0, t1)
    if peaks.size < MIN_PEAKS:
        raise ConfigError(f"only {peaks.size} age drops after warmup; "
                          "increase the horizon or packet budget")
    in_window = (path.gen > t0) & (path.gen <= t1)
    served = in_window & ~np.isnan(dep)
    edges = np.linspace(t0, t1, BATCHES + 1)
    batch_avg = np.array([saw.area(a, b) / (b - a) for a, b in zip(edges[:-1], edges[1:])])
    batch_peak = np.array([np.mean(p) if p.size else np.nan
                           for p in (saw.peaks(a, b) for a, b in zip(edges[:-1], edges[1:]))])
    delays = dep[served] - path.gen[served]
    batch_delay = np.array([c.mean() if c.size else np.nan
                            for c in np.array_split(delays, BATCHES)])
    return _RepStats(
        area=saw.area(t0, t1), length=t1 - t0,
        peak_sum=float(peaks.sum()), peak_count=int(peaks.size),
        delays=delays,
        informative=int(np.count_nonzero(info & in_window)),
        generated=int(np.count_nonzero(in_window)),
        preempted=int(np.count_nonzero(in_window & np.isnan(dep))),
        batch_avg=batch_avg, batch_peak=batch_peak, batch_delay=batch_delay,
    )


def _halfwidth(values: np.ndarray) -> float:
    values = values[np.isfinite(values)]
    if values.size < 2:
        return math.nan
    q = stats.t.ppf(0.5 + CI_LEVEL / 2, values.size - 1)
    return float(q * values.std(ddof=1) / math.sqrt(values.size))


def run(config: SimConfig, engine: str = "vector") -> SimResult:
    """Simulate every replication and pool the estimators.

    Average age is total area over total observed time and peak age the
    mean of all observed peaks (ratios of sums). Confidence half-widths use
    the spread of per-replication estimates, or batch means within the
    single run when ``replications == 1``.
    """
    reps = [_replication(config, r, engine) for r in range(config.replications)]
    area = sum(r.area for r in reps)
    length = sum(r.length for r in reps)
    peak_sum = sum(r.peak_sum for r in reps)
    peak_count = sum(r.peak_count for r in reps)
    delays = np.concatenate([r.delays for r in reps])
    if len(reps) > 1:
        ci_avg = _halfwidth(np.array([r.area / r.length for r in reps]))
        ci_peak = _halfwidth(np.array([r.peak_sum / r.peak_count for r in reps]))
        ci_delay = _halfwidth(np.array([r.delays.mean() if r.delays.size else np.nan
                                        for r in reps]))
    else:
        ci_avg = _halfwidth(reps[0].batch_avg)
        ci_peak = _halfwidth(reps[0].batch_peak)
        ci_delay = _halfwidth(reps[0].batch_delay)
    generated = sum(r.generated for r in reps)
    return SimResult(
        average_age=area / length,
        peak_age=peak_sum / peak_count,
        delay_mean=float(delays.mean()) if delays.size else math.nan,
        delay_variance=float(delays.var(ddof=1)) if delays.size > 1 else math.nan,
        informative_fraction=sum(r.informative for r in reps) / generated,
        preemption_count=sum(r.preempted for r in reps),
        ci_halfwidth_average=ci_avg,
        ci_halfwidth_peak=ci_peak,
        seed=config.seed,
        ci_halfwidth_delay=ci_delay,
        replications=config.replications,
        packets=generated,
    )


def trace_path(discipline: Discipline, interarrivals: Iterable[float],
               services: Iterable[float], max_events: int | None = None) -> list[TraceEvent]:
    """Event log for explicit inter-generation gaps and service times."""
    gen = np.cumsum(np.asarray(list(interarrivals), dtype=float))
    service = np.asarray(list(services), dtype=float)
    if gen.size != service.size:
        raise ConfigError("need one service time per generated packet")
    return event_departures(discipline, gen, service, max_events)[2]


def trace(config: SimConfig, max_events: int = 50) -> list[TraceEvent]:
    """Event log of the first ``max_events`` records of replication 0."""
    path = draw_path(config.spec, config.seed, 0, config.horizon, config.packet_budget)
    return event_departures(config.spec.discipline, path.gen, path.service, max_events)[2]


def write_trace(events: Iterable[TraceEvent], fh) -> None:
    """Write one JSON object per line: time, event, id, age_before, age_after."""
    for ev in events:
        fh.write(json.dumps({"time": ev.time, "event": ev.event, "id": ev.packet,
                             "age_before": ev.age_before, "age_after": ev.age_after}) + "\n")
