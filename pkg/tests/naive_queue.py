"""Quadratic-time reference queue: every quantity recomputed from the full history."""
import math

import numpy as np

from aoi_lab.analytic import Discipline


def naive_departures(discipline, gen, service):
    """Departure times straight from each discipline's rule (nan if discarded)."""
    n = gen.size
    dep = np.full(n, np.nan)
    if discipline is Discipline.FCFS_1:
        free = 0.0
        for i in range(n):
            free = max(free, gen[i]) + service[i]
            dep[i] = free
    elif discipline is Discipline.LCFS_PREEMPTIVE_1:
        for i in range(n):
            end = gen[i] + service[i]
            # discarded if any later packet is generated by the time it would finish
            if not any(gen[j] <= end for j in range(i + 1, n)):
                dep[i] = end
    else:
        dep = gen + service
    return dep


def naive_age(gen, dep, t):
    """A(t) = t - max{t_i : packet i delivered by t}, or t before any delivery."""
    delivered = [g for g, d in zip(gen, dep) if not math.isnan(d) and d <= t]
    return t - max(delivered, default=0.0)


def naive_area_and_peaks(gen, dep, t0, t1):
    """Area under A(t) on [t0, t1] and the age just before each drop in (t0, t1]."""
    times = sorted({d for d in dep if not math.isnan(d) and t0 < d <= t1} | {t0, t1})
    area = 0.0
    for a, b in zip(times, times[1:]):
        # A is linear with slope 1 on (a, b]; its value just after a
        start = naive_age(gen, dep, a)
        area += (b - a) * (start + 0.5 * (b - a))
    peaks = []
    for d in sorted(d for d in dep if not math.isnan(d) and t0 < d <= t1):
        before = _age_before(gen, dep, d)
        after = naive_age(gen, dep, d)
        if after < before:
            peaks.append(before)
    return area, np.array(peaks)


def _age_before(gen, dep, t):
    delivered = [g for g, d in zip(gen, dep) if not math.isnan(d) and d < t]
    return t - max(delivered, default=0.0)
