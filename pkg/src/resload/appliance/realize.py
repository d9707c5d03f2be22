"""Turning task executions into appliance power segments."""

from dataclasses import dataclass

import numpy as np

from .models import DEFAULT_BAND_EDGES, Cycle, Fractional, band_index


@dataclass(frozen=True)
class PowerSegment:
    """Constant power over minutes ``[start, end)``."""

    appliance: str
    start: int
    end: int
    power: float

    @property
    def minutes(self):
        return self.end - self.start

    @property
    def energy_wh(self):
        return self.power * self.minutes / 60.0


@dataclass(frozen=True)
class Activation:
    appliance: str
    task_code: str
    probability: float
    drawn: float

    @property
    def active(self):
        return self.drawn < self.probability


def draw_activations(task_code, clock, models, rng, band_edges=DEFAULT_BAND_EDGES):
    """One independent draw per model for a task starting at ``clock``.

    Models without a PU entry for the task are skipped without consuming a
    draw. Returns the activated models' :class:`Activation` records.
    """
    band = band_index(clock.minute_of_day, band_edges)
    out = []
    for m in models:
        if task_code not in m.pu.entries:
            continue
        p = m.pu.prob(task_code, clock.season, clock.day_type, band)
        act = Activation(m.name, task_code, p, float(rng.random()))
        if act.active:
            out.append(act)
    return out


def _runs(minutes):
    """Split sorted minutes into contiguous ``(start, end)`` runs."""
    minutes = np.asarray(minutes, dtype=np.int64)
    if minutes.size == 0:
        return []
    cut = np.flatnonzero(np.diff(minutes) != 1) + 1
    starts = minutes[np.r_[0, cut]]
    ends = minutes[np.r_[cut - 1, minutes.size - 1]] + 1
    return list(zip(starts.tolist(), ends.tolist()))


def realize_forced(minutes, power, appliance=""):
    """Constant power over every executed minute of the task.

    ``minutes`` are the task's sorted execution minutes, so a suspended
    task yields one segment per execution run.
    """
    return [PowerSegment(appliance, s, e, float(power)) for s, e in _runs(minutes)]


def on_time(duration, fraction):
    """Rounded on-minutes of a Fractional appliance (halves round up)."""
    return int(np.floor(fraction * duration + 0.5))


def fractional_offsets(duration, fraction, burst, rng):
    """Positions (0-based, within the task span) of the on-minutes.

    The on-time is cut into bursts of ``burst`` minutes (the last one
    possibly shorter). Gaps between bursts are drawn uniformly over all
    non-overlapping arrangements keeping burst order.
    """
    total = on_time(duration, fraction)
    if total == 0:
        return np.empty(0, dtype=np.int64)
    if duration < burst:
        lengths = np.array([total])
    else:
        n_full, rest = divmod(total, burst)
        lengths = np.array([burst] * n_full + ([rest] if rest else []))
    free = duration - total
    k = len(lengths)
    picks = np.sort(rng.choice(free + k, size=k, replace=False))
    starts = picks - np.arange(k) + np.r_[0, np.cumsum(lengths)[:-1]]
    return np.concatenate([np.arange(s, s + n) for s, n in zip(starts, lengths)])


def realize_fractional(minutes, fraction, burst, power, rng, appliance=""):
    """Bursts of operation scattered over the executed minutes of a task."""
    minutes = np.asarray(minutes, dtype=np.int64)
    if minutes.size == 0:
        return []
    offsets = fractional_offsets(minutes.size, fraction, burst, rng)
    return [PowerSegment(appliance, s, e, float(power)) for s, e in _runs(minutes[offsets])]


def realize_cycle(profile, start, appliance=""):
    """Program phases back to back from ``start``, whatever the task does."""
    out = []
    t = int(start)
    for d, p in profile.phases:
        if d > 0:
            out.append(PowerSegment(appliance, t, t + d, float(p)))
        t += d
    return out


def realize(model, minutes, rng):
    """Segments of one activation of ``model`` for a task executed at ``minutes``."""
    if isinstance(model.aum, Cycle):
        return realize_cycle(model.aum.profile, int(minutes[0]), model.name) if len(minutes) else []
    if isinstance(model.aum, Fractional):
        return realize_fractional(minutes, model.aum.fraction, model.aum.burst,
                                  model.unit_power, rng, model.name)
    return realize_forced(minutes, model.unit_power, model.name)


class CycleScheduler:
    """Serializes the cycles of one machine: a start while busy is rejected."""

    def __init__(self):
        self.busy_until = -1

    def try_start(self, profile, start):
        if start < self.busy_until:
            return None
        self.busy_until = start + profile.duration
        return start


def dwelling_power(segments, minute, *, standby=(), baseline=0.0, heater=0.0):
    """Power of a dwelling at ``minute``.

    ``standby`` maps appliance name to standby power; an appliance counts as
    idle when none of its segments covers the minute.
    """
    total = float(baseline) + float(heater)
    busy = set()
    for s in segments:
        if s.start <= minute < s.end:
            total += s.power
            busy.add(s.appliance)
    standby = dict(standby)
    total += sum(p for name, p in standby.items() if name not in busy)
    return total
