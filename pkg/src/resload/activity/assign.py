"""Daily task assignment for the agents of a household."""

from dataclasses import dataclass, field
import math

import numpy as np

from .. import rng as rngmod
from ..errors import EmptyCatalogError
from ..tusdata import TaskSpec, stochastic_round
from .core import PriorityConfig, TaskInstance

AWAY = "away"
IDLE = "idle"


@dataclass(frozen=True)
class ActivityConfig:
    """Behavioral settings of the activity engine.

    ``weekly_household_tasks`` maps a household-level activity to the
    number of occurrences per person and week (laundry: one cycle per two
    person-weeks); the weekly count is ``ceil(size * rate)`` placed on
    distinct random days of each calendar week. Other household-level tasks
    follow their daily frequency.
    """

    priority: PriorityConfig = PriorityConfig()
    weekly_household_tasks: dict = field(default_factory=lambda: {"laundry": 0.5})
    adult_age: int = 18
    fallback_level: int = 3

    @classmethod
    def from_mapping(cls, raw):
        raw = dict(raw or {})
        prio = PriorityConfig(**raw.pop("priority", {}))
        return cls(priority=prio, **raw)


def reference_member(members, adult_age=18):
    for m in members:
        if m.age >= adult_age:
            return m
    return members[0]


def _wraps(spec, cell):
    """Evening part of an activity running through midnight."""
    return spec.pp_end >= 1440 and any(s.activity_code == spec.activity_code and s.pp_start == 0
                                       for s in cell)


def _chosen_duration(spec, weather, gen, to_max=False):
    f = spec.weather_multipliers.get(weather, 1.0)
    lo = min(max(spec.min_duration * f, spec.min_duration), spec.max_duration)
    hi = min(max(spec.max_duration * f, spec.min_duration), spec.max_duration)
    a, b = math.ceil(lo - 1e-9), math.floor(hi + 1e-9)
    u = gen.random()
    if to_max:
        return max(1, int(math.floor(spec.max_duration + 1e-9)))
    if b < a:
        return max(1, int(round(lo)))
    return max(1, a + int(u * (b - a + 1)))


def _day_stream(seed, household_id, date):
    return rngmod.stream(seed, rngmod.ASSIGNMENT, household_id, date.toordinal())


def weekly_days(seed, household_id, date, activity_code, count):
    """Weekday numbers (0 = Monday) of the week containing ``date`` on which a
    weekly household task occurs; ``count`` entries, repeated days allowed
    only when ``count > 7``."""
    year, week, _ = date.isocalendar()
    gen = rngmod.stream(seed, rngmod.ASSIGNMENT, household_id, activity_code, year, week)
    return sorted(gen.choice(7, size=count, replace=count > 7).tolist())


def _household_spec(catalog, ref_key, day_type, code, fallback_level):
    try:
        specs = catalog.specs_for(ref_key, day_type, fallback_level)
    except EmptyCatalogError:
        specs = []
    found = [s for s in specs if s.activity_code == code and s.household_level]
    if found:
        return found
    for other in ("weekday", "saturday", "sunday"):
        try:
            specs = catalog.specs_for(ref_key, other, fallback_level)
        except EmptyCatalogError:
            continue
        found = [s for s in specs if s.activity_code == code and s.household_level]
        if found:
            return found
    return []


def _injected(entry):
    base = dict(day_type="weekday", type_key="*_*_*", freq_per_day=1.0, freq_per_week=7.0)
    base.update(entry)
    return TaskSpec(**base)


def assign_day(household, members, catalog, calendar, day, seed, config=ActivityConfig()):
    """Task instances of one household for calendar day ``day``.

    Returns ``(tasks, away)``. Individual tasks come from each member's
    catalog cell (nearest parent type when the exact one is missing);
    household-level tasks come from the reference member's cell and may be
    performed by any adult. Everything is drawn from a stream keyed on
    ``(seed, household, date)``.
    """
    date = calendar.dates[day]
    day_type = calendar.day_type[day]
    weather = calendar.weather[day]
    if household.weekend_away and calendar.weekday[day] >= 5:
        return [], True
    gen = _day_stream(seed, household.id, date)
    event = calendar.event_spec(day)
    suppress = set(event.suppress) if event else set()
    inject = [_injected(e) for e in event.inject] if event else []
    adults = frozenset(i for i, m in enumerate(members) if m.age >= config.adult_age) \
        or frozenset(range(len(members)))
    ref = reference_member(members, config.adult_age)
    ref_key = catalog.resolve_type(ref.type_key, day_type, config.fallback_level)
    tasks = []

    def add(spec, owner, eligible=frozenset(), cell=()):
        chosen = _chosen_duration(spec, weather, gen, _wraps(spec, cell))
        tasks.append(TaskInstance(spec=spec, chosen_duration=chosen,
                                  day=day, index=len(tasks), owner=owner,
                                  eligible=eligible))

    # household-level tasks
    hh_specs = [s for s in catalog.specs_for(ref_key, day_type, config.fallback_level)
                if s.household_level and s.activity_code not in suppress]
    draws = gen.random(len(hh_specs))
    for spec, u in zip(hh_specs, draws):
        if spec.activity_code in config.weekly_household_tasks:
            continue
        for _ in range(stochastic_round(spec.freq_per_day, u)):
            add(spec, None, adults)
    for code, rate in sorted(config.weekly_household_tasks.items()):
        if code in suppress:
            continue
        count = math.ceil(len(members) * rate - 1e-12)
        if count <= 0:
            continue
        hits = weekly_days(seed, household.id, date, code, count).count(date.weekday())
        specs = _household_spec(catalog, ref_key, day_type, code, config.fallback_level)
        for k in range(hits if specs else 0):
            add(specs[k % len(specs)], None, adults)

    # individual tasks
    for a, m in enumerate(members):
        key = catalog.resolve_type(m.type_key, day_type, config.fallback_level)
        specs = [s for s in catalog.specs_for(key, day_type, config.fallback_level)
                 if not s.household_level and s.activity_code not in suppress]
        for spec, u in zip(specs, gen.random(len(specs))):
            for _ in range(stochastic_round(spec.freq_per_day, u)):
                add(spec, a, cell=specs)
        for spec in inject:
            if not spec.household_level:
                add(spec, a)
    for spec in inject:
        if spec.household_level:
            add(spec, None, adults)
    return tasks, False


@dataclass
class HouseholdPlan:
    """All task instances of a household over the horizon, grouped by day."""

    household_id: int
    agent_ids: list
    tasks: list
    day_ptr: np.ndarray
    away: np.ndarray

    @property
    def n_days(self):
        return len(self.away)

    def day_tasks(self, day):
        return self.tasks[self.day_ptr[day]:self.day_ptr[day + 1]]

    def arrays(self, code_index):
        """Flat arrays consumed by the compiled engine."""
        n = len(self.tasks)
        out = {
            "pp_start": np.empty(n), "pp_end": np.empty(n), "min_dur": np.empty(n),
            "chosen": np.empty(n, np.int64), "collectivity": np.empty(n),
            "code": np.empty(n, np.int64), "owner": np.empty(n, np.int64),
            "eligible": np.zeros(n, np.int64),
        }
        for k, t in enumerate(self.tasks):
            out["pp_start"][k] = t.pp_start
            out["pp_end"][k] = t.pp_end
            out["min_dur"][k] = t.spec.min_duration
            out["chosen"][k] = t.chosen_duration
            out["collectivity"][k] = t.spec.collectivity
            out["code"][k] = code_index[t.activity_code]
            out["owner"][k] = -1 if t.owner is None else t.owner
            out["eligible"][k] = sum(1 << i for i in t.eligible)
        return out


def plan_household(household, members, catalog, calendar, seed, config=ActivityConfig()):
    tasks, ptr, away = [], [0], []
    for day in range(calendar.n_days):
        day_tasks, is_away = assign_day(household, members, catalog, calendar, day, seed, config)
        base = len(tasks)
        for t in day_tasks:
            t.index += base
        tasks.extend(day_tasks)
        ptr.append(len(tasks))
        away.append(is_away)
    return HouseholdPlan(household.id, [m.id for m in members], tasks,
                         np.array(ptr, dtype=np.int64), np.array(away, dtype=bool))

