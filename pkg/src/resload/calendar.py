"""Simulation calendar: day types, seasons, weather and exceptional events."""

from dataclasses import dataclass, field
import datetime as dt

import numpy as np

from . import rng as rngmod
from .config import load_yaml, require_mapping
from .errors import ConfigError

MINUTES_PER_DAY = 1440

DAY_TYPES = ("weekday", "saturday", "sunday")
SEASONS = ("winter", "spring", "summer", "autumn")
WEATHERS = ("good", "bad", "unknown")

# probability of a "good" weather day, by season
DEFAULT_GOOD_WEATHER = {"winter": 0.3, "spring": 0.5, "summer": 0.7, "autumn": 0.4}


def day_type_of(date):
    wd = date.weekday()
    if wd < 5:
        return "weekday"
    return "saturday" if wd == 5 else "sunday"


def season_of(date):
    return SEASONS[(date.month % 12) // 3]


@dataclass
class EventSpec:
    """Calendar event overlay: activity codes to drop and extra task rows to add."""

    name: str
    suppress: tuple = ()
    inject: tuple = ()


@dataclass
class CalendarOverlay:
    """Per-date overrides of day type / weather plus named events.

    The default overlay is empty: day types follow the weekday, weather is
    drawn per day from ``good_weather`` probabilities.
    """

    dates: dict = field(default_factory=dict)
    events: dict = field(default_factory=dict)
    good_weather: dict = field(default_factory=lambda: dict(DEFAULT_GOOD_WEATHER))


def load_calendar_overlay(path):
    """Read a calendar/weather overlay file.

    Schema::

        good_weather: {winter: 0.3, spring: 0.5, summer: 0.7, autumn: 0.4}
        dates:
          2019-05-01: {day_type: sunday, weather: good, event: bank_holiday}
        events:
          bank_holiday: {suppress: [work, school], inject: []}
    """
    raw = load_yaml(path) or {}
    require_mapping(raw, str(path))
    overlay = CalendarOverlay()
    gw = raw.get("good_weather", {})
    require_mapping(gw, f"{path}: good_weather")
    for season, p in gw.items():
        if season not in SEASONS:
            raise ConfigError(f"unknown season {season!r}", f"{path}: good_weather")
        if not 0.0 <= float(p) <= 1.0:
            raise ConfigError(f"probability {p} outside [0, 1]", f"{path}: good_weather.{season}")
        overlay.good_weather[season] = float(p)
    for name, ev in (raw.get("events") or {}).items():
        ev = ev or {}
        overlay.events[str(name)] = EventSpec(
            name=str(name),
            suppress=tuple(str(c) for c in ev.get("suppress", ())),
            inject=tuple(ev.get("inject", ())),
        )
    for key, entry in (raw.get("dates") or {}).items():
        ctx = f"{path}: dates.{key}"
        try:
            date = key if isinstance(key, dt.date) else dt.date.fromisoformat(str(key))
        except ValueError as exc:
            raise ConfigError(f"bad date {key!r}", ctx) from exc
        entry = dict(entry or {})
        if "day_type" in entry and entry["day_type"] not in DAY_TYPES:
            raise ConfigError(f"unknown day_type {entry['day_type']!r}", ctx)
        if "weather" in entry and entry["weather"] not in WEATHERS:
            raise ConfigError(f"unknown weather {entry['weather']!r}", ctx)
        if "event" in entry and entry["event"] not in overlay.events:
            raise ConfigError(f"undefined event {entry['event']!r}", ctx)
        overlay.dates[date] = entry
    return overlay


class Calendar:
    """Day-level context shared by every household of a run.

    Weather is drawn once per day from a stream keyed on the run seed, so all
    households see the same weather on the same day.
    """

    def __init__(self, start, n_days, seed=0, overlay=None):
        if n_days < 1:
            raise ValueError("horizon must be at least one day")
        if isinstance(start, str):
            start = dt.date.fromisoformat(start)
        if isinstance(start, dt.datetime):
            start = start.date()
        self.start = start
        self.n_days = int(n_days)
        self.overlay = overlay or CalendarOverlay()
        gen = rngmod.stream(seed, rngmod.WEATHER)
        draws = gen.random(self.n_days)

        self.dates = [start + dt.timedelta(days=d) for d in range(self.n_days)]
        self.weekday = np.array([d.weekday() for d in self.dates], dtype=np.int64)
        day_types, seasons, weathers, events = [], [], [], []
        for d, u in zip(self.dates, draws):
            entry = self.overlay.dates.get(d, {})
            season = season_of(d)
            day_types.append(entry.get("day_type", day_type_of(d)))
            seasons.append(season)
            default_weather = "good" if u < self.overlay.good_weather[season] else "bad"
            weathers.append(entry.get("weather", default_weather))
            events.append(entry.get("event"))
        self.day_type = day_types
        self.season = seasons
        self.weather = weathers
        self.event = events
        self.day_type_idx = np.array([DAY_TYPES.index(x) for x in day_types], dtype=np.int64)
        self.season_idx = np.array([SEASONS.index(x) for x in seasons], dtype=np.int64)

    @property
    def n_minutes(self):
        return self.n_days * MINUTES_PER_DAY

    @property
    def start_datetime(self):
        return dt.datetime.combine(self.start, dt.time())

    def event_spec(self, day):
        name = self.event[day]
        return self.overlay.events.get(name) if name else None

    def clock(self, minute=0):
        return SimulationClock(self, minute)

    def __repr__(self):
        return f"Calendar(start={self.start}, n_days={self.n_days})"


@dataclass(frozen=True)
class SimulationClock:
    """Absolute minute since the simulation start, with derived calendar fields."""

    calendar: Calendar
    minute: int = 0

    @property
    def minute_of_day(self):
        return self.minute % MINUTES_PER_DAY

    @property
    def day(self):
        return self.minute // MINUTES_PER_DAY

    @property
    def date(self):
        return self.calendar.dates[self.day]

    @property
    def day_of_week(self):
        return int(self.calendar.weekday[self.day])

    @property
    def day_type(self):
        return self.calendar.day_type[self.day]

    @property
    def season(self):
        return self.calendar.season[self.day]

    @property
    def weather(self):
        return self.calendar.weather[self.day]

    @property
    def is_midnight(self):
        return self.minute_of_day == 0

    def advance(self):
        """The clock one minute later (the only allowed timestep)."""
        return SimulationClock(self.calendar, self.minute + 1)
