"""Time-use diaries to task specifications.

A diary day is 144 ten-minute episodes. Per (type of individual, day type,
activity) cell we derive a preferred period, a duration band, a frequency,
a collectivity level and weather duration multipliers. Band widths are
controlled by the variability parameter ``X``: the band is the narrowest
interval symmetric about the sample mean (half-width on the 10-minute grid)
holding at least ``X`` percent of the observations, clipped to the observed
range.
"""

from dataclasses import dataclass, field, replace
import csv
from functools import cached_property
import math
from pathlib import Path
import warnings

import numpy as np

from .calendar import DAY_TYPES, WEATHERS
from .errors import (EmptyCatalogError, IncompleteDiaryError, InsufficientDataError,
                     InsufficientDataWarning, SchemaError)
from .popsynth import DEFAULT_AGE_BANDS, age_band_of

SLOTS_PER_DAY = 144
SLOT_MINUTES = 10
DAY_MINUTES = SLOTS_PER_DAY * SLOT_MINUTES
WHO_PRESENT = ("alone", "with-others")
MIN_EPISODES = 5

TUS_COLUMNS = ("respondent_id", "gender", "age", "employment", "day_type", "weather",
               "episode_index", "activity_code", "who_present")
CATALOG_COLUMNS = ("activity_code", "day_type", "type_key", "pp_start", "pp_end",
                   "min_duration", "max_duration", "freq_per_day", "freq_per_week",
                   "collectivity", "weather_good", "weather_bad", "weather_unknown",
                   "household_level", "fallback")

# activities decided once per household rather than per individual
DEFAULT_HOUSEHOLD_ACTIVITIES = frozenset({"cooking", "laundry"})


@dataclass(frozen=True)
class VariabilityParam:
    """Share of observations (percent) the extracted bands must cover."""

    X: float = 90.0

    def __post_init__(self):
        if not 0.0 < float(self.X) <= 100.0:
            raise ValueError(f"X must lie in (0, 100], got {self.X}")


@dataclass(frozen=True)
class Episode:
    start: int
    duration: int
    with_others: bool
    weather: str
    shared_minutes: int = 0

    @property
    def end(self):
        return self.start + self.duration

    @property
    def midpoint(self):
        return self.start + self.duration / 2


@dataclass
class TusRecord:
    respondent_id: str
    gender: str
    age: int
    employment: str
    day_type: str
    weather: str
    episodes: list  # 144 (activity_code, who_present) pairs

    def __post_init__(self):
        if len(self.episodes) != SLOTS_PER_DAY:
            raise ValueError(f"a diary holds exactly {SLOTS_PER_DAY} episodes, got {len(self.episodes)}")

    @cached_property
    def runs(self):
        """Episodes of every activity in the diary, keyed by activity code."""
        return _split_runs(self)

    def type_key(self, age_bands=DEFAULT_AGE_BANDS):
        return f"{self.gender[:1].upper()}_{age_band_of(self.age, age_bands)}_{self.employment}"


@dataclass
class TaskSpec:
    activity_code: str
    day_type: str
    type_key: str
    pp_start: float
    pp_end: float
    min_duration: float
    max_duration: float
    freq_per_day: float
    freq_per_week: float
    collectivity: float = 0.0
    weather_multipliers: dict = field(default_factory=lambda: {w: 1.0 for w in WEATHERS})
    household_level: bool = False
    fallback: str = ""

    def __post_init__(self):
        if not 0 <= self.pp_start < self.pp_end <= DAY_MINUTES:
            raise ValueError(f"{self.activity_code}: preferred period "
                             f"[{self.pp_start}, {self.pp_end}) outside one day")
        if not 0 < self.min_duration <= self.max_duration:
            raise ValueError(f"{self.activity_code}: bad duration band "
                             f"[{self.min_duration}, {self.max_duration}]")
        if not 0.0 <= self.collectivity <= 1.0:
            raise ValueError(f"{self.activity_code}: collectivity {self.collectivity} outside [0, 1]")
        if self.freq_per_day < 0 or self.freq_per_week < 0:
            raise ValueError(f"{self.activity_code}: negative frequency")
        for w in WEATHERS:
            self.weather_multipliers.setdefault(w, 1.0)
        if any(v <= 0 for v in self.weather_multipliers.values()):
            raise ValueError(f"{self.activity_code}: weather multipliers must be positive")

    @property
    def preferred_period(self):
        return (self.pp_start, self.pp_end)


# -- parsing -----------------------------------------------------------------

def parse_tus(path, activity_codes=None):
    """Read a diary CSV (one row per 10-minute episode) into :class:`TusRecord` s.

    Columns are :data:`TUS_COLUMNS`. Diaries are keyed by
    ``(respondent_id, day_type)`` and returned in order of first appearance,
    episodes sorted by index.
    """
    path = Path(path)
    diaries = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in TUS_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"{path.name}: missing columns {missing}", 1)
        for n, row in enumerate(reader, start=2):
            try:
                idx = int(row["episode_index"])
                age = int(row["age"])
            except (TypeError, ValueError):
                raise SchemaError("episode_index and age must be integers", n) from None
            if not 0 <= idx < SLOTS_PER_DAY:
                raise SchemaError(f"episode_index {idx} outside 0..{SLOTS_PER_DAY - 1}", n)
            if row["day_type"] not in DAY_TYPES:
                raise SchemaError(f"unknown day_type {row['day_type']!r}", n)
            if row["weather"] not in WEATHERS:
                raise SchemaError(f"unknown weather {row['weather']!r}", n)
            if row["who_present"] not in WHO_PRESENT:
                raise SchemaError(f"who_present must be one of {WHO_PRESENT}", n)
            code = (row["activity_code"] or "").strip()
            if not code or (activity_codes is not None and code not in activity_codes):
                raise SchemaError(f"activity code {code!r} not in catalog", n)
            key = (row["respondent_id"], row["day_type"])
            attrs = (row["gender"], age, row["employment"], row["weather"])
            entry = diaries.setdefault(key, {"attrs": attrs, "slots": {}})
            if entry["attrs"] != attrs:
                raise SchemaError(f"diary {key[0]!r} changes individual attributes or weather", n)
            if idx in entry["slots"]:
                raise SchemaError(f"duplicate episode_index {idx} for {key[0]!r}", n)
            entry["slots"][idx] = (code, row["who_present"])
    records = []
    for (rid, day_type), entry in diaries.items():
        slots = entry["slots"]
        if len(slots) != SLOTS_PER_DAY:
            raise IncompleteDiaryError(rid, day_type, set(range(SLOTS_PER_DAY)) - set(slots))
        gender, age, employment, weather = entry["attrs"]
        records.append(TusRecord(rid, gender, age, employment, day_type, weather,
                                 [slots[i] for i in range(SLOTS_PER_DAY)]))
    return records


def write_tus(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TUS_COLUMNS)
        for r in records:
            for i, (code, who) in enumerate(r.episodes):
                w.writerow([r.respondent_id, r.gender, r.age, r.employment, r.day_type,
                            r.weather, i, code, who])


def extract_episodes(record, activity_code):
    """Maximal runs of ``activity_code`` in a diary as :class:`Episode` s.

    An episode counts as performed with others when at least half of its
    slots are flagged ``with-others``; ``shared_minutes`` keeps the exact
    flagged time.
    """
    return list(record.runs.get(activity_code, ()))


def _split_runs(record):
    out = {}
    slots = record.episodes
    i = 0
    while i < SLOTS_PER_DAY:
        code = slots[i][0]
        j = i
        shared = 0
        while j < SLOTS_PER_DAY and slots[j][0] == code:
            shared += slots[j][1] == "with-others"
            j += 1
        n = j - i
        out.setdefault(code, []).append(
            Episode(i * SLOT_MINUTES, n * SLOT_MINUTES, 2 * shared >= n, record.weather,
                    shared * SLOT_MINUTES))
        i = j
    return out


# -- statistics --------------------------------------------------------------

def symmetric_band(values, X, step=SLOT_MINUTES):
    """Narrowest ``[mean - d, mean + d]`` (``d`` a multiple of ``step``) holding
    at least ``X`` percent of ``values``, clipped to ``[min, max]`` of the data.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise InsufficientDataError("no observations")
    X = VariabilityParam(X).X
    mu = float(v.mean())
    dev = np.sort(np.abs(v - mu))
    need = math.ceil(X * v.size / 100.0 - 1e-9)
    # smallest grid half-width reaching the need-th smallest deviation
    k = max(0, math.ceil(dev[need - 1] / step - 1e-9))
    half = k * step
    return max(mu - half, float(v.min())), min(mu + half, float(v.max()))


def compute_collectivity(records, activity_code, weighting="duration"):
    """Share of the activity performed with others.

    ``weighting="duration"`` is the fraction of diary minutes flagged
    ``with-others``; ``"count"`` is the fraction of episodes performed
    mostly with others.
    """
    eps = [e for r in records for e in extract_episodes(r, activity_code)]
    if not eps:
        raise InsufficientDataError(f"no {activity_code!r} episode to derive collectivity")
    return _collectivity(eps, weighting)


def _collectivity(eps, weighting):
    if weighting == "duration":
        total = sum(e.duration for e in eps)
        return sum(e.shared_minutes for e in eps) / total
    if weighting == "count":
        return sum(1 for e in eps if e.with_others) / len(eps)
    raise ValueError(f"unknown weighting {weighting!r}")


def compute_weather_multipliers(records, activity_code):
    """Mean duration under each weather divided by the overall mean duration.

    ``unknown`` weather is not a category of its own; its factor stays 1.
    With fewer than two observed categories every factor is 1 and an
    :class:`~resload.errors.InsufficientDataWarning` is emitted.
    """
    eps = [e for r in records for e in extract_episodes(r, activity_code)]
    return _weather_multipliers(eps, activity_code)


def _weather_multipliers(eps, activity_code):
    factors = {w: 1.0 for w in WEATHERS}
    known = [e for e in eps if e.weather != "unknown"]
    cats = sorted({e.weather for e in known})
    if len(cats) < 2:
        warnings.warn(f"{activity_code!r}: observed under {len(cats)} weather category(ies); "
                      "multipliers left at 1.0", InsufficientDataWarning, stacklevel=3)
        return factors
    overall = float(np.mean([e.duration for e in known]))
    for w in cats:
        factors[w] = float(np.mean([e.duration for e in known if e.weather == w])) / overall
    return factors


# -- extraction --------------------------------------------------------------

def _key_parts(type_key):
    gender, band, employment = type_key.split("_", 2)
    return gender, band, employment


FALLBACK_LEVELS = ("", "drop_employment", "drop_age_band", "all_types")


def _matches(record_key, type_key, level):
    g, b, e = _key_parts(record_key)
    tg, tb, te = _key_parts(type_key)
    if level == 0:
        return (g, b, e) == (tg, tb, te)
    if level == 1:
        return (g, b) == (tg, tb)
    if level == 2:
        return g == tg
    return True


def _in_window(ep, window):
    return window is None or window[0] <= ep.midpoint < window[1]


def extract_task_spec(records, activity_code, day_type, type_key, X=90.0, *,
                      window=None, household_level=None, weighting="duration",
                      min_episodes=MIN_EPISODES, age_bands=DEFAULT_AGE_BANDS):
    """Derive one :class:`TaskSpec` for ``(type_key, day_type, activity_code)``.

    ``window`` restricts to episodes whose midpoint falls in
    ``[window[0], window[1])`` (used to split wrap-around or per-meal
    activities). With fewer than ``min_episodes`` episodes the cell is
    widened by dropping employment, then the age band, then the type
    altogether; the spec records the level in ``fallback`` and an
    :class:`InsufficientDataWarning` is emitted. Frequency is always measured
    on the cell's own diaries when there are any.
    """
    X = VariabilityParam(X).X
    day_records = [r for r in records if r.day_type == day_type]
    keyed = [(r.type_key(age_bands), r) for r in day_records]
    chosen = None
    for level in range(len(FALLBACK_LEVELS)):
        recs = [r for k, r in keyed if _matches(k, type_key, level)]
        eps = [e for r in recs for e in extract_episodes(r, activity_code) if _in_window(e, window)]
        if eps:
            chosen = (level, recs, eps)
        if len(eps) >= min_episodes:
            break
    if chosen is None:
        raise InsufficientDataError(
            f"no {activity_code!r} episode on {day_type} for any type (wanted {type_key})")
    level, recs, eps = chosen
    if level > 0 or len(eps) < min_episodes:
        warnings.warn(f"{type_key}/{day_type}/{activity_code}: {len(eps)} episode(s); "
                      f"using {FALLBACK_LEVELS[level] or 'own cell'}",
                      InsufficientDataWarning, stacklevel=2)

    own = [r for k, r in keyed if k == type_key] or recs
    n_own = sum(1 for r in own for e in extract_episodes(r, activity_code) if _in_window(e, window))
    freq = n_own / len(own)

    d_lo, d_hi = symmetric_band([e.duration for e in eps], X)
    s_lo, _ = symmetric_band([e.start for e in eps], X)
    _, e_hi = symmetric_band([e.end for e in eps], X)
    if household_level is None:
        household_level = activity_code in DEFAULT_HOUSEHOLD_ACTIVITIES
    fallback = FALLBACK_LEVELS[level]
    if not fallback and len(eps) < min_episodes:
        fallback = "sparse"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InsufficientDataWarning)
        weather = _weather_multipliers(eps, activity_code)
    return TaskSpec(
        activity_code=activity_code,
        day_type=day_type,
        type_key=type_key,
        pp_start=s_lo,
        pp_end=e_hi,
        min_duration=d_lo,
        max_duration=d_hi,
        freq_per_day=freq,
        freq_per_week=7.0 * freq,
        collectivity=_collectivity(eps, weighting),
        weather_multipliers=weather,
        household_level=bool(household_level),
        fallback=fallback,
    )


def extract_catalog(records, X=90.0, *, splits=None, household_activities=None,
                    weighting="duration", age_bands=DEFAULT_AGE_BANDS):
    """Extract a :class:`TaskCatalog` covering every observed cell.

    ``splits`` maps an activity code to interior cut points (minutes); its
    episodes are grouped by midpoint and each group yields its own spec.
    Activities running through midnight (observed both starting at 00:00 and
    ending at 24:00) are cut at noon unless ``splits`` says otherwise.
    """
    splits = dict(splits or {})
    if household_activities is None:
        household_activities = DEFAULT_HOUSEHOLD_ACTIVITIES
    cells = {}
    for r in records:
        key = (r.type_key(age_bands), r.day_type)
        codes = cells.setdefault(key, set())
        codes.update(code for code, _ in r.episodes)
    all_eps = {}
    for r in records:
        for code in {c for c, _ in r.episodes}:
            all_eps.setdefault(code, []).extend(extract_episodes(r, code))
    for code, eps in all_eps.items():
        if code not in splits and any(e.start == 0 for e in eps) and any(e.end == DAY_MINUTES for e in eps):
            splits[code] = [DAY_MINUTES // 2]
    specs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InsufficientDataWarning)
        for (type_key, day_type) in sorted(cells):
            own = [r for r in records if r.day_type == day_type
                   and r.type_key(age_bands) == type_key]
            for code in sorted(cells[(type_key, day_type)]):
                cuts = [0] + sorted(splits.get(code, [])) + [DAY_MINUTES + 1]
                for lo, hi in zip(cuts, cuts[1:]):
                    window = None if len(cuts) == 2 else (lo, hi)
                    if not any(_in_window(e, window) for r in own for e in extract_episodes(r, code)):
                        continue
                    specs.append(extract_task_spec(
                        records, code, day_type, type_key, X, window=window,
                        household_level=code in household_activities, weighting=weighting,
                        age_bands=age_bands))
    return TaskCatalog(specs)


# -- catalog -----------------------------------------------------------------

def _fmt(x):
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def _wild_rank(key_parts, type_parts):
    """Match level of catalog key against a concrete type key (lower is closer).

    Returns ``(level, wildcards, wildcard_position_penalty)``: level 0 when
    every component is equal or ``*``; 1 when only employment differs;
    2 when the age band differs too; 3 otherwise.
    """
    (g, b, e), (tg, tb, te) = key_parts, type_parts
    ok = [g in ("*", tg), b in ("*", tb), e in ("*", te)]
    if all(ok):
        level = 0
    elif ok[0] and ok[1]:
        level = 1
    elif ok[0]:
        level = 2
    else:
        level = 3
    wild = [g == "*", b == "*", e == "*"]
    return level, sum(wild), 4 * wild[0] + 2 * wild[1] + wild[2]


class TaskCatalog:
    """Ordered collection of :class:`TaskSpec` indexed by (type key, day type).

    Type keys may use ``*`` for any component (``*_*_active``).
    """

    def __init__(self, specs=()):
        self.specs = list(specs)
        self._index = {}
        for s in self.specs:
            self._index.setdefault((s.type_key, s.day_type), []).append(s)

    def __len__(self):
        return len(self.specs)

    def __iter__(self):
        return iter(self.specs)

    def __eq__(self, other):
        return isinstance(other, TaskCatalog) and self.specs == other.specs

    @property
    def activity_codes(self):
        return sorted({s.activity_code for s in self.specs})

    def type_keys(self, day_type=None):
        return sorted({k for k, d in self._index if day_type is None or d == day_type})

    def resolve_type(self, type_key, day_type, max_level=3):
        """Closest catalog type key for ``type_key`` on ``day_type``.

        Raises :class:`EmptyCatalogError` when nothing within ``max_level``
        is available.
        """
        if (type_key, day_type) in self._index:
            return type_key
        tparts = _key_parts(type_key)
        best = None
        for key in self.type_keys(day_type):
            rank = _wild_rank(_key_parts(key), tparts)
            if rank[0] <= max_level and (best is None or (rank, key) < best):
                best = (rank, key)
        if best is None:
            raise EmptyCatalogError(f"no task specs for {type_key} on {day_type}")
        return best[1]

    def specs_for(self, type_key, day_type, max_level=0):
        return list(self._index[(self.resolve_type(type_key, day_type, max_level), day_type)])

    def replace_specs(self, mapping):
        """Copy of the catalog with specs swapped per ``{old: new}`` identity map."""
        return TaskCatalog([mapping.get(id(s), s) for s in self.specs])

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CATALOG_COLUMNS)
            for s in self.specs:
                w.writerow([s.activity_code, s.day_type, s.type_key, _fmt(s.pp_start), _fmt(s.pp_end),
                            _fmt(s.min_duration), _fmt(s.max_duration), _fmt(s.freq_per_day),
                            _fmt(s.freq_per_week), _fmt(s.collectivity),
                            _fmt(s.weather_multipliers["good"]), _fmt(s.weather_multipliers["bad"]),
                            _fmt(s.weather_multipliers["unknown"]),
                            "1" if s.household_level else "0", s.fallback])

    @classmethod
    def read_csv(cls, path):
        path = Path(path)
        specs = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in CATALOG_COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise SchemaError(f"{path.name}: missing columns {missing}", 1)
            for n, row in enumerate(reader, start=2):
                try:
                    specs.append(_spec_from_row(row))
                except (TypeError, ValueError) as exc:
                    raise SchemaError(f"{path.name}: {exc}", n) from exc
        return cls(specs)


def _spec_from_row(row):
    if row["day_type"] not in DAY_TYPES:
        raise ValueError(f"unknown day_type {row['day_type']!r}")
    if len(row["type_key"].split("_")) < 3:
        raise ValueError(f"malformed type_key {row['type_key']!r}")
    return TaskSpec(
        activity_code=row["activity_code"],
        day_type=row["day_type"],
        type_key=row["type_key"],
        pp_start=float(row["pp_start"]),
        pp_end=float(row["pp_end"]),
        min_duration=float(row["min_duration"]),
        max_duration=float(row["max_duration"]),
        freq_per_day=float(row["freq_per_day"]),
        freq_per_week=float(row["freq_per_week"]),
        collectivity=float(row["collectivity"]),
        weather_multipliers={"good": float(row["weather_good"]), "bad": float(row["weather_bad"]),
                             "unknown": float(row["weather_unknown"])},
        household_level=row["household_level"].strip().lower() in ("1", "true", "yes"),
        fallback=row.get("fallback") or "",
    )


def stochastic_round(x, u):
    """``floor(x)`` plus one with probability ``frac(x)`` (``u`` uniform in [0, 1))."""
    base = math.floor(x)
    return base + (1 if u < x - base else 0)


def generate_daily_assignment(type_key, day_type, catalog, rng, *, include_household_level=False):
    """Task templates for one individual-day.

    Every spec's daily frequency is stochastically rounded; a spec yields as
    many templates (the spec itself, repeated) as its rounded count. One
    uniform draw is consumed per spec whatever the outcome. ``rng`` is a
    ``numpy.random.Generator`` or an integer seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    specs = catalog.specs_for(type_key, day_type)
    if not specs:
        raise EmptyCatalogError(f"no task specs for {type_key} on {day_type}")
    draws = rng.random(len(specs))
    out = []
    for spec, u in zip(specs, draws):
        if spec.household_level and not include_household_level:
            continue
        out.extend([spec] * stochastic_round(spec.freq_per_day, u))
    return out


def shifted(spec, delta):
    """Copy of ``spec`` with its preferred period moved by ``delta`` minutes,
    kept inside the day."""
    lo = min(max(spec.pp_start + delta, 0.0), DAY_MINUTES - 1.0)
    hi = min(max(spec.pp_end + delta, lo + 1.0), float(DAY_MINUTES))
    return replace(spec, pp_start=lo, pp_end=hi)
