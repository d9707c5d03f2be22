"""Synthetic diary corpora.

Two kinds of data live here: tiny hand-constructed fixtures whose extracted
statistics are known in advance, and a template-driven generator producing
a plausible multi-type corpus used to build the shipped task catalog.
"""

import numpy as np

from .tusdata import SLOTS_PER_DAY, SLOT_MINUTES, TusRecord

# Work diaries for a 50-64 active woman on weekdays. Start/duration pairs in
# minutes; extraction at X=90 gives 06:00-19:50 and 2-12 h, at X=50
# 07:40-16:50 and 5-10 h.
WORK_STARTS = (470, 410, 490, 370, 510, 550, 500, 510, 510, 400,
               620, 360, 480, 460, 630, 580, 490, 560, 460, 440)
WORK_DURATIONS = (400, 640, 450, 600, 680, 620, 660, 420, 480, 550,
                  350, 720, 450, 610, 210, 300, 120, 120, 120, 500)


def _blank(fill="personal_time"):
    return [[fill, "alone"] for _ in range(SLOTS_PER_DAY)]


def _paint(slots, code, start, duration, who="alone"):
    a = start // SLOT_MINUTES
    b = min(SLOTS_PER_DAY, (start + duration) // SLOT_MINUTES)
    for i in range(a, b):
        slots[i] = [code, who]


def _record(rid, slots, *, gender="F", age=40, employment="active",
            day_type="weekday", weather="unknown"):
    return TusRecord(str(rid), gender, int(age), employment, day_type, weather,
                     [tuple(s) for s in slots])


def work_fixture():
    """Twenty weekday diaries with one work episode each (type ``F_50-64_active``)."""
    out = []
    for i, (s, d) in enumerate(zip(WORK_STARTS, WORK_DURATIONS)):
        slots = _blank()
        _paint(slots, "work", s, d)
        out.append(_record(f"w{i:02d}", slots, age=55))
    return out


def collectivity_fixture():
    """Cooking shared 60 % of the time, housekeeping 2 %.

    Ten diaries each cook for 60 minutes (36 of them with others) and clean
    for 50 minutes, with a single shared 10-minute slot across the corpus.
    """
    out = []
    for i in range(10):
        slots = _blank()
        for k in range(6):
            who = "with-others" if _shared_cook(i, k) else "alone"
            _paint(slots, "cooking", 1080 + 10 * k, 10, who)
        _paint(slots, "housekeeping", 600, 50)
        if i == 0:
            _paint(slots, "housekeeping", 600, 10, "with-others")
        out.append(_record(f"c{i:02d}", slots))
    return out


def _shared_cook(i, k):
    # 36 of 60 cooking slots shared, spread over the diaries
    return (6 * i + k) % 10 < 6


def weather_fixture():
    """Outdoor leisure lasting 120 min in good weather and 80 min in bad."""
    out = []
    for i in range(10):
        weather = "good" if i % 2 == 0 else "bad"
        slots = _blank()
        _paint(slots, "outdoor_leisure", 900, 120 if weather == "good" else 80)
        out.append(_record(f"o{i:02d}", slots, weather=weather))
    return out


# -- template generator ------------------------------------------------------

# (code, start mean, start sd, duration mean, duration sd, probability,
#  share of slots performed with others)
_ACTIVE_WEEKDAY = [
    ("hygiene", 405, 15, 20, 8, 0.95, 0.0),
    ("breakfast", 430, 15, 20, 8, 0.85, 0.4),
    ("work", 510, 45, 500, 80, 0.92, 0.1),
    ("shopping", 1050, 30, 40, 15, 0.15, 0.3),
    ("housekeeping", 1090, 40, 40, 20, 0.35, 0.02),
    ("laundry", 1110, 40, 30, 10, 0.12, 0.0),
    ("cooking", 1125, 25, 40, 15, 0.55, 0.6),
    ("meal", 1170, 20, 40, 12, 0.95, 0.8),
    ("dishes", 1215, 15, 20, 8, 0.35, 0.2),
    ("hygiene", 1290, 30, 20, 8, 0.75, 0.0),
    ("tv", 1245, 30, 100, 40, 0.75, 0.5),
    ("computer", 1260, 60, 60, 30, 0.4, 0.0),
    ("reading", 1340, 20, 30, 15, 0.3, 0.0),
]
_ACTIVE_WEEKEND = [
    ("hygiene", 525, 25, 25, 10, 0.95, 0.0),
    ("breakfast", 545, 25, 30, 10, 0.9, 0.6),
    ("housekeeping", 600, 40, 70, 30, 0.6, 0.02),
    ("laundry", 630, 40, 30, 10, 0.35, 0.0),
    ("cooking", 705, 20, 50, 15, 0.6, 0.6),
    ("meal", 765, 15, 50, 15, 0.95, 0.85),
    ("dishes", 815, 15, 20, 8, 0.4, 0.2),
    ("tv", 840, 30, 60, 30, 0.4, 0.5),
    ("shopping", 900, 40, 60, 20, 0.35, 0.4),
    ("outdoor_leisure", 900, 45, 120, 45, 0.5, 0.6),
    ("ironing", 990, 40, 40, 15, 0.15, 0.0),
    ("hygiene", 1030, 30, 15, 5, 0.3, 0.0),
    ("computer", 1020, 60, 60, 30, 0.4, 0.0),
    ("cooking", 1125, 20, 45, 15, 0.6, 0.6),
    ("meal", 1185, 15, 45, 12, 0.95, 0.85),
    ("hygiene", 1300, 30, 20, 8, 0.75, 0.0),
    ("tv", 1245, 30, 120, 40, 0.8, 0.5),
    ("reading", 1350, 20, 30, 15, 0.3, 0.0),
]
_HOME_ALLDAY = [
    ("hygiene", 495, 25, 25, 10, 0.95, 0.0),
    ("breakfast", 520, 20, 30, 10, 0.9, 0.5),
    ("laundry", 570, 40, 40, 10, 0.25, 0.0),
    ("housekeeping", 580, 40, 80, 30, 0.7, 0.02),
    ("shopping", 630, 40, 60, 20, 0.4, 0.3),
    ("cooking", 690, 20, 60, 15, 0.7, 0.6),
    ("meal", 750, 15, 50, 12, 0.95, 0.8),
    ("dishes", 800, 15, 25, 8, 0.5, 0.2),
    ("tv", 820, 30, 90, 30, 0.6, 0.5),
    ("ironing", 870, 40, 50, 15, 0.2, 0.0),
    ("outdoor_leisure", 930, 40, 90, 40, 0.5, 0.4),
    ("hygiene", 1000, 40, 15, 5, 0.35, 0.0),
    ("reading", 990, 30, 60, 20, 0.5, 0.0),
    ("computer", 1050, 45, 45, 20, 0.25, 0.0),
    ("cooking", 1125, 20, 45, 15, 0.7, 0.6),
    ("meal", 1170, 15, 45, 12, 0.95, 0.8),
    ("hygiene", 1290, 30, 20, 8, 0.75, 0.0),
    ("tv", 1230, 30, 120, 40, 0.85, 0.5),
]
_CHILD_WEEKDAY = [
    ("hygiene", 435, 10, 15, 5, 0.9, 0.3),
    ("breakfast", 450, 10, 20, 5, 0.9, 0.6),
    ("school", 500, 15, 480, 40, 0.85, 0.9),
    ("tv", 1035, 20, 60, 20, 0.6, 0.5),
    ("computer", 1080, 30, 45, 20, 0.45, 0.0),
    ("meal", 1170, 15, 40, 10, 0.95, 0.95),
    ("hygiene", 1230, 15, 20, 5, 0.8, 0.3),
    ("reading", 1230, 15, 30, 10, 0.4, 0.2),
]
_YOUNG_WEEKDAY = [
    ("hygiene", 450, 15, 20, 8, 0.9, 0.0),
    ("breakfast", 470, 15, 20, 8, 0.7, 0.3),
    ("school", 510, 30, 420, 60, 0.85, 0.8),
    ("computer", 1080, 40, 120, 40, 0.7, 0.0),
    ("meal", 1170, 20, 40, 12, 0.9, 0.8),
    ("hygiene", 1320, 25, 20, 8, 0.75, 0.0),
    ("tv", 1260, 40, 90, 40, 0.5, 0.3),
]
_YOUNG_WEEKEND = [
    ("hygiene", 600, 40, 25, 10, 0.9, 0.0),
    ("breakfast", 630, 40, 25, 10, 0.8, 0.4),
    ("tv", 690, 40, 90, 30, 0.6, 0.5),
    ("meal", 770, 15, 50, 15, 0.9, 0.85),
    ("outdoor_leisure", 900, 45, 120, 45, 0.5, 0.7),
    ("hygiene", 1050, 30, 15, 5, 0.3, 0.0),
    ("computer", 1020, 60, 90, 40, 0.6, 0.0),
    ("meal", 1185, 15, 45, 12, 0.9, 0.85),
    ("hygiene", 1320, 20, 20, 8, 0.7, 0.0),
    ("tv", 1250, 30, 100, 40, 0.7, 0.5),
]

# profile -> (employment, age range, wake, bedtime, per-day-type templates)
PROFILES = {
    "active": ("active", (20, 64), {"weekday": (400, 1380, _ACTIVE_WEEKDAY),
                                    "saturday": (510, 1420, _ACTIVE_WEEKEND),
                                    "sunday": (520, 1400, _ACTIVE_WEEKEND)}),
    "inactive": ("inactive", (18, 64), {d: (470, 1380, _HOME_ALLDAY)
                                        for d in ("weekday", "saturday", "sunday")}),
    "retired": ("retired", (55, 92), {d: (460, 1370, _HOME_ALLDAY)
                                      for d in ("weekday", "saturday", "sunday")}),
    "child": ("student", (3, 14), {"weekday": (420, 1275, _CHILD_WEEKDAY),
                                   "saturday": (500, 1320, _YOUNG_WEEKEND),
                                   "sunday": (500, 1300, _YOUNG_WEEKEND)}),
    "young": ("student", (15, 24), {"weekday": (430, 1420, _YOUNG_WEEKDAY),
                                    "saturday": (600, 1430, _YOUNG_WEEKEND),
                                    "sunday": (590, 1420, _YOUNG_WEEKEND)}),
}
PROFILE_WEIGHTS = {"active": 0.4, "inactive": 0.1, "retired": 0.22, "child": 0.16, "young": 0.12}
WEATHER_LEISURE_FACTOR = {"good": 1.2, "bad": 0.8, "unknown": 1.0}
# cut points separating repeated daily occurrences (midday / evening)
DEFAULT_SPLITS = {"cooking": [900], "meal": [900], "hygiene": [840, 1140], "tv": [1020]}


def _snap(x):
    return int(round(x / SLOT_MINUTES)) * SLOT_MINUTES


def _diary(gen, template, wake_mu, bed_mu, weather):
    slots = _blank()
    wake = min(max(_snap(gen.normal(wake_mu, 35)), 240), 720)
    bed = min(max(_snap(gen.normal(bed_mu, 40)), 1140), 1430)
    for code, s_mu, s_sd, d_mu, d_sd, p, shared in template:
        if gen.random() >= p:
            continue
        start = _snap(gen.normal(s_mu, s_sd))
        dur = d_mu * (WEATHER_LEISURE_FACTOR[weather] if code == "outdoor_leisure" else 1.0)
        dur = max(SLOT_MINUTES, _snap(gen.normal(dur, d_sd)))
        start = min(max(start, wake), bed - SLOT_MINUTES)
        i = start // SLOT_MINUTES
        # first free slot, then as much of the block as fits before the next one
        while i < bed // SLOT_MINUTES and slots[i][0] != "personal_time":
            i += 1
        stop = min(i + dur // SLOT_MINUTES, bed // SLOT_MINUTES)
        while i < stop and slots[i][0] == "personal_time":
            slots[i] = [code, "with-others" if gen.random() < shared else "alone"]
            i += 1
    for i in range(wake // SLOT_MINUTES):
        slots[i] = ["sleep", "alone"]
    for i in range(bed // SLOT_MINUTES, SLOTS_PER_DAY):
        slots[i] = ["sleep", "alone"]
    return slots


def make_synthetic_tus(n_respondents=600, seed=0):
    """Template-driven diaries, one per day type for each respondent.

    Respondents are drawn from :data:`PROFILES`; weather is good, bad or
    unknown per diary and stretches outdoor leisure accordingly.
    """
    gen = np.random.default_rng(seed)
    names = list(PROFILE_WEIGHTS)
    weights = np.array([PROFILE_WEIGHTS[n] for n in names])
    records = []
    for r in range(n_respondents):
        name = names[gen.choice(len(names), p=weights / weights.sum())]
        employment, (a0, a1), days = PROFILES[name]
        gender = "F" if gen.random() < 0.5 else "M"
        age = int(gen.integers(a0, a1 + 1))
        for day_type, (wake, bed, template) in days.items():
            u = gen.random()
            weather = "good" if u < 0.45 else ("bad" if u < 0.9 else "unknown")
            slots = _diary(gen, template, wake, bed, weather)
            records.append(_record(f"r{r:05d}", slots, gender=gender, age=age,
                                   employment=employment, day_type=day_type, weather=weather))
    return records


def build_default_catalog(n_respondents=600, seed=0, X=90.0):
    """Catalog shipped as ``builtin:catalog.csv`` (regenerated by this call)."""
    from .tusdata import extract_catalog
    return extract_catalog(make_synthetic_tus(n_respondents, seed), X, splits=DEFAULT_SPLITS)
