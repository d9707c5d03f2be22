import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resload.config import data_path
from resload.errors import (EmptyCatalogError, IncompleteDiaryError, InsufficientDataError,
                            InsufficientDataWarning, SchemaError)
from resload.synthetic import (collectivity_fixture, make_synthetic_tus, weather_fixture,
                               work_fixture, build_default_catalog)
from resload.tusdata import (TaskCatalog, TaskSpec, TusRecord, VariabilityParam,
                             compute_collectivity, compute_weather_multipliers,
                             extract_episodes, extract_task_spec, generate_daily_assignment,
                             parse_tus, symmetric_band, write_tus)


def diary(codes, who="alone", **kw):
    base = dict(respondent_id="r", gender="F", age=40, employment="active",
                day_type="weekday", weather="good")
    base.update(kw)
    eps = [(c, who) for c in codes]
    return TusRecord(base.pop("respondent_id"), base["gender"], base["age"], base["employment"],
                     base["day_type"], base["weather"], eps)


def brute_band(values, X, step=10):
    """Scan every grid half-width until the coverage target is met."""
    v = np.asarray(values, float)
    mu = v.mean()
    k = 0
    while True:
        d = k * step
        inside = np.sum((v >= mu - d - 1e-9) & (v <= mu + d + 1e-9))
        if inside * 100 >= X * v.size:
            return max(mu - d, v.min()), min(mu + d, v.max())
        k += 1


# -- parsing -----------------------------------------------------------------

def _rows(rid, codes, day_type="weekday"):
    return [f"{rid},F,40,active,{day_type},good,{i},{c},alone" for i, c in enumerate(codes)]


HEADER = "respondent_id,gender,age,employment,day_type,weather,episode_index,activity_code,who_present"


def test_parse_single_diary(tmp_path):
    path = tmp_path / "tus.csv"
    path.write_text("\n".join([HEADER] + _rows("a", ["sleep"] * 144)) + "\n")
    recs = parse_tus(path)
    assert len(recs) == 1 and len(recs[0].episodes) == 144


def test_parse_incomplete(tmp_path):
    path = tmp_path / "tus.csv"
    rows = _rows("a", ["sleep"] * 144)
    del rows[17]
    path.write_text("\n".join([HEADER] + rows) + "\n")
    with pytest.raises(IncompleteDiaryError) as err:
        parse_tus(path)
    assert err.value.missing == [17]


def test_parse_interleaved(tmp_path):
    a = _rows("a", ["sleep"] * 72 + ["work"] * 72)
    b = _rows("b", ["tv"] * 144)
    rows = [r for pair in zip(a, b) for r in pair]
    path = tmp_path / "tus.csv"
    path.write_text("\n".join([HEADER] + rows[::-1]) + "\n")
    recs = parse_tus(path)
    assert [r.respondent_id for r in recs] == ["b", "a"]
    assert recs[1].episodes[:72] == [("sleep", "alone")] * 72
    assert recs[1].episodes[72:] == [("work", "alone")] * 72


def test_parse_schema_errors(tmp_path):
    path = tmp_path / "tus.csv"
    rows = _rows("a", ["sleep"] * 144)
    rows[3] = rows[3].replace(",3,", ",300,")
    path.write_text("\n".join([HEADER] + rows) + "\n")
    with pytest.raises(SchemaError, match="row 5"):
        parse_tus(path)
    rows = _rows("a", ["sleep"] * 144)
    path.write_text("\n".join([HEADER] + rows) + "\n")
    with pytest.raises(SchemaError, match="not in catalog"):
        parse_tus(path, activity_codes={"work"})


def test_write_parse_round_trip(tmp_path):
    recs = make_synthetic_tus(5, seed=1)
    write_tus(recs, tmp_path / "t.csv")
    assert parse_tus(tmp_path / "t.csv") == recs


# -- episodes ----------------------------------------------------------------

def test_run_becomes_one_episode():
    codes = ["x"] * 144
    codes[42:45] = ["cook"] * 3
    (ep,) = extract_episodes(diary(codes), "cook")
    assert (ep.start, ep.duration) == (420, 30)


def test_absent_activity():
    assert extract_episodes(diary(["x"] * 144), "cook") == []


def test_alternating_runs():
    codes = ["x"] * 144
    codes[60:63] = ["cook", "eat", "cook"]
    eps = extract_episodes(diary(codes), "cook")
    assert [(e.start, e.duration) for e in eps] == [(600, 10), (620, 10)]


# -- bands -------------------------------------------------------------------

def test_work_fixture_x90():
    spec = extract_task_spec(work_fixture(), "work", "weekday", "F_50-64_active", 90)
    assert spec.preferred_period == (360, 1190)
    assert (spec.min_duration, spec.max_duration) == (120, 720)
    assert spec.freq_per_day == 1.0 and spec.freq_per_week == 7.0
    assert spec.fallback == ""


def test_work_fixture_x50():
    spec = extract_task_spec(work_fixture(), "work", "weekday", "F_50-64_active", 50)
    assert spec.preferred_period == (460, 1010)
    assert (spec.min_duration, spec.max_duration) == (300, 600)


def test_full_coverage_is_observed_range():
    recs = work_fixture()
    spec = extract_task_spec(recs, "work", "weekday", "F_50-64_active", 100)
    durs = [e.duration for r in recs for e in extract_episodes(r, "work")]
    assert (spec.min_duration, spec.max_duration) == (min(durs), max(durs))


def test_variability_param_bounds():
    with pytest.raises(ValueError):
        VariabilityParam(0)
    with pytest.raises(ValueError):
        VariabilityParam(100.5)
    assert VariabilityParam(100).X == 100


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 144), min_size=1, max_size=60),
       st.sampled_from([50, 70, 90, 100]))
def test_band_matches_brute_force(slots, X):
    values = [10 * s for s in slots]
    lo, hi = symmetric_band(values, X)
    assert (lo, hi) == pytest.approx(brute_band(values, X), abs=1e-9)
    v = np.array(values)
    assert np.sum((v >= lo - 1e-9) & (v <= hi + 1e-9)) * 100 >= X * v.size


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 144), min_size=1, max_size=40),
       st.floats(1, 100), st.floats(1, 100))
def test_band_monotone_in_x(slots, x1, x2):
    x1, x2 = sorted((x1, x2))
    values = [10 * s for s in slots]
    a, b = symmetric_band(values, x1), symmetric_band(values, x2)
    assert b[0] <= a[0] and a[1] <= b[1]


def test_preferred_period_monotone_in_x():
    recs = work_fixture()
    prev = None
    for X in (30, 50, 70, 90, 100):
        s = extract_task_spec(recs, "work", "weekday", "F_50-64_active", X)
        if prev:
            assert s.pp_start <= prev.pp_start and s.pp_end >= prev.pp_end
            assert s.min_duration <= prev.min_duration and s.max_duration >= prev.max_duration
        prev = s


def test_empty_band():
    with pytest.raises(InsufficientDataError):
        symmetric_band([], 90)


# -- collectivity / weather --------------------------------------------------

def test_collectivity_fixtures():
    recs = collectivity_fixture()
    assert compute_collectivity(recs, "cooking") == pytest.approx(0.60, abs=0.02)
    assert compute_collectivity(recs, "housekeeping") == pytest.approx(0.02, abs=0.005)


def test_collectivity_alone_and_missing():
    codes = ["x"] * 144
    codes[10:14] = ["cook"] * 4
    assert compute_collectivity([diary(codes)], "cook") == 0.0
    with pytest.raises(InsufficientDataError):
        compute_collectivity([diary(codes)], "laundry")


def test_collectivity_count_weighting():
    codes = ["x"] * 144
    codes[10:11] = ["cook"]
    codes[20:29] = ["cook"] * 9
    r = diary(codes)
    r.episodes[10] = ("cook", "with-others")
    r2 = TusRecord(r.respondent_id, r.gender, r.age, r.employment, r.day_type, r.weather, r.episodes)
    assert compute_collectivity([r2], "cook", weighting="count") == 0.5
    assert compute_collectivity([r2], "cook") == pytest.approx(0.1)


def test_collectivity_order_invariant():
    recs = collectivity_fixture()
    shuffled = recs[:]
    random.Random(4).shuffle(shuffled)
    assert compute_collectivity(recs, "cooking") == compute_collectivity(shuffled, "cooking")


def test_weather_multipliers():
    f = compute_weather_multipliers(weather_fixture(), "outdoor_leisure")
    assert f["good"] == pytest.approx(1.2) and f["bad"] == pytest.approx(0.8)
    assert f["unknown"] == 1.0


def test_weather_uniform_durations():
    recs = [diary(["walk"] * 6 + ["x"] * 138, weather=w) for w in ("good", "bad", "good")]
    assert compute_weather_multipliers(recs, "walk") == {"good": 1.0, "bad": 1.0, "unknown": 1.0}


def test_weather_single_category_warns():
    recs = [diary(["walk"] * k + ["x"] * (144 - k), weather="good") for k in (3, 6)]
    with pytest.warns(InsufficientDataWarning):
        f = compute_weather_multipliers(recs, "walk")
    assert set(f.values()) == {1.0}


# -- fallback ----------------------------------------------------------------

def test_sparse_cell_falls_back():
    recs = work_fixture()
    # one diary for a retired woman in the same band: too few episodes
    codes = ["x"] * 144
    codes[50:80] = ["work"] * 30
    lone = diary(codes, respondent_id="z", age=58, employment="retired")
    with pytest.warns(InsufficientDataWarning):
        spec = extract_task_spec(recs + [lone], "work", "weekday", "F_50-64_retired", 90)
    assert spec.fallback == "drop_employment"
    assert spec.freq_per_day == 1.0


def test_no_data_anywhere():
    with pytest.raises(InsufficientDataError):
        extract_task_spec(work_fixture(), "cooking", "weekday", "F_50-64_active", 90)


@pytest.mark.filterwarnings("ignore::resload.errors.InsufficientDataWarning")
def test_extraction_deterministic():
    recs = make_synthetic_tus(40, seed=3)
    a = extract_task_spec(recs, "tv", "sunday", "F_65+_retired", 80)
    b = extract_task_spec(list(recs), "tv", "sunday", "F_65+_retired", 80)
    assert a == b


# -- catalog -----------------------------------------------------------------

def _spec(code, freq=1.0, **kw):
    base = dict(activity_code=code, day_type="weekday", type_key="F_25-49_active",
                pp_start=480, pp_end=600, min_duration=10, max_duration=30,
                freq_per_day=freq, freq_per_week=7 * freq)
    base.update(kw)
    return TaskSpec(**base)


def test_taskspec_invariants():
    with pytest.raises(ValueError):
        _spec("a", pp_start=600, pp_end=600)
    with pytest.raises(ValueError):
        _spec("a", min_duration=0)
    with pytest.raises(ValueError):
        _spec("a", collectivity=1.5)


def test_catalog_csv_round_trip(tmp_path):
    cat = TaskCatalog([_spec("a", 0.5, collectivity=0.25), _spec("b", household_level=True),
                       _spec("c", weather_multipliers={"good": 1.3, "bad": 0.7, "unknown": 1.0})])
    cat.write_csv(tmp_path / "c.csv")
    assert TaskCatalog.read_csv(tmp_path / "c.csv") == cat


def test_catalog_wildcard_resolution():
    cat = TaskCatalog([_spec("a", type_key="*_*_active"), _spec("b", type_key="F_*_active"),
                       _spec("c", type_key="M_25-49_retired")])
    assert cat.resolve_type("F_25-49_active", "weekday") == "F_*_active"
    assert cat.resolve_type("M_65+_active", "weekday") == "*_*_active"
    assert cat.resolve_type("M_25-49_inactive", "weekday", max_level=1) == "M_25-49_retired"
    with pytest.raises(EmptyCatalogError):
        cat.resolve_type("M_25-49_inactive", "weekday", max_level=0)
    with pytest.raises(EmptyCatalogError):
        cat.resolve_type("F_25-49_active", "sunday")


def test_default_catalog_is_reproducible():
    shipped = TaskCatalog.read_csv(data_path("catalog.csv"))
    assert len(shipped) > 500
    assert build_default_catalog() == shipped


# -- daily assignment --------------------------------------------------------

def test_assignment_three_daily_tasks():
    cat = TaskCatalog([_spec("a"), _spec("b"), _spec("c")])
    got = generate_daily_assignment("F_25-49_active", "weekday", cat, 0)
    assert [s.activity_code for s in got] == ["a", "b", "c"]


def test_assignment_binomial():
    cat = TaskCatalog([_spec("half", 0.5)])
    gen = np.random.default_rng(12)
    hits = sum(len(generate_daily_assignment("F_25-49_active", "weekday", cat, gen))
               for _ in range(1000))
    # 99.9 % binomial interval
    half = 3.29 * math.sqrt(1000 * 0.25)
    assert 500 - half <= hits <= 500 + half


def test_assignment_deterministic_and_empty():
    cat = TaskCatalog([_spec("a", 1.7), _spec("b", 0.3)])
    assert (generate_daily_assignment("F_25-49_active", "weekday", cat, 9)
            == generate_daily_assignment("F_25-49_active", "weekday", cat, 9))
    with pytest.raises(EmptyCatalogError):
        generate_daily_assignment("F_25-49_active", "sunday", cat, 9)


def test_assignment_skips_household_level_by_default():
    cat = TaskCatalog([_spec("a"), _spec("cook", household_level=True)])
    got = generate_daily_assignment("F_25-49_active", "weekday", cat, 1)
    assert [s.activity_code for s in got] == ["a"]
    got = generate_daily_assignment("F_25-49_active", "weekday", cat, 1, include_household_level=True)
    assert [s.activity_code for s in got] == ["a", "cook"]
