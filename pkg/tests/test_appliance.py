import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resload import rng as rngmod
from resload.activity import make_calendar, run_simulation
from resload.appliance import (DHW, ApplianceModel, ApplianceSet, CompositeAppliance, Cycle,
                               CycleProfile, CycleScheduler, DhwConfig, DhwSystem, Forced,
                               Fractional, LoadCurve, PowerSegment, PuTable, aggregate_load,
                               annual_energy, band_index, calibrate_unit_powers, dhw_step,
                               draw_activations, dwelling_power, fractional_offsets,
                               load_appliances, plan_showers, realize, realize_cycle,
                               realize_forced, realize_fractional, run_tank, shower_decision,
                               shower_probability, simulate_loads, window_mask)
from resload.appliance.dhw import WATER_HEAT
from resload.config import data_path
from resload.errors import ConfigError, MisalignedCurvesError
from resload.popsynth import load_population_spec, synthesize_population
from resload.tusdata import TaskCatalog


def pu(**entries):
    return PuTable.from_mapping(entries)


def model(name="tv", aum=Forced(), power=100.0, category=None, **kw):
    return ApplianceModel(name, category or name, power, aum, kw.pop("pu", pu()), **kw)


@pytest.fixture(scope="module")
def builtin():
    return load_appliances()


@pytest.fixture(scope="module")
def small_run():
    spec = load_population_spec(data_path("population_fr.yaml"))
    pop = synthesize_population(spec, 12, seed=3)
    cal = make_calendar(7, seed=3)
    trace = run_simulation(pop, TaskCatalog.read_csv(data_path("catalog.csv")), calendar=cal,
                           seed=3)
    return pop, cal, trace


# -- PU tables and activation draws -------------------------------------------------

def test_pu_selectors_specific_rules_win():
    table = PuTable.from_mapping({"laundry": {"default": 0.3, "winter": 0.6,
                                              "winter|sunday": 0.9, "summer|evening": 0.05}})
    assert table.prob("laundry", "winter", "weekday", 2) == 0.6
    assert table.prob("laundry", "winter", "sunday", 2) == 0.9
    assert table.prob("laundry", "spring", "weekday", 0) == 0.3
    assert table.prob("laundry", "summer", "weekday", 4) == 0.05
    assert table.prob("laundry", "summer", "weekday", 3) == 0.3
    assert table.prob("cooking", "summer", "weekday", 3) == 0.0


@pytest.mark.parametrize("raw", [{"a": 1.5}, {"a": -0.1}, {"a": {"winter|monsoon": 0.2}}])
def test_pu_rejects_bad_entries(raw):
    with pytest.raises(ConfigError):
        PuTable.from_mapping(raw)


def test_band_index_edges():
    assert band_index(np.array([0, 419, 420, 659, 660, 839, 840, 1079, 1080, 1439])).tolist() == \
        [0, 0, 1, 1, 2, 2, 3, 3, 4, 4]


def test_builtin_table_values(builtin):
    micro, tv, comp = (builtin.models[n].pu for n in ("microwave", "tv", "computer"))
    for season in ("winter", "summer"):
        assert micro.prob("cooking", season, "sunday", 4) == 0.64
        assert tv.prob("computer", season, "weekday", 1) == 0.0
        assert comp.prob("computer", season, "saturday", 2) == 1.0
        assert comp.prob("tv", season, "weekday", 4) == 0.0
        assert tv.prob("housekeeping", season, "weekday", 3) == 0.16


def test_activation_rate_in_binomial_interval(builtin):
    cal = make_calendar(7)
    models = [builtin.models["microwave"]]
    rng = np.random.default_rng(11)
    n = 10000
    hits = sum(len(draw_activations("cooking", cal.clock(60 * (i % 160)), models, rng))
               for i in range(n))
    half = 2.576 * np.sqrt(0.64 * 0.36 / n)
    assert abs(hits / n - 0.64) <= half


def test_zero_and_one_probabilities(builtin):
    cal = make_calendar(7)
    comp = [builtin.models["computer"]]
    rng = np.random.default_rng(0)
    assert all(not draw_activations("tv", cal.clock(m), comp, rng) for m in range(0, 10000, 7))
    assert all(draw_activations("computer", cal.clock(m), comp, rng) for m in range(0, 10000, 7))


def test_model_without_entry_draws_nothing():
    rng = np.random.default_rng(0)
    before = np.random.default_rng(0).random()
    draw_activations("sleep", make_calendar(1).clock(0), [model(pu=pu(tv=1.0))], rng)
    assert rng.random() == before


# -- AUM realizations ----------------------------------------------------------------

def test_forced_energy_identity():
    segs = realize_forced(np.arange(1200, 1290), 100.0, "tv")
    assert len(segs) == 1 and segs[0].minutes == 90
    assert sum(s.energy_wh for s in segs) == pytest.approx(150.0)
    assert realize_forced(np.array([], dtype=int), 100.0) == []


def test_forced_follows_suspension():
    mins = np.r_[np.arange(600, 630), np.arange(700, 760)]
    segs = realize_forced(mins, 100.0)
    assert [(s.start, s.end) for s in segs] == [(600, 630), (700, 760)]
    assert sum(s.minutes for s in segs) == 90


def test_fractional_counting_example():
    rng = np.random.default_rng(5)
    for _ in range(50):
        segs = realize_fractional(np.arange(60), 0.25, 5, 800.0, rng)
        assert sum(s.minutes for s in segs) == 15
        assert all(0 <= s.start < s.end <= 60 for s in segs)
        off = fractional_offsets(60, 0.25, 5, rng)
        assert len(off) == 15 and len(np.unique(off)) == 15
        # three bursts of five, possibly touching
        assert np.all(np.diff(off.reshape(3, 5), axis=1) == 1)


def test_fractional_full_fraction_is_forced():
    mins = np.arange(100, 160)
    rng = np.random.default_rng(0)
    a = realize_fractional(mins, 1.0, 5, 900.0, rng)
    assert [(s.start, s.end, s.power) for s in a] == \
        [(s.start, s.end, s.power) for s in realize_forced(mins, 900.0)]


def test_fractional_short_task_single_burst():
    off = fractional_offsets(3, 0.5, 5, np.random.default_rng(1))
    assert len(off) == 2 and off[1] - off[0] == 1


def test_fractional_mean_on_time():
    rng = np.random.default_rng(9)
    durations = rng.integers(10, 200, size=1000)
    on = [len(fractional_offsets(int(d), 0.3, 5, rng)) / d for d in durations]
    assert abs(np.mean(on) - 0.3) <= 0.01


@settings(max_examples=60, deadline=None)
@given(d=st.integers(1, 400), f=st.floats(0.01, 1.0), burst=st.integers(1, 15),
       seed=st.integers(0, 2**31))
def test_fractional_offsets_inside_span(d, f, burst, seed):
    off = fractional_offsets(d, f, burst, np.random.default_rng(seed))
    assert len(off) == int(np.floor(f * d + 0.5))
    assert len(np.unique(off)) == len(off)
    assert np.all((off >= 0) & (off < d))


def test_cycle_example():
    prof = CycleProfile(((30, 2000.0), (60, 200.0)))
    segs = realize_cycle(prof, 500)
    assert segs[0].start == 500 and segs[-1].end == 590
    assert sum(s.energy_wh for s in segs) == pytest.approx(1200.0)


@settings(max_examples=40, deadline=None)
@given(length=st.integers(1, 300))
def test_cycle_independent_of_task_length(length):
    m = model("washer", Cycle(CycleProfile(((15, 2000.0), (70, 150.0)))), 2000.0)
    segs = realize(m, np.arange(100, 100 + length), np.random.default_rng(0))
    assert segs[-1].end - segs[0].start == 85


def test_busy_machine_rejects_second_start():
    prof = CycleProfile(((30, 2000.0), (60, 200.0)))
    sched = CycleScheduler()
    assert sched.try_start(prof, 100) == 100
    assert sched.try_start(prof, 150) is None
    assert sched.try_start(prof, 189) is None
    assert sched.try_start(prof, 190) == 190


def test_cycle_profile_validation():
    with pytest.raises(ValueError):
        CycleProfile(((0, 100.0),))
    with pytest.raises(ValueError):
        CycleProfile(((10, -1.0),))


# -- dwelling power ------------------------------------------------------------------

def test_dwelling_power_examples():
    assert dwelling_power([], 10, baseline=20.0) == 20.0
    segs = [PowerSegment("tv", 0, 90, 100.0), PowerSegment("oven", 30, 42, 2000.0)]
    assert dwelling_power(segs, 35, baseline=20.0) == 2120.0
    # standby only while idle
    assert dwelling_power(segs, 95, standby={"tv": 1.0, "oven": 3.0}) == 4.0
    assert dwelling_power(segs, 35, standby={"tv": 1.0, "box": 3.0}, heater=1500.0) == 3603.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 100), st.integers(1, 60), st.floats(0, 3000)),
                max_size=8), st.integers(0, 160), st.floats(0, 100))
def test_dwelling_power_additive_and_nonnegative(raw, minute, base):
    segs = [PowerSegment(f"a{i}", s, s + d, p) for i, (s, d, p) in enumerate(raw)]
    total = dwelling_power(segs, minute, baseline=base)
    assert total >= 0
    parts = sum(dwelling_power([s], minute) for s in segs)
    assert total == pytest.approx(parts + base)


def test_simulated_curves_nonnegative(small_run, builtin):
    pop, cal, trace = small_run
    res = simulate_loads(pop, trace, cal, builtin, seed=3, keep_curves=True)
    assert res.curves.shape == (12, cal.n_minutes)
    assert np.all(res.curves >= 0)
    # mean over dwellings equals the category sum
    assert np.allclose(res.curves.mean(axis=0), res.mean.sum(axis=0), rtol=1e-5, atol=1e-3)
    for k, cat in enumerate(res.categories):
        assert res.energy[:, k].sum() / 12 == pytest.approx(res.mean[k].sum() / 60, rel=1e-9)


def test_forced_energy_matches_trace(small_run):
    """Forced TV energy equals its power times the executed TV minutes."""
    pop, cal, trace = small_run
    apps = ApplianceSet({"tv": model(pu=pu(tv=1.0))})
    res = simulate_loads(pop, trace, cal, apps, seed=3)
    tv = trace.codes.index("tv")
    expected = 0.0
    for h, hid in enumerate(trace.household_ids):
        owned = pop.appliance_categories(pop.dwelling_of(pop.household_by_id[int(hid)]))
        if "tv" not in owned:
            continue
        seg, tasks = trace.household_slice(h)
        ptr, minutes = trace.task_minutes(h)
        on = np.zeros(trace.n_minutes, dtype=bool)
        for k in np.flatnonzero(tasks["code"] == tv):
            on[minutes[ptr[k]:ptr[k + 1]]] = True
        expected += on.sum() * 100.0 / 60.0
    assert res.energy[:, 0].sum() == pytest.approx(expected)


def test_loads_are_reproducible(small_run, builtin):
    pop, cal, trace = small_run
    a = simulate_loads(pop, trace, cal, builtin, seed=3)
    b = simulate_loads(pop, trace, cal, builtin, seed=3)
    assert np.array_equal(a.mean, b.mean)
    assert np.array_equal(a.showers["minute"], b.showers["minute"])


def test_activation_counts_follow_pu(small_run, builtin):
    pop, cal, trace = small_run
    res = simulate_loads(pop, trace, cal, builtin, seed=3)
    n, k = res.activations[("computer", "computer")]
    assert n > 0 and k == n
    n, k = res.activations[("computer", "tv")]
    assert n > 0 and k == 0


# -- aggregation -----------------------------------------------------------------------

def test_aggregate_examples():
    t0 = dt.datetime(2019, 1, 7)
    c = LoadCurve(t0, 1, [1.0, 2.0, 3.0])
    assert np.array_equal(aggregate_load([c]).values, c.values)
    m = aggregate_load([LoadCurve(t0, 1, [100.0] * 4), LoadCurve(t0, 1, [300.0] * 4)])
    assert np.all(m.values == 200.0)
    with pytest.raises(MisalignedCurvesError):
        aggregate_load([LoadCurve(t0, 1, [1.0] * 4), LoadCurve(t0, 1, [1.0] * 5)])
    with pytest.raises(MisalignedCurvesError):
        aggregate_load([c, LoadCurve(t0 + dt.timedelta(minutes=1), 1, [1.0] * 3)])


def test_aggregate_spot_values(small_run, builtin):
    pop, cal, trace = small_run
    res = simulate_loads(pop, trace, cal, builtin, seed=3, keep_curves=True)
    curves = [res.dwelling_curve(i) for i in range(res.n_dwellings)]
    agg = aggregate_load(curves)
    for minute in (0, 1140, 5000):
        assert agg.values[minute] == pytest.approx(
            sum(float(c.values[minute]) for c in curves) / len(curves))


def test_load_curve_csv_and_reduce(tmp_path):
    c = LoadCurve(dt.datetime(2019, 1, 7), 1, np.arange(60, dtype=float))
    c.to_csv(tmp_path / "c.csv")
    back = LoadCurve.from_csv(tmp_path / "c.csv")
    assert back.start == c.start and back.timestep == 1 and np.allclose(back.values, c.values)
    r = c.reduce(30)
    assert r.timestep == 30 and np.allclose(r.values, [14.5, 44.5])
    assert r.energy_wh() == pytest.approx(c.energy_wh())
    with pytest.raises(ValueError):
        LoadCurve(c.start, 1, [-5.0])


# -- hot water -------------------------------------------------------------------------

def test_shower_probability_cases():
    assert shower_probability(0, 1.0, 3.0) == 0.0
    assert shower_probability(1, 1.0, 1.0) == 1.0
    assert shower_probability(3, 1.0, 2.0) == 1.0
    assert shower_probability(2, 1.0, 4.0) == 0.5
    rng = np.random.default_rng(0)
    assert shower_decision(0, 1.0, 3.0, rng) == (False, 0.0)
    assert shower_decision(1, 1.0, 1.0, rng)[0]
    assert shower_decision(5, 1.0, 1.0, rng, blocked=True) == (False, 0.0)


def _weekly_starts(n_weeks, per_day=(420, 1290), start=dt.date(2019, 1, 7)):
    dates = [start + dt.timedelta(days=i) for i in range(7 * n_weeks)]
    starts = [d * 1440 + m for d in range(len(dates)) for m in per_day]
    return dates, np.array(starts)


def test_quota_expectation_over_fifty_weeks():
    dates, starts = _weekly_starts(50)
    cfg = DhwConfig()
    showers, _ = plan_showers(starts, dates, 0, 5.0, cfg, np.random.default_rng(2))
    assert abs(len(showers) / 50 - 5.0) <= 0.3


def test_blocked_starts_move_the_quota():
    dates, starts = _weekly_starts(50, per_day=(480, 900, 1290))
    cfg = DhwConfig(blocked_windows=((480, 780), (1080, 1200)))
    showers, probs = plan_showers(starts, dates, 0, 5.0, cfg, np.random.default_rng(4))
    mod = showers % 1440
    assert not np.any((mod >= 480) & (mod < 780))
    assert np.all(probs[starts % 1440 == 480] == 0.0)
    assert abs(len(showers) / 50 - 5.0) <= 0.3


def test_partial_week_prorated():
    dates, starts = _weekly_starts(1)
    counts = [len(plan_showers(starts[:6], dates[:3], 0, 7.0, DhwConfig(),
                               np.random.default_rng(s))[0]) for s in range(200)]
    assert np.mean(counts) == pytest.approx(3.0, abs=0.15)


def test_dhw_step_idle_at_setpoint():
    tank = DhwSystem(200.0, ua=0.0)
    power, flows = dhw_step(tank, 0.0, 60)
    assert power == 0.0 and tank.temperature == 55.0 and flows["draw_j"] == 0.0


def test_draw_outside_window_waits_for_night():
    tank = DhwSystem(200.0)
    trace = []
    for m in range(19 * 60, 24 * 60):
        mixed = 10.0 if m < 19 * 60 + 8 else 0.0
        trace.append((m, *dhw_step(tank, mixed, m)))
    powers = np.array([p for _, p, _ in trace])
    minutes = np.array([m for m, _, _ in trace])
    assert np.all(powers[minutes < 22 * 60] == 0.0)
    assert powers[minutes == 22 * 60][0] > 0
    # the mixer delivers 80 L at 40 °C, whatever the tank temperature
    heat = sum(f["draw_j"] for _, _, f in trace)
    assert heat == pytest.approx(80 * WATER_HEAT * (40 - 12))
    drawn = sum(f["tank_liters"] for _, _, f in trace)
    assert 80 * 28 / 43 < drawn < 80


def test_compiled_tank_matches_step():
    rng = np.random.default_rng(8)
    mixed = np.where(rng.random(2880) < 0.01, 6.25, 0.0)
    tank = DhwSystem(150.0)
    ref = [dhw_step(tank, mixed[i], i % 1440) for i in range(2880)]
    power, temp, drawn, draw_j, loss_j = run_tank(mixed, window_mask(tank.windows), 55.0, 150.0,
                                                  55.0, 2000.0, 12.0, 20.0, 1.5, 40.0)
    assert np.allclose(power, [p for p, _ in ref])
    assert np.allclose(drawn, [f["tank_liters"] for _, f in ref])
    assert temp[-1] == pytest.approx(tank.temperature)


def test_heater_only_inside_windows(small_run, builtin):
    pop, cal, trace = small_run
    res = simulate_loads(pop, trace, cal, builtin, seed=3, keep_dhw=True)
    mask = np.resize(window_mask(builtin.dhw.windows), cal.n_minutes)
    for f in res.dhw_flows.values():
        assert np.all(f["heater"][~mask] == 0.0)
    assert res.dhw_flows, "fixture should contain at least one electric water heater"


def test_tank_energy_balance_daily(small_run, builtin):
    pop, cal, trace = small_run
    res = simulate_loads(pop, trace, cal, builtin, seed=3, keep_dhw=True)
    for f in res.dhw_flows.values():
        temps = np.r_[f["t0"], f["temperature"]]
        for d in range(cal.n_days):
            sl = slice(d * 1440, (d + 1) * 1440)
            heat_in = f["heater"][sl].sum() * 60.0
            rise = f["capacity"] * (temps[(d + 1) * 1440] - temps[d * 1440])
            out = f["draw_j"][sl].sum() + f["loss_j"][sl].sum()
            assert abs(heat_in - (rise + out)) <= 0.01 * max(heat_in, out)


def test_tank_size_rule():
    cfg = DhwConfig()
    assert cfg.tank_for(1).volume == 150.0
    assert cfg.tank_for(9).volume == 300.0
    assert cfg.tank_for(2).heater_power == 2000.0


def test_dhw_config_validation():
    with pytest.raises(ConfigError):
        DhwConfig(day_weights=(1.0,) * 6)
    with pytest.raises(ConfigError):
        DhwConfig.from_mapping({"volume": 3})
    with pytest.raises(ConfigError):
        DhwConfig.from_mapping({"windows": [[1300, 1500]]})


# -- catalog round trip and composites ---------------------------------------------------

def test_yaml_round_trip(builtin, tmp_path):
    builtin.write_yaml(tmp_path / "a.yaml")
    back = load_appliances(tmp_path / "a.yaml")
    assert back.categories == builtin.categories
    for name, m in builtin.models.items():
        b = back.models[name]
        assert (b.category, b.unit_power, b.aum, b.standby_power) == \
            (m.category, m.unit_power, m.aum, m.standby_power)
        for code, grid in m.pu.entries.items():
            assert np.array_equal(b.pu.entries[code], grid)
    assert back.dhw == builtin.dhw


def test_composite_components_share_category(builtin):
    for name in builtin.composites["cooking"].components:
        assert builtin.models[name].category == "cooking"
    assert builtin.composites["cold"].baseline_day().min() > 0


def test_unknown_component_rejected():
    with pytest.raises(ConfigError):
        ApplianceSet({}, {"c": CompositeAppliance("c", ("x",), (0.0,) * 5)})


def test_dryer_used_more_in_winter():
    spec = load_population_spec(data_path("population_fr.yaml"))
    pop = synthesize_population(spec, 40, seed=1)
    catalog = TaskCatalog.read_csv(data_path("catalog.csv"))
    apps = load_appliances()
    energy = {}
    for label, start in (("winter", dt.date(2019, 1, 14)), ("summer", dt.date(2019, 7, 15))):
        cal = make_calendar(14, start, seed=1)
        tr = run_simulation(pop, catalog, calendar=cal, seed=1)
        res = simulate_loads(pop, tr, cal, apps, seed=1)
        energy[label] = res.mean_energy_wh()["drying"]
    assert energy["winter"] > energy["summer"]


# -- calibration -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def seasonal_traces():
    spec = load_population_spec(data_path("population_fr.yaml"))
    pop = synthesize_population(spec, 8, seed=6)
    catalog = TaskCatalog.read_csv(data_path("catalog.csv"))
    out = []
    for start in (dt.date(2019, 1, 14), dt.date(2019, 4, 15), dt.date(2019, 7, 15),
                  dt.date(2019, 10, 14)):
        cal = make_calendar(7, start, seed=6)
        out.append((cal, run_simulation(pop, catalog, calendar=cal, seed=6)))
    return pop, out


def _forced_set():
    return ApplianceSet({"tv": model("tv", power=100.0, pu=pu(tv=1.0), category="screen")})


def test_calibration_fixed_point(seasonal_traces):
    pop, traces = seasonal_traces
    apps = _forced_set()
    own = annual_energy([(c, simulate_loads(pop, t, c, apps, 6)) for c, t in traces])
    res = calibrate_unit_powers(pop, traces, apps, {"screen": own["screen"]}, seed=6)
    assert res.converged and res.iterations == 1
    assert res.factors["screen"] == pytest.approx(1.0)


def test_calibration_forced_doubles_in_one_step(seasonal_traces):
    pop, traces = seasonal_traces
    apps = _forced_set()
    own = annual_energy([(c, simulate_loads(pop, t, c, apps, 6)) for c, t in traces])
    res = calibrate_unit_powers(pop, traces, apps, {"screen": 2 * own["screen"]}, seed=6)
    assert res.converged and res.iterations == 1
    assert res.appliances.models["tv"].unit_power == pytest.approx(200.0)
    assert res.final["screen"] == pytest.approx(2 * own["screen"], rel=1e-9)


def test_calibration_report_and_errors(seasonal_traces, builtin, tmp_path):
    pop, traces = seasonal_traces
    with pytest.raises(ConfigError):
        calibrate_unit_powers(pop, traces, builtin, {DHW: 100.0})
    with pytest.raises(ConfigError):
        calibrate_unit_powers(pop, traces, builtin, {"cooking": -1.0})
    with pytest.warns(RuntimeWarning):
        res = calibrate_unit_powers(pop, traces, builtin, {"cooking": 1e6}, max_iter=2)
    assert not res.converged and res.iterations == 2
    res.write_report(tmp_path / "r.csv")
    rows = (tmp_path / "r.csv").read_text().splitlines()
    assert rows[0] == "iteration,category,simulated,target,factor"
    assert rows[1].startswith("1,cooking,") and rows[2].startswith("2,cooking,")
    assert rows[-1].startswith("final,cooking,")


def test_annual_energy_needs_all_seasons(seasonal_traces, builtin):
    pop, traces = seasonal_traces
    cal, tr = traces[0]
    with pytest.raises(ValueError):
        annual_energy([(cal, simulate_loads(pop, tr, cal, builtin, 6))])


def test_streams_are_keyed_per_appliance():
    a = rngmod.stream(1, rngmod.APPLIANCE, 5, "tv").random(3)
    b = rngmod.stream(1, rngmod.APPLIANCE, 5, "computer").random(3)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, rngmod.stream(1, rngmod.APPLIANCE, 5, "tv").random(3))


def test_fractional_in_pipeline_uses_fraction(small_run):
    pop, cal, trace = small_run
    f = Fractional(0.5, 5)
    apps = ApplianceSet({"vac": model("vac", f, 1000.0, always=True, pu=pu(tv=1.0))})
    res = simulate_loads(pop, trace, cal, apps, seed=3)
    forced = ApplianceSet({"vac": model("vac", Forced(), 1000.0, always=True, pu=pu(tv=1.0))})
    full = simulate_loads(pop, trace, cal, forced, seed=3)
    ratio = res.energy[:, 0].sum() / full.energy[:, 0].sum()
    assert 0.45 < ratio < 0.55
