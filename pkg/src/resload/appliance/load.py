"""Per-dwelling power curves driven by an activity trace."""

from dataclasses import dataclass, field, replace
import csv
import datetime as dt

import numpy as np

from .. import rng as rngmod
from ..calendar import MINUTES_PER_DAY
from ..errors import MisalignedCurvesError
from .dhw import plan_showers, run_tank, window_mask
from .models import Cycle, Fractional, band_index
from .realize import CycleScheduler, fractional_offsets

DHW = "dhw"


@dataclass
class LoadCurve:
    """Power in W per ``timestep`` minutes from ``start``."""

    start: dt.datetime
    timestep: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("load curve values must be one-dimensional")
        if np.any(self.values < -1e-9):
            raise ValueError("load curve values must be nonnegative")
        if self.timestep < 1:
            raise ValueError("timestep must be at least one minute")

    def __len__(self):
        return len(self.values)

    @property
    def minutes(self):
        return len(self.values) * self.timestep

    def energy_wh(self):
        return float(self.values.sum() * self.timestep / 60.0)

    def timestamps(self):
        step = dt.timedelta(minutes=self.timestep)
        return [self.start + i * step for i in range(len(self.values))]

    def reduce(self, timestep=30):
        """Average consecutive steps into a coarser ``timestep``."""
        if timestep % self.timestep:
            raise ValueError(f"{timestep} is not a multiple of {self.timestep}")
        k = timestep // self.timestep
        if len(self.values) % k:
            raise ValueError(f"curve of {len(self.values)} steps does not split into blocks of {k}")
        return LoadCurve(self.start, timestep, self.values.reshape(-1, k).mean(axis=1))

    def aligned_with(self, other):
        return (self.start == other.start and self.timestep == other.timestep
                and len(self) == len(other))

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["timestamp", "watts"])
            for ts, v in zip(self.timestamps(), self.values.tolist()):
                w.writerow([ts.isoformat(timespec="minutes"), f"{v:.6g}"])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: empty load curve")
        stamps = [dt.datetime.fromisoformat(r["timestamp"]) for r in rows]
        step = int((stamps[1] - stamps[0]).total_seconds() // 60) if len(stamps) > 1 else 1
        return cls(stamps[0], step, np.array([float(r["watts"]) for r in rows]))


def aggregate_load(curves):
    """Mean of aligned curves, step by step."""
    curves = list(curves)
    if not curves:
        raise ValueError("no curve to aggregate")
    first = curves[0]
    for c in curves[1:]:
        if not first.aligned_with(c):
            raise MisalignedCurvesError(
                f"curve starting {c.start} ({len(c)} x {c.timestep} min) does not match "
                f"{first.start} ({len(first)} x {first.timestep} min)")
    return LoadCurve(first.start, first.timestep, np.mean([c.values for c in curves], axis=0))


@dataclass
class LoadResult:
    """Population loads of one run.

    ``mean`` is the ``(n_categories, n_minutes)`` mean power per dwelling,
    ``energy`` the ``(n_dwellings, n_categories)`` energy in Wh.
    ``activations`` maps ``(appliance, task code)`` to ``[starts, activations]``.
    """

    start: dt.datetime
    n_minutes: int
    categories: tuple
    household_ids: np.ndarray
    mean: np.ndarray
    energy: np.ndarray
    hot_water: np.ndarray
    showers: dict
    activations: dict
    curves: np.ndarray = None
    dhw_flows: dict = field(default_factory=dict)

    @property
    def n_dwellings(self):
        return len(self.household_ids)

    def curve(self, category=None):
        """Mean dwelling curve of one category, or of the total."""
        if category is None:
            return LoadCurve(self.start, 1, self.mean.sum(axis=0))
        return LoadCurve(self.start, 1, self.mean[self.categories.index(category)])

    def total(self):
        return self.curve()

    def dwelling_curve(self, i):
        if self.curves is None:
            raise ValueError("per-dwelling curves were not kept (keep_curves=False)")
        return LoadCurve(self.start, 1, self.curves[i])

    def mean_energy_wh(self):
        """Mean energy per dwelling by category."""
        return dict(zip(self.categories, self.energy.mean(axis=0).tolist()))

    def shower_counts(self):
        """Showers per individual id."""
        ids, counts = np.unique(self.showers["individual"], return_counts=True)
        return dict(zip(ids.tolist(), counts.tolist()))

    def to_csv(self, path):
        """Mean dwelling power per minute: timestamp, one column per category, total."""
        stamps = self.curve().timestamps()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["timestamp", *self.categories, "total"])
            tot = self.mean.sum(axis=0)
            for i, ts in enumerate(stamps):
                w.writerow([ts.isoformat(timespec="minutes"),
                            *(f"{v:.6g}" for v in self.mean[:, i]), f"{tot[i]:.6g}"])


def _task_positions(ptr):
    return np.repeat(np.arange(len(ptr) - 1), np.diff(ptr))


def _dwelling_loads(h, trace, calendar, appliances, seed, owned, members, household, tables,
                    counts):
    """Category curves ``(n_cat, n_minutes)`` of household ``h`` plus shower data."""
    n_min = trace.n_minutes
    cats = appliances.categories + (DHW,)
    power = np.zeros((len(cats), n_min))
    seg, tasks = trace.household_slice(h)
    ptr, minutes = trace.task_minutes(h)
    n_tasks = len(tasks["local"])
    codes = tasks["code"]
    started = tasks["first_start"] >= 0
    fs = np.maximum(tasks["first_start"], 0)
    day = fs // MINUTES_PER_DAY
    season = calendar.season_idx[day] if n_tasks else day
    dtype_ = calendar.day_type_idx[day] if n_tasks else day
    band = band_index(fs % MINUTES_PER_DAY, appliances.band_edges)
    owner = _task_positions(ptr)
    hid = int(household.id)

    for m in appliances.present(owned):
        gen = rngmod.stream(seed, rngmod.APPLIANCE, hid, m.name)
        u = gen.random(n_tasks)
        pu, covered = tables[m.name]
        p = pu[codes, season, dtype_, band] if n_tasks else np.empty(0)
        exercised = started & covered[codes]
        active = exercised & (u < p)
        if counts is not None and exercised.any():
            ex = np.bincount(codes[exercised], minlength=len(trace.codes))
            ac = np.bincount(codes[active], minlength=len(trace.codes))
            for c in np.flatnonzero(ex):
                rec = counts.setdefault((m.name, trace.codes[c]), [0, 0])
                rec[0] += int(ex[c])
                rec[1] += int(ac[c])
        row = power[cats.index(m.category)]
        on = np.zeros(n_min, dtype=bool)
        if isinstance(m.aum, Cycle):
            prof = m.aum.profile.as_array()
            sched = CycleScheduler()
            for k in sorted(np.flatnonzero(active), key=lambda k: (fs[k], k)):
                if sched.try_start(m.aum.profile, int(fs[k])) is None:
                    continue
                a, b = int(fs[k]), min(n_min, int(fs[k]) + len(prof))
                row[a:b] += prof[:b - a]
                on[a:b] = True
        elif isinstance(m.aum, Fractional):
            place = rngmod.stream(seed, rngmod.APPLIANCE, hid, m.name, "placement")
            for k in np.flatnonzero(active):
                mins = minutes[ptr[k]:ptr[k + 1]]
                if mins.size:
                    on[mins[fractional_offsets(mins.size, m.aum.fraction, m.aum.burst, place)]] = True
            row += m.unit_power * on
        else:
            on[minutes[active[owner]]] = True
            row += m.unit_power * on
        if m.standby_power:
            row += m.standby_power * ~on

    for comp in appliances.composites.values():
        power[cats.index(comp.name)] += np.resize(comp.baseline_day(appliances.band_edges), n_min)

    # showers and hot water
    dhw = appliances.dhw
    mixed = np.zeros(n_min)
    shower_rows = []
    flows = None
    if dhw is not None and dhw.shower_task in trace.codes:
        hyg = trace.codes.index(dhw.shower_task)
        sel = started & (codes == hyg)
        if dhw.blocked_windows and dhw.blocked_compliance < 1.0:
            gen = rngmod.stream(seed, rngmod.SCENARIO, hid, "no_shower_peak")
            if gen.random() >= dhw.blocked_compliance:
                dhw = replace(dhw, blocked_windows=())
        for a, ind in enumerate(members):
            own = sel & (tasks["owner"] == a)
            quota = dhw.draw_quota(rngmod.stream(seed, rngmod.QUOTA, int(ind.id)))
            gen = rngmod.stream(seed, rngmod.SHOWER, int(ind.id))
            shows, _ = plan_showers(tasks["first_start"][own], calendar.dates, 0, quota, dhw, gen)
            rate = dhw.shower_liters / dhw.shower_minutes
            for s in shows:
                mixed[s:min(n_min, s + dhw.shower_minutes)] += rate
                shower_rows.append((int(ind.id), s))
        if "water_heater" in owned:
            tank = dhw.tank_for(len(members))
            out = run_tank(mixed, window_mask(tank.windows), tank.temperature, tank.volume,
                           tank.setpoint, tank.heater_power, tank.cold, tank.ambient, tank.ua,
                           tank.mix_temperature)
            power[-1] = out[0]
            flows = {"heater": out[0], "temperature": out[1], "tank_liters": out[2],
                     "draw_j": out[3], "loss_j": out[4], "capacity": tank.capacity,
                     "t0": tank.temperature, "cold": tank.cold}
    return power, mixed, shower_rows, flows


def simulate_loads(population, trace, calendar, appliances, seed=0, *, keep_curves=False,
                   keep_dhw=False, count_activations=True):
    """Realize appliance use and hot water for every household of ``trace``.

    Activation draws come from one stream per ``(seed, dwelling, appliance)``
    with one uniform per task instance of the household, consumed whether or
    not the task runs, so results do not depend on processing order and a
    behavior change elsewhere leaves the draws of a task untouched.
    """
    if trace.n_minutes != calendar.n_minutes:
        raise ValueError("trace and calendar horizons differ")
    cats = appliances.categories + (DHW,)
    tables = {m.name: m.pu.array_for(trace.codes) for m in appliances.models.values()}
    n_h = len(trace.household_ids)
    total = np.zeros((len(cats), trace.n_minutes))
    energy = np.zeros((n_h, len(cats)))
    hot = np.zeros(trace.n_minutes)
    curves = np.zeros((n_h, trace.n_minutes), dtype=np.float32) if keep_curves else None
    shower_ind, shower_hh, shower_min = [], [], []
    counts = {} if count_activations else None
    flows = {}
    for h, hid in enumerate(trace.household_ids):
        household = population.household_by_id[int(hid)]
        members = population.members(household)
        dwelling = population.dwelling_of(household)
        owned = population.appliance_categories(dwelling)
        power, mixed, rows, f = _dwelling_loads(h, trace, calendar, appliances, seed, owned,
                                                members, household, tables, counts)
        total += power
        energy[h] = power.sum(axis=1) / 60.0
        hot += mixed
        if keep_curves:
            curves[h] = power.sum(axis=0)
        for ind, m in rows:
            shower_ind.append(ind)
            shower_hh.append(int(hid))
            shower_min.append(m)
        if keep_dhw and f is not None:
            flows[int(hid)] = f
    showers = {"individual": np.array(shower_ind, dtype=np.int64),
               "household": np.array(shower_hh, dtype=np.int64),
               "minute": np.array(shower_min, dtype=np.int64)}
    return LoadResult(trace.start, trace.n_minutes, cats, np.asarray(trace.household_ids),
                      total / max(n_h, 1), energy, hot / max(n_h, 1), showers, counts or {},
                      curves, flows)
