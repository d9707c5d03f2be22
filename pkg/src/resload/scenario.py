"""Eco-behavior scenarios: plan and hot-water transformations, paired-run reports."""

from dataclasses import dataclass, field, replace
import csv

import numpy as np

from . import rng as rngmod
from .activity.assign import HouseholdPlan
from .calendar import MINUTES_PER_DAY
from .config import load_yaml, require_mapping
from .errors import ConfigError
from .tusdata import TaskCatalog, shifted

IDLE = "idle"
DEFAULT_PEAKS = ((480, 780), (1080, 1200))


@dataclass(frozen=True)
class PeakWindows:
    """Time-of-day intervals ``[start, end)`` in minutes."""

    windows: tuple = DEFAULT_PEAKS

    def __post_init__(self):
        ws = tuple(sorted((int(a), int(b)) for a, b in self.windows))
        for a, b in ws:
            if not 0 <= a < b <= MINUTES_PER_DAY:
                raise ValueError(f"window ({a}, {b}) is not inside one day")
        for (_, b0), (a1, _) in zip(ws, ws[1:]):
            if a1 < b0:
                raise ValueError("peak windows overlap")
        object.__setattr__(self, "windows", ws)

    def __iter__(self):
        return iter(self.windows)

    def contains(self, minute_of_day):
        m = np.asarray(minute_of_day) % MINUTES_PER_DAY
        out = np.zeros(np.shape(m), dtype=bool)
        for a, b in self.windows:
            out |= (m >= a) & (m < b)
        return out

    def mask(self):
        return self.contains(np.arange(MINUTES_PER_DAY))


@dataclass(frozen=True)
class CookingShift:
    """Move cooking preferred periods out of peak windows.

    Eating tasks whose preferred period starts within ``chain_gap`` minutes
    of a shifted cooking period's end (or overlaps it) move with it.
    """

    windows: PeakWindows = PeakWindows()
    max_shift: float = 45.0
    codes: tuple = ("cooking",)
    chained: tuple = ("meal",)
    chain_gap: float = 30.0
    name = "cooking_shift"

    def __post_init__(self):
        if self.max_shift < 0:
            raise ValueError("max_shift must be nonnegative")


@dataclass(frozen=True)
class NoShowerPeak:
    """No shower may start inside a peak window."""

    windows: PeakWindows = PeakWindows()
    name = "no_shower_peak"


@dataclass(frozen=True)
class EcoBehavior:
    kind: object
    compliance: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.compliance <= 1.0:
            raise ValueError(f"compliance must lie in [0, 1], got {self.compliance}")

    @property
    def name(self):
        return self.kind.name


def behavior_from_mapping(raw, context="scenario"):
    """Build an :class:`EcoBehavior` from ``{kind, windows, max_shift, compliance, ...}``."""
    raw = dict(require_mapping(raw, context))
    kind = raw.pop("kind", None)
    compliance = float(raw.pop("compliance", 1.0))
    try:
        windows = PeakWindows(tuple(tuple(w) for w in raw.pop("windows", DEFAULT_PEAKS)))
        if kind == "cooking_shift":
            opts = {k: raw.pop(k) for k in ("max_shift", "chain_gap") if k in raw}
            for k in ("codes", "chained"):
                if k in raw:
                    opts[k] = tuple(raw.pop(k))
            behavior = CookingShift(windows, **opts)
        elif kind == "no_shower_peak":
            behavior = NoShowerPeak(windows)
        else:
            raise ConfigError(f"unknown behavior kind {kind!r}", context)
        if raw:
            raise ConfigError(f"unknown fields {sorted(raw)}", context)
        return EcoBehavior(behavior, compliance)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), context) from exc


# -- cooking shift -----------------------------------------------------------------

def shift_delta(pp_start, pp_end, windows, max_shift):
    """Signed move of a preferred period out of the windows it overlaps.

    For each overlapped window the period is pushed toward the nearer edge:
    later until it starts at the window end, or earlier until it ends at the
    window start, whichever is shorter (earlier on ties). The move is capped
    at ``max_shift``, so some overlap may remain.
    """
    best = 0.0
    for a, b in windows:
        if pp_start >= b or pp_end <= a:
            continue
        later = b - pp_start
        earlier = pp_end - a
        delta = -earlier if earlier <= later else later
        if abs(delta) > abs(best):
            best = delta
    return float(np.clip(best, -max_shift, max_shift))


def shift_catalog(catalog, behavior):
    """Catalog where every targeted spec has its preferred period shifted."""
    kind = behavior.kind if isinstance(behavior, EcoBehavior) else behavior
    out = []
    for s in catalog:
        if s.activity_code in kind.codes:
            s = shifted(s, shift_delta(s.pp_start, s.pp_end, kind.windows, kind.max_shift))
        out.append(s)
    return TaskCatalog(out)


def complies(seed, household_id, behavior):
    if behavior.compliance >= 1.0:
        return True
    gen = rngmod.stream(seed, rngmod.SCENARIO, int(household_id), behavior.name)
    return bool(gen.random() < behavior.compliance)


def shift_plan(plan, kind):
    """Plan with cooking instances (and chained meals) moved; task order is kept."""
    tasks = list(plan.tasks)
    for d in range(plan.n_days):
        lo, hi = plan.day_ptr[d], plan.day_ptr[d + 1]
        moves = []
        for k in range(lo, hi):
            t = tasks[k]
            if t.activity_code not in kind.codes:
                continue
            delta = shift_delta(t.spec.pp_start, t.spec.pp_end, kind.windows, kind.max_shift)
            if delta:
                moves.append((t.spec.pp_start, t.spec.pp_end, delta))
                tasks[k] = replace(t, spec=shifted(t.spec, delta))
        if not moves:
            continue
        for k in range(lo, hi):
            t = tasks[k]
            if t.activity_code not in kind.chained:
                continue
            links = [(max(0.0, t.spec.pp_start - end), delta) for start, end, delta in moves
                     if t.spec.pp_start <= end + kind.chain_gap and t.spec.pp_end > start]
            if links:
                tasks[k] = replace(t, spec=shifted(t.spec, min(links)[1]))
    return HouseholdPlan(plan.household_id, plan.agent_ids, tasks, plan.day_ptr, plan.away)


class CookingShiftHook:
    """``plan_hook`` applying a cooking shift to complying households."""

    def __init__(self, behavior, seed):
        self.behavior = behavior
        self.seed = seed

    def __call__(self, plan, household, members):
        if not complies(self.seed, household.id, self.behavior):
            return plan
        return shift_plan(plan, self.behavior.kind)


def apply_cooking_shift(behavior, seed):
    """Plan hook for :func:`resload.activity.run_simulation`."""
    if not isinstance(behavior.kind, CookingShift):
        raise TypeError("behavior is not a cooking shift")
    return CookingShiftHook(behavior, seed)


def apply_no_shower_peak(dhw_config, behavior):
    """Hot-water settings where no shower starts inside the peak windows."""
    if not isinstance(behavior.kind, NoShowerPeak):
        raise TypeError("behavior is not a no-shower-peak rule")
    return replace(dhw_config, blocked_windows=behavior.kind.windows.windows,
                   blocked_compliance=behavior.compliance)


def apply_behaviors(behaviors, appliances, seed):
    """Combine behaviors into ``(plan_hook, appliances)`` for a scenario run."""
    hooks = []
    for b in behaviors:
        if isinstance(b.kind, CookingShift):
            hooks.append(apply_cooking_shift(b, seed))
        elif isinstance(b.kind, NoShowerPeak):
            appliances = replace(appliances, dhw=apply_no_shower_peak(appliances.dhw, b))
        else:
            raise ConfigError(f"unknown behavior {b!r}")
    if not hooks:
        return None, appliances
    return (hooks[0] if len(hooks) == 1 else ChainedHook(hooks)), appliances


@dataclass
class ChainedHook:
    hooks: list

    def __call__(self, plan, household, members):
        for h in self.hooks:
            plan = h(plan, household, members) or plan
        return plan


# -- activity rates ----------------------------------------------------------------

def load_categories(path="builtin:categories.yaml"):
    raw = require_mapping(load_yaml(path), str(path))
    out = {}
    for cat, codes in raw.items():
        for c in codes or []:
            if c in out:
                raise ConfigError(f"code {c!r} is in both {out[c]!r} and {cat!r}", str(path))
            out[str(c)] = str(cat)
    return out


@dataclass
class ActivityRateReport:
    """Share of agents per category (and idle) for every minute."""

    start: object
    categories: tuple
    fractions: np.ndarray

    def daily_profile(self):
        """Mean over days, ``(n_categories, 1440)``."""
        n = self.fractions.shape[1] // MINUTES_PER_DAY
        return self.fractions[:, :n * MINUTES_PER_DAY].reshape(len(self.categories), n, -1).mean(axis=1)

    def to_csv(self, path):
        prof = self.daily_profile()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["minute_of_day", *self.categories])
            for m in range(MINUTES_PER_DAY):
                w.writerow([m, *(f"{v:.6g}" for v in prof[:, m])])


def activity_rates(trace, category_map):
    """Per-minute share of agents in each category, idle included."""
    idle = trace.codes.index(IDLE) if IDLE in trace.codes else None
    missing = [c for i, c in enumerate(trace.codes) if i != idle and c not in category_map]
    if missing:
        raise ConfigError(f"activity codes without a category: {', '.join(missing)}")
    cats = tuple(dict.fromkeys(category_map.values())) + (IDLE,)
    counts = trace.activity_counts()
    out = np.zeros((len(cats), trace.n_minutes))
    for i, c in enumerate(trace.codes):
        row = cats.index(IDLE) if i == idle else cats.index(category_map[c])
        out[row] += counts[i]
    return ActivityRateReport(trace.start, cats, out / max(trace.n_agents, 1))


# -- paired runs -------------------------------------------------------------------

@dataclass
class DeltaReport:
    """Scenario minus baseline, averaged over the days of the horizon.

    ``activity`` is ``(n_categories, 1440)``, ``power`` ``(n_load_categories, 1440)``
    in W per dwelling. ``summary`` holds the headline numbers.
    """

    activity_categories: tuple
    activity: np.ndarray
    power_categories: tuple
    power: np.ndarray
    summary: dict = field(default_factory=dict)

    def activity_csv(self, path):
        _profile_csv(path, self.activity_categories, self.activity)

    def power_csv(self, path):
        _profile_csv(path, self.power_categories + ("total",),
                     np.vstack([self.power, self.power.sum(axis=0)]))

    def summary_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["quantity", "value", "unit"])
            for k, (v, unit) in self.summary.items():
                w.writerow([k, f"{v:.6g}", unit])


def _profile_csv(path, names, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["minute_of_day", *names])
        for m in range(rows.shape[1]):
            w.writerow([m, *(f"{v:.6g}" for v in rows[:, m])])


def _daily(x):
    n = x.shape[-1] // MINUTES_PER_DAY
    return x[..., :n * MINUTES_PER_DAY].reshape(*x.shape[:-1], n, MINUTES_PER_DAY).mean(axis=-2)


def compare_runs(baseline, scenario, category_map, windows=PeakWindows()):
    """Delta report between paired runs given as ``(trace, LoadResult)``."""
    (bt, bl), (st, sl) = baseline, scenario
    if (bt.start != st.start or bt.n_minutes != st.n_minutes
            or not np.array_equal(bt.agent_ids, st.agent_ids)
            or not np.array_equal(bl.household_ids, sl.household_ids)
            or bl.categories != sl.categories):
        raise ValueError("runs differ in population, horizon or load categories")
    br, sr = activity_rates(bt, category_map), activity_rates(st, category_map)
    act = sr.daily_profile() - br.daily_profile()
    bp, sp = _daily(bl.mean), _daily(sl.mean)
    power = sp - bp
    mask = windows.mask()
    total = power.sum(axis=0)
    inside, outside = float(total[mask].sum() / 60.0), float(total[~mask].sum() / 60.0)
    summary = {
        "max_power_gain_in_windows": (float(-total[mask].min()) if mask.any() else 0.0, "W"),
        "window_energy_delta": (inside, "Wh/day"),
        "total_energy_delta": (inside + outside, "Wh/day"),
        # energy leaving the windows that reappears outside them, and the rest
        "energy_displaced": (max(0.0, min(-inside, outside)), "Wh/day"),
        "energy_dropped": (max(0.0, -(inside + outside)), "Wh/day"),
    }
    for i, c in enumerate(bl.categories):
        summary[f"{c}_window_energy_delta"] = (float(power[i][mask].sum() / 60.0), "Wh/day")
        summary[f"{c}_energy_delta"] = (float(power[i].sum() / 60.0), "Wh/day")
    return DeltaReport(br.categories, act, bl.categories, power, summary)
