"""Population-level activity simulation."""

from concurrent.futures import ProcessPoolExecutor
import datetime as dt

import numpy as np

from ..calendar import MINUTES_PER_DAY, Calendar
from .assign import AWAY, IDLE, ActivityConfig, plan_household
from .core import AgentState, HouseholdState, close_day, step_household
from .kernel import AWAY_SLOT, IDLE_SLOT, run_plan
from .trace import ActivityTrace, household_trace

DEFAULT_START = dt.date(2019, 1, 7)  # a Monday


def code_vocabulary(catalog, calendar=None):
    """Activity codes of a run: catalog codes (plus injected ones), then idle and away."""
    codes = set(catalog.activity_codes)
    if calendar is not None:
        for ev in calendar.overlay.events.values():
            codes.update(e["activity_code"] for e in ev.inject)
    return tuple(sorted(codes)) + (IDLE, AWAY)


def make_calendar(horizon, start=None, seed=0, overlay=None):
    return Calendar(start or DEFAULT_START, horizon, seed=seed, overlay=overlay)


def reference_run(plan, priority):
    """Pure-Python execution of a plan; returns the same tuple as the engine."""
    n_agents = len(plan.agent_ids)
    act = np.full((n_agents, plan.n_days * MINUTES_PER_DAY), IDLE_SLOT, dtype=np.int32)
    for d in range(plan.n_days):
        if plan.away[d]:
            act[:, d * MINUTES_PER_DAY:(d + 1) * MINUTES_PER_DAY] = AWAY_SLOT
            continue
        tasks = plan.day_tasks(d)
        hs = HouseholdState([AgentState(None, a) for a in range(n_agents)], tasks, priority)
        for m in range(d * MINUTES_PER_DAY, (d + 1) * MINUTES_PER_DAY):
            report = step_household(hs, m)
            for a, t in enumerate(report.activities):
                act[a, m] = IDLE_SLOT if t is None else t.index
        close_day(tasks)
    state = np.array([t.state for t in plan.tasks], dtype=np.int64)
    elapsed = np.array([t.elapsed for t in plan.tasks], dtype=np.int64)
    first = np.array([t.first_start for t in plan.tasks], dtype=np.int64)
    return act, state, elapsed, first


def simulate_household(household, members, catalog, calendar, seed, config, codes,
                       plan_hook=None):
    code_index = {c: i for i, c in enumerate(codes)}
    plan = plan_household(household, members, catalog, calendar, seed, config)
    if plan_hook is not None:
        plan = plan_hook(plan, household, members) or plan
    out = run_plan(plan, code_index, config.priority)
    return household_trace(plan, *out, codes, code_index, calendar.start_datetime)


def _chunk(args):
    households, members, catalog, calendar, seed, config, codes, plan_hook = args
    return ActivityTrace.concat([
        simulate_household(h, m, catalog, calendar, seed, config, codes, plan_hook)
        for h, m in zip(households, members)])


def run_simulation(population, catalog, horizon=None, seed=0, *, calendar=None, start=None,
                   config=ActivityConfig(), n_jobs=1, plan_hook=None, progress=None):
    """Simulate every household of ``population`` minute by minute.

    Households only share the calendar (day types and weather); each draws
    from its own streams keyed on ``(seed, household id, date)``, so the
    trace is identical whatever ``n_jobs``. ``plan_hook(plan, household,
    members)`` may rewrite a household's task plan before execution (used by
    eco-behavior scenarios).
    """
    if calendar is None:
        if horizon is None or horizon < 1:
            raise ValueError("horizon must be at least one day")
        calendar = make_calendar(horizon, start, seed)
    elif horizon is not None and horizon != calendar.n_days:
        raise ValueError("horizon disagrees with the calendar")
    codes = code_vocabulary(catalog, calendar)
    households = list(population.households)
    members = [population.members(h) for h in households]
    if not households:
        raise ValueError("population has no household")
    n_jobs = max(1, int(n_jobs))
    n_chunks = n_jobs if n_jobs > 1 else max(1, min(len(households), 20))
    bounds = np.linspace(0, len(households), n_chunks + 1).astype(int)
    jobs = [(households[a:b], members[a:b], catalog, calendar, seed, config, codes, plan_hook)
            for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    parts = []
    if n_jobs == 1:
        for i, job in enumerate(jobs):
            parts.append(_chunk(job))
            if progress:
                progress(bounds[i + 1], len(households))
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            for i, part in enumerate(pool.map(_chunk, jobs)):
                parts.append(part)
                if progress:
                    progress(bounds[i + 1], len(households))
    return ActivityTrace.concat(parts)
