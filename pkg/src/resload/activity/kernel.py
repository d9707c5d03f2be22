"""Compiled household engine (numba).

Mirrors :func:`resload.activity.core.step_household` over a whole horizon,
using flat arrays built by :meth:`HouseholdPlan.arrays`. Activity output
per agent and minute is a task index, ``IDLE_SLOT`` or ``AWAY_SLOT``.
"""

import numba as nb
import numpy as np

from .core import ABANDONED, DONE, ONGOING, PENDING

IDLE_SLOT = -1
AWAY_SLOT = -2
DAY = 1440


@nb.njit(cache=True)
def run_household(n_agents, n_days, day_ptr, away, pp_start, pp_end, min_dur, chosen,
                  collectivity, code, owner, eligible, n_codes,
                  in_period, out_of_period, inertia_w, collective_w, pressure_w):
    n_tasks = pp_start.shape[0]
    act = np.full((n_agents, n_days * DAY), IDLE_SLOT, dtype=np.int32)
    state = np.zeros(n_tasks, dtype=np.int64)
    elapsed = np.zeros(n_tasks, dtype=np.int64)
    first_start = np.full(n_tasks, -1, dtype=np.int64)
    current = np.full(n_agents, -1, dtype=np.int64)
    prev_code = np.full(n_agents, -1, dtype=np.int64)
    code_count = np.zeros(n_codes, dtype=np.int64)
    choice = np.full(n_agents, -1, dtype=np.int64)
    prev_choice = np.full(n_agents, -1, dtype=np.int64)
    # candidate tasks of each agent for the current day
    max_day = 0
    for d in range(n_days):
        max_day = max(max_day, day_ptr[d + 1] - day_ptr[d])
    cand = np.empty((n_agents, max_day), dtype=np.int64)
    n_cand = np.zeros(n_agents, dtype=np.int64)
    for d in range(n_days):
        lo = day_ptr[d]
        hi = day_ptr[d + 1]
        if away[d]:
            act[:, d * DAY:(d + 1) * DAY] = AWAY_SLOT
            continue
        for a in range(n_agents):
            n = 0
            for k in range(lo, hi):
                if (owner[k] == a) or (owner[k] < 0 and (eligible[k] >> a) & 1 == 1):
                    cand[a, n] = k
                    n += 1
            n_cand[a] = n
        current[:] = -1
        prev_code[:] = -1
        code_count[:] = 0
        prev_choice[:] = -1
        for m in range(DAY):
            t = d * DAY + m
            left = DAY - m
            for k in range(lo, hi):
                if state[k] == PENDING and t >= pp_end[k]:
                    if left < max(0.0, min_dur[k] - elapsed[k]):
                        state[k] = ABANDONED
            for a in range(n_agents):
                n_in = 0
                nc = n_cand[a]
                for j in range(nc):
                    k = cand[a, j]
                    if state[k] <= ONGOING and t >= pp_start[k] and t < pp_end[k]:
                        n_in += 1
                best = -1
                best_v = 0.0
                for j in range(nc):
                    k = cand[a, j]
                    if state[k] > ONGOING or t < pp_start[k]:
                        continue
                    inside = t < pp_end[k]
                    period = in_period if inside else out_of_period
                    rem = max(0.0, min_dur[k] - elapsed[k])
                    slack = max(0.0, pp_end[k] - t - rem)
                    urgency = 1.0 / (1.0 + slack)
                    inertia = inertia_w if current[a] == k else 0.0
                    c = code[k]
                    others = code_count[c] - (1 if prev_code[a] == c else 0)
                    collective = collective_w * collectivity[k] if others > 0 else 0.0
                    pressure = pressure_w * (n_in - 1 if inside else n_in)
                    v = period * (1.0 + urgency) * (1.0 + inertia) * (1.0 + collective) / (1.0 + pressure)
                    if best < 0 or v > best_v or (v == best_v and (
                            pp_end[k] < pp_end[best] or (pp_end[k] == pp_end[best] and k < best))):
                        best = k
                        best_v = v
                choice[a] = best
                act[a, t] = best
            # tasks performed last minute that nobody performs now
            for a in range(n_agents):
                k = prev_choice[a]
                if k >= 0 and state[k] == ONGOING:
                    still = False
                    for b in range(n_agents):
                        if choice[b] == k:
                            still = True
                    if not still:
                        if elapsed[k] >= min_dur[k]:
                            state[k] = DONE
                        else:
                            state[k] = PENDING
            for a in range(n_agents):
                k = choice[a]
                if k < 0:
                    continue
                dup = False
                for b in range(a):
                    if choice[b] == k:
                        dup = True
                if dup:
                    continue
                if first_start[k] < 0:
                    first_start[k] = t
                state[k] = ONGOING
                elapsed[k] += 1
                if elapsed[k] >= chosen[k]:
                    state[k] = DONE
            code_count[:] = 0
            for a in range(n_agents):
                k = choice[a]
                prev_choice[a] = k
                if k >= 0 and state[k] == ONGOING:
                    current[a] = k
                else:
                    current[a] = -1
                if k >= 0:
                    prev_code[a] = code[k]
                    code_count[code[k]] += 1
                else:
                    prev_code[a] = -1
        for k in range(lo, hi):
            if state[k] == ONGOING and elapsed[k] >= min_dur[k]:
                state[k] = DONE
            elif state[k] == PENDING or state[k] == ONGOING:
                state[k] = ABANDONED
    return act, state, elapsed, first_start


def run_plan(plan, code_index, priority):
    """Run a :class:`HouseholdPlan` through the compiled engine."""
    arr = plan.arrays(code_index)
    return run_household(
        len(plan.agent_ids), plan.n_days, plan.day_ptr, plan.away,
        arr["pp_start"], arr["pp_end"], arr["min_dur"], arr["chosen"], arr["collectivity"],
        arr["code"], arr["owner"], arr["eligible"], len(code_index),
        float(priority.in_period), float(priority.out_of_period), float(priority.inertia),
        float(priority.collective), float(priority.pressure))
