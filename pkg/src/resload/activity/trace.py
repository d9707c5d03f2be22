"""Run-length activity traces."""

from dataclasses import dataclass
import csv
import datetime as dt

import numpy as np

from .kernel import AWAY_SLOT

TASK_FIELDS = ("household", "local", "code", "day", "owner", "first_start", "elapsed",
               "state", "chosen", "min_duration", "max_duration", "pp_start", "pp_end",
               "household_level")
SEGMENT_FIELDS = ("agent", "start", "end", "code", "task", "collective")


@dataclass
class ActivityTrace:
    """Per-agent activity of a population, stored as constant-activity segments.

    Agents are indexed ``0..n_agents-1`` (``agent_ids`` holds the individual
    ids, ``agent_household`` their household). Segments are
    ``[start, end)`` absolute minutes with an activity code index into
    ``codes``, the household-local task index (``-1`` idle, ``-2`` away) and
    a collective flag set when another member of the household performs the
    same activity during the segment. ``tasks`` holds one array per
    :data:`TASK_FIELDS` entry describing every task instance.
    """

    start: dt.datetime
    n_minutes: int
    codes: tuple
    household_ids: np.ndarray
    agent_ids: np.ndarray
    agent_household: np.ndarray
    segments: dict
    tasks: dict
    agent_ptr: np.ndarray
    segment_ptr: np.ndarray
    task_ptr: np.ndarray

    @property
    def n_agents(self):
        return len(self.agent_ids)

    @property
    def idle_code(self):
        return self.codes.index("idle")

    @property
    def away_code(self):
        return self.codes.index("away")

    def code_of(self, name):
        return self.codes.index(name)

    # -- slicing ---------------------------------------------------------------

    def household_slice(self, h):
        """Segment and task arrays of the ``h``-th household (position, not id)."""
        s0, s1 = self.segment_ptr[h], self.segment_ptr[h + 1]
        t0, t1 = self.task_ptr[h], self.task_ptr[h + 1]
        a0 = self.agent_ptr[h]
        seg = {k: v[s0:s1] for k, v in self.segments.items()}
        seg["agent"] = seg["agent"] - a0
        return seg, {k: v[t0:t1] for k, v in self.tasks.items()}

    def activity_matrix(self, agents=None):
        """Dense ``(n, n_minutes)`` array of activity code indices."""
        agents = np.arange(self.n_agents) if agents is None else np.asarray(agents)
        out = np.empty((len(agents), self.n_minutes), dtype=np.int16)
        seg = self.segments
        for row, a in enumerate(agents):
            h = int(np.searchsorted(self.agent_ptr, a, side="right") - 1)
            s0, s1 = self.segment_ptr[h], self.segment_ptr[h + 1]
            mask = seg["agent"][s0:s1] == a
            for st, en, c in zip(seg["start"][s0:s1][mask], seg["end"][s0:s1][mask],
                                 seg["code"][s0:s1][mask]):
                out[row, st:en] = c
        return out

    def collective_matrix(self, agents=None):
        agents = np.arange(self.n_agents) if agents is None else np.asarray(agents)
        out = np.zeros((len(agents), self.n_minutes), dtype=bool)
        seg = self.segments
        for row, a in enumerate(agents):
            for st, en in zip(seg["start"][(seg["agent"] == a) & seg["collective"]],
                              seg["end"][(seg["agent"] == a) & seg["collective"]]):
                out[row, st:en] = True
        return out

    def activity_counts(self):
        """``(n_codes, n_minutes)`` number of agents in each activity per minute."""
        diff = np.zeros((len(self.codes), self.n_minutes + 1), dtype=np.int64)
        seg = self.segments
        np.add.at(diff, (seg["code"], seg["start"]), 1)
        np.add.at(diff, (seg["code"], seg["end"]), -1)
        return np.cumsum(diff[:, :-1], axis=1)

    def task_minutes(self, h):
        """Executed minutes of every task of household ``h`` as ``(ptr, minutes)``.

        Minutes are unique and sorted per task (co-performers count once).
        """
        seg, tasks = self.household_slice(h)
        n = len(tasks["local"])
        keep = seg["task"] >= 0
        starts, ends, task = seg["start"][keep], seg["end"][keep], seg["task"][keep]
        lengths = ends - starts
        total = int(lengths.sum())
        minutes = np.repeat(starts - np.cumsum(np.r_[0, lengths[:-1]]), lengths) + np.arange(total)
        owner = np.repeat(task, lengths)
        order = np.lexsort((minutes, owner))
        minutes, owner = minutes[order], owner[order]
        if total:
            first = np.r_[True, (np.diff(minutes) != 0) | (np.diff(owner) != 0)]
            minutes, owner = minutes[first], owner[first]
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(ptr, owner + 1, 1)
        return np.cumsum(ptr), minutes.astype(np.int64)

    # -- export ------------------------------------------------------------------

    def to_csv(self, path):
        """One row per agent-minute: minute, household_id, agent_id, activity_code, collective_flag."""
        codes = np.array(self.codes)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["minute", "household_id", "agent_id", "activity_code", "collective_flag"])
            minutes = np.arange(self.n_minutes)
            for a in range(self.n_agents):
                act = codes[self.activity_matrix([a])[0]]
                coll = self.collective_matrix([a])[0].astype(int)
                hid, aid = self.agent_household[a], self.agent_ids[a]
                w.writerows(zip(minutes.tolist(), [hid] * self.n_minutes, [aid] * self.n_minutes,
                                act.tolist(), coll.tolist()))

    def segments_to_csv(self, path):
        codes = self.codes
        seg = self.segments
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["household_id", "agent_id", "start", "end", "activity_code", "collective_flag"])
            for a, s, e, c, f in zip(seg["agent"], seg["start"], seg["end"], seg["code"], seg["collective"]):
                w.writerow([self.agent_household[a], self.agent_ids[a], s, e, codes[c], int(f)])

    # -- construction ------------------------------------------------------------

    @classmethod
    def concat(cls, parts):
        parts = [p for p in parts if p is not None]
        if not parts:
            raise ValueError("nothing to concatenate")
        first = parts[0]
        for p in parts[1:]:
            if p.codes != first.codes or p.n_minutes != first.n_minutes or p.start != first.start:
                raise ValueError("traces differ in vocabulary or horizon")
        a_off = np.cumsum([0] + [p.n_agents for p in parts])
        seg = {k: np.concatenate([p.segments[k] + (a_off[i] if k == "agent" else 0)
                                  for i, p in enumerate(parts)]) for k in SEGMENT_FIELDS}
        tasks = {k: np.concatenate([p.tasks[k] for p in parts]) for k in TASK_FIELDS}

        def ptr(name):
            out = [0]
            for p in parts:
                arr = getattr(p, name)
                out.extend((arr[1:] + out[-1]).tolist())
            return np.array(out, dtype=np.int64)

        return cls(first.start, first.n_minutes, first.codes,
                   np.concatenate([p.household_ids for p in parts]),
                   np.concatenate([p.agent_ids for p in parts]),
                   np.concatenate([p.agent_household for p in parts]),
                   seg, tasks, ptr("agent_ptr"), ptr("segment_ptr"), ptr("task_ptr"))


def household_trace(plan, act, state, elapsed, first_start, codes, code_index, start):
    """Compress one household's engine output into an :class:`ActivityTrace`."""
    n_agents, n_minutes = act.shape
    idle, away = codes.index("idle"), codes.index("away")
    task_code = np.array([code_index[t.activity_code] for t in plan.tasks], dtype=np.int64)
    code_mat = np.where(act >= 0, task_code[np.maximum(act, 0)] if len(task_code) else idle,
                        np.where(act == AWAY_SLOT, away, idle))
    busy = act >= 0
    coll = np.zeros_like(busy)
    for a in range(n_agents):
        for b in range(n_agents):
            if a != b:
                coll[a] |= busy[a] & busy[b] & (code_mat[a] == code_mat[b])

    parts = {k: [] for k in SEGMENT_FIELDS}
    for a in range(n_agents):
        change = np.flatnonzero((np.diff(act[a]) != 0) | (np.diff(coll[a].astype(np.int8)) != 0)) + 1
        starts = np.r_[0, change]
        ends = np.r_[change, n_minutes]
        parts["agent"].append(np.full(len(starts), a, dtype=np.int64))
        parts["start"].append(starts.astype(np.int64))
        parts["end"].append(ends.astype(np.int64))
        parts["code"].append(code_mat[a, starts].astype(np.int16))
        parts["task"].append(act[a, starts].astype(np.int64))
        parts["collective"].append(coll[a, starts])
    seg = {k: (np.concatenate(v) if v else np.empty(0, dtype=np.int64)) for k, v in parts.items()}
    if n_agents == 0:
        seg["code"] = seg["code"].astype(np.int16)
        seg["collective"] = seg["collective"].astype(bool)

    n = len(plan.tasks)
    tasks = {
        "household": np.full(n, plan.household_id, dtype=np.int64),
        "local": np.arange(n, dtype=np.int64),
        "code": task_code,
        "day": np.array([t.day for t in plan.tasks], dtype=np.int64),
        "owner": np.array([-1 if t.owner is None else t.owner for t in plan.tasks], dtype=np.int64),
        "first_start": np.asarray(first_start, dtype=np.int64),
        "elapsed": np.asarray(elapsed, dtype=np.int64),
        "state": np.asarray(state, dtype=np.int64),
        "chosen": np.array([t.chosen_duration for t in plan.tasks], dtype=np.int64),
        "min_duration": np.array([t.spec.min_duration for t in plan.tasks], dtype=float),
        "max_duration": np.array([t.spec.max_duration for t in plan.tasks], dtype=float),
        "pp_start": np.array([t.pp_start for t in plan.tasks], dtype=float),
        "pp_end": np.array([t.pp_end for t in plan.tasks], dtype=float),
        "household_level": np.array([t.owner is None for t in plan.tasks], dtype=bool),
    }
    return ActivityTrace(start, n_minutes, tuple(codes), np.array([plan.household_id]),
                         np.asarray(plan.agent_ids, dtype=np.int64),
                         np.full(n_agents, plan.household_id, dtype=np.int64),
                         seg, tasks, np.array([0, n_agents], dtype=np.int64),
                         np.array([0, len(seg["start"])], dtype=np.int64),
                         np.array([0, n], dtype=np.int64))
