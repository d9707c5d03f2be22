"""Task instances, priority scoring and the minute-by-minute household step.

This is the readable reference implementation. The compiled engine in
:mod:`resload.activity.kernel` reproduces it operation for operation and
is tested against it.
"""

from dataclasses import dataclass, field

from ..calendar import MINUTES_PER_DAY

PENDING, ONGOING, DONE, ABANDONED = 0, 1, 2, 3
STATE_NAMES = ("pending", "ongoing", "done", "abandoned")


@dataclass(frozen=True)
class PriorityConfig:
    """Constants of the priority formula.

    ``value = period * (1 + urgency) * (1 + inertia) * (1 + collective) / (1 + pressure)``
    where ``period`` is ``in_period`` or ``out_of_period``, ``inertia`` is
    granted to the agent's current task, ``collective`` is ``collective``
    times the task's collectivity when a co-member did the same activity in
    the previous minute, and ``pressure`` is ``pressure`` times the number
    of other selectable in-period tasks.
    """

    in_period: float = 1.0
    out_of_period: float = 0.1
    inertia: float = 0.5
    collective: float = 0.5
    pressure: float = 1.0

    def __post_init__(self):
        for name in ("in_period", "out_of_period", "inertia", "collective", "pressure"):
            if getattr(self, name) < 0:
                raise ValueError(f"priority constant {name} must be nonnegative")


@dataclass(frozen=True)
class PriorityScore:
    value: float
    period_factor: float
    urgency: float
    inertia: float
    collective: float
    pressure: float

    @property
    def components(self):
        return (self.period_factor, self.urgency, self.inertia, self.collective, self.pressure)


@dataclass(eq=False)
class TaskInstance:
    """One occurrence of a task on one day.

    ``owner`` is the agent index for individual tasks and ``None`` for
    household-level tasks, which any agent in ``eligible`` may perform
    (several at once counts as one execution minute).
    """

    spec: object
    chosen_duration: int
    day: int
    index: int
    owner: object = None
    eligible: frozenset = frozenset()
    elapsed: int = 0
    state: int = PENDING
    first_start: int = -1
    performers: set = field(default_factory=set)

    @property
    def activity_code(self):
        return self.spec.activity_code

    @property
    def household_level(self):
        return self.owner is None

    @property
    def pp_start(self):
        return self.day * MINUTES_PER_DAY + self.spec.pp_start

    @property
    def pp_end(self):
        return self.day * MINUTES_PER_DAY + self.spec.pp_end

    @property
    def remaining_min(self):
        return max(0.0, self.spec.min_duration - self.elapsed)

    def allows(self, agent_index):
        return self.owner == agent_index if self.owner is not None else agent_index in self.eligible

    def in_period(self, minute):
        return self.pp_start <= minute < self.pp_end

    def selectable(self, agent_index, minute):
        return (self.state in (PENDING, ONGOING) and minute >= self.pp_start
                and self.allows(agent_index))


@dataclass(eq=False)
class AgentState:
    individual: object
    index: int
    current: object = None
    idle: bool = True


@dataclass(eq=False)
class HouseholdState:
    """Mutable state of one household during one day."""

    agents: list
    tasks: list
    config: PriorityConfig = PriorityConfig()
    previous_codes: list = None

    def __post_init__(self):
        if self.previous_codes is None:
            self.previous_codes = [None] * len(self.agents)

    def others_performing(self, agent_index, code):
        return any(c == code for i, c in enumerate(self.previous_codes) if i != agent_index)

    def selectable(self, agent_index, minute):
        return [t for t in self.tasks if t.selectable(agent_index, minute)]


@dataclass
class MinuteReport:
    minute: int
    activities: list  # per agent: TaskInstance or None
    events: list  # (kind, agent index or None, task index)


def compute_priority(agent, task, minute, context, candidates=None):
    """Priority of ``task`` for ``agent`` at absolute ``minute``.

    ``candidates`` is the agent's selectable task list (recomputed when
    omitted); it feeds the pressure component.
    """
    cfg = context.config
    if candidates is None:
        candidates = context.selectable(agent.index, minute)
    inside = task.in_period(minute)
    n_in = sum(1 for t in candidates if t.in_period(minute))
    period = cfg.in_period if inside else cfg.out_of_period
    slack = max(0.0, task.pp_end - minute - task.remaining_min)
    urgency = 1.0 / (1.0 + slack)
    inertia = cfg.inertia if agent.current is task else 0.0
    collective = (cfg.collective * task.spec.collectivity
                  if context.others_performing(agent.index, task.activity_code) else 0.0)
    pressure = cfg.pressure * (n_in - 1 if inside else n_in)
    value = period * (1.0 + urgency) * (1.0 + inertia) * (1.0 + collective) / (1.0 + pressure)
    return PriorityScore(value, period, urgency, inertia, collective, pressure)


def select_task(agent, minute, context):
    """Highest-priority selectable task, or ``None`` when the agent is idle.

    Ties go to the earlier preferred-period end, then to catalog order.
    """
    candidates = context.selectable(agent.index, minute)
    best, best_key = None, None
    for task in candidates:
        score = compute_priority(agent, task, minute, context, candidates)
        key = (-score.value, task.pp_end, task.index)
        if best_key is None or key < best_key:
            best, best_key = task, key
    return best


def abandon_stale(tasks, minute):
    """Pending tasks whose period is over and whose minimum no longer fits today."""
    left = MINUTES_PER_DAY - minute % MINUTES_PER_DAY
    out = []
    for t in tasks:
        if t.state == PENDING and minute >= t.pp_end and left < t.remaining_min:
            t.state = ABANDONED
            out.append(t)
    return out


def step_household(state, minute):
    """Advance every agent of the household by one minute.

    All agents choose from the start-of-minute state, then the chosen tasks
    advance together: a task performed by anyone gains one minute and
    completes once ``elapsed`` reaches its chosen duration. An ongoing task
    nobody performs any more is suspended back to pending if its minimum
    duration has not been reached, and counts as done otherwise.
    """
    events = [("abandoned", None, t.index) for t in abandon_stale(state.tasks, minute)]
    choices = [select_task(a, minute, state) for a in state.agents]

    performed = {}
    for a, task in zip(state.agents, choices):
        if task is not None:
            performed.setdefault(id(task), task).performers.add(a.index)
    for t in state.tasks:
        if t.state == ONGOING and id(t) not in performed:
            t.state = DONE if t.elapsed >= t.spec.min_duration else PENDING
            events.append(("done" if t.state == DONE else "suspended", None, t.index))
    for t in performed.values():
        if t.state == PENDING:
            events.append(("started" if t.first_start < 0 else "resumed", None, t.index))
        if t.first_start < 0:
            t.first_start = minute
        t.state = ONGOING
        t.elapsed += 1
        if t.elapsed >= t.chosen_duration:
            t.state = DONE
            events.append(("completed", None, t.index))
    for a, task in zip(state.agents, choices):
        a.current = task if task is not None and task.state == ONGOING else None
        a.idle = task is None
    state.previous_codes = [t.activity_code if t is not None else None for t in choices]
    return MinuteReport(minute, choices, events)


def close_day(tasks):
    """End-of-day bookkeeping: ongoing tasks past their minimum are done,
    everything else unfinished is abandoned."""
    for t in tasks:
        if t.state == ONGOING and t.elapsed >= t.spec.min_duration:
            t.state = DONE
        elif t.state in (PENDING, ONGOING):
            t.state = ABANDONED
