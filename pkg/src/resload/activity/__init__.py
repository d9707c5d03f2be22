"""Minute-by-minute agent-based activity simulation."""

from .assign import AWAY, IDLE, ActivityConfig, HouseholdPlan, assign_day, plan_household
from .core import (ABANDONED, DONE, ONGOING, PENDING, STATE_NAMES, AgentState, HouseholdState,
                   MinuteReport, PriorityConfig, PriorityScore, TaskInstance, close_day,
                   compute_priority, select_task, step_household)
from .engine import (code_vocabulary, make_calendar, reference_run, run_simulation,
                     simulate_household)
from .kernel import run_plan
from .trace import ActivityTrace

__all__ = [
    "AWAY", "IDLE", "ActivityConfig", "HouseholdPlan", "assign_day", "plan_household",
    "ABANDONED", "DONE", "ONGOING", "PENDING", "STATE_NAMES", "AgentState", "HouseholdState",
    "MinuteReport", "PriorityConfig", "PriorityScore", "TaskInstance", "close_day",
    "compute_priority", "select_task", "step_household", "code_vocabulary", "make_calendar",
    "reference_run", "run_simulation", "simulate_household", "run_plan", "ActivityTrace",
]
