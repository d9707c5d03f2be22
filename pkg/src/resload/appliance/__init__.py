"""Appliance use, hot water and load curves."""

from .calibrate import (DEFAULT_WEEKS, CalibrationResult, annual_energy,
                        calibrate_unit_powers)
from .dhw import (DhwConfig, DhwSystem, dhw_step, plan_showers, run_tank, shower_decision,
                  shower_probability, tank_draw, window_mask)
from .load import DHW, LoadCurve, LoadResult, aggregate_load, simulate_loads
from .models import (BAND_NAMES, DEFAULT_BAND_EDGES, ApplianceModel, ApplianceSet,
                     CompositeAppliance, Cycle, CycleProfile, Forced, Fractional, PuTable,
                     band_index, load_appliances)
from .realize import (Activation, CycleScheduler, PowerSegment, draw_activations,
                      dwelling_power, fractional_offsets, on_time, realize, realize_cycle,
                      realize_forced, realize_fractional)

__all__ = [
    "DEFAULT_WEEKS", "CalibrationResult", "annual_energy", "calibrate_unit_powers",
    "DhwConfig", "DhwSystem", "dhw_step", "plan_showers", "run_tank", "shower_decision",
    "shower_probability", "tank_draw", "window_mask",
    "DHW", "LoadCurve", "LoadResult", "aggregate_load", "simulate_loads",
    "BAND_NAMES", "DEFAULT_BAND_EDGES", "ApplianceModel", "ApplianceSet", "CompositeAppliance",
    "Cycle", "CycleProfile", "Forced", "Fractional", "PuTable", "band_index", "load_appliances",
    "Activation", "CycleScheduler", "PowerSegment", "draw_activations", "dwelling_power",
    "fractional_offsets", "on_time", "realize", "realize_cycle", "realize_forced",
    "realize_fractional",
]
