"""Automatic calibration of appliance unit powers against energy targets."""

from dataclasses import dataclass, field
import csv
import datetime as dt
import warnings

import numpy as np

from ..calendar import SEASONS, season_of
from ..errors import ConfigError
from .load import DHW, simulate_loads

DAYS_PER_YEAR = 365.0
MIN_FACTOR, MAX_FACTOR = 0.5, 2.0
# One Monday-starting week per season.
DEFAULT_WEEKS = (dt.date(2019, 1, 14), dt.date(2019, 4, 15), dt.date(2019, 7, 15),
                 dt.date(2019, 10, 14))


@dataclass
class CalibrationResult:
    appliances: object
    converged: bool
    iterations: int
    factors: dict
    final: dict
    targets: dict
    history: list = field(default_factory=list)

    def errors(self):
        """Relative error per category after the last update."""
        return {k: self.final[k] / self.targets[k] - 1.0 for k in self.targets}

    def write_report(self, path):
        """CSV rows ``iteration, category, simulated, target, factor``.

        Rows of iteration ``i`` hold the energy the ``i``-th factor was
        computed from; the closing ``final`` rows hold the outcome.
        """
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "category", "simulated", "target", "factor"])
            for it, sim, fac in self.history:
                for k in self.targets:
                    w.writerow([it, k, f"{sim[k]:.6g}", f"{self.targets[k]:.6g}", f"{fac[k]:.6g}"])
            for k in self.targets:
                w.writerow(["final", k, f"{self.final[k]:.6g}", f"{self.targets[k]:.6g}", ""])


def annual_energy(runs):
    """Mean annual kWh per dwelling and category from seasonal runs.

    ``runs`` is a list of ``(calendar, LoadResult)``; each season present
    contributes its mean daily energy for a quarter of the year.
    """
    by_season = {}
    for calendar, result in runs:
        seasons = {season_of(d) for d in calendar.dates}
        if len(seasons) != 1:
            raise ValueError(f"run starting {calendar.start} spans several seasons")
        daily = result.energy.mean(axis=0) / calendar.n_days
        by_season.setdefault(seasons.pop(), []).append(daily)
    missing = [s for s in SEASONS if s not in by_season]
    if missing:
        raise ValueError(f"calibration needs one run per season; missing {missing}")
    per_day = np.mean([np.mean(v, axis=0) for v in by_season.values()], axis=0)
    cats = runs[0][1].categories
    return dict(zip(cats, (per_day * DAYS_PER_YEAR / 1000.0).tolist()))


def calibrate_unit_powers(population, traces, appliances, targets, seed=0, *, tol=0.01,
                          max_iter=20):
    """Scale the powers of each category until its annual energy meets its target.

    ``traces`` is a list of ``(calendar, ActivityTrace)`` covering every
    season, reused at each iteration. ``targets`` maps a category to annual
    kWh per dwelling. Each iteration multiplies every power of category
    ``k`` by ``clamp(target_k / simulated_k, 0.5, 2)``. Categories without a
    target keep their powers.
    """
    cats = set(appliances.categories)
    for k, v in targets.items():
        if k not in cats:
            raise ConfigError(f"calibration target for unknown category {k!r}"
                              + (" (hot water is not calibrated)" if k == DHW else ""))
        if not v > 0:
            raise ConfigError(f"calibration target for {k!r} must be positive")

    def evaluate(app):
        runs = [(cal, simulate_loads(population, tr, cal, app, seed, count_activations=False))
                for cal, tr in traces]
        return annual_energy(runs)

    cumulative = {k: 1.0 for k in targets}
    history = []
    current = appliances
    sim = evaluate(current)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        factors = {}
        for k, target in targets.items():
            if sim[k] <= 0:
                raise ValueError(f"category {k!r} uses no energy; it cannot be scaled")
            factors[k] = float(np.clip(target / sim[k], MIN_FACTOR, MAX_FACTOR))
        history.append((it, dict(sim), factors))
        current = current.scaled(factors)
        for k, f in factors.items():
            cumulative[k] *= f
        sim = evaluate(current)
        if all(abs(sim[k] / t - 1.0) <= tol for k, t in targets.items()):
            converged = True
            break
    if not converged:
        warnings.warn(f"calibration did not reach {tol:.0%} in {max_iter} iterations",
                      RuntimeWarning, stacklevel=2)
    return CalibrationResult(current, converged, it, cumulative,
                             {k: sim[k] for k in targets}, dict(targets), history)
