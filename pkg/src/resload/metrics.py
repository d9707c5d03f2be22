"""Validation metrics between simulated and reference load curves."""

from dataclasses import asdict, dataclass
import csv
import datetime as dt

import numba as nb
import numpy as np

from .errors import InsufficientDataError

SLOTS_PER_WEEK = 336
SLOT_MINUTES = 30
WEEKS = 4
DAY_NAMES = ("monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday")


@dataclass
class AverageWeek:
    """Mean power (W) per half-hour slot of a Monday-aligned week."""

    values: np.ndarray
    first_monday: dt.date = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (SLOTS_PER_WEEK,):
            raise ValueError(f"an average week has {SLOTS_PER_WEEK} slots, got {self.values.shape}")
        if np.any(self.values < -1e-9):
            raise ValueError("average week values must be nonnegative")

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["slot", "day", "time", "watts"])
            for i, v in enumerate(self.values.tolist()):
                m = (i % 48) * SLOT_MINUTES
                w.writerow([i, DAY_NAMES[i // 48], f"{m // 60:02d}:{m % 60:02d}", f"{v:.6g}"])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        return cls(np.array([float(r["watts"]) for r in rows]))


def reduce_to_average_week(curve, weeks=WEEKS):
    """Average the first ``weeks`` whole Monday-aligned weeks of a curve.

    Steps are first averaged into 30-minute slots, then slot-wise across
    weeks. Raises :class:`InsufficientDataError` when the curve holds fewer
    complete weeks.
    """
    if SLOT_MINUTES % curve.timestep:
        raise ValueError(f"timestep {curve.timestep} does not divide {SLOT_MINUTES} minutes")
    start = curve.start
    midnight = dt.datetime.combine(start.date(), dt.time())
    if start != midnight:
        midnight += dt.timedelta(days=1)
    monday = midnight + dt.timedelta(days=(7 - midnight.weekday()) % 7)
    offset = int((monday - start).total_seconds() // 60)
    if offset % curve.timestep:
        raise ValueError("curve steps are not aligned on midnight")
    k0 = offset // curve.timestep
    per_week = 7 * 1440 // curve.timestep
    need = k0 + weeks * per_week
    if len(curve.values) < need:
        raise InsufficientDataError(
            f"need {weeks} whole Monday-aligned weeks ({need * curve.timestep} min from "
            f"{start}), curve covers {curve.minutes} min")
    block = curve.values[k0:need].reshape(weeks, SLOTS_PER_WEEK, SLOT_MINUTES // curve.timestep)
    return AverageWeek(block.mean(axis=2).mean(axis=0), monday.date())


def _pair(a, b, min_len=1):
    a = np.asarray(getattr(a, "values", a), dtype=float)
    b = np.asarray(getattr(b, "values", b), dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"series lengths differ: {a.shape} vs {b.shape}")
    if len(a) < min_len:
        raise ValueError(f"series need at least {min_len} values")
    return a, b


def mae(a, b):
    a, b = _pair(a, b)
    return float(np.mean(np.abs(a - b)))


def rmse(a, b):
    a, b = _pair(a, b)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def mape(a, b):
    """Mean of ``|a - b| / |b|`` with ``b`` the reference."""
    a, b = _pair(a, b)
    if np.any(b == 0):
        raise ValueError("reference contains zeros; MAPE is undefined (use WAPE)")
    return float(np.mean(np.abs(a - b) / np.abs(b)))


def wape(a, b):
    a, b = _pair(a, b)
    denom = np.sum(np.abs(b))
    if denom == 0:
        raise ValueError("reference is identically zero; WAPE is undefined")
    return float(np.sum(np.abs(a - b)) / denom)


def mda(a, b):
    """Share of steps where both series move in the same direction.

    A flat step matches only a flat step.
    """
    a, b = _pair(a, b, min_len=2)
    return float(np.mean(np.sign(np.diff(a)) == np.sign(np.diff(b))))


@nb.njit(cache=True)
def _frechet(a, b):
    n, m = a.shape[0], b.shape[0]
    ca = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            d = abs(a[i] - b[j])
            if i == 0 and j == 0:
                ca[i, j] = d
            elif i == 0:
                ca[i, j] = max(ca[i, j - 1], d)
            elif j == 0:
                ca[i, j] = max(ca[i - 1, j], d)
            else:
                ca[i, j] = max(min(ca[i - 1, j], ca[i - 1, j - 1], ca[i, j - 1]), d)
    return ca[n - 1, m - 1]


def frechet_discrete(a, b):
    """Discrete Fréchet distance between two power series.

    Points are ordered by slot; the ground distance is the absolute power
    difference, so the result is in W.
    """
    a = np.asarray(getattr(a, "values", a), dtype=float)
    b = np.asarray(getattr(b, "values", b), dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("Fréchet distance needs nonempty series")
    return float(_frechet(a, b))


@dataclass
class MetricReport:
    mae: float
    rmse: float
    mape: float
    wape: float
    mda: float
    frechet: float

    UNITS = {"mae": "W", "rmse": "W", "mape": "fraction", "wape": "fraction", "mda": "fraction",
             "frechet": "W"}

    def rows(self):
        return [(k, v, self.UNITS[k]) for k, v in asdict(self).items()]

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric", "value", "unit"])
            for k, v, u in self.rows():
                w.writerow([k, "" if np.isnan(v) else f"{v:.6g}", u])


def compare(model, reference):
    """All six metrics of ``model`` against ``reference``.

    MAPE is reported as NaN when the reference has zero slots.
    """
    a, b = _pair(model, reference, min_len=2)
    try:
        m = mape(a, b)
    except ValueError:
        m = float("nan")
    return MetricReport(mae(a, b), rmse(a, b), m, wape(a, b), mda(a, b), frechet_discrete(a, b))
