"""Domestic hot water: shower decisions and a single-node electric tank."""

from dataclasses import dataclass, field, replace

import numba as nb
import numpy as np

from ..calendar import MINUTES_PER_DAY
from ..config import parse_distribution, require_mapping
from ..errors import ConfigError

WATER_HEAT = 4186.0  # J/(kg K), 1 kg per liter
DEFAULT_WINDOWS = ((0, 360), (720, 840), (1320, 1440))


def window_mask(windows):
    """Boolean minute-of-day mask of a list of ``(start, end)`` intervals."""
    mask = np.zeros(MINUTES_PER_DAY, dtype=bool)
    for a, b in windows:
        mask[int(a):int(b)] = True
    return mask


def in_windows(minute_of_day, windows):
    return any(a <= minute_of_day < b for a, b in windows)


def _windows(raw, context):
    out = []
    for w in raw or []:
        try:
            a, b = (int(x) for x in w)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"window must be a [start, end] pair, got {w!r}", context) from exc
        if not 0 <= a < b <= MINUTES_PER_DAY:
            raise ConfigError(f"window {w!r} outside one day", context)
        out.append((a, b))
    return tuple(out)


@dataclass
class DhwSystem:
    """Electric storage water heater of one dwelling.

    Temperatures in °C, volume in liters, powers in W and ``ua`` (standing
    loss coefficient) in W/K.
    """

    volume: float
    setpoint: float = 55.0
    heater_power: float = 2000.0
    windows: tuple = DEFAULT_WINDOWS
    cold: float = 12.0
    ambient: float = 20.0
    ua: float = 1.5
    mix_temperature: float = 40.0
    temperature: float = None

    def __post_init__(self):
        if self.temperature is None:
            self.temperature = self.setpoint
        if self.volume <= 0:
            raise ValueError("tank volume must be positive")

    @property
    def capacity(self):
        """Heat capacity of the tank in J/K."""
        return self.volume * WATER_HEAT

    def enthalpy(self, temperature=None):
        """Heat stored above the cold inlet, J."""
        t = self.temperature if temperature is None else temperature
        return self.capacity * (t - self.cold)


def tank_draw(mixed_liters, temperature, cold, mix_temperature, volume):
    """Liters taken from the tank to deliver ``mixed_liters`` at the mixing temperature."""
    if mixed_liters <= 0:
        return 0.0
    if temperature > mix_temperature:
        v = mixed_liters * (mix_temperature - cold) / (temperature - cold)
    else:
        v = mixed_liters
    return min(v, volume)


def dhw_step(dhw, mixed_liters, minute_of_day):
    """Advance the tank one minute; return ``(heater W, flows)``.

    The draw replaces hot water by cold inlet water, standing losses follow,
    then the heater runs at full power if the minute lies in a heating
    window and the water is below setpoint. ``flows`` reports the heat (J)
    carried out by the draw and lost through the envelope.
    """
    cap = dhw.capacity
    t = dhw.temperature
    v = tank_draw(mixed_liters, t, dhw.cold, dhw.mix_temperature, dhw.volume)
    draw_j = v * WATER_HEAT * (t - dhw.cold)
    t -= v / dhw.volume * (t - dhw.cold)
    loss_j = dhw.ua * (t - dhw.ambient) * 60.0
    t -= loss_j / cap
    power = 0.0
    if in_windows(minute_of_day, dhw.windows) and t < dhw.setpoint:
        power = dhw.heater_power
        t += power * 60.0 / cap
    dhw.temperature = t
    return power, {"tank_liters": v, "draw_j": draw_j, "loss_j": loss_j}


@nb.njit(cache=True)
def run_tank(mixed, window, t0, volume, setpoint, heater_power, cold, ambient, ua, mix_t):
    """Compiled :func:`dhw_step` over a horizon.

    ``mixed`` holds liters at the mixing temperature per minute, ``window``
    the 1440-minute heating mask. Returns heater power, end-of-minute
    temperature, tank liters drawn, draw heat and loss heat per minute.
    """
    n = mixed.shape[0]
    cap = volume * WATER_HEAT
    power = np.zeros(n)
    temp = np.empty(n)
    drawn = np.zeros(n)
    draw_j = np.zeros(n)
    loss_j = np.empty(n)
    t = t0
    for i in range(n):
        if mixed[i] > 0.0:
            if t > mix_t:
                v = mixed[i] * (mix_t - cold) / (t - cold)
            else:
                v = mixed[i]
            v = min(v, volume)
            drawn[i] = v
            draw_j[i] = v * WATER_HEAT * (t - cold)
            t -= v / volume * (t - cold)
        q = ua * (t - ambient) * 60.0
        loss_j[i] = q
        t -= q / cap
        if window[i % 1440] and t < setpoint:
            power[i] = heater_power
            t += heater_power * 60.0 / cap
        temp[i] = t
    return power, temp, drawn, draw_j, loss_j


@dataclass
class DhwConfig:
    """Hot-water settings shared by every dwelling of a run.

    Tank volume grows with household size; heater power is proportional to
    volume. ``quota`` is the distribution of weekly showers per individual
    and ``day_weights`` the relative shower propensity Monday..Sunday.
    Hygiene starts inside ``blocked_windows`` never lead to a shower in
    households that comply (a share ``blocked_compliance`` of them).
    """

    setpoint: float = 55.0
    cold: float = 12.0
    ambient: float = 20.0
    ua: float = 1.5
    mix_temperature: float = 40.0
    volume_base: float = 100.0
    volume_per_member: float = 50.0
    volume_max: float = 300.0
    power_per_liter: float = 10.0
    windows: tuple = DEFAULT_WINDOWS
    shower_liters: float = 50.0
    shower_minutes: int = 8
    shower_task: str = "hygiene"
    quota: dict = field(default_factory=lambda: {5: 1.0})
    day_weights: tuple = (1.0,) * 7
    blocked_windows: tuple = ()
    blocked_compliance: float = 1.0

    def __post_init__(self):
        if len(self.day_weights) != 7 or any(w <= 0 for w in self.day_weights):
            raise ConfigError("day_weights needs 7 positive values")
        if any(float(q) < 0 for q in self.quota):
            raise ConfigError("shower quota must be nonnegative")
        if self.shower_minutes < 1 or self.shower_liters < 0:
            raise ConfigError("shower needs at least one minute and a nonnegative volume")

    def tank_for(self, household_size):
        volume = min(self.volume_max, self.volume_base + self.volume_per_member * household_size)
        return DhwSystem(volume, self.setpoint, self.power_per_liter * volume, self.windows,
                         self.cold, self.ambient, self.ua, self.mix_temperature)

    def draw_quota(self, rng):
        values = np.array([float(q) for q in self.quota])
        probs = np.array(list(self.quota.values()), dtype=float)
        return float(values[np.searchsorted(np.cumsum(probs), rng.random(), side="right")
                            .clip(max=len(values) - 1)])

    @classmethod
    def from_mapping(cls, raw, context="dhw"):
        raw = dict(require_mapping(raw, context))
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown fields {sorted(unknown)}", context)
        if "windows" in raw:
            raw["windows"] = _windows(raw["windows"], f"{context}.windows")
        if "blocked_windows" in raw:
            raw["blocked_windows"] = _windows(raw["blocked_windows"], f"{context}.blocked_windows")
        if "quota" in raw:
            q = raw["quota"]
            raw["quota"] = ({k: v for k, v in parse_distribution(q, f"{context}.quota").items()}
                            if isinstance(q, dict) else {str(q): 1.0})
            raw["quota"] = {float(k): v for k, v in raw["quota"].items()}
        if "day_weights" in raw:
            raw["day_weights"] = tuple(float(w) for w in raw["day_weights"])
        return cls(**raw)

    def to_mapping(self):
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["windows"] = [list(w) for w in self.windows]
        out["blocked_windows"] = [list(w) for w in self.blocked_windows]
        out["day_weights"] = list(self.day_weights)
        out["quota"] = {float(k): float(v) for k, v in self.quota.items()}
        return out

    def blocking(self, windows):
        return replace(self, blocked_windows=tuple(windows))


def shower_probability(quota_left, weight_now, weight_remaining):
    """Chance of a shower at this hygiene start.

    ``weight_remaining`` is the day-weight sum of the hygiene starts still to
    come this week, the current one included.
    """
    if quota_left <= 0 or weight_now <= 0 or weight_remaining <= 0:
        return 0.0
    return float(min(1.0, max(0.0, quota_left * weight_now / weight_remaining)))


def shower_decision(quota_left, weight_now, weight_remaining, rng, blocked=False):
    """Draw whether a hygiene start leads to a shower; returns ``(shower, p)``.

    A uniform is consumed even when the probability is 0 or 1, so blocking
    some starts leaves every later draw unchanged.
    """
    u = rng.random()
    p = 0.0 if blocked else shower_probability(quota_left, weight_now, weight_remaining)
    return bool(u < p), p


def plan_showers(starts, dates, start_minute, weekly_quota, config, rng):
    """Showers of one individual over a horizon.

    ``starts`` are absolute minutes of realized hygiene starts, ``dates``
    the calendar dates of the horizon and ``start_minute`` the offset of the
    first date. The weekly quota applies per ISO week, prorated for weeks cut
    by the horizon; blocked starts are left out of the remaining-weight sum
    so the quota moves to the other starts. Returns the shower minutes and
    the probability used at each start.
    """
    starts = np.sort(np.asarray(starts, dtype=np.int64))
    n_days = len(dates)
    day = (starts - start_minute) // MINUTES_PER_DAY
    dow = np.array([d.weekday() for d in dates], dtype=np.int64)
    week = np.array([d.toordinal() - d.weekday() for d in dates], dtype=np.int64)
    days_in_week = {w: int(np.sum(week == w)) for w in np.unique(week)}
    weights = np.asarray(config.day_weights, dtype=float)[dow[day]] if n_days else np.empty(0)
    blocked = np.array([in_windows(int(m) % MINUTES_PER_DAY, config.blocked_windows)
                        for m in starts], dtype=bool)
    eligible_w = np.where(blocked, 0.0, weights)
    showers, probs = [], np.zeros(len(starts))
    quota_left = {w: weekly_quota * n / 7.0 for w, n in days_in_week.items()}
    wk = week[day]
    # remaining eligible weight per start, within the same week
    remaining = np.zeros(len(starts))
    for w in np.unique(wk):
        idx = np.flatnonzero(wk == w)
        remaining[idx] = np.cumsum(eligible_w[idx][::-1])[::-1]
    for i, m in enumerate(starts):
        shower, p = shower_decision(quota_left[wk[i]], weights[i], remaining[i], rng,
                                    blocked=bool(blocked[i]))
        probs[i] = p
        if shower:
            quota_left[wk[i]] -= 1.0
            showers.append(int(m))
    return np.array(showers, dtype=np.int64), probs
