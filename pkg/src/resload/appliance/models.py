"""Appliance catalog: use models, probability-of-use tables and composites."""

from dataclasses import dataclass, field, replace

import numpy as np

from ..calendar import DAY_TYPES, MINUTES_PER_DAY, SEASONS
from ..config import load_yaml, require_mapping
from ..errors import ConfigError

BAND_NAMES = ("night", "morning", "midday", "afternoon", "evening")
DEFAULT_BAND_EDGES = (0, 420, 660, 840, 1080, 1440)
DEFAULT_BURST = 5


@dataclass(frozen=True)
class CycleProfile:
    """Back-to-back ``(minutes, W)`` phases of a machine program."""

    phases: tuple

    def __post_init__(self):
        phases = tuple((int(d), float(p)) for d, p in self.phases)
        if not phases or sum(d for d, _ in phases) <= 0:
            raise ValueError("cycle profile needs a positive total duration")
        if any(d < 0 or p < 0 for d, p in phases):
            raise ValueError("cycle phases need nonnegative durations and powers")
        object.__setattr__(self, "phases", phases)

    @property
    def duration(self):
        return sum(d for d, _ in self.phases)

    @property
    def energy_wh(self):
        return sum(d * p for d, p in self.phases) / 60.0

    def as_array(self):
        """Power per minute over the whole cycle."""
        return np.repeat([p for _, p in self.phases], [d for d, _ in self.phases]).astype(float)

    def scaled(self, factor):
        return CycleProfile(tuple((d, p * factor) for d, p in self.phases))


@dataclass(frozen=True)
class Forced:
    kind = "forced"


@dataclass(frozen=True)
class Fractional:
    fraction: float
    burst: int = DEFAULT_BURST
    kind = "fractional"

    def __post_init__(self):
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError(f"fraction must lie in (0, 1], got {self.fraction}")
        if self.burst < 1:
            raise ValueError("burst length must be at least one minute")


@dataclass(frozen=True)
class Cycle:
    profile: CycleProfile
    kind = "cycle"


def band_index(minute_of_day, edges=DEFAULT_BAND_EDGES):
    """Time-of-day band of a minute (vectorized)."""
    idx = np.searchsorted(np.asarray(edges[1:-1]), np.asarray(minute_of_day) % MINUTES_PER_DAY,
                          side="right")
    return idx if np.ndim(idx) else int(idx)


def _parse_selector(key, context):
    if key == "default":
        return ()
    out = []
    for token in str(key).split("|"):
        token = token.strip()
        if token in SEASONS:
            out.append(("season", SEASONS.index(token)))
        elif token in DAY_TYPES:
            out.append(("day_type", DAY_TYPES.index(token)))
        elif token in BAND_NAMES:
            out.append(("band", BAND_NAMES.index(token)))
        else:
            raise ConfigError(f"unknown PU selector {token!r}", context)
    dims = [d for d, _ in out]
    if len(set(dims)) != len(dims):
        raise ConfigError(f"selector {key!r} repeats a dimension", context)
    return tuple(out)


def _check_probability(value, context):
    try:
        p = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"probability is not a number: {value!r}", context) from exc
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"probability outside [0, 1]: {p}", context)
    return p


@dataclass
class PuTable:
    """Probability of use per task code, season, day type and time-of-day band.

    ``entries`` maps a task code to a ``(4, 3, 5)`` array indexed by
    season, day type and band. A task absent from the table never triggers
    the appliance.
    """

    entries: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, raw, context="pu"):
        require_mapping(raw or {}, context)
        entries = {}
        for code, value in (raw or {}).items():
            ctx = f"{context}.{code}"
            grid = np.zeros((len(SEASONS), len(DAY_TYPES), len(BAND_NAMES)))
            rules = value if isinstance(value, dict) else {"default": value}
            parsed = [(_parse_selector(k, ctx), _check_probability(v, f"{ctx}.{k}"))
                      for k, v in rules.items()]
            # later and more specific rules win
            for sel, p in sorted(parsed, key=lambda r: len(r[0])):
                idx = [slice(None)] * 3
                for dim, i in sel:
                    idx[("season", "day_type", "band").index(dim)] = i
                grid[tuple(idx)] = p
            entries[str(code)] = grid
        return cls(entries)

    def to_mapping(self):
        out = {}
        for code, grid in self.entries.items():
            flat = np.unique(grid)
            if len(flat) == 1:
                out[code] = float(flat[0])
                continue
            rules = {}
            for s, season in enumerate(SEASONS):
                for d, day_type in enumerate(DAY_TYPES):
                    for b, band in enumerate(BAND_NAMES):
                        rules[f"{season}|{day_type}|{band}"] = float(grid[s, d, b])
            out[code] = rules
        return out

    def prob(self, code, season, day_type, band):
        grid = self.entries.get(code)
        if grid is None:
            return 0.0
        return float(grid[SEASONS.index(season), DAY_TYPES.index(day_type), band])

    def array_for(self, codes):
        """``(len(codes), 4, 3, 5)`` table plus a mask of codes with an entry."""
        arr = np.zeros((len(codes), len(SEASONS), len(DAY_TYPES), len(BAND_NAMES)))
        covered = np.zeros(len(codes), dtype=bool)
        for i, c in enumerate(codes):
            if c in self.entries:
                arr[i] = self.entries[c]
                covered[i] = True
        return arr, covered


@dataclass(frozen=True)
class ApplianceModel:
    """One appliance kind and how tasks drive it.

    ``unit_power`` is the on-power of Forced and Fractional appliances; a
    Cycle appliance draws its profile instead. An appliance is present in a
    dwelling owning an appliance of the same name, or everywhere when
    ``always`` is set.
    """

    name: str
    category: str
    unit_power: float
    aum: object
    pu: PuTable
    standby_power: float = 0.0
    always: bool = False

    def __post_init__(self):
        if self.unit_power < 0 or self.standby_power < 0:
            raise ValueError(f"{self.name}: powers must be nonnegative")

    def scaled(self, factor):
        aum = self.aum
        if isinstance(aum, Cycle):
            aum = Cycle(aum.profile.scaled(factor))
        return replace(self, unit_power=self.unit_power * factor, aum=aum,
                       standby_power=self.standby_power * factor)


@dataclass(frozen=True)
class CompositeAppliance:
    """Group of minor appliances sharing an energy category plus a baseline.

    ``baseline`` holds one power per time-of-day band.
    """

    name: str
    components: tuple
    baseline: tuple

    def __post_init__(self):
        if any(b < 0 for b in self.baseline):
            raise ValueError(f"{self.name}: baseline must be nonnegative")

    def baseline_day(self, edges=DEFAULT_BAND_EDGES):
        """Baseline power for every minute of a day."""
        return np.asarray(self.baseline, dtype=float)[band_index(np.arange(MINUTES_PER_DAY), edges)]

    def scaled(self, factor):
        return replace(self, baseline=tuple(b * factor for b in self.baseline))


def _parse_baseline(raw, context):
    if isinstance(raw, dict):
        unknown = set(raw) - set(BAND_NAMES)
        if unknown:
            raise ConfigError(f"unknown bands {sorted(unknown)}", context)
        vals = tuple(float(raw.get(b, 0.0)) for b in BAND_NAMES)
    else:
        vals = (float(raw or 0.0),) * len(BAND_NAMES)
    if any(v < 0 for v in vals):
        raise ConfigError("baseline must be nonnegative", context)
    return vals


def _parse_aum(raw, context):
    raw = require_mapping(raw or {"kind": "forced"}, context)
    kind = raw.get("kind", "forced")
    try:
        if kind == "forced":
            return Forced()
        if kind == "fractional":
            return Fractional(float(raw["fraction"]), int(raw.get("burst", DEFAULT_BURST)))
        if kind == "cycle":
            return Cycle(CycleProfile(tuple(tuple(p) for p in raw["profile"])))
    except KeyError as exc:
        raise ConfigError(f"missing field {exc.args[0]!r}", context) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), context) from exc
    raise ConfigError(f"unknown AUM kind {kind!r}", context)


def _aum_mapping(aum):
    if isinstance(aum, Fractional):
        return {"kind": "fractional", "fraction": aum.fraction, "burst": aum.burst}
    if isinstance(aum, Cycle):
        return {"kind": "cycle", "profile": [list(p) for p in aum.profile.phases]}
    return {"kind": "forced"}


@dataclass
class ApplianceSet:
    """Every appliance model, composite and the hot-water settings of a run."""

    models: dict
    composites: dict = field(default_factory=dict)
    dhw: object = None
    band_edges: tuple = DEFAULT_BAND_EDGES

    def __post_init__(self):
        edges = tuple(int(e) for e in self.band_edges)
        if (len(edges) != len(BAND_NAMES) + 1 or edges[0] != 0 or edges[-1] != MINUTES_PER_DAY
                or any(b <= a for a, b in zip(edges, edges[1:]))):
            raise ConfigError(f"band edges must be 6 increasing minutes from 0 to 1440, got {edges}")
        self.band_edges = edges
        for comp in self.composites.values():
            for c in comp.components:
                if c not in self.models:
                    raise ConfigError(f"composite {comp.name!r} lists unknown appliance {c!r}")

    @property
    def categories(self):
        """Energy categories in first-seen order (models, then composites)."""
        seen = []
        for m in self.models.values():
            if m.category not in seen:
                seen.append(m.category)
        for c in self.composites.values():
            if c.name not in seen:
                seen.append(c.name)
        return tuple(seen)

    def scaled(self, factors):
        """Copy with every power of category ``k`` multiplied by ``factors[k]``."""
        models = {n: (m.scaled(factors[m.category]) if m.category in factors else m)
                  for n, m in self.models.items()}
        comps = {n: (c.scaled(factors[c.name]) if c.name in factors else c)
                 for n, c in self.composites.items()}
        return replace(self, models=models, composites=comps)

    def present(self, owned):
        """Models present in a dwelling owning the appliance categories ``owned``."""
        owned = set(owned)
        return [m for m in self.models.values() if m.always or m.name in owned]

    # -- config ------------------------------------------------------------------

    @classmethod
    def from_mapping(cls, raw, context="appliances"):
        from .dhw import DhwConfig

        raw = require_mapping(raw, context)
        comps_raw = require_mapping(raw.get("composites") or {}, f"{context}.composites")
        owner = {}
        for cname, body in comps_raw.items():
            for c in (body or {}).get("components", []) or []:
                owner[c] = cname
        models = {}
        for name, body in require_mapping(raw.get("appliances") or {}, f"{context}.appliances").items():
            ctx = f"{context}.appliances.{name}"
            body = require_mapping(body or {}, ctx)
            aum = _parse_aum(body.get("aum"), f"{ctx}.aum")
            power = body.get("power")
            if power is None:
                if not isinstance(aum, Cycle):
                    raise ConfigError("missing field 'power'", ctx)
                power = max(p for _, p in aum.profile.phases)
            try:
                models[name] = ApplianceModel(
                    name=name, category=str(body.get("category", owner.get(name, name))),
                    unit_power=float(power), aum=aum,
                    pu=PuTable.from_mapping(body.get("pu"), f"{ctx}.pu"),
                    standby_power=float(body.get("standby", 0.0)),
                    always=bool(body.get("always", False)))
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(str(exc), ctx) from exc
        composites = {}
        for cname, body in comps_raw.items():
            body = body or {}
            composites[cname] = CompositeAppliance(
                cname, tuple(body.get("components", []) or []),
                _parse_baseline(body.get("baseline"), f"{context}.composites.{cname}.baseline"))
        dhw = DhwConfig.from_mapping(raw["dhw"], f"{context}.dhw") if raw.get("dhw") else None
        return cls(models, composites, dhw, tuple(raw.get("bands", DEFAULT_BAND_EDGES)))

    def to_mapping(self):
        out = {"bands": list(self.band_edges), "appliances": {}, "composites": {}}
        for n, m in self.models.items():
            body = {"category": m.category, "power": m.unit_power, "standby": m.standby_power,
                    "aum": _aum_mapping(m.aum), "pu": m.pu.to_mapping()}
            if m.always:
                body["always"] = True
            out["appliances"][n] = body
        for n, c in self.composites.items():
            out["composites"][n] = {"components": list(c.components),
                                    "baseline": dict(zip(BAND_NAMES, c.baseline))}
        if self.dhw is not None:
            out["dhw"] = self.dhw.to_mapping()
        return out

    def write_yaml(self, path):
        import yaml

        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(self.to_mapping(), fh, sort_keys=False)


def load_appliances(path="builtin:appliances.yaml"):
    return ApplianceSet.from_mapping(load_yaml(path), str(path))
