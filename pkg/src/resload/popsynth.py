"""Synthetic population of individuals, households, dwellings and appliances.

Synthesis is sequential sampling: household attributes first, then its
members, then the dwelling, then the appliance inventory. Every attribute is
drawn either from a marginal distribution or from a conditional table keyed
on previously sampled attributes. Iterative proportional fitting could slot in
at :func:`synthesize_population` by replacing the per-household draws with
draws from a fitted joint table; the public types would not change.
"""

from dataclasses import dataclass, field
import csv
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .config import load_yaml, parse_distribution, require_mapping
from .errors import ConfigError, SchemaError

SCOPES = ("household", "individual", "dwelling")
EMPLOYMENT = ("active", "inactive", "retired", "student")
DEFAULT_AGE_BANDS = (0, 15, 25, 50, 65)
DEFAULT_MAX_AGE = 95
MAX_HOUSEHOLD_SIZE = 12

REQUIRED = {
    "household": ("size", "family_type", "energy_tariff"),
    "individual": ("gender", "age_band", "employment"),
    "dwelling": ("dwelling_type", "insulation", "location"),
}
# attributes available to conditionals without being sampled from the spec
BUILTINS = {"individual": ("role",), "household": (), "dwelling": ()}

INDIVIDUAL_COLUMNS = ("id", "household_id", "age", "gender", "employment", "type_key")
HOUSEHOLD_COLUMNS = ("id", "size", "member_ids", "family_type", "energy_tariff", "weekend_away")
DWELLING_COLUMNS = ("id", "household_id", "floor_area", "dwelling_type", "insulation", "location")
APPLIANCE_COLUMNS = ("id", "dwelling_id", "category")


def age_band_labels(edges=DEFAULT_AGE_BANDS):
    labels = []
    for lo, hi in zip(edges, list(edges[1:]) + [None]):
        labels.append(f"{lo}+" if hi is None else f"{lo}-{hi - 1}")
    return tuple(labels)


def age_band_of(age, edges=DEFAULT_AGE_BANDS):
    idx = int(np.searchsorted(np.asarray(edges), age, side="right")) - 1
    return age_band_labels(edges)[max(idx, 0)]


@dataclass(frozen=True)
class ConditionalRule:
    """``attribute`` drawn from ``table[parent values]`` (``default`` otherwise).

    Table keys join parent values with ``|`` in the order of ``parents``.
    For appliance ownership the table values are plain probabilities.
    """

    attribute: str
    parents: tuple
    table: dict
    default: object = None

    def lookup(self, values):
        key = "|".join(str(v) for v in values)
        if key in self.table:
            return self.table[key]
        if self.default is not None:
            return self.default
        raise KeyError(f"{self.attribute}: no table entry for {key!r} and no default")


@dataclass(frozen=True)
class FloorAreaSpec:
    mean: float = 45.0
    sd: float = 12.0
    minimum: float = 12.0
    per_extra_member: float = 15.0


@dataclass
class PopulationSpec:
    marginals: dict
    conditionals: list
    appliance_ownership: dict
    floor_area: FloorAreaSpec = field(default_factory=FloorAreaSpec)
    age_bands: tuple = DEFAULT_AGE_BANDS
    max_age: int = DEFAULT_MAX_AGE

    def __post_init__(self):
        self.validate()

    @property
    def band_labels(self):
        return age_band_labels(self.age_bands)

    def rule_for(self, name):
        for rule in self.conditionals:
            if rule.attribute == name:
                return rule
        return None

    def attributes(self, scope):
        names = [k.split(".", 1)[1] for k in self.marginals if k.startswith(scope + ".")]
        names += [r.attribute.split(".", 1)[1] for r in self.conditionals
                  if r.attribute.startswith(scope + ".")]
        return names

    def validate(self):
        edges = tuple(int(e) for e in self.age_bands)
        if not edges or edges[0] != 0 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise ConfigError(f"age bands must start at 0 and increase: {edges}", "age_bands")
        self.age_bands = edges
        for name, dist in self.marginals.items():
            _check_dist(dist, name)
        defined = set(self.marginals) | {r.attribute for r in self.conditionals}
        for scope in SCOPES:
            defined |= {f"{scope}.{b}" for b in BUILTINS[scope]}
        for rule in self.conditionals:
            for parent in rule.parents:
                if parent not in defined:
                    raise ConfigError(f"unknown parent attribute {parent!r}", rule.attribute)
            if not rule.attribute.startswith("appliance."):
                for key, dist in rule.table.items():
                    _check_dist(dist, f"{rule.attribute}[{key}]")
                if rule.default is not None:
                    _check_dist(rule.default, f"{rule.attribute}[default]")
        for scope, names in REQUIRED.items():
            for n in names:
                if f"{scope}.{n}" not in defined:
                    raise ConfigError(f"required attribute {scope}.{n} is not defined", scope)
        for cat, own in self.appliance_ownership.items():
            probs = [own] if not isinstance(own, ConditionalRule) else (
                list(own.table.values()) + ([own.default] if own.default is not None else []))
            for p in probs:
                if not 0.0 <= float(p) <= 1.0:
                    raise ConfigError(f"ownership probability {p} outside [0, 1]", f"appliances.{cat}")
        sizes = self._support("household.size")
        for s in sizes:
            if not s.isdigit() or not 1 <= int(s) <= MAX_HOUSEHOLD_SIZE:
                raise ConfigError(f"household size {s!r} outside 1..{MAX_HOUSEHOLD_SIZE}", "household.size")
        for band in self._support("individual.age_band"):
            if band not in self.band_labels:
                raise ConfigError(f"unknown age band {band!r}; bands are {self.band_labels}",
                                  "individual.age_band")
        for emp in self._support("individual.employment"):
            if emp not in EMPLOYMENT:
                raise ConfigError(f"unknown employment {emp!r}", "individual.employment")
        for scope in SCOPES:
            _topological(self, scope)

    def _support(self, name):
        if name in self.marginals:
            return set(self.marginals[name])
        rule = self.rule_for(name)
        out = set()
        for dist in list(rule.table.values()) + ([rule.default] if rule.default else []):
            out |= set(dist)
        return out


def _check_dist(dist, context):
    total = sum(dist.values())
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"distribution sums to {total:.12g}, expected 1", context)
    if any(p < 0 or p > 1 for p in dist.values()):
        raise ConfigError("probability outside [0, 1]", context)


def _qualify(parent, scope):
    return parent if "." in parent else f"{scope}.{parent}"


def _topological(spec, scope):
    names = spec.attributes(scope)
    deps = {}
    for n in names:
        rule = spec.rule_for(f"{scope}.{n}")
        deps[n] = [p.split(".", 1)[1] for p in (rule.parents if rule else ())
                   if p.startswith(scope + ".") and p.split(".", 1)[1] in names]
    order, state = [], {}

    def visit(n):
        if state.get(n) == 1:
            raise ConfigError(f"cyclic dependency through {scope}.{n}", scope)
        if state.get(n) == 2:
            return
        state[n] = 1
        for d in deps[n]:
            visit(d)
        state[n] = 2
        order.append(n)

    # size first so that member counts are known before anything else
    for n in sorted(names, key=lambda x: (x != "size", x)):
        visit(n)
    return order


def load_population_spec(path):
    """Read and validate a population spec file (YAML).

    Layout::

        age_bands: [0, 15, 25, 50, 65]
        household:
          size: {1: 0.36, 2: 0.33, ...}
          family_type:
            given: [size]
            table: {"1": {single: 1.0}}
            default: {couple: 0.6, ...}
        individual: {...}
        dwelling:
          location: {north: 0.6, south: 0.4}
          floor_area: {mean: 45, sd: 12, min: 12, per_extra_member: 15}
        appliances:
          tv: 0.95
          air_conditioner: {given: [dwelling.location], table: {north: 0.05, south: 0.3}}
    """
    raw = load_yaml(path)
    ctx = str(path)
    require_mapping(raw, ctx)
    marginals, conditionals, ownership = {}, [], {}
    floor = FloorAreaSpec()
    for scope in SCOPES:
        section = raw.get(scope)
        if section is None:
            raise ConfigError(f"missing section {scope!r}", ctx)
        require_mapping(section, f"{ctx}: {scope}")
        for attr, body in section.items():
            name = f"{scope}.{attr}"
            if scope == "dwelling" and attr == "floor_area":
                require_mapping(body, f"{ctx}: {name}")
                floor = FloorAreaSpec(
                    mean=float(body.get("mean", floor.mean)),
                    sd=float(body.get("sd", floor.sd)),
                    minimum=float(body.get("min", floor.minimum)),
                    per_extra_member=float(body.get("per_extra_member", floor.per_extra_member)),
                )
                if floor.minimum <= 0:
                    raise ConfigError("floor_area.min must be positive", f"{ctx}: {name}")
                continue
            if isinstance(body, dict) and "given" in body:
                conditionals.append(_parse_conditional(name, scope, body, f"{ctx}: {name}", dists=True))
            else:
                marginals[name] = parse_distribution(body, f"{ctx}: {name}")
    for cat, body in (raw.get("appliances") or {}).items():
        name = f"appliance.{cat}"
        if isinstance(body, dict):
            ownership[str(cat)] = _parse_conditional(name, "dwelling", body, f"{ctx}: {name}", dists=False)
        else:
            ownership[str(cat)] = float(body)
    try:
        return PopulationSpec(
            marginals=marginals,
            conditionals=conditionals,
            appliance_ownership=ownership,
            floor_area=floor,
            age_bands=tuple(raw.get("age_bands", DEFAULT_AGE_BANDS)),
            max_age=int(raw.get("max_age", DEFAULT_MAX_AGE)),
        )
    except ConfigError as exc:
        raise ConfigError(str(exc), ctx) from exc


def _parse_conditional(name, scope, body, ctx, dists):
    parents = body.get("given")
    if isinstance(parents, str):
        parents = [parents]
    if not parents:
        raise ConfigError("conditional needs a non-empty 'given' list", ctx)
    parents = tuple(_qualify(str(p), scope) for p in parents)
    table_raw = body.get("table") or {}
    require_mapping(table_raw, ctx)
    parse = (lambda v, c: parse_distribution(v, c)) if dists else (lambda v, c: float(v))
    table = {str(k): parse(v, f"{ctx}[{k}]") for k, v in table_raw.items()}
    default = body.get("default")
    if default is not None:
        default = parse(default, f"{ctx}[default]")
    return ConditionalRule(attribute=name, parents=parents, table=table, default=default)


@dataclass
class Individual:
    id: int
    household_id: int
    age: int
    gender: str
    employment: str
    attributes: dict = field(default_factory=dict)

    @property
    def type_key(self):
        return individual_type_key(self)


@dataclass
class Household:
    id: int
    member_ids: list
    family_type: str
    energy_tariff: str
    weekend_away: bool = False
    attributes: dict = field(default_factory=dict)

    @property
    def size(self):
        return len(self.member_ids)


@dataclass
class ApplianceInstance:
    id: int
    dwelling_id: int
    category: str


@dataclass
class Dwelling:
    id: int
    household_id: int
    floor_area: float
    dwelling_type: str
    insulation: str
    location: str
    appliances: list = field(default_factory=list)  # ApplianceInstance ids
    attributes: dict = field(default_factory=dict)


@dataclass
class Population:
    individuals: list = field(default_factory=list)
    households: list = field(default_factory=list)
    dwellings: list = field(default_factory=list)
    appliances: list = field(default_factory=list)
    age_bands: tuple = DEFAULT_AGE_BANDS

    def __post_init__(self):
        self._index()

    def _index(self):
        self.individual_by_id = {i.id: i for i in self.individuals}
        self.household_by_id = {h.id: h for h in self.households}
        self.dwelling_by_household = {d.household_id: d for d in self.dwellings}
        self.appliance_by_id = {a.id: a for a in self.appliances}

    def __eq__(self, other):
        if not isinstance(other, Population):
            return NotImplemented
        return (self.individuals == other.individuals and self.households == other.households
                and self.dwellings == other.dwellings and self.appliances == other.appliances)

    def members(self, household):
        return [self.individual_by_id[i] for i in household.member_ids]

    def dwelling_of(self, household):
        return self.dwelling_by_household[household.id]

    def appliance_categories(self, dwelling):
        return [self.appliance_by_id[a].category for a in dwelling.appliances]

    def subset(self, household_ids):
        """Population restricted to the given households (ids preserved)."""
        keep = set(household_ids)
        hh = [h for h in self.households if h.id in keep]
        members = {m for h in hh for m in h.member_ids}
        dws = [d for d in self.dwellings if d.household_id in keep]
        dw_ids = {d.id for d in dws}
        return Population(
            individuals=[i for i in self.individuals if i.id in members],
            households=hh,
            dwellings=dws,
            appliances=[a for a in self.appliances if a.dwelling_id in dw_ids],
            age_bands=self.age_bands,
        )

    def check_integrity(self):
        """Raise ``ValueError`` on dangling or orphaned references."""
        seen = set()
        for h in self.households:
            if not 1 <= len(h.member_ids) <= MAX_HOUSEHOLD_SIZE:
                raise ValueError(f"household {h.id} has {len(h.member_ids)} members")
            for m in h.member_ids:
                ind = self.individual_by_id.get(m)
                if ind is None or ind.household_id != h.id:
                    raise ValueError(f"household {h.id}: member {m} does not resolve")
                seen.add(m)
            if h.id not in self.dwelling_by_household:
                raise ValueError(f"household {h.id} has no dwelling")
        if seen != set(self.individual_by_id):
            raise ValueError("individuals without a household")
        if len(self.dwelling_by_household) != len(self.dwellings):
            raise ValueError("a household owns several dwellings")
        for d in self.dwellings:
            if d.household_id not in self.household_by_id:
                raise ValueError(f"dwelling {d.id} is orphaned")
            if d.floor_area <= 0:
                raise ValueError(f"dwelling {d.id} has non-positive floor area")
            for a in d.appliances:
                if self.appliance_by_id.get(a) is None or self.appliance_by_id[a].dwelling_id != d.id:
                    raise ValueError(f"dwelling {d.id}: appliance {a} does not resolve")


def individual_type_key(individual, age_bands=DEFAULT_AGE_BANDS):
    """Segmentation key ``<gender>_<age band>_<employment>``, e.g. ``F_50-64_active``."""
    gender = str(individual.gender)[:1].upper()
    return f"{gender}_{age_band_of(individual.age, age_bands)}_{individual.employment}"


class _Sampler:
    def __init__(self, gen):
        self.gen = gen
        self._cache = {}

    def categorical(self, dist):
        key = id(dist)
        compiled = self._cache.get(key)
        if compiled is None:
            keys = list(dist)
            compiled = (keys, np.cumsum([dist[k] for k in keys]), dist)
            self._cache[key] = compiled
        keys, cum, _ = compiled
        idx = int(np.searchsorted(cum, self.gen.random() * cum[-1], side="right"))
        return keys[min(idx, len(keys) - 1)]


def _draw_attr(spec, sampler, name, context):
    if name in spec.marginals:
        return sampler.categorical(spec.marginals[name])
    rule = spec.rule_for(name)
    return sampler.categorical(rule.lookup([context[p] for p in rule.parents]))


def synthesize_population(spec, n_households, seed):
    """Draw ``n_households`` households with members, dwellings and appliances.

    Deterministic for a fixed ``(spec, n_households, seed)``.
    """
    if n_households < 0:
        raise ValueError("n_households must be >= 0")
    sampler = _Sampler(rngmod.stream(seed, rngmod.POPULATION))
    gen = sampler.gen
    order = {scope: _topological(spec, scope) for scope in SCOPES}
    edges = spec.age_bands
    labels = spec.band_labels
    individuals, households, dwellings, appliances = [], [], [], []

    for hid in range(n_households):
        ctx = {}
        for attr in order["household"]:
            ctx[f"household.{attr}"] = _draw_attr(spec, sampler, f"household.{attr}", ctx)
        size = int(ctx["household.size"])
        ctx["household.size"] = size
        member_ids = []
        for k in range(size):
            ictx = dict(ctx)
            ictx["individual.role"] = "head" if k == 0 else "member"
            for attr in order["individual"]:
                ictx[f"individual.{attr}"] = _draw_attr(spec, sampler, f"individual.{attr}", ictx)
            band = labels.index(ictx["individual.age_band"])
            lo = edges[band]
            hi = edges[band + 1] - 1 if band + 1 < len(edges) else spec.max_age
            age = int(gen.integers(lo, hi + 1))
            extras = {a: str(ictx[f"individual.{a}"]) for a in order["individual"]
                      if a not in ("gender", "employment", "age_band")}
            ind = Individual(
                id=len(individuals),
                household_id=hid,
                age=age,
                gender=str(ictx["individual.gender"]),
                employment=str(ictx["individual.employment"]),
                attributes=extras,
            )
            individuals.append(ind)
            member_ids.append(ind.id)
        hextras = {a: str(ctx[f"household.{a}"]) for a in order["household"]
                   if a not in ("size", "family_type", "energy_tariff", "weekend_away")}
        away = str(ctx.get("household.weekend_away", "no")).lower() in ("yes", "true", "1")
        households.append(Household(
            id=hid,
            member_ids=member_ids,
            family_type=str(ctx["household.family_type"]),
            energy_tariff=str(ctx["household.energy_tariff"]),
            weekend_away=away,
            attributes=hextras,
        ))

        for attr in order["dwelling"]:
            ctx[f"dwelling.{attr}"] = _draw_attr(spec, sampler, f"dwelling.{attr}", ctx)
        fa = spec.floor_area
        base = max(fa.minimum, float(gen.normal(fa.mean, fa.sd)))
        area = round(base + fa.per_extra_member * (size - 1), 1)
        dextras = {a: str(ctx[f"dwelling.{a}"]) for a in order["dwelling"]
                   if a not in ("dwelling_type", "insulation", "location")}
        dwelling = Dwelling(
            id=hid,
            household_id=hid,
            floor_area=area,
            dwelling_type=str(ctx["dwelling.dwelling_type"]),
            insulation=str(ctx["dwelling.insulation"]),
            location=str(ctx["dwelling.location"]),
            attributes=dextras,
        )
        for cat in sorted(spec.appliance_ownership):
            own = spec.appliance_ownership[cat]
            p = own.lookup([ctx[q] for q in own.parents]) if isinstance(own, ConditionalRule) else own
            if gen.random() < p:
                inst = ApplianceInstance(id=len(appliances), dwelling_id=hid, category=cat)
                appliances.append(inst)
                dwelling.appliances.append(inst.id)
        dwellings.append(dwelling)

    return Population(individuals, households, dwellings, appliances, age_bands=spec.age_bands)


def _extra_columns(items):
    return sorted({k for it in items for k in it.attributes})


def write_population(population, directory):
    """Dump the population as four CSV files; returns the written paths.

    Column order: :data:`INDIVIDUAL_COLUMNS`, :data:`HOUSEHOLD_COLUMNS`,
    :data:`DWELLING_COLUMNS` followed by extra attributes in sorted order,
    and :data:`APPLIANCE_COLUMNS`. ``member_ids`` is ``;``-separated.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []

    def dump(name, header, rows):
        path = directory / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        paths.append(path)

    pop = population
    extra = _extra_columns(pop.individuals)
    dump("individuals.csv", list(INDIVIDUAL_COLUMNS) + extra, (
        [i.id, i.household_id, i.age, i.gender, i.employment,
         individual_type_key(i, pop.age_bands)] + [i.attributes.get(k, "") for k in extra]
        for i in pop.individuals))
    extra = _extra_columns(pop.households)
    dump("households.csv", list(HOUSEHOLD_COLUMNS) + extra, (
        [h.id, h.size, ";".join(str(m) for m in h.member_ids), h.family_type,
         h.energy_tariff, "yes" if h.weekend_away else "no"] + [h.attributes.get(k, "") for k in extra]
        for h in pop.households))
    extra = _extra_columns(pop.dwellings)
    dump("dwellings.csv", list(DWELLING_COLUMNS) + extra, (
        [d.id, d.household_id, repr(float(d.floor_area)), d.dwelling_type, d.insulation,
         d.location] + [d.attributes.get(k, "") for k in extra]
        for d in pop.dwellings))
    dump("appliances.csv", list(APPLIANCE_COLUMNS), (
        [a.id, a.dwelling_id, a.category] for a in pop.appliances))
    return paths


def _read_rows(path, required):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path.name}: missing columns {missing}")
        extra = [c for c in header if c not in required]
        return [(n, row, extra) for n, row in enumerate(reader, start=2)]


def read_population(directory, age_bands=DEFAULT_AGE_BANDS):
    """Load a population written by :func:`write_population`."""
    directory = Path(directory)
    individuals, households, dwellings, appliances = [], [], [], []
    for n, row, extra in _read_rows(directory / "individuals.csv", INDIVIDUAL_COLUMNS):
        try:
            individuals.append(Individual(
                id=int(row["id"]), household_id=int(row["household_id"]), age=int(row["age"]),
                gender=row["gender"], employment=row["employment"],
                attributes={k: row[k] for k in extra if row[k] != ""}))
        except ValueError as exc:
            raise SchemaError(f"individuals.csv: {exc}", n) from exc
    for n, row, extra in _read_rows(directory / "households.csv", HOUSEHOLD_COLUMNS):
        try:
            households.append(Household(
                id=int(row["id"]),
                member_ids=[int(m) for m in row["member_ids"].split(";") if m],
                family_type=row["family_type"], energy_tariff=row["energy_tariff"],
                weekend_away=row["weekend_away"] == "yes",
                attributes={k: row[k] for k in extra if row[k] != ""}))
        except ValueError as exc:
            raise SchemaError(f"households.csv: {exc}", n) from exc
    by_dwelling = {}
    for n, row, _ in _read_rows(directory / "appliances.csv", APPLIANCE_COLUMNS):
        try:
            a = ApplianceInstance(id=int(row["id"]), dwelling_id=int(row["dwelling_id"]),
                                  category=row["category"])
        except ValueError as exc:
            raise SchemaError(f"appliances.csv: {exc}", n) from exc
        appliances.append(a)
        by_dwelling.setdefault(a.dwelling_id, []).append(a.id)
    for n, row, extra in _read_rows(directory / "dwellings.csv", DWELLING_COLUMNS):
        try:
            did = int(row["id"])
            dwellings.append(Dwelling(
                id=did, household_id=int(row["household_id"]), floor_area=float(row["floor_area"]),
                dwelling_type=row["dwelling_type"], insulation=row["insulation"],
                location=row["location"], appliances=by_dwelling.get(did, []),
                attributes={k: row[k] for k in extra if row[k] != ""}))
        except ValueError as exc:
            raise SchemaError(f"dwellings.csv: {exc}", n) from exc
    pop = Population(individuals, households, dwellings, appliances, age_bands=tuple(age_bands))
    pop.check_integrity()
    return pop
