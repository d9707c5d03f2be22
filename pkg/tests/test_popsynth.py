import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resload.config import data_path
from resload.errors import ConfigError, SchemaError
from resload.popsynth import (Individual, individual_type_key, load_population_spec,
                              read_population, synthesize_population, write_population)


@pytest.fixture(scope="module")
def spec():
    return load_population_spec(data_path("population_fr.yaml"))


@pytest.fixture(scope="module")
def big(spec):
    # ~ 10,800 individuals
    return synthesize_population(spec, 5000, seed=11)


def _binomial_interval(p, n, z=2.5758):
    half = z * math.sqrt(p * (1 - p) / n)
    return p - half, p + half


def _write_spec(tmp_path, text):
    path = tmp_path / "pop.yaml"
    path.write_text(text)
    return path


MINIMAL = """
household:
  size: {1: 0.5, 2: 0.5}
  family_type: {single: 1.0}
  energy_tariff: {base: 1.0}
  weekend_away: {"no": 1.0}
individual:
  gender: {F: 0.5, M: 0.5}
  age_band: {"25-49": 1.0}
  employment: {active: 1.0}
dwelling:
  dwelling_type: {house: 1.0}
  insulation: {good: 1.0}
  location: {north: 1.0}
appliances:
  tv: 1.0
"""


def test_minimal_spec_loads(tmp_path):
    s = load_population_spec(_write_spec(tmp_path, MINIMAL))
    pop = synthesize_population(s, 10, seed=0)
    assert len(pop.households) == 10
    assert all(i.employment == "active" for i in pop.individuals)


def test_zero_households(spec):
    pop = synthesize_population(spec, 0, seed=3)
    assert pop.households == [] and pop.individuals == [] and pop.dwellings == []


def test_bad_sum_names_attribute(tmp_path):
    text = MINIMAL.replace("insulation: {good: 1.0}", "insulation: {good: 0.5, poor: 0.4}")
    with pytest.raises(ConfigError, match="insulation"):
        load_population_spec(_write_spec(tmp_path, text))


def test_unknown_parent_rejected(tmp_path):
    text = MINIMAL.replace(
        "employment: {active: 1.0}",
        "employment:\n    given: [income2]\n    table: {}\n    default: {active: 1.0}")
    with pytest.raises(ConfigError, match="income2"):
        load_population_spec(_write_spec(tmp_path, text))


def test_parse_error_has_location(tmp_path):
    with pytest.raises(ConfigError, match=r"pop\.yaml:\d+:\d+"):
        load_population_spec(_write_spec(tmp_path, "household: [unclosed\n"))


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_population_spec("/nonexistent/pop.yaml")


def test_type_keys():
    assert individual_type_key(Individual(0, 0, 55, "F", "active")) == "F_50-64_active"
    assert individual_type_key(Individual(1, 0, 10, "M", "student")) == "M_0-14_student"
    a = Individual(2, 0, 30, "F", "inactive")
    b = Individual(3, 1, 30, "F", "inactive")
    assert a.type_key == b.type_key == "F_25-49_inactive"


def test_determinism(spec):
    a = synthesize_population(spec, 200, seed=5)
    b = synthesize_population(spec, 200, seed=5)
    c = synthesize_population(spec, 200, seed=6)
    assert a == b
    assert a != c


def test_integrity(big):
    big.check_integrity()
    ids = {i.id for i in big.individuals}
    for h in big.households:
        assert 1 <= h.size <= 12
        assert set(h.member_ids) <= ids
    assert len(big.dwellings) == len(big.households)


def test_gender_marginal(big):
    n = len(big.individuals)
    assert n >= 10_000
    lo, hi = _binomial_interval(0.5, n)
    frac = np.mean([i.gender == "F" for i in big.individuals])
    assert lo <= frac <= hi
    assert 0.48 <= frac <= 0.52


def test_household_marginals(big, spec):
    n = len(big.households)
    for cat, p in spec.marginals["household.energy_tariff"].items():
        lo, hi = _binomial_interval(p, n)
        frac = np.mean([h.energy_tariff == cat for h in big.households])
        assert lo <= frac <= hi, (cat, frac)
    for cat, p in spec.marginals["dwelling.insulation"].items():
        lo, hi = _binomial_interval(p, n)
        frac = np.mean([d.insulation == cat for d in big.dwellings])
        assert lo <= frac <= hi, (cat, frac)


def test_size_marginals_french_fixture(spec):
    pop = synthesize_population(spec, 1000, seed=2)
    sizes = np.array([h.size for h in pop.households])
    target = {1: 0.36, 2: 0.33, 3: 0.14, 4: 0.11, 5: 0.04, 6: 0.02}
    for k, p in target.items():
        assert abs(np.mean(sizes == k) - p) <= 0.03


def test_air_conditioner_follows_location(big):
    by_loc = {}
    for d in big.dwellings:
        has = "air_conditioner" in big.appliance_categories(d)
        by_loc.setdefault(d.location, []).append(has)
    south, north = np.array(by_loc["south"]), np.array(by_loc["north"])
    p1, p2 = south.mean(), north.mean()
    pooled = np.concatenate([south, north]).mean()
    z = (p1 - p2) / math.sqrt(pooled * (1 - pooled) * (1 / south.size + 1 / north.size))
    assert z > 2.33


def test_floor_area_grows_with_size(big):
    sizes = np.array([h.size for h in big.households])
    areas = np.array([big.dwelling_of(h).floor_area for h in big.households])
    means = [areas[sizes == k].mean() for k in range(1, 6)]
    assert all(b > a for a, b in zip(means, means[1:]))
    assert (areas > 0).all()


def test_csv_round_trip(spec, tmp_path):
    pop = synthesize_population(spec, 150, seed=9)
    write_population(pop, tmp_path)
    for name in ("individuals.csv", "households.csv", "dwellings.csv", "appliances.csv"):
        assert (tmp_path / name).exists()
    assert read_population(tmp_path) == pop


def test_csv_schema_error(spec, tmp_path):
    pop = synthesize_population(spec, 5, seed=9)
    write_population(pop, tmp_path)
    path = tmp_path / "individuals.csv"
    lines = path.read_text().splitlines()
    lines[2] = lines[2].replace(lines[2].split(",")[2], "old", 1)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError, match="row"):
        read_population(tmp_path)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 40), st.integers(0, 2**31 - 1))
def test_any_seed_gives_consistent_population(n, seed):
    s = load_population_spec(data_path("population_fr.yaml"))
    pop = synthesize_population(s, n, seed)
    assert len(pop.households) == n
    pop.check_integrity()
    for h in pop.households:
        assert pop.dwelling_of(h).floor_area >= 12
