"""Command-line pipeline: synth, extract, simulate, calibrate, metrics, scenario.

Every command reads one YAML run configuration (``--config`` or the
``RESLOAD_CONFIG`` environment variable), writes plain files into the
output directory and records them, with their SHA-256, in
``manifest.json``. Progress goes to standard error.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
import argparse
import datetime as dt
import hashlib
import json
import logging
import os
import sys
import warnings

from .activity import ActivityConfig, make_calendar, run_simulation
from .appliance import (DEFAULT_WEEKS, LoadCurve, calibrate_unit_powers, load_appliances,
                        simulate_loads)
from .calendar import load_calendar_overlay
from .config import load_yaml, require_mapping, resolve_path
from .errors import ConfigError, SchemaError
from .metrics import AverageWeek, compare, reduce_to_average_week
from .popsynth import load_population_spec, read_population, synthesize_population, write_population
from .scenario import PeakWindows, apply_behaviors, behavior_from_mapping, compare_runs, load_categories
from .synthetic import DEFAULT_SPLITS, make_synthetic_tus
from .tusdata import TaskCatalog, VariabilityParam, extract_catalog, parse_tus

ENV_CONFIG = "RESLOAD_CONFIG"
COMMANDS = ("synth", "extract", "simulate", "calibrate", "metrics", "scenario")
log = logging.getLogger("resload")


@dataclass
class RunConfig:
    """Validated run configuration; paths are absolute."""

    output: Path
    seed: int = 0
    horizon: int = 7
    start: dt.date = dt.date(2019, 1, 7)
    X: float = 90.0
    population_spec: Path = None
    population_dir: Path = None
    households: int = 10
    tus: Path = None
    splits: dict = field(default_factory=lambda: dict(DEFAULT_SPLITS))
    catalog: Path = None
    appliances: Path = None
    overlay: Path = None
    categories: Path = None
    activity: dict = field(default_factory=dict)
    n_jobs: int = 1
    dwelling_curves: bool = True
    resolution: int = 1
    calibration: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    behaviors: list = field(default_factory=list)

    @classmethod
    def load(cls, path, seed=None, out=None):
        path = Path(path)
        raw = require_mapping(load_yaml(path) or {}, str(path))
        base = path.parent

        def p(value, must_exist=True, name=""):
            if value is None:
                return None
            q = resolve_path(value, base)
            if must_exist and not q.exists():
                raise ConfigError(f"path does not exist: {q}", name)
            return q

        pop = raw.get("population") or {}
        tus = raw.get("tus") or {}
        cal = raw.get("calendar") or {}
        sim = raw.get("simulate") or {}
        try:
            cfg = cls(
                output=(Path(out) if out else resolve_path(raw.get("output", "out"), base)).resolve(),
                seed=int(raw.get("seed", 0) if seed is None else seed),
                horizon=int(cal.get("horizon", 7)),
                start=dt.date.fromisoformat(str(cal.get("start", "2019-01-07"))),
                X=VariabilityParam(float(tus.get("X", 90.0))).X,
                population_spec=p(pop.get("spec", "builtin:population_fr.yaml"),
                                  name="population.spec"),
                population_dir=p(pop.get("directory"), name="population.directory"),
                households=int(pop.get("households", 10)),
                tus=p(tus.get("path"), name="tus.path"),
                splits=dict(tus.get("splits", DEFAULT_SPLITS)),
                catalog=p(raw.get("catalog"), name="catalog"),
                appliances=p(raw.get("appliances", "builtin:appliances.yaml"), name="appliances"),
                overlay=p(cal.get("overlay"), name="calendar.overlay"),
                categories=p(raw.get("categories", "builtin:categories.yaml"), name="categories"),
                activity=dict(raw.get("activity") or {}),
                n_jobs=int(sim.get("n_jobs", 1)),
                dwelling_curves=bool(sim.get("dwelling_curves", True)),
                resolution=int(sim.get("resolution", 1)),
                calibration=dict(raw.get("calibrate") or {}),
                metrics=dict(raw.get("metrics") or {}),
                behaviors=list((raw.get("scenario") or {}).get("behaviors") or []),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), str(path)) from exc
        if cfg.horizon < 1:
            raise ConfigError("horizon must be at least one day", "calendar.horizon")
        if cfg.resolution < 1 or 1440 % cfg.resolution:
            raise ConfigError("resolution must divide a day", "simulate.resolution")
        for key in ("model", "reference"):
            if key in cfg.metrics:
                cfg.metrics[key] = resolve_path(cfg.metrics[key], base)
        cfg.base = base
        return cfg


# -- helpers -------------------------------------------------------------------------

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _record(cfg, command, paths):
    """Add ``paths`` to the output manifest (sorted, no timestamps)."""
    manifest_path = cfg.output / "manifest.json"
    manifest = {"artifacts": {}}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    for q in paths:
        rel = Path(q).relative_to(cfg.output).as_posix()
        manifest["artifacts"][rel] = {"command": command, "sha256": _sha256(q),
                                      "bytes": Path(q).stat().st_size}
    manifest["artifacts"] = dict(sorted(manifest["artifacts"].items()))
    manifest["seed"] = cfg.seed
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _population(cfg):
    pop_dir = cfg.output / "population"
    if cfg.population_dir is not None:
        return read_population(cfg.population_dir)
    if (pop_dir / "households.csv").exists():
        return read_population(pop_dir)
    spec = load_population_spec(cfg.population_spec)
    return synthesize_population(spec, cfg.households, cfg.seed)


def _catalog(cfg):
    if cfg.catalog is not None:
        return TaskCatalog.read_csv(cfg.catalog)
    local = cfg.output / "catalog.csv"
    if local.exists():
        return TaskCatalog.read_csv(local)
    return TaskCatalog.read_csv(resolve_path("builtin:catalog.csv"))


def _calendar(cfg, horizon=None, start=None):
    overlay = load_calendar_overlay(cfg.overlay) if cfg.overlay else None
    return make_calendar(horizon or cfg.horizon, start or cfg.start, cfg.seed, overlay)


def _progress(done, total):
    log.info("households %d/%d", done, total)


def _write_curves(path, result, resolution):
    """Wide CSV: one row per step, one column per dwelling (household id)."""
    curves = result.curves.astype(float)
    if resolution > 1:
        curves = curves.reshape(curves.shape[0], -1, resolution).mean(axis=2)
    stamps = LoadCurve(result.start, resolution, curves[0] if len(curves) else []).timestamps()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("timestamp," + ",".join(f"dwelling_{h}" for h in result.household_ids) + "\n")
        for i, ts in enumerate(stamps):
            fh.write(ts.isoformat(timespec="minutes") + ","
                     + ",".join(f"{v:.6g}" for v in curves[:, i]) + "\n")


# -- commands ------------------------------------------------------------------------

def cmd_synth(cfg):
    spec = load_population_spec(cfg.population_spec)
    pop = synthesize_population(spec, cfg.households, cfg.seed)
    out = cfg.output / "population"
    write_population(pop, out)
    files = sorted(out.glob("*.csv"))
    log.info("population: %d households, %d individuals", len(pop.households), len(pop.individuals))
    return files


def cmd_extract(cfg):
    if cfg.tus is not None:
        records = parse_tus(cfg.tus)
    else:
        log.info("no TUS file configured; using the synthetic diary corpus")
        records = make_synthetic_tus(seed=cfg.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        catalog = extract_catalog(records, cfg.X, splits=cfg.splits)
    path = cfg.output / "catalog.csv"
    catalog.write_csv(path)
    log.info("catalog: %d task specs at X=%g", len(catalog), cfg.X)
    return [path]


def _simulate(cfg, population, catalog, calendar, appliances, plan_hook=None):
    trace = run_simulation(population, catalog, calendar=calendar, seed=cfg.seed,
                           config=ActivityConfig.from_mapping(cfg.activity), n_jobs=cfg.n_jobs,
                           plan_hook=plan_hook, progress=_progress)
    loads = simulate_loads(population, trace, calendar, appliances, cfg.seed,
                           keep_curves=cfg.dwelling_curves)
    return trace, loads


def cmd_simulate(cfg):
    population = _population(cfg)
    calendar = _calendar(cfg)
    trace, loads = _simulate(cfg, population, _catalog(cfg), calendar, load_appliances(cfg.appliances))
    out = cfg.output / "simulate"
    out.mkdir(parents=True, exist_ok=True)
    files = [out / "activity_segments.csv", out / "load_mean.csv", out / "load_total.csv",
             out / "showers.csv"]
    trace.segments_to_csv(files[0])
    loads.to_csv(files[1])
    total = loads.total()
    if cfg.resolution > 1:
        total = total.reduce(cfg.resolution)
    total.to_csv(files[2])
    with open(files[3], "w", encoding="utf-8", newline="") as fh:
        fh.write("household_id,individual_id,minute\n")
        for h, i, m in zip(loads.showers["household"], loads.showers["individual"],
                           loads.showers["minute"]):
            fh.write(f"{h},{i},{m}\n")
    if cfg.dwelling_curves:
        files.append(out / "load_dwellings.csv")
        _write_curves(files[-1], loads, cfg.resolution)
    return files


def cmd_calibrate(cfg):
    c = cfg.calibration
    targets = {str(k): float(v) for k, v in require_mapping(c.get("targets") or {},
                                                               "calibrate.targets").items()}
    if not targets:
        raise ConfigError("no calibration target", "calibrate.targets")
    weeks = [dt.date.fromisoformat(str(w)) for w in c.get("weeks", DEFAULT_WEEKS)]
    population = _population(cfg)
    catalog = _catalog(cfg)
    appliances = load_appliances(cfg.appliances)
    act = ActivityConfig.from_mapping(cfg.activity)
    traces = []
    for w in weeks:
        cal = _calendar(cfg, 7, w)
        traces.append((cal, run_simulation(population, catalog, calendar=cal, seed=cfg.seed,
                                           config=act, n_jobs=cfg.n_jobs)))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = calibrate_unit_powers(population, traces, appliances, targets, cfg.seed,
                                       tol=float(c.get("tolerance", 0.01)),
                                       max_iter=int(c.get("max_iterations", 20)))
    for w in caught:
        log.warning("%s", w.message)
    out = cfg.output / "calibrate"
    out.mkdir(parents=True, exist_ok=True)
    files = [out / "appliances_calibrated.yaml", out / "calibration_report.csv"]
    result.appliances.write_yaml(files[0])
    result.write_report(files[1])
    log.info("calibration %s after %d iteration(s)",
             "converged" if result.converged else "did not converge", result.iterations)
    return files


def _average_week(path):
    curve = LoadCurve.from_csv(path)
    if len(curve) == 336 and curve.timestep == 30:
        return AverageWeek(curve.values)
    return reduce_to_average_week(curve)


def cmd_metrics(cfg):
    m = cfg.metrics
    if "model" not in m or "reference" not in m:
        raise ConfigError("metrics needs 'model' and 'reference' curve paths", "metrics")
    for key in ("model", "reference"):
        if not m[key].exists():
            raise ConfigError(f"path does not exist: {m[key]}", f"metrics.{key}")
    model = LoadCurve.from_csv(m["model"])
    reference = LoadCurve.from_csv(m["reference"])
    if not (model.timestep == reference.timestep and len(model) == len(reference)):
        raise ConfigError(f"model ({len(model)} x {model.timestep} min) and reference "
                          f"({len(reference)} x {reference.timestep} min) differ in length", "metrics")
    a, b = _average_week(m["model"]), _average_week(m["reference"])
    out = cfg.output / "metrics"
    out.mkdir(parents=True, exist_ok=True)
    files = [out / "metrics.csv", out / "model_week.csv", out / "reference_week.csv"]
    compare(a, b).to_csv(files[0])
    a.to_csv(files[1])
    b.to_csv(files[2])
    return files


def cmd_scenario(cfg):
    behaviors = [behavior_from_mapping(b, f"scenario.behaviors[{i}]")
                 for i, b in enumerate(cfg.behaviors)]
    population = _population(cfg)
    catalog = _catalog(cfg)
    calendar = _calendar(cfg)
    appliances = load_appliances(cfg.appliances)
    categories = load_categories(cfg.categories)
    plain = replace(cfg, dwelling_curves=False)
    base = _simulate(plain, population, catalog, calendar, appliances)
    runs = [("none", base, PeakWindows())] if not behaviors else []
    for b in behaviors:
        hook, app = apply_behaviors([b], appliances, cfg.seed)
        log.info("scenario %s (compliance %g)", b.name, b.compliance)
        runs.append((b.name, _simulate(plain, population, catalog, calendar, app, hook),
                     b.kind.windows))
    files = []
    for name, run, windows in runs:
        report = compare_runs(base, run, categories, windows)
        out = cfg.output / "scenario" / name
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "activity_delta.csv", out / "power_delta.csv", out / "summary.csv"]
        report.activity_csv(paths[0])
        report.power_csv(paths[1])
        report.summary_csv(paths[2])
        files += paths
    return files


HANDLERS = {"synth": cmd_synth, "extract": cmd_extract, "simulate": cmd_simulate,
            "calibrate": cmd_calibrate, "metrics": cmd_metrics, "scenario": cmd_scenario}


def build_parser():
    ap = argparse.ArgumentParser(prog="resload", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help=f"run configuration (default: ${ENV_CONFIG})")
    ap.add_argument("--seed", type=int, help="override the configured seed")
    ap.add_argument("--out", help="override the output directory")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    path = args.config or os.environ.get(ENV_CONFIG)
    if not path:
        print(f"resload: no configuration (use --config or set {ENV_CONFIG})", file=sys.stderr)
        return 2
    try:
        cfg = RunConfig.load(path, seed=args.seed, out=args.out)
        cfg.output.mkdir(parents=True, exist_ok=True)
        files = HANDLERS[args.command](cfg)
        _record(cfg, args.command, files)
    except (ConfigError, SchemaError, FileNotFoundError) as exc:
        print(f"resload {args.command}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"resload {args.command}: {exc}", file=sys.stderr)
        return 1
    for f in files:
        log.info("wrote %s", f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
