"""Command-line front end: sweeps, optimizer report and validation harness.

Every subcommand reads an optional YAML config (``--config``), applies the
per-field override flags on top, and writes CSV either to ``output_path`` or
to standard output. Diagnostics go to standard error.

Exit codes: 0 success, 1 config error, 2 infeasible, 3 validation failure.
"""

from __future__ import annotations

import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import click
import numpy as np
import yaml

from .analytic import InfeasibleError, paoi
from .model import Catalog, CachingPolicy, PhyParams, PolicyError, TrafficParams, make_policy
from .optimize import OBJECTIVES, OptimizationError, cross_check, mpc_policy, optimal_caching, uc_policy
from .sim import EmptyEstimateError, SimConfig, estimate, worker_count

CROSS_CHECK_TOL = 1e-4
EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_VALIDATION = 0, 1, 2, 3
STRATEGIES = ("optimal", "mpc", "uc")
ANALYTIC_MODELS = ("theorem1", "corollary1", "effective", "printed", "missigned")
VALIDATION_BAND = 0.05
DEFAULT_DENSITY = 3.0 / (250.0**2 * math.pi)


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class PhySection:
    tx_power_dbm: float = 23.0
    bs_density: float = DEFAULT_DENSITY
    pathloss_exp: float = 4.5
    active_prob: float = 0.15
    sinr_threshold_db: tuple[float, ...] = (0.0,)


@dataclass(frozen=True)
class TrafficSection:
    arrival_rate: tuple[float, ...] = (0.05,)


@dataclass(frozen=True)
class CatalogSection:
    num_files: int = 30
    zipf_skew: float = 0.8
    cache_size: tuple[int, ...] = (27,)


@dataclass(frozen=True)
class SimSection:
    region_radius: float = 1800.0
    num_realizations: int = 200
    slots_per_realization: int = 20_000
    warmup_slots: int = 2_000
    track_files: tuple[int, ...] = (0,)
    queue_guard: int = 10**6


@dataclass(frozen=True)
class ExperimentConfig:
    phy: PhySection = field(default_factory=PhySection)
    traffic: TrafficSection = field(default_factory=TrafficSection)
    catalog: CatalogSection = field(default_factory=CatalogSection)
    strategy: tuple = ("uc",)
    model: str = "theorem1"
    sim: SimSection = field(default_factory=SimSection)
    seed: int = 0
    output_path: str | None = None

    def to_dict(self) -> dict:
        raw = asdict(self)
        return _plain(raw)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    # convenient views -----------------------------------------------------
    def phy_at(self, theta_db: float) -> PhyParams:
        p = self.phy
        return PhyParams.from_db(p.tx_power_dbm, p.bs_density, p.pathloss_exp, p.active_prob, theta_db)

    def catalog_at(self, cache_size: int) -> Catalog:
        c = self.catalog
        return Catalog.zipf(c.num_files, c.zipf_skew, cache_size)

    def sim_config(self) -> SimConfig:
        s = self.sim
        return SimConfig(
            region_radius=s.region_radius,
            num_realizations=s.num_realizations,
            slots_per_realization=s.slots_per_realization,
            warmup_slots=s.warmup_slots,
            rng_seed=self.seed,
            track_files=s.track_files,
            queue_guard=s.queue_guard,
        )


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _as_tuple(value, cast, path: str) -> tuple:
    items = value if isinstance(value, (list, tuple)) else [value]
    try:
        out = tuple(cast(v) for v in items)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not out:
        raise ConfigError(f"{path}: grid must be non-empty")
    if any(isinstance(v, float) and not math.isfinite(v) for v in out):
        raise ConfigError(f"{path}: grid values must be finite")
    if list(out) != sorted(out) or len(set(out)) != len(out):
        raise ConfigError(f"{path}: grid must be strictly increasing")
    return out


def _scalar(value, cast, path: str):
    if isinstance(value, (list, tuple, dict)):
        raise ConfigError(f"{path}: expected a scalar, got {value!r}")
    try:
        out = cast(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if isinstance(out, float) and not math.isfinite(out):
        raise ConfigError(f"{path}: must be finite")
    return out


def _int(value) -> int:
    if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
        raise ValueError(f"expected an integer, got {value!r}")
    return int(value)


_GRID_FIELDS = {
    ("phy", "sinr_threshold_db"): float,
    ("traffic", "arrival_rate"): float,
    ("catalog", "cache_size"): _int,
}
_SECTIONS = {"phy": PhySection, "traffic": TrafficSection, "catalog": CatalogSection, "sim": SimSection}


def _section(name: str, cls, raw) -> object:
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}: unknown field")
    values = {}
    for key, value in raw.items():
        path = f"{name}.{key}"
        if (name, key) in _GRID_FIELDS:
            values[key] = _as_tuple(value, _GRID_FIELDS[(name, key)], path)
        elif key == "track_files":
            values[key] = tuple(_scalar(v, _int, path) for v in (value if isinstance(value, (list, tuple)) else [value]))
        else:
            cast = _int if isinstance(known[key].default, int) else float
            values[key] = _scalar(value, cast, path)
    return cls(**values)


def parse_strategy(raw) -> tuple:
    """A name, a list of names, or an explicit caching vector (list of numbers)."""
    items = list(raw) if isinstance(raw, (list, tuple)) else [raw]
    if not items:
        raise ConfigError("strategy: must be non-empty")
    if all(isinstance(v, str) for v in items):
        bad = [v for v in items if v not in STRATEGIES]
        if bad:
            raise ConfigError(f"strategy: unknown strategy {bad[0]!r}, expected one of {STRATEGIES}")
        return tuple(items)
    try:
        return tuple(_scalar(v, float, "strategy") for v in items)
    except ConfigError:
        raise ConfigError("strategy: expected strategy names or a caching vector") from None


def config_from_dict(raw: dict | None) -> ExperimentConfig:
    raw = dict(raw or {})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown field")
    kwargs = {name: _section(name, cls, raw.get(name)) for name, cls in _SECTIONS.items()}
    if "strategy" in raw:
        kwargs["strategy"] = parse_strategy(raw["strategy"])
    if "model" in raw:
        kwargs["model"] = _scalar(raw["model"], str, "model")
    if "seed" in raw:
        kwargs["seed"] = _scalar(raw["seed"], _int, "seed")
    if raw.get("output_path") is not None:
        kwargs["output_path"] = _scalar(raw["output_path"], str, "output_path")
    cfg = ExperimentConfig(**kwargs)
    check_config(cfg)
    return cfg


def check_config(cfg: ExperimentConfig) -> None:
    """Domain checks with field paths; grids are validated at each point."""
    if cfg.model not in ANALYTIC_MODELS:
        raise ConfigError(f"model: unknown model {cfg.model!r}, expected one of {ANALYTIC_MODELS}")
    for theta_db in cfg.phy.sinr_threshold_db:
        try:
            cfg.phy_at(theta_db)
        except ValueError as exc:
            raise ConfigError(f"phy: {exc}") from None
    for zeta in cfg.traffic.arrival_rate:
        try:
            TrafficParams(zeta)
        except ValueError as exc:
            raise ConfigError(f"traffic.arrival_rate: {exc}") from None
    for c in cfg.catalog.cache_size:
        try:
            cfg.catalog_at(c)
        except ValueError as exc:
            raise ConfigError(f"catalog: {exc}") from None
    if isinstance(cfg.strategy[0], float) and len(cfg.strategy) != cfg.catalog.num_files:
        raise ConfigError(
            f"strategy: caching vector has {len(cfg.strategy)} entries, catalog has {cfg.catalog.num_files} files"
        )
    try:
        cfg.sim_config()
    except ValueError as exc:
        raise ConfigError(f"sim: {exc}") from None


def require_single(cfg: ExperimentConfig, allowed: set[str], command: str) -> None:
    """At most the listed dimensions may carry more than one value."""
    sizes = {
        "sinr_threshold_db": len(cfg.phy.sinr_threshold_db),
        "arrival_rate": len(cfg.traffic.arrival_rate),
        "cache_size": len(cfg.catalog.cache_size),
    }
    for name, n in sizes.items():
        if n > 1 and name not in allowed:
            raise ConfigError(f"{name}: {command} takes a single value, got a grid of {n}")


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    raw: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"config: invalid YAML in {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be a mapping")
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = raw
        *parents, leaf = dotted.split(".")
        for p in parents:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{p}: expected a mapping")
        node[leaf] = value
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# evaluation


def fmt(x) -> str:
    """CSV number: shortest round-trip float, ``inf`` for divergence, never NaN."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        raise ValueError("NaN reached the output boundary")
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _map(fn, items: list) -> list:
    workers = worker_count()
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _warn(message: str) -> None:
    click.echo(f"warning: {message}", err=True)


DIVERGES = "weighted PAoI diverges: a cached file sits below the critical caching probability"


def _evaluate(policy, catalog, phy, traffic, model) -> tuple[float, str | None]:
    value = paoi(policy, catalog, phy, traffic, model).weighted_paoi
    return value, None if math.isfinite(value) else DIVERGES


def build_policy(cfg: ExperimentConfig, strategy, catalog: Catalog, phy: PhyParams, traffic: TrafficParams) -> CachingPolicy:
    if strategy == "uc":
        return uc_policy(catalog)
    if strategy == "mpc":
        return mpc_policy(catalog)
    if strategy == "optimal":
        return optimal_caching(catalog, phy, traffic).policy
    raise ValueError(f"unknown strategy {strategy!r}")


def _policy_for(cfg: ExperimentConfig, catalog, phy, traffic) -> CachingPolicy:
    if isinstance(cfg.strategy[0], float):
        try:
            return make_policy(cfg.strategy, catalog.cache_size)
        except PolicyError as exc:
            raise ConfigError(f"strategy: {exc}") from None
    return build_policy(cfg, cfg.strategy[0], catalog, phy, traffic)


def _theta_point(args):
    cfg, theta_db, zeta = args
    phy, traffic = cfg.phy_at(theta_db), TrafficParams(zeta)
    catalog = cfg.catalog_at(cfg.catalog.cache_size[0])
    try:
        policy = _policy_for(cfg, catalog, phy, traffic)
        return _evaluate(policy, catalog, phy, traffic, cfg.model)
    except InfeasibleError as exc:
        return math.inf, str(exc)


def sweep_theta_rows(cfg: ExperimentConfig) -> list[list[str]]:
    points = [(cfg, t, z) for z in cfg.traffic.arrival_rate for t in cfg.phy.sinr_threshold_db]
    rows = []
    for (_, t, z), (value, note) in zip(points, _map(_theta_point, points)):
        if note:
            _warn(f"theta_db={fmt(t)} zeta={fmt(z)}: {note}")
        rows.append([fmt(t), fmt(z), fmt(value), "1" if math.isfinite(value) else "0"])
    return rows


def _cache_point(args):
    cfg, c, strategy = args
    phy = cfg.phy_at(cfg.phy.sinr_threshold_db[0])
    traffic = TrafficParams(cfg.traffic.arrival_rate[0])
    catalog = cfg.catalog_at(c)
    try:
        policy = build_policy(cfg, strategy, catalog, phy, traffic)
        return _evaluate(policy, catalog, phy, traffic, cfg.model)
    except (InfeasibleError, OptimizationError) as exc:
        return math.inf, str(exc)


def sweep_cache_rows(cfg: ExperimentConfig) -> list[list[str]]:
    points = [(cfg, c, s) for c in cfg.catalog.cache_size for s in cfg.strategy]
    rows = []
    for (_, c, s), (value, note) in zip(points, _map(_cache_point, points)):
        if note:
            _warn(f"cache_size={c} strategy={s}: {note}")
        rows.append([fmt(c), s, fmt(value)])
    return rows


@dataclass(frozen=True)
class ValidationRow:
    theta_db: float
    zeta: float
    theorem1: float
    corollary1: float
    sim_mean: float
    sim_half_width: float
    unstable_files: tuple

    @property
    def rel_error(self) -> float:
        if not (math.isfinite(self.theorem1) and math.isfinite(self.sim_mean)):
            return math.inf
        return abs(self.sim_mean - self.theorem1) / self.theorem1

    @property
    def passed(self) -> bool:
        return self.rel_error <= VALIDATION_BAND


def _tracked_weighted(report, catalog: Catalog, files) -> float:
    p = catalog.popularity[list(files)]
    values = report.per_file_paoi[list(files)]
    if not np.all(np.isfinite(values)):
        return math.inf
    return float(p @ values / p.sum())


def validate_rows(cfg: ExperimentConfig, analytic_model: str = "theorem1") -> list[ValidationRow]:
    catalog = cfg.catalog_at(cfg.catalog.cache_size[0])
    sim_cfg = cfg.sim_config()
    rows = []
    for zeta in cfg.traffic.arrival_rate:
        for theta_db in cfg.phy.sinr_threshold_db:
            phy, traffic = cfg.phy_at(theta_db), TrafficParams(zeta)
            policy = _policy_for(cfg, catalog, phy, traffic)
            result = estimate(policy, catalog, phy, traffic, sim_cfg)
            files = [f for f, e in result.per_file_peak_age.items() if e is not None]
            sim = result.weighted_peak_age(catalog)
            for f in sorted(result.unstable_files):
                _warn(f"theta_db={fmt(theta_db)} zeta={fmt(zeta)}: file {f + 1} unstable in simulation")
            rows.append(
                ValidationRow(
                    theta_db,
                    zeta,
                    _tracked_weighted(paoi(policy, catalog, phy, traffic, analytic_model), catalog, files),
                    _tracked_weighted(paoi(policy, catalog, phy, traffic, "corollary1"), catalog, files),
                    sim.mean,
                    sim.half_width,
                    tuple(sorted(result.unstable_files)),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# output


def write_csv(header: list[str], rows: list[list[str]], path: str | None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if path is None:
        click.echo(text, nl=False)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _run(fn):
    """Map library errors onto exit codes."""
    try:
        return fn()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except InfeasibleError as exc:
        click.echo(f"infeasible: {exc}", err=True)
        sys.exit(EXIT_INFEASIBLE)


def common_options(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="YAML config file."),
        click.option("--tx-power-dbm", type=float, help="Transmit power in dBm."),
        click.option("--bs-density", type=float, help="BS density per square metre."),
        click.option("--pathloss-exp", type=float, help="Path-loss exponent alpha."),
        click.option("--active-prob", type=float, help="BS activity (mute) probability beta."),
        click.option("--theta-db", type=str, help="SINR threshold in dB; comma list for a grid."),
        click.option("--zeta", type=str, help="Arrival rate; comma list for several series."),
        click.option("--num-files", type=int, help="Number of files F."),
        click.option("--zipf-skew", type=float, help="Zipf skewness psi."),
        click.option("--cache-size", type=str, help="Cache size C; comma list for a grid."),
        click.option("--strategy", type=str, help="optimal, mpc, uc (comma list) or a caching vector."),
        click.option("--model", type=str, help="Analytic PAoI model."),
        click.option("--seed", type=int, help="Seed of every random stream."),
        click.option("--output", "output_path", type=click.Path(dir_okay=False), help="CSV output path."),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def _split(text: str | None, cast=str):
    if text is None:
        return None
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        values = [cast(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"command line: {exc}") from None
    return values


def _number(text: str):
    return float(text) if any(ch in text for ch in ".eE") else int(text)


def _overrides(opts: dict) -> dict:
    strategy = _split(opts.get("strategy"))
    if strategy and not all(s in STRATEGIES for s in strategy):
        strategy = _split(opts.get("strategy"), float)
    return {
        "phy.tx_power_dbm": opts.get("tx_power_dbm"),
        "phy.bs_density": opts.get("bs_density"),
        "phy.pathloss_exp": opts.get("pathloss_exp"),
        "phy.active_prob": opts.get("active_prob"),
        "phy.sinr_threshold_db": _split(opts.get("theta_db"), float),
        "traffic.arrival_rate": _split(opts.get("zeta"), float),
        "catalog.num_files": opts.get("num_files"),
        "catalog.zipf_skew": opts.get("zipf_skew"),
        "catalog.cache_size": _split(opts.get("cache_size"), _number),
        "strategy": strategy,
        "model": opts.get("model"),
        "seed": opts.get("seed"),
        "output_path": opts.get("output_path"),
        "sim.region_radius": opts.get("region_radius"),
        "sim.num_realizations": opts.get("realizations"),
        "sim.slots_per_realization": opts.get("slots"),
        "sim.warmup_slots": opts.get("warmup"),
        "sim.track_files": _split(opts.get("track_files"), int),
    }


def _config(opts: dict) -> ExperimentConfig:
    return load_config(opts.pop("config_path", None), _overrides(opts))


# ---------------------------------------------------------------------------
# commands


@click.group()
def main():
    """Peak age of information in cache-enabled Poisson networks."""


@main.command("sweep-theta")
@common_options
def sweep_theta_cmd(**opts):
    """Weighted PAoI versus SINR threshold, one series per arrival rate."""

    def run():
        cfg = _config(opts)
        require_single(cfg, {"sinr_threshold_db", "arrival_rate"}, "sweep-theta")
        write_csv(["theta_db", "zeta", "paoi_weighted", "feasible"], sweep_theta_rows(cfg), cfg.output_path)

    _run(run)


@main.command("sweep-cache")
@common_options
def sweep_cache_cmd(**opts):
    """Weighted PAoI versus cache size for each caching strategy."""

    def run():
        cfg = _config(opts)
        require_single(cfg, {"cache_size"}, "sweep-cache")
        if isinstance(cfg.strategy[0], float):
            raise ConfigError("strategy: sweep-cache takes strategy names, not a vector")
        write_csv(["cache_size", "strategy", "paoi_weighted"], sweep_cache_rows(cfg), cfg.output_path)

    _run(run)


@main.command("optimize")
@common_options
@click.option(
    "--solver",
    type=click.Choice(["closed", "numeric"]),
    default="closed",
    help="closed: square-root water-filling; numeric: projected gradient on --objective.",
)
@click.option(
    "--objective",
    type=click.Choice(list(OBJECTIVES)),
    default="corollary1",
    help="Objective of the projected-gradient cross-check.",
)
def optimize_cmd(solver, objective, **opts):
    """Optimal caching probabilities with multiplier, objective and clamp sets.

    Both solvers always run; the gap between them is reported on standard
    error and flagged when it exceeds 1e-4 per coordinate.
    """

    def run():
        cfg = _config(opts)
        require_single(cfg, set(), "optimize")
        phy = cfg.phy_at(cfg.phy.sinr_threshold_db[0])
        traffic = TrafficParams(cfg.traffic.arrival_rate[0])
        catalog = cfg.catalog_at(cfg.catalog.cache_size[0])
        try:
            closed, numeric, gap = cross_check(catalog, phy, traffic, objective)
        except OptimizationError as exc:
            raise InfeasibleError(f"projected-gradient solver failed: {exc}") from None
        result = closed if solver == "closed" else numeric
        q = result.policy.probs
        theorem1 = paoi(result.policy, catalog, phy, traffic, cfg.model).weighted_paoi
        out = click.echo if cfg.output_path is not None else (lambda m: click.echo(m, err=True))
        eta = fmt(result.multiplier) if math.isfinite(result.multiplier) else "n/a (no interior file)"
        out(f"solver = {solver}")
        out(f"multiplier eta* = {eta}")
        out(f"objective ({result.model}) = {fmt(result.objective)}")
        out(f"weighted PAoI ({cfg.model}) = {fmt(theorem1)}")
        out(f"sum q* = {fmt(float(q.sum()))} (C = {catalog.cache_size})")
        out(f"clamped at q_c: {sorted(f + 1 for f in result.clamped_low)}")
        out(f"clamped at 1: {sorted(f + 1 for f in result.clamped_high)}")
        out(f"cross-check against projected gradient ({objective}): max coordinate gap {gap:.3e}")
        if gap > CROSS_CHECK_TOL:
            _warn(
                f"closed form and projected gradient on the {objective} objective differ by "
                f"{gap:.3e} > {CROSS_CHECK_TOL:g}; the numeric solution (--solver numeric) minimizes it"
            )
        rows = [[str(f + 1), fmt(p), fmt(x)] for f, (p, x) in enumerate(zip(catalog.popularity, q))]
        write_csv(["file", "popularity", "q"], rows, cfg.output_path)

    _run(run)


@main.command("validate")
@common_options
@click.option("--region-radius", type=float, help="Simulation disc radius in metres.")
@click.option("--realizations", type=int, help="Number of spatial realizations.")
@click.option("--slots", type=int, help="Slots per realization.")
@click.option("--warmup", type=int, help="Warm-up slots discarded per realization.")
@click.option("--track-files", type=str, help="Comma list of 0-based file indices to simulate.")
@click.option(
    "--preset",
    type=click.Choice(["default", "isolated"]),
    default="default",
    help="isolated: beta = 1, theta = -40 dB, every file in every cache (near interference-free).",
)
def validate_cmd(preset, **opts):
    """Analytic PAoI against the spatial-temporal simulation (5% band).

    ``--model missigned`` swaps in the wrong-sign interference formula as a
    negative control; it is expected to fail.
    """

    def run():
        if preset == "isolated":
            base = {"active_prob": 1.0, "theta_db": "-40", "zeta": "0.1"}
            for key, value in base.items():
                if opts.get(key) is None:
                    opts[key] = value
            if opts.get("cache_size") is None:
                opts["cache_size"] = str(opts.get("num_files") or CatalogSection.num_files)
        cfg = _config(opts)
        require_single(cfg, {"sinr_threshold_db", "arrival_rate"}, "validate")
        try:
            rows = validate_rows(cfg, cfg.model)
        except EmptyEstimateError as exc:
            click.echo(f"validation failed: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        header = ["theta_db", "zeta", "analytic", "corollary1", "sim_mean", "sim_half_width", "rel_error", "pass"]
        table = [
            [
                fmt(r.theta_db),
                fmt(r.zeta),
                fmt(r.theorem1),
                fmt(r.corollary1),
                fmt(r.sim_mean),
                fmt(r.sim_half_width),
                fmt(r.rel_error),
                "1" if r.passed else "0",
            ]
            for r in rows
        ]
        write_csv(header, table, cfg.output_path)
        for r in rows:
            verdict = "PASS" if r.passed else "FAIL"
            click.echo(
                f"{verdict} theta_db={fmt(r.theta_db)} zeta={fmt(r.zeta)} {cfg.model}={r.theorem1:.4f} "
                f"corollary1={r.corollary1:.4f} sim={r.sim_mean:.4f}+-{r.sim_half_width:.4f} "
                f"rel_error={r.rel_error:.4f}",
                err=True,
            )
        if not all(r.passed for r in rows):
            sys.exit(EXIT_VALIDATION)

    _run(run)


if __name__ == "__main__":
    main()
