"""Scenario orchestration: parameter models, drop generation, rate sweeps,
the surface-size search, and CSV emission."""

from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics, baseline_mimo, channel, geometry
from .mc_engine import DesiredLink, Drop, InterferenceLink, run_monte_carlo

SPEED_OF_LIGHT = 299792458.0

SCENARIO_KINDS = ("grid-plane", "uniform-room", "mimo-baseline")
INTERFERENCE_MODES = ("los-only", "nlos-only", "probabilistic")

CSV_HEADER = ("scenario,M,K,L,tau,mc_mean,mc_mean_se,mc_var,mc_var_se,"
              "asym_mean,asym_var,bound,log_base,seed")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment description; defaults follow the reference parameter set
    (3 GHz carrier, 3 dB target SNR, tau 0.5, unit side 0.5 m, cutoff 10 m)."""

    kind: str = "uniform-room"
    num_devices: int = 10
    m_grid: tuple[int, ...] = (100,)
    half_length: float = 0.25
    frequency: float = 3.0e9
    snr_db: float = 3.0
    tau: float = 0.5
    d_c: float = 10.0
    d_m: float = 5.0                    # grid-plane device pitch
    mode: str = "probabilistic"
    drops: int = 10
    realizations: int = 1000
    seed: int = 1
    log_base: str = "e"
    beta_pl: float = 3.7
    paths_per_antenna: float = 0.5      # P = round(M * paths_per_antenna)
    plane: tuple = ((-10.0, 10.0), (-10.0, 10.0), 1.0)   # x, y ranges + height
    room: tuple = ((-2.0, 2.0), (-2.0, 2.0), (0.0, 2.0))  # uniform-deploy box

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    def validate(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        if self.mode not in INTERFERENCE_MODES:
            raise ConfigError(f"unknown interference mode {self.mode!r}")
        if not 0.0 <= self.tau < 1.0:
            raise ConfigError("tau must lie in [0, 1)")
        if self.num_devices < 1 or self.drops < 1 or self.realizations < 2:
            raise ConfigError("counts must be positive (realizations >= 2)")
        if self.half_length <= 0 or self.frequency <= 0 or self.d_c <= 0 \
                or self.d_m <= 0:
            raise ConfigError("lengths and frequencies must be positive")
        for m in self.m_grid:
            if math.isqrt(m) ** 2 != m and self.kind != "mimo-baseline":
                raise ConfigError(f"M = {m} is not a perfect square")


@dataclass(frozen=True)
class RateReport:
    scenario: str
    num_antennas: int
    num_devices: int
    half_length: float
    tau: float
    mc_mean: float
    mc_mean_se: float
    mc_var: float
    mc_var_se: float
    asym_mean: float
    asym_var: float
    bound: float
    log_base: str
    seed: int


def los_probability(d: float, d_c: float) -> float:
    """Distance-decaying LOS probability (d_c is the cutoff distance)."""
    if d <= 0 or d_c <= 0:
        raise ValueError("distances must be positive")
    return max(0.0, (d_c - d) / d_c)


def rician_factor(d: float) -> float:
    """Distance-dependent Rician factor, 13 - 0.03 d in dB, returned linear."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return 10.0 ** ((13.0 - 0.03 * d) / 10.0)


def _place_devices(config: ScenarioConfig, drop_index: int) -> list[geometry.Device]:
    if config.kind == "grid-plane":
        (x0, x1), (y0, y1), z = config.plane
        devices = geometry.place_devices_grid(config.d_m, (x0, x1), (y0, y1), z)
        if len(devices) < config.num_devices:
            raise ConfigError(
                f"grid deployment yields {len(devices)} devices, "
                f"need {config.num_devices}; decrease d_m or the device count")
        target = devices[0]
        rest = sorted(devices[1:], key=lambda d: (
            float(np.linalg.norm(d.position - target.position)), d.index))
        return [target] + rest[:config.num_devices - 1]
    seed = np.random.SeedSequence([config.seed, drop_index, 0])
    return geometry.place_devices_uniform(config.num_devices, config.room, seed)


def make_drop(config: ScenarioConfig, drop_index: int,
              num_antennas: int | None = None,
              half_length: float | None = None) -> Drop:
    """Build the frozen drop `drop_index`.

    The frozen randomness (device positions, LOS flags, path angles) depends
    only on (seed, drop_index), so sweeping M or the unit size re-materializes
    the same geometric realization.
    """
    config.validate()
    m = num_antennas if num_antennas is not None else config.m_grid[0]
    hl = half_length if half_length is not None else config.half_length
    devices = _place_devices(config, drop_index)

    if config.kind == "mimo-baseline":
        return baseline_mimo.build_mimo_drop(
            devices, m, config.wavelength, (config.seed, drop_index, 3),
            target_snr_db=config.snr_db, tau=config.tau,
            beta_pl=config.beta_pl)

    target = devices[0]
    grid = geometry.build_grid(target.position[:2], hl, m, config.wavelength)
    h_kk = channel.los_channel(target, grid)
    snr_lin = 10.0 ** (config.snr_db / 10.0)

    def power_control(dev):
        # invert the LOS power gain at the unit center (distance = z)
        return snr_lin * 4.0 * math.pi * dev.z**2

    flag_rng = np.random.default_rng(
        np.random.SeedSequence([config.seed, drop_index, 1]))
    num_paths = int(round(m * config.paths_per_antenna))

    links = []
    for dev in devices[1:]:
        d_center = float(np.linalg.norm(dev.position - grid.center))
        u = flag_rng.uniform()  # drawn for every link to keep streams aligned
        if config.mode == "los-only":
            is_los = True
        elif config.mode == "nlos-only":
            is_los = False
        else:
            is_los = u < los_probability(d_center, config.d_c)
        kappa = rician_factor(d_center) if is_los else 0.0

        if config.mode == "los-only":
            r_half = channel.empty_correlation_factor(m, source=(dev.index, 0))
        else:
            angle_rng = np.random.default_rng(
                np.random.SeedSequence([config.seed, drop_index, 2, dev.index]))
            paths = channel.random_path_set(num_paths, angle_rng)
            r_half = channel.correlation_factor(dev, grid, paths,
                                               config.beta_pl,
                                               source=(dev.index, 0))
        links.append(InterferenceLink(
            kappa=kappa, h_los=channel.los_channel(dev, grid),
            r_half=r_half.matrix, rho=power_control(dev)))

    desired = DesiredLink(h_los=h_kk, err_amp=np.abs(h_kk),
                          rho=power_control(target))
    return Drop(desired=desired, links=tuple(links), tau=config.tau,
                grid=grid, target_z=target.z)


# ---------------------------------------------------------------------------
#  Scenario execution
# ---------------------------------------------------------------------------

def _drop_task(config: ScenarioConfig, m: int, drop_index: int):
    drop = make_drop(config, drop_index, num_antennas=m)
    mc = run_monte_carlo(drop, config.realizations, config.seed,
                         drop_tag=drop_index)
    if config.kind == "mimo-baseline":
        # Closed-form moments require a deterministic LOS desired channel.
        asym_mean = asym_var = math.nan
        bound = asymptotics.UNBOUNDED
    else:
        th1 = asymptotics.asymptotic_rate_moments(drop)
        asym_mean, asym_var = th1.mean, th1.variance
        bound = asymptotics.rate_bound(drop)
    return (mc.rate.mean, mc.rate.se_mean, mc.rate.variance,
            mc.rate.se_variance, asym_mean, asym_var, bound)


def run_scenario(config: ScenarioConfig, workers: int = 1) -> list[RateReport]:
    """Evaluate every M on the grid, averaging drops; deterministic for a
    fixed (config, seed) regardless of the worker count."""
    config.validate()
    tasks = [(m, d) for m in config.m_grid for d in range(config.drops)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_drop_task,
                                 [config] * len(tasks),
                                 [m for m, _ in tasks],
                                 [d for _, d in tasks]))
    else:
        rows = [_drop_task(config, m, d) for m, d in tasks]
    results = dict(zip(tasks, rows))

    reports = []
    for m in config.m_grid:
        per_drop = np.array([results[(m, d)] for d in range(config.drops)])
        n_drops = config.drops
        reports.append(RateReport(
            scenario=config.kind, num_antennas=m,
            num_devices=config.num_devices, half_length=config.half_length,
            tau=config.tau,
            mc_mean=float(per_drop[:, 0].mean()),
            mc_mean_se=float(np.sqrt(np.sum(per_drop[:, 1] ** 2)) / n_drops),
            mc_var=float(per_drop[:, 2].mean()),
            mc_var_se=float(np.sqrt(np.sum(per_drop[:, 3] ** 2)) / n_drops),
            asym_mean=float(per_drop[:, 4].mean()),
            asym_var=float(per_drop[:, 5].mean()),
            bound=float(per_drop[:, 6].mean()),
            log_base=config.log_base, seed=config.seed))
    return reports


def write_csv(reports: list[RateReport], path):
    """Emit the fixed-schema CSV; an unbounded rate serializes as `inf`."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER.split(","))
        for r in reports:
            writer.writerow([
                r.scenario, r.num_antennas, r.num_devices,
                repr(r.half_length), repr(r.tau),
                repr(r.mc_mean), repr(r.mc_mean_se),
                repr(r.mc_var), repr(r.mc_var_se),
                repr(r.asym_mean), repr(r.asym_var), repr(r.bound),
                r.log_base, r.seed])


def _l_task(config: ScenarioConfig, hl: float, drop_index: int) -> float:
    drop = make_drop(config, drop_index, half_length=hl)
    return asymptotics.asymptotic_rate_moments(drop).mean


def optimal_l_search(config: ScenarioConfig, l_grid,
                     workers: int = 1) -> tuple[float, list[tuple[float, float]]]:
    """Closed-form rate as a function of the unit half-length; returns the
    argmax (ties toward smaller L) and the full drop-averaged curve."""
    config.validate()
    if not len(l_grid):
        raise ConfigError("l_grid must be nonempty")
    tasks = [(hl, d) for hl in l_grid for d in range(config.drops)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(_l_task, [config] * len(tasks),
                                 [hl for hl, _ in tasks],
                                 [d for _, d in tasks]))
    else:
        vals = [_l_task(config, hl, d) for hl, d in tasks]
    results = dict(zip(tasks, vals))

    curve = []
    for hl in l_grid:
        curve.append((float(hl), float(np.mean(
            [results[(hl, d)] for d in range(config.drops)]))))
    best_l, best_rate = curve[0]
    for hl, rate in curve[1:]:
        if rate > best_rate:
            best_l, best_rate = hl, rate
    return best_l, curve


# ---------------------------------------------------------------------------
#  Config files
# ---------------------------------------------------------------------------

_TUPLE_FIELDS = {"m_grid"}
_INT_FIELDS = {"num_devices", "drops", "realizations", "seed"}
_STR_FIELDS = {"kind", "mode", "log_base"}


def parse_config_file(path) -> dict:
    """Flat `key = value` lines with '#' comments; keys match ScenarioConfig."""
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in _TUPLE_FIELDS:
                out[key] = tuple(int(v) for v in value.split(","))
            elif key in _INT_FIELDS:
                out[key] = int(value)
            elif key in _STR_FIELDS:
                out[key] = value
            else:
                out[key] = float(value)
    return out


def config_from_sources(file_path=None, **overrides) -> ScenarioConfig:
    """Defaults, then config file, then keyword overrides (None skipped)."""
    values = {}
    if file_path is not None:
        values.update(parse_config_file(file_path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        config = ScenarioConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    config.validate()
    return config
