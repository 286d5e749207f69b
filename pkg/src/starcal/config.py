"""Simulation configuration: defaults, TOML loading and derived objects.

The default values reproduce the reference scenario: 5000 s at 0.5 s steps,
inertia diag(100, 60, 50) kg m^2, initial spin [3.0, 4.4, -5.0] deg/s,
damping D = 0.6 switched on at t = 4100 s, a 7x7x7 hypothesis grid and the
standard filter tuning (see FilterTuning).  Every field can be overridden
from a TOML file with the same nested layout as the dataclasses below.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import TorqueProfile, check_inertia
from .mekf import NoiseConfig
from .mmae import PSI_MEAN, STRATEGIES, RefinementStrategy
from .sensors import ADDITIVE, MULTIPLICATIVE, GyroModel, NoiseModel, StarCatalog

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "TimeGrid",
    "TruthSetup",
    "FilterTuning",
    "GridSetup",
    "StrategySetup",
    "MeasurementSetup",
    "ManeuverSetup",
    "CampaignSetup",
    "SimConfig",
    "load_config",
    "maneuver_comparison_profile",
    "single_filter_profile",
]

DEG = math.pi / 180.0


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass(frozen=True)
class TimeGrid:
    t_end: float = 5000.0
    dt: float = 0.5
    t_damp: float = 4100.0
    damping: float = 0.6

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_end / self.dt))


@dataclass(frozen=True)
class TruthSetup:
    omega0_deg_s: tuple = (3.0, 4.4, -5.0)
    mu_mode: str = "uniform"            # "uniform" in a box or "fixed"
    mu_box_rad: float = 2.5e-3          # per-axis half width of the box
    mu_fixed_rad: tuple = (0.0, 0.0, 0.0)

    @property
    def omega0(self) -> np.ndarray:
        return np.asarray(self.omega0_deg_s, dtype=float) * DEG


@dataclass(frozen=True)
class FilterTuning:
    """Standard-deviation tuning of the per-hypothesis filters.

    p0_*: initial error covariance; q_*: continuous process noise;
    r_*: measurement noise.  Attitude entries are in MRP units.
    """

    p0_omega: float = 0.01
    p0_bias: float = 0.001
    p0_attitude: float = 1.0
    q_omega: float = 1.0e-6
    q_bias: float = 5.0e-8
    q_attitude: float = 5.0e-7
    r_attitude: float = 8.73e-4
    r_gyro: float = 5.0e-4


@dataclass(frozen=True)
class GridSetup:
    n_axis: int = 7
    half_width_rad: float = 5.0e-3
    prune_fraction: float = 1.0e-6   # prune threshold = fraction / n_alive


@dataclass(frozen=True)
class StrategySetup:
    kind: str = PSI_MEAN
    w_branch: float = 0.5
    psi_threshold_pct: float = 10.0
    shrink: float = 0.65
    max_refinements: int = 7
    min_half_width_rad: float = 1.0e-3


@dataclass(frozen=True)
class MeasurementSetup:
    model: str = MULTIPLICATIVE
    sigma_theta_rad: float = 8.73e-4
    sigma_v: float = 1.0e-3
    sigma_gyro_rad_s: float = 5.0e-4
    v1: tuple = (1.0, 0.0, 0.0)
    v2: tuple = (0.0, 1.0, 0.0)


@dataclass(frozen=True)
class ManeuverSetup:
    """Unmodeled step changes of the true body rates."""

    enabled: bool = False
    times_s: tuple = (300.0, 600.0, 900.0, 1200.0)
    step_deg_s: float = 2.0


@dataclass(frozen=True)
class CampaignSetup:
    runs: int = 20
    seed: int = 20250810
    workers: int = 0      # 0 = one process per CPU


@dataclass(frozen=True)
class SimConfig:
    inertia_diag: tuple = (100.0, 60.0, 50.0)
    time: TimeGrid = field(default_factory=TimeGrid)
    truth: TruthSetup = field(default_factory=TruthSetup)
    filter: FilterTuning = field(default_factory=FilterTuning)
    grid: GridSetup = field(default_factory=GridSetup)
    strategy: StrategySetup = field(default_factory=StrategySetup)
    measurement: MeasurementSetup = field(default_factory=MeasurementSetup)
    maneuver: ManeuverSetup = field(default_factory=ManeuverSetup)
    campaign: CampaignSetup = field(default_factory=CampaignSetup)

    # ---- derived objects -------------------------------------------------
    def inertia(self) -> np.ndarray:
        return check_inertia(np.diag(self.inertia_diag))

    def torque_profile(self) -> TorqueProfile:
        return TorqueProfile(m_c=np.zeros(3), damping=self.time.damping, t_damp=self.time.t_damp)

    def noise_config(self) -> NoiseConfig:
        f = self.filter
        p0 = np.diag([f.p0_omega**2] * 3 + [f.p0_bias**2] * 3 + [f.p0_attitude**2] * 3)
        q = np.diag([f.q_omega**2] * 3 + [f.q_bias**2] * 3 + [f.q_attitude**2] * 3)
        r = np.diag([f.r_attitude**2] * 3 + [f.r_gyro**2] * 3)
        return NoiseConfig(p0=p0, q=q, r=r)

    def noise_model(self) -> NoiseModel:
        m = self.measurement
        return NoiseModel(kind=m.model, sigma_v=m.sigma_v, sigma_theta=m.sigma_theta_rad)

    def gyro_model(self) -> GyroModel:
        return GyroModel(sigma_g=self.measurement.sigma_gyro_rad_s)

    def catalog(self) -> StarCatalog:
        return StarCatalog(v1_i=np.asarray(self.measurement.v1, dtype=float),
                           v2_i=np.asarray(self.measurement.v2, dtype=float))

    def refinement_strategy(self) -> RefinementStrategy:
        s = self.strategy
        return RefinementStrategy(
            kind=s.kind, w_branch=s.w_branch, psi_threshold=s.psi_threshold_pct,
            shrink=s.shrink, max_refinements=s.max_refinements,
            min_half_width=s.min_half_width_rad,
        )

    def maneuver_times(self) -> np.ndarray:
        if not self.maneuver.enabled:
            return np.empty(0)
        return np.asarray(self.maneuver.times_s, dtype=float)

    # ---- transforms ------------------------------------------------------
    def replace(self, **groups) -> "SimConfig":
        """Replace whole sub-configs, e.g. cfg.replace(strategy=...)."""
        return dataclasses.replace(self, **groups)

    def with_strategy(self, kind: str) -> "SimConfig":
        return self.replace(strategy=dataclasses.replace(self.strategy, kind=kind))

    def with_noise_model(self, model: str) -> "SimConfig":
        return self.replace(measurement=dataclasses.replace(self.measurement, model=model))

    def with_campaign(self, runs: int | None = None, seed: int | None = None,
                      workers: int | None = None) -> "SimConfig":
        c = self.campaign
        return self.replace(campaign=CampaignSetup(
            runs=c.runs if runs is None else runs,
            seed=c.seed if seed is None else seed,
            workers=c.workers if workers is None else workers,
        ))

    def fast(self) -> "SimConfig":
        """Shrunken profile for smoke tests: 3^3 grid, 1000 s, 5 runs."""
        return self.replace(
            time=dataclasses.replace(self.time, t_end=1000.0, t_damp=800.0),
            grid=dataclasses.replace(self.grid, n_axis=3),
            campaign=dataclasses.replace(self.campaign, runs=min(self.campaign.runs, 5)),
        )

    def validate(self) -> "SimConfig":
        t = self.time
        if t.dt <= 0.0 or t.t_end <= 0.0:
            raise ConfigError("time.dt and time.t_end must be positive")
        if t.damping < 0.0:
            raise ConfigError("time.damping must be non-negative")
        if self.campaign.runs < 1:
            raise ConfigError("campaign.runs must be >= 1")
        if self.grid.n_axis < 1 or self.grid.n_axis % 2 == 0:
            raise ConfigError("grid.n_axis must be odd")
        if self.grid.half_width_rad < 0.0:
            raise ConfigError("grid.half_width_rad must be non-negative")
        if self.strategy.kind not in STRATEGIES:
            raise ConfigError(f"strategy.kind must be one of {STRATEGIES}")
        if self.measurement.model not in (ADDITIVE, MULTIPLICATIVE):
            raise ConfigError("measurement.model must be 'additive' or 'multiplicative'")
        if self.truth.mu_mode not in ("uniform", "fixed"):
            raise ConfigError("truth.mu_mode must be 'uniform' or 'fixed'")
        try:
            self.inertia()
            self.noise_config()
            self.catalog()
            self.refinement_strategy()
            self.noise_model()
            self.gyro_model()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self


_GROUPS = {
    "time": TimeGrid,
    "truth": TruthSetup,
    "filter": FilterTuning,
    "grid": GridSetup,
    "strategy": StrategySetup,
    "measurement": MeasurementSetup,
    "maneuver": ManeuverSetup,
    "campaign": CampaignSetup,
}


def _build_group(cls, data, where):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in [{where}]")
    kwargs = {}
    for key, value in data.items():
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [{where}] section: {exc}") from exc


def load_config(path: str | None = None, base: SimConfig | None = None) -> SimConfig:
    """Load a SimConfig, overriding defaults with a TOML file if given."""
    cfg = base if base is not None else SimConfig()
    if path is None:
        return cfg.validate()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc

    groups = {}
    unknown = set(data) - set(_GROUPS) - {"inertia_diag"}
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    for name, cls in _GROUPS.items():
        if name in data:
            current = getattr(cfg, name)
            merged = {**dataclasses.asdict(current), **data[name]}
            groups[name] = _build_group(cls, merged, name)
    if "inertia_diag" in data:
        groups["inertia_diag"] = tuple(data["inertia_diag"])
    return cfg.replace(**groups).validate()


def maneuver_comparison_profile(base: SimConfig | None = None) -> SimConfig:
    """Scenario for the additive/multiplicative noise comparison.

    Single filter, unmodeled rate steps at 5/10/15/20 minutes over a 1800 s
    horizon.  The tracker noise scales and the filter tuning are chosen so
    the post-maneuver attitude error is measurement dominated: with the
    slow default tuning the steady-state error is set by integrated gyro
    noise and the tracker noise model has no measurable effect.
    """
    cfg = base if base is not None else SimConfig()
    return cfg.replace(
        time=TimeGrid(t_end=1800.0, dt=0.5, t_damp=math.inf, damping=0.0),
        grid=GridSetup(n_axis=1, half_width_rad=0.0),
        truth=dataclasses.replace(cfg.truth, mu_mode="fixed", mu_fixed_rad=(0.0, 0.0, 0.0)),
        maneuver=ManeuverSetup(enabled=True),
        measurement=dataclasses.replace(
            cfg.measurement, sigma_theta_rad=5.0e-3, sigma_v=8.0e-3),
        filter=dataclasses.replace(
            cfg.filter, q_omega=5.0e-5, q_attitude=2.0e-3, r_attitude=2.0e-3),
        campaign=dataclasses.replace(cfg.campaign, runs=max(cfg.campaign.runs, 24)),
    ).validate()


def single_filter_profile(base: SimConfig | None = None) -> SimConfig:
    """Single MEKF, zero misalignment, default scenario and tuning."""
    cfg = base if base is not None else SimConfig()
    return cfg.replace(
        grid=GridSetup(n_axis=1, half_width_rad=0.0),
        truth=dataclasses.replace(cfg.truth, mu_mode="fixed", mu_fixed_rad=(0.0, 0.0, 0.0)),
    ).validate()
