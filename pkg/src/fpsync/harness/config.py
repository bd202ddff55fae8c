"""Experiment configuration: TOML or JSON files mapped onto :class:`ExperimentSpec`.

Layout (every key optional)::

    seed = 7
    trials = 500
    snr_db = [-40, -35, -30]
    estimators = ["rectangular", "hamming", "music"]
    out = "results/run"
    drift = "continuous"          # "integer", or "delay" (fractional delay, whole Doppler rows)
    range_convention = "two_way"  # or "one_way"
    row_lock = false
    q_convention = "cdf"

    [system]                      # SystemConfig fields
    n_subcarriers = 128
    n_symbols = 64

    [scenario]
    kind = "random"               # or "reference"
    static_paths = [2, 4]
    distance_m = [20.0, 150.0]
    ...

    [music]
    n_sources = "truth"           # "gap" or an integer
    regularization = 0.1
    row_mode = "track"            # Doppler rows from a rectangular guide, or "search"
    normalize = "row"             # per-row correlation normalization, or "fingerprint"
    ...
"""
from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..core_types import SPEED_OF_LIGHT, SystemConfig
from ..music import SmoothingConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_SNRS = tuple(range(-40, 1, 5))
DEFAULT_ESTIMATORS = ("rectangular", "hamming", "music")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    """Distribution of random sweep scenarios; ``kind="reference"`` uses the fixed four-reflector scene."""

    kind: str = "random"
    static_paths: tuple = (2, 4)
    moving_paths: int = 1
    distance_m: tuple = (20.0, 150.0)
    speed_mps: tuple = (5.0, 20.0)
    gain_db: tuple = (0.0, 10.0)
    cfo_hz: tuple = (-2000.0, 2000.0)
    timing_samples: tuple = (0.0, 5.0)
    max_doppler_drift_bins: int = 3
    max_delay_drift_samples: float = 4.0

    def __post_init__(self):
        if self.kind not in ("random", "reference"):
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        lo, hi = self.static_paths
        if not 1 <= lo <= hi:
            raise ConfigError("static_paths must be an increasing pair >= 1")
        for name in ("distance_m", "speed_mps", "gain_db", "cfo_hz", "timing_samples"):
            a, b = getattr(self, name)
            if a > b:
                raise ConfigError(f"{name} range is reversed")


@dataclass(frozen=True)
class MusicSpec:
    n_sources: object = "truth"
    regularization: float = 0.1
    pad_doppler: int = 8
    seg_len: int | None = None
    stride: int | None = None
    n_stack: int | None = None
    n_starts: int | None = None
    g_step: int = 1
    row_mode: str = "track"  # "track" or "search"
    normalize: str = "row"  # "row" or "fingerprint"

    def __post_init__(self):
        if self.row_mode not in ("track", "search"):
            raise ConfigError(f"unknown music row_mode {self.row_mode!r}")
        if self.normalize not in ("row", "fingerprint"):
            raise ConfigError(f"unknown music normalize {self.normalize!r}")

    def smoothing(self, system: SystemConfig) -> SmoothingConfig:
        base = SmoothingConfig.for_config(system)
        seg = self.seg_len or base.seg_len
        starts = self.n_starts or (system.n_subcarriers - seg + 1)
        return SmoothingConfig(seg, self.stride or base.stride, self.n_stack or base.n_stack,
                               starts, self.g_step)


@dataclass(frozen=True)
class ExperimentSpec:
    system: SystemConfig = field(default_factory=SystemConfig)
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    music: MusicSpec = field(default_factory=MusicSpec)
    snr_db: tuple = DEFAULT_SNRS
    trials: int = 500
    estimators: tuple = DEFAULT_ESTIMATORS
    seed: int = 0
    out: str = "fpsync_out"
    drift: str = "continuous"
    range_convention: str = "two_way"
    row_lock: bool = False
    q_convention: str = "cdf"
    noise_form: str = "exact_sq"
    theory_draws: int = 20000
    crlb_subcarriers: tuple = (64, 128, 256)

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        if len(self.snr_db) == 0:
            raise ConfigError("SNR list is empty")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.drift not in ("continuous", "integer", "delay"):
            raise ConfigError(f"unknown drift mode {self.drift!r}")
        if self.range_convention not in ("two_way", "one_way"):
            raise ConfigError(f"unknown range convention {self.range_convention!r}")
        if self.q_convention not in ("cdf", "tail", "variance"):
            raise ConfigError(f"unknown q convention {self.q_convention!r}")
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def meters_per_bin(self) -> float:
        """Range per delay bin; two-way halves the one-way propagation distance."""
        one_way = SPEED_OF_LIGHT * self.system.sample_period / self.system.pad_delay
        return one_way / 2 if self.range_convention == "two_way" else one_way

    def with_(self, **changes) -> "ExperimentSpec":
        return replace(self, **changes)


def _sub(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name for f in fields(cls)}
    bad = set(data) - known
    if bad:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(bad)}")
    data = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def spec_from_dict(data: dict) -> ExperimentSpec:
    data = dict(data)
    system = _sub(SystemConfig, data.pop("system", None), "system")
    scenario = _sub(ScenarioSpec, data.pop("scenario", None), "scenario")
    music = _sub(MusicSpec, data.pop("music", None), "music")
    known = {f.name for f in fields(ExperimentSpec)} - {"system", "scenario", "music"}
    bad = set(data) - known
    if bad:
        raise ConfigError(f"unknown top-level keys: {sorted(bad)}")
    data = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return ExperimentSpec(system=system, scenario=scenario, music=music, **data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentSpec:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    try:
        if p.suffix.lower() == ".json":
            data = json.loads(raw.decode("utf-8"))
        else:
            data = tomllib.loads(raw.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {p}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")
    return spec_from_dict(data)


def spec_to_dict(spec: ExperimentSpec) -> dict:
    d = asdict(spec)
    d["system"] = {k: v for k, v in d["system"].items() if k not in ("sample_period", "symbol_period")}
    return d
