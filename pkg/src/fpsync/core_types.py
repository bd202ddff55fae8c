"""Shared records, the unitary DFT matrix and small sequence helpers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


def _check_count(name: str, value: int, minimum: int = 1) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


@dataclass(frozen=True)
class SystemConfig:
    """OFDM numerology plus the zero-padding factors of the delay-Doppler grid.

    ``sample_period`` and ``symbol_period`` are derived; passing them explicitly
    is allowed but they must agree with the numerology to 1e-12 relative.
    """

    carrier_freq: float = 28e9
    subcarrier_spacing: float = 100e3
    n_subcarriers: int = 128
    cp_len: int = 16
    n_symbols: int = 64
    n_rx: int = 1
    n_tx: int = 1
    pad_delay: int = 8
    pad_doppler: int = 2
    sample_period: float | None = None
    symbol_period: float | None = None

    def __post_init__(self):
        for name in ("n_subcarriers", "n_symbols", "n_rx", "n_tx", "pad_delay", "pad_doppler"):
            object.__setattr__(self, name, _check_count(name, getattr(self, name)))
        object.__setattr__(self, "cp_len", _check_count("cp_len", self.cp_len, 0))
        if not (self.subcarrier_spacing > 0 and math.isfinite(self.subcarrier_spacing)):
            raise ValueError("subcarrier_spacing must be positive and finite")
        if not (self.carrier_freq > 0 and math.isfinite(self.carrier_freq)):
            raise ValueError("carrier_freq must be positive and finite")
        t_sam = 1.0 / (self.n_subcarriers * self.subcarrier_spacing)
        t_sym = (self.n_subcarriers + self.cp_len) * t_sam
        for name, derived in (("sample_period", t_sam), ("symbol_period", t_sym)):
            given = getattr(self, name)
            if given is not None and not math.isclose(given, derived, rel_tol=1e-12):
                raise ValueError(f"{name}={given} inconsistent with numerology (expected {derived})")
            object.__setattr__(self, name, derived)

    @property
    def delay_bins(self) -> int:
        return self.pad_delay * self.n_subcarriers

    @property
    def doppler_bins(self) -> int:
        return self.pad_doppler * self.n_symbols

    def with_(self, **changes) -> "SystemConfig":
        """Copy with some fields replaced; derived periods are recomputed."""
        changes.setdefault("sample_period", None)
        changes.setdefault("symbol_period", None)
        return replace(self, **changes)

    def grid(self) -> "GridMeta":
        return GridMeta.from_config(self)


@dataclass(frozen=True)
class PathParams:
    """One propagation path: complex gain, delay (s), radial velocity (m/s), AOA/AOD (rad)."""

    gain: complex = 1.0
    delay: float = 0.0
    velocity: float = 0.0
    aoa: float = math.pi / 2
    aod: float = math.pi / 2

    def __post_init__(self):
        if not math.isfinite(self.delay) or self.delay < 0:
            raise ValueError(f"path delay must be finite and >= 0, got {self.delay}")
        if not abs(self.velocity) < 1e-3 * SPEED_OF_LIGHT:
            raise ValueError(f"radial velocity {self.velocity} m/s is not small relative to c")
        object.__setattr__(self, "gain", complex(self.gain))

    @property
    def is_static(self) -> bool:
        return self.velocity == 0.0


@dataclass(frozen=True)
class ClockOffsets:
    """Carrier frequency offset and timing offset, plus their packet-to-packet drifts."""

    cfo: float = 0.0
    timing_offset: float = 0.0
    cfo_drift: float = 0.0
    timing_drift: float = 0.0

    def __post_init__(self):
        for name in ("cfo", "timing_offset", "cfo_drift", "timing_drift"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def drifted(self) -> "ClockOffsets":
        """Offsets seen by the next packet."""
        return ClockOffsets(self.cfo + self.cfo_drift, self.timing_offset + self.timing_drift,
                            self.cfo_drift, self.timing_drift)


@dataclass(frozen=True)
class GridMeta:
    """Bin sizes of a delay-Doppler grid: Hz per Doppler row, s per delay column."""

    doppler_bin: float
    delay_bin: float
    shape: tuple = field(default=(0, 0))

    def __post_init__(self):
        if not (self.doppler_bin > 0 and self.delay_bin > 0):
            raise ValueError("grid sizes must be strictly positive")

    @classmethod
    def from_config(cls, cfg: SystemConfig) -> "GridMeta":
        return cls(doppler_bin=1.0 / (cfg.pad_doppler * cfg.n_symbols * cfg.symbol_period),
                   delay_bin=cfg.sample_period / cfg.pad_delay,
                   shape=(cfg.doppler_bins, cfg.delay_bins))


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix, F[m, k] = exp(-2j*pi*m*k/n) / sqrt(n)."""
    n = _check_count("n", n)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / math.sqrt(n)


def steering_vector(theta: float, n_elements: int, spacing: float = 0.5) -> np.ndarray:
    """Uniform linear array response; ``spacing`` is element spacing in wavelengths."""
    n_elements = _check_count("n_elements", n_elements)
    m = np.arange(n_elements)
    return np.exp(2j * np.pi * m * spacing * math.cos(theta))


def cyclic_shift(x, k: int) -> np.ndarray:
    """y[q] = x[(q + k) mod N]."""
    x = np.asarray(x)
    if x.size == 0:
        return x.copy()
    return np.roll(x, -int(k), axis=-1)


def round_half_up(x):
    """Nearest integer with halves rounded toward +inf (3.5 -> 4, -0.5 -> 0)."""
    return np.floor(np.asarray(x, dtype=float) + 0.5).astype(np.int64)


def wrap_signed(d, n: int):
    """Map integer or real index differences into (-n/2, n/2]."""
    d = np.asarray(d)
    w = np.mod(d, n)
    return np.where(w > n / 2, w - n, w)


def delay_from_distance(distance_m: float) -> float:
    """Propagation delay of a path of the given length."""
    return float(distance_m) / SPEED_OF_LIGHT


def doppler_from_velocity(velocity: float, carrier_freq: float) -> float:
    """Two-way Doppler shift of a reflector moving at ``velocity`` m/s."""
    return 2.0 * velocity * carrier_freq / SPEED_OF_LIGHT
