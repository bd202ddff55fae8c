"""Asynchronous multipath OFDM observations: compact snapshot model and sampled waveform path."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core_types import (SPEED_OF_LIGHT, ClockOffsets, PathParams, SystemConfig,
                         delay_from_distance, dft_matrix, steering_vector)


@dataclass(frozen=True)
class SnapshotMatrix:
    """Compensated observations of one receive antenna: ``n_symbols x n_subcarriers``."""

    gamma: np.ndarray
    antenna: int
    config: SystemConfig

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=complex)
        want = (self.config.n_symbols, self.config.n_subcarriers)
        if g.shape != want:
            raise ValueError(f"snapshot shape {g.shape} does not match config {want}")
        if not np.all(np.isfinite(g)):
            raise ValueError("snapshot contains non-finite entries")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)


@dataclass(frozen=True)
class Scenario:
    """Propagation paths, clock offsets, precoder and noise level for one packet.

    The first ``static_count`` paths are the static background and must have zero
    velocity. ``static_count=None`` counts the leading zero-velocity paths.
    """

    paths: tuple
    static_count: int | None = None
    offsets: ClockOffsets = field(default_factory=ClockOffsets)
    precoder: tuple | None = None
    noise_var: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        paths = tuple(p if isinstance(p, PathParams) else PathParams(**p) for p in self.paths)
        object.__setattr__(self, "paths", paths)
        if self.static_count is None:
            n = 0
            while n < len(paths) and paths[n].is_static:
                n += 1
            object.__setattr__(self, "static_count", n)
        if not 0 <= self.static_count <= len(paths):
            raise ValueError("static_count must lie in [0, number of paths]")
        if any(not p.is_static for p in paths[: self.static_count]):
            raise ValueError("static paths must have zero velocity")
        if not (self.noise_var >= 0):
            raise ValueError(f"noise variance must be >= 0, got {self.noise_var}")
        if self.precoder is not None:
            object.__setattr__(self, "precoder", tuple(complex(w) for w in self.precoder))

    def precoder_vector(self, n_tx: int) -> np.ndarray:
        if self.precoder is None:
            return np.full(n_tx, 1.0 / np.sqrt(n_tx), dtype=complex)
        w = np.asarray(self.precoder, dtype=complex)
        if w.shape != (n_tx,):
            raise ValueError(f"precoder length {w.size} != n_tx {n_tx}")
        return w

    def with_offsets(self, offsets: ClockOffsets) -> "Scenario":
        return Scenario(self.paths, self.static_count, offsets, self.precoder, self.noise_var, self.seed)

    def with_noise(self, noise_var: float, seed: int | None = None) -> "Scenario":
        return Scenario(self.paths, self.static_count, self.offsets, self.precoder, noise_var,
                        self.seed if seed is None else seed)


def path_amplitudes(scenario: Scenario, config: SystemConfig, antenna: int = 0) -> np.ndarray:
    """Complex factor of each path at one antenna, excluding the delay-dependent carrier phase."""
    w = scenario.precoder_vector(config.n_tx)
    out = np.empty(len(scenario.paths), dtype=complex)
    for i, p in enumerate(scenario.paths):
        rx = steering_vector(p.aoa, config.n_rx)[antenna]
        tx = steering_vector(p.aod, config.n_tx) @ w
        out[i] = p.gain * rx * tx
    return out


def _check_antenna(config: SystemConfig, antenna: int):
    if not 0 <= antenna < config.n_rx:
        raise ValueError(f"antenna index {antenna} outside [0, {config.n_rx})")


def _noise(rng, shape, var):
    if var == 0:
        return 0.0
    return np.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def synthesize_gamma(scenario: Scenario, config: SystemConfig, antenna: int = 0,
                     rng: np.random.Generator | None = None) -> SnapshotMatrix:
    """Snapshot matrix of the compact model plus circular Gaussian noise."""
    _check_antenna(config, antenna)
    if rng is None:
        rng = np.random.default_rng(scenario.seed)
    off = scenario.offsets
    fc = config.carrier_freq
    g = np.arange(config.n_symbols)
    n = np.arange(config.n_subcarriers)
    amps = path_amplitudes(scenario, config, antenna)
    out = np.zeros((config.n_symbols, config.n_subcarriers), dtype=complex)
    for amp, p in zip(amps, scenario.paths):
        total_delay = off.timing_offset + p.delay
        alpha = np.exp(-2j * np.pi * fc * total_delay) * amp
        doppler = fc * 2 * p.velocity / SPEED_OF_LIGHT + off.cfo
        rows = np.exp(-2j * np.pi * doppler * g * config.symbol_period)
        cols = np.exp(-2j * np.pi * n * config.subcarrier_spacing * total_delay)
        out += alpha * np.outer(rows, cols)
    out = out + _noise(rng, out.shape, scenario.noise_var)
    return SnapshotMatrix(out, antenna, config)


def synthesize_waveform_symbol(scenario: Scenario, config: SystemConfig, g: int, data,
                               rng: np.random.Generator | None = None,
                               approximate: bool = False) -> np.ndarray:
    """Sampled received OFDM symbol ``g`` after CP removal, ``n_rx x n_subcarriers``.

    With ``approximate=False`` the intra-symbol Doppler and CFO phase terms are kept,
    so comparing against the compact model measures the approximation error.
    """
    data = np.asarray(data, dtype=complex)
    nc = config.n_subcarriers
    if data.shape != (nc,):
        raise ValueError(f"need {nc} data symbols, got shape {data.shape}")
    if np.any(data == 0):
        raise ValueError("zero-valued data symbol cannot be compensated")
    if rng is None:
        rng = np.random.default_rng(scenario.seed)
    off = scenario.offsets
    fc, df = config.carrier_freq, config.subcarrier_spacing
    u = np.arange(nc)[None, :]
    n = np.arange(nc)[:, None]
    t = g * config.symbol_period + (0.0 if approximate else 1.0) * u * config.sample_period
    w = scenario.precoder_vector(config.n_tx)
    ifft = dft_matrix(nc).conj()
    y = np.zeros((config.n_rx, nc), dtype=complex)
    for p in scenario.paths:
        total_delay = off.timing_offset + p.delay
        beta = 2 * p.velocity / SPEED_OF_LIGHT
        carrier = np.exp(-2j * np.pi * (fc * (beta * t + total_delay) + off.cfo * t))
        per_sub = np.exp(-2j * np.pi * n * df * total_delay)
        if not approximate:
            per_sub = per_sub * np.exp(-2j * np.pi * n * df * beta * t)
        row = carrier * np.sum(data[:, None] * per_sub * ifft, axis=0)
        rx = steering_vector(p.aoa, config.n_rx)[:, None]
        tx = steering_vector(p.aod, config.n_tx) @ w
        y += p.gain * tx * rx * row
    return y + _noise(rng, y.shape, scenario.noise_var)


def compensate(y_sym, data) -> np.ndarray:
    """Remove the OFDM modulation: ``Y F^H diag(data)^-1`` with F the unitary inverse DFT."""
    y_sym = np.asarray(y_sym, dtype=complex)
    data = np.asarray(data, dtype=complex)
    if np.any(data == 0):
        raise ValueError("singular data matrix: zero-valued symbol")
    nc = data.size
    if y_sym.shape[-1] != nc:
        raise ValueError("symbol length and data length differ")
    # F^H with F = conj(DFT) is the unitary forward DFT
    return (y_sym @ dft_matrix(nc)) / data


def qpsk_symbols(n: int, seed=None) -> np.ndarray:
    """Unit-modulus QPSK symbols (+-1 +-1j)/sqrt(2)."""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(2, n))
    return ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / np.sqrt(2)


def noise_var_for_snr(scenario: Scenario, config: SystemConfig, snr_db: float) -> float:
    """Noise variance giving the requested SNR relative to the strongest path's per-sample power."""
    peak = np.max(np.abs(path_amplitudes(scenario, config)) ** 2)
    return float(peak / 10 ** (snr_db / 10))


def reference_scenario(cfo: float = 0.0, timing_offset: float = 0.0) -> Scenario:
    """Four static reflectors: gains 10, 4, 7, 1 dB at path lengths 40, 50, 75, 110 m."""
    gains_db = [10.0, 4.0, 7.0, 1.0]
    lengths = [40.0, 50.0, 75.0, 110.0]
    paths = tuple(PathParams(gain=10 ** (gdb / 20), delay=delay_from_distance(d))
                  for gdb, d in zip(gains_db, lengths))
    return Scenario(paths, offsets=ClockOffsets(cfo=cfo, timing_offset=timing_offset))
