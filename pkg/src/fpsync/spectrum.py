"""Windowed zero-padded delay-Doppler spectra and fingerprint rows."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import windows as _sw

from .core_types import GridMeta, SystemConfig

WINDOW_KINDS = ("rectangular", "hamming", "hann", "blackman", "custom")
_ALIASES = {"rect": "rectangular", "boxcar": "rectangular", "hanning": "hann"}


@dataclass(frozen=True)
class WindowSpec:
    kind: str
    samples: np.ndarray

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in WINDOW_KINDS:
            raise ValueError(f"unknown window kind {self.kind!r}")
        s = np.asarray(self.samples)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("window samples must be a non-empty 1-D sequence")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size


def make_window(kind: str, n: int) -> WindowSpec:
    """Symmetric window coefficients.

    hamming: 0.54 - 0.46 cos(2 pi k/(n-1)); hann: 0.5 - 0.5 cos(2 pi k/(n-1));
    blackman: 0.42 - 0.5 cos(2 pi k/(n-1)) + 0.08 cos(4 pi k/(n-1)). n = 1 gives [1].
    """
    kind = _ALIASES.get(kind, kind)
    if int(n) != n or n < 1:
        raise ValueError(f"window length must be a positive integer, got {n}")
    n = int(n)
    if kind == "rectangular":
        return WindowSpec(kind, np.ones(n))
    if kind in ("hamming", "hann", "blackman"):
        w = getattr(_sw, kind)(n, sym=True)
        # blackman endpoints come out as tiny negatives from cancellation
        return WindowSpec(kind, np.clip(w, 0.0, None))
    raise ValueError(f"unknown window kind {kind!r}; custom windows need explicit samples")


def custom_window(samples) -> WindowSpec:
    return WindowSpec("custom", np.asarray(samples))


@dataclass(frozen=True)
class DelayDopplerSpectrum:
    """Doppler rows by delay columns, plus the bin sizes of both axes."""

    xi: np.ndarray
    grid: GridMeta

    def __post_init__(self):
        xi = np.asarray(self.xi)
        if xi.ndim != 2 or xi.size == 0:
            raise ValueError("spectrum must be a non-empty 2-D array")
        if not np.all(np.isfinite(xi)):
            raise ValueError("spectrum contains non-finite entries")
        object.__setattr__(self, "xi", xi)

    @property
    def shape(self):
        return self.xi.shape

    def to_csv(self, path, magnitude: bool = True):
        write_matrix_csv(path, self.xi, self.grid, magnitude=magnitude)


@dataclass(frozen=True)
class FingerprintSpectrum:
    beta: np.ndarray
    row: int
    power: float

    def __post_init__(self):
        if not self.power > 0:
            raise ValueError("fingerprint has zero power")


def _as_matrix(gamma) -> np.ndarray:
    g = getattr(gamma, "gamma", gamma)
    g = np.asarray(g)
    if g.ndim != 2:
        raise ValueError(f"snapshot must be 2-D, got shape {g.shape}")
    return g


def _window_samples(w, n: int, name: str) -> np.ndarray:
    if isinstance(w, str):
        w = make_window(w, n)
    s = np.asarray(getattr(w, "samples", w))
    if s.shape != (n,):
        raise ValueError(f"{name} window length {s.size} does not match axis length {n}")
    return s


def windowed_2d_spectrum(gamma, psi_doppler="rectangular", psi_delay="rectangular",
                         pad_doppler: int = 1, pad_delay: int = 1, grid: GridMeta | None = None,
                         real_part: bool = False) -> DelayDopplerSpectrum:
    """Windowed 2-D spectrum with zero padding along both axes.

    Equals ``conj(F_{KfG}) diag(psi_G) Gamma_pad diag(psi_N) conj(F_{KtN})`` with unitary F,
    so a tone with positive delay lands at a positive delay bin.
    """
    g = _as_matrix(gamma)
    n_sym, n_sub = g.shape
    if pad_doppler < 1 or pad_delay < 1:
        raise ValueError("zero-padding factors must be >= 1")
    wg = _window_samples(psi_doppler, n_sym, "Doppler")
    wn = _window_samples(psi_delay, n_sub, "delay")
    x = g.real if real_part else g
    x = x * wg[:, None] * wn[None, :]
    xi = np.fft.ifft2(x, s=(pad_doppler * n_sym, pad_delay * n_sub), norm="ortho")
    # ortho ifft divides by sqrt of the padded length, matching the unitary matrices
    if grid is None:
        cfg = getattr(gamma, "config", None)
        if cfg is not None:
            grid = GridMeta(1.0 / (pad_doppler * n_sym * cfg.symbol_period),
                            cfg.sample_period / pad_delay, xi.shape)
        else:
            grid = GridMeta(1.0 / (pad_doppler * n_sym), 1.0 / (pad_delay * n_sub), xi.shape)
    return DelayDopplerSpectrum(xi, grid)


def spectrum_for_config(gamma, config: SystemConfig, window="rectangular",
                        window_delay=None) -> DelayDopplerSpectrum:
    """Convenience wrapper using the config's padding factors; one window kind for both axes by default."""
    wd = window if window_delay is None else window_delay
    return windowed_2d_spectrum(gamma, window, wd, config.pad_doppler, config.pad_delay,
                                grid=GridMeta.from_config(config))


def window_dft_profile(psi, pad: int) -> np.ndarray:
    """Zero-padded unitary DFT of the window, length ``pad * N``."""
    s = np.asarray(getattr(psi, "samples", psi))
    if pad < 1:
        raise ValueError("pad must be >= 1")
    m = pad * s.size
    return np.fft.fft(s, n=m) / np.sqrt(m)


def extract_fingerprint(spec, row: int | None = None) -> FingerprintSpectrum:
    """Row ``row`` of the spectrum, or the row of largest squared L2 norm (lowest index on ties)."""
    xi = np.asarray(getattr(spec, "xi", spec))
    if xi.ndim != 2 or xi.size == 0:
        raise ValueError("empty spectrum")
    if row is None:
        power = np.sum(np.abs(xi) ** 2, axis=1)
        row = int(np.argmax(power))
    if not -xi.shape[0] <= row < xi.shape[0]:
        raise ValueError(f"row {row} outside spectrum")
    row = row % xi.shape[0]
    beta = xi[row].copy()
    return FingerprintSpectrum(beta, row, float(np.sum(np.abs(beta) ** 2)))


def mainlobe_width(profile, mode: str = "null", cyclic: bool = True) -> float:
    """Width in bins of the lobe around the global maximum.

    ``mode="null"``: distance between the first local minima either side of the peak.
    ``mode="3db"``: distance between the first crossings below half power, linearly interpolated.
    """
    p = np.abs(np.asarray(profile, dtype=complex if np.iscomplexobj(profile) else float))
    n = p.size
    if n < 3:
        raise ValueError("profile too short")
    peak = int(np.argmax(p))
    if np.ptp(p) <= 1e-12 * max(p[peak], 1e-300):
        raise ValueError("flat profile has no mainlobe")

    def at(i):
        if cyclic:
            return p[i % n]
        return p[i] if 0 <= i < n else -np.inf

    if mode == "null":
        def walk(step):
            i = peak
            for _ in range(n):
                nxt = i + step
                if not cyclic and not 0 <= nxt < n:
                    return abs(i - peak)
                # stop at the start of a rising edge or of a plateau below the peak
                if at(nxt) > at(i) or (at(nxt) == at(i) and at(i) < p[peak]):
                    return abs(i - peak)
                i = nxt
            return abs(i - peak)
        return float(walk(1) + walk(-1))
    if mode == "3db":
        half = p[peak] / np.sqrt(2.0)

        def cross(step):
            i = peak
            for _ in range(n):
                nxt = i + step
                if not cyclic and not 0 <= nxt < n:
                    return float(abs(i - peak))
                if at(nxt) < half:
                    frac = (at(i) - half) / (at(i) - at(nxt))
                    return abs(i - peak) + frac
                i = nxt
            return float(n)
        return float(cross(1) + cross(-1))
    raise ValueError(f"unknown mode {mode!r}")


def write_matrix_csv(path, matrix, grid: GridMeta | None = None, magnitude: bool = True):
    """Row-major CSV: one line per (row, col) with the grid axes in physical units."""
    m = np.asarray(matrix)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if magnitude:
            fh.write("row,col,doppler_hz,delay_s,magnitude\n")
        else:
            fh.write("row,col,doppler_hz,delay_s,real,imag\n")
        dh = grid.doppler_bin if grid else 1.0
        ds = grid.delay_bin if grid else 1.0
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                v = m[i, j]
                if magnitude:
                    fh.write(f"{i},{j},{i * dh:.12g},{j * ds:.12g},{abs(v):.12g}\n")
                else:
                    fh.write(f"{i},{j},{i * dh:.12g},{j * ds:.12g},{v.real:.12g},{v.imag:.12g}\n")
