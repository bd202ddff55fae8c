"""Sliding cyclic cross-correlation drift estimator and the wrapped squared-error metric."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_types import GridMeta, wrap_signed


@dataclass(frozen=True)
class CorrelationSurface:
    a: np.ndarray

    @property
    def shape(self):
        return self.a.shape


@dataclass(frozen=True)
class EstimateResult:
    row: int
    shift: int
    row_offset: int
    cfo_drift: float
    timing_drift: float
    peak_value: float


def cross_correlate(xi, beta) -> CorrelationSurface:
    """A[i, q] = sum_p xi[i, (q+p) mod P] conj(beta[p]) / ||beta||^2, one FFT per row."""
    x = np.asarray(getattr(xi, "xi", xi))
    b = np.asarray(getattr(beta, "beta", beta))
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[-1] != b.shape[-1]:
        raise ValueError(f"column count {x.shape[-1]} != fingerprint length {b.shape[-1]}")
    power = float(np.sum(np.abs(b) ** 2))
    if not power > 0:
        raise ValueError("zero-norm fingerprint")
    fx = np.fft.fft(x, axis=-1)
    fb = np.fft.fft(b)
    a = np.fft.ifft(fx * np.conj(fb)[None, :], axis=-1) / power
    return CorrelationSurface(a)


def estimate_drift(surface, grid: GridMeta | None = None, reference_row: int = 0,
                   row_lock: int | None = None) -> EstimateResult:
    """Peak of |A|. Ties go to the smallest row, then the smallest column.

    The delay shift is reported in (-P/2, P/2]; the Doppler offset is taken relative to
    ``reference_row`` and wrapped the same way. ``row_lock`` restricts the search to one row.
    """
    a = np.abs(np.asarray(getattr(surface, "a", surface)))
    if a.ndim == 1:
        a = a[None, :]
    if a.size == 0:
        raise ValueError("empty correlation surface")
    n_rows, n_cols = a.shape
    if row_lock is not None:
        i = int(row_lock) % n_rows
        q = int(np.argmax(a[i]))
    else:
        # argmax over the flattened array already returns the first maximum in row-major order
        i, q = np.unravel_index(int(np.argmax(a)), a.shape)
        i, q = int(i), int(q)
    shift = int(wrap_signed(q, n_cols))
    row_off = int(wrap_signed(i - reference_row, n_rows))
    fb = grid.doppler_bin if grid is not None else 1.0
    tb = grid.delay_bin if grid is not None else 1.0
    return EstimateResult(i, shift, row_off, row_off * fb, shift * tb, float(a[i, q]))


def empirical_mse(trials, meters_per_bin: float, n_bins: int | None = None) -> float:
    """Mean of (R * (l_hat - l_true))^2 over trials, differences wrapped when ``n_bins`` is given."""
    t = np.asarray(list(trials), dtype=float)
    if t.size == 0:
        raise ValueError("no trials")
    if not meters_per_bin > 0:
        raise ValueError("meters_per_bin must be positive")
    t = t.reshape(-1, 2)
    d = t[:, 0] - t[:, 1]
    if n_bins is not None:
        d = wrap_signed(d, n_bins)
    sq = (meters_per_bin * d) ** 2
    return float(np.mean(sq))
