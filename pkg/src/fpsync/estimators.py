"""scikit-learn style wrappers: spectrum transformers and the fingerprint drift estimator.

``fit`` takes the reference packet's snapshot, ``predict`` takes a drifted one and
returns the estimated drift.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core_types import GridMeta, SystemConfig
from .music import SmoothingConfig, music_surface
from .spectrum import DelayDopplerSpectrum, extract_fingerprint, windowed_2d_spectrum
from .sync_estimator import CorrelationSurface, cross_correlate, estimate_drift


def _unpack(gamma, config):
    cfg = getattr(gamma, "config", None) or config or SystemConfig()
    g = np.asarray(getattr(gamma, "gamma", gamma))
    if g.shape != (cfg.n_symbols, cfg.n_subcarriers):
        cfg = cfg.with_(n_symbols=g.shape[0], n_subcarriers=g.shape[1])
    return g, cfg


class WindowedSpectrum(TransformerMixin, BaseEstimator):
    """Windowed, zero-padded delay-Doppler spectrum of a snapshot.

    ``pad_doppler``/``pad_delay`` of None take the config's factors.
    """

    def __init__(self, window="rectangular", pad_doppler=None, pad_delay=None, config=None):
        self.window = window
        self.pad_doppler = pad_doppler
        self.pad_delay = pad_delay
        self.config = config

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> DelayDopplerSpectrum:
        g, cfg = _unpack(X, self.config)
        kf = cfg.pad_doppler if self.pad_doppler is None else self.pad_doppler
        kt = cfg.pad_delay if self.pad_delay is None else self.pad_delay
        grid = GridMeta(1.0 / (kf * cfg.n_symbols * cfg.symbol_period), cfg.sample_period / kt,
                        (kf * cfg.n_symbols, kt * cfg.n_subcarriers))
        return windowed_2d_spectrum(g, self.window, self.window, kf, kt, grid=grid)


class MusicSpectrum(TransformerMixin, BaseEstimator):
    """Subspace pseudo-spectrum over one Doppler alias period.

    ``n_sources`` is the signal-subspace size or "gap" for the eigenvalue-gap rule.
    ``smoothing=None`` derives segment sizes from the snapshot dimensions.
    """

    def __init__(self, n_sources="gap", smoothing=None, regularization=0.1, pad_doppler=8,
                 pad_delay=None, config=None):
        self.n_sources = n_sources
        self.smoothing = smoothing
        self.regularization = regularization
        self.pad_doppler = pad_doppler
        self.pad_delay = pad_delay
        self.config = config

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> DelayDopplerSpectrum:
        g, cfg = _unpack(X, self.config)
        sm = self.smoothing or SmoothingConfig.for_config(cfg)
        kt = cfg.pad_delay if self.pad_delay is None else self.pad_delay
        b = music_surface(g, sm, cfg, self.n_sources, self.regularization, kt, self.pad_doppler)
        grid = GridMeta(1.0 / (self.pad_doppler * cfg.n_symbols * cfg.symbol_period),
                        cfg.sample_period / kt, b.shape)
        return DelayDopplerSpectrum(b.astype(complex), grid)

    def locate_row(self, X, spectrum=None) -> int:
        """Static-object row: found on the rectangular DFT spectrum, mapped onto this grid and,
        given this transformer's ``spectrum`` of X, refined to its highest-energy row within
        half a DFT row.

        Saturated subspace peaks give a moving reflector's row as much energy as the
        static row, so the coarse search happens where static paths add up.
        """
        g, cfg = _unpack(X, self.config)
        dft = windowed_2d_spectrum(g, "rectangular", "rectangular", cfg.pad_doppler, 1)
        ratio = self.pad_doppler / cfg.pad_doppler
        rows = self.pad_doppler * cfg.n_symbols // (self.smoothing or SmoothingConfig.for_config(cfg)).stride
        centre = int(np.floor(extract_fingerprint(dft).row * ratio + 0.5))
        if spectrum is None:
            return centre % rows
        half = int(ratio // 2)
        cand = np.arange(centre - half, centre + half + 1) % rows
        xi = np.asarray(getattr(spectrum, "xi", spectrum))
        energy = np.sum(np.abs(xi[cand]) ** 2, axis=1)
        return int(cand[np.argmax(energy)])


def make_spectrum(name: str, **kw):
    """'music' or any window kind ('rectangular', 'hamming', ...)."""
    if name == "music":
        return MusicSpectrum(**kw)
    return WindowedSpectrum(window=name, **kw)


class FingerprintSynchronizer(BaseEstimator):
    """Estimates the CFO/TO drift of a packet relative to a reference packet.

    ``spectrum`` is a transformer or a name accepted by :func:`make_spectrum`.
    ``fingerprint_row`` fixes the static row; None asks the transformer (``locate_row``) or
    else picks the row of largest energy.
    ``row_lock=True`` restricts the peak search to the fingerprint row of the correlation
    surface and an integer to that row. ``"track"`` lets a second synchronizer built on
    ``guide`` estimate the Doppler offset and searches only the rows it points at, which
    helps spectra with coarse Doppler resolution.
    ``normalize="row"`` also divides every correlation row by that row's norm (relative to the
    fingerprint's), so a row that is an exact shift of the fingerprint scores the maximum 1.
    Pair it with a row restriction: far sidelobe rows of a static scene are scaled copies of
    the fingerprint and would tie.
    """

    def __init__(self, spectrum="rectangular", fingerprint_row=None, row_lock=None, guide="rectangular",
                 normalize="fingerprint", config=None):
        self.spectrum = spectrum
        self.fingerprint_row = fingerprint_row
        self.row_lock = row_lock
        self.guide = guide
        self.normalize = normalize
        self.config = config

    def _transformer(self):
        sp = self.spectrum
        if isinstance(sp, str):
            return make_spectrum(sp, config=self.config)
        return sp

    def fit(self, X, y=None):
        self.transformer_ = self._transformer()
        spec = self.transformer_.transform(X)
        row = self.fingerprint_row
        if row is None and hasattr(self.transformer_, "locate_row"):
            row = self.transformer_.locate_row(X, spec)
        self.fingerprint_ = extract_fingerprint(spec, row)
        self.grid_ = spec.grid
        self.guide_ = None
        if self.row_lock == "track":
            self.guide_ = FingerprintSynchronizer(self.guide, config=self.config).fit(X)
        return self

    def _tracked_rows(self, X, n_rows):
        g = self.guide_.estimate(X)
        ratio = self.guide_.grid_.doppler_bin / self.grid_.doppler_bin
        centre = self.fingerprint_.row + int(np.floor(g.row_offset * ratio + 0.5))
        half = int(np.ceil(ratio / 2)) if ratio > 1 else 0
        return np.arange(centre - half, centre + half + 1) % n_rows

    def estimate(self, X):
        check_is_fitted(self, "fingerprint_")
        spec = self.transformer_.transform(X)
        surface = cross_correlate(spec, self.fingerprint_)
        if self.normalize == "row":
            norms = np.linalg.norm(spec.xi, axis=1) / np.sqrt(self.fingerprint_.power)
            surface = CorrelationSurface(surface.a / np.maximum(norms, 1e-300)[:, None])
        elif self.normalize != "fingerprint":
            raise ValueError(f"normalize must be 'fingerprint' or 'row', got {self.normalize!r}")
        ref = self.fingerprint_.row
        if self.row_lock == "track":
            a = np.abs(surface.a)
            keep = np.zeros(a.shape[0], bool)
            keep[self._tracked_rows(X, a.shape[0])] = True
            return estimate_drift(np.where(keep[:, None], a, 0.0), self.grid_, ref)
        lock = None
        if self.row_lock is True:
            lock = ref
        elif self.row_lock is not None and self.row_lock is not False:
            lock = int(self.row_lock)
        return estimate_drift(surface, self.grid_, ref, lock)

    def predict(self, X):
        """Array of (doppler_bins, delay_bins) per snapshot; a single snapshot gives shape (2,)."""
        single = hasattr(X, "gamma") or np.ndim(X) == 2
        items = [X] if single else list(X)
        out = np.array([[r.row_offset, r.shift] for r in map(self.estimate, items)], dtype=float)
        return out[0] if single else out
