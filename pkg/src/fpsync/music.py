"""Subspace (MUSIC) delay-Doppler pseudo-spectra built from frequency-smoothed snapshots.

Smoothing enumeration: start symbols g = 0, g_step, 2*g_step, ... while
g + (g_s-1)*G_s < G (outer loop) and start subcarriers n = 0..n_s-1 (inner loop).
Each super-vector concatenates Gamma[g + j*G_s, n:n+N_s] for j = 0..g_s-1, so a
steering vector is the Kronecker product of a Doppler part (one entry per stacked
symbol) and a delay part (one entry per subcarrier of the segment).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import linalg as sla

from .core_types import SystemConfig
from .spectrum import FingerprintSpectrum

DEN_FLOOR = 1e-15


@dataclass(frozen=True)
class SmoothingConfig:
    seg_len: int = 64          # N_s
    stride: int = 4            # G_s
    n_stack: int = 4           # g_s
    n_starts: int | None = 65  # n_s, None = every admissible start
    g_step: int = 1

    @classmethod
    def for_config(cls, config: SystemConfig) -> "SmoothingConfig":
        nc, g = config.n_subcarriers, config.n_symbols
        seg = max(1, nc // 2)
        stride = max(1, min(4, g // 16))
        stack = max(1, min(4, g // stride))
        return cls(seg, stride, stack, nc - seg + 1)

    @property
    def dim(self) -> int:
        return self.seg_len * self.n_stack

    def starts(self, n_sub: int) -> int:
        return n_sub - self.seg_len + 1 if self.n_starts is None else self.n_starts

    def validate(self, n_symbols: int, n_sub: int):
        if min(self.seg_len, self.stride, self.n_stack, self.g_step) < 1:
            raise ValueError("smoothing parameters must be positive")
        if self.seg_len > n_sub:
            raise ValueError(f"segment length {self.seg_len} exceeds {n_sub} subcarriers")
        if (self.n_stack - 1) * self.stride >= n_symbols:
            raise ValueError("stacked symbols exceed the snapshot length")
        ns = self.starts(n_sub)
        if not 1 <= ns <= n_sub - self.seg_len + 1:
            raise ValueError(f"n_starts {ns} outside [1, {n_sub - self.seg_len + 1}]")

    def symbol_starts(self, n_symbols: int) -> np.ndarray:
        return np.arange(0, n_symbols - (self.n_stack - 1) * self.stride, self.g_step)


@dataclass(frozen=True)
class SubspaceSplit:
    signal: np.ndarray
    noise: np.ndarray
    eigenvalues: np.ndarray

    @property
    def noise_projector(self) -> np.ndarray:
        return self.noise @ self.noise.conj().T


def _matrix(gamma) -> np.ndarray:
    g = np.asarray(getattr(gamma, "gamma", gamma))
    if g.ndim != 2:
        raise ValueError("snapshot must be 2-D")
    return g


def fd_smooth(gamma, cfg: SmoothingConfig) -> np.ndarray:
    """Super-vectors as rows of a (count, g_s*N_s) array, enumerated as in the module docstring."""
    g = _matrix(gamma)
    cfg.validate(*g.shape)
    gl = cfg.symbol_starts(g.shape[0])
    rows = g[gl[:, None] + cfg.stride * np.arange(cfg.n_stack)[None, :]]
    seg = sliding_window_view(rows, cfg.seg_len, axis=2)[:, :, : cfg.starts(g.shape[1])]
    return seg.transpose(0, 2, 1, 3).reshape(-1, cfg.dim)


def covariance(vectors) -> np.ndarray:
    """Sum of outer products y y^H over the rows of ``vectors``."""
    y = np.asarray(vectors)
    if y.ndim == 1:
        y = y[None, :]
    if y.shape[0] == 0:
        raise ValueError("no vectors")
    c = y.T @ y.conj()
    return 0.5 * (c + c.conj().T)


def smoothed_covariance(gamma, cfg: SmoothingConfig) -> np.ndarray:
    """Same result as ``covariance(fd_smooth(gamma, cfg))`` without forming the super-vectors.

    Cross products of whole stacked rows are summed along diagonals: the segment
    covariance at (n1, n2) is a window sum of the row product at (n + n1, n + n2).
    """
    g = _matrix(gamma)
    cfg.validate(*g.shape)
    nc = g.shape[1]
    gl = cfg.symbol_starts(g.shape[0])
    ns, nl, gs = cfg.starts(nc), cfg.seg_len, cfg.n_stack
    rows = g[gl[:, None] + cfg.stride * np.arange(gs)[None, :]]  # ng x gs x nc
    flat = rows.reshape(len(gl), gs * nc)
    p = (flat.T @ flat.conj()).reshape(gs, nc, gs, nc).transpose(0, 2, 1, 3)
    # diagonal running sums, padded with a zero row/column so index -1 reads 0
    s = np.zeros((gs, gs, nc + 1, nc + 1), dtype=complex)
    for a in range(nc):
        s[:, :, a + 1, 1:] = p[:, :, a, :] + s[:, :, a, :-1]
    idx = np.arange(nl)
    hi = s[:, :, idx[:, None] + ns, idx[None, :] + ns]
    lo = s[:, :, idx[:, None], idx[None, :]]
    c = (hi - lo).transpose(0, 2, 1, 3).reshape(gs * nl, gs * nl)
    return 0.5 * (c + c.conj().T)


def eigengap_order(eigenvalues, max_order: int | None = None) -> int:
    """Source count at the largest ratio between consecutive descending eigenvalues."""
    w = np.sort(np.asarray(eigenvalues, dtype=float))[::-1]
    w = np.maximum(w, w[0] * 1e-15 if w[0] > 0 else 1e-300)
    top = len(w) - 1 if max_order is None else min(max_order, len(w) - 1)
    ratios = w[:top] / w[1: top + 1]
    return int(np.argmax(ratios)) + 1


def subspace_split(c, n_sources: int | str) -> SubspaceSplit:
    """Hermitian eigendecomposition; the top ``n_sources`` eigenvectors span the signal subspace.

    ``n_sources="gap"`` picks the count with :func:`eigengap_order`.
    """
    c = np.asarray(c)
    d = c.shape[0]
    w, u = sla.eigh(c)
    w, u = w[::-1], u[:, ::-1]
    if n_sources == "gap":
        n_sources = eigengap_order(w, d // 2)
    if not 0 < int(n_sources) < d:
        raise ValueError(f"source count must lie in [1, {d - 1}], got {n_sources}")
    n_sources = int(n_sources)
    return SubspaceSplit(u[:, :n_sources], u[:, n_sources:], w)


def _signal_basis(c, n_sources) -> np.ndarray:
    d = c.shape[0]
    if n_sources == "gap":
        n_sources = eigengap_order(sla.eigvalsh(c), d // 2)
    n_sources = int(n_sources)
    if not 0 < n_sources < d:
        raise ValueError(f"source count must lie in [1, {d - 1}], got {n_sources}")
    _, u = sla.eigh(c, subset_by_index=[d - n_sources, d - 1])
    return u


def steering(delta, tau, cfg: SmoothingConfig, sys: SystemConfig, literal_pairing: bool = False) -> np.ndarray:
    """Unit-modulus steering vector for Doppler ``delta`` [Hz] and delay ``tau`` [s].

    Delay phase steps by subcarrier spacing within a segment, Doppler phase steps by
    ``stride`` symbol periods across stacked segments. ``literal_pairing`` swaps the
    two roles.
    """
    j = np.arange(cfg.n_stack)
    n = np.arange(cfg.seg_len)
    if literal_pairing:
        outer = np.exp(-2j * np.pi * sys.subcarrier_spacing * tau * j)
        inner = np.exp(-2j * np.pi * delta * sys.symbol_period * n)
    else:
        outer = np.exp(-2j * np.pi * delta * cfg.stride * sys.symbol_period * j)
        inner = np.exp(-2j * np.pi * sys.subcarrier_spacing * tau * n)
    return np.kron(outer, inner)


def _projections(us, cfg, sys, delta_grid, tau_grid, literal_pairing):
    """|U_s^H a|^2 for every (delta, tau) grid pair, shape (n_delta, n_tau)."""
    delta = np.atleast_1d(np.asarray(delta_grid, dtype=float))
    tau = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    u = us.reshape(cfg.n_stack, cfg.seg_len, -1)
    j = np.arange(cfg.n_stack)
    n = np.arange(cfg.seg_len)
    if literal_pairing:
        inner = np.exp(-2j * np.pi * delta[:, None] * sys.symbol_period * n[None, :])
        outer = np.exp(-2j * np.pi * sys.subcarrier_spacing * tau[:, None] * j[None, :])
        s = np.einsum("dn,jnl->djl", inner.conj(), u)
        proj = np.einsum("tj,djl->dtl", outer.conj(), s)
    else:
        inner = np.exp(-2j * np.pi * sys.subcarrier_spacing * tau[:, None] * n[None, :])
        outer = np.exp(-2j * np.pi * delta[:, None] * cfg.stride * sys.symbol_period * j[None, :])
        s = np.einsum("tn,jnl->tjl", inner.conj(), u)
        proj = np.einsum("dj,tjl->dtl", outer.conj(), s)
    return np.sum(np.abs(proj) ** 2, axis=2)


def pseudo_spectrum(split: SubspaceSplit, cfg: SmoothingConfig, sys: SystemConfig, delta_grid,
                    tau_grid, literal_pairing: bool = False, regularization: float = 0.0,
                    normalize: bool = False) -> np.ndarray:
    """1 / (a^H P_n a) on the grid, rows indexed by Doppler and columns by delay.

    Denominators below 1e-15 are clamped. With ``normalize`` the denominator is divided
    by |a|^2; ``regularization`` is added to it before inversion.
    """
    delta = np.atleast_1d(np.asarray(delta_grid, dtype=float))
    tau = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    if delta.size == 0 or tau.size == 0:
        raise ValueError("empty grid")
    norm = cfg.dim
    den = norm - _projections(split.signal, cfg, sys, delta, tau, literal_pairing)
    if normalize:
        den = den / norm
    den = np.maximum(den, DEN_FLOOR)
    return 1.0 / (den + regularization)


def music_surface(gamma, cfg: SmoothingConfig, sys: SystemConfig, n_sources, regularization: float = 0.1,
                  pad_delay: int | None = None, pad_doppler: int = 8, cov=None) -> np.ndarray:
    """Normalized-denominator pseudo-spectrum on a regular grid.

    Delay columns are ``pad_delay * N_c`` bins of ``T_sam / pad_delay``. The Doppler
    response of the stacked steering repeats every ``1/(stride*T_sym)``, so only that
    period is returned: ``pad_doppler * G / stride`` rows of ``1/(pad_doppler*G*T_sym)``.
    """
    g = _matrix(gamma)
    n_sym, nc = g.shape
    pad_delay = sys.pad_delay if pad_delay is None else pad_delay
    if (pad_doppler * n_sym) % cfg.stride:
        raise ValueError("pad_doppler * G must be a multiple of the stride")
    c = smoothed_covariance(g, cfg) if cov is None else cov
    us = _signal_basis(c, n_sources).reshape(cfg.n_stack, cfg.seg_len, -1)
    t = np.fft.fft(us.conj(), n=pad_delay * nc, axis=1)  # stack x delay x L
    rows = pad_doppler * n_sym // cfg.stride
    i = np.arange(rows)[:, None]
    j = np.arange(cfg.n_stack)[None, :]
    th = np.exp(-2j * np.pi * i * j * cfg.stride / (pad_doppler * n_sym))
    p = np.einsum("ij,jql->iql", th, t, optimize=True)
    den = 1.0 - np.sum(np.abs(p) ** 2, axis=2) / cfg.dim
    return 1.0 / (np.maximum(den, 0.0) + regularization)


def music_fingerprint(gamma, cfg: SmoothingConfig, sys: SystemConfig, n_sources, delta_fixed: float,
                      tau_grid, regularization: float = 0.0, literal_pairing: bool = False) -> FingerprintSpectrum:
    """Pseudo-spectrum sampled along ``tau_grid`` at Doppler ``delta_fixed``, scaled to unit peak."""
    c = smoothed_covariance(gamma, cfg)
    us = _signal_basis(c, n_sources)
    split = SubspaceSplit(us, np.zeros((us.shape[0], 0), dtype=complex), np.array([]))
    b = pseudo_spectrum(split, cfg, sys, [delta_fixed], tau_grid, literal_pairing,
                        regularization, normalize=regularization > 0)[0]
    b = b / np.max(b)
    return FingerprintSpectrum(b.astype(complex), 0, float(np.sum(b * b)))


def delay_grid(sys: SystemConfig, pad_delay: int | None = None) -> np.ndarray:
    pad = sys.pad_delay if pad_delay is None else pad_delay
    return np.arange(pad * sys.n_subcarriers) * sys.sample_period / pad


def write_surface_csv(path, surface, doppler_bin: float, delay_bin: float):
    b = np.asarray(surface)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("row,col,doppler_hz,delay_s,value\n")
        for i in range(b.shape[0]):
            for k in range(b.shape[1]):
                fh.write(f"{i},{k},{i * doppler_bin:.12g},{k * delay_bin:.12g},{b[i, k]:.12g}\n")
