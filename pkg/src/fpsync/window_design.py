"""Ideal correlation row, pairwise-path placement, circulant inversion and window recovery.

Conventions. For a window psi zero-padded to length M = K*N with unitary spectrum
Psi = F psi, its autocorrelation is rho[q] = sum_p Psi[(p+q) mod M] conj(Psi[p]).
By the convolution theorem rho = sqrt(M) * F(|psi|^2): the sample-domain image
r = F^H rho / sqrt(M) equals |psi|^2 and vanishes beyond the window support. Window
recovery works on that image.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel_sim import Scenario, path_amplitudes
from .core_types import SystemConfig, round_half_up

RANK_EPS = 1e-10


@dataclass(frozen=True)
class IdealFingerprint:
    s: np.ndarray
    peak_index: int


@dataclass(frozen=True)
class PathCorrelationStructure:
    """Pairwise gain products, their bin offsets (sorted ascending) and the placed sequence."""

    products: np.ndarray
    shifts: np.ndarray
    placed: np.ndarray


@dataclass(frozen=True)
class WindowRecovery:
    feasible: bool
    window: np.ndarray | None
    residual: float
    iterations: int
    reason: str = ""


def ideal_s(length: int, true_shift: float) -> IdealFingerprint:
    """Unit impulse at the nearest bin to ``true_shift`` (halves round up), wrapped."""
    if length < 1:
        raise ValueError("length must be >= 1")
    k = int(round_half_up(true_shift)) % length
    s = np.zeros(length)
    s[k] = 1.0
    return IdealFingerprint(s, k)


def _unitary_spectrum(psi, pad: int) -> np.ndarray:
    s = np.asarray(getattr(psi, "samples", psi), dtype=complex)
    m = pad * s.size
    return np.fft.fft(s, n=m) / np.sqrt(m)


def rho_autocorrelation(psi, pad: int) -> np.ndarray:
    """Circular autocorrelation of the zero-padded window spectrum (conjugated partner)."""
    spec = _unitary_spectrum(psi, pad)
    return _circular_xcorr(spec, spec)


def _circular_xcorr(x, y):
    """c[q] = sum_p x[(p+q) mod M] conj(y[p])."""
    return np.fft.ifft(np.fft.fft(x) * np.conj(np.fft.fft(y)))


def build_phi_breve(scenario: Scenario, config: SystemConfig, antenna: int = 0,
                    conjugate: bool = True, pad: int | None = None) -> PathCorrelationStructure:
    """Place every ordered pair product a_l conj(a_l') at bin round((tau_l - tau_l') * K / T_sam)."""
    pad = config.pad_delay if pad is None else pad
    m = pad * config.n_subcarriers
    paths = scenario.paths
    if len(paths) < 1:
        raise ValueError("need at least one path")
    fc = config.carrier_freq
    amps = path_amplitudes(scenario, config, antenna)
    delays = np.array([p.delay for p in paths])
    alpha = amps * np.exp(-2j * np.pi * fc * (scenario.offsets.timing_offset + delays))
    partner = np.conj(alpha) if conjugate else alpha
    prod = np.outer(alpha, partner).ravel()
    diff = (delays[:, None] - delays[None, :]).ravel()
    bins = round_half_up(diff * pad / config.sample_period) % m
    order = np.argsort(bins, kind="stable")
    placed = np.zeros(m, dtype=complex)
    np.add.at(placed, bins, prod)
    return PathCorrelationStructure(prod[order], bins[order], placed)


def circulant_apply(phi_breve, rho) -> np.ndarray:
    """Circular convolution of the placed sequence with rho."""
    a = np.asarray(phi_breve)
    b = np.asarray(rho)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return np.fft.ifft(np.fft.fft(a) * np.fft.fft(b))


def achievable_mask(phi_breve, eps: float = RANK_EPS) -> np.ndarray:
    f = np.fft.fft(np.asarray(phi_breve))
    scale = np.max(np.abs(f)) if f.size else 0.0
    return np.abs(f) > eps * scale if scale > 0 else np.zeros(f.shape, bool)


def solve_rho(s, phi_breve, eps: float = RANK_EPS) -> np.ndarray:
    """Minimum-norm rho with phi_breve (*) rho as close to s as the spectrum allows."""
    s = np.asarray(getattr(s, "s", s))
    f = np.fft.fft(np.asarray(phi_breve))
    if s.shape != f.shape:
        raise ValueError("length mismatch")
    keep = achievable_mask(phi_breve, eps)
    inv = np.zeros_like(f)
    inv[keep] = 1.0 / f[keep]
    return np.fft.ifft(np.fft.fft(s) * inv)


def sample_domain_image(rho) -> np.ndarray:
    """r = F^H rho / sqrt(M); equals |psi|^2 when rho is a window autocorrelation."""
    # F^H = sqrt(M) * ifft, so the sqrt(M) factors cancel
    return np.fft.ifft(np.asarray(rho))


def partner_operator(psi_padded) -> np.ndarray:
    """Sample-domain partner of each window sample in the product condition (its conjugate)."""
    return np.conj(psi_padded)


def _pad(psi, n: int, pad: int) -> np.ndarray:
    s = np.asarray(getattr(psi, "samples", psi), dtype=complex)
    if s.size == pad * n:
        return s
    if s.size != n:
        raise ValueError(f"window length {s.size} is neither {n} nor {pad * n}")
    out = np.zeros(pad * n, dtype=complex)
    out[:n] = s
    return out


def verify_window_condition(psi, rho, n: int, pad: int) -> float:
    """max_i |psi[i] * partner(psi)[i] - r[i]| over the whole padded length."""
    p = _pad(psi, n, pad)
    rho = np.asarray(rho)
    if rho.size != p.size:
        raise ValueError("rho length does not match the padded window")
    r = sample_domain_image(rho)
    return float(np.max(np.abs(p * partner_operator(p) - r))) if p.size else 0.0


def recover_window(rho, n: int, pad: int, tol: float = 1e-6, max_iters: int = 10_000,
                   damping: float = 0.5, tail_tol: float = 1e-9) -> WindowRecovery:
    """Solve psi[i] * partner(psi)[i] = r[i] by a damped fixed point started from all ones.

    The update psi <- (1 - d) psi + d * r / partner(psi) is guarded against tiny
    denominators and stops once both the residual and the step fall below ``tol``. Infeasible when r has energy beyond the first ``n`` samples or the
    iteration stalls.
    """
    rho = np.asarray(rho, dtype=complex)
    m = pad * n
    if rho.size != m:
        raise ValueError(f"rho length {rho.size} != {m}")
    r = sample_domain_image(rho)
    scale = max(float(np.max(np.abs(r))), 1e-300)
    tail = float(np.max(np.abs(r[n:]))) if m > n else 0.0
    if tail > tail_tol * scale and tail > 1e-15:
        return WindowRecovery(False, None, float("inf"), 0, f"nonzero tail beyond {n} samples ({tail:.3g})")
    if not np.any(r):
        return WindowRecovery(True, np.zeros(n, dtype=complex), 0.0, 0)
    psi = np.zeros(m, dtype=complex)
    psi[:n] = 1.0
    target = r.copy()
    target[n:] = 0.0
    guard = 1e-12
    residual = float("inf")
    for it in range(1, max_iters + 1):
        den = partner_operator(psi)
        small = np.abs(den) < guard
        den = np.where(small, guard, den)
        nxt = (1 - damping) * psi + damping * target / den
        step = float(np.max(np.abs(nxt - psi)))
        psi = nxt
        residual = float(np.max(np.abs(psi * partner_operator(psi) - r)))
        # zero-valued samples shrink only linearly, so the step must settle too
        if residual < tol and step < tol:
            return WindowRecovery(True, psi[:n].copy(), residual, it)
    return WindowRecovery(False, None, residual, max_iters, "fixed-point iteration stalled")


def circulant_matrix(phi_breve) -> np.ndarray:
    """Explicit matrix sum_n phi[n] J^n with J the single-step right cyclic shift (x J)[k] = x[k-1]."""
    phi = np.asarray(phi_breve)
    m = phi.size
    j = np.roll(np.eye(m), 1, axis=1)
    out = np.zeros((m, m), dtype=complex)
    jp = np.eye(m)
    for k in range(m):
        out += phi[k] * jp
        jp = jp @ j
    return out


def location_indicators(structure: PathCorrelationStructure, m: int) -> np.ndarray:
    """Stack of 0/1 matrices, entry [q] marks where each pair's rho copy sits after q steps."""
    n_pairs = structure.shifts.size
    j = np.roll(np.eye(m), 1, axis=1)
    first = np.zeros((n_pairs, m))
    first[np.arange(n_pairs), structure.shifts] = 1.0
    out = np.empty((m, n_pairs, m))
    cur = first
    for q in range(m):
        out[q] = cur
        cur = cur @ j
    return out
