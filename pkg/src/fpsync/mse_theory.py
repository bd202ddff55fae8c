"""Argmax probabilities of Gaussian-perturbed correlation rows, the resulting MSE,
correlation-noise variance formulas and the Cramer-Rao bound of the snapshot model."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .channel_sim import Scenario, path_amplitudes
from .core_types import SPEED_OF_LIGHT, SystemConfig, wrap_signed

Q_CONVENTIONS = ("cdf", "tail", "variance")
NOISE_FORMS = ("approx", "exact", "approx_sq", "exact_sq")
DEFAULT_NOISE_FORM = "exact_sq"


class QuadratureError(RuntimeError):
    pass


class SingularFisherError(np.linalg.LinAlgError):
    pass


def gaussian_cdf(x):
    """Standard normal CDF."""
    return special.ndtr(x)


@dataclass(frozen=True)
class NoiseModel:
    noise_var: float
    corr_noise_var: float
    fingerprint_power: float
    length: int
    form: str = DEFAULT_NOISE_FORM


def correlation_noise_variance(noise_var: float, fingerprint_power: float, length: int,
                               form: str = "approx", clean_power: float | None = None,
                               shifted_power: float | None = None) -> float:
    """Variance of the normalized correlation noise.

    ``fingerprint_power`` is the (noisy) power the correlation is normalized by.
    ``clean_power``/``shifted_power`` are the noiseless powers of the two rows and
    default to ``fingerprint_power``.

    approx     2 s/P + L s/(2 P^2)
    exact      (Pc s + P0 s + L s/2) / P^2
    approx_sq  2 s/P + L s^2/P^2
    exact_sq   (Pc s + P0 s + L s^2) / P^2
    The *_sq forms carry the squared noise variance in the noise-by-noise term.
    """
    if not fingerprint_power > 0:
        raise ValueError("fingerprint power must be positive")
    if noise_var < 0:
        raise ValueError("noise variance must be >= 0")
    p = float(fingerprint_power)
    p0 = p if clean_power is None else float(clean_power)
    pc = p0 if shifted_power is None else float(shifted_power)
    s = float(noise_var)
    if form == "approx":
        return 2 * s / p + length * s / (2 * p * p)
    if form == "exact":
        return (pc * s + p0 * s + length * s / 2) / (p * p)
    if form == "approx_sq":
        return 2 * s / p + length * s * s / (p * p)
    if form == "exact_sq":
        return (pc * s + p0 * s + length * s * s) / (p * p)
    raise ValueError(f"unknown noise form {form!r}; choose from {NOISE_FORMS}")


def noise_variance_forms(noise_var: float, fingerprint_power: float, length: int,
                         clean_power: float | None = None) -> dict:
    """Every form of :func:`correlation_noise_variance`, for side-by-side comparison."""
    return {f: correlation_noise_variance(noise_var, fingerprint_power, length, f, clean_power)
            for f in NOISE_FORMS}


def effective_bin_noise(noise_var: float, pad_doppler: int, pad_delay: int,
                        account_padding: bool = True) -> float:
    """Per-bin noise variance of a fingerprint row to feed the correlation-noise formulas.

    A bin of the padded spectrum has variance noise_var / (K_f K_tau), but delay padding
    correlates neighbouring bins, and the correlation sums then behave as if every bin
    carried K_tau times that. ``account_padding=False`` returns the raw per-bin variance.
    """
    if pad_doppler < 1 or pad_delay < 1:
        raise ValueError("padding factors must be >= 1")
    raw = noise_var / (pad_doppler * pad_delay)
    return raw * pad_delay if account_padding else raw


def noise_model(noise_var: float, fingerprint_power: float, length: int,
                form: str = DEFAULT_NOISE_FORM) -> NoiseModel:
    v = correlation_noise_variance(noise_var, fingerprint_power, length, form)
    return NoiseModel(noise_var, v, fingerprint_power, length, form)


def _log_factor(arg, convention):
    if convention == "tail":
        return special.log_ndtr(-arg)
    return special.log_ndtr(arg)


def _argmax_prob_groups(s: np.ndarray, sigma: float, convention: str):
    """Probability that an entry of each distinct value wins, keyed by value index."""
    vals, counts = np.unique(s, return_counts=True)
    scale = sigma * sigma if convention == "variance" else sigma
    probs = np.empty(vals.size)
    for k, u in enumerate(vals):
        mult = counts.astype(float)
        mult[k] -= 1
        use = mult > 0
        v, m = vals[use], mult[use]
        # b = u + sigma z; each competitor contributes log Phi((b - v)/scale)
        offs = (u - v) / scale
        zscale = sigma / scale

        def integrand(z):
            logp = -0.5 * z * z - 0.5 * math.log(2 * math.pi)
            if v.size:
                logp += float(np.dot(m, _log_factor(offs + zscale * z, convention)))
            return math.exp(logp)

        pts = [float(x) for x in -offs / zscale if -10 < x < 10] if v.size else []
        if len(pts) > 40:
            pts = list(np.unique(np.round(pts, 6)))[:40]
        val, err = integrate.quad(integrand, -10.0, 10.0, points=pts or None,
                                  epsabs=1e-12, epsrel=1e-10, limit=400)
        probs[k] = val
    return vals, counts, probs


def p_argmax(s, sigma_bar: float, q: int, convention: str = "cdf") -> float:
    """Probability that entry ``q`` of s + sigma_bar * N(0, I) is the largest.

    ``convention`` selects how the per-competitor factor is read: "cdf" uses
    Phi((b - s_i)/sigma), "tail" uses 1 - Phi(.), "variance" divides by sigma^2.
    Only "cdf" describes the argmax of independent Gaussians.
    """
    if not sigma_bar > 0:
        raise ValueError("sigma_bar must be positive")
    if convention not in Q_CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    s = np.asarray(s, dtype=float)
    vals, _, probs = _argmax_prob_groups(s, float(sigma_bar), convention)
    return float(np.clip(probs[np.searchsorted(vals, s[q])], 0.0, 1.0))


def argmax_distribution(s, sigma_bar: float, convention: str = "cdf") -> np.ndarray:
    """p_argmax for every index, sharing one quadrature per distinct value of s."""
    if not sigma_bar > 0:
        raise ValueError("sigma_bar must be positive")
    if convention not in Q_CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    s = np.asarray(s, dtype=float)
    vals, _, probs = _argmax_prob_groups(s, float(sigma_bar), convention)
    return np.clip(probs[np.searchsorted(vals, s)], 0.0, 1.0)


def theoretical_mse(s, sigma_bar: float, true_shift: float, convention: str = "cdf",
                    check: bool = True) -> float:
    """sum_q P(q wins) * wrapped(q - true_shift)^2, in squared bins."""
    s = np.asarray(s, dtype=float)
    n = s.size
    p = argmax_distribution(s, sigma_bar, convention)
    total = float(np.sum(p))
    if check and abs(total - 1.0) > 1e-6:
        raise QuadratureError(f"argmax probabilities sum to {total:.9f}")
    d = wrap_signed(np.arange(n) - float(true_shift), n)
    return float(np.sum(p * d * d))


def uniform_mse(n: int, true_shift: float) -> float:
    d = wrap_signed(np.arange(n) - float(true_shift), n)
    return float(np.mean(d * d))


def sample_argmax(s, sigma_bar: float, draws: int, rng: np.random.Generator,
                  chunk: int = 100_000) -> np.ndarray:
    """Counts of the winning index over ``draws`` perturbations s + sigma_bar * z."""
    s = np.asarray(s, dtype=float)
    counts = np.zeros(s.size, dtype=np.int64)
    done = 0
    while done < draws:
        k = min(chunk, draws - done)
        b = s[None, :] + sigma_bar * rng.standard_normal((k, s.size))
        counts += np.bincount(np.argmax(b, axis=1), minlength=s.size)
        done += k
    return counts


def probability_gap(s_a, s_b, sigma_bar: float, convention: str = "cdf") -> float:
    """max_q |P_q(s_a) - P_q(s_b)|."""
    pa = argmax_distribution(s_a, sigma_bar, convention)
    pb = argmax_distribution(s_b, sigma_bar, convention)
    return float(np.max(np.abs(pa - pb)))


def gap_threshold(s_a, s_b, eps: float = 1e-3, lo: float = 1e-4, hi: float = 10.0,
                  iters: int = 60, convention: str = "cdf") -> float:
    """Largest sigma_bar in [lo, hi] (by bisection on log scale) with probability gap below eps.

    Returns ``nan`` when even ``lo`` does not reach the tolerance.
    """
    if probability_gap(s_a, s_b, lo, convention) >= eps:
        return float("nan")
    if probability_gap(s_a, s_b, hi, convention) < eps:
        return hi
    a, b = math.log(lo), math.log(hi)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if probability_gap(s_a, s_b, math.exp(mid), convention) < eps:
            a = mid
        else:
            b = mid
    return math.exp(a)


def model_jacobian(scenario: Scenario, config: SystemConfig, antenna: int = 0) -> np.ndarray:
    """Derivatives of the noiseless snapshot (flattened row-major) w.r.t. [v_1..v_L, tau_1..tau_L]."""
    off = scenario.offsets
    fc, df, tsym = config.carrier_freq, config.subcarrier_spacing, config.symbol_period
    g = np.arange(config.n_symbols)[:, None]
    n = np.arange(config.n_subcarriers)[None, :]
    amps = path_amplitudes(scenario, config, antenna)
    n_paths = len(scenario.paths)
    jac = np.empty((config.n_symbols * config.n_subcarriers, 2 * n_paths), dtype=complex)
    for l, (amp, p) in enumerate(zip(amps, scenario.paths)):
        total_delay = off.timing_offset + p.delay
        doppler = fc * 2 * p.velocity / SPEED_OF_LIGHT + off.cfo
        term = (amp * np.exp(-2j * np.pi * fc * total_delay)
                * np.exp(-2j * np.pi * doppler * g * tsym)
                * np.exp(-2j * np.pi * n * df * total_delay))
        jac[:, l] = (term * (-2j * np.pi * fc * 2 / SPEED_OF_LIGHT * g * tsym)).ravel()
        jac[:, n_paths + l] = (term * (-2j * np.pi * (fc + n * df))).ravel()
    return jac


def crlb(scenario: Scenario, config: SystemConfig, noise_var: float, antenna: int = 0,
         real_parameters: bool = False, cond_limit: float = 1e14) -> np.ndarray:
    """Bound matrix for [v_1..v_L, tau_1..tau_L].

    Default is noise_var * (J^H J)^-1. ``real_parameters=True`` gives the bound for real
    parameters under circular noise, (noise_var / 2) * Re(J^H J)^-1.
    """
    jac = model_jacobian(scenario, config, antenna)
    # column scaling keeps the Gram matrix well conditioned despite velocity/delay units
    scale = np.linalg.norm(jac, axis=0)
    if np.any(scale == 0):
        raise SingularFisherError("a parameter has zero sensitivity")
    js = jac / scale
    gram = js.conj().T @ js
    if real_parameters:
        gram = gram.real
    if np.linalg.cond(gram) > cond_limit:
        raise SingularFisherError("Fisher matrix is singular (coincident paths?)")
    inv = np.linalg.inv(gram) / np.outer(scale, scale)
    return (noise_var / 2 if real_parameters else noise_var) * inv
