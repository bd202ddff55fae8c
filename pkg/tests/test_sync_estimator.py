import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpsync.channel_sim import reference_scenario, synthesize_gamma
from fpsync.core_types import SPEED_OF_LIGHT, ClockOffsets, GridMeta, SystemConfig
from fpsync.spectrum import extract_fingerprint, spectrum_for_config
from fpsync.sync_estimator import cross_correlate, empirical_mse, estimate_drift


def _brute(xi, beta):
    rows, p = xi.shape
    out = np.zeros((rows, p), dtype=complex)
    for i in range(rows):
        for q in range(p):
            out[i, q] = sum(xi[i, (q + k) % p] * np.conj(beta[k]) for k in range(p))
    return out / np.sum(np.abs(beta) ** 2)


@given(st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_fft_correlation_matches_loop(seed):
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((4, 8)) + 1j * rng.standard_normal((4, 8))
    beta = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    assert np.max(np.abs(cross_correlate(xi, beta).a - _brute(xi, beta))) < 1e-10


def test_correlation_errors():
    with pytest.raises(ValueError):
        cross_correlate(np.ones((2, 4)), np.zeros(4))
    with pytest.raises(ValueError):
        cross_correlate(np.ones((2, 4)), np.ones(5))


def test_self_match_peak():
    cfg = SystemConfig(n_subcarriers=32, n_symbols=16)
    spec = spectrum_for_config(synthesize_gamma(reference_scenario(), cfg), cfg)
    fp = extract_fingerprint(spec)
    surf = cross_correlate(spec, fp)
    res = estimate_drift(surf, spec.grid, fp.row)
    assert (res.row, res.shift) == (fp.row, 0)
    assert res.peak_value == pytest.approx(1.0)


def test_integer_shift_of_spectrum():
    rng = np.random.default_rng(4)
    xi = rng.standard_normal((8, 32)) + 1j * rng.standard_normal((8, 32))
    xi[0] *= 10
    beta = xi[0].copy()
    moved = np.roll(np.roll(xi, 2, axis=0), 5, axis=1)
    res = estimate_drift(cross_correlate(moved, beta))
    assert (res.row, res.shift) == (2, 5)


def test_argmax_and_ties():
    a = np.zeros((5, 10))
    a[3, 7] = 1
    r = estimate_drift(a)
    assert (r.row, r.shift) == (3, -3)  # column 7 of 10 wraps to -3
    b = np.zeros((1, 12))
    b[0, 2] = b[0, 9] = 1
    assert estimate_drift(b).shift == 2
    c = np.zeros((3, 4))
    c[1, 3] = c[2, 0] = 1
    r = estimate_drift(c)
    assert (r.row, r.shift) == (1, -1)


def test_row_lock_and_grid_scaling():
    a = np.zeros((4, 8))
    a[2, 1] = 5
    a[0, 3] = 1
    r = estimate_drift(a, GridMeta(10.0, 0.5), reference_row=0, row_lock=0)
    assert (r.row, r.shift) == (0, 3)
    assert r.timing_drift == pytest.approx(1.5)
    r = estimate_drift(a, GridMeta(10.0, 0.5))
    assert r.cfo_drift == pytest.approx(20.0)


def test_reference_scene_physical_drifts():
    cfg = SystemConfig()
    grid = cfg.grid()
    base = reference_scenario(cfo=500.0, timing_offset=1e-7)
    df = 2 * 3.0 * cfg.carrier_freq / SPEED_OF_LIGHT
    dt = 10.0 / SPEED_OF_LIGHT
    drifted = base.with_offsets(ClockOffsets(500.0 + df, 1e-7 + dt))
    s0 = spectrum_for_config(synthesize_gamma(base, cfg), cfg)
    s1 = spectrum_for_config(synthesize_gamma(drifted, cfg), cfg)
    fp = extract_fingerprint(s0)
    r = estimate_drift(cross_correlate(s1, fp), grid, fp.row)
    assert abs(r.cfo_drift - df) <= grid.doppler_bin
    assert abs(r.timing_drift - dt) <= grid.delay_bin


def test_empirical_mse_cases():
    assert empirical_mse([(3, 3), (5, 5)], 1.17) == 0.0
    assert empirical_mse([(4, 3)], 1.17) == pytest.approx(1.3689)
    with pytest.raises(ValueError):
        empirical_mse([], 1.0)
    with pytest.raises(ValueError):
        empirical_mse([(1, 1)], 0.0)
    rng = np.random.default_rng(2)
    e = rng.choice([-1, 1], size=10_000)
    assert empirical_mse(np.c_[e, np.zeros_like(e)], 2.0) == pytest.approx(4.0, rel=0.05)


@given(st.integers(-20, 20), st.integers(-3, 3), st.integers(-3, 3))
def test_mse_wrap_invariance(d, k1, k2):
    n = 16
    a = empirical_mse([(d + k1 * n, 0)], 1.0, n)
    b = empirical_mse([(d + k2 * n, 0)], 1.0, n)
    assert a == b


@given(st.integers(0, 2**31), st.complex_numbers(min_magnitude=0.1, max_magnitude=10))
@settings(max_examples=20, deadline=None)
def test_scale_invariance(seed, c):
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((4, 16)) + 1j * rng.standard_normal((4, 16))
    beta = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    r1 = estimate_drift(cross_correlate(xi, beta))
    r2 = estimate_drift(cross_correlate(c * xi, c * beta))
    assert (r1.row, r1.shift) == (r2.row, r2.shift)


@given(st.integers(0, 2**31), st.integers(0, 15))
@settings(max_examples=20, deadline=None)
def test_shift_equivariance(seed, k):
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((3, 16)) + 1j * rng.standard_normal((3, 16))
    beta = xi[1] + 0.1 * rng.standard_normal(16)
    r0 = estimate_drift(cross_correlate(xi, beta))
    r1 = estimate_drift(cross_correlate(np.roll(xi, k, axis=1), beta))
    assert (r1.shift - r0.shift) % 16 == k % 16
