import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpsync.core_types import (SPEED_OF_LIGHT, ClockOffsets, GridMeta, PathParams, SystemConfig,
                               cyclic_shift, delay_from_distance, dft_matrix, round_half_up,
                               steering_vector, wrap_signed)


def test_dft_small_cases():
    assert np.allclose(dft_matrix(1), [[1.0]])
    assert np.allclose(dft_matrix(2), np.array([[1, 1], [1, -1]]) / np.sqrt(2))


def test_dft_rejects_zero():
    with pytest.raises(ValueError):
        dft_matrix(0)


def test_dft_entry_convention():
    f = dft_matrix(8)
    m, n = 3, 5
    assert f[m, n] == pytest.approx(np.exp(-2j * np.pi * m * n / 8) / np.sqrt(8))


@pytest.mark.parametrize("n", [1, 2, 3, 7, 8, 64, 127, 512])
def test_dft_unitary(n):
    f = dft_matrix(n)
    assert np.max(np.abs(f @ f.conj().T - np.eye(n))) < 1e-10


@given(st.integers(1, 64), st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_parseval(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert np.linalg.norm(dft_matrix(n) @ x) == pytest.approx(np.linalg.norm(x), abs=1e-10)


def test_steering_vector_cases():
    assert np.allclose(steering_vector(math.pi / 2, 5), np.ones(5))
    assert np.allclose(steering_vector(0.3, 1), [1.0])
    assert np.allclose(steering_vector(0.0, 2, 0.5), [1.0, -1.0])


def test_cyclic_shift_cases():
    x = np.array([1, 2, 3])
    assert list(cyclic_shift(x, 0)) == [1, 2, 3]
    assert list(cyclic_shift(x, 1)) == [2, 3, 1]
    assert list(cyclic_shift(x, 3)) == [1, 2, 3]


@given(st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False), min_size=1, max_size=20),
       st.integers(-50, 50), st.integers(-50, 50))
def test_cyclic_shift_composes_additively(xs, a, b):
    x = np.array(xs)
    n = x.size
    assert np.array_equal(cyclic_shift(cyclic_shift(x, a), b), cyclic_shift(x, a + b))
    assert np.array_equal(cyclic_shift(cyclic_shift(x, a), n - a), x)


def test_system_config_derived_periods():
    cfg = SystemConfig()
    assert cfg.sample_period == pytest.approx(1 / (128 * 100e3))
    assert cfg.symbol_period == pytest.approx(144 * cfg.sample_period)
    assert cfg.delay_bins == 1024 and cfg.doppler_bins == 128
    cfg2 = cfg.with_(n_subcarriers=256)
    assert cfg2.sample_period == pytest.approx(1 / (256 * 100e3))


@pytest.mark.parametrize("kw", [dict(n_subcarriers=0), dict(pad_delay=0), dict(subcarrier_spacing=-1.0),
                                dict(carrier_freq=0.0), dict(sample_period=1.0), dict(n_symbols=2.5)])
def test_system_config_rejects(kw):
    with pytest.raises(ValueError):
        SystemConfig(**kw)


def test_path_params_validation():
    with pytest.raises(ValueError):
        PathParams(delay=-1e-9)
    with pytest.raises(ValueError):
        PathParams(velocity=0.01 * SPEED_OF_LIGHT)
    assert PathParams(velocity=0.0).is_static


def test_clock_offsets():
    off = ClockOffsets(100.0, 1e-7, 5.0, 2e-9).drifted()
    assert off.cfo == 105.0 and off.timing_offset == pytest.approx(1.02e-7)
    with pytest.raises(ValueError):
        ClockOffsets(cfo=float("nan"))


def test_grid_meta():
    cfg = SystemConfig()
    g = GridMeta.from_config(cfg)
    assert g.doppler_bin == pytest.approx(1 / (2 * 64 * cfg.symbol_period))
    assert g.delay_bin == pytest.approx(cfg.sample_period / 8)
    with pytest.raises(ValueError):
        GridMeta(0.0, 1.0)


def test_rounding_and_wrapping():
    assert round_half_up(2.5) == 3 and round_half_up(-0.5) == 0 and round_half_up(3.4) == 3
    assert wrap_signed(5, 8) == -3 and wrap_signed(4, 8) == 4 and wrap_signed(-4, 8) == 4
    assert delay_from_distance(SPEED_OF_LIGHT) == pytest.approx(1.0)
