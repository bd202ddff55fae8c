import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpsync.channel_sim import Scenario, reference_scenario, synthesize_gamma
from fpsync.core_types import (SPEED_OF_LIGHT, ClockOffsets, PathParams, SystemConfig, cyclic_shift,
                               dft_matrix, round_half_up)
from fpsync.spectrum import (DelayDopplerSpectrum, WindowSpec, custom_window, extract_fingerprint,
                             mainlobe_width, make_window, spectrum_for_config, window_dft_profile,
                             windowed_2d_spectrum, write_matrix_csv)


def _literal_spectrum(gamma, wg, wn, kf, kt):
    g, n = gamma.shape
    pad = np.zeros((kf * g, kt * n), dtype=complex)
    pad[:g, :n] = gamma
    pg = np.zeros(kf * g)
    pg[:g] = wg
    pn = np.zeros(kt * n)
    pn[:n] = wn
    return dft_matrix(kf * g).conj() @ np.diag(pg) @ pad @ np.diag(pn) @ dft_matrix(kt * n).conj()


def test_make_window_values():
    assert np.array_equal(make_window("rectangular", 4).samples, np.ones(4))
    assert np.allclose(make_window("hamming", 2).samples, [0.08, 0.08])
    assert np.array_equal(make_window("hann", 1).samples, [1.0])
    with pytest.raises(ValueError):
        make_window("kaiser", 8)
    with pytest.raises(ValueError):
        make_window("hann", 0)


@pytest.mark.parametrize("kind", ["rectangular", "hamming", "hann", "blackman"])
@pytest.mark.parametrize("n", [1, 2, 5, 64, 128])
def test_windows_symmetric_and_bounded(kind, n):
    w = make_window(kind, n).samples
    assert np.allclose(w, w[::-1])
    assert np.max(w) <= 1 + 1e-12 and np.min(w) >= 0


def test_hamming_closed_form():
    n = 16
    k = np.arange(n)
    assert np.allclose(make_window("hamming", n).samples, 0.54 - 0.46 * np.cos(2 * np.pi * k / (n - 1)))


def test_window_spec_rejects_bad_kind():
    with pytest.raises(ValueError):
        WindowSpec("triangle", np.ones(3))
    assert custom_window([1, 2]).kind == "custom"


def test_all_ones_dc():
    g, n = 8, 16
    xi = windowed_2d_spectrum(np.ones((g, n)), "rectangular", "rectangular", 1, 1).xi
    assert abs(xi[0, 0]) == pytest.approx(np.sqrt(g * n))
    xi[0, 0] = 0
    assert np.max(np.abs(xi)) < 1e-10


@given(st.integers(0, 2**31), st.integers(1, 3), st.integers(1, 3))
@settings(max_examples=15, deadline=None)
def test_fft_matches_literal_product(seed, kf, kt):
    rng = np.random.default_rng(seed)
    gam = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    wg, wn = rng.uniform(size=8), rng.uniform(size=8)
    fast = windowed_2d_spectrum(gam, wg, wn, kf, kt).xi
    assert np.max(np.abs(fast - _literal_spectrum(gam, wg, wn, kf, kt))) < 1e-10


def test_single_path_peak_location():
    cfg = SystemConfig(n_subcarriers=64, n_symbols=16)
    tau = 11.3 * cfg.sample_period / cfg.pad_delay
    g = synthesize_gamma(Scenario((PathParams(1.0, tau),)), cfg)
    xi = np.abs(spectrum_for_config(g, cfg).xi)
    i, q = np.unravel_index(np.argmax(xi), xi.shape)
    assert i == 0
    assert q == round_half_up(tau * cfg.n_subcarriers * cfg.subcarrier_spacing * cfg.pad_delay)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        windowed_2d_spectrum(np.ones((4, 4)), np.ones(3), "rectangular")
    with pytest.raises(ValueError):
        windowed_2d_spectrum(np.ones((4, 4)), pad_delay=0)


def test_window_profile_cases():
    prof = np.abs(window_dft_profile(make_window("rectangular", 128), 25))
    assert prof.size == 3200
    assert prof[25] < 1e-10 * prof[0]
    assert mainlobe_width(prof) == 50
    imp = np.zeros(16)
    imp[0] = 1
    assert np.allclose(np.abs(window_dft_profile(imp, 3)), 1 / np.sqrt(48))
    ham = np.abs(window_dft_profile(make_window("hamming", 128), 25))
    assert mainlobe_width(ham) / mainlobe_width(prof) == pytest.approx(2.0, rel=0.05)


def test_mainlobe_width_modes():
    tri = np.array([0, 1, 2, 3, 4, 3, 2, 1, 0, 0], dtype=float)
    # half-power level 4/sqrt(2) is crossed 1.1716 bins either side of the apex
    assert mainlobe_width(tri, "3db", cyclic=False) == pytest.approx(2 * (4 - 4 / np.sqrt(2)), abs=1e-9)
    assert mainlobe_width(tri, "null", cyclic=False) == 8
    with pytest.raises(ValueError):
        mainlobe_width(np.ones(8))
    with pytest.raises(ValueError):
        mainlobe_width(tri, "bogus")


def test_extract_fingerprint_static_row_zero():
    cfg = SystemConfig(n_subcarriers=64, n_symbols=32)
    g = synthesize_gamma(reference_scenario(), cfg)
    fp = extract_fingerprint(spectrum_for_config(g, cfg))
    assert fp.row == 0
    assert fp.power == pytest.approx(np.sum(np.abs(fp.beta) ** 2))


def test_extract_fingerprint_cfo_row_shift():
    cfg = SystemConfig()
    cfo = 2 * 3.0 * cfg.carrier_freq / SPEED_OF_LIGHT
    g = synthesize_gamma(reference_scenario(cfo=cfo), cfg)
    fp = extract_fingerprint(spectrum_for_config(g, cfg))
    want = int(round_half_up(cfo / cfg.grid().doppler_bin))
    assert want == 1
    assert fp.row == want


def test_extract_fingerprint_tie_and_errors():
    xi = np.zeros((4, 3), dtype=complex)
    xi[1] = 1
    xi[3] = 1
    assert extract_fingerprint(xi).row == 1
    assert extract_fingerprint(xi, row=3).row == 3
    with pytest.raises(ValueError):
        extract_fingerprint(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        extract_fingerprint(np.zeros((2, 3)))


def test_integer_drift_is_cyclic_shift():
    cfg = SystemConfig(n_subcarriers=64, n_symbols=32)
    grid = cfg.grid()
    base = reference_scenario(cfo=400.0, timing_offset=2e-7)
    kq, ki = 7, 3
    drift = ClockOffsets(400.0 + ki * grid.doppler_bin, 2e-7 + kq * grid.delay_bin)
    xi0 = spectrum_for_config(synthesize_gamma(base, cfg), cfg).xi
    xi1 = spectrum_for_config(synthesize_gamma(base.with_offsets(drift), cfg), cfg).xi
    # carrier phase of the timing step is common to all bins
    phase = np.exp(-2j * np.pi * cfg.carrier_freq * kq * grid.delay_bin)
    want = np.roll(np.roll(xi0, ki, axis=0), kq, axis=1) * phase
    assert np.max(np.abs(xi1 - want)) < 1e-8 * np.max(np.abs(xi0))
    b0 = xi0[0]
    b1 = xi1[ki]
    assert np.allclose(b1, cyclic_shift(b0, -kq) * phase, atol=1e-8 * np.max(np.abs(b0)))


def test_fractional_shift_residual_decreases_with_padding():
    # worst case over a sweep of sub-sample drifts; a single drift can keep the same
    # rounding error across doublings
    paths = (PathParams(1.0, 1.3e-7), PathParams(0.6, 3.7e-7), PathParams(0.4j, 6.1e-7))
    worst = []
    for k in (1, 2, 4, 8, 16, 32):
        cfg = SystemConfig(n_subcarriers=64, n_symbols=4, pad_delay=k, pad_doppler=1)
        b0 = spectrum_for_config(synthesize_gamma(Scenario(paths), cfg), cfg).xi[0]
        res = []
        for frac in np.linspace(0.0, 1.0, 41):
            d = frac * cfg.sample_period
            b1 = spectrum_for_config(synthesize_gamma(Scenario(paths, offsets=ClockOffsets(0, d)), cfg), cfg).xi[0]
            shift = int(round_half_up(d / cfg.grid().delay_bin))
            sb = cyclic_shift(b0, -shift) * np.exp(-2j * np.pi * cfg.carrier_freq * d)
            res.append(np.linalg.norm(b1 - sb) / np.linalg.norm(b0))
        worst.append(max(res))
    assert all(a > b for a, b in zip(worst, worst[1:]))


def test_static_paths_share_doppler_profile():
    cfg = SystemConfig(n_subcarriers=32, n_symbols=16)
    rows = []
    for tau in (1e-7, 4e-7):
        g = synthesize_gamma(Scenario((PathParams(1.0, tau),), offsets=ClockOffsets(cfo=333.0)), cfg).gamma
        col = np.fft.ifft(g[:, 0] / g[0, 0], n=cfg.doppler_bins)
        rows.append(col)
    assert np.allclose(rows[0], rows[1])


@given(st.integers(0, 2**31))
@settings(max_examples=10, deadline=None)
def test_convolution_theorem(seed):
    rng = np.random.default_rng(seed)
    n, k = 16, 2
    f0 = rng.uniform(0, 1)
    tone = np.exp(2j * np.pi * f0 * np.arange(n))
    w = rng.uniform(size=n)
    lhs = np.fft.fft(np.r_[w * tone, np.zeros((k - 1) * n)])
    wf = np.fft.fft(np.r_[w, np.zeros((k - 1) * n)])
    tf = np.fft.fft(np.r_[tone, np.zeros((k - 1) * n)])
    m = k * n
    rhs = np.array([np.sum(wf * tf[(j - np.arange(m)) % m]) for j in range(m)]) / m
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_spectrum_validation_and_csv(tmp_path):
    with pytest.raises(ValueError):
        DelayDopplerSpectrum(np.array([[np.nan]]), SystemConfig().grid())
    cfg = SystemConfig(n_subcarriers=4, n_symbols=2, pad_delay=1, pad_doppler=1)
    sp = spectrum_for_config(np.ones((2, 4)), cfg)
    p = tmp_path / "s.csv"
    sp.to_csv(p)
    raw = p.read_bytes()
    assert raw.startswith(b"row,col,doppler_hz,delay_s,magnitude\n")
    assert b"\r" not in raw and raw.count(b"\n") == 9
    write_matrix_csv(tmp_path / "c.csv", sp.xi, magnitude=False)
    assert (tmp_path / "c.csv").read_text().splitlines()[0].endswith("real,imag")
