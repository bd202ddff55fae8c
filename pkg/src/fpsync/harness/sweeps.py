"""Seeded Monte Carlo sweeps and the CSV-producing experiment runners.

Seeds: every random stream is ``numpy.random.default_rng(derive_seed(master, stream, trial))``
where ``derive_seed`` chains splitmix64 over the keys. Stream 1 draws the scene and
the drift of a trial, stream 2 its unit-variance noise. The same scene, drift and
noise realization is reused at every SNR point and by every estimator, scaled to
the requested noise level.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..channel_sim import Scenario, noise_var_for_snr, reference_scenario, synthesize_gamma
from ..core_types import ClockOffsets, PathParams, SystemConfig, delay_from_distance, wrap_signed
from ..estimators import FingerprintSynchronizer, MusicSpectrum, WindowedSpectrum
from ..mse_theory import (SingularFisherError, correlation_noise_variance, crlb, effective_bin_noise,
                          sample_argmax, theoretical_mse)
from ..music import delay_grid, music_fingerprint, music_surface, write_surface_csv
from ..spectrum import (extract_fingerprint, make_window, mainlobe_width, spectrum_for_config,
                        window_dft_profile)
from ..sync_estimator import cross_correlate
from ..window_design import ideal_s
from .config import ExperimentSpec

_MASK = (1 << 64) - 1
WINDOW_KINDS = ("rectangular", "hamming", "hann", "blackman")
SCENE_STREAM, NOISE_STREAM = 1, 2


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, *keys: int) -> int:
    """splitmix64 chain: s <- mix(s xor mix(key)) for each key."""
    s = _splitmix64(int(master) & _MASK)
    for k in keys:
        s = _splitmix64(s ^ _splitmix64(int(k) & _MASK))
    return s


class TrialError(RuntimeError):
    pass


@dataclass(frozen=True)
class ResultRow:
    snr_db: float
    estimator: str
    window: str
    n_subcarriers: int
    n_symbols: int
    mse_m2: float
    mse_bins2: float
    trials: int
    wall_time_s: float

    def __post_init__(self):
        if not (self.mse_m2 >= 0 and self.mse_bins2 >= 0):
            raise ValueError("MSE must be >= 0")


@dataclass(frozen=True)
class TrialSetup:
    scenario: Scenario
    drifted: Scenario
    n_paths: int
    true_shift_bins: float
    true_doppler_bins: float


def random_scene(rng: np.random.Generator, spec: ExperimentSpec) -> tuple:
    """Paths of one random scene (static first) and its base clock offsets."""
    sc, system = spec.scenario, spec.system
    if sc.kind == "reference":
        paths = reference_scenario().paths
    else:
        n_static = int(rng.integers(sc.static_paths[0], sc.static_paths[1] + 1))
        paths = []
        for k in range(n_static + sc.moving_paths):
            gain = 10 ** (rng.uniform(*sc.gain_db) / 20) * np.exp(2j * np.pi * rng.uniform())
            dist = rng.uniform(*sc.distance_m)
            vel = 0.0
            if k >= n_static:
                vel = rng.uniform(*sc.speed_mps) * (1 if rng.uniform() < 0.5 else -1)
            paths.append(PathParams(gain=gain, delay=delay_from_distance(dist), velocity=vel))
        paths = tuple(paths)
    offsets = ClockOffsets(cfo=rng.uniform(*sc.cfo_hz),
                           timing_offset=rng.uniform(*sc.timing_samples) * system.sample_period)
    return paths, offsets


def draw_trial(spec: ExperimentSpec, trial: int) -> TrialSetup:
    rng = np.random.default_rng(derive_seed(spec.seed, SCENE_STREAM, trial))
    system = spec.system
    paths, base = random_scene(rng, spec)
    grid = system.grid()
    max_rows = spec.scenario.max_doppler_drift_bins
    max_cols = spec.scenario.max_delay_drift_samples * system.pad_delay
    if spec.drift == "integer":
        rows = float(rng.integers(-max_rows, max_rows + 1))
        cols = float(rng.integers(-int(max_cols), int(max_cols) + 1))
    else:
        rows = float(rng.uniform(-max_rows, max_rows))
        cols = float(rng.uniform(-max_cols, max_cols))
        if spec.drift == "delay":
            rows = float(math.floor(rows + 0.5))
    # keep the drifted packet's total delay non-negative
    floor = -base.timing_offset / grid.delay_bin
    cols = max(cols, float(math.ceil(floor)) if spec.drift == "integer" else floor)
    offsets = ClockOffsets(base.cfo, base.timing_offset, rows * grid.doppler_bin, cols * grid.delay_bin)
    scen = Scenario(paths, offsets=offsets)
    return TrialSetup(scen, scen.with_offsets(offsets.drifted()), len(paths), cols, rows)


def _unit_noise(rng, shape):
    return np.sqrt(0.5) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _make_synchronizer(name: str, spec: ExperimentSpec, n_paths: int, system: SystemConfig):
    if name == "music":
        ms = spec.music
        n_src = n_paths if ms.n_sources == "truth" else ms.n_sources
        tr = MusicSpectrum(n_sources=n_src, smoothing=ms.smoothing(system), regularization=ms.regularization,
                           pad_doppler=ms.pad_doppler, config=system)
    else:
        tr = WindowedSpectrum(window=name, config=system)
    lock = None
    if spec.row_lock:
        lock = True
    elif name == "music" and spec.music.row_mode == "track":
        lock = "track"
    norm = spec.music.normalize if name == "music" else "fingerprint"
    return FingerprintSynchronizer(spectrum=tr, row_lock=lock, normalize=norm, config=system)


def trial_errors(spec: ExperimentSpec, trial: int) -> np.ndarray:
    """Wrapped delay-bin errors, shape (n_snr, n_estimators)."""
    system = spec.system
    setup = draw_trial(spec, trial)
    clean1 = synthesize_gamma(setup.scenario, system).gamma
    clean2 = synthesize_gamma(setup.drifted, system).gamma
    nrng = np.random.default_rng(derive_seed(spec.seed, NOISE_STREAM, trial))
    z1 = _unit_noise(nrng, clean1.shape)
    z2 = _unit_noise(nrng, clean2.shape)
    out = np.empty((len(spec.snr_db), len(spec.estimators)))
    n_cols = system.delay_bins
    for i, snr in enumerate(spec.snr_db):
        sd = math.sqrt(noise_var_for_snr(setup.scenario, system, snr))
        g1 = clean1 + sd * z1
        g2 = clean2 + sd * z2
        for j, name in enumerate(spec.estimators):
            sync = _make_synchronizer(name, spec, setup.n_paths, system)
            res = sync.fit(g1).estimate(g2)
            out[i, j] = wrap_signed(res.shift - setup.true_shift_bins, n_cols)
    return out


def run_mse_sweep(spec: ExperimentSpec, progress=None) -> list:
    """One ResultRow per (SNR, estimator)."""
    n_snr, n_est = len(spec.snr_db), len(spec.estimators)
    errs = np.empty((spec.trials, n_snr, n_est))
    spent = np.zeros(n_est)
    t0 = time.perf_counter()
    for t in range(spec.trials):
        try:
            errs[t] = trial_errors(spec, t)
        except Exception as exc:
            raise TrialError(f"trial {t}: {type(exc).__name__}: {exc}") from exc
        if progress is not None:
            progress(t + 1, spec.trials)
    wall = time.perf_counter() - t0
    spent[:] = wall / max(n_est, 1)
    r = spec.meters_per_bin
    rows = []
    for i, snr in enumerate(spec.snr_db):
        for j, name in enumerate(spec.estimators):
            # fsum is exact, so the reduction order cannot change the result
            mse = math.fsum((errs[:, i, j] ** 2).tolist()) / spec.trials
            kind = "music" if name == "music" else make_window(name, 1).kind
            rows.append(ResultRow(snr, "music" if name == "music" else "dft_window", kind,
                                  spec.system.n_subcarriers, spec.system.n_symbols,
                                  mse * r * r, mse, spec.trials, spent[j] / n_snr))
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_csv(path, header, rows):
    """UTF-8, comma separated, ``\\n`` line endings, header first."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


MSE_HEADER = ["snr_db", "estimator", "window", "n_subcarriers", "n_symbols", "mse_m2", "mse_bins2", "trials"]


def write_mse_csv(prefix, rows) -> list:
    """Results go to ``<prefix>_mse.csv``; wall times to ``<prefix>_timing.csv`` so the former is reproducible."""
    main = write_csv(f"{prefix}_mse.csv", MSE_HEADER,
                     [(r.snr_db, r.estimator, r.window, r.n_subcarriers, r.n_symbols, r.mse_m2,
                       r.mse_bins2, r.trials) for r in rows])
    timing = write_csv(f"{prefix}_timing.csv", ["snr_db", "window", "wall_time_s"],
                       [(r.snr_db, r.window, r.wall_time_s) for r in rows])
    return [main, timing]


def _noisy_reference(system: SystemConfig, snr_db: float | None, seed: int):
    scen = reference_scenario()
    if snr_db is not None:
        scen = scen.with_noise(noise_var_for_snr(scen, system, snr_db))
    rng = np.random.default_rng(derive_seed(seed, 3))
    return scen, synthesize_gamma(scen, system, rng=rng)


def peak_sidelobe_db(profile) -> float:
    p = np.abs(np.asarray(profile))
    n = p.size
    k = int(np.argmax(p))
    lo, hi = k, k
    while p[(hi + 1) % n] <= p[hi % n] and hi - k < n:
        hi += 1
    while p[(lo - 1) % n] <= p[lo % n] and k - lo < n:
        lo -= 1
    mask = np.ones(n, bool)
    mask[np.arange(lo, hi + 1) % n] = False
    if not mask.any():
        return float("-inf")
    return float(20 * np.log10(np.max(p[mask]) / p[k]))


def window_gallery(spec: ExperimentSpec, kinds=WINDOW_KINDS, snr_db: float = 0.0) -> dict:
    """Profiles, lobe measurements and fingerprint autocorrelations of each window plus the subspace fingerprint."""
    system = spec.system
    n, k = system.n_subcarriers, system.pad_delay
    _, gam = _noisy_reference(system, snr_db, spec.seed)
    profiles, summary, autocorr = [], [], []
    for kind in kinds:
        w = make_window(kind, n)
        prof = np.abs(window_dft_profile(w, k))
        db = 20 * np.log10(np.maximum(prof / prof.max(), 1e-300))
        profiles += [(w.kind, i, float(db[i])) for i in range(prof.size)]
        fp = extract_fingerprint(spectrum_for_config(gam, system, kind))
        mag = np.abs(fp.beta)
        ac = np.abs(cross_correlate(fp.beta[None, :], fp.beta).a[0])
        autocorr += [(w.kind, q, float(ac[q])) for q in range(ac.size)]
        summary.append((w.kind, mainlobe_width(prof, "null"), mainlobe_width(prof, "3db"),
                        peak_sidelobe_db(prof), mainlobe_width(mag, "null"), mainlobe_width(mag, "3db")))
    ms = spec.music
    mf = music_fingerprint(gam, ms.smoothing(system), system, len(reference_scenario().paths), 0.0,
                           delay_grid(system))
    b = mf.beta.real
    ac = np.abs(cross_correlate(mf.beta[None, :], mf.beta).a[0])
    autocorr += [("music", q, float(ac[q])) for q in range(ac.size)]
    summary.append(("music", float("nan"), float("nan"), float("nan"),
                    mainlobe_width(b, "null"), mainlobe_width(b, "3db")))
    return {"profiles": profiles, "summary": summary, "autocorr": autocorr}


def run_window_gallery(spec: ExperimentSpec, kinds=WINDOW_KINDS, snr_db: float = 0.0) -> list:
    g = window_gallery(spec, kinds, snr_db)
    p = spec.out
    return [
        write_csv(f"{p}_window_profiles.csv", ["window", "bin", "magnitude_db"], g["profiles"]),
        write_csv(f"{p}_window_summary.csv",
                  ["window", "profile_null_width_bins", "profile_3db_width_bins", "peak_sidelobe_db",
                   "fingerprint_null_width_bins", "fingerprint_3db_width_bins"], g["summary"]),
        write_csv(f"{p}_fingerprint_autocorr.csv", ["window", "lag", "magnitude"], g["autocorr"]),
    ]


def theory_points(spec: ExperimentSpec, draws: int | None = None) -> list:
    """Theory and sampled MSE of the ideal row, one tuple per SNR (columns of THEORY_HEADER).

    Correlation noise is mapped from the SNR through the rectangular-window fingerprint
    of the reference scene, with per-bin noise from :func:`effective_bin_noise`. The correlation
    is normalized by the noisy fingerprint power, so the ideal peak height is P / (P + L s).
    """
    system = spec.system
    draws = spec.theory_draws if draws is None else draws
    scen, clean = _noisy_reference(system, None, spec.seed)
    beta = extract_fingerprint(spectrum_for_config(clean, system, "rectangular"))
    length = system.delay_bins
    s = ideal_s(length, 0.0).s
    rng = np.random.default_rng(derive_seed(spec.seed, 4))
    out = []
    for snr in spec.snr_db:
        sigma2 = noise_var_for_snr(scen, system, snr)
        nv = effective_bin_noise(sigma2, system.pad_doppler, system.pad_delay)
        noisy = beta.power + length * effective_bin_noise(sigma2, system.pad_doppler, system.pad_delay, False)
        var = correlation_noise_variance(nv, noisy, length, spec.noise_form, clean_power=beta.power)
        sb = math.sqrt(var)
        row = s * (beta.power / noisy)
        try:
            th = theoretical_mse(row, sb, 0.0, spec.q_convention)
            status = "ok"
        except Exception as exc:
            th, status = float("nan"), f"quadrature_error: {exc}"
        counts = sample_argmax(row, sb, draws, rng)
        d = wrap_signed(np.arange(length), length)
        mc = float(np.sum(counts * d * d) / draws)
        r2 = spec.meters_per_bin ** 2
        out.append((snr, sb, var, th, th * r2, mc, mc * r2, draws, spec.q_convention, status))
    return out


THEORY_HEADER = ["snr_db", "sigma_bar", "sigma_bar2", "mse_bins2", "mse_m2", "montecarlo_mse_bins2",
                 "montecarlo_mse_m2", "draws", "q_convention", "status"]


def run_theory_curves(spec: ExperimentSpec) -> list:
    return [write_csv(f"{spec.out}_theory.csv", THEORY_HEADER, theory_points(spec))]


def crlb_scenario() -> Scenario:
    """Reference reflectors plus one target at 60 m moving at 10 m/s."""
    ref = reference_scenario()
    mover = PathParams(gain=10 ** (5 / 20), delay=delay_from_distance(60.0), velocity=10.0)
    return Scenario(ref.paths + (mover,))


def crlb_rows(spec: ExperimentSpec) -> list:
    scen = crlb_scenario()
    n_paths = len(scen.paths)
    rows = []
    for nc in spec.crlb_subcarriers:
        system = spec.system.with_(n_subcarriers=int(nc))
        for snr in spec.snr_db:
            nv = noise_var_for_snr(scen, system, snr)
            try:
                diag = np.real(np.diag(crlb(scen, system, nv)))
                status = "ok"
            except SingularFisherError as exc:
                diag, status = np.full(2 * n_paths, np.nan), f"singular: {exc}"
            for l in range(n_paths):
                rows.append((int(nc), snr, l, "velocity_m_s", float(diag[l]), status))
                rows.append((int(nc), snr, l, "delay_s", float(diag[n_paths + l]), status))
    return rows


def run_crlb(spec: ExperimentSpec) -> list:
    return [write_csv(f"{spec.out}_crlb.csv",
                      ["n_subcarriers", "snr_db", "path", "parameter", "crlb", "status"], crlb_rows(spec))]


def run_simulate(spec: ExperimentSpec, snr_db: float | None = None) -> list:
    system = spec.system
    snr = spec.snr_db[-1] if snr_db is None else snr_db
    _, gam = _noisy_reference(system, snr, spec.seed)
    g = gam.gamma
    snap = write_csv(f"{spec.out}_snapshot.csv", ["symbol", "subcarrier", "real", "imag"],
                     [(i, k, float(g[i, k].real), float(g[i, k].imag))
                      for i in range(g.shape[0]) for k in range(g.shape[1])])
    spec_path = Path(f"{spec.out}_spectrum.csv")
    spectrum_for_config(gam, system, "rectangular").to_csv(spec_path)
    return [snap, spec_path]


def run_music_demo(spec: ExperimentSpec, snr_db: float | None = None) -> list:
    system = spec.system
    snr = spec.snr_db[-1] if snr_db is None else snr_db
    scen, gam = _noisy_reference(system, snr, spec.seed)
    ms = spec.music
    sm = ms.smoothing(system)
    n_src = len(scen.paths) if ms.n_sources == "truth" else ms.n_sources
    b = music_surface(gam, sm, system, n_src, ms.regularization, system.pad_delay, ms.pad_doppler)
    surf = Path(f"{spec.out}_music_surface.csv")
    surf.parent.mkdir(parents=True, exist_ok=True)
    write_surface_csv(surf, b, 1.0 / (ms.pad_doppler * system.n_symbols * system.symbol_period),
                      system.sample_period / system.pad_delay)
    fp = music_fingerprint(gam, sm, system, n_src, 0.0, delay_grid(system)).beta.real
    fpath = write_csv(f"{spec.out}_music_fingerprint.csv", ["bin", "delay_s", "value"],
                      [(k, float(k * system.sample_period / system.pad_delay), float(fp[k]))
                       for k in range(fp.size)])
    return [surf, fpath]
