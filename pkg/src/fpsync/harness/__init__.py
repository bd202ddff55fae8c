from .config import ConfigError, ExperimentSpec, MusicSpec, ScenarioSpec, load_config, spec_from_dict
from .sweeps import (ResultRow, derive_seed, run_crlb, run_mse_sweep, run_music_demo, run_simulate,
                     run_theory_curves, run_window_gallery, write_mse_csv)

__all__ = ["ConfigError", "ExperimentSpec", "MusicSpec", "ScenarioSpec", "load_config", "spec_from_dict",
           "ResultRow", "derive_seed", "run_crlb", "run_mse_sweep", "run_music_demo", "run_simulate",
           "run_theory_curves", "run_window_gallery", "write_mse_csv"]
