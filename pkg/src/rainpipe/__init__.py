"""Next-day rain classification on daily weather observations.

Typed CSV loading, fit-on-train preprocessing, class rebalancing, seven
classifiers and a config-driven experiment runner.
"""
from .dataset import Table, load_csv, load_weather_csv, split_holdout
from .errors import ConfigError, DataError, LeakageError, NumericError, RainpipeError
from .experiment import ExperimentConfig, explore, preset, run_experiment
from .preprocess import FeatureMatrix, Preprocessor
from .resample import ResamplePlan, resample

__version__ = "0.1.0"

__all__ = [
    "Table", "load_csv", "load_weather_csv", "split_holdout", "ConfigError", "DataError",
    "LeakageError", "NumericError", "RainpipeError", "ExperimentConfig", "explore", "preset",
    "run_experiment", "FeatureMatrix", "Preprocessor", "ResamplePlan", "resample",
]
