from .config import ConfigError, ExperimentConfig, load_config
from .report import aggregate, rolling_mean
from .runner import RunRecord, read_run, run_experiment, run_seed, seed_streams
