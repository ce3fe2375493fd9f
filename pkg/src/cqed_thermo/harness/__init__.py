from .config import ConfigError, RunConfig, dump_config, parse_config
from .ensemble import TrajectoryFailure, build_model, run_ensemble, simulate
from .io import OutputBundle, read_csv, write_outputs

__all__ = ["ConfigError", "RunConfig", "dump_config", "parse_config", "TrajectoryFailure",
           "build_model", "run_ensemble", "simulate", "OutputBundle", "read_csv",
           "write_outputs"]
