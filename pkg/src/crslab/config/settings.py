"""Application configuration and constants"""

import os
from pathlib import Path
from typing import Any, Dict, Optional

import toml


class AppConfig:
    """Application configuration manager"""

    # Default configuration constants
    DEFAULT_SEED = 20240601
    DEFAULT_THREADS = 1
    DEFAULT_PATHS = 100_000
    DEFAULT_OUTPUT_DIR = "."
    DEFAULT_FORMAT = "csv"
    FEASIBILITY_TOL = 1e-9
    PIVOT_TOL = 1e-9
    GRID_POINTS = 4000
    SUB_TRIALS = 10_000

    SEED_ENV_VAR = "CRSLAB_SEED"

    def __init__(self, config_path: str = "config.toml"):
        self.config_path = Path(config_path)
        self._config = self.load_config()

    def load_config(self) -> Dict[str, Any]:
        """Load configuration from config.toml"""
        if self.config_path.exists():
            try:
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    return toml.load(f)
            except (OSError, toml.TomlDecodeError):
                # Fall back to defaults if config is invalid
                pass
        return {}

    def _get(self, section: str, key: str, default: Any) -> Any:
        return self._config.get(section, {}).get(key, default)

    @property
    def seed(self) -> int:
        """Default seed; CRSLAB_SEED takes precedence over the file"""
        env_seed = os.environ.get(self.SEED_ENV_VAR)
        if env_seed:
            try:
                return int(env_seed)
            except ValueError:
                raise ValueError(f"{self.SEED_ENV_VAR} must be an integer, got '{env_seed}'")
        return int(self._get('simulation', 'seed', self.DEFAULT_SEED))

    @property
    def threads(self) -> int:
        return int(self._get('simulation', 'threads', self.DEFAULT_THREADS))

    @property
    def paths(self) -> int:
        return int(self._get('simulation', 'paths', self.DEFAULT_PATHS))

    @property
    def feasibility_tol(self) -> float:
        return float(self._get('tolerances', 'feasibility', self.FEASIBILITY_TOL))

    @property
    def pivot_tol(self) -> float:
        return float(self._get('tolerances', 'pivot', self.PIVOT_TOL))

    @property
    def grid_points(self) -> int:
        return int(self._get('rcrs', 'grid_points', self.GRID_POINTS))

    @property
    def sub_trials(self) -> int:
        return int(self._get('rcrs', 'sub_trials', self.SUB_TRIALS))

    @property
    def output_dir(self) -> str:
        return self._get('output', 'directory', self.DEFAULT_OUTPUT_DIR)

    @property
    def output_format(self) -> str:
        return self._get('output', 'format', self.DEFAULT_FORMAT)

    def resolve_seed(self, explicit: Optional[int]) -> int:
        """An explicit seed wins over the environment and the file"""
        return self.seed if explicit is None else explicit
