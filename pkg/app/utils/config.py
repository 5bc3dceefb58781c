"""Configuration management for the BSDE laboratory"""
import json
import os
from pathlib import Path
from typing import Dict, Any
from dotenv import load_dotenv

load_dotenv()


class Config:
    """Process-level configuration: environment first, then config.json, then defaults"""

    def __init__(self, config_path: str = "config.json"):
        # Load config.json if exists
        path = Path(config_path)
        if path.exists():
            with open(path, "r") as f:
                self.config_data: Dict[str, Any] = json.load(f)
        else:
            self.config_data = {}

    def _lookup(self, env_key: str, json_key: str, default: str) -> str:
        return os.getenv(env_key) or str(self.config_data.get(json_key, default))

    # Logging
    @property
    def log_dir(self) -> str:
        return self._lookup("BSDE_LAB_LOG_DIR", "LOG_DIR", "logs")

    @property
    def log_level(self) -> str:
        return self._lookup("BSDE_LAB_LOG_LEVEL", "LOG_LEVEL", "INFO").upper()

    # Artifacts
    @property
    def output_dir(self) -> str:
        return self._lookup("BSDE_LAB_OUTPUT_DIR", "OUTPUT_DIR", "results")

    # Parallelism cap for per-path work
    @property
    def max_workers(self) -> int:
        raw = self._lookup("BSDE_LAB_MAX_WORKERS", "MAX_WORKERS", str(os.cpu_count() or 1))
        return max(1, int(raw))

    @property
    def default_seed(self) -> int:
        return int(self._lookup("BSDE_LAB_SEED", "SEED", "20240601"))


# Global config instance
config = Config()
