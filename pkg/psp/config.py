"""
Configuration module - loads settings from environment variables
"""

import os
import logging
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

# .env in the working directory wins over nothing, loses to the real environment
load_dotenv()


def _cpu_count() -> int:
    return os.cpu_count() or 1


class Config:
    """Application configuration from environment variables"""

    # Logging
    PSP_DEBUG = os.getenv('PSP_DEBUG', 'false').lower() == 'true'

    # Worker pool (oracle chunks, planner edge checks)
    PSP_THREADS = max(1, int(os.getenv('PSP_THREADS', str(_cpu_count()))))

    # Query defaults
    PSP_EPSILON = float(os.getenv('PSP_EPSILON', '0.5'))
    PSP_SEED = int(os.getenv('PSP_SEED', '0'))

    # Sampling
    PSP_ORACLE_SAMPLES = int(os.getenv('PSP_ORACLE_SAMPLES', '100000'))
    PSP_MC_SAMPLES = int(os.getenv('PSP_MC_SAMPLES', '20000'))
    PSP_MC_CONFIDENCE = float(os.getenv('PSP_MC_CONFIDENCE', '0.99'))
    PSP_WILSON_CONFIDENCE = float(os.getenv('PSP_WILSON_CONFIDENCE', '0.99'))
    PSP_CHUNK_SIZE = int(os.getenv('PSP_CHUNK_SIZE', '65536'))

    # Boolean elimination
    PSP_MAX_WIDTH = int(os.getenv('PSP_MAX_WIDTH', '20'))

    # Artifacts
    PSP_OUT_DIR = os.getenv('PSP_OUT_DIR', './out')

    @property
    def out_dir_path(self) -> Path:
        """Get the artifact output directory"""
        return Path(self.PSP_OUT_DIR)

    def __repr__(self):
        return (
            f"Config(threads={self.PSP_THREADS}, "
            f"epsilon={self.PSP_EPSILON}, "
            f"seed={self.PSP_SEED}, "
            f"max_width={self.PSP_MAX_WIDTH})"
        )


# Global config instance
config = Config()


class RuntimeConfig:
    """
    Runtime overrides applied on top of the environment.

    The CLI sets these from flags for a single invocation; library code asks
    for the effective value through the getters.
    """
    _threads: Optional[int] = None
    _threads_source: str = "config"

    @classmethod
    def set_threads(cls, threads: int, source: str = "flag"):
        """Cap the worker count for this process"""
        cls._threads = max(1, int(threads))
        cls._threads_source = source
        logger.info(f"Worker threads set: {cls._threads} (source: {source})")

    @classmethod
    def get_threads(cls) -> int:
        """Worker count - prefers runtime value, falls back to PSP_THREADS"""
        return cls._threads or config.PSP_THREADS

    @classmethod
    def get_threads_source(cls) -> str:
        return cls._threads_source


# Global runtime config instance
runtime_config = RuntimeConfig()
