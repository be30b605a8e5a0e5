"""
Configuration management for the cooperative regulation toolkit
"""

import logging
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Application configuration class"""

    # Server settings
    HOST = os.getenv('HOST', '0.0.0.0')
    PORT = int(os.getenv('PORT', 4123))

    # Logging
    LOG_LEVEL = os.getenv('COOPREG_LOG', 'WARNING').upper()

    # Simulation defaults
    STEP = float(os.getenv('COOPREG_STEP', 1e-3))
    THRESHOLD = float(os.getenv('COOPREG_THRESHOLD', 1e-3))
    DIVERGENCE_LIMIT = float(os.getenv('COOPREG_DIVERGENCE_LIMIT', 1e12))
    FINAL_WINDOW = float(os.getenv('COOPREG_FINAL_WINDOW', 0.1))
    MAX_STEPS = int(os.getenv('COOPREG_MAX_STEPS', 2_000_000))

    # Scenario library and sweeps
    SCENARIO_DIR = os.getenv('COOPREG_SCENARIO_DIR', './scenarios')
    SWEEP_WORKERS = int(os.getenv('COOPREG_SWEEP_WORKERS', 1))

    # CORS settings
    CORS_ORIGINS = os.getenv('CORS_ORIGINS', '*')

    @classmethod
    def validate(cls):
        """Validate configuration values"""
        if cls.LOG_LEVEL not in logging.getLevelNamesMapping():
            raise ValueError(f"COOPREG_LOG must be a logging level name, got {cls.LOG_LEVEL}")
        if cls.STEP <= 0:
            raise ValueError(f"COOPREG_STEP must be positive, got {cls.STEP}")
        if cls.THRESHOLD <= 0:
            raise ValueError(f"COOPREG_THRESHOLD must be positive, got {cls.THRESHOLD}")
        if cls.DIVERGENCE_LIMIT <= 0:
            raise ValueError(f"COOPREG_DIVERGENCE_LIMIT must be positive, got {cls.DIVERGENCE_LIMIT}")
        if not (0.0 < cls.FINAL_WINDOW <= 1.0):
            raise ValueError(f"COOPREG_FINAL_WINDOW must be between 0 and 1, got {cls.FINAL_WINDOW}")
        if cls.MAX_STEPS <= 0:
            raise ValueError(f"COOPREG_MAX_STEPS must be positive, got {cls.MAX_STEPS}")
        if cls.SWEEP_WORKERS <= 0:
            raise ValueError(f"COOPREG_SWEEP_WORKERS must be positive, got {cls.SWEEP_WORKERS}")


def configure_logging(level: str = None):
    """Apply COOPREG_LOG (or an explicit level) to the root logger"""
    logging.basicConfig(
        level=(level or Config.LOG_LEVEL),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
