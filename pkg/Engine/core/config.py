"""
Engine configuration for the dilute Bose gas bounds toolkit.
Numerical tolerances, table resolutions and run-time limits are read from the
environment (optionally via a .env file).
"""

import os
import logging
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Configure logging
logging.basicConfig(level=os.getenv("BOSE_LOG_LEVEL", "INFO"))
logger = logging.getLogger(__name__)


def _env_float(name: str, default: str) -> float:
    return float(os.getenv(f"BOSE_{name}", default))


def _env_int(name: str, default: str) -> int:
    return int(os.getenv(f"BOSE_{name}", default))


class EngineConfig:
    """Engine configuration class."""

    def __init__(self):
        # Zero-energy scattering solver
        self.SCATTERING_RTOL = _env_float("SCATTERING_RTOL", "1e-10")
        self.SCATTERING_ATOL = _env_float("SCATTERING_ATOL", "1e-14")
        self.SCATTERING_START_FRACTION = _env_float("SCATTERING_START_FRACTION", "1e-6")
        self.DECAY_TAIL_FRACTION = _env_float("DECAY_TAIL_FRACTION", "1e-12")
        self.FOURIER_TAIL_FRACTION = _env_float("FOURIER_TAIL_FRACTION", "1e-14")

        # Adaptive quadrature (scipy quad)
        self.QUAD_EPSABS = _env_float("QUAD_EPSABS", "1e-13")
        self.QUAD_EPSREL = _env_float("QUAD_EPSREL", "1e-10")
        self.QUAD_LIMIT = _env_int("QUAD_LIMIT", "400")
        self.QUAD_SLACK = _env_float("QUAD_SLACK", "1e3")

        # Momentum tables for g, phi and V transforms
        self.TABLE_MOMENTUM_CUTOFF = _env_float("TABLE_MOMENTUM_CUTOFF", "200")
        self.TABLE_POINTS = _env_int("TABLE_POINTS", "1500")
        self.TABLE_PANEL_ORDER = _env_int("TABLE_PANEL_ORDER", "16")

        # Omega double integral
        self.ANGULAR_ORDER = _env_int("ANGULAR_ORDER", "24")
        self.ANGULAR_MAX_ORDER = _env_int("ANGULAR_MAX_ORDER", "96")
        self.LOG_PANELS_PER_DECADE = _env_int("LOG_PANELS_PER_DECADE", "6")
        self.LOG_PANEL_ORDER = _env_int("LOG_PANEL_ORDER", "10")

        # Bound regimes
        self.REGIME_MARGIN = _env_float("REGIME_MARGIN", "0.1")
        self.DIVERGENCE_WARN = _env_float("DIVERGENCE_WARN", "0.5")

        # Truncated Fock space oracle
        self.FOCK_MAX_STATES = _env_int("FOCK_MAX_STATES", "3000000")
        self.FOCK_ROUNDING_FLOOR = _env_float("FOCK_ROUNDING_FLOOR", "1e-11")

        # Scan orchestration
        self.MAX_WORKERS = _env_int("MAX_WORKERS", "4")
        self.LOG_LEVEL = os.getenv("BOSE_LOG_LEVEL", "INFO")

    def as_dict(self) -> dict:
        """Settings as a plain dictionary (for run provenance)."""
        return {key: value for key, value in vars(self).items() if key.isupper()}


# Global configuration instance
config = EngineConfig()


def get_config() -> EngineConfig:
    """Get the shared engine configuration."""
    return config
