"""
Application configuration using Pydantic BaseSettings
"""

from fractions import Fraction

from pydantic import field_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Settings loaded from environment variables (prefix SLITFORGE_)"""

    # Precision settings
    precision_bits: int = 128
    max_precision_bits: int = 4096

    # Continued fraction settings
    max_cf_depth: int = 10_000
    digit_budget: int = 100_000
    log_domain_cap_bits: int = 256

    # Construction constants
    c0_prime: str = "4/(27*pi)"
    c0_divisor: int = 9
    mu_bound: str = "1"

    # Parameter derivation
    r_fraction: str = "4/5"
    delta_fraction: str = "9/10"

    # Execution settings
    workers: int = 1
    log_level: str = "INFO"

    @field_validator("precision_bits")
    @classmethod
    def _check_precision(cls, value: int) -> int:
        if value < 128:
            raise ValueError("precision_bits must be at least 128")
        return value

    @field_validator("r_fraction", "delta_fraction")
    @classmethod
    def _check_fraction(cls, value: str) -> str:
        frac = Fraction(value)
        if not 0 < frac < 1:
            raise ValueError(f"fraction {value} must lie in (0, 1)")
        return value

    class Config:
        env_file = ".env"
        env_prefix = "SLITFORGE_"
        case_sensitive = False


# Global settings instance
settings = Settings()
