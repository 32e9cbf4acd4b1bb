from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Output
    OUT: Optional[str] = None
    LOG_LEVEL: str = "INFO"

    # Iteration engine
    TOL: float = 1e-10
    MAX_ITERS: int = 10000
    CYCLE_TOL: float = 1e-9
    CYCLE_WINDOW: int = 0
    PICARD_CYCLE_WINDOW: int = 8

    # Contraction verifier
    FIX_TOL: float = 1e-9
    SEED: int = 0
    MAX_WITNESSES: int = 20
    VERIFY_WORKERS: int = 1

    # Comparison functions (sampled membership certificate)
    MEMBERSHIP_GRID_SIZE: int = 32
    MEMBERSHIP_GRID_LO: float = 1e-6
    MEMBERSHIP_GRID_HI: float = 1e3
    MEMBERSHIP_N_MAX: int = 200
    MEMBERSHIP_TOL: float = 1e-9

    # Split feasibility
    SCFP_LAMBDA: float = 0.5
    NORM_SAFETY: float = 1.01
    POWER_TOL: float = 1e-12
    POWER_MAX_ITERS: int = 10000
    FEASIBILITY_TOL: float = 1e-6

    model_config = SettingsConfigDict(
        env_prefix="KFIX_",
        case_sensitive=True,
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


# Global settings instance
settings = Settings()
