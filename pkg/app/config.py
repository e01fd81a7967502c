import logging
from pydantic import Field
from pydantic_settings import BaseSettings

class Settings(BaseSettings):
    """Application settings"""
    # Numerics
    tol: float = Field(1e-9, gt=0, description="Tolerance for identity, closure and corridor width tests")
    perturbation_step: float = Field(1e-3, gt=0, description="Angle step of the perturbation oracle")

    # Execution
    workers: int = Field(1, ge=1, description="Worker processes for rasters and enumerations")
    seed: int = 0

    # Ray probes
    ray_samples: int = Field(12, ge=2)
    ray_delta: float = Field(0.002048, gt=0)

    # Output
    output_dir: str = "output"
    svg_precision: int = Field(6, ge=1, le=12)
    log_level: str = "INFO"

    class Config:
        env_file = ".env"  # Load .env file
        env_prefix = "BILLIARD_"
        extra = "ignore"

settings = Settings()

# Set up logging
logging.basicConfig(level=getattr(logging, settings.log_level.upper(), logging.INFO))
logger = logging.getLogger(__name__)

logger.debug(f"Settings loaded: tol={settings.tol}, workers={settings.workers}, seed={settings.seed}")
