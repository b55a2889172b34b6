# app/config/settings.py
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

CONFIG_DIR = Path(__file__).resolve().parent


class Settings(BaseSettings):
    # ------------------------------------------------------------------------
    # Project
    # ------------------------------------------------------------------------
    PROJECT_NAME: str = "Fermi NLS Lab"
    CODE_VERSION: str = "0.1.0"

    # ------------------------------------------------------------------------
    # Runtime
    # ------------------------------------------------------------------------
    LOG_LEVEL: str = Field("INFO")
    OUTPUT_DIR: Path = Field(Path("results"))
    THREADS: int = Field(1, ge=1)

    # ------------------------------------------------------------------------
    # Data files
    # ------------------------------------------------------------------------
    # Lieb-Thirring constants used when a run does not set c_lt itself
    C_LT_TABLE: Path = Field(CONFIG_DIR / "c_lt_defaults.json")

    # ------------------------------------------------------------------------
    # Pydantic Settings
    # ------------------------------------------------------------------------
    model_config = SettingsConfigDict(
        env_prefix="NLS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


# Initialize settings
settings = Settings()
