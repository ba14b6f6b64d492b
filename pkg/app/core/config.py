from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    LOG_LEVEL: str = "INFO"
    OUTPUT_DIR: str = "results"
    JOBS: int = 1
    VERIFY_TOLERANCE: float = 1e-9
    SAMPLE_PAIRS: int = 1_000_000
    EXACT_VERIFY_MAX_CLASSES: int = 2000
    PROGRESS_BARS: bool = True

    model_config = SettingsConfigDict(env_file=".env", env_prefix="MAXSEP_", extra="ignore")


settings = Settings()
