from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Config(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="CVARSELECT_", env_file=".env", extra="ignore"
    )

    LOG_LEVEL: str = "INFO"
    OUTPUT_DIR_RELATIVE: str = "./results"

    # numerics
    TOLERANCE: float = 1e-12
    BRUTE_FORCE_MAX_GROUND: int = 20
    BRUTE_FORCE_MAX_EVALS: int = 10_000_000
    EXACT_MAX_ELEMENTS: int = 20

    # sampling
    N_SAMPLES: int = 1000
    DELTA_STEP: float = 1.0
    DELTA_CONF: float = 0.05
    ALPHA_GRID: list[float] = [
        0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0,
    ]
    TRADEOFF_ALPHAS: list[float] = [0.1, 1.0]
    TRADEOFF_RISK_LEVEL: float = 0.1

    # mobility-on-demand study
    MOD_N_DEMANDS: int = 4
    MOD_N_VEHICLES: int = 6
    MOD_SIDE: float = 10.0
    MOD_EFFICIENCY_SCALE: float = 10.0
    MOD_MIN_SEPARATION: float = 0.5
    MOD_MAX_ATTEMPTS: int = 1000

    # sensor coverage study
    COVERAGE_WIDTH: int = 20
    COVERAGE_HEIGHT: int = 20
    COVERAGE_N_CANDIDATES: int = 8
    COVERAGE_BUDGET: int = 4
    # (x0, y0, x1, y1), inclusive cell bounds
    COVERAGE_OBSTACLES: list[tuple[int, int, int, int]] = [
        (4, 4, 7, 11),
        (11, 13, 16, 15),
        (12, 3, 16, 6),
    ]

    # street network
    STREET_BETA1: float = 1.0
    STREET_BETA2: float = 1.0
    STREET_T_MAX_FACTOR: float = 5.0
    CITY_ROWS: int = 5
    CITY_COLS: int = 5
    CITY_SEED: int = 7
    CITY_SPACING: float = 200.0
    CITY_MIN_LENGTH: float = 80.0
    CITY_MAX_LENGTH: float = 400.0
    CITY_SPEEDS: list[float] = [5.0, 10.0, 15.0, 20.0]

    # online triggering assignment
    OTA_ALPHA: float = 0.1
    OTA_N_SAMPLES: int = 200
    OTA_GRID_POINTS: int = 50
    OTA_GAMMAS: list[float] = [0.3, 0.5, 0.7]
    OTA_SCALES: list[tuple[int, int]] = [(3, 2), (6, 4), (12, 5)]
    OTA_TRIALS: int = 10
    OTA_MAX_STEPS: int = 100_000
    OTA_MIN_TRAVEL_TIME: float = 1e-3

    @property
    def OUTPUT_DIR_ABSOLUTE(self) -> Path:
        return Path(self.OUTPUT_DIR_RELATIVE).resolve()


config = Config()
