import os
from pathlib import Path
from typing import Literal, Optional
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from dotenv import load_dotenv

# Load .env file
load_dotenv()

PACKAGE_DATA_DIR = Path(__file__).parent / "data"

# Vendored text-pipeline data (frozen NLTK English stopwords, Porter2 fixture table)
STOPWORDS_PATH = PACKAGE_DATA_DIR / "stopwords_en.txt"
STOPWORDS_COUNT = 179
STOPWORDS_SHA256 = "019f104ba2ed07436d05f9cdd3383034ad66014edc27fc651f837e1a038b6451"
STEM_FIXTURES_PATH = PACKAGE_DATA_DIR / "stem_fixtures.csv"
STEM_FIXTURES_SHA256 = "25a1225dc042fc9e8845e4e1ff839dbd4645e5141adba19537026c6da21da995"

# Defaults
DEFAULT_WINDOW_SIZE = 100
DEFAULT_HIGH_SCORE_THRESHOLD = 0.384
DEFAULT_MISSING_FRACTION_THRESHOLD = 0.20
DEFAULT_HISTOGRAM_BINS = 50
MISSING_THRESHOLD_SWEEP = (0.05, 0.10, 0.20, 0.50, 0.80, 1.00)


class Settings:
    # System
    LOG_LEVEL: str = os.getenv("ECHO_DETECT_LOG", "INFO").upper()

    # Paths
    OUTPUT_DIR: Path = Path(os.getenv("ECHO_DETECT_OUTPUT_DIR", "./output"))
    DATA_DIR: Path = Path(os.getenv("ECHO_DETECT_DATA_DIR", "./data"))

    # Worker pool
    PARALLELISM: int = int(os.getenv("ECHO_DETECT_PARALLELISM", "1"))

    def validate(self):
        if self.PARALLELISM < 1:
            raise ValueError("ECHO_DETECT_PARALLELISM must be >= 1.")

        self.OUTPUT_DIR.mkdir(parents=True, exist_ok=True)
        self.DATA_DIR.mkdir(parents=True, exist_ok=True)

settings = Settings()


class DatasetConfig(BaseModel):
    """
    Knobs shared by filtering, windowing and classification.
    """
    model_config = ConfigDict(frozen=True)

    window_size: int = Field(DEFAULT_WINDOW_SIZE, ge=1)
    high_score_threshold: float = Field(DEFAULT_HIGH_SCORE_THRESHOLD, ge=0.0, le=1.0)
    missing_fraction_threshold: float = Field(DEFAULT_MISSING_FRACTION_THRESHOLD, ge=0.0, le=1.0)


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    input_paths: list[Path] = Field(default_factory=list)
    output_dir: Path = Field(default_factory=lambda: settings.OUTPUT_DIR)
    window_size: int = Field(DEFAULT_WINDOW_SIZE, ge=1)
    threshold: float = Field(DEFAULT_HIGH_SCORE_THRESHOLD, ge=0.0, le=1.0)
    missing_threshold: float = Field(DEFAULT_MISSING_FRACTION_THRESHOLD, ge=0.0, le=1.0)
    histogram_bins: int = Field(DEFAULT_HISTOGRAM_BINS, ge=1)
    parallelism: int = Field(default_factory=lambda: settings.PARALLELISM, ge=1)
    seed: Optional[int] = None
    skip_bad_files: bool = False
    dump_windows: bool = False

    @field_validator("output_dir")
    @classmethod
    def _output_dir_writable(cls, value: Path) -> Path:
        if value.exists() and not value.is_dir():
            raise ValueError(f"output path {value} exists and is not a directory")
        return value

    def dataset_config(self) -> DatasetConfig:
        return DatasetConfig(
            window_size=self.window_size,
            high_score_threshold=self.threshold,
            missing_fraction_threshold=self.missing_threshold,
        )

    def echo(self) -> dict:
        """JSON-safe copy of the config for the run manifest."""
        data = self.model_dump(mode="json")
        data["input_paths"] = [str(p) for p in self.input_paths]
        return data


BEHAVIOR_KINDS = ("explicit_retweet", "explicit_reply", "implicit_copy", "implicit_edited", "unrelated")


class SynthConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = Field(ge=0)
    num_followees: int = Field(5, ge=1)
    tweets_per_followee: int = Field(40, ge=1)
    ego_tweet_count: int = Field(20, ge=1)
    behavior_mix: dict[str, float] = Field(
        default_factory=lambda: {
            "explicit_retweet": 0.2,
            "explicit_reply": 0.2,
            "implicit_copy": 0.2,
            "implicit_edited": 0.2,
            "unrelated": 0.2,
        }
    )
    edit_rate: float = Field(0.2, ge=0.0, lt=1.0)
    # strongest: newest member with the top self score; uniform: any window member
    implicit_source: Literal["strongest", "uniform"] = "strongest"
    vocab_size: int = Field(50, ge=4)
    time_model: float = Field(600.0, gt=0.0, description="mean inter-arrival seconds")
    window_size: int = Field(DEFAULT_WINDOW_SIZE, ge=1)
    min_terms: int = Field(10, ge=1)
    max_terms: int = Field(16, ge=1)
    zipf_exponent: float = Field(1.1, gt=0.0)
    username_prefix: str = "user"

    @field_validator("behavior_mix")
    @classmethod
    def _known_kinds(cls, value: dict[str, float]) -> dict[str, float]:
        unknown = set(value) - set(BEHAVIOR_KINDS)
        if unknown:
            raise ValueError(f"unknown behavior kinds: {sorted(unknown)}")
        if any(v < 0 for v in value.values()):
            raise ValueError("behavior_mix fractions must be >= 0")
        if abs(sum(value.values()) - 1.0) > 1e-9:
            raise ValueError(f"behavior_mix must sum to 1 (got {sum(value.values())})")
        return {kind: float(value.get(kind, 0.0)) for kind in BEHAVIOR_KINDS}

    @model_validator(mode="after")
    def _term_bounds(self):
        if self.min_terms > self.max_terms:
            raise ValueError("min_terms must be <= max_terms")
        return self
