"""
Lungtex Config — Run configuration, profiles, JSON persistence
Every report embeds the RunConfig that produced it, plus its fingerprint
"""

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from src.core.errors import ConfigError


# -- Vocabulary ---------------------------------------------------

FEATURES = ("lbp", "wavelet27", "mfcc-mean", "mfsc-mean", "morph")
CLASSIFIERS = ("knn", "svm", "mlp")
KERNELS = ("linear", "bhat", "isect", "rbf")
GRANULARITIES = ("cycle", "subject")
SCHEMES = ("mid", "miq")

# Kernels that only make sense on non-negative histogram-like features
HISTOGRAM_KERNELS = {"bhat", "isect"}
NON_NEGATIVE_FEATURES = {"lbp", "wavelet27"}

PROFILES = {
    # 40 ms / 90 % came out best in the frame-length and overlap sweeps
    "optimized": {"frame_ms": 40.0, "overlap_pct": 90.0, "n_filters": 20},
    "speech-default": {"frame_ms": 20.0, "overlap_pct": 50.0, "n_filters": 20},
}

MIN_RATE = 4000


@dataclass(frozen=True)
class RunConfig:
    rate: int = 4000
    frame_ms: float = 40.0
    overlap_pct: float = 90.0
    n_filters: int = 20
    feature: str = "lbp"
    classifier: str = "svm"
    kernel: str = "bhat"
    k: int = 3
    c: float = 1.0
    gamma: Optional[float] = None
    epochs: int = 500
    seed: int = 0
    repeats: int = 25
    granularity: str = "cycle"
    profile: str = "optimized"
    select_count: Optional[int] = None
    sigma: float = 1.0
    scheme: str = "mid"

    # -- Construction ---------------------------------------------

    @classmethod
    def from_profile(cls, profile: str = "optimized", **overrides) -> "RunConfig":
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile '{profile}' (choose from {', '.join(PROFILES)})")
        values = dict(PROFILES[profile])
        values.update({k: v for k, v in overrides.items() if v is not None})
        values["profile"] = profile
        return cls(**values).validate()

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data).validate()

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, **overrides) -> "RunConfig":
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes).validate() if changes else self

    # -- Validation -----------------------------------------------

    def validate(self) -> "RunConfig":
        if self.rate < MIN_RATE:
            raise ConfigError(f"rate must be >= {MIN_RATE} Hz, got {self.rate}")
        if self.frame_ms <= 0:
            raise ConfigError(f"frame_ms must be positive, got {self.frame_ms}")
        if not 0 <= self.overlap_pct <= 95:
            raise ConfigError(f"overlap_pct must lie in [0, 95], got {self.overlap_pct}")
        if self.n_filters < 3:
            raise ConfigError(f"n_filters must be >= 3, got {self.n_filters}")
        if self.feature not in FEATURES:
            raise ConfigError(f"unknown feature '{self.feature}'")
        if self.classifier not in CLASSIFIERS:
            raise ConfigError(f"unknown classifier '{self.classifier}'")
        if self.kernel not in KERNELS:
            raise ConfigError(f"unknown kernel '{self.kernel}'")
        if self.granularity not in GRANULARITIES:
            raise ConfigError(f"unknown granularity '{self.granularity}'")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown selection scheme '{self.scheme}'")
        if self.k < 1 or self.k % 2 == 0:
            raise ConfigError(f"k must be a positive odd number, got {self.k}")
        if self.c <= 0:
            raise ConfigError(f"C must be positive, got {self.c}")
        if self.gamma is not None and self.gamma <= 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.epochs < 0 or self.repeats < 1:
            raise ConfigError("epochs must be >= 0 and repeats >= 1")
        if self.select_count is not None and self.select_count < 1:
            raise ConfigError(f"select_count must be >= 1, got {self.select_count}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if (self.classifier == "svm" and self.kernel in HISTOGRAM_KERNELS
                and self.feature not in NON_NEGATIVE_FEATURES):
            raise ConfigError(
                f"kernel '{self.kernel}' needs non-negative features; "
                f"'{self.feature}' can be negative")
        return self

    # -- Derived --------------------------------------------------

    @property
    def hop_fraction(self) -> float:
        return 1.0 - self.overlap_pct / 100.0

    @property
    def effective_repeats(self) -> int:
        """kNN and SVM are deterministic; only the MLP is averaged over seeds."""
        return self.repeats if self.classifier == "mlp" else 1

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


# -- Persistence --------------------------------------------------

def save_config(config: RunConfig, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(config.to_dict(), ensure_ascii=False, indent=2), encoding="utf-8")
    return p


def load_config(path) -> RunConfig:
    """Read a RunConfig JSON, or the `config` block embedded in a report."""
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {p}: {e}") from e
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]
    if not isinstance(data, dict):
        raise ConfigError(f"{p} does not hold a config object")
    return RunConfig.from_dict(data)
