"""Run-level settings."""

from dataclasses import asdict, dataclass

from .embeddings import DEFAULT_VOCAB_LIMIT
from .exceptions import ConfigError
from .ratings import EXCLUSION_SD, RELIABILITY_THRESHOLD
from .stats import DEFAULT_EXHAUSTIVE_LIMIT


@dataclass(frozen=True)
class RunConfig:
    embeddings: str = ""
    vocab_limit: int = DEFAULT_VOCAB_LIMIT
    n_perm: int = 10_000
    fdr_q: float = 0.05
    seed: int = 0
    reliability_threshold: float = RELIABILITY_THRESHOLD
    exclusion_sd: float = EXCLUSION_SD
    max_outlier_removals: int = 10
    norming_percentile: float = 75.0
    exhaustive_limit: int = DEFAULT_EXHAUSTIVE_LIMIT

    def __post_init__(self):
        for name in ("vocab_limit", "n_perm", "max_outlier_removals", "exhaustive_limit"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not 0.0 < self.fdr_q < 1.0:
            raise ConfigError("fdr_q must lie in (0, 1)")
        if not 0.0 < self.norming_percentile < 100.0:
            raise ConfigError("norming_percentile must lie in (0, 100)")
        if not self.reliability_threshold > 0 or not self.exclusion_sd > 0:
            raise ConfigError("reliability_threshold and exclusion_sd must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def as_dict(self):
        return asdict(self)
