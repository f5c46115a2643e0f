"""
Configuration Module
Exploration settings and their defaults
"""

import os
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional


class Algorithm(str, Enum):
    """Exploration algorithm selected on the command line"""
    EVENT = "event"
    COARSE = "coarse"
    BRUTE = "brute"


@dataclass(frozen=True)
class ExploreConfig:
    """Settings for one exploration run"""
    algorithm: Algorithm = Algorithm.EVENT
    cap: int = 10 ** 7
    record_keys: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.cap <= 0:
            raise ValueError(f"execution cap must be positive, got {self.cap}")
        if self.seed != 0:
            # tie-breaks are by least InstanceId, there is nothing to seed
            raise ValueError("only the fixed tie-break seed 0 is supported")


class Config:
    """Application configuration settings"""

    # Default values
    DEFAULT_CAP = 10 ** 7
    DEFAULT_ALGORITHM = Algorithm.EVENT
    DEFAULT_LOG_LEVEL = "WARNING"
    CAP_ENV_VAR = "EVDPOR_CAP"

    def __init__(self):
        """Initialize with default values"""
        self.reset_defaults()

    def reset_defaults(self):
        """Reset all settings to default values"""
        self.cap = self.DEFAULT_CAP
        self.algorithm = self.DEFAULT_ALGORITHM
        self.log_level = self.DEFAULT_LOG_LEVEL

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "Config":
        """Build a configuration, honouring EVDPOR_CAP when set"""
        environ = os.environ if environ is None else environ
        config = cls()
        raw = environ.get(cls.CAP_ENV_VAR)
        if raw:
            try:
                config.cap = int(raw)
            except ValueError:
                raise ValueError(f"{cls.CAP_ENV_VAR} must be an integer, got {raw!r}")
        config.validate()
        return config

    def validate(self):
        """Validate configuration values"""
        if self.cap <= 0:
            raise ValueError(f"execution cap must be positive, got {self.cap}")
        self.algorithm = Algorithm(self.algorithm)
        self.log_level = self.log_level.upper()
        return True

    def explore_config(self, record_keys: bool = False) -> ExploreConfig:
        """Freeze the current settings into an ExploreConfig"""
        self.validate()
        return ExploreConfig(algorithm=self.algorithm, cap=self.cap, record_keys=record_keys)
