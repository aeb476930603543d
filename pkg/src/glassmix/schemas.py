"""Pydantic request/response models shared by the HTTP service and the CLI.

These models ARE the config schema: the CLI validates its merged config with
them before posting, and the service validates every request body on entry.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from . import SCHEMA_VERSION
from .model import MAX_SPINS


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SimulateConfig(StrictModel):
    n: int = Field(ge=1, le=MAX_SPINS)
    p: int = Field(ge=2)
    beta: float = Field(ge=0.0)
    instance_seed: int = 0
    master_seed: int = 0
    repr: Optional[Literal["full_ordered", "collapsed_multiset", "parity"]] = None
    trajectories: int = Field(default=1, ge=1, le=4096)
    horizon: int = Field(ge=0)
    subsample: int = Field(default=1, ge=1)
    start: Literal["all_plus", "all_minus", "random"] = "all_plus"
    uniformity_check: bool = False
    threads: int = Field(default=1, ge=1)


class SpectrumConfig(StrictModel):
    # the exact-mode capacity rule (n <= 14) is enforced downstream so that
    # oversize requests fail with a capacity error, not a config error
    n: int = Field(ge=1, le=MAX_SPINS)
    p: int = Field(ge=2)
    beta: float = Field(ge=0.0)
    seed: int = 0
    repr: Optional[Literal["full_ordered", "collapsed_multiset", "parity"]] = None
    cap: int = Field(default=10**6, ge=1)
    threads: int = Field(default=1, ge=1)


class CertifyConfig(StrictModel):
    n: int = Field(ge=2, le=MAX_SPINS)
    p: int = Field(ge=2)
    beta: float = Field(ge=0.0)
    seed: int = 0
    count: int = Field(default=1, ge=1, le=1024)
    eps: float = Field(default=0.5, gt=0.0, lt=1.0)
    radii: Optional[list[int]] = None
    extended_radii: bool = False
    max_centers: Optional[int] = Field(default=None, ge=1)
    cap: int = Field(default=10**6, ge=1)
    with_exact: Optional[bool] = None  # default: n <= 12
    repr: Optional[Literal["full_ordered", "collapsed_multiset", "parity"]] = None
    threads: int = Field(default=1, ge=1)

    @field_validator("radii")
    @classmethod
    def _radii_positive(cls, v):
        if v is not None and any(k < 1 for k in v):
            raise ValueError("radii must be >= 1")
        return v


class LandscapeConfig(StrictModel):
    n: int = Field(ge=4, le=20)
    p: int = Field(ge=2)
    eps: float = Field(gt=0.0, lt=1.0)
    delta: float = Field(gt=0.0, lt=1.0)
    k: int = Field(ge=1)
    samples: int = Field(ge=1, le=10**6)
    seed: int = 0
    repr: Literal["full_ordered", "collapsed_multiset", "parity"] = "parity"
    bootstrap_resamples: int = Field(default=1000, ge=100, le=10**5)
    threads: int = Field(default=1, ge=1)


class TheoryConfig(StrictModel):
    eps: float = Field(gt=0.0, lt=1.0)
    delta: float = Field(gt=0.0, lt=1.0)
    p_values: list[int] = Field(default_factory=lambda: [8, 16, 32, 64, 128, 256, 512, 1024])
    threads: int = Field(default=1, ge=1)

    @field_validator("p_values")
    @classmethod
    def _p_ge2(cls, v):
        if not v or any(p < 2 for p in v):
            raise ValueError("p_values must be nonempty with every p >= 2")
        return v


class ArtifactPayload(StrictModel):
    name: str
    content: str


class RunResponse(StrictModel):
    schema_version: str = SCHEMA_VERSION
    command: str
    summary: dict
    artifacts: list[ArtifactPayload]


class ErrorPayload(StrictModel):
    error: str
    error_type: str
    exit_code: int


class HealthResponse(StrictModel):
    status: str
    version: str
    schema_version: str = SCHEMA_VERSION
