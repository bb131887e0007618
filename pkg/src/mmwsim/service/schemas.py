"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    config_toml: str = Field(description="run configuration, TOML text")
    seed: Optional[int] = Field(default=None, description="override the config seed")
    out_dir: str = Field(description="directory for artifacts")


class RunResponse(BaseModel):
    seed: int
    config_hash: str
    out_dir: str
    summary: dict[str, Any]


class SweepRequest(BaseModel):
    config_toml: str
    seed: Optional[int] = None
    out_dir: str
    parameter: str = "samples_per_chirp"
    values: list[float] = Field(default_factory=lambda: [256, 384, 512])


class SweepResponse(BaseModel):
    seed: int
    config_hash: str
    out_dir: str
    table: dict[str, Any]


class DatasetRequest(BaseModel):
    config_toml: Optional[str] = None
    seed: Optional[int] = None
    out_dir: str
    classes: Optional[list[str]] = None
    runs_per_class: int = 20
    distance_range: tuple[float, float] = (25.0, 40.0)
    speed_range: tuple[float, float] = (0.5, 10.0)
    lanes: list[int] = Field(default_factory=lambda: [1, 2, 3])
    image_size: int = 451
    workers: int = 1


class DatasetResponse(BaseModel):
    seed: int
    out_dir: str
    manifest: dict[str, Any]


class RcsRequest(BaseModel):
    mesh: str = "car"
    f0: float = 77.0e9
    bandwidth: float = 0.625e9
    frequency_samples: int = 128
    azimuth_start_deg: float = -30.0
    azimuth_stop_deg: float = 30.0
    azimuth_steps: int = 61
    elevation_deg: float = -5.0
    range_m: float = 100.0
    ray_spacing: float = 0.008
    max_bounce: int = 3
    seed: int = 1
    out_dir: Optional[str] = None


class RcsResponse(BaseModel):
    table: dict[str, Any]


class ErrorDetail(BaseModel):
    kind: str  # "config" | "io" | "internal"
    message: str
