"""HTTP service exposing the simulator.

Errors are reported as a structured detail {kind, message}; kind is
"config" for invalid configuration (HTTP 400) and "io" for filesystem
failures (HTTP 500), which the CLI maps to its exit codes.
"""

from __future__ import annotations

import dataclasses

from fastapi import FastAPI, HTTPException

from .. import config as config_mod
from ..artifacts import ArtifactError
from ..config import ConfigError, default_run_config
from ..run import DatasetSpec, RcsSweepSpec, generate_dataset, rcs_table, run_single, run_sweep
from ..scene import SceneError
from ..waveform import WaveformError
from .schemas import (DatasetRequest, DatasetResponse, RcsRequest, RcsResponse,
                      RunRequest, RunResponse, SweepRequest, SweepResponse)

_CONFIG_ERRORS = (ConfigError, SceneError, WaveformError, ValueError)


def _fail(kind: str, exc: Exception) -> HTTPException:
    status = 400 if kind == "config" else 500
    return HTTPException(status_code=status,
                         detail={"kind": kind, "message": str(exc)})


def _load_config(toml_text: str, seed) -> config_mod.RunConfig:
    cfg = config_mod.loads(toml_text)
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=int(seed))
    return cfg


def create_app() -> FastAPI:
    app = FastAPI(title="mmwsim", description="FMCW roadside radar simulator")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest):
        try:
            cfg = _load_config(req.config_toml, req.seed)
            summary = run_single(cfg, req.out_dir)
        except _CONFIG_ERRORS as exc:
            raise _fail("config", exc) from exc
        except (ArtifactError, OSError) as exc:
            raise _fail("io", exc) from exc
        return RunResponse(seed=cfg.seed, config_hash=cfg.sha256(),
                           out_dir=req.out_dir, summary=summary)

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest):
        try:
            cfg = _load_config(req.config_toml, req.seed)
            table = run_sweep(cfg, req.parameter, req.values, req.out_dir)
        except _CONFIG_ERRORS as exc:
            raise _fail("config", exc) from exc
        except (ArtifactError, OSError) as exc:
            raise _fail("io", exc) from exc
        return SweepResponse(seed=cfg.seed, config_hash=cfg.sha256(),
                             out_dir=req.out_dir, table=table)

    @app.post("/dataset", response_model=DatasetResponse)
    def dataset(req: DatasetRequest):
        try:
            if req.config_toml:
                cfg = _load_config(req.config_toml, req.seed)
            else:
                cfg = default_run_config(seed=req.seed if req.seed is not None else 1)
            kwargs = dict(runs_per_class=req.runs_per_class,
                          distance_range=tuple(req.distance_range),
                          speed_range=tuple(req.speed_range),
                          lanes=tuple(req.lanes), image_size=req.image_size,
                          workers=req.workers)
            if req.classes:
                kwargs["classes"] = tuple(req.classes)
            spec = DatasetSpec(**kwargs)
            manifest = generate_dataset(cfg, spec, req.out_dir)
        except _CONFIG_ERRORS as exc:
            raise _fail("config", exc) from exc
        except (ArtifactError, OSError) as exc:
            raise _fail("io", exc) from exc
        return DatasetResponse(seed=cfg.seed, out_dir=req.out_dir, manifest=manifest)

    @app.post("/rcs", response_model=RcsResponse)
    def rcs(req: RcsRequest):
        try:
            spec = RcsSweepSpec(
                mesh_ref=req.mesh, f0=req.f0, bandwidth=req.bandwidth,
                frequency_samples=req.frequency_samples,
                azimuth_start_deg=req.azimuth_start_deg,
                azimuth_stop_deg=req.azimuth_stop_deg,
                azimuth_steps=req.azimuth_steps,
                elevation_deg=req.elevation_deg, range_m=req.range_m,
                ray_spacing=req.ray_spacing, max_bounce=req.max_bounce,
                seed=req.seed)
            table = rcs_table(spec, req.out_dir)
        except _CONFIG_ERRORS as exc:
            raise _fail("config", exc) from exc
        except (ArtifactError, OSError) as exc:
            raise _fail("io", exc) from exc
        return RcsResponse(table=table)

    return app


app = create_app()
