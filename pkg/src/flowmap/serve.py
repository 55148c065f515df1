"""HTTP inference service backing the browser viewer.

The model is loaded once at startup and shared immutably across
requests. Two endpoints: GET /model/info for static metadata and
POST /trace for batched trajectory inference. Batched results are
bitwise identical to per-seed requests (row-stable inference kernel).
"""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, field_validator

from .net import MlpModel, count_params, infer_batch


class TraceRequest(BaseModel):
    seeds: list[list[float]]
    cycles: str | list[int] = "all"

    @field_validator("cycles")
    @classmethod
    def _check_cycles(cls, v):
        if isinstance(v, str) and v != "all":
            raise ValueError("cycles must be 'all' or a list of indices")
        return v


def create_app(model: MlpModel, model_path=None) -> FastAPI:
    app = FastAPI(title="flowmap inference service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    model_bytes = Path(model_path).stat().st_size if model_path else None
    n = model.n_file_cycles

    @app.exception_handler(Exception)
    async def on_error(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def on_bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors())})

    @app.get("/model/info")
    def model_info():
        return {
            "dim": model.arch.dim,
            "n_file_cycles": n,
            "method": model.method,
            "samples_per_map": model.samples_per_map,
            "bounds": [model.norm.lo.tolist(), model.norm.hi.tolist()],
            "activation": model.arch.activation,
            "param_count": count_params(model),
            "model_bytes": model_bytes,
        }

    @app.post("/trace")
    def trace(req: TraceRequest):
        if not req.seeds:
            return JSONResponse(status_code=400, content={"error": "no seeds given"})
        seeds = np.asarray(req.seeds, dtype=np.float64)
        if seeds.ndim != 2 or seeds.shape[1] != model.arch.dim:
            return JSONResponse(
                status_code=400,
                content={"error": f"each seed needs {model.arch.dim} coordinates"},
            )
        if req.cycles == "all":
            idx = np.arange(n)
        else:
            idx = np.asarray(req.cycles, dtype=int)
            if idx.size == 0 or np.any((idx < 0) | (idx >= n)):
                return JSONResponse(
                    status_code=400,
                    content={"error": f"cycles must lie in [0, {n - 1}]"},
                )
        t0 = time.perf_counter()
        positions, valid = infer_batch(model, seeds)
        inference_ms = (time.perf_counter() - t0) * 1e3
        return {
            "trajectories": [
                {
                    "positions": positions[i][idx].tolist(),
                    "valid": valid[i][idx].tolist(),
                }
                for i in range(seeds.shape[0])
            ],
            "cycles": idx.tolist(),
            "inference_ms": inference_ms,
        }

    return app
