"""HTTP service exposing the experiment runners.

POST /run with a RunRequest body; the config discriminator picks the
experiment. Invalid configs fail validation with 422 before any compute
starts, and core-level ValueErrors (an unsatisfiable grid, a Nyquist
violation) are mapped to 422 as well since they are config problems.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__
from .experiments import run_experiment
from .schemas import ExperimentResponse, RunRequest

app = FastAPI(title="zfnmr", version=__version__,
              description="Zero-field two-spin control simulator")


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/run", response_model=ExperimentResponse)
def run(req: RunRequest):
    try:
        return run_experiment(req)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
