import logging
import os
import shutil
import uuid
from pathlib import Path
from typing import Any, Dict, List, Tuple

from dotenv import load_dotenv
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse
from pydantic import BaseModel

from etpa import artifacts
from etpa.cli_runner import run_extract, run_simulate
from etpa.config import ExperimentConfig
from etpa.errors import ConfigError, EtpaError

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

app = FastAPI(
    title="eTPA Virtual-State Spectroscopy",
    description="Simulate eTPA delay scans and recover intermediate-state energies",
    version="1.0.0",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


class SimulationResponse(BaseModel):
    run_id: str
    config_hash: str
    files: List[str]
    message: str


class ExtractionResponse(BaseModel):
    run_id: str
    config_hash: str
    energies: List[Dict[str, Any]]
    diagnostics: List[str]
    files: List[str]
    message: str


def output_root() -> Path:
    return Path(os.getenv("ETPA_OUTPUT_DIR", "outputs"))


def _new_run() -> Tuple[str, Path]:
    run_id = str(uuid.uuid4())
    run_dir = output_root() / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_id, run_dir


def _listing(run_id: str, run_dir: Path) -> List[str]:
    return sorted(f"/outputs/{run_id}/{p.relative_to(run_dir).as_posix()}" for p in run_dir.rglob("*") if p.is_file())


def _fail(run_id: str, run_dir: Path, exc: Exception) -> HTTPException:
    # Delete any partially written outputs
    shutil.rmtree(run_dir, ignore_errors=True)
    if isinstance(exc, ConfigError):
        return HTTPException(status_code=422, detail=str(exc))
    logger.error("run %s failed: %s", run_id, exc)
    return HTTPException(status_code=500, detail=f"Error during run {run_id}: {exc}")


@app.post("/simulate", response_model=SimulationResponse)
async def simulate(config: ExperimentConfig):
    run_id, run_dir = _new_run()
    try:
        runs = run_simulate(config, run_dir)
    except (EtpaError, ValueError, OSError) as exc:
        raise _fail(run_id, run_dir, exc) from exc
    return SimulationResponse(
        run_id=run_id,
        config_hash=artifacts.config_hash(config),
        files=_listing(run_id, run_dir),
        message=f"Simulated {len(runs)} pump settings",
    )


@app.post("/extract", response_model=ExtractionResponse)
async def extract(config: ExperimentConfig):
    run_id, run_dir = _new_run()
    try:
        result = run_extract(config, run_dir)
    except (EtpaError, ValueError, OSError) as exc:
        raise _fail(run_id, run_dir, exc) from exc
    return ExtractionResponse(
        run_id=run_id,
        config_hash=artifacts.config_hash(config),
        energies=[e.to_dict() for e in result.energies],
        diagnostics=list(result.diagnostics),
        files=_listing(run_id, run_dir),
        message=f"Recovered {len(result.energies)} intermediate-state energies",
    )


@app.get("/outputs/{run_id}/{name:path}")
async def get_output(run_id: str, name: str):
    try:
        run_id = str(uuid.UUID(run_id))
    except ValueError:
        raise HTTPException(status_code=404, detail=f"Run {run_id} not found") from None
    root = output_root().resolve()
    run_dir = (root / run_id).resolve()
    path = (run_dir / name).resolve()
    if root not in run_dir.parents or run_dir not in path.parents or not path.is_file():
        raise HTTPException(status_code=404, detail=f"Output {name} not found for run {run_id}")
    return FileResponse(str(path))


# Health check endpoint
@app.get("/")
async def health_check():
    return {"status": "ok", "message": "Service is running"}


if __name__ == "__main__":
    import uvicorn

    output_root().mkdir(parents=True, exist_ok=True)
    uvicorn.run(app, host="0.0.0.0", port=8000)
