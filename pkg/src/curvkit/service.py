"""HTTP facade over the command handlers.

One POST endpoint per command, stateless, returning the same report JSON
the CLI prints. Malformed payloads map to 400, geometric precondition
failures to 422; a report whose checks fail still returns 200 with
passed=false, because the computation itself succeeded.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Union

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import handlers
from .curvature import DEFAULT_ANGLE_SAMPLES
from .errors import GeometryError, InputError

RationalValue = Union[int, str]


class HalfspaceModel(BaseModel):
    normal: List[RationalValue]
    offset: RationalValue


class PolytopeModel(BaseModel):
    halfspaces: List[HalfspaceModel]


class PieceModel(BaseModel):
    gradient: List[RationalValue]
    offset: RationalValue


class DCFunctionModel(BaseModel):
    plus: List[PieceModel]
    minus: List[PieceModel]


class SceneModel(BaseModel):
    dimension: int
    polytopes: List[PolytopeModel]
    dc_functions: List[DCFunctionModel] = Field(default_factory=list)
    metadata: Dict = Field(default_factory=dict)


class CurvatureRequest(BaseModel):
    scene: SceneModel
    window: Optional[List[HalfspaceModel]] = None
    seed: int = 0
    samples: int = DEFAULT_ANGLE_SAMPLES


class GaussBonnetRequest(BaseModel):
    scene: SceneModel
    samples: int = 100
    seed: int = 0
    window: Optional[List[HalfspaceModel]] = None


class CroftonRequest(BaseModel):
    scene: SceneModel
    k: int
    m: int
    samples: int = 10_000
    seed: int = 0


class DetLemmaRequest(BaseModel):
    dim: int
    trials: int = 1000
    seed: int = 0
    exact: bool = False


class ApproxRequest(BaseModel):
    scene: SceneModel
    eps_ladder: Optional[List[float]] = None
    grid: Optional[int] = None


class IndexRequest(BaseModel):
    scene: SceneModel
    point: List[RationalValue]
    normal: List[RationalValue]


def _window_dump(window: Optional[List[HalfspaceModel]]):
    if window is None:
        return None
    return [h.model_dump() for h in window]


def _run(fn, *args, **kwargs) -> dict:
    try:
        return fn(*args, **kwargs).to_dict()
    except InputError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except GeometryError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(title="curvkit", version="0.1.0")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/curvature")
    def curvature(req: CurvatureRequest) -> dict:
        return _run(
            handlers.handle_curvature,
            req.scene.model_dump(),
            window=_window_dump(req.window),
            seed=req.seed,
            samples=req.samples,
        )

    @app.post("/gauss-bonnet")
    def gauss_bonnet(req: GaussBonnetRequest) -> dict:
        return _run(
            handlers.handle_gauss_bonnet,
            req.scene.model_dump(),
            samples=req.samples,
            seed=req.seed,
            window=_window_dump(req.window),
        )

    @app.post("/crofton")
    def crofton(req: CroftonRequest) -> dict:
        return _run(
            handlers.handle_crofton,
            req.scene.model_dump(),
            req.k,
            req.m,
            samples=req.samples,
            seed=req.seed,
        )

    @app.post("/detlemma")
    def detlemma(req: DetLemmaRequest) -> dict:
        return _run(
            handlers.handle_detlemma,
            req.dim,
            trials=req.trials,
            seed=req.seed,
            exact=req.exact,
        )

    @app.post("/approx")
    def approx(req: ApproxRequest) -> dict:
        return _run(
            handlers.handle_approx,
            req.scene.model_dump(),
            eps_ladder=req.eps_ladder,
            grid=req.grid,
        )

    @app.post("/index")
    def index(req: IndexRequest) -> dict:
        return _run(
            handlers.handle_index, req.scene.model_dump(), req.point, req.normal
        )

    return app


app = create_app()
