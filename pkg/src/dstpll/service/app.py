"""FastAPI service wrapping the core toolkit.

Every endpoint is a pure function of its JSON body, so identical requests
produce identical responses (CSV payloads included). Fitted models are the
one piece of state: they are kept in an in-process registry so a
long-running service can fit once and answer prediction requests from many
clients.
"""

from __future__ import annotations

import itertools
import threading

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..bench import (
    BenchmarkSettings,
    benchmark_csv,
    cooccurrence_csv,
    risk_curve_csv,
    risk_curve_rows,
    run_benchmark,
    run_selfcheck,
    run_simulation,
    selfcheck_lines,
    simulation_csv,
)
from ..datagen import loads_csv
from ..errors import DstPllError
from ..evidence import LabelSet
from ..oracle import NoiseModel, risk_curve
from ..pll import PllConfig, PllModel, fit, plknn_predict, predict
from . import schemas


def _noise_model(spec) -> NoiseModel:
    return NoiseModel(
        num_classes=spec.num_classes,
        true_label=spec.true_label,
        partner_label=spec.partner_label,
        p1=spec.p1,
        p2=spec.p2,
        p3=spec.p3,
    )


def _config_echo(request, command: str) -> dict:
    cfg = request.model_dump(exclude={"dataset_csv"})
    cfg["command"] = command
    return cfg


class _ModelRegistry:
    def __init__(self):
        self._models: dict[str, PllModel] = {}
        self._ids = itertools.count(1)
        self._lock = threading.Lock()

    def add(self, model: PllModel) -> str:
        with self._lock:
            model_id = f"m{next(self._ids)}"
            self._models[model_id] = model
        return model_id

    def get(self, model_id: str) -> PllModel | None:
        return self._models.get(model_id)

    def remove(self, model_id: str) -> bool:
        with self._lock:
            return self._models.pop(model_id, None) is not None

    def items(self):
        return sorted(self._models.items())


def create_app() -> FastAPI:
    app = FastAPI(title="dstpll", version=__version__)
    registry = _ModelRegistry()

    @app.exception_handler(DstPllError)
    async def _domain_error(_: Request, exc: DstPllError):
        return JSONResponse(
            status_code=400,
            content={"detail": {"error": type(exc).__name__, "message": str(exc)}},
        )

    @app.exception_handler(ValueError)
    async def _value_error(_: Request, exc: ValueError):
        return JSONResponse(
            status_code=400,
            content={"detail": {"error": "ValueError", "message": str(exc)}},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/augment", response_model=schemas.AugmentResponse)
    def augment(req: schemas.AugmentRequest):
        from ..datagen import AugmentSpec, augment as augment_ds, dumps_csv

        ds = loads_csv(req.dataset_csv)
        spec = AugmentSpec(
            fraction=req.fraction,
            false_positives=req.false_positives,
            cooccurrence=req.cooccurrence,
            seed=req.seed,
        )
        out = augment_ds(ds, spec)
        return schemas.AugmentResponse(
            dataset_csv=dumps_csv(out), config=_config_echo(req, "augment")
        )

    @app.post("/benchmark", response_model=schemas.BenchmarkResponse)
    def benchmark(req: schemas.BenchmarkRequest):
        ds = loads_csv(req.dataset_csv)
        settings = BenchmarkSettings(
            methods=tuple(req.methods),
            k=req.k,
            alpha=req.alpha,
            folds=req.folds,
            seed=req.seed,
            betas=tuple(req.betas),
            case2_mode=req.case2_mode,
            standardize=req.standardize,
            jobs=req.jobs,
        )
        rows = run_benchmark(ds, settings)
        return schemas.BenchmarkResponse(
            report_csv=benchmark_csv(rows, settings.betas),
            config=_config_echo(req, "benchmark"),
        )

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest):
        model = _noise_model(req)
        rows = run_simulation(model, req.k_min, req.k_max, req.trials, req.seed)
        return schemas.SimulateResponse(
            table_csv=simulation_csv(rows), config=_config_echo(req, "simulate")
        )

    @app.post("/cooccur", response_model=schemas.CooccurResponse)
    def cooccur(req: schemas.CooccurRequest):
        ds = loads_csv(req.dataset_csv)
        return schemas.CooccurResponse(
            matrix_csv=cooccurrence_csv(ds, req.k),
            config=_config_echo(req, "cooccur"),
        )

    @app.post("/risk-curve", response_model=schemas.RiskCurveResponse)
    def risk(req: schemas.RiskCurveRequest):
        model = _noise_model(req)
        points = risk_curve(
            model, req.n_grid, req.k, req.repetitions, req.seed, queries=req.queries
        )
        rows = risk_curve_rows(points, req.repetitions, req.queries)
        return schemas.RiskCurveResponse(
            curve_csv=risk_curve_csv(rows), config=_config_echo(req, "risk-curve")
        )

    @app.post("/selfcheck", response_model=schemas.SelfcheckResponse)
    def selfcheck(req: schemas.SelfcheckRequest):
        report = run_selfcheck(req.k_max)
        return schemas.SelfcheckResponse(
            ok=report.ok,
            k_max=report.k_max,
            inequality_cases=report.inequality_cases,
            inequality_ok=report.inequality_ok,
            strict_cases=report.strict_cases,
            engine_cases=report.engine_cases,
            max_rel_error=report.max_rel_error,
            lines=selfcheck_lines(report),
        )

    @app.post("/models", response_model=schemas.ModelInfo)
    def fit_model(req: schemas.FitRequest):
        ds = loads_csv(req.dataset_csv)
        config = PllConfig(
            alpha=req.alpha,
            seed=req.seed,
            case2_mode=req.case2_mode,
            standardize=req.standardize,
        )
        model = fit(ds, req.k, config)
        model_id = registry.add(model)
        return schemas.ModelInfo(
            model_id=model_id,
            n_instances=model.n,
            n_features=model.tree.dim,
            num_classes=model.num_classes,
            k=model.k,
        )

    @app.get("/models", response_model=schemas.ModelsResponse)
    def list_models():
        return schemas.ModelsResponse(
            models=[
                schemas.ModelInfo(
                    model_id=model_id,
                    n_instances=m.n,
                    n_features=m.tree.dim,
                    num_classes=m.num_classes,
                    k=m.k,
                )
                for model_id, m in registry.items()
            ]
        )

    @app.post("/models/{model_id}/predict", response_model=schemas.PredictResponse)
    def predict_with_model(model_id: str, req: schemas.PredictRequest):
        model = registry.get(model_id)
        if model is None:
            return JSONResponse(status_code=404, content={"detail": f"no model {model_id}"})
        if req.candidates is not None and len(req.candidates) != len(req.features):
            return JSONResponse(
                status_code=400,
                content={
                    "detail": {
                        "error": "LengthMismatch",
                        "message": "candidates and features differ in length",
                    }
                },
            )
        predictor = predict if req.method == "dst-pll" else plknn_predict
        out = []
        for offset, row in enumerate(req.features):
            frame = None
            if req.candidates is not None:
                frame = LabelSet.from_labels(model.num_classes, req.candidates[offset])
            pred = predictor(model, row, frame, index=req.start_index + offset)
            focal = {
                ";".join(str(lab) for lab in ls): mass
                for ls, mass in sorted(pred.bpa.focal.items(), key=lambda kv: kv[0].bits)
            }
            out.append(
                schemas.PredictionOut(
                    label=pred.label,
                    confident=pred.confident,
                    decision_case=pred.decision_case,
                    focal=focal,
                )
            )
        return schemas.PredictResponse(predictions=out)

    @app.delete("/models/{model_id}", status_code=204)
    def delete_model(model_id: str):
        if not registry.remove(model_id):
            return JSONResponse(status_code=404, content={"detail": f"no model {model_id}"})

    return app
