"""Request and response bodies for the HTTP service.

Datasets travel inline as CSV text (the same format the file loader
reads), so the service itself never touches the filesystem and stays a
pure function of its inputs.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..bench import DEFAULT_BETAS
from ..oracle import (
    DEFAULT_RISK_GRID,
    DEFAULT_RISK_K,
    DEFAULT_RISK_MODEL_ARGS,
    DEFAULT_RISK_QUERIES,
    DEFAULT_RISK_TRIALS,
)

Method = Literal["dst-pll", "pl-knn"]
Case2Mode = Literal["literal", "smallest_focal"]


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HealthResponse(Strict):
    status: str
    version: str


class AugmentRequest(Strict):
    dataset_csv: str
    fraction: float = Field(ge=0.0, le=1.0)
    false_positives: int = Field(default=1, ge=1)
    cooccurrence: float | None = Field(default=None, ge=0.0, le=1.0)
    seed: int = Field(default=0, ge=0)


class AugmentResponse(Strict):
    dataset_csv: str
    config: dict


class BenchmarkRequest(Strict):
    dataset_csv: str
    methods: list[Method] = Field(default=["dst-pll", "pl-knn"], min_length=1)
    k: int = Field(default=10, ge=1)
    alpha: float = Field(default=0.5, gt=0.0, lt=1.0)
    folds: int = Field(default=5, ge=2)
    betas: list[float] = Field(default=list(DEFAULT_BETAS), min_length=1)
    case2_mode: Case2Mode = "literal"
    standardize: bool = True
    jobs: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)


class BenchmarkResponse(Strict):
    report_csv: str
    config: dict


class NoiseModelSpec(Strict):
    num_classes: int = Field(default=3, ge=3)
    true_label: int = Field(default=1, ge=1)
    partner_label: int = Field(default=2, ge=1)
    p1: float = Field(default=0.4, gt=0.0, lt=1.0)
    p2: float = Field(default=0.35, gt=0.0, lt=1.0)
    p3: float = Field(default=0.25, gt=0.0, lt=1.0)


class SimulateRequest(NoiseModelSpec):
    k_min: int = Field(default=1, ge=1)
    k_max: int = Field(default=15, ge=1)
    trials: int = Field(default=100_000, ge=1)
    seed: int = Field(default=0, ge=0)


class SimulateResponse(Strict):
    table_csv: str
    config: dict


class CooccurRequest(Strict):
    dataset_csv: str
    k: int = Field(default=10, ge=1)


class CooccurResponse(Strict):
    matrix_csv: str
    config: dict


class RiskCurveRequest(NoiseModelSpec):
    num_classes: int = Field(default=DEFAULT_RISK_MODEL_ARGS[0], ge=3)
    true_label: int = Field(default=DEFAULT_RISK_MODEL_ARGS[1], ge=1)
    partner_label: int = Field(default=DEFAULT_RISK_MODEL_ARGS[2], ge=1)
    p1: float = Field(default=DEFAULT_RISK_MODEL_ARGS[3], gt=0.0, lt=1.0)
    p2: float = Field(default=DEFAULT_RISK_MODEL_ARGS[4], gt=0.0, lt=1.0)
    p3: float = Field(default=DEFAULT_RISK_MODEL_ARGS[5], gt=0.0, lt=1.0)
    n_grid: list[int] = Field(default=list(DEFAULT_RISK_GRID), min_length=1)
    k: int = Field(default=DEFAULT_RISK_K, ge=1)
    repetitions: int = Field(default=DEFAULT_RISK_TRIALS, ge=1)
    queries: int = Field(default=DEFAULT_RISK_QUERIES, ge=1)
    seed: int = Field(default=0, ge=0)


class RiskCurveResponse(Strict):
    curve_csv: str
    config: dict


class SelfcheckRequest(Strict):
    k_max: int = Field(default=12, ge=1, le=20)


class SelfcheckResponse(Strict):
    ok: bool
    k_max: int
    inequality_cases: int
    inequality_ok: bool
    strict_cases: int
    engine_cases: int
    max_rel_error: float
    lines: list[str]


class FitRequest(Strict):
    dataset_csv: str
    k: int = Field(default=10, ge=1)
    alpha: float = Field(default=0.5, gt=0.0, lt=1.0)
    case2_mode: Case2Mode = "literal"
    standardize: bool = True
    seed: int = Field(default=0, ge=0)


class ModelInfo(Strict):
    model_id: str
    n_instances: int
    n_features: int
    num_classes: int
    k: int


class ModelsResponse(Strict):
    models: list[ModelInfo]


class PredictRequest(Strict):
    features: list[list[float]] = Field(min_length=1)
    candidates: list[list[int]] | None = None
    method: Method = "dst-pll"
    start_index: int = Field(default=0, ge=0)


class PredictionOut(Strict):
    label: int
    confident: bool
    decision_case: str
    focal: dict[str, float]


class PredictResponse(Strict):
    predictions: list[PredictionOut]
