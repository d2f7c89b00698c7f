"""Experiment orchestration and CSV emission for the service and CLI.

All runners are pure functions of (dataset, settings, seed); reruns produce
byte-identical CSV text. Fold-level work can fan out over a thread pool,
and results are always assembled in (method, fold) order regardless of
completion order.
"""

from __future__ import annotations

import io
import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .datagen import PartialDataset, kfold, take
from .errors import TruthMissing
from .metrics import REPORT_COLUMNS, EvalReport, cooccurrence_matrix, evaluate, tradeoff
from .oracle import (
    BinomialCheckReport,
    NoiseModel,
    RiskPoint,
    exact_binomial_check,
    expected_belief_cooccur,
    expected_belief_true,
    risk_curve,
    simulate_expected_belief,
)
from .pll import PllConfig, fit, plknn_predict, predict

METHODS = ("dst-pll", "pl-knn")

DEFAULT_BETAS = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def beta_column(beta: float) -> str:
    return f"o_beta_{beta:g}"


@dataclass(frozen=True)
class BenchmarkSettings:
    methods: tuple[str, ...] = METHODS
    k: int = 10
    alpha: float = 0.5
    folds: int = 5
    seed: int = 0
    betas: tuple[float, ...] = DEFAULT_BETAS
    case2_mode: str = "literal"
    standardize: bool = True
    jobs: int = 1

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}, expected subset of {METHODS}")
        if not self.methods:
            raise ValueError("need at least one method")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


def evaluate_fold(
    ds: PartialDataset, train_idx, test_idx, method: str, settings: BenchmarkSettings
) -> EvalReport:
    """Fit on the train rows and score full-frame predictions on the test rows."""
    config = PllConfig(
        alpha=settings.alpha,
        seed=settings.seed,
        case2_mode=settings.case2_mode,
        standardize=settings.standardize,
    )
    model = fit(take(ds, train_idx), settings.k, config)
    predictor = predict if method == "dst-pll" else plknn_predict
    preds = [
        predictor(model, ds.features[int(row)], index=int(row)) for row in test_idx
    ]
    truth = [ds.truth[int(row)] for row in test_idx]
    return evaluate(truth, preds, ds.num_classes)


def run_benchmark(ds: PartialDataset, settings: BenchmarkSettings) -> list[dict]:
    """Cross-validated scores per (method, fold) plus mean/std aggregate rows."""
    if ds.truth is None:
        raise TruthMissing("benchmarking needs ground-truth labels")
    splits = kfold(ds, settings.folds, settings.seed)
    tasks = [(m, fi) for m in settings.methods for fi in range(len(splits))]

    def run_task(task):
        method, fi = task
        train_idx, test_idx = splits[fi]
        return evaluate_fold(ds, train_idx, test_idx, method, settings)

    if settings.jobs > 1:
        with ThreadPoolExecutor(max_workers=settings.jobs) as pool:
            reports = list(pool.map(run_task, tasks))
    else:
        reports = [run_task(t) for t in tasks]

    rows: list[dict] = []
    for (method, fi), report in zip(tasks, reports):
        row = {"method": method, "fold": str(fi)}
        row.update(zip(REPORT_COLUMNS, report.to_row()))
        for beta in settings.betas:
            row[beta_column(beta)] = tradeoff(
                max(report.mcc_confident, 0.0), report.frac_confident, beta
            )
        rows.append(row)

    numeric = list(REPORT_COLUMNS) + [beta_column(b) for b in settings.betas]
    aggregated: list[dict] = []
    for method in settings.methods:
        fold_rows = [r for r in rows if r["method"] == method]
        for stat in ("mean", "std"):
            agg = {"method": method, "fold": stat}
            for col in numeric:
                values = np.asarray([r[col] for r in fold_rows], dtype=np.float64)
                agg[col] = float(values.mean() if stat == "mean" else values.std(ddof=1))
            aggregated.append(agg)
    return rows + aggregated


def benchmark_columns(betas=DEFAULT_BETAS) -> list[str]:
    return ["method", "fold", *REPORT_COLUMNS, *(beta_column(b) for b in betas)]


def benchmark_csv(rows: list[dict], betas=DEFAULT_BETAS) -> str:
    header = benchmark_columns(betas)
    return _csv_text(header, [[row[col] for col in header] for row in rows])


SIMULATION_COLUMNS = [
    "k",
    "closed_true",
    "closed_cooccur",
    "sim_true",
    "sim_cooccur",
    "stderr_true",
    "stderr_cooccur",
]


def run_simulation(
    model: NoiseModel, k_min: int, k_max: int, trials: int, seed: int
) -> list[dict]:
    """Closed-form vs Monte-Carlo expected beliefs for each neighbor count."""
    if k_min < 1 or k_max < k_min:
        raise ValueError(f"bad neighbor range {k_min}..{k_max}")
    rows = []
    for k in range(k_min, k_max + 1):
        # independent per-k streams so the sweep can be re-split freely
        sim_seed = int(np.random.SeedSequence([seed, k]).generate_state(1)[0])
        sim = simulate_expected_belief(model, k, trials, sim_seed)
        rows.append(
            {
                "k": k,
                "closed_true": expected_belief_true(model, k),
                "closed_cooccur": expected_belief_cooccur(model, k),
                "sim_true": sim.mean_true,
                "sim_cooccur": sim.mean_cooccur,
                "stderr_true": sim.stderr_true,
                "stderr_cooccur": sim.stderr_cooccur,
            }
        )
    return rows


def simulation_csv(rows: list[dict]) -> str:
    return _csv_text(
        SIMULATION_COLUMNS, [[row[c] for c in SIMULATION_COLUMNS] for row in rows]
    )


RISK_COLUMNS = ["n", "mean_risk", "std_risk", "repetitions", "queries"]


def risk_curve_rows(points: list[RiskPoint], trials: int, queries: int) -> list[dict]:
    return [
        {
            "n": p.n,
            "mean_risk": p.mean_risk,
            "std_risk": p.std_risk,
            "repetitions": trials,
            "queries": queries,
        }
        for p in points
    ]


def risk_curve_csv(rows: list[dict]) -> str:
    return _csv_text(RISK_COLUMNS, [[row[c] for c in RISK_COLUMNS] for row in rows])


def cooccurrence_csv(ds: PartialDataset, k: int) -> str:
    """Label-by-label neighborhood candidate counts, one row per true label."""
    counts = cooccurrence_matrix(ds, k)
    l = ds.num_classes
    header = ["true_label"] + [f"label_{j}" for j in range(1, l + 1)]
    rows = [[t + 1, *counts[t].tolist()] for t in range(l)]
    return _csv_text(header, rows)


def selfcheck_lines(report: BinomialCheckReport) -> list[str]:
    """Human-readable summary of an exact-arithmetic verification run."""
    return [
        f"inclusion-exclusion bound: {report.inequality_cases} cases up to "
        f"k={report.k_max}, holds={report.inequality_ok}, strict in {report.strict_cases}",
        f"float engine vs exact engine: {report.engine_cases} values, "
        f"max relative error {report.max_rel_error:.3e}",
        f"overall: {'ok' if report.ok else 'FAILED'}",
    ]


def run_selfcheck(k_max: int = 12) -> BinomialCheckReport:
    return exact_binomial_check(k_max)
