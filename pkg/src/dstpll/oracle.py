"""Numerical validation of the classifier's theory.

This module owns the six-case neighborhood label-noise model, exact and
floating-point engines for the closed-form expected belief in the true
label and in its most frequently co-occurring partner, a Monte-Carlo
cross-check that runs the real fusion pipeline, an empirical risk curve on
synthetic cluster geometry, and an exact-arithmetic verification of the
inclusion-exclusion inequality underlying the positivity of the expected
belief.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import comb, exp, lgamma, log

import numpy as np

from .datagen import PartialDataset
from .errors import BudgetExceeded, UniverseMismatch
from .evidence import LabelSet, belief, yager_combine
from .pll import PllConfig, fit, neighbor_bpa, predict

#: admits the 3-class closed form up to k = 60; the term count of the
#: nested sums grows like (k+1)^num_classes * k
DEFAULT_BUDGET = 61**3 * 60

#: synthetic geometry for the risk curve: one cluster per class at a scaled
#: standard-basis vertex with isotropic jitter; at this ratio more than 95%
#: of 15-neighborhoods are label-homogeneous in the noiseless limit, while
#: sparse training sets still mix clusters near boundaries
SIMPLEX_SCALE = 1.0
CLUSTER_JITTER = 0.24

#: frozen default scenario for the empirical risk curve (regression anchor)
DEFAULT_RISK_MODEL_ARGS = (3, 1, 2, 0.45, 0.45, 0.10)
DEFAULT_RISK_GRID = (50, 200, 800, 3200)
DEFAULT_RISK_K = 15
DEFAULT_RISK_TRIALS = 20
DEFAULT_RISK_QUERIES = 200
DEFAULT_RISK_SEED = 0


@dataclass(frozen=True)
class NoiseModel:
    """Six-case distribution of a neighbor's (candidate set, label) pair.

    Within a query's neighborhood the query's true label dominates:
    a neighbor shares it and also lists the partner label with total
    probability p1, shares it without the partner with total probability
    p2, and carries an unrelated candidate set (never containing the true
    label) with total probability p3. Sets equal to the full space or the
    empty set, and sets listing the true label as a false positive, have
    probability zero. Requires p1 >= p2 >= p3 > 0 and p1 + p2 + p3 = 1.
    """

    num_classes: int
    true_label: int
    partner_label: int
    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        l = self.num_classes
        if l < 3:
            raise ValueError(f"need at least 3 classes, got {l}")
        for name in ("true_label", "partner_label"):
            v = getattr(self, name)
            if not 1 <= v <= l:
                raise ValueError(f"{name} {v} outside 1..{l}")
        if self.true_label == self.partner_label:
            raise ValueError("partner label must differ from the true label")
        if not self.p1 >= self.p2 >= self.p3 > 0.0:
            raise ValueError(f"need p1 >= p2 >= p3 > 0, got {(self.p1, self.p2, self.p3)}")
        if abs(self.p1 + self.p2 + self.p3 - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {self.p1 + self.p2 + self.p3!r}, expected 1")


def case_probability(model: NoiseModel, s: LabelSet, y: int) -> float:
    """Exact probability of observing candidate set ``s`` with label ``y``."""
    l = model.num_classes
    if s.width != l:
        raise UniverseMismatch(f"set width {s.width} vs {l} classes")
    if not 1 <= y <= l:
        raise ValueError(f"label {y} outside 1..{l}")
    if s.is_empty or s.is_full:
        return 0.0
    if y not in s:
        return 0.0
    false_labels = s.difference(LabelSet.singleton(l, y))
    if model.true_label in false_labels:
        return 0.0
    if y == model.true_label:
        if model.partner_label in false_labels:
            return model.p1 / (2 ** (l - 2) - 1)
        return model.p2 / 2 ** (l - 2)
    return model.p3 / ((2 ** (l - 1) - 1) * len(s))


@lru_cache(maxsize=64)
def _distribution(model: NoiseModel):
    """All (set bits, label, probability) triples with positive mass."""
    l = model.num_classes
    masks: list[int] = []
    labels: list[int] = []
    probs: list[float] = []
    for bits in range(1, (1 << l) - 1):
        s = LabelSet(l, bits)
        for y in s:
            p = case_probability(model, s, y)
            if p > 0.0:
                masks.append(bits)
                labels.append(y)
                probs.append(p)
    prob_arr = np.asarray(probs, dtype=np.float64)
    return (
        np.asarray(masks, dtype=np.int64),
        np.asarray(labels, dtype=np.int64),
        prob_arr,
        np.cumsum(prob_arr),
    )


def sample_candidate_set(model: NoiseModel, rng: np.random.Generator) -> tuple[LabelSet, int]:
    """Draw one (candidate set, label) pair exactly per case_probability."""
    masks, labels, _, cum = _distribution(model)
    u = rng.random()
    idx = min(int(np.searchsorted(cum, u, side="right")), len(cum) - 1)
    return LabelSet(model.num_classes, int(masks[idx])), int(labels[idx])


def _sample_mask_rows(model: NoiseModel, rng: np.random.Generator, rows: int, cols: int):
    masks, _, _, cum = _distribution(model)
    u = rng.random(rows * cols)
    idx = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
    return masks[idx].reshape(rows, cols)


def _check_budget(model: NoiseModel, k: int, budget: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    work = (k + 1) ** model.num_classes * k
    if work > budget:
        raise BudgetExceeded(
            f"closed form needs ~{work} terms for k={k}, {model.num_classes} classes "
            f"(budget {budget})"
        )


def _belief_sum_float(k: int, l: int, log_in: float, log_out: float) -> float:
    """Shared nested-sum engine in log-space with sign tracking.

    Counts the label-membership patterns of the non-ignorant intersection
    partners (inclusion-exclusion removes patterns where a set would cover
    every class, which has probability zero) and weighs each pattern by its
    per-set probabilities. ``log_in`` is the log-probability of a set that
    contains the anchor label's companion, ``log_out`` of one that does
    not; binomials go through a log-gamma table, and the alternating
    inclusion-exclusion sum is accumulated with explicit signs.
    """
    lg = [lgamma(i + 1.0) for i in range(k + 1)]

    def lb(n: int, r: int) -> float:
        return lg[n] - lg[r] - lg[n - r]

    log_half_k = k * log(2.0)
    total = 0.0
    for h in range(k):
        kh = k - h
        log_choose_h = lb(k, h)
        for i in range(kh):
            weight = exp(log_choose_h + i * log_in + (kh - i) * log_out - log_half_k)
            lci = lb(kh, i)
            for js in product(range(kh), repeat=l - 2):
                lcount = lci
                for j in js:
                    lcount += lb(kh, j)
                count = exp(lcount)
                over = 0.0
                for b in range(1, min(i, *js) + 1):
                    lt = lb(kh, b) + lb(kh - b, i - b)
                    for j in js:
                        lt += lb(kh - b, j - b)
                    over += exp(lt) if b % 2 == 1 else -exp(lt)
                total += (count - over) * weight
    return total


def _belief_sum_exact(k: int, l: int, in_p: Fraction, out_p: Fraction) -> Fraction:
    """Same nested sums in exact big-integer/rational arithmetic."""
    total = Fraction(0)
    half_k = Fraction(1, 2**k)
    for h in range(k):
        kh = k - h
        choose_h = comb(k, h)
        for i in range(kh):
            weight = choose_h * in_p**i * out_p ** (kh - i) * half_k
            ci = comb(kh, i)
            for js in product(range(kh), repeat=l - 2):
                count = ci
                for j in js:
                    count *= comb(kh, j)
                over = 0
                for b in range(1, min(i, *js) + 1):
                    t = comb(kh, b) * comb(kh - b, i - b)
                    for j in js:
                        t *= comb(kh - b, j - b)
                    over += t if b % 2 == 1 else -t
                total += (count - over) * weight
    return total


def expected_belief_true(model: NoiseModel, k: int, budget: int = DEFAULT_BUDGET) -> float:
    """Closed-form expected fused belief in the true label after k neighbors."""
    _check_budget(model, k, budget)
    l = model.num_classes
    log_in = log(model.p1) - log(2 ** (l - 2) - 1)
    log_out = log(model.p2) - (l - 2) * log(2.0)
    return _belief_sum_float(k, l, log_in, log_out)


def expected_belief_cooccur(model: NoiseModel, k: int, budget: int = DEFAULT_BUDGET) -> float:
    """Closed-form expected fused belief in the most co-occurring partner label."""
    _check_budget(model, k, budget)
    l = model.num_classes
    log_in = log(model.p1) - log(2 ** (l - 2) - 1)
    log_out = log(model.p3) - log(2 ** (l - 1) - 1)
    return _belief_sum_float(k, l, log_in, log_out)


def expected_belief_true_exact(model: NoiseModel, k: int, budget: int = DEFAULT_BUDGET) -> Fraction:
    """Exact-rational twin of :func:`expected_belief_true` (validation engine)."""
    _check_budget(model, k, budget)
    l = model.num_classes
    in_p = Fraction(model.p1) / (2 ** (l - 2) - 1)
    out_p = Fraction(model.p2) / 2 ** (l - 2)
    return _belief_sum_exact(k, l, in_p, out_p)


def expected_belief_cooccur_exact(
    model: NoiseModel, k: int, budget: int = DEFAULT_BUDGET
) -> Fraction:
    """Exact-rational twin of :func:`expected_belief_cooccur`."""
    _check_budget(model, k, budget)
    l = model.num_classes
    in_p = Fraction(model.p1) / (2 ** (l - 2) - 1)
    out_p = Fraction(model.p3) / (2 ** (l - 1) - 1)
    return _belief_sum_exact(k, l, in_p, out_p)


@dataclass(frozen=True)
class SimulationResult:
    mean_true: float
    mean_cooccur: float
    stderr_true: float
    stderr_cooccur: float


def simulate_expected_belief(
    model: NoiseModel, k: int, trials: int, seed: int
) -> SimulationResult:
    """Monte-Carlo estimate of both expected beliefs via the real pipeline.

    Each trial draws k candidate sets from the noise model, builds the
    per-neighbor mass functions for a test query (frame = full label
    space), fuses them with the combination rule, and records the fused
    belief in the true and partner labels. Deterministic per seed.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    l = model.num_classes
    rng = np.random.default_rng(seed)
    mask_rows = _sample_mask_rows(model, rng, trials, k)
    frame = LabelSet.full(l)
    bpas = {
        bits: neighbor_bpa(frame, LabelSet(l, int(bits)), 0.5)
        for bits in np.unique(mask_rows)
    }
    s_true = LabelSet.singleton(l, model.true_label)
    s_partner = LabelSet.singleton(l, model.partner_label)
    # fusion is permutation-invariant, so trials that drew the same multiset
    # of candidate sets share one combination
    unique_rows, inverse = np.unique(np.sort(mask_rows, axis=1), axis=0, return_inverse=True)
    uniq_true = np.empty(len(unique_rows))
    uniq_partner = np.empty(len(unique_rows))
    for u, row in enumerate(unique_rows):
        fused = yager_combine(frame, [bpas[bits] for bits in row])
        uniq_true[u] = belief(fused, s_true)
        uniq_partner[u] = belief(fused, s_partner)
    bel_true = uniq_true[inverse]
    bel_partner = uniq_partner[inverse]
    def _stderr(values: np.ndarray) -> float:
        if trials < 2:
            return 0.0
        return float(values.std(ddof=1) / np.sqrt(trials))
    return SimulationResult(
        mean_true=float(bel_true.mean()),
        mean_cooccur=float(bel_partner.mean()),
        stderr_true=_stderr(bel_true),
        stderr_cooccur=_stderr(bel_partner),
    )


@dataclass(frozen=True)
class RiskPoint:
    n: int
    mean_risk: float
    std_risk: float


def _cluster_models(model: NoiseModel) -> list[NoiseModel]:
    # each cluster anchors the noise model at its own class with a cyclic
    # partner assignment
    l = model.num_classes
    return [
        replace(model, true_label=c, partner_label=(c % l) + 1) for c in range(1, l + 1)
    ]


def risk_curve(
    model: NoiseModel,
    n_grid: list[int],
    k: int,
    trials: int,
    seed: int,
    queries: int = 200,
) -> list[RiskPoint]:
    """Empirical 0-1 risk of the classifier for growing training sizes.

    The noise model says nothing about features, so training data is
    synthesized on a fixed geometry: one Gaussian cluster per class at a
    scaled standard-basis vertex (d = number of classes, jitter
    CLUSTER_JITTER), candidate sets drawn from the cluster's anchored noise
    model. Risk is the error of full-frame predictions on fresh query
    points against their cluster class, averaged over ``trials``
    repetitions per training size.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    for n in n_grid:
        if n < k:
            raise ValueError(f"training size {n} below k={k}")
    l = model.num_classes
    centers = np.eye(l) * SIMPLEX_SCALE
    per_cluster = _cluster_models(model)
    risks = np.empty((trials, len(n_grid)))
    for rep in range(trials):
        for gi, n in enumerate(n_grid):
            rng = np.random.default_rng(np.random.SeedSequence([seed, rep, gi]))
            clusters = rng.integers(1, l + 1, size=n)
            feats = centers[clusters - 1] + rng.normal(0.0, CLUSTER_JITTER, size=(n, l))
            candidates: list[LabelSet | None] = [None] * n
            for c in range(1, l + 1):
                rows = np.nonzero(clusters == c)[0]
                if rows.size:
                    masks = _sample_mask_rows(per_cluster[c - 1], rng, rows.size, 1)
                    for pos, row in enumerate(rows):
                        candidates[row] = LabelSet(l, int(masks[pos, 0]))
            ds = PartialDataset(feats, candidates, None, l)
            fit_seed = int(np.random.SeedSequence([seed, rep, gi, 1]).generate_state(1)[0])
            fitted = fit(ds, k, PllConfig(seed=fit_seed, standardize=False))
            q_clusters = rng.integers(1, l + 1, size=queries)
            q_feats = centers[q_clusters - 1] + rng.normal(0.0, CLUSTER_JITTER, size=(queries, l))
            errors = 0
            for qi in range(queries):
                pred = predict(fitted, q_feats[qi], index=qi)
                errors += pred.label != q_clusters[qi]
            risks[rep, gi] = errors / queries
    points = []
    for gi, n in enumerate(n_grid):
        col = risks[:, gi]
        std = float(col.std(ddof=1)) if trials > 1 else 0.0
        points.append(RiskPoint(n=n, mean_risk=float(col.mean()), std_risk=std))
    return points


@dataclass(frozen=True)
class BinomialCheckReport:
    """Outcome of the exact-arithmetic verification run."""

    k_max: int
    inequality_cases: int
    inequality_ok: bool
    strict_cases: int
    engine_cases: int
    max_rel_error: float
    ok: bool


#: the reference model used for the float-vs-exact engine comparison
ENGINE_CHECK_MODEL_ARGS = (3, 1, 2, 0.4, 0.35, 0.25)


def exact_binomial_check(k_max: int = 12) -> BinomialCheckReport:
    """Exhaustively verify the inclusion-exclusion bound and the float engine.

    Part one checks, in exact integer arithmetic for 3 and 4 classes and
    every admissible (h, i, j_a) combination up to ``k_max`` intersection
    partners, that the unconstrained pattern count dominates the
    inclusion-exclusion overcount (the inequality that makes the expected
    belief in the true label strictly positive). Part two compares the
    log-gamma closed-form engine against the exact rational engine on both
    expectations for 3 classes, k up to 20.
    """
    if not 1 <= k_max <= 20:
        raise ValueError(f"k_max {k_max} outside 1..20")
    cases = 0
    strict = 0
    ok = True
    for l in (3, 4):
        for k in range(1, k_max + 1):
            for h in range(k):
                kh = k - h
                for i in range(kh):
                    ci = comb(kh, i)
                    for js in product(range(kh), repeat=l - 2):
                        lhs = ci
                        for j in js:
                            lhs *= comb(kh, j)
                        rhs = 0
                        for b in range(1, min(i, *js) + 1):
                            t = comb(kh, b) * comb(kh - b, i - b)
                            for j in js:
                                t *= comb(kh - b, j - b)
                            rhs += t if b % 2 == 1 else -t
                        cases += 1
                        if lhs < rhs:
                            ok = False
                        elif lhs > rhs:
                            strict += 1

    engine_model = NoiseModel(*ENGINE_CHECK_MODEL_ARGS)
    engine_cases = 0
    max_rel = 0.0
    for k in range(1, 21):
        for float_fn, exact_fn in (
            (expected_belief_true, expected_belief_true_exact),
            (expected_belief_cooccur, expected_belief_cooccur_exact),
        ):
            approx = Fraction(float_fn(engine_model, k))
            exact = exact_fn(engine_model, k)
            rel = float(abs(approx - exact) / exact)
            max_rel = max(max_rel, rel)
            engine_cases += 1
    return BinomialCheckReport(
        k_max=k_max,
        inequality_cases=cases,
        inequality_ok=ok,
        strict_cases=strict,
        engine_cases=engine_cases,
        max_rel_error=max_rel,
        ok=ok and max_rel < 1e-9,
    )
