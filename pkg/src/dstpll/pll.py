"""Nearest-neighbor partial-label classification with evidence fusion.

Each of a query's k nearest training instances contributes a two-focal mass
function over the query's candidate frame; the contributions are fused with
the conflict-reallocating combination rule and a label is extracted from
the fused masses, together with a binary confidence flag. A majority-vote
baseline over the same neighbors is provided for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datagen import PartialDataset, standardize
from .errors import EmptyCandidateSet, FullCandidateSet, KTooLarge, UniverseMismatch
from .evidence import (
    BPA,
    LabelSet,
    singleton_plausibilities,
    vacuous,
    yager_combine,
)
from .neighbors import BallTree

CASE2_MODES = ("literal", "smallest_focal")

#: decision-path tags carried on predictions
CASE_SINGLETON = "singleton_belief"
CASE_FALLBACK = "subset_fallback"


@dataclass(frozen=True)
class PllConfig:
    """Inference-time knobs; defaults follow standard practice.

    ``alpha`` weights a neighbor's support for the whole candidate frame
    against the narrowed overlap (0.5 treats both as equally informative).
    ``case2_mode`` selects how the zero-belief fallback picks a label, see
    :func:`extract_prediction`.
    """

    alpha: float = 0.5
    seed: int = 0
    case2_mode: str = "literal"
    standardize: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha {self.alpha} outside (0, 1)")
        if self.case2_mode not in CASE2_MODES:
            raise ValueError(f"case2_mode {self.case2_mode!r} not in {CASE2_MODES}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class Prediction:
    """A predicted label, whether it is confident, and the fused masses."""

    label: int
    confident: bool
    bpa: BPA
    decision_case: str


class PllModel:
    """Fitted model: a ball tree over training features plus candidate sets.

    Fitting is eager only about the search structure; label inference is
    lazy and happens per query. Instances are immutable after fit, so any
    number of predictions may run concurrently.
    """

    def __init__(self, tree, candidates, k, num_classes, config, shift, scale):
        self.tree: BallTree = tree
        self.candidates: tuple[LabelSet, ...] = candidates
        self.k: int = k
        self.num_classes: int = num_classes
        self.config: PllConfig = config
        self._shift = shift
        self._scale = scale

    @property
    def n(self) -> int:
        return self.tree.n

    def _transform(self, x) -> np.ndarray:
        q = np.asarray(x, dtype=np.float64)
        if self._shift is None:
            return q
        return (q - self._shift) / self._scale


def fit(dataset: PartialDataset, k: int, config: PllConfig | None = None) -> PllModel:
    """Index a partially-labeled training set for k-neighbor inference."""
    config = config or PllConfig()
    n = dataset.n
    if not 1 <= k <= n:
        raise KTooLarge(f"k={k} outside 1..{n}")
    for i, cand in enumerate(dataset.candidates):
        if cand.is_empty:
            raise EmptyCandidateSet(f"training row {i} has no candidates")
        if cand.is_full:
            raise FullCandidateSet(
                f"training row {i} lists every class as candidate (carries no evidence)"
            )
    shift = scale = None
    features = dataset.features
    if config.standardize:
        features, mean, sd = _fit_scaler(dataset.features)
        shift = np.where(sd == 0.0, 0.0, mean)
        scale = np.where(sd == 0.0, 1.0, sd)
    tree = BallTree(features)
    return PllModel(tree, tuple(dataset.candidates), k, dataset.num_classes, config, shift, scale)


def _fit_scaler(features):
    transformed, mean, sd = standardize(features, features)
    return transformed, mean, sd


def neighbor_bpa(s_tilde: LabelSet, s_i: LabelSet, alpha: float = 0.5) -> BPA:
    """Mass function contributed by one neighbor with candidates ``s_i``.

    A neighbor that supports all of the query's frame (covers it) or none
    of it (disjoint) cannot narrow anything down and puts all mass on the
    frame. Otherwise the overlap gets mass 1 - alpha and the frame keeps
    alpha.
    """
    if s_tilde.is_empty:
        raise EmptyCandidateSet("query candidate frame is empty")
    if s_i.is_empty:
        raise EmptyCandidateSet("neighbor candidate set is empty")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha {alpha} outside (0, 1)")
    if s_tilde.issubset(s_i) or s_tilde.isdisjoint(s_i):
        return BPA(s_tilde.width, {s_tilde: 1.0})
    overlap = s_tilde & s_i
    return BPA(s_tilde.width, {s_tilde: alpha, overlap: 1.0 - alpha})


def is_confident(bpa: BPA, s_tilde: LabelSet, label: int) -> bool:
    """Binary confidence: the set of labels at least as plausible as the
    best singleton belief must be exactly {label}."""
    if label not in s_tilde:
        raise ValueError(f"label {label} not in the candidate frame {s_tilde.labels()}")
    width = bpa.universe_size
    max_bel = max(bpa.focal.get(LabelSet.singleton(width, y), 0.0) for y in s_tilde)
    pl = singleton_plausibilities(bpa)
    dominant = [y for y in range(1, width + 1) if pl[y - 1] >= max_bel]
    return dominant == [label]


def extract_prediction(
    mhat: BPA,
    s_tilde: LabelSet,
    *,
    case2_mode: str = "literal",
    seed: int = 0,
    index: int = 0,
) -> Prediction:
    """Turn fused masses into a label and a confidence flag.

    Case 1: some candidate has positive singleton belief; pick the argmax
    (ties to the smallest label) and test confidence. Case 2: no singleton
    support at all. The stated fallback rule maximizes belief over
    non-empty subsets of the frame, but every neighbor keeps mass on the
    whole frame, so the frame's belief of 1 strictly dominates every proper
    subset and the rule degenerates to a uniform draw from the frame; mode
    "literal" implements exactly that. Mode "smallest_focal" instead draws
    uniformly from the smallest best-mass focal subset of the frame.

    Random draws consume a stream derived from (seed, index) so batch order
    cannot change results.
    """
    if case2_mode not in CASE2_MODES:
        raise ValueError(f"case2_mode {case2_mode!r} not in {CASE2_MODES}")
    if s_tilde.is_empty:
        raise EmptyCandidateSet("query candidate frame is empty")
    width = mhat.universe_size
    if s_tilde.width != width:
        raise UniverseMismatch(f"frame width {s_tilde.width} vs universe {width}")

    best_label = 0
    best_bel = 0.0
    for y in s_tilde:
        bel = mhat.focal.get(LabelSet.singleton(width, y), 0.0)
        if bel > best_bel:
            best_bel = bel
            best_label = y
    if best_bel > 0.0:
        return Prediction(
            label=best_label,
            confident=is_confident(mhat, s_tilde, best_label),
            bpa=mhat,
            decision_case=CASE_SINGLETON,
        )

    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    if case2_mode == "literal":
        members = s_tilde.labels()
        label = members[int(rng.integers(len(members)))]
    else:
        subsets = [
            (ls, m) for ls, m in mhat.focal.items() if ls.issubset(s_tilde)
        ]
        # frame mass is always positive, so this is never empty
        ls, _ = min(subsets, key=lambda item: (-item[1], len(item[0]), item[0].bits))
        members = ls.labels()
        label = members[int(rng.integers(len(members)))]
    return Prediction(label=label, confident=False, bpa=mhat, decision_case=CASE_FALLBACK)


def _neighbor_rows(model: PllModel, q: np.ndarray, exclude: int | None) -> list[int]:
    if exclude is None:
        hits = model.tree.query(q, model.k)
        return [i for i, _ in hits]
    if model.k + 1 > model.n:
        raise KTooLarge(f"cannot exclude row {exclude}: only {model.n} rows for k={model.k}")
    hits = model.tree.query(q, model.k + 1)
    rows = [i for i, _ in hits if i != exclude]
    return rows[: model.k]


def _resolve_frame(model: PllModel, s_tilde: LabelSet | None) -> LabelSet:
    if s_tilde is None:
        return LabelSet.full(model.num_classes)
    if s_tilde.width != model.num_classes:
        raise UniverseMismatch(
            f"frame width {s_tilde.width} vs model classes {model.num_classes}"
        )
    if s_tilde.is_empty:
        raise EmptyCandidateSet("query candidate frame is empty")
    return s_tilde


def predict(
    model: PllModel,
    x,
    s_tilde: LabelSet | None = None,
    *,
    index: int = 0,
    exclude: int | None = None,
) -> Prediction:
    """Classify one instance given its candidate frame.

    Pass ``s_tilde=None`` (the full label space) for unseen test instances;
    transductive calls on training rows pass that row's own candidate set
    and may exclude the row itself from the neighbor search. ``index``
    seeds the per-query random stream used by the fallback case.
    """
    frame = _resolve_frame(model, s_tilde)
    q = model._transform(x)
    rows = _neighbor_rows(model, q, exclude)
    cfg = model.config
    sources = [neighbor_bpa(frame, model.candidates[i], cfg.alpha) for i in rows]
    mhat = yager_combine(frame, sources)
    return extract_prediction(
        mhat, frame, case2_mode=cfg.case2_mode, seed=cfg.seed, index=index
    )


def plknn_predict(
    model: PllModel,
    x,
    s_tilde: LabelSet | None = None,
    *,
    index: int = 0,
    exclude: int | None = None,
) -> Prediction:
    """Majority-vote baseline over the same neighbors.

    score(y) counts neighbors whose candidate set contains y, over y in the
    query frame. Confident iff the winning score exceeds half the total
    score mass; with no votes at all the smallest frame label is returned
    unconfidently. The per-label vote shares double as a singleton-only
    mass function so predictions stay uniform across methods.
    """
    frame = _resolve_frame(model, s_tilde)
    q = model._transform(x)
    rows = _neighbor_rows(model, q, exclude)
    width = model.num_classes
    members = frame.labels()
    scores = {y: 0 for y in members}
    for i in rows:
        cand = model.candidates[i]
        for y in members:
            if y in cand:
                scores[y] += 1
    total = sum(scores.values())
    if total == 0:
        return Prediction(
            label=members[0],
            confident=False,
            bpa=vacuous(width),
            decision_case=CASE_FALLBACK,
        )
    label = members[0]
    for y in members:
        if scores[y] > scores[label]:
            label = y
    share = {
        LabelSet.singleton(width, y): s / total for y, s in scores.items() if s > 0
    }
    return Prediction(
        label=label,
        confident=scores[label] / total > 0.5,
        bpa=BPA(width, share),
        decision_case=CASE_SINGLETON,
    )
