"""Dataset I/O, candidate-label augmentation, and cross-validation splits.

Datasets are CSV with a header row: feature columns named f0..f{d-1}, an
optional ``candidates`` column holding semicolon-separated 1-based label
indices, and an optional ``label`` column with the ground truth. A
supervised file (label only) loads with singleton candidate sets.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyCandidateSet,
    EmptyInput,
    ParseError,
    RTooLarge,
    TooManyFolds,
    TruthMissing,
    TruthNotInCandidates,
    UniverseMismatch,
)
from .evidence import LabelSet


@dataclass
class PartialDataset:
    """n instances of d real features with candidate label sets.

    ``truth`` is optional and only ever used for evaluation and for
    augmentation; the classifiers never see it. Invariant: every candidate
    set is non-empty and, when truth is present, contains its true label.
    """

    features: np.ndarray
    candidates: list[LabelSet]
    truth: list[int] | None
    num_classes: int
    names: list[str] | None = field(default=None)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise EmptyInput(f"features must be n x d with n >= 1, got {self.features.shape}")
        n = self.features.shape[0]
        if len(self.candidates) != n:
            raise EmptyInput(f"{len(self.candidates)} candidate sets for {n} rows")
        for i, cand in enumerate(self.candidates):
            if cand.width != self.num_classes:
                raise UniverseMismatch(
                    f"row {i}: candidate width {cand.width} vs {self.num_classes} classes"
                )
            if cand.is_empty:
                raise EmptyCandidateSet(f"row {i}: empty candidate set")
        if self.truth is not None:
            if len(self.truth) != n:
                raise EmptyInput(f"{len(self.truth)} truth labels for {n} rows")
            for i, y in enumerate(self.truth):
                if not 1 <= y <= self.num_classes:
                    raise ParseError(f"row {i}: label {y} outside 1..{self.num_classes}")
                if y not in self.candidates[i]:
                    raise TruthNotInCandidates(
                        f"row {i}: label {y} not in candidates {self.candidates[i].labels()}"
                    )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def is_supervised(self) -> bool:
        """True when every candidate set is a singleton (clean labels)."""
        return all(len(c) == 1 for c in self.candidates)


def take(ds: PartialDataset, indices) -> PartialDataset:
    """Row subset as a new dataset (same label space)."""
    idx = [int(i) for i in indices]
    return PartialDataset(
        features=ds.features[idx],
        candidates=[ds.candidates[i] for i in idx],
        truth=None if ds.truth is None else [ds.truth[i] for i in idx],
        num_classes=ds.num_classes,
        names=ds.names,
    )


@dataclass(frozen=True)
class AugmentSpec:
    """Parameters of the controlled label-noise protocol.

    ``false_positives`` distinct wrong labels are added to a ``fraction``
    of the instances. ``cooccurrence`` (only valid with one false positive)
    is the probability that the added label is the true label's fixed
    partner class rather than a uniform draw.
    """

    fraction: float
    false_positives: int = 1
    cooccurrence: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction {self.fraction} outside [0, 1]")
        if self.false_positives < 1:
            raise RTooLarge("need at least one false-positive label")
        if self.cooccurrence is not None:
            if self.false_positives != 1:
                raise ValueError("cooccurrence degree requires exactly one false positive")
            if not 0.0 <= self.cooccurrence <= 1.0:
                raise ValueError(f"cooccurrence {self.cooccurrence} outside [0, 1]")


def load_csv(path, num_classes: int | None = None) -> PartialDataset:
    """Parse a dataset CSV file (see module docstring for the schema)."""
    with open(path, newline="", encoding="utf-8") as fh:
        return loads_csv(fh.read(), num_classes=num_classes, source=str(path))


def loads_csv(text: str, num_classes: int | None = None, source: str = "<csv>") -> PartialDataset:
    """Parse dataset CSV text (see module docstring for the schema)."""
    path = source
    with io.StringIO(text, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path}: empty file")
        feature_cols: list[tuple[int, int]] = []  # (column position, feature index)
        cand_col = None
        label_col = None
        for pos, name in enumerate(header):
            name = name.strip()
            if name == "candidates":
                cand_col = pos
            elif name == "label":
                label_col = pos
            elif name.startswith("f") and name[1:].isdigit():
                feature_cols.append((pos, int(name[1:])))
            else:
                raise ParseError(f"row 1, column {pos + 1}: unknown column {name!r}")
        if not feature_cols:
            raise ParseError(f"{path}: no feature columns f0..f{{d-1}} in header")
        feature_cols.sort(key=lambda pc: pc[1])
        if [fi for _, fi in feature_cols] != list(range(len(feature_cols))):
            raise ParseError(f"{path}: feature columns must be f0..f{len(feature_cols) - 1}")
        if cand_col is None and label_col is None:
            raise ParseError(f"{path}: need a 'candidates' or 'label' column")

        rows: list[list[float]] = []
        cand_lists: list[list[int]] = []
        truth: list[int] = []
        for line, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ParseError(f"row {line}: {len(rec)} fields, header has {len(header)}")
            feats = []
            for pos, fi in feature_cols:
                try:
                    v = float(rec[pos])
                except ValueError:
                    raise ParseError(f"row {line}, column f{fi}: not a number: {rec[pos]!r}")
                if not math.isfinite(v):
                    raise ParseError(f"row {line}, column f{fi}: non-finite value {rec[pos]!r}")
                feats.append(v)
            rows.append(feats)
            if label_col is not None:
                try:
                    y = int(rec[label_col])
                except ValueError:
                    raise ParseError(f"row {line}, column label: not an integer: {rec[label_col]!r}")
                if y < 1:
                    raise ParseError(f"row {line}, column label: label {y} must be >= 1")
                truth.append(y)
            if cand_col is not None:
                cell = rec[cand_col].strip()
                if not cell:
                    raise EmptyCandidateSet(f"row {line}: empty candidates cell")
                try:
                    labels = [int(part) for part in cell.split(";")]
                except ValueError:
                    raise ParseError(f"row {line}, column candidates: bad cell {cell!r}")
                if any(lab < 1 for lab in labels):
                    raise ParseError(f"row {line}, column candidates: labels must be >= 1")
                cand_lists.append(labels)
            else:
                cand_lists.append([truth[-1]])

    if not rows:
        raise ParseError(f"{path}: no data rows")
    seen_max = max(max(c) for c in cand_lists)
    if truth:
        seen_max = max(seen_max, max(truth))
    l = num_classes if num_classes is not None else seen_max
    if seen_max > l:
        raise ParseError(f"{path}: label {seen_max} exceeds declared class count {l}")
    candidates = [LabelSet.from_labels(l, labs) for labs in cand_lists]
    return PartialDataset(
        features=np.asarray(rows, dtype=np.float64),
        candidates=candidates,
        truth=truth if truth else None,
        num_classes=l,
    )


def dumps_csv(ds: PartialDataset) -> str:
    """Dataset as CSV text in the format :func:`loads_csv` reads (round-trips)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = [f"f{j}" for j in range(ds.dim)] + ["candidates"]
    if ds.truth is not None:
        header.append("label")
    writer.writerow(header)
    for i in range(ds.n):
        rec = [repr(float(v)) for v in ds.features[i]]
        rec.append(";".join(str(lab) for lab in ds.candidates[i]))
        if ds.truth is not None:
            rec.append(str(ds.truth[i]))
        writer.writerow(rec)
    return buf.getvalue()


def save_csv(ds: PartialDataset, path) -> None:
    """Write a dataset CSV file (round-trips through :func:`load_csv`)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(dumps_csv(ds))


def _require_clean(ds: PartialDataset, op: str) -> None:
    if ds.truth is None:
        raise TruthMissing(f"{op} needs ground-truth labels")
    if not ds.is_supervised:
        raise ValueError(f"{op} expects a supervised dataset (singleton candidates)")


def _affected_rows(rng: np.random.Generator, n: int, fraction: float) -> set[int]:
    # round to nearest, ties up
    count = math.floor(fraction * n + 0.5)
    return set(int(i) for i in rng.choice(n, size=count, replace=False))


def augment_uniform(
    ds: PartialDataset, false_positives: int, fraction: float, seed: int
) -> PartialDataset:
    """Add ``false_positives`` uniformly random wrong labels to a fraction of rows.

    Exactly round(fraction * n) rows, chosen without replacement, receive
    distinct wrong labels drawn uniformly from the non-true classes. Truth
    is unchanged and candidate sets never grow to the full label space.
    """
    _require_clean(ds, "augment_uniform")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction {fraction} outside [0, 1]")
    l = ds.num_classes
    if not 1 <= false_positives <= l - 2:
        raise RTooLarge(
            f"{false_positives} false positives impossible with {l} classes "
            f"(candidate sets must stay below the full label space)"
        )
    rng = np.random.default_rng(seed)
    affected = _affected_rows(rng, ds.n, fraction)
    candidates = list(ds.candidates)
    for i in range(ds.n):
        if i not in affected:
            continue
        y = ds.truth[i]
        picks = rng.choice(l - 1, size=false_positives, replace=False)
        extras = [int(p) + 1 if int(p) + 1 < y else int(p) + 2 for p in picks]
        candidates[i] = LabelSet.from_labels(l, [y, *extras])
    return PartialDataset(ds.features, candidates, list(ds.truth), l, ds.names)


def partner_map(num_classes: int, seed: int) -> list[int]:
    """A fixed-point-free partner assignment c(y) != y, drawn once per seed."""
    rng = np.random.default_rng(seed)
    while True:
        perm = rng.permutation(num_classes)
        if not np.any(perm == np.arange(num_classes)):
            return [int(p) + 1 for p in perm]


def augment_cooccur(
    ds: PartialDataset, fraction: float, cooccurrence: float, seed: int
) -> PartialDataset:
    """Add one wrong label per affected row, biased toward a fixed partner class.

    A partner map c(y) != y is drawn once from the seed. Each affected row
    gets c(y) with probability ``cooccurrence``, otherwise a uniform label
    outside {y, c(y)}.
    """
    _require_clean(ds, "augment_cooccur")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction {fraction} outside [0, 1]")
    if not 0.0 <= cooccurrence <= 1.0:
        raise ValueError(f"cooccurrence {cooccurrence} outside [0, 1]")
    l = ds.num_classes
    if l < 3:
        raise RTooLarge("cooccurrence augmentation needs at least 3 classes")
    rng = np.random.default_rng(seed)
    partners = partner_map(l, seed)
    affected = _affected_rows(rng, ds.n, fraction)
    candidates = list(ds.candidates)
    for i in range(ds.n):
        if i not in affected:
            continue
        y = ds.truth[i]
        partner = partners[y - 1]
        if rng.random() < cooccurrence:
            extra = partner
        else:
            others = [lab for lab in range(1, l + 1) if lab != y and lab != partner]
            extra = others[int(rng.integers(len(others)))]
        candidates[i] = LabelSet.from_labels(l, [y, extra])
    return PartialDataset(ds.features, candidates, list(ds.truth), l, ds.names)


def augment(ds: PartialDataset, spec: AugmentSpec) -> PartialDataset:
    if spec.cooccurrence is not None:
        return augment_cooccur(ds, spec.fraction, spec.cooccurrence, spec.seed)
    return augment_uniform(ds, spec.false_positives, spec.fraction, spec.seed)


def kfold(ds: PartialDataset, folds: int, seed: int):
    """Disjoint covering folds (sizes differ by at most one), seeded shuffle.

    Returns [(train_indices, test_indices), ...]; callers present test
    instances to the classifier with the full label space as candidates.
    """
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    n = ds.n
    if folds > n:
        raise TooManyFolds(f"{folds} folds for {n} instances")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    base, extra = divmod(n, folds)
    splits = []
    offset = 0
    for fi in range(folds):
        size = base + (1 if fi < extra else 0)
        test = np.sort(perm[offset : offset + size])
        train = np.sort(np.concatenate([perm[:offset], perm[offset + size :]]))
        splits.append((train, test))
        offset += size
    return splits


def standardize(train_features, apply_to):
    """Per-dimension z-score with train statistics; returns (transformed, mean, sd).

    Zero-variance dimensions pass through unchanged. The same train-fold
    statistics must be applied to held-out rows, which is exactly what
    passing the held-out matrix as ``apply_to`` does.
    """
    train = np.asarray(train_features, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] < 1:
        raise EmptyInput(f"train features must be n x d with n >= 1, got {train.shape}")
    mean = train.mean(axis=0)
    sd = train.std(axis=0)
    shift = np.where(sd == 0.0, 0.0, mean)
    scale = np.where(sd == 0.0, 1.0, sd)
    out = (np.asarray(apply_to, dtype=np.float64) - shift) / scale
    return out, mean, sd
