import numpy as np
import pytest

from dstpll.datagen import PartialDataset
from dstpll.evidence import BPA, LabelSet, bpa_from_focal


def labelset(width, *labels):
    return LabelSet.from_labels(width, labels)


def random_bpa(rng: np.random.Generator, width: int, max_focal: int = 5) -> BPA:
    """A valid random mass function over a width-sized label space."""
    n_masks = (1 << width) - 1
    count = int(rng.integers(1, min(max_focal, n_masks) + 1))
    masks = rng.choice(np.arange(1, n_masks + 1), size=count, replace=False)
    weights = rng.random(count) + 1e-3
    weights /= weights.sum()
    return bpa_from_focal(
        width, [(LabelSet(width, int(m)), float(w)) for m, w in zip(masks, weights)]
    )


def clustered_dataset(
    rng: np.random.Generator, n: int, num_classes: int, jitter: float = 0.3
) -> PartialDataset:
    """Clean, well-separated clusters with singleton candidate sets."""
    truth = [int(y) for y in rng.integers(1, num_classes + 1, size=n)]
    centers = np.eye(num_classes)
    feats = centers[np.asarray(truth) - 1] + rng.normal(0, jitter, (n, num_classes))
    cands = [LabelSet.singleton(num_classes, y) for y in truth]
    return PartialDataset(feats, cands, truth, num_classes)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def worked_example_bpa():
    # three focal sets over three labels; the canonical hand-checked case
    return bpa_from_focal(
        3,
        [
            (labelset(3, 1), 0.4),
            (labelset(3, 1, 2), 0.3),
            (labelset(3, 1, 3), 0.3),
        ],
    )
