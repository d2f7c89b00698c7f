"""Exception hierarchy shared by all dstpll modules.

Every error raised on a violated contract derives from DstPllError so
callers (CLI, service) can map the whole family to one failure path.
"""


class DstPllError(Exception):
    """Base class for all dstpll contract violations."""


# --- label sets and mass functions -----------------------------------------

class UniverseMismatch(DstPllError):
    """Two label sets or mass functions disagree on the label-space width."""


class EmptyFocalSet(DstPllError):
    """A mass function was given mass on the empty set."""


class MassNotNormalized(DstPllError):
    """Focal masses do not sum to one within tolerance."""


class DuplicateFocalSet(DstPllError):
    """The same focal set appears twice in a mass-function definition."""


class NonPositiveMass(DstPllError):
    """A focal set carries zero or negative mass."""


class EmptySourceList(DstPllError):
    """A combination was requested with no evidence sources."""


class CombinatorialBlowup(DstPllError):
    """The exhaustive combination oracle would enumerate too many tuples."""


# --- nearest-neighbor search ------------------------------------------------

class EmptyInput(DstPllError):
    """No data rows were supplied."""


class NonFiniteFeature(DstPllError):
    """A feature value is NaN or infinite."""


class KTooLarge(DstPllError):
    """Requested neighbor count exceeds what the data can provide."""


class DimensionMismatch(DstPllError):
    """Query vector dimension differs from the indexed data."""


# --- datasets and candidate labels ------------------------------------------

class EmptyCandidateSet(DstPllError):
    """An instance has no candidate labels."""


class FullCandidateSet(DstPllError):
    """A training instance's candidate set covers every class (uninformative)."""


class ParseError(DstPllError):
    """A dataset file could not be parsed; message carries row/column."""


class TruthNotInCandidates(DstPllError):
    """A ground-truth label is missing from its own candidate set."""


class RTooLarge(DstPllError):
    """More false-positive labels requested than distinct non-true labels allow."""


class TooManyFolds(DstPllError):
    """More cross-validation folds than instances."""


class TruthMissing(DstPllError):
    """An operation needs ground-truth labels but the dataset has none."""


# --- metrics ------------------------------------------------------------------

class LengthMismatch(DstPllError):
    """Paired sequences (truth vs. predictions) differ in length."""


class BetaOutOfRange(DstPllError):
    """Trade-off weight outside [0, 1]."""


# --- closed-form engines --------------------------------------------------------

class BudgetExceeded(DstPllError):
    """The nested-sum evaluation would exceed the configured work budget."""
