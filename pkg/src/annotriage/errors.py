"""Exception types raised across the toolkit.

Every failure mode that callers may want to branch on gets its own class;
all inherit from :class:`AnnotriageError` so a bare ``except AnnotriageError``
catches any toolkit-level problem without swallowing genuine bugs.
"""


class AnnotriageError(Exception):
    """Base class for all toolkit errors."""


# --- probability vectors / core ---------------------------------------------

class WrongArityError(AnnotriageError):
    """Vector length does not match the declared number of classes."""


class OutOfRangeError(AnnotriageError):
    """A probability entry lies outside [0, 1]."""


class NotNormalizedError(AnnotriageError):
    """Probability entries do not sum to 1 within tolerance."""


# --- triage / cleaning -------------------------------------------------------

class EmptyMatrixError(AnnotriageError):
    """Sample matrix contains no instances."""


class BudgetTooLargeError(AnnotriageError):
    """Removal budget exceeds the number of records (or fraction >= 1)."""


class FoldTooSmallError(AnnotriageError):
    """A cross-fit fold would receive fewer than one instance of some class."""


class PredictorFailureError(AnnotriageError):
    """The stochastic predictor failed inside cross-fit cleaning."""

    def __init__(self, fold: int, cause: Exception):
        super().__init__(f"predictor failed on fold {fold}: {cause}")
        self.fold = fold
        self.cause = cause


# --- ensemble ----------------------------------------------------------------

class ArityMismatchError(AnnotriageError):
    """Number of supplied member predictions differs from the frame's r."""


class NotPositiveDefiniteError(AnnotriageError):
    """Covariance factorization failed; matrix is not positive definite."""


class ClassTooSmallError(AnnotriageError):
    """A class has too few training instances for covariance estimation."""


class ChainDivergedError(AnnotriageError):
    """Gibbs chain produced a non-finite log joint."""


class DimensionMismatchError(AnnotriageError):
    """Latent vector dimension disagrees with the fitted parameters."""


class EmptyValidationError(AnnotriageError):
    """Regularization selection requires a non-empty validation frame."""


# --- metrics -----------------------------------------------------------------

class LengthMismatchError(AnnotriageError):
    """Paired sequences have different lengths."""


# --- baselines ---------------------------------------------------------------

class EmptyVocabularyError(AnnotriageError):
    """Training corpus produced no tokens."""


class SingleClassTrainingError(AnnotriageError):
    """Training data contains fewer than two classes."""


# --- synthetic generator -----------------------------------------------------

class InvalidSpecError(AnnotriageError):
    """Generator specification violates its invariants."""


# --- persistence / store -----------------------------------------------------

class DuplicateIdError(AnnotriageError):
    """Two records share an instance id."""


class MalformedRecordError(AnnotriageError):
    """A file line could not be parsed; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class InconsistentTError(AnnotriageError):
    """An instance has a number of sample rows different from the declared T."""


class UnknownInstanceError(AnnotriageError):
    """Referenced instance id is not present in the dataset."""


class InvalidLabelError(AnnotriageError):
    """Label index is outside the label space."""


class DuplicateEventError(AnnotriageError):
    """An annotation event with the same (instance, round, annotator) exists."""


# --- service -----------------------------------------------------------------

class TriageNotComputedError(AnnotriageError):
    """Queue requested before any triage run."""


class MissingSamplesError(AnnotriageError):
    """Recompute requested but no sample matrices are present."""
